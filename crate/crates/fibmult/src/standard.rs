//! Standard (fat symmetric) multicategories over finite sets: instances
//! generated from a theory of single arrows, classical symmetric
//! presentations, the extensivity check, family decomposition, and the
//! example generators.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

use crate::base::{BArr, BObj, BSquare, BaseProvider, FinSetBase};
use crate::core::{materialize, special_lift, FiberedMulticategory, Multicat};
use crate::fincat::{CatBuilder, FinCategory};
use crate::finset::{self, FinMap, FinSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StandardError {
    #[error("presentation law violation: {0}")]
    LawViolation(String),
    #[error("the arity bound {bound} is too small: {detail}")]
    BoundTooSmall { bound: usize, detail: String },
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error("the instance is not extensive: {0}")]
    NotExtensive(String),
}

/// All vectors of length `n` with entries drawn from `choices`.
fn assignments<T: Clone>(n: usize, choices: &[T]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &acc {
            for c in choices {
                let mut p = prefix.clone();
                p.push(c.clone());
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// The cartesian product of a list of lists, in lexicographic order.
fn product_lists<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::new();
        for prefix in &acc {
            for item in list {
                let mut p = prefix.clone();
                p.push(item.clone());
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// A theory of single arrows: the data from which a standard multicategory
/// of families is generated. A single arrow has a positional domain (a list
/// of sorts, ordered like the sorted index set it will be attached to) and a
/// single codomain sort.
pub trait Theory {
    type Single: Clone + Eq + Ord + Hash + Debug;

    fn sorts(&self) -> Vec<String>;

    /// All single arrows with the given positional domain and codomain.
    fn singles(&self, dom_sorts: &[String], cod: &str) -> Vec<Self::Single>;

    /// The unary identity single on a sort.
    fn identity(&self, sort: &str) -> Self::Single;

    /// Grafting: `outer` has arity = inners.len(); the result has arity =
    /// placement.len(), and placement[p] = (b, q) says result position p is
    /// position q of inners[b]. Every inner position occurs exactly once.
    fn substitute(
        &self,
        outer: &Self::Single,
        inners: &[Self::Single],
        placement: &[(usize, usize)],
    ) -> Self::Single;

    /// Bijective repositioning of the domain: pos_map[old] = new.
    fn reposition(&self, t: &Self::Single, dom_sorts: &[String], pos_map: &[usize]) -> Self::Single {
        let inners: Vec<Self::Single> = dom_sorts.iter().map(|s| self.identity(s)).collect();
        let mut placement = vec![(0usize, 0usize); pos_map.len()];
        for (old, &new) in pos_map.iter().enumerate() {
            placement[new] = (old, 0);
        }
        self.substitute(t, &inners, &placement)
    }

    /// Covariant reindexing along the position map g (old position p feeds
    /// result position g[p]); `None` if the theory has no such structure.
    fn coreindex_single(
        &self,
        t: &Self::Single,
        t_cod: &str,
        g: &[usize],
        result_sorts: &[String],
    ) -> Option<Self::Single>;

    fn single_label(&self, t: &Self::Single) -> String {
        format!("{t:?}")
    }
}

/// The terminal theory: one sort, one single arrow of every arity.
#[derive(Debug, Clone)]
pub struct TerminalTheory;

impl Theory for TerminalTheory {
    type Single = ();

    fn sorts(&self) -> Vec<String> {
        vec!["*".into()]
    }
    fn singles(&self, _dom_sorts: &[String], _cod: &str) -> Vec<()> {
        vec![()]
    }
    fn identity(&self, _sort: &str) -> () {}
    fn substitute(&self, _outer: &(), _inners: &[()], _placement: &[(usize, usize)]) -> () {}
    fn coreindex_single(&self, _t: &(), _c: &str, _g: &[usize], _r: &[String]) -> Option<()> {
        Some(())
    }
    fn single_label(&self, _t: &()) -> String {
        "!".into()
    }
}

/// A commutative-monoid enrichment of a finite category: a sum on each
/// hom-set and a zero arrow for each object pair.
#[derive(Debug, Clone)]
pub struct CMonEnrichment {
    /// (f, g) ↦ f + g for parallel arrows.
    pub add: HashMap<(u32, u32), u32>,
    /// (x, y) ↦ the zero arrow x → y.
    pub zero: HashMap<(usize, usize), u32>,
}

/// Checks the commutative-monoid enrichment laws, including bilinearity of
/// composition (needed for the Frobenius/Beck–Chevalley equations).
pub fn validate_enrichment(cat: &FinCategory, e: &CMonEnrichment) -> Vec<String> {
    let mut out = Vec::new();
    let n = cat.n_arrows();
    let add = |f: usize, g: usize| -> Option<usize> {
        e.add.get(&(f as u32, g as u32)).map(|&h| h as usize)
    };
    for x in 0..cat.n_objects() {
        for y in 0..cat.n_objects() {
            let z = match e.zero.get(&(x, y)) {
                Some(&z) => z as usize,
                None => {
                    out.push(format!("no zero arrow {x} → {y}"));
                    continue;
                }
            };
            if cat.dom(z) != x || cat.cod(z) != y {
                out.push(format!("zero arrow {x} → {y} ill-typed"));
            }
            for &f in cat.hom(x, y) {
                let f = f as usize;
                if add(f, z) != Some(f) || add(z, f) != Some(f) {
                    out.push(format!("zero not neutral on `{}`", cat.arrows[f].id));
                }
            }
        }
    }
    for f in 0..n {
        for g in 0..n {
            if cat.dom(f) != cat.dom(g) || cat.cod(f) != cat.cod(g) {
                continue;
            }
            match add(f, g) {
                None => out.push(format!(
                    "sum missing on `{}` + `{}`",
                    cat.arrows[f].id, cat.arrows[g].id
                )),
                Some(s) => {
                    if add(g, f) != Some(s) {
                        out.push(format!(
                            "sum not commutative on `{}` + `{}`",
                            cat.arrows[f].id, cat.arrows[g].id
                        ));
                    }
                    for h in 0..n {
                        if cat.dom(h) != cat.dom(f) || cat.cod(h) != cat.cod(f) {
                            continue;
                        }
                        if add(s, h) != add(f, g).and_then(|_| add(g, h)).and_then(|gh| add(f, gh))
                        {
                            out.push(format!(
                                "sum not associative at `{}`,`{}`,`{}`",
                                cat.arrows[f].id, cat.arrows[g].id, cat.arrows[h].id
                            ));
                        }
                    }
                    // Bilinearity of composition.
                    for h in 0..n {
                        if cat.dom(h) == cat.cod(f) {
                            let lhs = cat.compose(h, s);
                            let rhs = match (cat.compose(h, f), cat.compose(h, g)) {
                                (Some(a), Some(b)) => add(a, b),
                                _ => None,
                            };
                            if lhs != rhs {
                                out.push(format!(
                                    "composition not linear over `{}`∘(`{}`+`{}`)",
                                    cat.arrows[h].id, cat.arrows[f].id, cat.arrows[g].id
                                ));
                            }
                        }
                        if cat.cod(h) == cat.dom(f) {
                            let lhs = cat.compose(s, h);
                            let rhs = match (cat.compose(f, h), cat.compose(g, h)) {
                                (Some(a), Some(b)) => add(a, b),
                                _ => None,
                            };
                            if lhs != rhs {
                                out.push(format!(
                                    "composition not linear over (`{}`+`{}`)∘`{}`",
                                    cat.arrows[f].id, cat.arrows[g].id, cat.arrows[h].id
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    // Zero is absorbing for composition.
    for h in 0..n {
        let (x, y) = (cat.dom(h), cat.cod(h));
        for z in 0..cat.n_objects() {
            if let Some(&zero_yz) = e.zero.get(&(y, z)) {
                let expected = e.zero.get(&(x, z)).map(|&v| v as usize);
                if cat.compose(zero_yz as usize, h) != expected {
                    out.push(format!("zero not absorbing before `{}`", cat.arrows[h].id));
                }
            }
            if let Some(&zero_zx) = e.zero.get(&(z, x)) {
                let expected = e.zero.get(&(z, y)).map(|&v| v as usize);
                if cat.compose(h, zero_zx as usize) != expected {
                    out.push(format!("zero not absorbing after `{}`", cat.arrows[h].id));
                }
            }
        }
    }
    out
}

/// The sequential theory of discrete cocones in a finite category: a single
/// arrow is one category arrow per domain position, all into the codomain
/// sort. An optional commutative-monoid enrichment gives the covariant
/// reindexing (sums over fibers, zero on empty fibers).
#[derive(Debug, Clone)]
pub struct SeqTheory {
    pub cat: FinCategory,
    pub enrich: Option<CMonEnrichment>,
}

impl SeqTheory {
    fn obj(&self, sort: &str) -> usize {
        self.cat.object_index(sort).expect("sort names an object")
    }
}

impl Theory for SeqTheory {
    type Single = Vec<u32>;

    fn sorts(&self) -> Vec<String> {
        self.cat.objects.clone()
    }

    fn singles(&self, dom_sorts: &[String], cod: &str) -> Vec<Vec<u32>> {
        let y = self.obj(cod);
        let homs: Vec<Vec<u32>> = dom_sorts
            .iter()
            .map(|s| self.cat.hom(self.obj(s), y).to_vec())
            .collect();
        product_lists(&homs)
    }

    fn identity(&self, sort: &str) -> Vec<u32> {
        vec![self.cat.identity_of(self.obj(sort)) as u32]
    }

    fn substitute(&self, outer: &Vec<u32>, inners: &[Vec<u32>], placement: &[(usize, usize)]) -> Vec<u32> {
        placement
            .iter()
            .map(|&(b, q)| {
                self.cat
                    .compose(outer[b] as usize, inners[b][q] as usize)
                    .expect("composable cocone legs") as u32
            })
            .collect()
    }

    fn coreindex_single(
        &self,
        t: &Vec<u32>,
        t_cod: &str,
        g: &[usize],
        result_sorts: &[String],
    ) -> Option<Vec<u32>> {
        let e = self.enrich.as_ref()?;
        let y = self.obj(t_cod);
        let mut out = Vec::with_capacity(result_sorts.len());
        for (q, sort) in result_sorts.iter().enumerate() {
            let fiber: Vec<usize> = (0..g.len()).filter(|&p| g[p] == q).collect();
            let mut acc = *e.zero.get(&(self.obj(sort), y))?;
            for p in fiber {
                acc = *e.add.get(&(acc, t[p]))?;
            }
            out.push(acc);
        }
        Some(out)
    }

    fn single_label(&self, t: &Vec<u32>) -> String {
        let parts: Vec<&str> = t.iter().map(|&f| self.cat.arrows[f as usize].id.as_str()).collect();
        format!("({})", parts.join(","))
    }
}

/// A single arrow of the function theory: a tabulated map from a product of
/// finite sets to a finite set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FnSingle {
    pub dims: Vec<usize>,
    pub cod_size: usize,
    pub table: Vec<usize>,
}

impl FnSingle {
    fn rank(&self, args: &[usize]) -> usize {
        let mut idx = 0;
        for (p, &a) in args.iter().enumerate() {
            idx = idx * self.dims[p] + a;
        }
        idx
    }

    pub fn eval(&self, args: &[usize]) -> usize {
        self.table[self.rank(args)]
    }
}

/// All argument tuples of the given dimensions, in table order.
fn all_args(dims: &[usize]) -> Vec<Vec<usize>> {
    let lists: Vec<Vec<usize>> = dims.iter().map(|&d| (0..d).collect()).collect();
    product_lists(&lists)
}

/// The theory of a finite-product category of finite sets: a single arrow is
/// a many-variable function.
#[derive(Debug, Clone)]
pub struct FnTheory {
    /// sort name ↦ cardinality.
    pub sets: Vec<(String, usize)>,
}

impl FnTheory {
    fn size(&self, sort: &str) -> usize {
        self.sets
            .iter()
            .find(|(s, _)| s == sort)
            .map(|&(_, n)| n)
            .expect("sort declared")
    }
}

impl Theory for FnTheory {
    type Single = FnSingle;

    fn sorts(&self) -> Vec<String> {
        self.sets.iter().map(|(s, _)| s.clone()).collect()
    }

    fn singles(&self, dom_sorts: &[String], cod: &str) -> Vec<FnSingle> {
        let dims: Vec<usize> = dom_sorts.iter().map(|s| self.size(s)).collect();
        let cod_size = self.size(cod);
        let cells: usize = dims.iter().product();
        assignments(cells, &(0..cod_size).collect::<Vec<_>>())
            .into_iter()
            .map(|table| FnSingle { dims: dims.clone(), cod_size, table })
            .collect()
    }

    fn identity(&self, sort: &str) -> FnSingle {
        let n = self.size(sort);
        FnSingle { dims: vec![n], cod_size: n, table: (0..n).collect() }
    }

    fn substitute(&self, outer: &FnSingle, inners: &[FnSingle], placement: &[(usize, usize)]) -> FnSingle {
        let dims: Vec<usize> = placement.iter().map(|&(b, q)| inners[b].dims[q]).collect();
        let mut table = Vec::new();
        for args in all_args(&dims) {
            let mut mids = Vec::with_capacity(inners.len());
            for (b, inner) in inners.iter().enumerate() {
                let mut inner_args = vec![0usize; inner.dims.len()];
                for (p, &(bb, q)) in placement.iter().enumerate() {
                    if bb == b {
                        inner_args[q] = args[p];
                    }
                }
                mids.push(inner.eval(&inner_args));
            }
            table.push(outer.eval(&mids));
        }
        FnSingle { dims, cod_size: outer.cod_size, table }
    }

    fn coreindex_single(
        &self,
        t: &FnSingle,
        _t_cod: &str,
        g: &[usize],
        result_sorts: &[String],
    ) -> Option<FnSingle> {
        let dims: Vec<usize> = result_sorts.iter().map(|s| self.size(s)).collect();
        let mut table = Vec::new();
        for args in all_args(&dims) {
            let t_args: Vec<usize> = (0..g.len()).map(|p| args[g[p]]).collect();
            table.push(t.eval(&t_args));
        }
        Some(FnSingle { dims, cod_size: t.cod_size, table })
    }

    fn single_label(&self, t: &FnSingle) -> String {
        let digits: Vec<String> = t.table.iter().map(|v| v.to_string()).collect();
        format!("fn{}", digits.join(""))
    }
}

/// A single arrow of the affine theory over Z/2: x ↦ Σ_{p ∈ support} x_p + c.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffSingle {
    pub arity: usize,
    pub support: BTreeSet<usize>,
    pub constant: bool,
}

/// The theory of affine maps over Z/2 on a single bit sort.
#[derive(Debug, Clone)]
pub struct AffTheory;

impl Theory for AffTheory {
    type Single = AffSingle;

    fn sorts(&self) -> Vec<String> {
        vec!["b".into()]
    }

    fn singles(&self, dom_sorts: &[String], _cod: &str) -> Vec<AffSingle> {
        let n = dom_sorts.len();
        let mut out = Vec::new();
        for mask in 0..(1u32 << n) {
            let support: BTreeSet<usize> = (0..n).filter(|p| mask & (1 << p) != 0).collect();
            for &constant in &[false, true] {
                out.push(AffSingle { arity: n, support: support.clone(), constant });
            }
        }
        out
    }

    fn identity(&self, _sort: &str) -> AffSingle {
        AffSingle { arity: 1, support: [0].into_iter().collect(), constant: false }
    }

    fn substitute(&self, outer: &AffSingle, inners: &[AffSingle], placement: &[(usize, usize)]) -> AffSingle {
        let mut support = BTreeSet::new();
        for (p, &(b, q)) in placement.iter().enumerate() {
            if outer.support.contains(&b) && inners[b].support.contains(&q) {
                support.insert(p);
            }
        }
        let mut constant = outer.constant;
        for &b in &outer.support {
            constant ^= inners[b].constant;
        }
        AffSingle { arity: placement.len(), support, constant }
    }

    fn coreindex_single(
        &self,
        _t: &AffSingle,
        _c: &str,
        _g: &[usize],
        _r: &[String],
    ) -> Option<AffSingle> {
        None
    }

    fn single_label(&self, t: &AffSingle) -> String {
        let mut parts: Vec<String> = t.support.iter().map(|p| format!("x{p}")).collect();
        if t.constant || parts.is_empty() {
            parts.push(if t.constant { "1".into() } else { "0".into() });
        }
        parts.join("+")
    }
}

/// An object of a family instance: a sorted family over a finite index set
/// (sorts parallel to the sorted elements of the index set).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Family {
    pub index: FinSet,
    pub sorts: Vec<String>,
}

/// A D-arrow of a family instance: a reindexing map f with dom = f*cod.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DFam {
    pub dom: Family,
    pub cod: Family,
    pub map: FinMap,
}

/// An M-arrow of a family instance: a base map together with one single
/// arrow per codomain position, whose domain is the corresponding fiber.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MFam<S> {
    pub dom: Family,
    pub cod: Family,
    pub map: FinMap,
    pub singles: Vec<S>,
}

/// The standard multicategory of families generated by a theory, over a
/// finite-set base universe.
#[derive(Debug, Clone)]
pub struct FamilyInstance<T: Theory> {
    pub theory: T,
    pub base: BaseProvider,
}

impl<T: Theory> FamilyInstance<T> {
    pub fn new(theory: T, universe: Vec<FinSet>, size_bound: usize) -> Self {
        FamilyInstance {
            theory,
            base: BaseProvider::FinSets(FinSetBase::new(universe, size_bound)),
        }
    }

    fn universe(&self) -> &[FinSet] {
        match &self.base {
            BaseProvider::FinSets(fb) => fb.universe(),
            BaseProvider::Explicit(_) => unreachable!("family instances use the finset base"),
        }
    }

    fn fiber_sorts(&self, x: &Family, positions: &[usize]) -> Vec<String> {
        positions.iter().map(|&i| x.sorts[i].clone()).collect()
    }
}

impl<T: Theory> Multicat for FamilyInstance<T> {
    type Ob = Family;
    type DArr = DFam;
    type MArr = MFam<T::Single>;

    fn base(&self) -> &BaseProvider {
        &self.base
    }

    fn objects(&self) -> Vec<Family> {
        let sorts = self.theory.sorts();
        let mut out = Vec::new();
        for s in self.universe() {
            for assignment in assignments(s.len(), &sorts) {
                out.push(Family { index: s.clone(), sorts: assignment });
            }
        }
        out
    }

    fn obj_proj(&self, x: &Family) -> BObj {
        BObj::Set(x.index.clone())
    }

    fn d_dom(&self, f: &DFam) -> Family {
        f.dom.clone()
    }
    fn d_cod(&self, f: &DFam) -> Family {
        f.cod.clone()
    }
    fn d_proj(&self, f: &DFam) -> BArr {
        BArr::Map(f.map.clone())
    }
    fn d_id(&self, x: &Family) -> DFam {
        DFam { dom: x.clone(), cod: x.clone(), map: FinMap::identity(&x.index) }
    }
    fn d_compose(&self, g: &DFam, f: &DFam) -> Option<DFam> {
        if f.cod != g.dom {
            return None;
        }
        Some(DFam { dom: f.dom.clone(), cod: g.cod.clone(), map: f.map.then(&g.map).ok()? })
    }
    fn d_hom_over(&self, x: &Family, y: &Family, f: &BArr) -> Vec<DFam> {
        let m = f.map();
        if m.dom != x.index || m.cod != y.index {
            return Vec::new();
        }
        let compatible = (0..x.index.len()).all(|i| x.sorts[i] == y.sorts[m.apply_idx(i)]);
        if compatible {
            vec![DFam { dom: x.clone(), cod: y.clone(), map: m.clone() }]
        } else {
            Vec::new()
        }
    }

    fn objects_over(&self, i: &BObj) -> Vec<Family> {
        let s = i.set();
        if !self.universe().contains(s) {
            return Vec::new();
        }
        assignments(s.len(), &self.theory.sorts())
            .into_iter()
            .map(|sorts| Family { index: s.clone(), sorts })
            .collect()
    }

    fn d_lifts_with_cod(&self, f: &BArr, y: &Family) -> Vec<DFam> {
        let m = f.map();
        if m.cod != y.index || !self.universe().contains(&m.dom) {
            return Vec::new();
        }
        let sorts = (0..m.dom.len()).map(|i| y.sorts[m.apply_idx(i)].clone()).collect();
        let dom = Family { index: m.dom.clone(), sorts };
        vec![DFam { dom, cod: y.clone(), map: m.clone() }]
    }

    fn special_left(
        &self,
        a: &MFam<T::Single>,
        sq: &BSquare,
        lift_top: &DFam,
        lift_bottom: &DFam,
    ) -> Option<MFam<T::Single>> {
        let left_map = sq.left.map();
        let u_fam = &lift_top.dom;
        let v_fam = &lift_bottom.dom;
        if left_map.dom != u_fam.index || left_map.cod != v_fam.index {
            return None;
        }
        let mut singles = Vec::with_capacity(v_fam.index.len());
        for v in 0..v_fam.index.len() {
            let y_pos = lift_bottom.map.apply_idx(v);
            let fiber_a = a.map.fiber_idx(y_pos);
            let fiber_b = left_map.fiber_idx(v);
            if fiber_a.len() != fiber_b.len() {
                return None;
            }
            let mut pos_map = vec![usize::MAX; fiber_a.len()];
            for (new_pos, &u) in fiber_b.iter().enumerate() {
                let i = lift_top.map.apply_idx(u);
                match fiber_a.iter().position(|&ii| ii == i) {
                    Some(old_pos) if pos_map[old_pos] == usize::MAX => pos_map[old_pos] = new_pos,
                    _ => return None,
                }
            }
            let dom_sorts = self.fiber_sorts(&a.dom, &fiber_a);
            singles.push(self.theory.reposition(&a.singles[y_pos], &dom_sorts, &pos_map));
        }
        Some(MFam {
            dom: u_fam.clone(),
            cod: v_fam.clone(),
            map: left_map.clone(),
            singles,
        })
    }

    fn m_dom(&self, a: &MFam<T::Single>) -> Family {
        a.dom.clone()
    }
    fn m_cod(&self, a: &MFam<T::Single>) -> Family {
        a.cod.clone()
    }
    fn m_proj(&self, a: &MFam<T::Single>) -> BArr {
        BArr::Map(a.map.clone())
    }
    fn m_id(&self, x: &Family) -> MFam<T::Single> {
        MFam {
            dom: x.clone(),
            cod: x.clone(),
            map: FinMap::identity(&x.index),
            singles: x.sorts.iter().map(|s| self.theory.identity(s)).collect(),
        }
    }

    fn m_compose(&self, g: &MFam<T::Single>, f: &MFam<T::Single>) -> Option<MFam<T::Single>> {
        if f.cod != g.dom {
            return None;
        }
        let map = f.map.then(&g.map).ok()?;
        let mut singles = Vec::with_capacity(g.cod.index.len());
        for k in 0..g.cod.index.len() {
            let mid_fiber = g.map.fiber_idx(k);
            let inners: Vec<T::Single> =
                mid_fiber.iter().map(|&j| f.singles[j].clone()).collect();
            let result_fiber = map.fiber_idx(k);
            let placement: Vec<(usize, usize)> = result_fiber
                .iter()
                .map(|&p| {
                    let j = f.map.apply_idx(p);
                    let b = mid_fiber.iter().position(|&jj| jj == j).expect("fiber member");
                    let q = f
                        .map
                        .fiber_idx(j)
                        .iter()
                        .position(|&pp| pp == p)
                        .expect("fiber member");
                    (b, q)
                })
                .collect();
            singles.push(self.theory.substitute(&g.singles[k], &inners, &placement));
        }
        Some(MFam { dom: f.dom.clone(), cod: g.cod.clone(), map, singles })
    }

    fn m_hom_over(&self, x: &Family, y: &Family, f: &BArr) -> Vec<MFam<T::Single>> {
        let m = f.map();
        if m.dom != x.index || m.cod != y.index {
            return Vec::new();
        }
        let per_position: Vec<Vec<T::Single>> = (0..y.index.len())
            .map(|j| {
                let fiber = m.fiber_idx(j);
                let dom_sorts = self.fiber_sorts(x, &fiber);
                self.theory.singles(&dom_sorts, &y.sorts[j])
            })
            .collect();
        product_lists(&per_position)
            .into_iter()
            .map(|singles| MFam { dom: x.clone(), cod: y.clone(), map: m.clone(), singles })
            .collect()
    }

    fn is_special(&self, top: &DFam, bottom: &DFam, right: &MFam<T::Single>, left: &MFam<T::Single>) -> bool {
        if top.cod != right.dom
            || bottom.cod != right.cod
            || top.dom != left.dom
            || bottom.dom != left.cod
        {
            return false;
        }
        let bsq = BSquare {
            top: BArr::Map(top.map.clone()),
            left: BArr::Map(left.map.clone()),
            bottom: BArr::Map(bottom.map.clone()),
            right: BArr::Map(right.map.clone()),
        };
        if !self.base.is_pullback(&bsq) {
            return false;
        }
        // Element-wise rule: each component of `left` is the component of
        // `right` repositioned along the fiber bijection induced by the top.
        let x = &right.dom;
        for v in 0..bottom.dom.index.len() {
            let y_pos = bottom.map.apply_idx(v);
            let fiber_a = right.map.fiber_idx(y_pos);
            let fiber_b = left.map.fiber_idx(v);
            if fiber_a.len() != fiber_b.len() {
                return false;
            }
            let mut pos_map = vec![usize::MAX; fiber_a.len()];
            for (new_pos, &u) in fiber_b.iter().enumerate() {
                let i = top.map.apply_idx(u);
                match fiber_a.iter().position(|&ii| ii == i) {
                    Some(old_pos) if pos_map[old_pos] == usize::MAX => pos_map[old_pos] = new_pos,
                    _ => return false,
                }
            }
            let dom_sorts = self.fiber_sorts(x, &fiber_a);
            let expected = self.theory.reposition(&right.singles[y_pos], &dom_sorts, &pos_map);
            if expected != left.singles[v] {
                return false;
            }
        }
        true
    }

    fn ob_label(&self, x: &Family) -> String {
        format!("{}[{}]", x.index.label, x.sorts.join(","))
    }
    fn d_label(&self, f: &DFam) -> String {
        format!("d{}:{}->{}", f.map, self.ob_label(&f.dom), self.ob_label(&f.cod))
    }
    fn m_label(&self, a: &MFam<T::Single>) -> String {
        let singles: Vec<String> =
            a.singles.iter().map(|s| self.theory.single_label(s)).collect();
        format!("m{}<{}>:{}->{}", a.map, singles.join(";"), self.ob_label(&a.dom), self.ob_label(&a.cod))
    }
}

/// The skeleton universe {}, {1}, …, {1..bound}.
pub fn skeletal_universe(bound: usize) -> Vec<FinSet> {
    (0..=bound).map(FinSet::skeleton).collect()
}

/// The skeleton universe extended by the chosen-pullback apexes of every
/// cospan between skeleton sets, so diagonal data and reindexed products
/// stay inside the universe.
pub fn universe_with_apexes(bound: usize) -> Vec<FinSet> {
    let seeds = skeletal_universe(bound);
    let mut out = seeds.clone();
    for j in &seeds {
        for l in &seeds {
            for bottom in finset::all_maps(l, j) {
                for k in &seeds {
                    for right in finset::all_maps(k, j) {
                        let sq = finset::chosen_pullback(&bottom, &right).expect("shared codomain");
                        if !out.contains(&sq.apex) {
                            out.push(sq.apex);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Violations reported by `check_extensivity`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtensivityViolation {
    /// Fewer arrows than families of single liftings: an amalgamation is missing.
    ExistenceViolation { context: String, found: usize, expected: usize },
    /// Two distinct arrows restrict to the same family of single liftings.
    UniquenessViolation { context: String, first: String, second: String },
    /// Restricting an arrow along a point failed (broken instance).
    LiftFailure { context: String, detail: String },
}

/// The canonical point square for position `j` of the codomain of the base
/// arrow `f`, if its apex fits the universe: a pullback square with right
/// side f and bottom side a point of cod f.
fn point_square(base: &BaseProvider, f: &FinMap, j: usize) -> Option<BSquare> {
    let universe = match base {
        BaseProvider::FinSets(fb) => fb.universe(),
        BaseProvider::Explicit(_) => return None,
    };
    let singleton = universe.iter().find(|s| s.len() == 1)?;
    let point = FinMap::from_indices(singleton.clone(), f.cod.clone(), vec![j]);
    let sq0 = finset::chosen_pullback(&point, f).ok()?;
    let apex = universe.iter().find(|s| s.len() == sq0.apex.len())?;
    let phi = finset::all_bijections(apex, &sq0.apex).into_iter().next()?;
    Some(BSquare {
        top: BArr::Map(phi.then(&sq0.top).ok()?),
        left: BArr::Map(phi.then(&sq0.left).ok()?),
        bottom: BArr::Map(point),
        right: BArr::Map(f.clone()),
    })
}

/// Checks extensivity of an extensional instance over the finset base: for
/// every (X, Y, f), restricting arrows over f along the points of cod f is a
/// bijection onto families of single liftings.
pub fn check_extensivity(fm: &FiberedMulticategory) -> Vec<ExtensivityViolation> {
    let mut out = Vec::new();
    let objects: Vec<usize> = fm.objects();
    for &x in &objects {
        for &y in &objects {
            let (px, py) = (fm.obj_proj(&x), fm.obj_proj(&y));
            let (px, py) = match (&px, &py) {
                (BObj::Set(a), BObj::Set(b)) => (a.clone(), b.clone()),
                _ => return vec![ExtensivityViolation::LiftFailure {
                    context: "non-finset base".into(),
                    detail: "extensivity is defined over the finset base".into(),
                }],
            };
            for f in finset::all_maps(&px, &py) {
                let context = format!(
                    "X=`{}`, Y=`{}`, f={}",
                    fm.ob_label(&x),
                    fm.ob_label(&y),
                    f
                );
                let squares: Vec<BSquare> = match (0..py.len())
                    .map(|j| point_square(&fm.base, &f, j))
                    .collect::<Option<Vec<_>>>()
                {
                    Some(sqs) => sqs,
                    None => {
                        out.push(ExtensivityViolation::LiftFailure {
                            context,
                            detail: "no in-universe point square".into(),
                        });
                        continue;
                    }
                };
                // The canonical d-lifts and per-point hom-set sizes.
                let mut lifts = Vec::new();
                let mut expected: usize = 1;
                let mut ok = true;
                for sq in &squares {
                    let lt = fm.d_lifts_with_cod(&sq.top, &x).into_iter().next();
                    let lb = fm.d_lifts_with_cod(&sq.bottom, &y).into_iter().next();
                    match (lt, lb) {
                        (Some(lt), Some(lb)) => {
                            let u = fm.d_dom(&lt);
                            let v = fm.d_dom(&lb);
                            expected *= fm.m_hom_over(&u, &v, &sq.left).len();
                            lifts.push((lt, lb));
                        }
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    out.push(ExtensivityViolation::LiftFailure {
                        context,
                        detail: "missing d-lift for a point square".into(),
                    });
                    continue;
                }
                let arrows = fm.m_hom_over(&x, &y, &BArr::Map(f.clone()));
                let mut profiles: HashMap<Vec<usize>, usize> = HashMap::new();
                let mut broken = false;
                for &a in &arrows {
                    let mut profile = Vec::new();
                    for (sq, (lt, lb)) in squares.iter().zip(&lifts) {
                        match special_lift(fm, &a, sq, lt, lb) {
                            Ok(b) => profile.push(b),
                            Err(e) => {
                                out.push(ExtensivityViolation::LiftFailure {
                                    context: context.clone(),
                                    detail: format!("restriction of `{}`: {e}", fm.m_label(&a)),
                                });
                                broken = true;
                                break;
                            }
                        }
                    }
                    if broken {
                        break;
                    }
                    if let Some(&other) = profiles.get(&profile) {
                        out.push(ExtensivityViolation::UniquenessViolation {
                            context: context.clone(),
                            first: fm.m_label(&other),
                            second: fm.m_label(&a),
                        });
                    } else {
                        profiles.insert(profile, a);
                    }
                }
                if !broken && arrows.len() < expected {
                    out.push(ExtensivityViolation::ExistenceViolation {
                        context,
                        found: arrows.len(),
                        expected,
                    });
                }
            }
        }
    }
    out
}

/// Splits an M-arrow into its single components: the special lifts along the
/// points of its codomain index set.
pub fn family_split(fm: &FiberedMulticategory, a: usize) -> Result<Vec<usize>, StandardError> {
    let f = match fm.m_proj(&a) {
        BArr::Map(m) => m,
        BArr::Ix(_) => {
            return Err(StandardError::NotExtensive("explicit base".into()));
        }
    };
    let x = fm.m_dom(&a);
    let y = fm.m_cod(&a);
    let mut out = Vec::new();
    for j in 0..f.cod.len() {
        let sq = point_square(&fm.base, &f, j)
            .ok_or_else(|| StandardError::NotExtensive("no in-universe point square".into()))?;
        let lt = fm
            .d_lifts_with_cod(&sq.top, &x)
            .into_iter()
            .next()
            .ok_or_else(|| StandardError::NotExtensive("missing top d-lift".into()))?;
        let lb = fm
            .d_lifts_with_cod(&sq.bottom, &y)
            .into_iter()
            .next()
            .ok_or_else(|| StandardError::NotExtensive("missing bottom d-lift".into()))?;
        let b = special_lift(fm, &a, &sq, &lt, &lb)
            .map_err(|e| StandardError::NotExtensive(e.to_string()))?;
        out.push(b);
    }
    Ok(out)
}

/// Reassembles an M-arrow from single components: the unique arrow over `f`
/// from `x` to `y` whose split equals `singles`.
pub fn family_assemble(
    fm: &FiberedMulticategory,
    x: usize,
    y: usize,
    f: &BArr,
    singles: &[usize],
) -> Result<usize, StandardError> {
    let mut found = Vec::new();
    for a in fm.m_hom_over(&x, &y, f) {
        if family_split(fm, a)? == singles {
            found.push(a);
        }
    }
    match found.len() {
        1 => Ok(found[0]),
        0 => Err(StandardError::NotExtensive("no amalgamation".into())),
        _ => Err(StandardError::NotExtensive("ambiguous amalgamation".into())),
    }
}

/// A single arrow record of a symmetric presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleArrowRec {
    pub id: String,
    pub dom: Vec<String>,
    pub cod: String,
}

/// A classical symmetric-multicategory presentation: single arrows with
/// identities, a composition table in concatenation order, and the
/// symmetric action of bijections on domains.
#[derive(Debug, Clone, Default)]
pub struct SymmetricPresentation {
    pub objects: Vec<String>,
    pub single_arrows: Vec<SingleArrowRec>,
    pub identities: HashMap<String, String>,
    /// (outer id, inner ids in order) ↦ composite id.
    pub composition: HashMap<(String, Vec<String>), String>,
    /// (id, permutation with perm[old] = new) ↦ acted id.
    pub symmetric_action: HashMap<(String, Vec<usize>), String>,
}

/// The theory of a validated symmetric presentation: singles are arrow ids,
/// substitution reads the composition table and then the symmetric action.
#[derive(Debug, Clone)]
pub struct PresentationTheory {
    pres: SymmetricPresentation,
    by_shape: HashMap<(Vec<String>, String), Vec<u32>>,
}

impl PresentationTheory {
    fn rec(&self, s: u32) -> &SingleArrowRec {
        &self.pres.single_arrows[s as usize]
    }
}

impl Theory for PresentationTheory {
    type Single = u32;

    fn sorts(&self) -> Vec<String> {
        self.pres.objects.clone()
    }

    fn singles(&self, dom_sorts: &[String], cod: &str) -> Vec<u32> {
        self.by_shape
            .get(&(dom_sorts.to_vec(), cod.to_string()))
            .cloned()
            .unwrap_or_default()
    }

    fn identity(&self, sort: &str) -> u32 {
        let id = self.pres.identities.get(sort).expect("identity declared");
        self.pres
            .single_arrows
            .iter()
            .position(|r| &r.id == id)
            .expect("identity arrow present") as u32
    }

    fn substitute(&self, outer: &u32, inners: &[u32], placement: &[(usize, usize)]) -> u32 {
        let inner_ids: Vec<String> = inners.iter().map(|&s| self.rec(s).id.clone()).collect();
        let composite = self
            .pres
            .composition
            .get(&(self.rec(*outer).id.clone(), inner_ids))
            .expect("composition entry present");
        let composite_ix = self
            .pres
            .single_arrows
            .iter()
            .position(|r| &r.id == composite)
            .expect("composite declared") as u32;
        // Concatenation order: block by block, in order; the permutation
        // sends concatenation positions to the requested placement.
        let mut order: Vec<(usize, usize)> = placement.to_vec();
        order.sort();
        let mut perm = vec![0usize; placement.len()];
        for (r, bq) in order.iter().enumerate() {
            let p = placement.iter().position(|x| x == bq).expect("placement entry");
            perm[r] = p;
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return composite_ix;
        }
        let acted = self
            .pres
            .symmetric_action
            .get(&(self.rec(composite_ix).id.clone(), perm))
            .expect("action entry present");
        self.pres
            .single_arrows
            .iter()
            .position(|r| &r.id == acted)
            .expect("acted arrow declared") as u32
    }

    fn coreindex_single(&self, _t: &u32, _c: &str, _g: &[usize], _r: &[String]) -> Option<u32> {
        None
    }

    fn single_label(&self, t: &u32) -> String {
        self.rec(*t).id.clone()
    }
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in all_permutations(n - 1) {
        for pos in 0..n {
            let mut p: Vec<usize> = rest.iter().map(|&v| if v >= pos { v + 1 } else { v }).collect();
            p.push(pos);
            out.push(p);
        }
    }
    out
}

/// Validates the presentation laws up to the bound and builds the standard
/// multicategory of families over the skeleton universe.
pub fn build_standard(
    pres: &SymmetricPresentation,
    bound: usize,
) -> Result<FiberedMulticategory, StandardError> {
    if bound < 1 {
        return Err(StandardError::BoundTooSmall { bound, detail: "bound must be ≥ 1".into() });
    }
    for rec in &pres.single_arrows {
        if rec.dom.len() > bound {
            return Err(StandardError::BoundTooSmall {
                bound,
                detail: format!("arrow `{}` has arity {}", rec.id, rec.dom.len()),
            });
        }
        if !pres.objects.contains(&rec.cod) || rec.dom.iter().any(|s| !pres.objects.contains(s)) {
            return Err(StandardError::LawViolation(format!(
                "arrow `{}` mentions an undeclared object",
                rec.id
            )));
        }
    }
    let mut by_shape: HashMap<(Vec<String>, String), Vec<u32>> = HashMap::new();
    for (i, rec) in pres.single_arrows.iter().enumerate() {
        by_shape
            .entry((rec.dom.clone(), rec.cod.clone()))
            .or_default()
            .push(i as u32);
    }
    let theory = PresentationTheory { pres: pres.clone(), by_shape };
    validate_presentation(&theory, bound)?;
    let inst = FamilyInstance::new(theory, skeletal_universe(bound), bound);
    Ok(materialize(&inst))
}

/// Checks identity, action-functoriality and associativity laws of a
/// presentation within the bound.
fn validate_presentation(th: &PresentationTheory, bound: usize) -> Result<(), StandardError> {
    let pres = &th.pres;
    for sort in &pres.objects {
        let id = pres
            .identities
            .get(sort)
            .ok_or_else(|| StandardError::LawViolation(format!("no identity on `{sort}`")))?;
        let rec = pres
            .single_arrows
            .iter()
            .find(|r| &r.id == id)
            .ok_or_else(|| StandardError::LawViolation(format!("identity `{id}` undeclared")))?;
        if rec.dom.len() != 1 || &rec.dom[0] != sort || &rec.cod != sort {
            return Err(StandardError::LawViolation(format!("identity `{id}` ill-shaped")));
        }
    }
    let n = pres.single_arrows.len();
    // Identity laws via the composition table.
    for t in 0..n as u32 {
        let rec = th.rec(t);
        let inners: Vec<u32> = rec.dom.iter().map(|s| th.identity(s)).collect();
        let inner_ids: Vec<String> = inners.iter().map(|&s| th.rec(s).id.clone()).collect();
        match pres.composition.get(&(rec.id.clone(), inner_ids)) {
            Some(c) if c == &rec.id => {}
            Some(c) => {
                return Err(StandardError::LawViolation(format!(
                    "`{}` ∘ identities = `{c}` ≠ `{}`",
                    rec.id, rec.id
                )))
            }
            None => {
                return Err(StandardError::LawViolation(format!(
                    "missing identity composite for `{}`",
                    rec.id
                )))
            }
        }
        let idc = th.identity(&rec.cod);
        match pres.composition.get(&(th.rec(idc).id.clone(), vec![rec.id.clone()])) {
            Some(c) if c == &rec.id => {}
            _ => {
                return Err(StandardError::LawViolation(format!(
                    "identity ∘ `{}` missing or wrong",
                    rec.id
                )))
            }
        }
        // Action functoriality.
        let arity = rec.dom.len();
        for p1 in all_permutations(arity) {
            let t1 = pres
                .symmetric_action
                .get(&(rec.id.clone(), p1.clone()))
                .ok_or_else(|| {
                    StandardError::LawViolation(format!("missing action on `{}`", rec.id))
                })?;
            if p1.iter().enumerate().all(|(i, &p)| i == p) && t1 != &rec.id {
                return Err(StandardError::LawViolation(format!(
                    "identity permutation moves `{}`",
                    rec.id
                )));
            }
            for p2 in all_permutations(arity) {
                let t12 = pres
                    .symmetric_action
                    .get(&(t1.clone(), p2.clone()))
                    .ok_or_else(|| {
                        StandardError::LawViolation(format!("missing action on `{t1}`"))
                    })?;
                let composed: Vec<usize> = (0..arity).map(|i| p2[p1[i]]).collect();
                let direct = pres
                    .symmetric_action
                    .get(&(rec.id.clone(), composed))
                    .ok_or_else(|| {
                        StandardError::LawViolation(format!("missing action on `{}`", rec.id))
                    })?;
                if t12 != direct {
                    return Err(StandardError::LawViolation(format!(
                        "action not functorial on `{}`",
                        rec.id
                    )));
                }
            }
        }
    }
    // Associativity on composable triples within the bound (concatenation
    // placements), via the substitution machinery.
    for outer in 0..n as u32 {
        let orec = th.rec(outer).clone();
        let mid_choices: Vec<Vec<u32>> = orec
            .dom
            .iter()
            .map(|s| {
                (0..n as u32)
                    .filter(|&m| &th.rec(m).cod == s)
                    .collect::<Vec<u32>>()
            })
            .collect();
        for mids in product_lists(&mid_choices) {
            let total: usize = mids.iter().map(|&m| th.rec(m).dom.len()).sum();
            if total > bound {
                continue;
            }
            let placement: Vec<(usize, usize)> = mids
                .iter()
                .enumerate()
                .flat_map(|(b, &m)| (0..th.rec(m).dom.len()).map(move |q| (b, q)))
                .collect();
            let om = th.substitute(&outer, &mids, &placement);
            // Third layer: identities (a cheap but real associativity probe:
            // γ(γ(o;m);ids) must agree with γ(o;γ(m;ids))).
            let om_rec = th.rec(om).clone();
            let ids: Vec<u32> = om_rec.dom.iter().map(|s| th.identity(s)).collect();
            let triv: Vec<(usize, usize)> = (0..ids.len()).map(|b| (b, 0)).collect();
            let lhs = th.substitute(&om, &ids, &triv);
            let mids2: Vec<u32> = mids
                .iter()
                .map(|&m| {
                    let mrec = th.rec(m).clone();
                    let mids_ids: Vec<u32> = mrec.dom.iter().map(|s| th.identity(s)).collect();
                    let p: Vec<(usize, usize)> = (0..mids_ids.len()).map(|b| (b, 0)).collect();
                    th.substitute(&m, &mids_ids, &p)
                })
                .collect();
            let rhs = th.substitute(&outer, &mids2, &placement);
            if lhs != rhs {
                return Err(StandardError::LawViolation(format!(
                    "associativity fails under `{}`",
                    orec.id
                )));
            }
        }
    }
    Ok(())
}

/// Tabulates the singles of a theory (up to the arity bound) as a symmetric
/// presentation with full composition and action tables.
pub fn presentation_from_theory<T: Theory>(theory: &T, bound: usize) -> SymmetricPresentation {
    let sorts = theory.sorts();
    let mut pres = SymmetricPresentation { objects: sorts.clone(), ..Default::default() };
    let mut index: HashMap<(Vec<String>, String, T::Single), String> = HashMap::new();
    let mut shapes: Vec<(Vec<String>, String, Vec<T::Single>)> = Vec::new();
    for n in 0..=bound {
        for dom in assignments(n, &sorts) {
            for cod in &sorts {
                let singles = theory.singles(&dom, cod);
                for s in &singles {
                    let id = format!(
                        "{}<-({}) {}",
                        cod,
                        dom.join(","),
                        theory.single_label(s)
                    );
                    index.insert((dom.clone(), cod.clone(), s.clone()), id.clone());
                    pres.single_arrows.push(SingleArrowRec { id, dom: dom.clone(), cod: cod.clone() });
                }
                shapes.push((dom.clone(), cod.clone(), singles));
            }
        }
    }
    for sort in &sorts {
        let id = theory.identity(sort);
        pres.identities.insert(
            sort.clone(),
            index[&(vec![sort.clone()], sort.clone(), id)].clone(),
        );
    }
    // Composition in concatenation order, and the symmetric action.
    for (dom, cod, singles) in &shapes {
        for s in singles {
            let outer_id = index[&(dom.clone(), cod.clone(), s.clone())].clone();
            // Inners: one shape choice per outer position.
            let inner_shapes: Vec<Vec<(Vec<String>, T::Single)>> = dom
                .iter()
                .map(|mid| {
                    shapes
                        .iter()
                        .filter(|(_, c, _)| c == mid)
                        .flat_map(|(d, _, ss)| ss.iter().map(move |t| (d.clone(), t.clone())))
                        .collect()
                })
                .collect();
            for inners in product_lists(&inner_shapes) {
                let total: usize = inners.iter().map(|(d, _)| d.len()).sum();
                if total > bound {
                    continue;
                }
                let placement: Vec<(usize, usize)> = inners
                    .iter()
                    .enumerate()
                    .flat_map(|(b, (d, _))| (0..d.len()).map(move |q| (b, q)))
                    .collect();
                let inner_singles: Vec<T::Single> =
                    inners.iter().map(|(_, t)| t.clone()).collect();
                let composite = theory.substitute(s, &inner_singles, &placement);
                let comp_dom: Vec<String> =
                    inners.iter().flat_map(|(d, _)| d.iter().cloned()).collect();
                let comp_id = index[&(comp_dom, cod.clone(), composite)].clone();
                let inner_ids: Vec<String> = inners
                    .iter()
                    .zip(dom.iter())
                    .map(|((d, t), mid)| index[&(d.clone(), mid.clone(), t.clone())].clone())
                    .collect();
                pres.composition.insert((outer_id.clone(), inner_ids), comp_id);
            }
            for perm in all_permutations(dom.len()) {
                let mut new_dom = vec![String::new(); dom.len()];
                for (old, &new) in perm.iter().enumerate() {
                    new_dom[new] = dom[old].clone();
                }
                let acted = theory.reposition(s, dom, &perm);
                let acted_id = index[&(new_dom, cod.clone(), acted)].clone();
                pres.symmetric_action.insert((outer_id.clone(), perm), acted_id);
            }
        }
    }
    pres
}

/// The ring Z/n as a one-object category (composition = multiplication)
/// with its additive commutative-monoid enrichment.
pub fn zn_ring(n: u32) -> (FinCategory, CMonEnrichment) {
    assert!(n >= 1);
    let mut b: CatBuilder<u32> = CatBuilder::new();
    let o = b.add_object("r".into());
    for k in 0..n {
        b.add_arrow(k, k.to_string(), o, o);
    }
    let cat = b.build(|_| 1 % n, move |&g, &f| (g * f) % n);
    let mut add = HashMap::new();
    for f in 0..n {
        for g in 0..n {
            add.insert((f, g), (f + g) % n);
        }
    }
    let mut zero = HashMap::new();
    zero.insert((0usize, 0usize), 0u32);
    (cat, CMonEnrichment { add, zero })
}

/// The category of matrices over Z/2 with objects the dimensions 0..=max_dim,
/// with its additive enrichment.
pub fn mat_z2(max_dim: usize) -> (FinCategory, CMonEnrichment) {
    // A matrix n×m (from dimension m to n) as a row-major bit vector.
    type Key = (usize, usize, u32);
    let mut b: CatBuilder<Key> = CatBuilder::new();
    for d in 0..=max_dim {
        b.add_object(d.to_string());
    }
    let mut keys: Vec<Key> = Vec::new();
    for m in 0..=max_dim {
        for n in 0..=max_dim {
            for bits in 0..(1u32 << (m * n)) {
                keys.push((m, n, bits));
            }
        }
    }
    for &(m, n, bits) in &keys {
        b.add_arrow((m, n, bits), format!("M{n}x{m}:{bits:b}"), m, n);
    }
    let entry = |bits: u32, m: usize, i: usize, j: usize| -> u32 { (bits >> (i * m + j)) & 1 };
    let cat = b.build(
        |d| {
            let mut bits = 0u32;
            for i in 0..d {
                bits |= 1 << (i * d + i);
            }
            (d, d, bits)
        },
        move |&(gm, gn, gbits), &(fm, _fn_, fbits)| {
            // g: gm → gn after f: fm → gm.
            let mut bits = 0u32;
            for i in 0..gn {
                for j in 0..fm {
                    let mut v = 0u32;
                    for k in 0..gm {
                        v ^= entry(gbits, gm, i, k) & entry(fbits, fm, k, j);
                    }
                    bits |= v << (i * fm + j);
                }
            }
            (fm, gn, bits)
        },
    );
    let mut add = HashMap::new();
    let mut zero = HashMap::new();
    for (i, &(m, n, bits)) in keys.iter().enumerate() {
        if bits == 0 {
            zero.insert((m, n), i as u32);
        }
        for (j, &(m2, n2, bits2)) in keys.iter().enumerate() {
            if m == m2 && n == n2 {
                let sum = bits ^ bits2;
                let k = keys.iter().position(|&(a, c, bb)| (a, c, bb) == (m, n, sum)).unwrap();
                add.insert((i as u32, j as u32), k as u32);
            }
        }
    }
    (cat, CMonEnrichment { add, zero })
}

/// The chain poset 0 → 1 → 2 as a category.
pub fn poset3() -> FinCategory {
    let mut b: CatBuilder<(usize, usize)> = CatBuilder::new();
    for i in 0..3 {
        b.add_object(format!("p{i}"));
    }
    for i in 0..3 {
        for j in i..3 {
            b.add_arrow((i, j), format!("{i}to{j}"), i, j);
        }
    }
    b.build(|x| (x, x), |g, f| (f.0, g.1))
}

/// A generated example instance: the extensional structure plus an optional
/// designated arrow (for the pseudo-identity example).
#[derive(Debug, Clone)]
pub struct GenOutput {
    pub fm: FiberedMulticategory,
    pub designated_arrow: Option<usize>,
}

/// Builds one of the named example instances.
pub fn gen_example(name: &str, modulus: Option<u32>, bound: usize) -> Result<GenOutput, StandardError> {
    if bound < 1 {
        return Err(StandardError::BadParams("bound must be ≥ 1".into()));
    }
    match name {
        "terminal" => {
            let inst = FamilyInstance::new(TerminalTheory, skeletal_universe(bound), bound);
            Ok(GenOutput { fm: materialize(&inst), designated_arrow: None })
        }
        "ring" => {
            let n = modulus.unwrap_or(2);
            if n < 1 {
                return Err(StandardError::BadParams("modulus must be ≥ 1".into()));
            }
            let (cat, enrich) = zn_ring(n);
            let inst = FamilyInstance::new(
                SeqTheory { cat, enrich: Some(enrich) },
                skeletal_universe(bound),
                bound,
            );
            Ok(GenOutput { fm: materialize(&inst), designated_arrow: None })
        }
        "sequential" => {
            let inst = FamilyInstance::new(
                SeqTheory { cat: poset3(), enrich: None },
                skeletal_universe(bound),
                bound,
            );
            Ok(GenOutput { fm: materialize(&inst), designated_arrow: None })
        }
        "pseudo_identity" => {
            let mut universe = skeletal_universe(bound);
            universe.push(FinSet::new("a1", vec!["a".into()]).expect("valid set"));
            let inst = FamilyInstance::new(TerminalTheory, universe, bound);
            let fm = materialize(&inst);
            // The designated arrow: the unique M-arrow over the bijection
            // {a} → {1} — a reindexing of an identity that is not an identity.
            let designated = (0..fm.m_cat.n_arrows()).find(|&a| {
                let dom = fm.m_dom(&a);
                let cod = fm.m_cod(&a);
                dom != cod
                    && fm.obj_proj(&dom).set().elements() == ["a"]
                    && fm.obj_proj(&cod).set().elements() == ["1"]
            });
            let designated = designated
                .ok_or_else(|| StandardError::BadParams("pseudo-identity arrow not found".into()))?;
            Ok(GenOutput { fm, designated_arrow: Some(designated) })
        }
        "finset_self_indexed" => {
            let inst = SelfIndexed::new(bound);
            Ok(GenOutput { fm: materialize(&inst), designated_arrow: None })
        }
        _ => Err(StandardError::BadParams(format!("unknown generator `{name}`"))),
    }
}

/// An object of the self-indexed finite-set example: a map q: X → I seen as
/// the I-indexed family of its fibers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SIObj {
    pub q: FinMap,
}

/// A D-arrow of the self-indexed example: a pullback square over a base map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SIDArr {
    pub dom: SIObj,
    pub cod: SIObj,
    pub f: FinMap,
    pub u: FinMap,
}

/// An M-arrow of the self-indexed example: for each codomain index j, a
/// many-variable function Π_{i ∈ f⁻¹(j)} X_i → Y_j, tabulated over the
/// assignments of fiber elements in mixed-radix order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SIMArr {
    pub dom: SIObj,
    pub cod: SIObj,
    pub f: FinMap,
    /// comps[j][assignment rank] = a global element index of cod's total set.
    pub comps: Vec<Vec<usize>>,
}

/// The self-indexed multicategory of finite sets, truncated to a size bound:
/// objects are maps q: X → I with I in the universe and every fiber of size
/// at most the bound (so pullbacks of objects stay inside the truncation),
/// d is the (non-discrete) fibration of pullback squares, and M-arrows are
/// fiber-wise many-variable functions.
#[derive(Debug, Clone)]
pub struct SelfIndexed {
    pub base: BaseProvider,
    pub fiber_bound: usize,
}

impl SelfIndexed {
    pub fn new(bound: usize) -> SelfIndexed {
        SelfIndexed {
            base: BaseProvider::FinSets(FinSetBase::skeletal(bound)),
            fiber_bound: bound,
        }
    }

    fn universe(&self) -> &[FinSet] {
        match &self.base {
            BaseProvider::FinSets(fb) => fb.universe(),
            BaseProvider::Explicit(_) => unreachable!(),
        }
    }

    /// The fiber element lists of an object, one per index position.
    fn fibers(q: &FinMap) -> Vec<Vec<usize>> {
        (0..q.cod.len()).map(|i| q.fiber_idx(i)).collect()
    }

    /// The assignment tuples for the f-fiber of j: one element choice per
    /// fiber of the object, in mixed-radix order.
    fn assignment_tuples(q: &FinMap, f: &FinMap, j: usize) -> Vec<Vec<usize>> {
        let fibers = Self::fibers(q);
        let lists: Vec<Vec<usize>> =
            f.fiber_idx(j).into_iter().map(|i| fibers[i].clone()).collect();
        product_lists(&lists)
    }

    fn eval(a: &SIMArr, j: usize, tuple: &[usize]) -> usize {
        // Mixed-radix rank of the assignment, matching the order in which
        // `assignment_tuples` enumerates (first position slowest).
        let mut rank = 0;
        for (&i, &e) in a.f.fiber_idx(j).iter().zip(tuple) {
            let fiber = a.dom.q.fiber_idx(i);
            let digit = fiber.iter().position(|&x| x == e).expect("element of its fiber");
            rank = rank * fiber.len() + digit;
        }
        a.comps[j][rank]
    }
}

impl Multicat for SelfIndexed {
    type Ob = SIObj;
    type DArr = SIDArr;
    type MArr = SIMArr;

    fn base(&self) -> &BaseProvider {
        &self.base
    }

    fn objects(&self) -> Vec<SIObj> {
        // One canonical (monotone) representative per fiber shape keeps the
        // truncation closed under pullback while avoiding isomorphic copies.
        let mut out = Vec::new();
        for i in self.universe() {
            for k in 0..=(self.fiber_bound * i.len()) {
                let x = FinSet::skeleton(k);
                for q in finset::all_maps(&x, i) {
                    let monotone = q.indices().windows(2).all(|w| w[0] <= w[1]);
                    if monotone
                        && (0..i.len()).all(|j| q.fiber_idx(j).len() <= self.fiber_bound)
                    {
                        out.push(SIObj { q });
                    }
                }
            }
        }
        out
    }

    fn obj_proj(&self, x: &SIObj) -> BObj {
        BObj::Set(x.q.cod.clone())
    }

    fn d_dom(&self, f: &SIDArr) -> SIObj {
        f.dom.clone()
    }
    fn d_cod(&self, f: &SIDArr) -> SIObj {
        f.cod.clone()
    }
    fn d_proj(&self, f: &SIDArr) -> BArr {
        BArr::Map(f.f.clone())
    }
    fn d_id(&self, x: &SIObj) -> SIDArr {
        SIDArr {
            dom: x.clone(),
            cod: x.clone(),
            f: FinMap::identity(&x.q.cod),
            u: FinMap::identity(&x.q.dom),
        }
    }
    fn d_compose(&self, g: &SIDArr, f: &SIDArr) -> Option<SIDArr> {
        if f.cod != g.dom {
            return None;
        }
        Some(SIDArr {
            dom: f.dom.clone(),
            cod: g.cod.clone(),
            f: f.f.then(&g.f).ok()?,
            u: f.u.then(&g.u).ok()?,
        })
    }
    fn d_hom_over(&self, x: &SIObj, y: &SIObj, f: &BArr) -> Vec<SIDArr> {
        let m = f.map();
        if m.dom != x.q.cod || m.cod != y.q.cod {
            return Vec::new();
        }
        let mut out = Vec::new();
        for u in finset::all_maps(&x.q.dom, &y.q.dom) {
            if finset::is_pullback(&u, &x.q, m, &y.q) {
                out.push(SIDArr { dom: x.clone(), cod: y.clone(), f: m.clone(), u });
            }
        }
        out
    }

    fn m_dom(&self, a: &SIMArr) -> SIObj {
        a.dom.clone()
    }
    fn m_cod(&self, a: &SIMArr) -> SIObj {
        a.cod.clone()
    }
    fn m_proj(&self, a: &SIMArr) -> BArr {
        BArr::Map(a.f.clone())
    }
    fn m_id(&self, x: &SIObj) -> SIMArr {
        let f = FinMap::identity(&x.q.cod);
        let comps = (0..x.q.cod.len())
            .map(|j| {
                Self::assignment_tuples(&x.q, &f, j)
                    .into_iter()
                    .map(|t| t[0])
                    .collect()
            })
            .collect();
        SIMArr { dom: x.clone(), cod: x.clone(), f, comps }
    }
    fn m_compose(&self, g: &SIMArr, f: &SIMArr) -> Option<SIMArr> {
        if f.cod != g.dom {
            return None;
        }
        let ff = f.f.then(&g.f).ok()?;
        let mut comps = Vec::new();
        for k in 0..g.cod.q.cod.len() {
            let mut comp = Vec::new();
            for tuple in Self::assignment_tuples(&f.dom.q, &ff, k) {
                // Split the tuple over the mid-level indices and evaluate f.
                let dom_positions = ff.fiber_idx(k);
                let mut mid_tuple = Vec::new();
                for &j in &g.f.fiber_idx(k) {
                    let f_tuple: Vec<usize> = dom_positions
                        .iter()
                        .zip(tuple.iter())
                        .filter(|(&i, _)| f.f.apply_idx(i) == j)
                        .map(|(_, &e)| e)
                        .collect();
                    mid_tuple.push(Self::eval(f, j, &f_tuple));
                }
                comp.push(Self::eval(g, k, &mid_tuple));
            }
            comps.push(comp);
        }
        Some(SIMArr { dom: f.dom.clone(), cod: g.cod.clone(), f: ff, comps })
    }
    fn m_hom_over(&self, x: &SIObj, y: &SIObj, f: &BArr) -> Vec<SIMArr> {
        let m = f.map();
        if m.dom != x.q.cod || m.cod != y.q.cod {
            return Vec::new();
        }
        let cod_fibers = Self::fibers(&y.q);
        let per_j: Vec<Vec<Vec<usize>>> = (0..y.q.cod.len())
            .map(|j| {
                let n_assign = Self::assignment_tuples(&x.q, m, j).len();
                product_lists(&vec![cod_fibers[j].clone(); n_assign])
            })
            .collect();
        product_lists(&per_j)
            .into_iter()
            .map(|comps| SIMArr { dom: x.clone(), cod: y.clone(), f: m.clone(), comps })
            .collect()
    }

    fn is_special(&self, top: &SIDArr, bottom: &SIDArr, right: &SIMArr, left: &SIMArr) -> bool {
        if top.cod != right.dom
            || bottom.cod != right.cod
            || top.dom != left.dom
            || bottom.dom != left.cod
        {
            return false;
        }
        let bsq = BSquare {
            top: BArr::Map(top.f.clone()),
            left: BArr::Map(left.f.clone()),
            bottom: BArr::Map(bottom.f.clone()),
            right: BArr::Map(right.f.clone()),
        };
        if !self.base.is_pullback(&bsq) {
            return false;
        }
        // Element-wise restriction: transport each assignment along the top
        // square and compare codomain elements along the bottom square.
        for l in 0..left.cod.q.cod.len() {
            let j = bottom.f.apply_idx(l);
            for tuple in Self::assignment_tuples(&left.dom.q, &left.f, l) {
                let k_positions = left.f.fiber_idx(l);
                // Transport: order the transported choices by the a-side
                // fiber order over j.
                let mut pairs: Vec<(usize, usize)> = k_positions
                    .iter()
                    .zip(tuple.iter())
                    .map(|(&k, &w)| (top.f.apply_idx(k), top.u.apply_idx(w)))
                    .collect();
                pairs.sort();
                let i_positions = right.f.fiber_idx(j);
                if pairs.iter().map(|&(i, _)| i).collect::<Vec<_>>() != i_positions {
                    return false;
                }
                let a_tuple: Vec<usize> = pairs.iter().map(|&(_, e)| e).collect();
                let y_elt = Self::eval(right, j, &a_tuple);
                let v_elt = Self::eval(left, l, &tuple);
                if bottom.u.apply_idx(v_elt) != y_elt {
                    return false;
                }
            }
        }
        true
    }

    fn ob_label(&self, x: &SIObj) -> String {
        format!("[{}]", x.q)
    }
    fn d_label(&self, f: &SIDArr) -> String {
        format!("d[{} over {}]:{}->{}", f.u, f.f, self.ob_label(&f.dom), self.ob_label(&f.cod))
    }
    fn m_label(&self, a: &SIMArr) -> String {
        let comps: Vec<String> = a
            .comps
            .iter()
            .map(|c| c.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(""))
            .collect();
        format!("m[{}|{}]:{}->{}", a.f, comps.join(";"), self.ob_label(&a.dom), self.ob_label(&a.cod))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::verify_axioms;

    #[test]
    fn terminal_families_have_one_arrow_per_base_map() {
        let inst = FamilyInstance::new(TerminalTheory, skeletal_universe(2), 2);
        let objects = inst.objects();
        assert_eq!(objects.len(), 3);
        for x in &objects {
            for y in &objects {
                for f in inst.base.arrows_between(&inst.obj_proj(x), &inst.obj_proj(y)) {
                    assert_eq!(inst.m_hom_over(x, y, &f).len(), 1);
                }
            }
        }
    }

    #[test]
    fn ring_families_count_matches_entries() {
        let (cat, enrich) = zn_ring(2);
        let inst =
            FamilyInstance::new(SeqTheory { cat, enrich: Some(enrich) }, skeletal_universe(2), 2);
        let two = Family { index: FinSet::skeleton(2), sorts: vec!["r".into(), "r".into()] };
        let one = Family { index: FinSet::skeleton(1), sorts: vec!["r".into()] };
        let f = BArr::Map(FinMap::from_indices(
            FinSet::skeleton(2),
            FinSet::skeleton(1),
            vec![0, 0],
        ));
        // Arrows over the fold map 2 → 1 are the single 2-ary arrows: 2² = 4.
        assert_eq!(inst.m_hom_over(&two, &one, &f).len(), 4);
    }

    #[test]
    fn ring_z2_bound_2_passes_axioms_and_extensivity() {
        let out = gen_example("ring", Some(2), 2).unwrap();
        assert_eq!(verify_axioms(&out.fm), Vec::new());
        assert_eq!(check_extensivity(&out.fm), Vec::new());
    }

    #[test]
    fn split_assemble_roundtrip_on_ring() {
        let out = gen_example("ring", Some(2), 2).unwrap();
        let fm = &out.fm;
        for a in 0..fm.m_cat.n_arrows() {
            let singles = family_split(fm, a).unwrap();
            let back = family_assemble(
                fm,
                fm.m_dom(&a),
                fm.m_cod(&a),
                &fm.m_proj(&a),
                &singles,
            )
            .unwrap();
            assert_eq!(back, a);
        }
    }

    #[test]
    fn pseudo_identity_is_not_an_identity_but_lies_over_a_bijection() {
        let out = gen_example("pseudo_identity", None, 1).unwrap();
        let a = out.designated_arrow.unwrap();
        assert!(!out.fm.m_cat.is_identity(a));
        assert!(out.fm.base.is_iso(&out.fm.m_proj(&a)));
        assert_ne!(out.fm.m_dom(&a), out.fm.m_cod(&a));
    }

    #[test]
    fn self_indexed_d_is_non_discrete_fibration_in_groupoids() {
        let out = gen_example("finset_self_indexed", None, 2).unwrap();
        let report =
            crate::base::classify_projection(&out.fm.d_cat, &out.fm.base, &out.fm.d);
        assert!(report.is_fibration_in_groupoids);
        assert!(!report.is_discrete_fibration);
    }

    #[test]
    fn presentation_roundtrip_matches_direct_build() {
        let (cat, enrich) = zn_ring(2);
        let theory = SeqTheory { cat, enrich: Some(enrich) };
        let pres = presentation_from_theory(&theory, 2);
        let built = build_standard(&pres, 2).unwrap();
        let direct = gen_example("ring", Some(2), 2).unwrap().fm;
        assert_eq!(built.m_cat.n_arrows(), direct.m_cat.n_arrows());
        assert_eq!(built.d_cat.n_arrows(), direct.d_cat.n_arrows());
        assert_eq!(built.special.len(), direct.special.len());
        assert_eq!(verify_axioms(&built), Vec::new());
    }

    #[test]
    fn enrichment_of_z3_validates() {
        let (cat, e) = zn_ring(3);
        assert_eq!(validate_enrichment(&cat, &e), Vec::<String>::new());
        let (mat, me) = mat_z2(2);
        assert_eq!(validate_enrichment(&mat, &me), Vec::<String>::new());
    }

    #[test]
    fn deleted_family_arrow_breaks_extensivity() {
        let out = gen_example("ring", Some(2), 2).unwrap();
        let mut fm = out.fm;
        // Delete a vertical family arrow over id on the 2-element index set;
        // its unary point components stay present, so the amalgamation of
        // those components is now missing.
        let victim = (0..fm.m_cat.n_arrows())
            .find(|&a| {
                let p = fm.m_proj(&a);
                let m = match &p {
                    BArr::Map(m) => m,
                    _ => return false,
                };
                m.is_identity() && m.dom.len() == 2 && !fm.m_cat.is_identity(a)
            })
            .unwrap();
        fm.m_cat.delete_arrow(victim);
        let shift = |i: usize| if i > victim { i - 1 } else { i };
        fm.p.on_arrows.remove(victim);
        fm.special = fm
            .special
            .iter()
            .filter(|&&(_, _, r, l)| r as usize != victim && l as usize != victim)
            .map(|&(t, b, r, l)| (t, b, shift(r as usize) as u32, shift(l as usize) as u32))
            .collect();
        let violations = check_extensivity(&fm);
        assert!(violations
            .iter()
            .any(|v| matches!(v, ExtensivityViolation::ExistenceViolation { .. })));
    }
}
