//! Cartesianness on top of a fibered multicategory: special triangles
//! (covariant transport `f_!`), their verification, coreindexing, the
//! covariant-square presentation, the three notions of product (universal,
//! algebraic, representable-by-opcartesian) with their equivalence report,
//! and fibered hom monoids between two sections.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::base::{BArr, BObj, BSquare, BaseFunctor, BaseProvider};
use crate::core::{
    materialize_keyed, special_lift, DpPair, FiberedMulticategory, Multicat,
};
use crate::fincat::{validate_category, CatBuilder};
use crate::finset::{self, FinSet};
use crate::standard::{DFam, FamilyInstance, MFam, Theory};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CartError {
    #[error("no special triangle completes the configuration")]
    NoTriangle,
    #[error("the triangle completion is ambiguous ({0} candidates)")]
    Ambiguous(usize),
    #[error("diagonal data unavailable for the base arrow: {0}")]
    MissingDiagonal(String),
    #[error("invalid covariant presentation: {0}")]
    InvalidPresentation(String),
    #[error("not a section: {0}")]
    NotASection(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// A fibered multicategory with a covariant transport: the special-triangle
/// predicate on (top f: X → Y in D, left a: X → Z, right b: Y → Z) states
/// that b is the covariant transport of a along f.
pub trait CartesianMulticat: Multicat {
    fn is_special_triangle(
        &self,
        top: &Self::DArr,
        left: &Self::MArr,
        right: &Self::MArr,
    ) -> bool;
}

impl<T: Theory> CartesianMulticat for FamilyInstance<T> {
    fn is_special_triangle(
        &self,
        top: &DFam,
        left: &MFam<T::Single>,
        right: &MFam<T::Single>,
    ) -> bool {
        if top.dom != left.dom || top.cod != right.dom || left.cod != right.cod {
            return false;
        }
        // Base commutes: p(right) ∘ d(top) = p(left).
        match top.map.then(&right.map) {
            Ok(comp) if comp == left.map => {}
            _ => return false,
        }
        for j in 0..left.cod.index.len() {
            let fiber_l = left.map.fiber_idx(j);
            let fiber_r = right.map.fiber_idx(j);
            let mut g = vec![usize::MAX; fiber_l.len()];
            for (p, &xp) in fiber_l.iter().enumerate() {
                let yi = top.map.apply_idx(xp);
                match fiber_r.iter().position(|&q| q == yi) {
                    Some(q) => g[p] = q,
                    None => return false,
                }
            }
            let result_sorts: Vec<String> =
                fiber_r.iter().map(|&i| right.dom.sorts[i].clone()).collect();
            let expected = match self.theory.coreindex_single(
                &left.singles[j],
                &left.cod.sorts[j],
                &g,
                &result_sorts,
            ) {
                Some(s) => s,
                None => {
                    // Without covariant structure only bijective fiber
                    // correspondences transport, by plain repositioning.
                    if fiber_l.len() != fiber_r.len() {
                        return false;
                    }
                    let mut seen = vec![false; fiber_r.len()];
                    for &q in &g {
                        if seen[q] {
                            return false;
                        }
                        seen[q] = true;
                    }
                    let dom_sorts: Vec<String> =
                        fiber_l.iter().map(|&i| left.dom.sorts[i].clone()).collect();
                    self.theory.reposition(&left.singles[j], &dom_sorts, &g)
                }
            };
            if expected != right.singles[j] {
                return false;
            }
        }
        true
    }
}

/// An extensional cartesian structure: a host fibered multicategory plus its
/// special triangles stored as (top, left, right) id triples.
#[derive(Debug, Clone)]
pub struct CartesianStructure {
    pub host: FiberedMulticategory,
    pub triangles: BTreeSet<(u32, u32, u32)>,
}

impl CartesianStructure {
    pub fn triangle_label(&self, t: (u32, u32, u32)) -> String {
        format!(
            "(top `{}`, left `{}`, right `{}`)",
            self.host.d_cat.arrows[t.0 as usize].id,
            self.host.m_cat.arrows[t.1 as usize].id,
            self.host.m_cat.arrows[t.2 as usize].id
        )
    }
}

impl Multicat for CartesianStructure {
    type Ob = usize;
    type DArr = usize;
    type MArr = usize;

    fn base(&self) -> &BaseProvider {
        self.host.base()
    }
    fn objects(&self) -> Vec<usize> {
        self.host.objects()
    }
    fn obj_proj(&self, x: &usize) -> BObj {
        self.host.obj_proj(x)
    }
    fn d_dom(&self, f: &usize) -> usize {
        self.host.d_dom(f)
    }
    fn d_cod(&self, f: &usize) -> usize {
        self.host.d_cod(f)
    }
    fn d_proj(&self, f: &usize) -> BArr {
        self.host.d_proj(f)
    }
    fn d_id(&self, x: &usize) -> usize {
        self.host.d_id(x)
    }
    fn d_compose(&self, g: &usize, f: &usize) -> Option<usize> {
        self.host.d_compose(g, f)
    }
    fn d_hom_over(&self, x: &usize, y: &usize, f: &BArr) -> Vec<usize> {
        self.host.d_hom_over(x, y, f)
    }
    fn m_dom(&self, a: &usize) -> usize {
        self.host.m_dom(a)
    }
    fn m_cod(&self, a: &usize) -> usize {
        self.host.m_cod(a)
    }
    fn m_proj(&self, a: &usize) -> BArr {
        self.host.m_proj(a)
    }
    fn m_id(&self, x: &usize) -> usize {
        self.host.m_id(x)
    }
    fn m_compose(&self, g: &usize, f: &usize) -> Option<usize> {
        self.host.m_compose(g, f)
    }
    fn m_hom_over(&self, x: &usize, y: &usize, f: &BArr) -> Vec<usize> {
        self.host.m_hom_over(x, y, f)
    }
    fn is_special(&self, top: &usize, bottom: &usize, right: &usize, left: &usize) -> bool {
        self.host.is_special(top, bottom, right, left)
    }
    fn ob_label(&self, x: &usize) -> String {
        self.host.ob_label(x)
    }
    fn d_label(&self, f: &usize) -> String {
        self.host.d_label(f)
    }
    fn m_label(&self, a: &usize) -> String {
        self.host.m_label(a)
    }
}

impl CartesianMulticat for CartesianStructure {
    fn is_special_triangle(&self, top: &usize, left: &usize, right: &usize) -> bool {
        self.triangles.contains(&(*top as u32, *left as u32, *right as u32))
    }
}

/// Materializes a rule-based cartesian instance into an extensional
/// structure by enumerating all special triangles.
pub fn materialize_cartesian<T: Multicat + CartesianMulticat>(fm: &T) -> CartesianStructure {
    let mk = materialize_keyed(fm);
    let host = mk.fm;
    let mut by_dc: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for ai in 0..host.m_cat.n_arrows() {
        by_dc.entry((host.m_cat.dom(ai), host.m_cat.cod(ai))).or_default().push(ai);
    }
    let mut by_dom: HashMap<usize, Vec<usize>> = HashMap::new();
    for ai in 0..host.m_cat.n_arrows() {
        by_dom.entry(host.m_cat.dom(ai)).or_default().push(ai);
    }
    let empty: Vec<usize> = Vec::new();
    let mut triangles = BTreeSet::new();
    for fi in 0..host.d_cat.n_arrows() {
        let f = &mk.d_arrs[fi];
        let (x, y) = (host.d_cat.dom(fi), host.d_cat.cod(fi));
        for &ai in by_dom.get(&x).unwrap_or(&empty) {
            let a = &mk.m_arrs[ai];
            let z = host.m_cat.cod(ai);
            for &bi in by_dc.get(&(y, z)).unwrap_or(&empty) {
                if fm.is_special_triangle(f, a, &mk.m_arrs[bi]) {
                    triangles.insert((fi as u32, ai as u32, bi as u32));
                }
            }
        }
    }
    CartesianStructure { host, triangles }
}

/// Violations reported by `verify_cartesian_structure`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CartViolation {
    /// A stored triangle whose sides do not match up or whose base does not commute.
    MalformedTriangle { triangle: String, detail: String },
    /// The identity-top triangle of an M-arrow is missing.
    MissingIdentityTriangle { arrow: String },
    /// Two pasted triangles whose composite is not special.
    NotClosedUnderComposition { t1: String, t2: String },
    /// A special triangle whose post-composition is not special.
    PostComposition { triangle: String, arrow: String },
    /// A transport configuration with no special triangle.
    ExistenceViolation { arrow: String, config: String },
    /// A transport configuration with several special triangles.
    UniquenessViolation { arrow: String, config: String, count: usize },
    /// A square/triangle pasting violating the Frobenius reciprocity.
    Frobenius { square: String, triangle: String },
    /// A reindexed triangle violating the Beck–Chevalley condition.
    BeckChevalley { triangle: String, detail: String },
}

/// Exhaustively verifies the cartesian-structure axioms: well-formedness,
/// identity triangles, closure under composition and post-composition, the
/// discrete-opfibration property of transport configurations, Frobenius
/// reciprocity against the stored special squares, and Beck–Chevalley.
pub fn verify_cartesian_structure(cs: &CartesianStructure) -> Vec<CartViolation> {
    let host = &cs.host;
    let mut out = Vec::new();
    // Well-formedness.
    for &t in &cs.triangles {
        let (f, a, b) = (t.0 as usize, t.1 as usize, t.2 as usize);
        let shape_ok = host.d_cat.dom(f) == host.m_cat.dom(a)
            && host.d_cat.cod(f) == host.m_cat.dom(b)
            && host.m_cat.cod(a) == host.m_cat.cod(b);
        if !shape_ok {
            out.push(CartViolation::MalformedTriangle {
                triangle: cs.triangle_label(t),
                detail: "sides do not match up".into(),
            });
            continue;
        }
        let commutes = host.base.compose(host.p.arr(b), host.d.arr(f)).as_ref()
            == Some(host.p.arr(a));
        if !commutes {
            out.push(CartViolation::MalformedTriangle {
                triangle: cs.triangle_label(t),
                detail: "base does not commute".into(),
            });
        }
    }
    // Identity triangles.
    for a in 0..host.m_cat.n_arrows() {
        let x = host.m_cat.dom(a);
        let key = (host.d_cat.identity_of(x) as u32, a as u32, a as u32);
        if !cs.triangles.contains(&key) {
            out.push(CartViolation::MissingIdentityTriangle {
                arrow: host.m_cat.arrows[a].id.clone(),
            });
        }
    }
    // Closure under composition: (f, a, b), (g, b, c) ⇒ (g∘f, a, c).
    let mut by_left: HashMap<u32, Vec<(u32, u32, u32)>> = HashMap::new();
    for &t in &cs.triangles {
        by_left.entry(t.1).or_default().push(t);
    }
    for &t1 in &cs.triangles {
        if let Some(seconds) = by_left.get(&t1.2) {
            for &t2 in seconds {
                let gf = match host.d_cat.compose(t2.0 as usize, t1.0 as usize) {
                    Some(h) => h,
                    None => continue,
                };
                if !cs.triangles.contains(&(gf as u32, t1.1, t2.2)) {
                    out.push(CartViolation::NotClosedUnderComposition {
                        t1: cs.triangle_label(t1),
                        t2: cs.triangle_label(t2),
                    });
                }
            }
        }
    }
    // Post-composition: (f, a, b) and c: cod(a) → W ⇒ (f, c∘a, c∘b).
    let mut m_from: HashMap<usize, Vec<usize>> = HashMap::new();
    for c in 0..host.m_cat.n_arrows() {
        m_from.entry(host.m_cat.dom(c)).or_default().push(c);
    }
    let empty: Vec<usize> = Vec::new();
    for &t in &cs.triangles {
        let z = host.m_cat.cod(t.1 as usize);
        for &c in m_from.get(&z).unwrap_or(&empty) {
            let ca = host.m_cat.compose(c, t.1 as usize).expect("composable");
            let cb = host.m_cat.compose(c, t.2 as usize).expect("composable");
            if !cs.triangles.contains(&(t.0, ca as u32, cb as u32)) {
                out.push(CartViolation::PostComposition {
                    triangle: cs.triangle_label(t),
                    arrow: host.m_cat.arrows[c].id.clone(),
                });
            }
        }
    }
    // Discrete opfibration: each (a, f out of dom a, admissible h) has
    // exactly one completion.
    let mut completions: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for &t in &cs.triangles {
        completions.entry((t.0, t.1)).or_default().push(t.2);
    }
    for a in 0..host.m_cat.n_arrows() {
        let x = host.m_cat.dom(a);
        let pa = host.p.arr(a);
        let pz = host.p.ob(host.m_cat.cod(a));
        for f in 0..host.d_cat.n_arrows() {
            if host.d_cat.dom(f) != x {
                continue;
            }
            let py = host.d.ob(host.d_cat.cod(f));
            for h in host.base.arrows_between(py, pz) {
                if host.base.compose(&h, host.d.arr(f)).as_ref() != Some(pa) {
                    continue;
                }
                let count = completions
                    .get(&(f as u32, a as u32))
                    .map(|bs| {
                        bs.iter().filter(|&&b| host.p.arr(b as usize) == &h).count()
                    })
                    .unwrap_or(0);
                let config = format!(
                    "(top `{}`, base `{}`)",
                    host.d_cat.arrows[f].id,
                    host.base.arrow_label(&h)
                );
                match count {
                    1 => {}
                    0 => out.push(CartViolation::ExistenceViolation {
                        arrow: host.m_cat.arrows[a].id.clone(),
                        config,
                    }),
                    n => out.push(CartViolation::UniquenessViolation {
                        arrow: host.m_cat.arrows[a].id.clone(),
                        config,
                        count: n,
                    }),
                }
            }
        }
    }
    // Frobenius: pasting a special square on top of a special triangle whose
    // top is the square's bottom yields a special triangle.
    let mut by_top: HashMap<u32, Vec<(u32, u32, u32)>> = HashMap::new();
    for &t in &cs.triangles {
        by_top.entry(t.0).or_default().push(t);
    }
    for &sq in &host.special {
        let (t_d, bt, r, l) = (sq.0 as usize, sq.1 as usize, sq.2 as usize, sq.3 as usize);
        if let Some(tris) = by_top.get(&(bt as u32)) {
            for &tri in tris {
                let (c, dd) = (tri.1 as usize, tri.2 as usize);
                let cl = host.m_cat.compose(c, l).expect("composable");
                let ddr = host.m_cat.compose(dd, r).expect("composable");
                if !cs.triangles.contains(&(t_d as u32, cl as u32, ddr as u32)) {
                    out.push(CartViolation::Frobenius {
                        square: host.square_label(sq),
                        triangle: cs.triangle_label(tri),
                    });
                }
            }
        }
    }
    // Beck–Chevalley: reindexing both legs of a triangle along a pair of
    // compatible special squares yields a special triangle.
    let mut sq_by_right: HashMap<u32, Vec<(u32, u32, u32, u32)>> = HashMap::new();
    let mut sq_by_right_bottom: HashMap<(u32, u32), Vec<(u32, u32, u32, u32)>> = HashMap::new();
    for &sq in &host.special {
        sq_by_right.entry(sq.2).or_default().push(sq);
        sq_by_right_bottom.entry((sq.2, sq.1)).or_default().push(sq);
    }
    let empty_sq: Vec<(u32, u32, u32, u32)> = Vec::new();
    for &tri in &cs.triangles {
        let f = tri.0 as usize;
        for &back in sq_by_right.get(&tri.1).unwrap_or(&empty_sq) {
            for &front in sq_by_right_bottom.get(&(tri.2, back.1)).unwrap_or(&empty_sq) {
                let xp = host.d_cat.dom(back.0 as usize);
                let yp = host.d_cat.dom(front.0 as usize);
                for &fp in host.d_cat.hom(xp, yp) {
                    let over = host.d_cat.compose(front.0 as usize, fp as usize);
                    if over != host.d_cat.compose(f, back.0 as usize) || over.is_none() {
                        continue;
                    }
                    let left_face = host
                        .base
                        .compose(host.p.arr(front.3 as usize), host.d.arr(fp as usize));
                    if left_face.as_ref() != Some(host.p.arr(back.3 as usize)) {
                        continue;
                    }
                    if !cs.triangles.contains(&(fp, back.3, front.3)) {
                        out.push(CartViolation::BeckChevalley {
                            triangle: cs.triangle_label(tri),
                            detail: format!(
                                "over squares {} / {}",
                                host.square_label(back),
                                host.square_label(front)
                            ),
                        });
                    }
                }
            }
        }
    }
    out
}

/// The covariant transport f_! a: the unique b over `h` making (lift_f, a, b)
/// a special triangle.
pub fn coreindex<T: CartesianMulticat>(
    fm: &T,
    a: &T::MArr,
    lift_f: &T::DArr,
    h: &BArr,
) -> Result<T::MArr, CartError> {
    if fm.d_dom(lift_f) != fm.m_dom(a) {
        return Err(CartError::ShapeMismatch("lift must start at dom(a)".into()));
    }
    if fm.base().compose(h, &fm.d_proj(lift_f)) != Some(fm.m_proj(a)) {
        return Err(CartError::ShapeMismatch("base triangle does not commute".into()));
    }
    let y = fm.d_cod(lift_f);
    let z = fm.m_cod(a);
    let mut found: Vec<T::MArr> = fm
        .m_hom_over(&y, &z, h)
        .into_iter()
        .filter(|b| fm.is_special_triangle(lift_f, a, b))
        .collect();
    match found.len() {
        0 => Err(CartError::NoTriangle),
        1 => Ok(found.pop().unwrap()),
        n => Err(CartError::Ambiguous(n)),
    }
}

/// Checks the coherence of the two transports on invertible tops: for every
/// special triangle (f, a, b) with f invertible in D, b is also the
/// contravariant reindexing of a along f⁻¹.
pub fn check_coherence(cs: &CartesianStructure) -> Vec<String> {
    let host = &cs.host;
    let mut out = Vec::new();
    for &tri in &cs.triangles {
        let f = tri.0 as usize;
        let g = match host.d_cat.inverse(f) {
            Some(g) => g as usize,
            None => continue,
        };
        let a = tri.1 as usize;
        let z = host.m_cat.cod(a);
        let pa = host.p.arr(a).clone();
        let sigma_inv = host.d.arr(g).clone();
        let sq = BSquare {
            top: sigma_inv.clone(),
            left: match host.base.compose(&pa, &sigma_inv) {
                Some(l) => l,
                None => {
                    out.push(format!("triangle {}: base legs do not compose", cs.triangle_label(tri)));
                    continue;
                }
            },
            bottom: host.base.id(host.p.ob(z)),
            right: pa,
        };
        let reindexed = special_lift(host, &a, &sq, &g, &host.d_id(&z));
        if reindexed != Ok(tri.2 as usize) {
            out.push(format!(
                "triangle {}: transport along the iso disagrees with reindexing along its inverse ({reindexed:?})",
                cs.triangle_label(tri)
            ));
        }
    }
    out
}

/// Checks the Frobenius reciprocity equation f′_!(c ∘ f*b) = (f_! c) ∘ b on
/// every admissible configuration, computing both sides by coreindexing.
pub fn check_frobenius_equation(cs: &CartesianStructure) -> Vec<String> {
    let host = &cs.host;
    let mut out = Vec::new();
    let mut m_from: HashMap<usize, Vec<usize>> = HashMap::new();
    for c in 0..host.m_cat.n_arrows() {
        m_from.entry(host.m_cat.dom(c)).or_default().push(c);
    }
    let empty: Vec<usize> = Vec::new();
    for &sq in &host.special {
        let (t_d, bt, r, l) = (sq.0 as usize, sq.1 as usize, sq.2 as usize, sq.3 as usize);
        let v = host.m_cat.cod(l);
        let y1 = host.d_cat.cod(bt);
        for &c in m_from.get(&v).unwrap_or(&empty) {
            let pc = host.p.arr(c).clone();
            let pw = host.p.ob(host.m_cat.cod(c));
            for h in host.base.arrows_between(host.d.ob(y1), pw) {
                if host.base.compose(&h, host.d.arr(bt)).as_ref() != Some(&pc) {
                    continue;
                }
                let fc = match coreindex(cs, &c, &bt, &h) {
                    Ok(fc) => fc,
                    Err(e) => {
                        out.push(format!("transport of `{}` failed: {e}", host.m_cat.arrows[c].id));
                        continue;
                    }
                };
                let cl = host.m_cat.compose(c, l).expect("composable");
                let h2 = host
                    .base
                    .compose(&h, host.p.arr(r))
                    .expect("composable base legs");
                let lhs = coreindex(cs, &cl, &t_d, &h2);
                let rhs = host.m_cat.compose(fc, r).expect("composable");
                if lhs != Ok(rhs) {
                    out.push(format!(
                        "Frobenius fails at square {} with `{}`: {:?} ≠ {}",
                        host.square_label(sq),
                        host.m_cat.arrows[c].id,
                        lhs.map(|x| host.m_cat.arrows[x].id.clone()),
                        host.m_cat.arrows[rhs].id
                    ));
                }
            }
        }
    }
    out
}

/// Checks the Beck–Chevalley equation g*(f_! a) = f′_!(g* a) on every
/// admissible configuration, computing the right side by coreindexing.
pub fn check_beck_chevalley_equation(cs: &CartesianStructure) -> Vec<String> {
    let host = &cs.host;
    let mut out = Vec::new();
    let mut sq_by_right: HashMap<u32, Vec<(u32, u32, u32, u32)>> = HashMap::new();
    let mut sq_by_right_bottom: HashMap<(u32, u32), Vec<(u32, u32, u32, u32)>> = HashMap::new();
    for &sq in &host.special {
        sq_by_right.entry(sq.2).or_default().push(sq);
        sq_by_right_bottom.entry((sq.2, sq.1)).or_default().push(sq);
    }
    let empty_sq: Vec<(u32, u32, u32, u32)> = Vec::new();
    for &tri in &cs.triangles {
        let f = tri.0 as usize;
        for &back in sq_by_right.get(&tri.1).unwrap_or(&empty_sq) {
            for &front in sq_by_right_bottom.get(&(tri.2, back.1)).unwrap_or(&empty_sq) {
                let xp = host.d_cat.dom(back.0 as usize);
                let yp = host.d_cat.dom(front.0 as usize);
                for &fp in host.d_cat.hom(xp, yp) {
                    let over = host.d_cat.compose(front.0 as usize, fp as usize);
                    if over != host.d_cat.compose(f, back.0 as usize) || over.is_none() {
                        continue;
                    }
                    let left_face = host
                        .base
                        .compose(host.p.arr(front.3 as usize), host.d.arr(fp as usize));
                    if left_face.as_ref() != Some(host.p.arr(back.3 as usize)) {
                        continue;
                    }
                    let hp = host.p.arr(front.3 as usize).clone();
                    let rhs = coreindex(cs, &(back.3 as usize), &(fp as usize), &hp);
                    if rhs != Ok(front.3 as usize) {
                        out.push(format!(
                            "Beck–Chevalley fails at {} over {} / {}: {:?}",
                            cs.triangle_label(tri),
                            host.square_label(back),
                            host.square_label(front),
                            rhs.map(|x| host.m_cat.arrows[x].id.clone()),
                        ));
                    }
                }
            }
        }
    }
    out
}

/// A covariant special square stored as (top in D, left, right, bottom in M):
/// special means the right side is the transport of bottom ∘ left along top.
pub type CoSquare = (u32, u32, u32, u32);

/// The covariant-square presentation generated by a cartesian structure.
pub fn triangles_to_cosquares(cs: &CartesianStructure) -> BTreeSet<CoSquare> {
    let host = &cs.host;
    let mut tri_by_top_left: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for &t in &cs.triangles {
        tri_by_top_left.entry((t.0, t.1)).or_default().push(t.2);
    }
    let mut m_from: HashMap<usize, Vec<usize>> = HashMap::new();
    for c in 0..host.m_cat.n_arrows() {
        m_from.entry(host.m_cat.dom(c)).or_default().push(c);
    }
    let mut d_from: HashMap<usize, Vec<usize>> = HashMap::new();
    for f in 0..host.d_cat.n_arrows() {
        d_from.entry(host.d_cat.dom(f)).or_default().push(f);
    }
    let empty: Vec<usize> = Vec::new();
    let mut out = BTreeSet::new();
    for a in 0..host.m_cat.n_arrows() {
        let x = host.m_cat.dom(a);
        let z = host.m_cat.cod(a);
        for &c in m_from.get(&z).unwrap_or(&empty) {
            let ca = host.m_cat.compose(c, a).expect("composable");
            for &f in d_from.get(&x).unwrap_or(&empty) {
                if let Some(bs) = tri_by_top_left.get(&(f as u32, ca as u32)) {
                    for &b in bs {
                        out.insert((f as u32, a as u32, b, c as u32));
                    }
                }
            }
        }
    }
    out
}

/// Recovers the special triangles from a covariant-square presentation,
/// after validating the presentation axioms (identity squares, the
/// discrete-opfibration property, horizontal pasting, the mixed
/// contravariant/covariant vertical pasting, and the Beck–Chevalley cube).
pub fn cosquares_to_triangles(
    host: &FiberedMulticategory,
    squares: &BTreeSet<CoSquare>,
) -> Result<CartesianStructure, CartError> {
    let bad = |msg: String| Err(CartError::InvalidPresentation(msg));
    // Well-formedness.
    for &s in squares {
        let (f, a, b, c) = (s.0 as usize, s.1 as usize, s.2 as usize, s.3 as usize);
        let shape_ok = host.d_cat.dom(f) == host.m_cat.dom(a)
            && host.d_cat.cod(f) == host.m_cat.dom(b)
            && host.m_cat.cod(a) == host.m_cat.dom(c)
            && host.m_cat.cod(b) == host.m_cat.cod(c);
        if !shape_ok {
            return bad(format!("square {s:?} has mismatched sides"));
        }
        let lhs = host.base.compose(host.p.arr(b), host.d.arr(f));
        let rhs = host.base.compose(host.p.arr(c), host.p.arr(a));
        if lhs != rhs || lhs.is_none() {
            return bad(format!("square {s:?} does not commute over the base"));
        }
    }
    // Identity-top squares: (id, a, c∘a, c) for every composable a, c.
    let mut m_from: HashMap<usize, Vec<usize>> = HashMap::new();
    for c in 0..host.m_cat.n_arrows() {
        m_from.entry(host.m_cat.dom(c)).or_default().push(c);
    }
    let empty: Vec<usize> = Vec::new();
    for a in 0..host.m_cat.n_arrows() {
        let idx = host.d_cat.identity_of(host.m_cat.dom(a));
        for &c in m_from.get(&host.m_cat.cod(a)).unwrap_or(&empty) {
            let ca = host.m_cat.compose(c, a).expect("composable");
            if !squares.contains(&(idx as u32, a as u32, ca as u32, c as u32)) {
                return bad(format!(
                    "missing identity square on `{}` / `{}`",
                    host.m_cat.arrows[a].id, host.m_cat.arrows[c].id
                ));
            }
        }
    }
    // Discrete opfibration on (f, a, c) configurations.
    let mut by_config: HashMap<(u32, u32, u32), Vec<u32>> = HashMap::new();
    for &s in squares {
        by_config.entry((s.0, s.1, s.3)).or_default().push(s.2);
    }
    for a in 0..host.m_cat.n_arrows() {
        let x = host.m_cat.dom(a);
        for &c in m_from.get(&host.m_cat.cod(a)).unwrap_or(&empty) {
            let pca = host
                .base
                .compose(host.p.arr(c), host.p.arr(a))
                .expect("composable");
            let pw = host.p.ob(host.m_cat.cod(c));
            for f in 0..host.d_cat.n_arrows() {
                if host.d_cat.dom(f) != x {
                    continue;
                }
                let py = host.d.ob(host.d_cat.cod(f));
                for h in host.base.arrows_between(py, pw) {
                    if host.base.compose(&h, host.d.arr(f)).as_ref() != Some(&pca) {
                        continue;
                    }
                    let count = by_config
                        .get(&(f as u32, a as u32, c as u32))
                        .map(|bs| bs.iter().filter(|&&b| host.p.arr(b as usize) == &h).count())
                        .unwrap_or(0);
                    if count != 1 {
                        return bad(format!(
                            "configuration (`{}`, `{}`, `{}`) over `{}` has {count} fillers",
                            host.d_cat.arrows[f].id,
                            host.m_cat.arrows[a].id,
                            host.m_cat.arrows[c].id,
                            host.base.arrow_label(&h)
                        ));
                    }
                }
            }
        }
    }
    // Horizontal pasting.
    let mut by_left: HashMap<u32, Vec<CoSquare>> = HashMap::new();
    for &s in squares {
        by_left.entry(s.1).or_default().push(s);
    }
    let empty_sq: Vec<CoSquare> = Vec::new();
    for &s1 in squares {
        for &s2 in by_left.get(&s1.2).unwrap_or(&empty_sq) {
            let f = match host.d_cat.compose(s2.0 as usize, s1.0 as usize) {
                Some(f) => f,
                None => continue,
            };
            let c = match host.m_cat.compose(s2.3 as usize, s1.3 as usize) {
                Some(c) => c,
                None => continue,
            };
            if !squares.contains(&(f as u32, s1.1, s2.2, c as u32)) {
                return bad(format!("not closed under horizontal pasting at {s1:?} / {s2:?}"));
            }
        }
    }
    // Mixed vertical pasting: contravariant special square above a covariant
    // square sharing its bottom D-side.
    let mut cov_by_top: HashMap<u32, Vec<CoSquare>> = HashMap::new();
    for &s in squares {
        cov_by_top.entry(s.0).or_default().push(s);
    }
    for &sq in &host.special {
        for &cov in cov_by_top.get(&sq.1).unwrap_or(&empty_sq) {
            let al = host.m_cat.compose(cov.1 as usize, sq.3 as usize).expect("composable");
            let br = host.m_cat.compose(cov.2 as usize, sq.2 as usize).expect("composable");
            if !squares.contains(&(sq.0, al as u32, br as u32, cov.3)) {
                return bad(format!(
                    "mixed vertical pasting fails at {} / {cov:?}",
                    host.square_label(sq)
                ));
            }
        }
    }
    // Beck–Chevalley cube: commuting top face in D, special back/bottom/front
    // faces, covariant special right face ⇒ covariant special left face.
    let mut sq_by_right: HashMap<u32, Vec<(u32, u32, u32, u32)>> = HashMap::new();
    let mut sq_by_rb: HashMap<(u32, u32), Vec<(u32, u32, u32, u32)>> = HashMap::new();
    let mut sq_by_rt: HashMap<(u32, u32), Vec<(u32, u32, u32, u32)>> = HashMap::new();
    for &sq in &host.special {
        sq_by_right.entry(sq.2).or_default().push(sq);
        sq_by_rb.entry((sq.2, sq.1)).or_default().push(sq);
        sq_by_rt.entry((sq.2, sq.0)).or_default().push(sq);
    }
    let empty_c: Vec<(u32, u32, u32, u32)> = Vec::new();
    for &cov in squares {
        for &back in sq_by_right.get(&cov.1).unwrap_or(&empty_c) {
            for &bottom in sq_by_rt.get(&(cov.3, back.1)).unwrap_or(&empty_c) {
                for &front in sq_by_rb.get(&(cov.2, bottom.1)).unwrap_or(&empty_c) {
                    let xp = host.d_cat.dom(back.0 as usize);
                    let yp = host.d_cat.dom(front.0 as usize);
                    for &fp in host.d_cat.hom(xp, yp) {
                        let over = host.d_cat.compose(front.0 as usize, fp as usize);
                        if over != host.d_cat.compose(cov.0 as usize, back.0 as usize)
                            || over.is_none()
                        {
                            continue;
                        }
                        let left_face = host
                            .base
                            .compose(host.p.arr(front.3 as usize), host.d.arr(fp as usize));
                        let left_base = host
                            .base
                            .compose(host.p.arr(bottom.3 as usize), host.p.arr(back.3 as usize));
                        if left_face != left_base || left_face.is_none() {
                            continue;
                        }
                        if !squares.contains(&(fp, back.3, front.3, bottom.3)) {
                            return bad(format!(
                                "Beck–Chevalley cube fails at {cov:?} over {}",
                                host.square_label(back)
                            ));
                        }
                    }
                }
            }
        }
    }
    // Extract the triangles: squares whose bottom is an identity.
    let mut triangles = BTreeSet::new();
    for &s in squares {
        if host.m_cat.is_identity(s.3 as usize) {
            triangles.insert((s.0, s.1, s.2));
        }
    }
    Ok(CartesianStructure { host: host.clone(), triangles })
}

fn side_bound(base: &BaseProvider) -> usize {
    match base {
        BaseProvider::FinSets(fb) => fb.size_bound,
        BaseProvider::Explicit(_) => usize::MAX,
    }
}

fn index_size(i: &BObj) -> usize {
    match i {
        BObj::Set(s) => s.len(),
        BObj::Ix(_) => 0,
    }
}

fn is_canonical_index(base: &BaseProvider, i: &BObj) -> bool {
    match (base, i) {
        (BaseProvider::FinSets(_), BObj::Set(s)) => *s == FinSet::skeleton(s.len()),
        (BaseProvider::Explicit(_), BObj::Ix(_)) => true,
        _ => false,
    }
}

/// One in-universe pullback square per cospan: the chosen square, relabeled
/// onto a universe set when its apex carries labels outside the universe.
fn representative_square(base: &BaseProvider, bottom: &BArr, right: &BArr) -> Option<BSquare> {
    match base {
        BaseProvider::FinSets(fb) => {
            let sq0 = finset::chosen_pullback(bottom.map(), right.map()).ok()?;
            if fb.contains(&sq0.apex) {
                return Some(BSquare {
                    top: BArr::Map(sq0.top),
                    left: BArr::Map(sq0.left),
                    bottom: bottom.clone(),
                    right: right.clone(),
                });
            }
            let k = fb.universe().iter().find(|k| k.len() == sq0.apex.len())?;
            let phi = finset::all_bijections(k, &sq0.apex).into_iter().next()?;
            Some(BSquare {
                top: BArr::Map(phi.then(&sq0.top).ok()?),
                left: BArr::Map(phi.then(&sq0.left).ok()?),
                bottom: bottom.clone(),
                right: right.clone(),
            })
        }
        BaseProvider::Explicit(_) => base.chosen_pullback(bottom, right).ok(),
    }
}

/// One representative pullback square per right side h: K → J with
/// |K| ≤ max_side, over the given bottom.
fn cospan_squares_with_bottom(base: &BaseProvider, bottom: &BArr, max_side: usize) -> Vec<BSquare> {
    let mut out = Vec::new();
    match base {
        BaseProvider::FinSets(fb) => {
            let j = base.cod(bottom);
            for k in fb.universe() {
                if k.len() > max_side || *k != FinSet::skeleton(k.len()) {
                    continue;
                }
                for right in finset::all_maps(k, j.set()) {
                    if let Some(sq) = representative_square(base, bottom, &BArr::Map(right)) {
                        out.push(sq);
                    }
                }
            }
        }
        BaseProvider::Explicit(e) => {
            let j = base.cod(bottom);
            for r in 0..e.cat.n_arrows() {
                let right = BArr::Ix(r);
                if base.cod(&right) != j {
                    continue;
                }
                if let Some(sq) = representative_square(base, bottom, &right) {
                    out.push(sq);
                }
            }
        }
    }
    out
}

/// One representative pullback square per bottom side l: L → J with
/// |L| ≤ max_side, over the given right side.
fn cospan_squares_with_right(base: &BaseProvider, right: &BArr, max_side: usize) -> Vec<BSquare> {
    let mut out = Vec::new();
    match base {
        BaseProvider::FinSets(fb) => {
            let j = base.cod(right);
            for l in fb.universe() {
                if l.len() > max_side || *l != FinSet::skeleton(l.len()) {
                    continue;
                }
                for bottom in finset::all_maps(l, j.set()) {
                    if let Some(sq) = representative_square(base, &BArr::Map(bottom), right) {
                        out.push(sq);
                    }
                }
            }
        }
        BaseProvider::Explicit(e) => {
            let j = base.cod(right);
            for b in 0..e.cat.n_arrows() {
                let bottom = BArr::Ix(b);
                if base.cod(&bottom) != j {
                    continue;
                }
                if let Some(sq) = representative_square(base, &bottom, right) {
                    out.push(sq);
                }
            }
        }
    }
    out
}

/// The kind of product certificate found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductKind {
    Universal,
    Algebraic,
    Opcartesian,
    StablyOpcartesian,
}

/// A certificate for a product of X along f: the carrier P over cod f, the
/// vertical projection π: f*P → X (universal/algebraic), the unit u: X → P
/// over f (algebraic/opcartesian), and the quantifier bounds used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCertificate<T: Multicat> {
    pub kind: ProductKind,
    pub x: T::Ob,
    pub f: BArr,
    pub carrier: T::Ob,
    pub pi: Option<T::MArr>,
    pub u: Option<T::MArr>,
    pub evidence: Vec<String>,
}

/// Whether (p, lf, pi) satisfies the universal property of the product of x
/// along f against every in-universe cone within the side bound.
fn universal_ok<T: Multicat>(
    fm: &T,
    x: &T::Ob,
    p: &T::Ob,
    lf: &T::DArr,
    pi: &T::MArr,
    squares: &[BSquare],
) -> bool {
    for bsq in squares {
        let k = fm.base().dom(&bsq.right);
        for q in fm.objects_over(&k) {
            for lt in fm.d_lifts_with_cod(&bsq.top, &q) {
                let fq = fm.d_dom(&lt);
                let mut hits: HashMap<T::MArr, usize> = HashMap::new();
                for t in fm.m_hom_over(&q, p, &bsq.right) {
                    if let Ok(tp) = special_lift(fm, &t, bsq, &lt, lf) {
                        if let Some(c) = fm.m_compose(pi, &tp) {
                            *hits.entry(c).or_insert(0) += 1;
                        }
                    }
                }
                for rho in fm.m_hom_over(&fq, x, &bsq.left) {
                    if hits.get(&rho) != Some(&1) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn find_universal_products<T: Multicat>(
    fm: &T,
    x: &T::Ob,
    f: &BArr,
    all: bool,
) -> Vec<ProductCertificate<T>> {
    let base = fm.base();
    let mut certs = Vec::new();
    if base.dom(f) != fm.obj_proj(x) {
        return certs;
    }
    let bound = side_bound(base);
    let squares = cospan_squares_with_bottom(base, f, bound);
    let j = base.cod(f);
    let idx = base.id(&fm.obj_proj(x));
    for p in fm.objects_over(&j) {
        for lf in fm.d_lifts_with_cod(f, &p) {
            let w = fm.d_dom(&lf);
            for pi in fm.m_hom_over(&w, x, &idx) {
                if universal_ok(fm, x, &p, &lf, &pi, &squares) {
                    certs.push(ProductCertificate {
                        kind: ProductKind::Universal,
                        x: x.clone(),
                        f: f.clone(),
                        carrier: p.clone(),
                        pi: Some(pi),
                        u: None,
                        evidence: vec![format!(
                            "cones: {} representative pullback squares, sides bounded by {bound}",
                            squares.len()
                        )],
                    });
                    if !all {
                        return certs;
                    }
                }
            }
        }
    }
    certs
}

/// The first (in canonical order) universal-product certificate for X along f.
pub fn find_universal_product<T: Multicat>(
    fm: &T,
    x: &T::Ob,
    f: &BArr,
) -> Option<ProductCertificate<T>> {
    find_universal_products(fm, x, f, false).into_iter().next()
}

/// Whether (p, lf, pi, u) satisfies the two defining triangle equations of
/// an algebraic product of x along f.
fn algebraic_ok<T: CartesianMulticat>(
    fm: &T,
    x: &T::Ob,
    p: &T::Ob,
    lf: &T::DArr,
    pi: &T::MArr,
    u: &T::MArr,
    pb_sq: &BSquare,
    delta: &BArr,
) -> bool {
    // Triangle 1: transporting π back along f gives the identity section:
    // (f_D, u∘π, id_P) is special.
    let upi = match fm.m_compose(u, pi) {
        Some(c) => c,
        None => return false,
    };
    if !fm.is_special_triangle(lf, &upi, &fm.m_id(p)) {
        return false;
    }
    // Triangle 2: the counit equation via the diagonal.
    for lh in fm.d_lifts_with_cod(&pb_sq.top, x) {
        let hx = fm.d_dom(&lh);
        let fu = match special_lift(fm, u, pb_sq, &lh, lf) {
            Ok(fu) => fu,
            Err(_) => continue,
        };
        let right2 = match fm.m_compose(pi, &fu) {
            Some(c) => c,
            None => continue,
        };
        for dd in fm.d_hom_over(x, &hx, delta) {
            if fm.d_compose(&lh, &dd) != Some(fm.d_id(x)) {
                continue;
            }
            if fm.is_special_triangle(&dd, &fm.m_id(x), &right2) {
                return true;
            }
        }
    }
    false
}

fn find_algebraic_products<T: CartesianMulticat>(
    fm: &T,
    x: &T::Ob,
    f: &BArr,
    all: bool,
) -> Result<Vec<ProductCertificate<T>>, CartError> {
    let base = fm.base();
    if base.dom(f) != fm.obj_proj(x) {
        return Err(CartError::ShapeMismatch("f must start at p(x)".into()));
    }
    let (pb_sq, delta) = base
        .diagonal_data(f)
        .map_err(|e| CartError::MissingDiagonal(e.to_string()))?;
    let apex = base.dom(&pb_sq.top);
    if !base.contains_obj(&apex) {
        return Err(CartError::MissingDiagonal(format!(
            "the diagonal apex of {} is outside the universe",
            base.arrow_label(f)
        )));
    }
    let mut has_diagonal_lift = false;
    for lh in fm.d_lifts_with_cod(&pb_sq.top, x) {
        let hx = fm.d_dom(&lh);
        for dd in fm.d_hom_over(x, &hx, &delta) {
            if fm.d_compose(&lh, &dd) == Some(fm.d_id(x)) {
                has_diagonal_lift = true;
            }
        }
    }
    if !has_diagonal_lift {
        return Err(CartError::MissingDiagonal(format!(
            "the diagonal of {} does not lift at {}",
            base.arrow_label(f),
            fm.ob_label(x)
        )));
    }
    let j = base.cod(f);
    let idx = base.id(&fm.obj_proj(x));
    let mut certs = Vec::new();
    for p in fm.objects_over(&j) {
        for lf in fm.d_lifts_with_cod(f, &p) {
            let w = fm.d_dom(&lf);
            for pi in fm.m_hom_over(&w, x, &idx) {
                for u in fm.m_hom_over(x, &p, f) {
                    if algebraic_ok(fm, x, &p, &lf, &pi, &u, &pb_sq, &delta) {
                        certs.push(ProductCertificate {
                            kind: ProductKind::Algebraic,
                            x: x.clone(),
                            f: f.clone(),
                            carrier: p.clone(),
                            pi: Some(pi.clone()),
                            u: Some(u),
                            evidence: vec![format!(
                                "diagonal apex: {}",
                                base.arrow_label(&pb_sq.left)
                            )],
                        });
                        if !all {
                            return Ok(certs);
                        }
                    }
                }
            }
        }
    }
    Ok(certs)
}

/// The first algebraic-product certificate for X along f, or
/// `MissingDiagonal` when the base lacks the diagonal data of f.
pub fn find_algebraic_product<T: CartesianMulticat>(
    fm: &T,
    x: &T::Ob,
    f: &BArr,
) -> Result<Option<ProductCertificate<T>>, CartError> {
    Ok(find_algebraic_products(fm, x, f, false)?.into_iter().next())
}

/// Whether u is opcartesian: composing with u is a bijection from maps out
/// of its codomain onto maps out of its domain over the pasted base arrow.
fn opcartesian_ok<T: Multicat>(fm: &T, u: &T::MArr, test_objects: &[T::Ob], bound: usize) -> bool {
    let base = fm.base();
    let x = fm.m_dom(u);
    let p = fm.m_cod(u);
    let j = fm.obj_proj(&p);
    let pu = fm.m_proj(u);
    for q in test_objects {
        let pq = fm.obj_proj(q);
        if index_size(&pq) > bound {
            continue;
        }
        for g in base.arrows_between(&j, &pq) {
            let gf = match base.compose(&g, &pu) {
                Some(c) => c,
                None => continue,
            };
            let ts = fm.m_hom_over(&p, q, &g);
            let mut composites: HashMap<T::MArr, usize> = HashMap::new();
            for t in &ts {
                if let Some(c) = fm.m_compose(t, u) {
                    *composites.entry(c).or_insert(0) += 1;
                }
            }
            for v in fm.m_hom_over(&x, q, &gf) {
                if composites.get(&v) != Some(&1) {
                    return false;
                }
            }
        }
    }
    true
}

/// Whether u stays opcartesian after reindexing along every representative
/// in-universe pullback square with right side p(u).
fn stably_opcartesian_ok<T: Multicat>(
    fm: &T,
    u: &T::MArr,
    test_objects: &[T::Ob],
    bound: usize,
) -> bool {
    let base = fm.base();
    let x = fm.m_dom(u);
    let p = fm.m_cod(u);
    for sq in cospan_squares_with_right(base, &fm.m_proj(u), bound) {
        for lt in fm.d_lifts_with_cod(&sq.top, &x) {
            for lb in fm.d_lifts_with_cod(&sq.bottom, &p) {
                match special_lift(fm, u, &sq, &lt, &lb) {
                    Ok(up) => {
                        if !opcartesian_ok(fm, &up, test_objects, bound) {
                            return false;
                        }
                    }
                    Err(_) => return false,
                }
            }
        }
    }
    true
}

fn find_opcartesians<T: Multicat>(
    fm: &T,
    x: &T::Ob,
    f: &BArr,
    all: bool,
) -> Vec<ProductCertificate<T>> {
    let base = fm.base();
    let mut certs = Vec::new();
    if base.dom(f) != fm.obj_proj(x) {
        return certs;
    }
    let bound = side_bound(base);
    let test_objects: Vec<T::Ob> = fm
        .objects()
        .into_iter()
        .filter(|q| {
            let i = fm.obj_proj(q);
            is_canonical_index(base, &i) && index_size(&i) <= bound
        })
        .collect();
    let j = base.cod(f);
    for p in fm.objects_over(&j) {
        for u in fm.m_hom_over(x, &p, f) {
            if opcartesian_ok(fm, &u, &test_objects, bound) {
                let stable = stably_opcartesian_ok(fm, &u, &test_objects, bound);
                certs.push(ProductCertificate {
                    kind: if stable {
                        ProductKind::StablyOpcartesian
                    } else {
                        ProductKind::Opcartesian
                    },
                    x: x.clone(),
                    f: f.clone(),
                    carrier: p.clone(),
                    pi: None,
                    u: Some(u),
                    evidence: vec![format!(
                        "test cones over {} objects with index size ≤ {bound}",
                        test_objects.len()
                    )],
                });
                if !all {
                    return certs;
                }
            }
        }
    }
    certs
}

/// The first opcartesian arrow out of X over f, with its stability status.
pub fn find_opcartesian<T: Multicat>(
    fm: &T,
    x: &T::Ob,
    f: &BArr,
) -> Option<ProductCertificate<T>> {
    find_opcartesians(fm, x, f, false).into_iter().next()
}

/// Re-checks a certificate's defining property from its data alone.
pub fn recheck_certificate<T: CartesianMulticat>(fm: &T, cert: &ProductCertificate<T>) -> bool {
    let base = fm.base();
    match cert.kind {
        ProductKind::Universal => {
            let pi = match &cert.pi {
                Some(pi) => pi,
                None => return false,
            };
            let bound = side_bound(base);
            let squares = cospan_squares_with_bottom(base, &cert.f, bound);
            fm.d_lifts_with_cod(&cert.f, &cert.carrier)
                .iter()
                .filter(|lf| fm.d_dom(lf) == fm.m_dom(pi))
                .any(|lf| universal_ok(fm, &cert.x, &cert.carrier, lf, pi, &squares))
        }
        ProductKind::Algebraic => {
            let (pi, u) = match (&cert.pi, &cert.u) {
                (Some(pi), Some(u)) => (pi, u),
                _ => return false,
            };
            let (pb_sq, delta) = match base.diagonal_data(&cert.f) {
                Ok(d) => d,
                Err(_) => return false,
            };
            fm.d_lifts_with_cod(&cert.f, &cert.carrier)
                .iter()
                .filter(|lf| fm.d_dom(lf) == fm.m_dom(pi))
                .any(|lf| algebraic_ok(fm, &cert.x, &cert.carrier, lf, pi, u, &pb_sq, &delta))
        }
        ProductKind::Opcartesian | ProductKind::StablyOpcartesian => {
            let u = match &cert.u {
                Some(u) => u,
                None => return false,
            };
            let bound = side_bound(base);
            let test_objects: Vec<T::Ob> = fm
                .objects()
                .into_iter()
                .filter(|q| {
                    let i = fm.obj_proj(q);
                    is_canonical_index(base, &i) && index_size(&i) <= bound
                })
                .collect();
            opcartesian_ok(fm, u, &test_objects, bound)
                && (cert.kind == ProductKind::Opcartesian
                    || stably_opcartesian_ok(fm, u, &test_objects, bound))
        }
    }
}

/// Whether two objects over the same base object are isomorphic by a pair of
/// mutually inverse vertical M-arrows.
pub fn vertically_isomorphic<T: Multicat>(fm: &T, p: &T::Ob, q: &T::Ob) -> bool {
    if p == q {
        return true;
    }
    let i = fm.obj_proj(p);
    if i != fm.obj_proj(q) {
        return false;
    }
    let idi = fm.base().id(&i);
    for u in fm.m_hom_over(p, q, &idi) {
        for v in fm.m_hom_over(q, p, &idi) {
            if fm.m_compose(&v, &u) == Some(fm.m_id(p)) && fm.m_compose(&u, &v) == Some(fm.m_id(q))
            {
                return true;
            }
        }
    }
    false
}

/// Whether all certificates of the given kind for (x, f) have pairwise
/// vertically isomorphic carriers (uniqueness of the product up to iso).
pub fn certificates_unique_up_to_iso<T: CartesianMulticat>(
    fm: &T,
    x: &T::Ob,
    f: &BArr,
    kind: ProductKind,
) -> bool {
    let certs = match kind {
        ProductKind::Universal => find_universal_products(fm, x, f, true),
        ProductKind::Algebraic => find_algebraic_products(fm, x, f, true).unwrap_or_default(),
        ProductKind::Opcartesian | ProductKind::StablyOpcartesian => {
            find_opcartesians(fm, x, f, true)
        }
    };
    for c1 in &certs {
        for c2 in &certs {
            if !vertically_isomorphic(fm, &c1.carrier, &c2.carrier) {
                return false;
            }
        }
    }
    true
}

/// One line of the products-equivalence report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductsEntry {
    pub x: String,
    pub f: String,
    pub algebraic: bool,
    pub universal: bool,
    pub representable: bool,
}

/// The pointwise comparison of the three product notions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductsReport {
    pub entries: Vec<ProductsEntry>,
    pub agree: bool,
    pub notes: Vec<String>,
}

/// Compares algebraic products, universal products and stable opcartesian
/// representability on every (X, f) with skeletal index sets within the
/// bound, using the three independent finders.
pub fn products_equivalence_report<T: CartesianMulticat>(fm: &T, bound: usize) -> ProductsReport {
    let base = fm.base();
    let mut entries = Vec::new();
    let mut notes = Vec::new();
    let mut agree = true;
    let mut objects = fm.objects();
    objects.sort();
    let targets: Vec<BObj> = base
        .objects()
        .into_iter()
        .filter(|j| is_canonical_index(base, j) && index_size(j) <= bound)
        .collect();
    for x in &objects {
        let i = fm.obj_proj(x);
        if !is_canonical_index(base, &i) || index_size(&i) > bound {
            continue;
        }
        for j in &targets {
            for f in base.arrows_between(&i, j) {
                let algebraic = match find_algebraic_product(fm, x, &f) {
                    Ok(c) => c.is_some(),
                    Err(e) => {
                        notes.push(format!(
                            "algebraic product of {} along {} undecided: {e}",
                            fm.ob_label(x),
                            base.arrow_label(&f)
                        ));
                        false
                    }
                };
                let universal = find_universal_product(fm, x, &f).is_some();
                let representable = find_opcartesian(fm, x, &f)
                    .map(|c| c.kind == ProductKind::StablyOpcartesian)
                    .unwrap_or(false);
                if !(algebraic == universal && universal == representable) {
                    agree = false;
                }
                entries.push(ProductsEntry {
                    x: fm.ob_label(x),
                    f: base.arrow_label(&f),
                    algebraic,
                    universal,
                    representable,
                });
            }
        }
    }
    ProductsReport { entries, agree, notes }
}

/// A section of the projections: a choice of object over each base object
/// and of a cartesian M-arrow over each base arrow.
#[derive(Debug, Clone, Default)]
pub struct Section {
    pub obj: BTreeMap<BObj, usize>,
    pub arr: BTreeMap<BArr, usize>,
}

fn section_image(s: &Section, key: &BArr) -> Result<usize, CartError> {
    s.arr
        .get(key)
        .copied()
        .ok_or_else(|| CartError::NotASection(format!("no arrow assigned over {key:?}")))
}

fn validate_section(
    host: &FiberedMulticategory,
    m_to_d: &HashMap<usize, usize>,
    s: &Section,
    name: &str,
) -> Result<(), CartError> {
    let base = &host.base;
    for i in base.objects() {
        let &x = s
            .obj
            .get(&i)
            .ok_or_else(|| CartError::NotASection(format!("{name}: no object over {i:?}")))?;
        if host.obj_proj(&x) != i {
            return Err(CartError::NotASection(format!(
                "{name}: object over {i:?} projects elsewhere"
            )));
        }
    }
    for f in base.all_arrows() {
        let a = section_image(s, &f)
            .map_err(|_| CartError::NotASection(format!("{name}: no arrow over {f:?}")))?;
        let (i, j) = (base.dom(&f), base.cod(&f));
        if host.m_dom(&a) != s.obj[&i] || host.m_cod(&a) != s.obj[&j] || host.m_proj(&a) != f {
            return Err(CartError::NotASection(format!(
                "{name}: arrow over {f:?} is ill-typed"
            )));
        }
        if !m_to_d.contains_key(&a) {
            return Err(CartError::NotASection(format!(
                "{name}: the arrow over {f:?} is not cartesian"
            )));
        }
        if base.is_id(&f) && !host.m_cat.is_identity(a) {
            return Err(CartError::NotASection(format!(
                "{name}: a non-identity arrow over the identity {f:?}"
            )));
        }
        for g in base.all_arrows() {
            if let Some(gf) = base.compose(&g, &f) {
                if base.cod(&f) != base.dom(&g) {
                    continue;
                }
                let b = section_image(s, &g)?;
                let expected = section_image(s, &gf)?;
                if host.m_compose(&b, &a) != Some(expected) {
                    return Err(CartError::NotASection(format!(
                        "{name}: not functorial on {g:?} ∘ {f:?}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// The fibered hom monoid M(s, t) of two sections of a cartesian fibered
/// category: objects are vertical arrows sI → tI, d transports them
/// contravariantly by special lifting, p covariantly by coreindexing; the
/// result is packaged as a (d, p) pair and verified.
///
/// `d_to_m` maps each D-arrow index of the host to the M-arrow it underlies
/// (as produced by the fibration bridge).
pub fn fibered_hom_monoid(
    cs: &CartesianStructure,
    d_to_m: &[usize],
    s: &Section,
    t: &Section,
) -> Result<(DpPair, Vec<String>), CartError> {
    let host = &cs.host;
    let base = host.base.clone();
    let m_to_d: HashMap<usize, usize> =
        d_to_m.iter().enumerate().map(|(di, &mi)| (mi, di)).collect();
    validate_section(host, &m_to_d, s, "s")?;
    validate_section(host, &m_to_d, t, "t")?;
    // Objects: vertical arrows sI → tI, per base object.
    let base_objects = base.objects();
    let mut objs: Vec<(BObj, usize)> = Vec::new();
    let mut obj_ix: HashMap<(BObj, usize), usize> = HashMap::new();
    for i in &base_objects {
        let idi = base.id(i);
        for a in host.m_hom_over(&s.obj[i], &t.obj[i], &idi) {
            obj_ix.insert((i.clone(), a), objs.len());
            objs.push((i.clone(), a));
        }
    }
    // Contravariant transport: f*(a at I) for f: I′ → I.
    let star = |f: &BArr, a: usize| -> Result<usize, CartError> {
        let (ip, i) = (base.dom(f), base.cod(f));
        let sq = BSquare {
            top: f.clone(),
            left: base.id(&ip),
            bottom: f.clone(),
            right: base.id(&i),
        };
        let sd = m_to_d[&section_image(s, f)?];
        let td = m_to_d[&section_image(t, f)?];
        special_lift(host, &a, &sq, &sd, &td)
            .map_err(|e| CartError::InvalidPresentation(format!("reindexing failed: {e}")))
    };
    // Covariant transport: f_!(a at I) for f: I → J.
    let shriek = |f: &BArr, a: usize| -> Result<usize, CartError> {
        let j = base.cod(f);
        let tf = section_image(t, f)?;
        let ta = host
            .m_compose(&tf, &a)
            .ok_or_else(|| CartError::ShapeMismatch("section legs do not compose".into()))?;
        let sd = m_to_d[&section_image(s, f)?];
        coreindex(cs, &ta, &sd, &base.id(&j))
    };
    // Precompute the transports and check their functoriality.
    let mut star_tab: HashMap<(BArr, usize), usize> = HashMap::new();
    let mut shriek_tab: HashMap<(BArr, usize), usize> = HashMap::new();
    let arrows = base.all_arrows();
    for f in &arrows {
        let (i, j) = (base.dom(f), base.cod(f));
        for (oi, (bo, a)) in objs.iter().enumerate() {
            if *bo == j {
                let b = star(f, *a)?;
                star_tab.insert((f.clone(), oi), obj_ix[&(i.clone(), b)]);
            }
            if *bo == i {
                let b = shriek(f, *a)?;
                shriek_tab.insert((f.clone(), oi), obj_ix[&(j.clone(), b)]);
            }
        }
    }
    for g in &arrows {
        for f in &arrows {
            let gf = match base.compose(g, f) {
                Some(gf) if base.cod(f) == base.dom(g) => gf,
                _ => continue,
            };
            for oi in 0..objs.len() {
                if objs[oi].0 == base.cod(g) {
                    let two_step = star_tab[&(f.clone(), star_tab[&(g.clone(), oi)])];
                    if two_step != star_tab[&(gf.clone(), oi)] {
                        return Err(CartError::InvalidPresentation(
                            "contravariant transport is not functorial".into(),
                        ));
                    }
                }
                if objs[oi].0 == base.dom(f) {
                    let two_step = shriek_tab[&(g.clone(), shriek_tab[&(f.clone(), oi)])];
                    if two_step != shriek_tab[&(gf.clone(), oi)] {
                        return Err(CartError::InvalidPresentation(
                            "covariant transport is not functorial".into(),
                        ));
                    }
                }
            }
        }
    }
    // d: the category of elements of the contravariant transport (arrows
    // (f, target): (I′, f*a) → (I, a)), a discrete fibration.
    let label = |oi: usize| -> String {
        format!("{}|{}", host.ob_label(&host.m_dom(&objs[oi].1)), host.m_label(&objs[oi].1))
    };
    let mut db: CatBuilder<(BArr, usize)> = CatBuilder::new();
    let mut pb: CatBuilder<(BArr, usize)> = CatBuilder::new();
    for oi in 0..objs.len() {
        db.add_object(label(oi));
        pb.add_object(label(oi));
    }
    let mut d_proj: Vec<BArr> = Vec::new();
    let mut p_proj: Vec<BArr> = Vec::new();
    for f in &arrows {
        for oi in 0..objs.len() {
            if objs[oi].0 == base.cod(f) {
                let dom = star_tab[&(f.clone(), oi)];
                db.add_arrow(
                    (f.clone(), oi),
                    format!("{}^({})", base.arrow_label(f), label(oi)),
                    dom,
                    oi,
                );
                d_proj.push(f.clone());
            }
            if objs[oi].0 == base.dom(f) {
                let cod = shriek_tab[&(f.clone(), oi)];
                pb.add_arrow(
                    (f.clone(), oi),
                    format!("{}_({})", base.arrow_label(f), label(oi)),
                    oi,
                    cod,
                );
                p_proj.push(f.clone());
            }
        }
    }
    let base_d = base.clone();
    let d_cat = db.build(
        |oi| (base_d.id(&objs[oi].0), oi),
        |g, f| {
            (
                base_d.compose(&g.0, &f.0).expect("composable base arrows"),
                g.1,
            )
        },
    );
    let base_p = base.clone();
    let p_cat = pb.build(
        |oi| (base_p.id(&objs[oi].0), oi),
        |g, f| {
            (
                base_p.compose(&g.0, &f.0).expect("composable base arrows"),
                f.1,
            )
        },
    );
    let on_objects: Vec<BObj> = objs.iter().map(|(i, _)| i.clone()).collect();
    let dp = DpPair {
        base,
        d_cat: d_cat.clone(),
        p_cat: p_cat.clone(),
        d: BaseFunctor { on_objects: on_objects.clone(), on_arrows: d_proj },
        p: BaseFunctor { on_objects, on_arrows: p_proj },
    };
    let mut violations: Vec<String> = Vec::new();
    violations.extend(validate_category(&d_cat).into_iter().map(|v| format!("d: {v:?}")));
    violations.extend(validate_category(&p_cat).into_iter().map(|v| format!("p: {v:?}")));
    violations.extend(crate::core::verify_fibered_monoid(&dp));
    Ok((dp, violations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finset::FinMap;
    use crate::standard::{
        mat_z2, skeletal_universe, universe_with_apexes, zn_ring, Family, FnTheory, SeqTheory,
        TerminalTheory,
    };

    fn ring_instance(bound: usize, universe: Vec<FinSet>) -> FamilyInstance<SeqTheory> {
        let (cat, enrich) = zn_ring(2);
        FamilyInstance::new(SeqTheory { cat, enrich: Some(enrich) }, universe, bound)
    }

    fn mat_instance(bound: usize, universe: Vec<FinSet>) -> FamilyInstance<SeqTheory> {
        let (cat, enrich) = mat_z2(bound);
        FamilyInstance::new(SeqTheory { cat, enrich: Some(enrich) }, universe, bound)
    }

    fn ring_structure() -> CartesianStructure {
        materialize_cartesian(&ring_instance(2, skeletal_universe(2)))
    }

    fn ring_family(n: usize) -> Family {
        Family { index: FinSet::skeleton(n), sorts: vec!["r".into(); n] }
    }

    #[test]
    fn ring_structure_satisfies_all_axioms() {
        let cs = ring_structure();
        assert!(!cs.triangles.is_empty());
        assert_eq!(verify_cartesian_structure(&cs), vec![]);
        assert_eq!(check_coherence(&cs), Vec::<String>::new());
        assert_eq!(check_frobenius_equation(&cs), Vec::<String>::new());
        assert_eq!(check_beck_chevalley_equation(&cs), Vec::<String>::new());
    }

    #[test]
    fn deleted_triangle_breaks_existence() {
        let mut cs = ring_structure();
        let &tri = cs
            .triangles
            .iter()
            .find(|t| !cs.host.d_cat.is_identity(t.0 as usize))
            .expect("a non-identity-top triangle");
        cs.triangles.remove(&tri);
        let violations = verify_cartesian_structure(&cs);
        assert!(violations
            .iter()
            .any(|v| matches!(v, CartViolation::ExistenceViolation { .. })));
    }

    #[test]
    fn rewired_triangle_breaks_closure_but_not_existence() {
        let mut cs = ring_structure();
        let host = cs.host.clone();
        let (tri, alt) = cs
            .triangles
            .iter()
            .find_map(|&t| {
                if host.d_cat.is_identity(t.0 as usize) {
                    return None;
                }
                let b = t.2 as usize;
                (0..host.m_cat.n_arrows())
                    .find(|&bp| {
                        bp != b
                            && host.m_cat.dom(bp) == host.m_cat.dom(b)
                            && host.m_cat.cod(bp) == host.m_cat.cod(b)
                            && host.p.arr(bp) == host.p.arr(b)
                    })
                    .map(|bp| (t, bp as u32))
            })
            .expect("a rewirable triangle");
        cs.triangles.remove(&tri);
        cs.triangles.insert((tri.0, tri.1, alt));
        let violations = verify_cartesian_structure(&cs);
        assert!(!violations.is_empty());
        for v in &violations {
            assert!(matches!(
                v,
                CartViolation::NotClosedUnderComposition { .. }
                    | CartViolation::PostComposition { .. }
                    | CartViolation::Frobenius { .. }
                    | CartViolation::BeckChevalley { .. }
            ));
        }
    }

    #[test]
    fn transport_of_ring_families_matches_hand_computation() {
        // f = (1 ↦ 3, 2 ↦ 1, 3 ↦ 3) sends the tuple (b, c, a) over the
        // domain to (c, 0, b + a) over the codomain.
        let fm = ring_instance(3, skeletal_universe(3));
        let x = ring_family(3);
        let i3 = FinSet::skeleton(3);
        let f = FinMap::from_indices(i3.clone(), i3.clone(), vec![2, 0, 2]);
        let lift = DFam { dom: x.clone(), cod: x.clone(), map: f.clone() };
        let h = BArr::Map(FinMap::identity(&i3));
        for bits in 0..8u32 {
            let (b, c, a) = (bits & 1, (bits >> 1) & 1, (bits >> 2) & 1);
            let arr = MFam {
                dom: x.clone(),
                cod: x.clone(),
                map: f.clone(),
                singles: vec![vec![c], vec![], vec![b, a]],
            };
            let expected = MFam {
                dom: x.clone(),
                cod: x.clone(),
                map: FinMap::identity(&i3),
                singles: vec![vec![c], vec![0], vec![b ^ a]],
            };
            assert_eq!(coreindex(&fm, &arr, &lift, &h), Ok(expected));
        }
    }

    #[test]
    fn transport_of_function_families_matches_hand_computation() {
        let theory = FnTheory {
            sets: vec![("A".into(), 2), ("B".into(), 2), ("C".into(), 2)],
        };
        let singles = theory.singles(&["A".into(), "B".into(), "A".into()], "C");
        let fm = FamilyInstance::new(theory, skeletal_universe(3), 3);
        let i3 = FinSet::skeleton(3);
        let i1 = FinSet::skeleton(1);
        let y = Family { index: i3.clone(), sorts: vec!["B".into(), "C".into(), "A".into()] };
        let x = Family { index: i3.clone(), sorts: vec!["A".into(), "B".into(), "A".into()] };
        let z = Family { index: i1.clone(), sorts: vec!["C".into()] };
        let f = FinMap::from_indices(i3.clone(), i3.clone(), vec![2, 0, 2]);
        let lift = DFam { dom: x.clone(), cod: y.clone(), map: f };
        let bang = FinMap::from_indices(i3.clone(), i1.clone(), vec![0, 0, 0]);
        let h = BArr::Map(bang.clone());
        assert_eq!(singles.len(), 256);
        for t in singles {
            let arr = MFam {
                dom: x.clone(),
                cod: z.clone(),
                map: bang.clone(),
                singles: vec![t.clone()],
            };
            let res = coreindex(&fm, &arr, &lift, &h).expect("transport exists");
            assert_eq!(res.dom, y);
            for b in 0..2 {
                for c in 0..2 {
                    for a in 0..2 {
                        assert_eq!(res.singles[0].eval(&[b, c, a]), t.eval(&[a, b, a]));
                    }
                }
            }
        }
    }

    #[test]
    fn covariant_squares_round_trip() {
        let cs = ring_structure();
        let squares = triangles_to_cosquares(&cs);
        let back = cosquares_to_triangles(&cs.host, &squares).expect("valid presentation");
        assert_eq!(back.triangles, cs.triangles);
    }

    #[test]
    fn broken_covariant_presentation_is_rejected() {
        let cs = ring_structure();
        let mut squares = triangles_to_cosquares(&cs);
        let &sq = squares.iter().next().expect("nonempty");
        squares.remove(&sq);
        assert!(matches!(
            cosquares_to_triangles(&cs.host, &squares),
            Err(CartError::InvalidPresentation(_))
        ));
    }

    #[test]
    fn terminal_products_all_agree() {
        let fm = FamilyInstance::new(TerminalTheory, universe_with_apexes(2), 2);
        let report = products_equivalence_report(&fm, 2);
        assert!(!report.entries.is_empty());
        assert!(report.agree);
        assert_eq!(report.notes, Vec::<String>::new());
        for e in &report.entries {
            assert!(e.algebraic && e.universal && e.representable, "{e:?}");
        }
    }

    #[test]
    fn matrix_products_agree_and_exist_up_to_the_dimension_cap() {
        let fm = mat_instance(2, universe_with_apexes(2));
        let report = products_equivalence_report(&fm, 2);
        assert!(report.agree);
        assert_eq!(report.notes, Vec::<String>::new());
        assert_eq!(report.entries.len(), 57);
        let with_product = report.entries.iter().filter(|e| e.algebraic).count();
        assert_eq!(with_product, 48);
        // Products fail exactly where a fiber would need dimension above the
        // cap, and the three notions always decide alike.
        for e in &report.entries {
            assert_eq!(e.algebraic, e.universal, "{e:?}");
            assert_eq!(e.algebraic, e.representable, "{e:?}");
        }
    }

    #[test]
    fn ring_products_agree_and_exist_exactly_along_isos() {
        // With a single one-dimensional sort there is no carrier for a fold
        // and no unit for an injection, so products exist only along the
        // base isomorphisms — and all three notions agree everywhere.
        let fm = ring_instance(3, universe_with_apexes(3));
        let report = products_equivalence_report(&fm, 3);
        assert!(report.agree);
        assert_eq!(report.notes, Vec::<String>::new());
        assert_eq!(report.entries.len(), 60);
        assert_eq!(report.entries.iter().filter(|e| e.algebraic).count(), 10);
        for e in &report.entries {
            assert_eq!(e.algebraic, e.universal, "{e:?}");
            assert_eq!(e.algebraic, e.representable, "{e:?}");
        }
    }

    #[test]
    fn matrix_product_certificates_are_unique_up_to_iso() {
        let fm = mat_instance(2, universe_with_apexes(2));
        let i2 = FinSet::skeleton(2);
        let x = Family { index: i2.clone(), sorts: vec!["1".into(), "1".into()] };
        let fold = BArr::Map(FinMap::from_indices(i2, FinSet::skeleton(1), vec![0, 0]));
        assert!(certificates_unique_up_to_iso(&fm, &x, &fold, ProductKind::Universal));
        assert!(certificates_unique_up_to_iso(&fm, &x, &fold, ProductKind::Algebraic));
        assert!(certificates_unique_up_to_iso(&fm, &x, &fold, ProductKind::StablyOpcartesian));
    }

    #[test]
    fn matrix_opcartesian_certificate_is_stable_and_rechecks() {
        let fm = mat_instance(2, universe_with_apexes(2));
        let i1 = FinSet::skeleton(1);
        let x = Family { index: i1.clone(), sorts: vec!["1".into()] };
        let incl = BArr::Map(FinMap::from_indices(i1, FinSet::skeleton(2), vec![0]));
        let cert = find_opcartesian(&fm, &x, &incl).expect("opcartesian unit exists");
        assert_eq!(cert.kind, ProductKind::StablyOpcartesian);
        assert_eq!(
            cert.carrier,
            Family { index: FinSet::skeleton(2), sorts: vec!["1".into(), "0".into()] }
        );
        assert!(recheck_certificate(&fm, &cert));
        let fold = BArr::Map(FinMap::from_indices(
            FinSet::skeleton(2),
            FinSet::skeleton(1),
            vec![0, 0],
        ));
        let x2 = Family {
            index: FinSet::skeleton(2),
            sorts: vec!["1".into(), "1".into()],
        };
        let prod = find_universal_product(&fm, &x2, &fold).expect("product exists");
        assert_eq!(
            prod.carrier,
            Family { index: FinSet::skeleton(1), sorts: vec!["2".into()] },
        );
        assert!(recheck_certificate(&fm, &prod));
    }
}
