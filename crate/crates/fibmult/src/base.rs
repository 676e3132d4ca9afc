//! The base category interface: either an explicit finite category equipped
//! with a chosen-pullback table, or the lazy category of finite sets
//! restricted to a fixed universe of sets within a size bound.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fincat::{FibrationReport, FinCategory};
use crate::finset::{self, FinMap, FinSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaseError {
    #[error("codomain mismatch between the cospan legs")]
    CodomainMismatch,
    #[error("no chosen pullback recorded for the cospan ({0}, {1})")]
    NoChosenPullback(String, String),
    #[error("arrow is not invertible")]
    NotIso,
    #[error("object lies outside the base universe")]
    OutOfUniverse,
    #[error("the base has no terminal object")]
    NoTerminal,
    #[error("mixed explicit/finset base data")]
    MixedBase,
}

/// An object of the base: an index into an explicit category, or a finite set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BObj {
    Ix(usize),
    Set(FinSet),
}

/// An arrow of the base.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BArr {
    Ix(usize),
    Map(FinMap),
}

impl BObj {
    pub fn set(&self) -> &FinSet {
        match self {
            BObj::Set(s) => s,
            BObj::Ix(_) => panic!("expected a finite-set base object"),
        }
    }
}

impl BArr {
    pub fn map(&self) -> &FinMap {
        match self {
            BArr::Map(m) => m,
            BArr::Ix(_) => panic!("expected a finite-set base arrow"),
        }
    }
}

/// A commuting base square
///
/// ```text
///   apex ──top──→ I
///    │            │
///  left         right
///    ↓            ↓
///    L ──bottom─→ J
/// ```
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BSquare {
    pub top: BArr,
    pub left: BArr,
    pub bottom: BArr,
    pub right: BArr,
}

/// An explicit base: a finite category together with chosen pullbacks,
/// keyed by (bottom, right) arrow indices.
#[derive(Debug, Clone)]
pub struct ExplicitBase {
    pub cat: FinCategory,
    /// (bottom, right) ↦ (apex object, top, left).
    pub chosen: HashMap<(u32, u32), (u32, u32, u32)>,
}

/// The finite-set base: a fixed universe of sets (deduplicated by elements)
/// with all maps between them, and a size bound for reporting.
#[derive(Debug, Clone)]
pub struct FinSetBase {
    universe: Vec<FinSet>,
    pub size_bound: usize,
}

impl FinSetBase {
    pub fn new(mut universe: Vec<FinSet>, size_bound: usize) -> FinSetBase {
        universe.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        universe.dedup();
        FinSetBase { universe, size_bound }
    }

    /// The universe of skeleton sets {}, {1}, …, {1..bound}.
    pub fn skeletal(bound: usize) -> FinSetBase {
        FinSetBase::new((0..=bound).map(FinSet::skeleton).collect(), bound)
    }

    pub fn universe(&self) -> &[FinSet] {
        &self.universe
    }

    pub fn contains(&self, s: &FinSet) -> bool {
        self.universe.iter().any(|u| u == s)
    }
}

/// The base category of a fibered multicategory.
#[derive(Debug, Clone)]
pub enum BaseProvider {
    Explicit(ExplicitBase),
    FinSets(FinSetBase),
}

impl BaseProvider {
    pub fn objects(&self) -> Vec<BObj> {
        match self {
            BaseProvider::Explicit(e) => (0..e.cat.n_objects()).map(BObj::Ix).collect(),
            BaseProvider::FinSets(f) => {
                f.universe.iter().map(|s| BObj::Set(s.clone())).collect()
            }
        }
    }

    pub fn contains_obj(&self, x: &BObj) -> bool {
        match (self, x) {
            (BaseProvider::Explicit(e), BObj::Ix(i)) => *i < e.cat.n_objects(),
            (BaseProvider::FinSets(f), BObj::Set(s)) => f.contains(s),
            _ => false,
        }
    }

    pub fn dom(&self, f: &BArr) -> BObj {
        match (self, f) {
            (BaseProvider::Explicit(e), BArr::Ix(i)) => BObj::Ix(e.cat.dom(*i)),
            (BaseProvider::FinSets(_), BArr::Map(m)) => BObj::Set(m.dom.clone()),
            _ => panic!("mixed base data"),
        }
    }

    pub fn cod(&self, f: &BArr) -> BObj {
        match (self, f) {
            (BaseProvider::Explicit(e), BArr::Ix(i)) => BObj::Ix(e.cat.cod(*i)),
            (BaseProvider::FinSets(_), BArr::Map(m)) => BObj::Set(m.cod.clone()),
            _ => panic!("mixed base data"),
        }
    }

    pub fn id(&self, x: &BObj) -> BArr {
        match (self, x) {
            (BaseProvider::Explicit(e), BObj::Ix(i)) => BArr::Ix(e.cat.identity_of(*i)),
            (BaseProvider::FinSets(_), BObj::Set(s)) => BArr::Map(FinMap::identity(s)),
            _ => panic!("mixed base data"),
        }
    }

    pub fn is_id(&self, f: &BArr) -> bool {
        match (self, f) {
            (BaseProvider::Explicit(e), BArr::Ix(i)) => e.cat.is_identity(*i),
            (BaseProvider::FinSets(_), BArr::Map(m)) => m.is_identity(),
            _ => panic!("mixed base data"),
        }
    }

    /// g ∘ f.
    pub fn compose(&self, g: &BArr, f: &BArr) -> Option<BArr> {
        match (self, g, f) {
            (BaseProvider::Explicit(e), BArr::Ix(g), BArr::Ix(f)) => {
                e.cat.compose(*g, *f).map(BArr::Ix)
            }
            (BaseProvider::FinSets(_), BArr::Map(g), BArr::Map(f)) => {
                f.then(g).ok().map(BArr::Map)
            }
            _ => panic!("mixed base data"),
        }
    }

    pub fn is_iso(&self, f: &BArr) -> bool {
        self.inverse(f).is_some()
    }

    pub fn inverse(&self, f: &BArr) -> Option<BArr> {
        match (self, f) {
            (BaseProvider::Explicit(e), BArr::Ix(i)) => e.cat.inverse(*i).map(BArr::Ix),
            (BaseProvider::FinSets(_), BArr::Map(m)) => m.inverse().ok().map(BArr::Map),
            _ => panic!("mixed base data"),
        }
    }

    /// All arrows from `x` to `y`.
    pub fn arrows_between(&self, x: &BObj, y: &BObj) -> Vec<BArr> {
        match (self, x, y) {
            (BaseProvider::Explicit(e), BObj::Ix(x), BObj::Ix(y)) => {
                e.cat.hom(*x, *y).iter().map(|&a| BArr::Ix(a as usize)).collect()
            }
            (BaseProvider::FinSets(_), BObj::Set(s), BObj::Set(t)) => {
                finset::all_maps(s, t).into_iter().map(BArr::Map).collect()
            }
            _ => panic!("mixed base data"),
        }
    }

    /// All arrows of the base (between universe objects).
    pub fn all_arrows(&self) -> Vec<BArr> {
        match self {
            BaseProvider::Explicit(e) => (0..e.cat.n_arrows()).map(BArr::Ix).collect(),
            BaseProvider::FinSets(f) => {
                let mut out = Vec::new();
                for s in &f.universe {
                    for t in &f.universe {
                        out.extend(finset::all_maps(s, t).into_iter().map(BArr::Map));
                    }
                }
                out
            }
        }
    }

    /// Whether the square is a pullback in the base (vertices need not be in
    /// the universe for the finset case — the check is element-wise).
    pub fn is_pullback(&self, sq: &BSquare) -> bool {
        match self {
            BaseProvider::FinSets(_) => finset::is_pullback(
                sq.top.map(),
                sq.left.map(),
                sq.bottom.map(),
                sq.right.map(),
            ),
            BaseProvider::Explicit(e) => {
                let (top, left, bottom, right) = match (&sq.top, &sq.left, &sq.bottom, &sq.right) {
                    (BArr::Ix(t), BArr::Ix(l), BArr::Ix(b), BArr::Ix(r)) => (*t, *l, *b, *r),
                    _ => return false,
                };
                is_pullback_explicit(&e.cat, top, left, bottom, right)
            }
        }
    }

    /// The chosen pullback of the cospan (`bottom`, `right`). For the finset
    /// base the apex is the canonical pair set and may lie outside the
    /// universe; callers check membership where it matters.
    pub fn chosen_pullback(&self, bottom: &BArr, right: &BArr) -> Result<BSquare, BaseError> {
        if self.cod(bottom) != self.cod(right) {
            return Err(BaseError::CodomainMismatch);
        }
        match self {
            BaseProvider::FinSets(_) => {
                let sq = finset::chosen_pullback(bottom.map(), right.map())
                    .map_err(|_| BaseError::CodomainMismatch)?;
                Ok(BSquare {
                    top: BArr::Map(sq.top),
                    left: BArr::Map(sq.left),
                    bottom: bottom.clone(),
                    right: right.clone(),
                })
            }
            BaseProvider::Explicit(e) => {
                let (b, r) = match (bottom, right) {
                    (BArr::Ix(b), BArr::Ix(r)) => (*b as u32, *r as u32),
                    _ => return Err(BaseError::MixedBase),
                };
                let &(_, top, left) = e.chosen.get(&(b, r)).ok_or_else(|| {
                    BaseError::NoChosenPullback(
                        e.cat.arrows[b as usize].id.clone(),
                        e.cat.arrows[r as usize].id.clone(),
                    )
                })?;
                Ok(BSquare {
                    top: BArr::Ix(top as usize),
                    left: BArr::Ix(left as usize),
                    bottom: bottom.clone(),
                    right: right.clone(),
                })
            }
        }
    }

    /// The chosen pullback of `f` along itself plus the diagonal Δ with
    /// top∘Δ = id and left∘Δ = id.
    pub fn diagonal_data(&self, f: &BArr) -> Result<(BSquare, BArr), BaseError> {
        match self {
            BaseProvider::FinSets(_) => {
                let (sq, diag) = finset::diagonal_data(f.map());
                Ok((
                    BSquare {
                        top: BArr::Map(sq.top),
                        left: BArr::Map(sq.left),
                        bottom: f.clone(),
                        right: f.clone(),
                    },
                    BArr::Map(diag),
                ))
            }
            BaseProvider::Explicit(_) => {
                let sq = self.chosen_pullback(f, f)?;
                let dom = self.dom(f);
                let apex = self.dom(&sq.top);
                let idd = self.id(&dom);
                for delta in self.arrows_between(&dom, &apex) {
                    if self.compose(&sq.top, &delta) == Some(idd.clone())
                        && self.compose(&sq.left, &delta) == Some(idd.clone())
                    {
                        return Ok((sq, delta));
                    }
                }
                Err(BaseError::NoChosenPullback(
                    format!("diagonal of {f:?}"),
                    String::new(),
                ))
            }
        }
    }

    /// The terminal object, if present.
    pub fn terminal(&self) -> Option<BObj> {
        match self {
            BaseProvider::FinSets(f) => f
                .universe
                .iter()
                .find(|s| s.len() == 1)
                .map(|s| BObj::Set(s.clone())),
            BaseProvider::Explicit(e) => (0..e.cat.n_objects())
                .find(|&t| (0..e.cat.n_objects()).all(|x| e.cat.hom(x, t).len() == 1))
                .map(BObj::Ix),
        }
    }

    /// All pullback squares with the given right side and all four vertices
    /// in the provider. For the finset base these are the chosen squares
    /// post-composed with every bijective relabeling of the apex by a
    /// universe set (every pullback square arises this way, uniquely).
    pub fn pullback_squares_with_right(&self, right: &BArr) -> Vec<BSquare> {
        self.pullback_squares_with_right_bounded(right, usize::MAX)
    }

    /// Like `pullback_squares_with_right`, but for the finset base only
    /// bottom sides whose domain has at most `max_side` elements are
    /// enumerated (the apex may still be any universe set).
    pub fn pullback_squares_with_right_bounded(&self, right: &BArr, max_side: usize) -> Vec<BSquare> {
        let mut out = Vec::new();
        match self {
            BaseProvider::FinSets(fb) => {
                let j = self.cod(right);
                for l in &fb.universe {
                    if l.len() > max_side {
                        continue;
                    }
                    for bottom in finset::all_maps(l, j.set()) {
                        finset_relabeled_squares(fb, &bottom, right.map(), &mut out);
                    }
                }
            }
            BaseProvider::Explicit(e) => {
                let r = match right {
                    BArr::Ix(r) => *r,
                    _ => return out,
                };
                let j = e.cat.cod(r);
                for bottom in 0..e.cat.n_arrows() {
                    if e.cat.cod(bottom) != j {
                        continue;
                    }
                    let l = e.cat.dom(bottom);
                    for k in 0..e.cat.n_objects() {
                        for &top in e.cat.hom(k, e.cat.dom(r)) {
                            for &left in e.cat.hom(k, l) {
                                if is_pullback_explicit(
                                    &e.cat,
                                    top as usize,
                                    left as usize,
                                    bottom,
                                    r,
                                ) {
                                    out.push(BSquare {
                                        top: BArr::Ix(top as usize),
                                        left: BArr::Ix(left as usize),
                                        bottom: BArr::Ix(bottom),
                                        right: BArr::Ix(r),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// All pullback squares with the given bottom side; for the finset base
    /// only right sides whose domain has at most `max_side` elements are
    /// enumerated.
    pub fn pullback_squares_with_bottom_bounded(&self, bottom: &BArr, max_side: usize) -> Vec<BSquare> {
        let mut out = Vec::new();
        match self {
            BaseProvider::FinSets(fb) => {
                let j = self.cod(bottom);
                for k in &fb.universe {
                    if k.len() > max_side {
                        continue;
                    }
                    for right in finset::all_maps(k, j.set()) {
                        finset_relabeled_squares(fb, bottom.map(), &right, &mut out);
                    }
                }
            }
            BaseProvider::Explicit(e) => {
                let b = match bottom {
                    BArr::Ix(b) => *b,
                    _ => return out,
                };
                let j = e.cat.cod(b);
                for right in 0..e.cat.n_arrows() {
                    if e.cat.cod(right) != j {
                        continue;
                    }
                    for k in 0..e.cat.n_objects() {
                        for &top in e.cat.hom(k, e.cat.dom(right)) {
                            for &left in e.cat.hom(k, e.cat.dom(b)) {
                                if is_pullback_explicit(&e.cat, top as usize, left as usize, b, right)
                                {
                                    out.push(BSquare {
                                        top: BArr::Ix(top as usize),
                                        left: BArr::Ix(left as usize),
                                        bottom: BArr::Ix(b),
                                        right: BArr::Ix(right),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// A short display form for report messages.
    pub fn arrow_label(&self, f: &BArr) -> String {
        match (self, f) {
            (BaseProvider::Explicit(e), BArr::Ix(i)) => e.cat.arrows[*i].id.clone(),
            (_, BArr::Map(m)) => format!("{m}"),
            _ => format!("{f:?}"),
        }
    }
}

/// Pushes every in-universe pullback square over the finset cospan
/// (`bottom`, `right`): the chosen square relabeled along each bijection
/// from a universe set onto its apex.
fn finset_relabeled_squares(fb: &FinSetBase, bottom: &FinMap, right: &FinMap, out: &mut Vec<BSquare>) {
    let sq0 = finset::chosen_pullback(bottom, right).expect("cospan shares codomain");
    for k in &fb.universe {
        if k.len() != sq0.apex.len() {
            continue;
        }
        for phi in finset::all_bijections(k, &sq0.apex) {
            out.push(BSquare {
                top: BArr::Map(phi.then(&sq0.top).unwrap()),
                left: BArr::Map(phi.then(&sq0.left).unwrap()),
                bottom: BArr::Map(bottom.clone()),
                right: BArr::Map(right.clone()),
            });
        }
    }
}

/// Decides the pullback property of a commuting square in an explicit finite
/// category by enumerating all competing cones.
pub fn is_pullback_explicit(
    cat: &FinCategory,
    top: usize,
    left: usize,
    bottom: usize,
    right: usize,
) -> bool {
    let apex = cat.dom(top);
    if cat.dom(left) != apex
        || cat.cod(top) != cat.dom(right)
        || cat.cod(left) != cat.dom(bottom)
        || cat.cod(bottom) != cat.cod(right)
    {
        return false;
    }
    if cat.compose(right, top) != cat.compose(bottom, left) {
        return false;
    }
    for w in 0..cat.n_objects() {
        for &w1 in cat.hom(w, cat.dom(right)) {
            for &w2 in cat.hom(w, cat.dom(bottom)) {
                if cat.compose(right, w1 as usize) != cat.compose(bottom, w2 as usize) {
                    continue;
                }
                let mut count = 0;
                for &u in cat.hom(w, apex) {
                    if cat.compose(top, u as usize) == Some(w1 as usize)
                        && cat.compose(left, u as usize) == Some(w2 as usize)
                    {
                        count += 1;
                    }
                }
                if count != 1 {
                    return false;
                }
            }
        }
    }
    true
}

/// Computes a chosen-pullback table for an explicit category by exhaustive
/// search, picking the first pullback in canonical (apex, top, left) order
/// for each cospan. Cospans with no pullback are left absent.
pub fn compute_chosen_pullbacks(cat: &FinCategory) -> HashMap<(u32, u32), (u32, u32, u32)> {
    let mut chosen = HashMap::new();
    for bottom in 0..cat.n_arrows() {
        for right in 0..cat.n_arrows() {
            if cat.cod(bottom) != cat.cod(right) {
                continue;
            }
            'search: for k in 0..cat.n_objects() {
                for &top in cat.hom(k, cat.dom(right)) {
                    for &left in cat.hom(k, cat.dom(bottom)) {
                        if is_pullback_explicit(cat, top as usize, left as usize, bottom, right) {
                            chosen.insert(
                                (bottom as u32, right as u32),
                                (k as u32, top, left),
                            );
                            break 'search;
                        }
                    }
                }
            }
        }
    }
    chosen
}

/// The object/arrow tables of a projection functor from an extensional
/// category to the base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseFunctor {
    pub on_objects: Vec<BObj>,
    pub on_arrows: Vec<BArr>,
}

impl BaseFunctor {
    pub fn ob(&self, x: usize) -> &BObj {
        &self.on_objects[x]
    }

    pub fn arr(&self, f: usize) -> &BArr {
        &self.on_arrows[f]
    }
}

/// Checks functoriality of a projection into the base.
pub fn validate_base_functor(
    cat: &FinCategory,
    base: &BaseProvider,
    bf: &BaseFunctor,
) -> Vec<String> {
    let mut out = Vec::new();
    if bf.on_objects.len() != cat.n_objects() || bf.on_arrows.len() != cat.n_arrows() {
        out.push("projection table length mismatch".to_string());
        return out;
    }
    for x in &bf.on_objects {
        if !base.contains_obj(x) {
            out.push(format!("object image {x:?} outside the base"));
        }
    }
    for f in 0..cat.n_arrows() {
        let img = bf.arr(f);
        if base.dom(img) != *bf.ob(cat.dom(f)) || base.cod(img) != *bf.ob(cat.cod(f)) {
            out.push(format!("dom/cod not preserved on `{}`", cat.arrows[f].id));
        }
    }
    for x in 0..cat.n_objects() {
        if *bf.arr(cat.identity_of(x)) != base.id(bf.ob(x)) {
            out.push(format!("identity not preserved on `{}`", cat.objects[x]));
        }
    }
    for g in 0..cat.n_arrows() {
        for f in 0..cat.n_arrows() {
            if cat.dom(g) != cat.cod(f) {
                continue;
            }
            if let Some(gf) = cat.compose(g, f) {
                if base.compose(bf.arr(g), bf.arr(f)).as_ref() != Some(bf.arr(gf)) {
                    out.push(format!(
                        "composition not preserved on `{}`∘`{}`",
                        cat.arrows[g].id, cat.arrows[f].id
                    ));
                }
            }
        }
    }
    out
}

/// Is `h` cartesian with respect to the projection `bf: cat → base`?
pub fn is_cartesian_over_base(
    cat: &FinCategory,
    base: &BaseProvider,
    bf: &BaseFunctor,
    h: usize,
) -> bool {
    let y = cat.cod(h);
    let x = cat.dom(h);
    for v in cat.arrows_to(y) {
        let z = cat.dom(v);
        for w in base.arrows_between(bf.ob(z), bf.ob(x)) {
            if base.compose(bf.arr(h), &w).as_ref() != Some(bf.arr(v)) {
                continue;
            }
            let mut count = 0;
            for &u in cat.hom(z, x) {
                let u = u as usize;
                if *bf.arr(u) == w && cat.compose(h, u) == Some(v) {
                    count += 1;
                }
            }
            if count != 1 {
                return false;
            }
        }
    }
    true
}

/// Classifies a projection to the base by exhaustive search over lifting
/// problems, mirroring `fincat::classify_fibration` for base providers.
pub fn classify_projection(
    cat: &FinCategory,
    base: &BaseProvider,
    bf: &BaseFunctor,
) -> FibrationReport {
    let mut witnesses = Vec::new();
    let mut is_fibration_in_groupoids = true;
    let mut is_discrete_fibration = true;
    let mut is_discrete_opfibration = true;

    for f in base.all_arrows() {
        let fd = base.dom(&f);
        let fc = base.cod(&f);
        for y in 0..cat.n_objects() {
            if *bf.ob(y) != fc {
                continue;
            }
            let lifts: Vec<usize> = cat.arrows_to(y).filter(|&h| *bf.arr(h) == f).collect();
            if lifts.is_empty() {
                is_fibration_in_groupoids = false;
                witnesses.push(format!(
                    "no lift of {} with codomain `{}`",
                    base.arrow_label(&f),
                    cat.objects[y]
                ));
            }
            if lifts.len() != 1 {
                is_discrete_fibration = false;
            }
        }
        for x in 0..cat.n_objects() {
            if *bf.ob(x) != fd {
                continue;
            }
            let lifts: Vec<usize> = cat.arrows_from(x).filter(|&h| *bf.arr(h) == f).collect();
            if lifts.len() != 1 {
                is_discrete_opfibration = false;
            }
        }
    }
    if is_fibration_in_groupoids {
        for h in 0..cat.n_arrows() {
            if !is_cartesian_over_base(cat, base, bf, h) {
                is_fibration_in_groupoids = false;
                witnesses.push(format!("arrow `{}` is not cartesian", cat.arrows[h].id));
            }
        }
    }
    FibrationReport {
        is_groupoid: cat.is_groupoid(),
        is_fibration_in_groupoids,
        is_discrete_fibration,
        is_discrete_opfibration,
        witnesses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::CatBuilder;

    fn skeletal(bound: usize) -> BaseProvider {
        BaseProvider::FinSets(FinSetBase::skeletal(bound))
    }

    #[test]
    fn finset_base_basics() {
        let base = skeletal(2);
        assert_eq!(base.objects().len(), 3);
        let one = BObj::Set(FinSet::skeleton(1));
        let two = BObj::Set(FinSet::skeleton(2));
        assert_eq!(base.arrows_between(&two, &one).len(), 1);
        assert_eq!(base.arrows_between(&two, &two).len(), 4);
        assert_eq!(base.terminal(), Some(one));
    }

    #[test]
    fn finset_pullback_squares_with_right_are_pullbacks() {
        let base = skeletal(2);
        let two = FinSet::skeleton(2);
        let one = FinSet::skeleton(1);
        let bang = BArr::Map(finset::all_maps(&two, &one).pop().unwrap());
        let squares = base.pullback_squares_with_right(&bang);
        assert!(!squares.is_empty());
        for sq in &squares {
            assert!(base.is_pullback(sq));
        }
        // Apexes of size > 2 are outside the skeletal universe and excluded.
        assert!(squares.iter().all(|sq| base.dom(&sq.top).set().len() <= 2));
    }

    /// The poset category 0 → 1.
    fn poset2() -> FinCategory {
        let mut b: CatBuilder<(usize, usize)> = CatBuilder::new();
        let o0 = b.add_object("0".into());
        let o1 = b.add_object("1".into());
        b.add_arrow((0, 0), "id0".into(), o0, o0);
        b.add_arrow((1, 1), "id1".into(), o1, o1);
        b.add_arrow((0, 1), "s".into(), o0, o1);
        b.build(|x| (x, x), |g, f| (f.0, g.1))
    }

    #[test]
    fn explicit_chosen_pullbacks_of_a_poset() {
        let cat = poset2();
        let chosen = compute_chosen_pullbacks(&cat);
        // Every cospan of a finite poset with meets has a pullback.
        let s = cat.arrow_index("s").unwrap();
        let id1 = cat.arrow_index("id1").unwrap();
        assert!(chosen.contains_key(&(s as u32, s as u32)));
        assert!(chosen.contains_key(&(s as u32, id1 as u32)));
        let base = BaseProvider::Explicit(ExplicitBase { cat, chosen });
        let sq = base
            .chosen_pullback(&BArr::Ix(s), &BArr::Ix(s))
            .unwrap();
        assert!(base.is_pullback(&sq));
        let (dsq, delta) = base.diagonal_data(&BArr::Ix(s)).unwrap();
        assert_eq!(base.compose(&dsq.top, &delta), Some(base.id(&BObj::Ix(0))));
    }
}
