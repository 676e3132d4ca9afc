//! The fibered multicategory structure itself: the unique-special-lifting
//! verifier, contravariant reindexing, symmetry actions, endomorphisms,
//! monoids, and the Eckmann–Hilton checks.
//!
//! A fibered multicategory is a triple (d, p, special squares): a fibration
//! in groupoids `d: D → I`, a functor `p: M → I` agreeing with `d` on
//! objects, and a class of squares (top/bottom in D, left/right in M) over
//! base pullbacks, closed under pasting, such that every arrow of M has a
//! unique special lift over every admissible pullback with chosen d-lifts.
//!
//! Two implementations coexist: the extensional [`FiberedMulticategory`]
//! with full tables (verification, adversarial inputs, serialization) and
//! rule-based instances in the `standard` module for generated examples too
//! large to tabulate. Both sit behind the [`Multicat`] trait.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

use crate::base::{
    classify_projection, BArr, BObj, BSquare, BaseFunctor, BaseProvider, validate_base_functor,
};
use crate::fincat::{CatBuilder, FinCategory};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LiftError {
    #[error("no special lift exists for the configuration")]
    NoLift,
    #[error("the special lift is ambiguous ({0} candidates)")]
    AmbiguousLift(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("the d-arrow is not invertible")]
    NotIso,
}

/// The interface of a fibered multicategory instance: object/arrow
/// enumeration for both the D (reindexing) and M (multimap) layers over a
/// shared base, plus the special-square predicate.
pub trait Multicat {
    type Ob: Clone + Eq + Ord + Hash + Debug;
    type DArr: Clone + Eq + Ord + Hash + Debug;
    type MArr: Clone + Eq + Ord + Hash + Debug;

    fn base(&self) -> &BaseProvider;
    fn objects(&self) -> Vec<Self::Ob>;
    fn obj_proj(&self, x: &Self::Ob) -> BObj;

    fn objects_over(&self, i: &BObj) -> Vec<Self::Ob> {
        self.objects().into_iter().filter(|x| self.obj_proj(x) == *i).collect()
    }

    fn d_dom(&self, f: &Self::DArr) -> Self::Ob;
    fn d_cod(&self, f: &Self::DArr) -> Self::Ob;
    fn d_proj(&self, f: &Self::DArr) -> BArr;
    fn d_id(&self, x: &Self::Ob) -> Self::DArr;
    fn d_compose(&self, g: &Self::DArr, f: &Self::DArr) -> Option<Self::DArr>;
    /// All D-arrows from `x` to `y` over the base arrow `f`.
    fn d_hom_over(&self, x: &Self::Ob, y: &Self::Ob, f: &BArr) -> Vec<Self::DArr>;

    /// All D-arrows over `f` with codomain `y`.
    fn d_lifts_with_cod(&self, f: &BArr, y: &Self::Ob) -> Vec<Self::DArr> {
        let dom = self.base().dom(f);
        let mut out = Vec::new();
        for x in self.objects_over(&dom) {
            out.extend(self.d_hom_over(&x, y, f));
        }
        out
    }

    fn m_dom(&self, a: &Self::MArr) -> Self::Ob;
    fn m_cod(&self, a: &Self::MArr) -> Self::Ob;
    fn m_proj(&self, a: &Self::MArr) -> BArr;
    fn m_id(&self, x: &Self::Ob) -> Self::MArr;
    fn m_compose(&self, g: &Self::MArr, f: &Self::MArr) -> Option<Self::MArr>;
    /// All M-arrows from `x` to `y` over the base arrow `f`.
    fn m_hom_over(&self, x: &Self::Ob, y: &Self::Ob, f: &BArr) -> Vec<Self::MArr>;

    /// All M-arrows from `x` to `y` over any base arrow.
    fn m_hom_all(&self, x: &Self::Ob, y: &Self::Ob) -> Vec<Self::MArr> {
        let (px, py) = (self.obj_proj(x), self.obj_proj(y));
        let mut out = Vec::new();
        for f in self.base().arrows_between(&px, &py) {
            out.extend(self.m_hom_over(x, y, &f));
        }
        out
    }

    /// Whether the square with D-sides `top`/`bottom` and M-sides
    /// `right`/`left` (orientation: top: U→X, bottom: V→Y, right a: X→Y,
    /// left b: U→V) is special.
    fn is_special(
        &self,
        top: &Self::DArr,
        bottom: &Self::DArr,
        right: &Self::MArr,
        left: &Self::MArr,
    ) -> bool;

    /// A constructive special left completion over the pullback `sq`, when
    /// the implementation has a direct rule; `None` falls back to the
    /// enumeration in `special_lift` (the result is re-checked there).
    fn special_left(
        &self,
        _a: &Self::MArr,
        _sq: &BSquare,
        _lift_top: &Self::DArr,
        _lift_bottom: &Self::DArr,
    ) -> Option<Self::MArr> {
        None
    }

    fn ob_label(&self, x: &Self::Ob) -> String {
        format!("{x:?}")
    }
    fn d_label(&self, f: &Self::DArr) -> String {
        format!("{f:?}")
    }
    fn m_label(&self, a: &Self::MArr) -> String {
        format!("{a:?}")
    }
}

/// The unique special lift `b = f*a` of `a` over the base pullback `sq`,
/// along the given d-lifts of the square's top and bottom sides.
pub fn special_lift<T: Multicat>(
    fm: &T,
    a: &T::MArr,
    sq: &BSquare,
    lift_top: &T::DArr,
    lift_bottom: &T::DArr,
) -> Result<T::MArr, LiftError> {
    if fm.m_proj(a) != sq.right {
        return Err(LiftError::ShapeMismatch("right side must be p(a)".into()));
    }
    if fm.d_proj(lift_top) != sq.top || fm.d_cod(lift_top) != fm.m_dom(a) {
        return Err(LiftError::ShapeMismatch("bad top lift".into()));
    }
    if fm.d_proj(lift_bottom) != sq.bottom || fm.d_cod(lift_bottom) != fm.m_cod(a) {
        return Err(LiftError::ShapeMismatch("bad bottom lift".into()));
    }
    if !fm.base().is_pullback(sq) {
        return Err(LiftError::ShapeMismatch("base square is not a pullback".into()));
    }
    if let Some(b) = fm.special_left(a, sq, lift_top, lift_bottom) {
        if fm.m_proj(&b) == sq.left && fm.is_special(lift_top, lift_bottom, a, &b) {
            return Ok(b);
        }
    }
    let u = fm.d_dom(lift_top);
    let v = fm.d_dom(lift_bottom);
    let mut found = Vec::new();
    for b in fm.m_hom_over(&u, &v, &sq.left) {
        if fm.is_special(lift_top, lift_bottom, a, &b) {
            found.push(b);
        }
    }
    match found.len() {
        0 => Err(LiftError::NoLift),
        1 => Ok(found.pop().unwrap()),
        n => Err(LiftError::AmbiguousLift(n)),
    }
}

/// The symmetry action of an invertible D-arrow `g: X′ → X` on hom-sets
/// with codomain `y`: the bijection `M(X,y) → M(X′,y)` given by special
/// lifting over the pullback (base iso, id). Returns the graph of the
/// bijection as (a, g*a) pairs.
pub fn symmetry_action<T: Multicat>(
    fm: &T,
    y: &T::Ob,
    g: &T::DArr,
) -> Result<Vec<(T::MArr, T::MArr)>, LiftError> {
    let base = fm.base();
    let sigma = fm.d_proj(g);
    if !base.is_iso(&sigma) {
        return Err(LiftError::NotIso);
    }
    // g must be invertible in D: find an inverse over the base inverse.
    let x = fm.d_cod(g);
    let xp = fm.d_dom(g);
    let sigma_inv = base.inverse(&sigma).expect("checked iso");
    let has_inverse = fm.d_hom_over(&x, &xp, &sigma_inv).into_iter().any(|h| {
        fm.d_compose(g, &h).map(|c| c == fm.d_id(&x)).unwrap_or(false)
            && fm.d_compose(&h, g).map(|c| c == fm.d_id(&xp)).unwrap_or(false)
    });
    if !has_inverse {
        return Err(LiftError::NotIso);
    }
    let py = fm.obj_proj(y);
    let idy = fm.d_id(y);
    let mut graph = Vec::new();
    for a in fm.m_hom_all(&x, y) {
        let pa = fm.m_proj(&a);
        let sq = BSquare {
            top: sigma.clone(),
            left: base.compose(&pa, &sigma).expect("composable"),
            bottom: base.id(&py),
            right: pa,
        };
        let b = special_lift(fm, &a, &sq, g, &idy)?;
        graph.push((a, b));
    }
    Ok(graph)
}

/// An endomorphism: an M-arrow together with a parallel D-arrow with
/// d(t) = p(a).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endomorphism<T: Multicat> {
    pub a: T::MArr,
    pub t: T::DArr,
}

impl<T: Multicat> Endomorphism<T> {
    pub fn new(fm: &T, a: T::MArr, t: T::DArr) -> Result<Self, LiftError> {
        if fm.d_proj(&t) != fm.m_proj(&a)
            || fm.d_dom(&t) != fm.m_dom(&a)
            || fm.d_cod(&t) != fm.m_cod(&a)
        {
            return Err(LiftError::ShapeMismatch("t must be parallel to a with dt = pa".into()));
        }
        Ok(Endomorphism { a, t })
    }
}

/// Decides whether two endomorphisms with a common codomain commute, given a
/// base pullback completing their projections and a d-lifted completion.
///
/// The square `sq` must have right = p(e1.a) and bottom = p(e2.a);
/// `lift_top` lies over sq.top with codomain dom(e1.a) and `lift_left` over
/// sq.left with codomain dom(e2.a), sharing their domain Z. The two
/// reindexings b (of e1.a, horizontally) and b′ (of e2.a, vertically) are
/// computed by special lifting and the result is whether a∘b′ = a′∘b.
pub fn commute_endomorphisms<T: Multicat>(
    fm: &T,
    e1: &Endomorphism<T>,
    e2: &Endomorphism<T>,
    sq: &BSquare,
    lift_top: &T::DArr,
    lift_left: &T::DArr,
) -> Result<bool, LiftError> {
    if fm.m_cod(&e1.a) != fm.m_cod(&e2.a) {
        return Err(LiftError::ShapeMismatch("endomorphisms must share their codomain".into()));
    }
    if sq.right != fm.m_proj(&e1.a) || sq.bottom != fm.m_proj(&e2.a) {
        return Err(LiftError::ShapeMismatch("square must complete p(e1.a), p(e2.a)".into()));
    }
    if fm.d_dom(lift_top) != fm.d_dom(lift_left) {
        return Err(LiftError::ShapeMismatch("the two lifts must share their domain".into()));
    }
    // b: Z → X′ reindexes e1.a horizontally (bottom side t′ = e2.t).
    let b = special_lift(fm, &e1.a, sq, lift_top, &e2.t)?;
    // b′: Z → X reindexes e2.a vertically, over the transposed pullback.
    let sq_t = BSquare {
        top: sq.left.clone(),
        left: sq.top.clone(),
        bottom: sq.right.clone(),
        right: sq.bottom.clone(),
    };
    let b_prime = special_lift(fm, &e2.a, &sq_t, lift_left, &e1.t)?;
    let lhs = fm
        .m_compose(&e1.a, &b_prime)
        .ok_or_else(|| LiftError::ShapeMismatch("a∘b′ not composable".into()))?;
    let rhs = fm
        .m_compose(&e2.a, &b)
        .ok_or_else(|| LiftError::ShapeMismatch("a′∘b not composable".into()))?;
    Ok(lhs == rhs)
}

/// Enumerates every admissible (pullback, lifted-completion) choice for the
/// pair of endomorphisms and returns the commutation flag computed for each;
/// by the independence property all entries must agree.
pub fn commute_endomorphisms_all_choices<T: Multicat>(
    fm: &T,
    e1: &Endomorphism<T>,
    e2: &Endomorphism<T>,
) -> Result<Vec<bool>, LiftError> {
    let base = fm.base();
    let x1 = fm.m_dom(&e1.a);
    let x2 = fm.m_dom(&e2.a);
    let mut flags = Vec::new();
    for sq in base.pullback_squares_with_right(&fm.m_proj(&e1.a)) {
        if sq.bottom != fm.m_proj(&e2.a) {
            continue;
        }
        for lift_top in fm.d_lifts_with_cod(&sq.top, &x1) {
            for lift_left in fm.d_lifts_with_cod(&sq.left, &x2) {
                if fm.d_dom(&lift_top) != fm.d_dom(&lift_left) {
                    continue;
                }
                flags.push(commute_endomorphisms(fm, e1, e2, &sq, &lift_top, &lift_left)?);
            }
        }
    }
    Ok(flags)
}

/// A monoid in a fibered multicategory: a section of d and a section of p
/// coinciding on objects, lifting base pullbacks to special squares.
#[derive(Debug, Clone)]
pub struct MonoidInM<T: Multicat> {
    pub obj: BTreeMap<BObj, T::Ob>,
    pub d_sec: BTreeMap<BArr, T::DArr>,
    pub p_sec: BTreeMap<BArr, T::MArr>,
}

/// Checks the monoid-in-M axioms: both sections are total functorial
/// sections, agree on objects, and lift every in-universe base pullback
/// square to a special square.
pub fn verify_monoid_in_m<T: Multicat>(fm: &T, m: &MonoidInM<T>) -> Vec<String> {
    let base = fm.base();
    let mut out = Vec::new();
    for i in base.objects() {
        match m.obj.get(&i) {
            None => out.push(format!("no object assigned over {i:?}")),
            Some(x) => {
                if fm.obj_proj(x) != i {
                    out.push(format!("object over {i:?} projects elsewhere"));
                }
            }
        }
    }
    let arrows = base.all_arrows();
    for f in &arrows {
        let (i, j) = (base.dom(f), base.cod(f));
        let (xi, xj) = match (m.obj.get(&i), m.obj.get(&j)) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        match m.d_sec.get(f) {
            None => out.push(format!("d-section missing on {}", base.arrow_label(f))),
            Some(t) => {
                if fm.d_proj(t) != *f || fm.d_dom(t) != *xi || fm.d_cod(t) != *xj {
                    out.push(format!("d-section ill-shaped on {}", base.arrow_label(f)));
                }
            }
        }
        match m.p_sec.get(f) {
            None => out.push(format!("p-section missing on {}", base.arrow_label(f))),
            Some(a) => {
                if fm.m_proj(a) != *f || fm.m_dom(a) != *xi || fm.m_cod(a) != *xj {
                    out.push(format!("p-section ill-shaped on {}", base.arrow_label(f)));
                }
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    // Functoriality of both sections.
    for i in base.objects() {
        let idi = base.id(&i);
        let x = &m.obj[&i];
        if m.d_sec[&idi] != fm.d_id(x) {
            out.push(format!("d-section does not preserve the identity of {i:?}"));
        }
        if m.p_sec[&idi] != fm.m_id(x) {
            out.push(format!("p-section does not preserve the identity of {i:?}"));
        }
    }
    for g in &arrows {
        for f in &arrows {
            if base.dom(g) != base.cod(f) {
                continue;
            }
            let gf = base.compose(g, f).expect("composable");
            if fm.d_compose(&m.d_sec[g], &m.d_sec[f]).as_ref() != Some(&m.d_sec[&gf]) {
                out.push(format!(
                    "d-section not functorial on {}∘{}",
                    base.arrow_label(g),
                    base.arrow_label(f)
                ));
            }
            if fm.m_compose(&m.p_sec[g], &m.p_sec[f]).as_ref() != Some(&m.p_sec[&gf]) {
                out.push(format!(
                    "p-section not functorial on {}∘{}",
                    base.arrow_label(g),
                    base.arrow_label(f)
                ));
            }
        }
    }
    // Base pullbacks must be lifted to special squares.
    for right in &arrows {
        for sq in base.pullback_squares_with_right(right) {
            let (top, bottom) = (&m.d_sec[&sq.top], &m.d_sec[&sq.bottom]);
            let (r, l) = (&m.p_sec[&sq.right], &m.p_sec[&sq.left]);
            if !fm.is_special(top, bottom, r, l) {
                out.push(format!(
                    "pullback over ({}, {}) not lifted to a special square",
                    base.arrow_label(&sq.bottom),
                    base.arrow_label(&sq.right)
                ));
            }
        }
    }
    out
}

/// Checks that a family of vertical arrows α is a morphism of monoids
/// m → m′: for every base arrow f the §-square (t_f, t′_f, α) is special and
/// the a-sides commute with α.
pub fn verify_monoid_morphism<T: Multicat>(
    fm: &T,
    m1: &MonoidInM<T>,
    m2: &MonoidInM<T>,
    alpha: &BTreeMap<BObj, T::MArr>,
) -> Vec<String> {
    let base = fm.base();
    let mut out = Vec::new();
    for i in base.objects() {
        match alpha.get(&i) {
            None => out.push(format!("α missing at {i:?}")),
            Some(al) => {
                if !base.is_id(&fm.m_proj(al))
                    || fm.m_dom(al) != m1.obj[&i]
                    || fm.m_cod(al) != m2.obj[&i]
                {
                    out.push(format!("α at {i:?} is not a vertical arrow m(I) → m′(I)"));
                }
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    for f in base.all_arrows() {
        let (i, j) = (base.dom(&f), base.cod(&f));
        let (t1, t2) = (&m1.d_sec[&f], &m2.d_sec[&f]);
        let (a1, a2) = (&m1.p_sec[&f], &m2.p_sec[&f]);
        if !fm.is_special(t1, t2, &alpha[&j], &alpha[&i]) {
            out.push(format!("square over {} not special", base.arrow_label(&f)));
        }
        let lhs = fm.m_compose(&alpha[&j], a1);
        let rhs = fm.m_compose(a2, &alpha[&i]);
        if lhs != rhs || lhs.is_none() {
            out.push(format!("square over {} not commutative", base.arrow_label(&f)));
        }
    }
    out
}

/// A fibered monoid presented by a (d, p) pair of projections with shared
/// objects: d must be a fibration in groupoids (discrete, in the simplified
/// case), p a discrete opfibration, and for discrete d the two transport
/// paths around every base pullback must agree (§-coherence).
#[derive(Debug, Clone)]
pub struct DpPair {
    pub base: BaseProvider,
    pub d_cat: FinCategory,
    pub p_cat: FinCategory,
    pub d: BaseFunctor,
    pub p: BaseFunctor,
}

/// Verifies the fibered-monoid axioms of a (d, p) pair.
pub fn verify_fibered_monoid(dp: &DpPair) -> Vec<String> {
    let mut out = Vec::new();
    if dp.d_cat.objects != dp.p_cat.objects {
        out.push("d and p do not share their objects".into());
        return out;
    }
    if dp.d.on_objects != dp.p.on_objects {
        out.push("d and p do not agree on objects".into());
        return out;
    }
    out.extend(
        validate_base_functor(&dp.d_cat, &dp.base, &dp.d)
            .into_iter()
            .map(|e| format!("d: {e}")),
    );
    out.extend(
        validate_base_functor(&dp.p_cat, &dp.base, &dp.p)
            .into_iter()
            .map(|e| format!("p: {e}")),
    );
    if !out.is_empty() {
        return out;
    }
    let d_report = classify_projection(&dp.d_cat, &dp.base, &dp.d);
    if !d_report.is_fibration_in_groupoids {
        out.push("d is not a fibration in groupoids".into());
    }
    let p_report = classify_projection(&dp.p_cat, &dp.base, &dp.p);
    if !p_report.is_discrete_opfibration {
        out.push("p is not a discrete opfibration".into());
    }
    if !d_report.is_discrete_fibration || !out.is_empty() {
        return out;
    }
    // Discrete case: path coherence over every in-universe base pullback.
    let d_lift_dom = |top: &BArr, x: usize| -> Option<usize> {
        dp.d_cat
            .arrows_to(x)
            .find(|&h| dp.d.arr(h) == top)
            .map(|h| dp.d_cat.dom(h))
    };
    let p_lift_cod = |side: &BArr, x: usize| -> Option<usize> {
        dp.p_cat
            .arrows_from(x)
            .find(|&h| dp.p.arr(h) == side)
            .map(|h| dp.p_cat.cod(h))
    };
    for right in dp.base.all_arrows() {
        let i = dp.base.dom(&right);
        for sq in dp.base.pullback_squares_with_right(&right) {
            for x in 0..dp.d_cat.n_objects() {
                if *dp.d.ob(x) != i {
                    continue;
                }
                // Path 1: d-lift along the top, then p-lift along the left.
                let path1 = d_lift_dom(&sq.top, x).and_then(|u| p_lift_cod(&sq.left, u));
                // Path 2: p-lift along the right, then d-lift along the bottom.
                let path2 = p_lift_cod(&sq.right, x).and_then(|u| d_lift_dom(&sq.bottom, u));
                if path1 != path2 || path1.is_none() {
                    out.push(format!(
                        "transport paths disagree over pullback ({}, {}) at `{}`",
                        dp.base.arrow_label(&sq.bottom),
                        dp.base.arrow_label(&sq.right),
                        dp.d_cat.objects[x]
                    ));
                }
            }
        }
    }
    out
}

/// The Eckmann–Hilton report for two monoids at a base object I.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EckmannHiltonReport {
    /// m and m′ lift the diagonal Δ: I → I×I to the same endomorphism.
    pub shared_identity: bool,
    /// The liftings of !: I → 1 commute.
    pub commuting: bool,
    /// a_! = a′_! (must follow from shared_identity ∧ commuting).
    pub collapse_over_i: bool,
    /// The Δ-liftings commute.
    pub identities_commute: bool,
    /// a_Δ = a′_Δ (must follow from identities_commute).
    pub identities_coincide: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EckmannHiltonError {
    #[error("the base lacks the products needed at I: {0}")]
    MissingProducts(String),
    #[error("the monoids differ on the objects involved; the comparison is not defined")]
    ObjectMismatch,
    #[error("lifting failed: {0}")]
    Lift(#[from] LiftError),
}

/// Evaluates the Eckmann–Hilton propositions for two monoids at I: shared
/// diagonal identity plus commuting !-liftings force a_! = a′_!, and
/// commuting Δ-liftings force coinciding identities.
pub fn eckmann_hilton<T: Multicat>(
    fm: &T,
    m1: &MonoidInM<T>,
    m2: &MonoidInM<T>,
    i: &BObj,
) -> Result<EckmannHiltonReport, EckmannHiltonError> {
    let base = fm.base();
    let one = base
        .terminal()
        .ok_or_else(|| EckmannHiltonError::MissingProducts("no terminal object".into()))?;
    let bang = {
        let arrows = base.arrows_between(i, &one);
        arrows
            .into_iter()
            .next()
            .ok_or_else(|| EckmannHiltonError::MissingProducts("no map I → 1".into()))?
    };
    let (prod_sq, delta) = base
        .diagonal_data(&bang)
        .map_err(|e| EckmannHiltonError::MissingProducts(e.to_string()))?;
    let ixi = base.dom(&prod_sq.top);
    if !base.contains_obj(&ixi) {
        return Err(EckmannHiltonError::MissingProducts("I×I outside the universe".into()));
    }
    for obj in [i, &one, &ixi] {
        if m1.obj.get(obj) != m2.obj.get(obj) || m1.obj.get(obj).is_none() {
            return Err(EckmannHiltonError::ObjectMismatch);
        }
    }
    // Shared identity: both monoids lift Δ to the same endomorphism.
    let shared_identity = m1.d_sec.get(&delta) == m2.d_sec.get(&delta)
        && m1.p_sec.get(&delta) == m2.p_sec.get(&delta)
        && m1.p_sec.contains_key(&delta);
    // Commutation of the !-liftings, over the product pullback I×I.
    let e1 = Endomorphism { a: m1.p_sec[&bang].clone(), t: m1.d_sec[&bang].clone() };
    let e2 = Endomorphism { a: m2.p_sec[&bang].clone(), t: m2.d_sec[&bang].clone() };
    let commuting = commute_endomorphisms(
        fm,
        &e1,
        &e2,
        &prod_sq,
        &m1.d_sec[&prod_sq.top],
        &m2.d_sec[&prod_sq.left],
    )?;
    let collapse_over_i = e1.a == e2.a && e1.t == e2.t;
    // Commutation of the Δ-liftings, over the pullback (id, id; Δ, Δ).
    let idi = base.id(i);
    let delta_sq = BSquare {
        top: idi.clone(),
        left: idi.clone(),
        bottom: delta.clone(),
        right: delta.clone(),
    };
    let ed1 = Endomorphism { a: m1.p_sec[&delta].clone(), t: m1.d_sec[&delta].clone() };
    let ed2 = Endomorphism { a: m2.p_sec[&delta].clone(), t: m2.d_sec[&delta].clone() };
    let x = &m1.obj[i];
    let idx = fm.d_id(x);
    let identities_commute = commute_endomorphisms(fm, &ed1, &ed2, &delta_sq, &idx, &idx)?;
    let identities_coincide = ed1.a == ed2.a && ed1.t == ed2.t;
    Ok(EckmannHiltonReport {
        shared_identity,
        commuting,
        collapse_over_i,
        identities_commute,
        identities_coincide,
    })
}

/// A violation found by `verify_axioms`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    /// obj D ≠ obj M, or d and p disagree on objects.
    ObjectMismatch { detail: String },
    /// A stored square is ill-shaped or does not project to a base pullback.
    MalformedSquare { square: String, detail: String },
    /// d fails to be a fibration in groupoids.
    NotFibrationInGroupoids { witness: String },
    /// A required identity square is missing.
    MissingIdentitySquare { arrow: String },
    /// Two stored squares paste (horizontally or vertically) outside the set.
    NotClosed { direction: &'static str, s1: String, s2: String },
    /// No special left completion exists for the configuration.
    ExistenceViolation { arrow: String, square: String },
    /// Several special left completions exist for the configuration.
    UniquenessViolation { arrow: String, square: String, count: usize },
}

/// The extensional fibered multicategory: full tables for D and M, the two
/// projections to the base, and the special squares stored as id quadruples
/// (top, bottom, right, left).
#[derive(Debug, Clone)]
pub struct FiberedMulticategory {
    pub base: BaseProvider,
    pub d_cat: FinCategory,
    pub m_cat: FinCategory,
    pub d: BaseFunctor,
    pub p: BaseFunctor,
    pub special: BTreeSet<(u32, u32, u32, u32)>,
}

impl FiberedMulticategory {
    pub fn square_label(&self, sq: (u32, u32, u32, u32)) -> String {
        format!(
            "(top `{}`, bottom `{}`, right `{}`, left `{}`)",
            self.d_cat.arrows[sq.0 as usize].id,
            self.d_cat.arrows[sq.1 as usize].id,
            self.m_cat.arrows[sq.2 as usize].id,
            self.m_cat.arrows[sq.3 as usize].id
        )
    }
}

impl Multicat for FiberedMulticategory {
    type Ob = usize;
    type DArr = usize;
    type MArr = usize;

    fn base(&self) -> &BaseProvider {
        &self.base
    }

    fn objects(&self) -> Vec<usize> {
        (0..self.d_cat.n_objects()).collect()
    }

    fn obj_proj(&self, x: &usize) -> BObj {
        self.d.ob(*x).clone()
    }

    fn d_dom(&self, f: &usize) -> usize {
        self.d_cat.dom(*f)
    }
    fn d_cod(&self, f: &usize) -> usize {
        self.d_cat.cod(*f)
    }
    fn d_proj(&self, f: &usize) -> BArr {
        self.d.arr(*f).clone()
    }
    fn d_id(&self, x: &usize) -> usize {
        self.d_cat.identity_of(*x)
    }
    fn d_compose(&self, g: &usize, f: &usize) -> Option<usize> {
        self.d_cat.compose(*g, *f)
    }
    fn d_hom_over(&self, x: &usize, y: &usize, f: &BArr) -> Vec<usize> {
        self.d_cat
            .hom(*x, *y)
            .iter()
            .map(|&h| h as usize)
            .filter(|&h| self.d.arr(h) == f)
            .collect()
    }

    fn m_dom(&self, a: &usize) -> usize {
        self.m_cat.dom(*a)
    }
    fn m_cod(&self, a: &usize) -> usize {
        self.m_cat.cod(*a)
    }
    fn m_proj(&self, a: &usize) -> BArr {
        self.p.arr(*a).clone()
    }
    fn m_id(&self, x: &usize) -> usize {
        self.m_cat.identity_of(*x)
    }
    fn m_compose(&self, g: &usize, f: &usize) -> Option<usize> {
        self.m_cat.compose(*g, *f)
    }
    fn m_hom_over(&self, x: &usize, y: &usize, f: &BArr) -> Vec<usize> {
        self.m_cat
            .hom(*x, *y)
            .iter()
            .map(|&a| a as usize)
            .filter(|&a| self.p.arr(a) == f)
            .collect()
    }

    fn is_special(&self, top: &usize, bottom: &usize, right: &usize, left: &usize) -> bool {
        self.special
            .contains(&(*top as u32, *bottom as u32, *right as u32, *left as u32))
    }

    fn ob_label(&self, x: &usize) -> String {
        self.d_cat.objects[*x].clone()
    }
    fn d_label(&self, f: &usize) -> String {
        self.d_cat.arrows[*f].id.clone()
    }
    fn m_label(&self, a: &usize) -> String {
        self.m_cat.arrows[*a].id.clone()
    }
}

/// Exhaustively verifies the fibered-multicategory axioms of an extensional
/// instance:
///
/// 1. d is a fibration in groupoids (over the in-universe base arrows);
/// 2. the special squares form a sub double category of the squares over
///    base pullbacks (identity squares present, closed under horizontal and
///    vertical pasting);
/// 3. unique special lifting: for every M-arrow, every in-universe base
///    pullback with right side p(a) and every pair of d-lifts of its top and
///    bottom there is exactly one special left completion.
pub fn verify_axioms(fm: &FiberedMulticategory) -> Vec<AxiomViolation> {
    let mut out = Vec::new();
    // Object coherence.
    if fm.d_cat.objects != fm.m_cat.objects {
        out.push(AxiomViolation::ObjectMismatch { detail: "obj D ≠ obj M".into() });
        return out;
    }
    if fm.d.on_objects != fm.p.on_objects {
        out.push(AxiomViolation::ObjectMismatch { detail: "d ≠ p on objects".into() });
        return out;
    }
    // Well-formedness of the stored squares.
    for &sq in &fm.special {
        let (t, b, r, l) = (sq.0 as usize, sq.1 as usize, sq.2 as usize, sq.3 as usize);
        let shape_ok = fm.d_cat.cod(t) == fm.m_cat.dom(r)
            && fm.d_cat.cod(b) == fm.m_cat.cod(r)
            && fm.d_cat.dom(t) == fm.m_cat.dom(l)
            && fm.d_cat.dom(b) == fm.m_cat.cod(l);
        if !shape_ok {
            out.push(AxiomViolation::MalformedSquare {
                square: fm.square_label(sq),
                detail: "sides do not match up".into(),
            });
            continue;
        }
        let bsq = BSquare {
            top: fm.d.arr(t).clone(),
            left: fm.p.arr(l).clone(),
            bottom: fm.d.arr(b).clone(),
            right: fm.p.arr(r).clone(),
        };
        if !fm.base.is_pullback(&bsq) {
            out.push(AxiomViolation::MalformedSquare {
                square: fm.square_label(sq),
                detail: "projection is not a base pullback".into(),
            });
        }
    }
    // (1) d is a fibration in groupoids.
    let report = classify_projection(&fm.d_cat, &fm.base, &fm.d);
    if !report.is_fibration_in_groupoids {
        for w in report.witnesses {
            out.push(AxiomViolation::NotFibrationInGroupoids { witness: w });
        }
    }
    // (2a) identity squares.
    for h in 0..fm.d_cat.n_arrows() {
        let (x, y) = (fm.d_cat.dom(h), fm.d_cat.cod(h));
        let key = (
            h as u32,
            h as u32,
            fm.m_cat.identity_of(y) as u32,
            fm.m_cat.identity_of(x) as u32,
        );
        if !fm.special.contains(&key) {
            out.push(AxiomViolation::MissingIdentitySquare {
                arrow: format!("D-arrow `{}`", fm.d_cat.arrows[h].id),
            });
        }
    }
    for a in 0..fm.m_cat.n_arrows() {
        let (x, y) = (fm.m_cat.dom(a), fm.m_cat.cod(a));
        let key = (
            fm.d_cat.identity_of(x) as u32,
            fm.d_cat.identity_of(y) as u32,
            a as u32,
            a as u32,
        );
        if !fm.special.contains(&key) {
            out.push(AxiomViolation::MissingIdentitySquare {
                arrow: format!("M-arrow `{}`", fm.m_cat.arrows[a].id),
            });
        }
    }
    // (2b) closure under pasting. Index squares for the two directions.
    let mut by_top_cods: HashMap<(u32, u32, u32), Vec<(u32, u32, u32, u32)>> = HashMap::new();
    let mut by_top: HashMap<u32, Vec<(u32, u32, u32, u32)>> = HashMap::new();
    for &sq in &fm.special {
        // For horizontal pasting to the left of `sq`: candidates s2 with
        // right = sq.left, top codomain = dom(sq.top), bottom codomain =
        // dom(sq.bottom).
        by_top_cods
            .entry((sq.2, fm.d_cat.cod(sq.0 as usize) as u32, fm.d_cat.cod(sq.1 as usize) as u32))
            .or_default()
            .push(sq);
        by_top.entry(sq.0).or_default().push(sq);
    }
    for &s1 in &fm.special {
        // Horizontal: s2 pastes on the left of s1 when s2.right = s1.left.
        let key = (
            s1.3,
            fm.d_cat.dom(s1.0 as usize) as u32,
            fm.d_cat.dom(s1.1 as usize) as u32,
        );
        if let Some(cands) = by_top_cods.get(&key) {
            for &s2 in cands {
                if fm.d_cat.cod(s2.0 as usize) != fm.d_cat.dom(s1.0 as usize)
                    || fm.d_cat.cod(s2.1 as usize) != fm.d_cat.dom(s1.1 as usize)
                {
                    continue;
                }
                let top = fm.d_cat.compose(s1.0 as usize, s2.0 as usize).unwrap();
                let bottom = fm.d_cat.compose(s1.1 as usize, s2.1 as usize).unwrap();
                let comp = (top as u32, bottom as u32, s1.2, s2.3);
                if !fm.special.contains(&comp) {
                    out.push(AxiomViolation::NotClosed {
                        direction: "horizontal",
                        s1: fm.square_label(s1),
                        s2: fm.square_label(s2),
                    });
                }
            }
        }
        // Vertical: s2 pastes below s1 when s2.top = s1.bottom.
        if let Some(cands) = by_top.get(&s1.1) {
            for &s2 in cands {
                let right = match fm.m_cat.compose(s2.2 as usize, s1.2 as usize) {
                    Some(r) => r,
                    None => continue,
                };
                let left = match fm.m_cat.compose(s2.3 as usize, s1.3 as usize) {
                    Some(l) => l,
                    None => continue,
                };
                let comp = (s1.0, s2.1, right as u32, left as u32);
                if !fm.special.contains(&comp) {
                    out.push(AxiomViolation::NotClosed {
                        direction: "vertical",
                        s1: fm.square_label(s1),
                        s2: fm.square_label(s2),
                    });
                }
            }
        }
    }
    // (3) unique special lifting. Index stored squares by (top, bottom, right);
    // completions for a given base square must also project to its left side.
    let mut completions: HashMap<(u32, u32, u32), Vec<u32>> = HashMap::new();
    for &sq in &fm.special {
        completions.entry((sq.0, sq.1, sq.2)).or_default().push(sq.3);
    }
    for a in 0..fm.m_cat.n_arrows() {
        let pa = fm.p.arr(a).clone();
        let (x, y) = (fm.m_cat.dom(a), fm.m_cat.cod(a));
        for bsq in fm.base.pullback_squares_with_right(&pa) {
            for lt in fm.d_lifts_with_cod(&bsq.top, &x) {
                for lb in fm.d_lifts_with_cod(&bsq.bottom, &y) {
                    let key = (lt as u32, lb as u32, a as u32);
                    let matching = completions
                        .get(&key)
                        .map(|lefts| {
                            lefts
                                .iter()
                                .filter(|&&l| fm.p.arr(l as usize) == &bsq.left)
                                .count()
                        })
                        .unwrap_or(0);
                    let square = format!(
                        "(top `{}`, bottom `{}`)",
                        fm.d_cat.arrows[lt].id, fm.d_cat.arrows[lb].id
                    );
                    match matching {
                        1 => {}
                        0 => out.push(AxiomViolation::ExistenceViolation {
                            arrow: fm.m_cat.arrows[a].id.clone(),
                            square,
                        }),
                        n => out.push(AxiomViolation::UniquenessViolation {
                            arrow: fm.m_cat.arrows[a].id.clone(),
                            square,
                            count: n,
                        }),
                    }
                }
            }
        }
    }
    out
}

/// A materialized instance together with the arrow indexing used to build
/// it, so callers can translate between trait-level arrows and the indices
/// of the extensional categories.
pub struct Materialized<T: Multicat> {
    pub fm: FiberedMulticategory,
    pub d_key: HashMap<T::DArr, usize>,
    pub m_key: HashMap<T::MArr, usize>,
    pub d_arrs: Vec<T::DArr>,
    pub m_arrs: Vec<T::MArr>,
}

/// Materializes any `Multicat` implementation into an extensional
/// `FiberedMulticategory` by enumerating its objects, arrows and special
/// squares over the base universe.
pub fn materialize<T: Multicat>(fm: &T) -> FiberedMulticategory {
    materialize_keyed(fm).fm
}

/// As `materialize`, but also returns the arrow-to-index maps.
pub fn materialize_keyed<T: Multicat>(fm: &T) -> Materialized<T> {
    let mut objects = fm.objects();
    objects.sort();
    let obj_ix: HashMap<T::Ob, usize> = objects.iter().cloned().zip(0..).collect();

    let mut db: CatBuilder<T::DArr> = CatBuilder::new();
    let mut mb: CatBuilder<T::MArr> = CatBuilder::new();
    for x in &objects {
        db.add_object(fm.ob_label(x));
        mb.add_object(fm.ob_label(x));
    }
    let mut d_proj: Vec<BArr> = Vec::new();
    let mut m_proj: Vec<BArr> = Vec::new();
    let mut d_key: HashMap<T::DArr, usize> = HashMap::new();
    let mut d_arrs: Vec<T::DArr> = Vec::new();
    let mut lifts_by: HashMap<(BArr, T::Ob), Vec<T::DArr>> = HashMap::new();
    let mut m_key: HashMap<T::MArr, usize> = HashMap::new();
    let mut m_arrs: Vec<T::MArr> = Vec::new();
    let mut m_by: HashMap<(T::Ob, T::Ob, BArr), Vec<T::MArr>> = HashMap::new();
    for x in &objects {
        for y in &objects {
            let (px, py) = (fm.obj_proj(x), fm.obj_proj(y));
            for f in fm.base().arrows_between(&px, &py) {
                let mut darrs = fm.d_hom_over(x, y, &f);
                darrs.sort();
                for h in darrs {
                    db.add_arrow(h.clone(), fm.d_label(&h), obj_ix[x], obj_ix[y]);
                    d_proj.push(f.clone());
                    d_key.insert(h.clone(), d_arrs.len());
                    lifts_by.entry((f.clone(), y.clone())).or_default().push(h.clone());
                    d_arrs.push(h);
                }
                let mut marrs = fm.m_hom_over(x, y, &f);
                marrs.sort();
                for a in marrs {
                    mb.add_arrow(a.clone(), fm.m_label(&a), obj_ix[x], obj_ix[y]);
                    m_proj.push(f.clone());
                    m_key.insert(a.clone(), m_arrs.len());
                    m_by.entry((x.clone(), y.clone(), f.clone())).or_default().push(a.clone());
                    m_arrs.push(a);
                }
            }
        }
    }
    let d_cat = db.build(
        |x| fm.d_id(&objects[x]),
        |g, f| fm.d_compose(g, f).expect("composable D-arrows"),
    );
    let m_cat = mb.build(
        |x| fm.m_id(&objects[x]),
        |g, f| fm.m_compose(g, f).expect("composable M-arrows"),
    );
    // Special squares: for each M-arrow, every in-universe pullback square
    // with right side p(a), every d-lift pair, every special completion.
    let empty_d: Vec<T::DArr> = Vec::new();
    let empty_m: Vec<T::MArr> = Vec::new();
    let mut special = BTreeSet::new();
    for (a, &ai) in &m_key {
        let pa = fm.m_proj(a);
        let (x, y) = (fm.m_dom(a), fm.m_cod(a));
        for bsq in fm.base().pullback_squares_with_right(&pa) {
            let tops = lifts_by.get(&(bsq.top.clone(), x.clone())).unwrap_or(&empty_d);
            let bottoms = lifts_by.get(&(bsq.bottom.clone(), y.clone())).unwrap_or(&empty_d);
            for lt in tops {
                for lb in bottoms {
                    let (u, v) = (fm.d_dom(lt), fm.d_dom(lb));
                    let cands =
                        m_by.get(&(u, v, bsq.left.clone())).unwrap_or(&empty_m);
                    for cand in cands {
                        if fm.is_special(lt, lb, a, cand) {
                            special.insert((
                                d_key[lt] as u32,
                                d_key[lb] as u32,
                                ai as u32,
                                m_key[cand] as u32,
                            ));
                        }
                    }
                }
            }
        }
    }
    let base = fm.base().clone();
    let out = FiberedMulticategory {
        base,
        d_cat,
        m_cat,
        d: BaseFunctor {
            on_objects: objects.iter().map(|x| fm.obj_proj(x)).collect(),
            on_arrows: d_proj,
        },
        p: BaseFunctor {
            on_objects: objects.iter().map(|x| fm.obj_proj(x)).collect(),
            on_arrows: m_proj,
        },
        special,
    };
    Materialized { fm: out, d_key, m_key, d_arrs, m_arrs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{compute_chosen_pullbacks, ExplicitBase};

    /// The poset category 0 → 1 → 2 (a chain with composites).
    fn chain3() -> FinCategory {
        let mut b: CatBuilder<(usize, usize)> = CatBuilder::new();
        for i in 0..3 {
            b.add_object(i.to_string());
        }
        for i in 0..3 {
            for j in i..3 {
                b.add_arrow((i, j), format!("{i}->{j}"), i, j);
            }
        }
        b.build(|x| (x, x), |g, f| (f.0, g.1))
    }

    /// The identity fibered multicategory on a small explicit base: D = M =
    /// I, projections the identity, special squares = all pullback squares.
    fn identity_instance() -> FiberedMulticategory {
        let cat = chain3();
        let chosen = compute_chosen_pullbacks(&cat);
        let base = BaseProvider::Explicit(ExplicitBase { cat: cat.clone(), chosen });
        let on_objects: Vec<BObj> = (0..cat.n_objects()).map(BObj::Ix).collect();
        let on_arrows: Vec<BArr> = (0..cat.n_arrows()).map(BArr::Ix).collect();
        let d = BaseFunctor { on_objects: on_objects.clone(), on_arrows: on_arrows.clone() };
        let p = BaseFunctor { on_objects, on_arrows };
        let mut special = BTreeSet::new();
        for a in 0..cat.n_arrows() {
            for bsq in base.pullback_squares_with_right(&BArr::Ix(a)) {
                let (t, l, b) = match (&bsq.top, &bsq.left, &bsq.bottom) {
                    (BArr::Ix(t), BArr::Ix(l), BArr::Ix(b)) => (*t, *l, *b),
                    _ => unreachable!(),
                };
                special.insert((t as u32, b as u32, a as u32, l as u32));
            }
        }
        FiberedMulticategory { base, d_cat: cat.clone(), m_cat: cat, d, p, special }
    }

    #[test]
    fn identity_instance_passes_axioms() {
        let fm = identity_instance();
        assert_eq!(verify_axioms(&fm), Vec::new());
    }

    #[test]
    fn deleting_a_special_square_breaks_existence() {
        let mut fm = identity_instance();
        // Remove a non-identity square: the one over the composite 0→2.
        let sq = *fm
            .special
            .iter()
            .find(|&&(t, b, _, _)| {
                !fm.d_cat.is_identity(t as usize) || !fm.d_cat.is_identity(b as usize)
            })
            .unwrap();
        fm.special.remove(&sq);
        let violations = verify_axioms(&fm);
        assert!(violations
            .iter()
            .any(|v| matches!(v, AxiomViolation::ExistenceViolation { .. })));
    }

    #[test]
    fn special_lift_identity_square_returns_the_arrow() {
        let fm = identity_instance();
        let a = fm.d_cat.arrow_index("0->2").unwrap();
        let x = fm.m_dom(&a);
        let y = fm.m_cod(&a);
        let sq = BSquare {
            top: fm.base.id(&fm.obj_proj(&x)),
            left: fm.m_proj(&a),
            bottom: fm.base.id(&fm.obj_proj(&y)),
            right: fm.m_proj(&a),
        };
        let b = special_lift(&fm, &a, &sq, &fm.d_id(&x), &fm.d_id(&y)).unwrap();
        assert_eq!(b, a);
    }

    #[test]
    fn symmetry_action_of_identity_is_identity() {
        let fm = identity_instance();
        let y = 2usize;
        let graph = symmetry_action(&fm, &y, &fm.d_id(&0)).unwrap();
        assert!(!graph.is_empty());
        for (a, ga) in graph {
            assert_eq!(a, ga);
        }
    }

    #[test]
    fn identity_endomorphisms_commute() {
        let fm = identity_instance();
        let x = 1usize;
        let e = Endomorphism::new(&fm, fm.m_id(&x), fm.d_id(&x)).unwrap();
        let flags = commute_endomorphisms_all_choices(&fm, &e, &e).unwrap();
        assert!(!flags.is_empty());
        assert!(flags.iter().all(|&f| f));
    }

    #[test]
    fn materialize_roundtrips_the_identity_instance() {
        let fm = identity_instance();
        let fm2 = materialize(&fm);
        assert_eq!(fm2.d_cat.n_arrows(), fm.d_cat.n_arrows());
        assert_eq!(fm2.m_cat.n_arrows(), fm.m_cat.n_arrows());
        assert_eq!(fm2.special.len(), fm.special.len());
        assert_eq!(verify_axioms(&fm2), Vec::new());
    }
}
