//! Extensional finite categories and functors, with the fibration
//! classifications (fibration in groupoids, discrete fibration, discrete
//! opfibration) required by the definitions of fibered multicategories.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FincatError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("the functor is not a fibration in groupoids")]
    NotAFibration,
}

/// An arrow record: identifier plus domain/codomain object indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowRec {
    pub id: String,
    pub dom: usize,
    pub cod: usize,
}

/// An extensional finite category: objects, arrows, identity table and a full
/// composition table. Arrow identity is by identifier/index, never structural.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinCategory {
    pub objects: Vec<String>,
    pub arrows: Vec<ArrowRec>,
    identity: Vec<usize>,
    compose: HashMap<(u32, u32), u32>,
    hom_index: HashMap<(u32, u32), Vec<u32>>,
}

impl FinCategory {
    pub fn new(
        objects: Vec<String>,
        arrows: Vec<ArrowRec>,
        identity: Vec<usize>,
        compose: HashMap<(u32, u32), u32>,
    ) -> FinCategory {
        let mut cat = FinCategory { objects, arrows, identity, compose, hom_index: HashMap::new() };
        cat.rebuild_hom_index();
        cat
    }

    pub fn rebuild_hom_index(&mut self) {
        self.hom_index.clear();
        for (i, a) in self.arrows.iter().enumerate() {
            self.hom_index
                .entry((a.dom as u32, a.cod as u32))
                .or_default()
                .push(i as u32);
        }
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn dom(&self, f: usize) -> usize {
        self.arrows[f].dom
    }

    pub fn cod(&self, f: usize) -> usize {
        self.arrows[f].cod
    }

    pub fn identity_of(&self, x: usize) -> usize {
        self.identity[x]
    }

    pub fn is_identity(&self, f: usize) -> bool {
        self.identity[self.arrows[f].dom] == f
    }

    /// g ∘ f, defined when dom g = cod f.
    pub fn compose(&self, g: usize, f: usize) -> Option<usize> {
        self.compose.get(&(g as u32, f as u32)).map(|&h| h as usize)
    }

    pub fn hom(&self, x: usize, y: usize) -> &[u32] {
        self.hom_index
            .get(&(x as u32, y as u32))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn arrows_from(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.arrows
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.dom == x)
            .map(|(i, _)| i)
    }

    pub fn arrows_to(&self, y: usize) -> impl Iterator<Item = usize> + '_ {
        self.arrows
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.cod == y)
            .map(|(i, _)| i)
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn arrow_index(&self, id: &str) -> Option<usize> {
        self.arrows.iter().position(|a| a.id == id)
    }

    /// The inverse of `f`, if `f` is an isomorphism.
    pub fn inverse(&self, f: usize) -> Option<usize> {
        let (x, y) = (self.dom(f), self.cod(f));
        for &g in self.hom(y, x) {
            let g = g as usize;
            if self.compose(g, f) == Some(self.identity[x])
                && self.compose(f, g) == Some(self.identity[y])
            {
                return Some(g);
            }
        }
        None
    }

    pub fn is_iso(&self, f: usize) -> bool {
        self.inverse(f).is_some()
    }

    pub fn is_groupoid(&self) -> bool {
        (0..self.n_arrows()).all(|f| self.is_iso(f))
    }

    pub fn compose_table(&self) -> &HashMap<(u32, u32), u32> {
        &self.compose
    }

    /// Removes an arrow (mutant construction for tests); composition entries
    /// mentioning it are dropped. The result may fail `validate_category`.
    pub fn delete_arrow(&mut self, f: usize) {
        self.arrows.remove(f);
        let shift =
            |i: u32| -> Option<u32> { if (i as usize) == f { None } else if (i as usize) > f { Some(i - 1) } else { Some(i) } };
        let old = std::mem::take(&mut self.compose);
        for ((g, h), k) in old {
            if let (Some(g), Some(h), Some(k)) = (shift(g), shift(h), shift(k)) {
                self.compose.insert((g, h), k);
            }
        }
        for id in self.identity.iter_mut() {
            assert_ne!(*id, f, "cannot delete an identity arrow");
            if *id > f {
                *id -= 1;
            }
        }
        self.rebuild_hom_index();
    }
}

/// Violations reported by `validate_category`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CatViolation {
    /// compose(g, f) missing for a composable pair.
    MissingComposite { g: String, f: String },
    /// compose(g, f) has the wrong domain or codomain.
    DomCodViolation { g: String, f: String },
    /// An identity law fails for the arrow.
    UnitViolation { f: String },
    /// (h∘g)∘f ≠ h∘(g∘f).
    AssocViolation { h: String, g: String, f: String },
    /// The identity table entry for an object is not an endo-arrow.
    BadIdentity { object: String },
}

/// Exhaustively checks associativity, unit laws, and dom/cod coherence of the
/// composition table; returns all violations found.
pub fn validate_category(c: &FinCategory) -> Vec<CatViolation> {
    let mut out = Vec::new();
    for (x, &id) in c.identity.iter().enumerate() {
        if id >= c.n_arrows() || c.dom(id) != x || c.cod(id) != x {
            out.push(CatViolation::BadIdentity { object: c.objects[x].clone() });
        }
    }
    for f in 0..c.n_arrows() {
        let idc = c.identity[c.cod(f)];
        let idd = c.identity[c.dom(f)];
        if c.compose(idc, f) != Some(f) || c.compose(f, idd) != Some(f) {
            out.push(CatViolation::UnitViolation { f: c.arrows[f].id.clone() });
        }
    }
    for g in 0..c.n_arrows() {
        for f in 0..c.n_arrows() {
            if c.dom(g) != c.cod(f) {
                continue;
            }
            match c.compose(g, f) {
                None => out.push(CatViolation::MissingComposite {
                    g: c.arrows[g].id.clone(),
                    f: c.arrows[f].id.clone(),
                }),
                Some(gf) => {
                    if c.dom(gf) != c.dom(f) || c.cod(gf) != c.cod(g) {
                        out.push(CatViolation::DomCodViolation {
                            g: c.arrows[g].id.clone(),
                            f: c.arrows[f].id.clone(),
                        });
                    }
                }
            }
        }
    }
    // Associativity, iterated over composable triples only.
    for f in 0..c.n_arrows() {
        let y = c.cod(f);
        for g in 0..c.n_arrows() {
            if c.dom(g) != y {
                continue;
            }
            let gf = match c.compose(g, f) {
                Some(gf) => gf,
                None => continue,
            };
            let z = c.cod(g);
            for h in 0..c.n_arrows() {
                if c.dom(h) != z {
                    continue;
                }
                let hg = match c.compose(h, g) {
                    Some(hg) => hg,
                    None => continue,
                };
                if c.compose(h, gf) != c.compose(hg, f) {
                    out.push(CatViolation::AssocViolation {
                        h: c.arrows[h].id.clone(),
                        g: c.arrows[g].id.clone(),
                        f: c.arrows[f].id.clone(),
                    });
                }
            }
        }
    }
    out
}

/// A functor between extensional finite categories, stored as index tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinFunctor {
    pub dom: FinCategory,
    pub cod: FinCategory,
    pub on_objects: Vec<usize>,
    pub on_arrows: Vec<usize>,
}

impl FinFunctor {
    pub fn ob(&self, x: usize) -> usize {
        self.on_objects[x]
    }

    pub fn arr(&self, f: usize) -> usize {
        self.on_arrows[f]
    }
}

/// Checks that a functor preserves dom/cod, identities, and composition.
pub fn validate_functor(ff: &FinFunctor) -> Vec<String> {
    let mut out = Vec::new();
    let (d, c) = (&ff.dom, &ff.cod);
    if ff.on_objects.len() != d.n_objects() || ff.on_arrows.len() != d.n_arrows() {
        out.push("object/arrow table length mismatch".to_string());
        return out;
    }
    for f in 0..d.n_arrows() {
        let img = ff.arr(f);
        if c.dom(img) != ff.ob(d.dom(f)) || c.cod(img) != ff.ob(d.cod(f)) {
            out.push(format!("dom/cod not preserved on `{}`", d.arrows[f].id));
        }
    }
    for x in 0..d.n_objects() {
        if ff.arr(d.identity_of(x)) != c.identity_of(ff.ob(x)) {
            out.push(format!("identity not preserved on `{}`", d.objects[x]));
        }
    }
    for g in 0..d.n_arrows() {
        for f in 0..d.n_arrows() {
            if d.dom(g) != d.cod(f) {
                continue;
            }
            if let Some(gf) = d.compose(g, f) {
                if c.compose(ff.arr(g), ff.arr(f)) != Some(ff.arr(gf)) {
                    out.push(format!(
                        "composition not preserved on `{}`∘`{}`",
                        d.arrows[g].id, d.arrows[f].id
                    ));
                }
            }
        }
    }
    out
}

/// Classification of a functor by its lifting properties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibrationReport {
    pub is_groupoid: bool,
    pub is_fibration_in_groupoids: bool,
    pub is_discrete_fibration: bool,
    pub is_discrete_opfibration: bool,
    pub witnesses: Vec<String>,
}

/// Is `h` cartesian with respect to `ff`? For every `v: Z → cod h` and every
/// base factorization `ff(h) ∘ w = ff(v)` there must be a unique `u` over `w`
/// with `h ∘ u = v`.
pub fn is_cartesian_arrow(ff: &FinFunctor, h: usize) -> bool {
    let (d, c) = (&ff.dom, &ff.cod);
    let y = d.cod(h);
    let x = d.dom(h);
    for v in d.arrows_to(y) {
        let z = d.dom(v);
        for w in 0..c.n_arrows() {
            if c.dom(w) != ff.ob(z) || c.cod(w) != ff.ob(x) {
                continue;
            }
            if c.compose(ff.arr(h), w) != Some(ff.arr(v)) {
                continue;
            }
            let mut count = 0;
            for &u in d.hom(z, x) {
                let u = u as usize;
                if ff.arr(u) == w && d.compose(h, u) == Some(v) {
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

/// Classifies `ff` by exhaustive search over lifting problems.
pub fn classify_fibration(ff: &FinFunctor) -> Result<FibrationReport, FincatError> {
    let functor_errors = validate_functor(ff);
    if !functor_errors.is_empty() {
        return Err(FincatError::InvalidInput(functor_errors.join("; ")));
    }
    let (d, c) = (&ff.dom, &ff.cod);
    let mut witnesses = Vec::new();
    let mut is_fibration_in_groupoids = true;
    let mut is_discrete_fibration = true;
    let mut is_discrete_opfibration = true;

    for f in 0..c.n_arrows() {
        // Codomain-fixed lifting problems.
        for y in 0..d.n_objects() {
            if ff.ob(y) != c.cod(f) {
                continue;
            }
            let lifts: Vec<usize> = d
                .arrows_to(y)
                .filter(|&h| ff.arr(h) == f)
                .collect();
            if lifts.is_empty() {
                is_fibration_in_groupoids = false;
                witnesses.push(format!(
                    "no lift of `{}` with codomain `{}`",
                    c.arrows[f].id, d.objects[y]
                ));
            }
            if lifts.len() != 1 {
                is_discrete_fibration = false;
                witnesses.push(format!(
                    "{} lifts of `{}` with codomain `{}`",
                    lifts.len(),
                    c.arrows[f].id,
                    d.objects[y]
                ));
            }
        }
        // Domain-fixed lifting problems.
        for x in 0..d.n_objects() {
            if ff.ob(x) != c.dom(f) {
                continue;
            }
            let lifts: Vec<usize> = d
                .arrows_from(x)
                .filter(|&h| ff.arr(h) == f)
                .collect();
            if lifts.len() != 1 {
                is_discrete_opfibration = false;
                witnesses.push(format!(
                    "{} op-lifts of `{}` with domain `{}`",
                    lifts.len(),
                    c.arrows[f].id,
                    d.objects[x]
                ));
            }
        }
    }
    // A fibration in groupoids is a fibration all of whose arrows are cartesian.
    if is_fibration_in_groupoids {
        for h in 0..d.n_arrows() {
            if !is_cartesian_arrow(ff, h) {
                is_fibration_in_groupoids = false;
                witnesses.push(format!("arrow `{}` is not cartesian", d.arrows[h].id));
            }
        }
    }
    // A discrete fibration is in particular a fibration in groupoids when it
    // is one; the flags are decided independently, so enforce the known
    // implication as a sanity constraint.
    if is_discrete_fibration {
        debug_assert!(is_fibration_in_groupoids || !witnesses.is_empty());
    }
    Ok(FibrationReport {
        is_groupoid: d.is_groupoid(),
        is_fibration_in_groupoids,
        is_discrete_fibration,
        is_discrete_opfibration,
        witnesses,
    })
}

/// All arrows `h` in the domain of `d` with codomain `y` lying over `f`.
/// Requires `d` to be a fibration in groupoids; every returned arrow is then
/// cartesian.
pub fn cartesian_lift(d: &FinFunctor, f: usize, y: usize) -> Result<Vec<usize>, FincatError> {
    let report = classify_fibration(d)?;
    if !report.is_fibration_in_groupoids {
        return Err(FincatError::NotAFibration);
    }
    Ok(d.dom.arrows_to(y).filter(|&h| d.arr(h) == f).collect())
}

/// Incremental builder for extensional categories whose arrows are generated
/// from structured keys; the composition table is filled by composing keys.
pub struct CatBuilder<K: Eq + Hash + Clone> {
    pub objects: Vec<String>,
    arrows: Vec<(K, ArrowRec)>,
    index: HashMap<K, usize>,
}

impl<K: Eq + Hash + Clone + std::fmt::Debug> CatBuilder<K> {
    pub fn new() -> Self {
        CatBuilder { objects: Vec::new(), arrows: Vec::new(), index: HashMap::new() }
    }

    pub fn add_object(&mut self, name: String) -> usize {
        self.objects.push(name);
        self.objects.len() - 1
    }

    pub fn add_arrow(&mut self, key: K, id: String, dom: usize, cod: usize) -> usize {
        debug_assert!(!self.index.contains_key(&key), "duplicate arrow key {key:?}");
        let i = self.arrows.len();
        self.arrows.push((key.clone(), ArrowRec { id, dom, cod }));
        self.index.insert(key, i);
        i
    }

    pub fn arrow_of(&self, key: &K) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn n_arrows(&self) -> usize {
        self.arrows.len()
    }

    /// Builds the category; `identity` gives the key of each object's
    /// identity and `compose` the key of g∘f for composable keys.
    pub fn build(
        self,
        identity: impl Fn(usize) -> K,
        compose: impl Fn(&K, &K) -> K,
    ) -> FinCategory {
        let identity: Vec<usize> = (0..self.objects.len())
            .map(|x| {
                *self
                    .index
                    .get(&identity(x))
                    .unwrap_or_else(|| panic!("identity key of object {x} not among arrows"))
            })
            .collect();
        // Group arrows by domain object for the composable-pair scan.
        let mut by_dom: Vec<Vec<usize>> = vec![Vec::new(); self.objects.len()];
        for (i, (_, rec)) in self.arrows.iter().enumerate() {
            by_dom[rec.dom].push(i);
        }
        let mut table = HashMap::new();
        for (f, (fk, frec)) in self.arrows.iter().enumerate() {
            for &g in &by_dom[frec.cod] {
                let (gk, _) = &self.arrows[g];
                let key = compose(gk, fk);
                let gf = *self
                    .index
                    .get(&key)
                    .unwrap_or_else(|| panic!("composite key {key:?} not among arrows"));
                table.insert((g as u32, f as u32), gf as u32);
            }
        }
        let arrows = self.arrows.into_iter().map(|(_, rec)| rec).collect();
        FinCategory::new(self.objects, arrows, identity, table)
    }
}

impl<K: Eq + Hash + Clone + std::fmt::Debug> Default for CatBuilder<K> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The one-object category of the group (Z/2, +).
    pub fn z2_monoid() -> FinCategory {
        let mut b: CatBuilder<u8> = CatBuilder::new();
        let o = b.add_object("*".into());
        b.add_arrow(0, "0".into(), o, o);
        b.add_arrow(1, "1".into(), o, o);
        b.build(|_| 0, |g, f| g ^ f)
    }

    /// The free category on a single arrow 0 → 1.
    fn walking_arrow() -> FinCategory {
        let mut b: CatBuilder<(usize, usize)> = CatBuilder::new();
        let o0 = b.add_object("0".into());
        let o1 = b.add_object("1".into());
        b.add_arrow((0, 0), "id0".into(), o0, o0);
        b.add_arrow((1, 1), "id1".into(), o1, o1);
        b.add_arrow((0, 1), "s".into(), o0, o1);
        b.build(|x| (x, x), |g, f| (f.0, g.1))
    }

    #[test]
    fn z2_is_a_valid_groupoid() {
        let c = z2_monoid();
        assert!(validate_category(&c).is_empty());
        assert!(c.is_groupoid());
    }

    #[test]
    fn wrong_codomain_composite_detected() {
        let mut c = walking_arrow();
        // Corrupt: s ∘ id0 := id0 (wrong codomain).
        let s = c.arrow_index("s").unwrap() as u32;
        let id0 = c.arrow_index("id0").unwrap() as u32;
        c.compose.insert((s, id0), id0);
        let violations = validate_category(&c);
        assert!(violations
            .iter()
            .any(|v| matches!(v, CatViolation::DomCodViolation { .. } | CatViolation::UnitViolation { .. })));
    }

    #[test]
    fn walking_arrow_valid() {
        assert!(validate_category(&walking_arrow()).is_empty());
    }

    #[test]
    fn identity_functor_classifies_as_everything() {
        let c = z2_monoid();
        let ff = FinFunctor {
            dom: c.clone(),
            cod: c.clone(),
            on_objects: (0..c.n_objects()).collect(),
            on_arrows: (0..c.n_arrows()).collect(),
        };
        let report = classify_fibration(&ff).unwrap();
        assert!(report.is_fibration_in_groupoids);
        assert!(report.is_discrete_fibration);
        assert!(report.is_discrete_opfibration);
        assert!(report.witnesses.is_empty());
    }

    /// The arrow category of the walking arrow, with the codomain projection.
    fn codomain_projection() -> FinFunctor {
        let base = walking_arrow();
        // Objects of the arrow category: the three arrows of the base.
        // Morphisms (u, v): f → g with v∘f = u-side commuting square.
        let mut b: CatBuilder<(usize, usize, usize)> = CatBuilder::new();
        for f in 0..base.n_arrows() {
            b.add_object(format!("[{}]", base.arrows[f].id));
        }
        let mut keys = Vec::new();
        for f in 0..base.n_arrows() {
            for g in 0..base.n_arrows() {
                for u in 0..base.n_arrows() {
                    for v in 0..base.n_arrows() {
                        if base.dom(u) != base.dom(f)
                            || base.cod(u) != base.dom(g)
                            || base.dom(v) != base.cod(f)
                            || base.cod(v) != base.cod(g)
                        {
                            continue;
                        }
                        if base.compose(g, u) != base.compose(v, f) {
                            continue;
                        }
                        keys.push(((f, g), (u, v)));
                    }
                }
            }
        }
        for &((f, g), (u, v)) in &keys {
            b.add_arrow((f * 16 + g, u, v), format!("({u},{v}):{f}->{g}"), f, g);
        }
        let base2 = base.clone();
        let cat = b.build(
            move |f| {
                let idd = base2.identity_of(base2.dom(f));
                let idc = base2.identity_of(base2.cod(f));
                (f * 16 + f, idd, idc)
            },
            {
                let base = base.clone();
                move |g, f| {
                    let (code_f, u1, v1) = *f;
                    let (code_g, u2, v2) = *g;
                    let dom_obj = code_f / 16;
                    let cod_obj = code_g % 16;
                    (
                        dom_obj * 16 + cod_obj,
                        base.compose(u2, u1).unwrap(),
                        base.compose(v2, v1).unwrap(),
                    )
                }
            },
        );
        // Codomain projection: object [f] ↦ cod f; arrow (u, v) ↦ v.
        let on_objects: Vec<usize> = (0..base.n_arrows()).map(|f| base.cod(f)).collect();
        let on_arrows: Vec<usize> = cat
            .arrows
            .iter()
            .map(|a| {
                // Recover v from the id "(u,v):f->g".
                let s = &a.id[1..a.id.find(')').unwrap()];
                let v: usize = s.split(',').nth(1).unwrap().parse().unwrap();
                v
            })
            .collect();
        FinFunctor { dom: cat, cod: base, on_objects, on_arrows }
    }

    #[test]
    fn codomain_projection_is_a_fibration_until_mutated() {
        let ff = codomain_projection();
        assert!(validate_category(&ff.dom).is_empty());
        let report = classify_fibration(&ff).unwrap();
        // The codomain projection of a category with pullbacks is a fibration,
        // but not one in groupoids (not all arrows are cartesian).
        assert!(!report.is_fibration_in_groupoids);
        assert!(report
            .witnesses
            .iter()
            .any(|w| w.contains("not cartesian") || w.contains("no lift")));
    }

    #[test]
    fn cartesian_lift_on_discrete_fibration_is_unique() {
        // The identity on the walking arrow: a discrete fibration.
        let c = walking_arrow();
        let ff = FinFunctor {
            dom: c.clone(),
            cod: c.clone(),
            on_objects: (0..c.n_objects()).collect(),
            on_arrows: (0..c.n_arrows()).collect(),
        };
        let s = c.arrow_index("s").unwrap();
        let lifts = cartesian_lift(&ff, s, c.cod(s)).unwrap();
        assert_eq!(lifts, vec![s]);
    }

    #[test]
    fn two_element_fiber_gives_two_lifts() {
        // d: Z/2 (as a one-object groupoid) → terminal category.
        let dom = z2_monoid();
        let mut b: CatBuilder<u8> = CatBuilder::new();
        let o = b.add_object("*".into());
        b.add_arrow(0, "id".into(), o, o);
        let cod = b.build(|_| 0, |_, _| 0);
        let ff = FinFunctor { dom, cod, on_objects: vec![0], on_arrows: vec![0, 0] };
        let report = classify_fibration(&ff).unwrap();
        assert!(report.is_fibration_in_groupoids);
        assert!(!report.is_discrete_fibration);
        let lifts = cartesian_lift(&ff, 0, 0).unwrap();
        assert_eq!(lifts.len(), 2);
    }
}
