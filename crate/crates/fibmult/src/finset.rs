//! Labeled finite sets and mappings, with the canonical constructions
//! (chosen pullbacks, finite sums, diagonal data) used by every base-category
//! computation.
//!
//! All values are immutable after construction and every operation is a pure
//! function of its inputs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Characters reserved for canonical constructions (pullback pair labels and
/// sum tags); rejected in user-supplied element labels.
pub const RESERVED_CHARS: [char; 4] = ['|', ':', '(', ')'];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FinSetError {
    #[error("duplicate element label `{0}`")]
    DuplicateElement(String),
    #[error("codomain mismatch: `{0}` vs `{1}`")]
    CodomainMismatch(String, String),
    #[error("assignment not total: element `{0}` of the domain has no image")]
    NotTotal(String),
    #[error("assignment image `{0}` is not an element of the codomain")]
    BadImage(String),
    #[error("element label `{0}` uses a reserved character")]
    ReservedLabel(String),
    #[error("map is not a bijection")]
    NotBijective,
}

/// A finite set with a display label and a canonically ordered list of
/// distinct element labels.
///
/// Equality, ordering and hashing consider only the elements; the set label
/// is presentation data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinSet {
    pub label: String,
    elements: Vec<String>,
}

impl PartialEq for FinSet {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
    }
}
impl Eq for FinSet {}
impl PartialOrd for FinSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FinSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.elements.cmp(&other.elements)
    }
}
impl std::hash::Hash for FinSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.elements.hash(state);
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{{}}}", self.label, self.elements.join(","))
    }
}

impl FinSet {
    /// Builds a set from element labels; the elements are sorted into the
    /// canonical (lexicographic) order and must be pairwise distinct.
    pub fn new(label: impl Into<String>, elements: Vec<String>) -> Result<FinSet, FinSetError> {
        let mut elements = elements;
        elements.sort();
        for w in elements.windows(2) {
            if w[0] == w[1] {
                return Err(FinSetError::DuplicateElement(w[0].clone()));
            }
        }
        Ok(FinSet { label: label.into(), elements })
    }

    /// The skeleton set {1, …, n} labeled by its size.
    pub fn skeleton(n: usize) -> FinSet {
        let elements = (1..=n).map(|i| i.to_string()).collect();
        FinSet::new(n.to_string(), elements).expect("skeleton labels are distinct")
    }

    /// The empty set.
    pub fn empty() -> FinSet {
        FinSet::skeleton(0)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn index_of(&self, element: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == element)
    }

    pub fn contains(&self, element: &str) -> bool {
        self.index_of(element).is_some()
    }

    /// Rejects element labels containing reserved construction characters.
    pub fn check_user_labels(&self) -> Result<(), FinSetError> {
        for e in &self.elements {
            if e.chars().any(|c| RESERVED_CHARS.contains(&c)) {
                return Err(FinSetError::ReservedLabel(e.clone()));
            }
        }
        Ok(())
    }
}

/// A total mapping between finite sets, stored as an index table over the
/// canonical element orders of its domain and codomain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FinMap {
    pub dom: FinSet,
    pub cod: FinSet,
    assignment: Vec<usize>,
}

impl fmt::Display for FinMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let entries: Vec<String> = self
            .dom
            .elements()
            .iter()
            .enumerate()
            .map(|(i, e)| format!("{}↦{}", e, self.cod.elements()[self.assignment[i]]))
            .collect();
        write!(f, "[{}]", entries.join(","))
    }
}

impl FinMap {
    /// Builds a map from an element-label table.
    pub fn new(
        dom: FinSet,
        cod: FinSet,
        table: &BTreeMap<String, String>,
    ) -> Result<FinMap, FinSetError> {
        let mut assignment = Vec::with_capacity(dom.len());
        for e in dom.elements() {
            let image = table.get(e).ok_or_else(|| FinSetError::NotTotal(e.clone()))?;
            let j = cod
                .index_of(image)
                .ok_or_else(|| FinSetError::BadImage(image.clone()))?;
            assignment.push(j);
        }
        for key in table.keys() {
            if !dom.contains(key) {
                return Err(FinSetError::BadImage(key.clone()));
            }
        }
        Ok(FinMap { dom, cod, assignment })
    }

    /// Builds a map by evaluating `f` on each domain element label.
    pub fn from_fn(
        dom: FinSet,
        cod: FinSet,
        f: impl Fn(&str) -> String,
    ) -> Result<FinMap, FinSetError> {
        let mut assignment = Vec::with_capacity(dom.len());
        for e in dom.elements() {
            let image = f(e);
            let j = cod.index_of(&image).ok_or(FinSetError::BadImage(image))?;
            assignment.push(j);
        }
        Ok(FinMap { dom, cod, assignment })
    }

    /// Builds a map from an index vector (domain order → codomain index).
    pub fn from_indices(dom: FinSet, cod: FinSet, assignment: Vec<usize>) -> FinMap {
        assert_eq!(assignment.len(), dom.len());
        assert!(assignment.iter().all(|&j| j < cod.len()));
        FinMap { dom, cod, assignment }
    }

    pub fn identity(s: &FinSet) -> FinMap {
        FinMap {
            dom: s.clone(),
            cod: s.clone(),
            assignment: (0..s.len()).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.assignment
    }

    pub fn apply_idx(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn apply(&self, element: &str) -> Option<&str> {
        let i = self.dom.index_of(element)?;
        Some(&self.cod.elements()[self.assignment[i]])
    }

    /// g ∘ self, defined when self.cod = g.dom.
    pub fn then(&self, g: &FinMap) -> Result<FinMap, FinSetError> {
        if self.cod != g.dom {
            return Err(FinSetError::CodomainMismatch(
                self.cod.to_string(),
                g.dom.to_string(),
            ));
        }
        let assignment = self.assignment.iter().map(|&i| g.assignment[i]).collect();
        Ok(FinMap {
            dom: self.dom.clone(),
            cod: g.cod.clone(),
            assignment,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.dom == self.cod && self.assignment.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        for &j in &self.assignment {
            if seen[j] {
                return false;
            }
            seen[j] = true;
        }
        true
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        for &j in &self.assignment {
            seen[j] = true;
        }
        seen.into_iter().all(|b| b)
    }

    pub fn is_bijective(&self) -> bool {
        self.dom.len() == self.cod.len() && self.is_injective()
    }

    pub fn inverse(&self) -> Result<FinMap, FinSetError> {
        if !self.is_bijective() {
            return Err(FinSetError::NotBijective);
        }
        let mut assignment = vec![0; self.cod.len()];
        for (i, &j) in self.assignment.iter().enumerate() {
            assignment[j] = i;
        }
        Ok(FinMap {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            assignment,
        })
    }

    /// The indices of the domain elements mapped to codomain index `j`.
    pub fn fiber_idx(&self, j: usize) -> Vec<usize> {
        (0..self.dom.len()).filter(|&i| self.assignment[i] == j).collect()
    }

    /// The element labels of the fiber over codomain element `y`.
    pub fn fiber(&self, y: &str) -> Vec<String> {
        let j = match self.cod.index_of(y) {
            Some(j) => j,
            None => return Vec::new(),
        };
        self.fiber_idx(j)
            .into_iter()
            .map(|i| self.dom.elements()[i].clone())
            .collect()
    }
}

/// A chosen pullback square
///
/// ```text
///        top
///   apex ───→ right.dom
///    │            │
///  left         right
///    ↓            ↓
/// bottom.dom ──→ bottom.cod
///       bottom
/// ```
///
/// with apex elements the pairs "(x|y)", x ∈ bottom.dom, y ∈ right.dom,
/// bottom(x) = right(y).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PullbackSquare {
    pub apex: FinSet,
    pub top: FinMap,
    pub left: FinMap,
    pub bottom: FinMap,
    pub right: FinMap,
}

/// The canonical pair label of a pullback apex element.
pub fn pair_label(x: &str, y: &str) -> String {
    format!("({x}|{y})")
}

/// The chosen pullback of `bottom` and `right` (which must share a codomain):
/// the apex is the canonically labeled pair set.
pub fn chosen_pullback(bottom: &FinMap, right: &FinMap) -> Result<PullbackSquare, FinSetError> {
    if bottom.cod != right.cod {
        return Err(FinSetError::CodomainMismatch(
            bottom.cod.to_string(),
            right.cod.to_string(),
        ));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, &bi) in bottom.indices().iter().enumerate() {
        for (j, &rj) in right.indices().iter().enumerate() {
            if bi == rj {
                pairs.push((i, j));
            }
        }
    }
    let labels: Vec<String> = pairs
        .iter()
        .map(|&(i, j)| pair_label(&bottom.dom.elements()[i], &right.dom.elements()[j]))
        .collect();
    let apex = FinSet::new(
        format!("({}|{})", bottom.dom.label, right.dom.label),
        labels.clone(),
    )?;
    // The apex construction sorts labels; recover the pair behind each label.
    let mut by_label: BTreeMap<&String, (usize, usize)> = BTreeMap::new();
    for (lab, &pair) in labels.iter().zip(pairs.iter()) {
        by_label.insert(lab, pair);
    }
    let mut left_idx = Vec::with_capacity(apex.len());
    let mut top_idx = Vec::with_capacity(apex.len());
    for e in apex.elements() {
        let (i, j) = by_label[e];
        left_idx.push(i);
        top_idx.push(j);
    }
    let left = FinMap::from_indices(apex.clone(), bottom.dom.clone(), left_idx);
    let top = FinMap::from_indices(apex.clone(), right.dom.clone(), top_idx);
    Ok(PullbackSquare {
        apex,
        top,
        left,
        bottom: bottom.clone(),
        right: right.clone(),
    })
}

/// Decides whether an arbitrary commuting square of finite maps is a pullback,
/// by the element-wise characterization: the induced map into the canonical
/// pair set must be a bijection.
pub fn is_pullback(top: &FinMap, left: &FinMap, bottom: &FinMap, right: &FinMap) -> bool {
    if top.dom != left.dom
        || top.cod != right.dom
        || left.cod != bottom.dom
        || bottom.cod != right.cod
    {
        return false;
    }
    // Commutativity.
    for i in 0..top.dom.len() {
        if right.apply_idx(top.apply_idx(i)) != bottom.apply_idx(left.apply_idx(i)) {
            return false;
        }
    }
    // Count matching pairs and check the induced map is injective.
    let mut n_pairs = 0usize;
    for &bi in bottom.indices() {
        for &rj in right.indices() {
            if bi == rj {
                n_pairs += 1;
            }
        }
    }
    if n_pairs != top.dom.len() {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    for i in 0..top.dom.len() {
        if !seen.insert((left.apply_idx(i), top.apply_idx(i))) {
            return false;
        }
    }
    true
}

/// The tagged union of the given parts: elements "k:x" for x in part k, with
/// the injection maps.
pub fn finite_sum(parts: &[FinSet]) -> (FinSet, Vec<FinMap>) {
    let mut labels = Vec::new();
    for (k, part) in parts.iter().enumerate() {
        for e in part.elements() {
            labels.push(format!("{k}:{e}"));
        }
    }
    let label = format!(
        "Σ({})",
        parts.iter().map(|p| p.label.as_str()).collect::<Vec<_>>().join(",")
    );
    let sum = FinSet::new(label, labels).expect("tagged labels are distinct");
    let injections = parts
        .iter()
        .enumerate()
        .map(|(k, part)| {
            FinMap::from_fn(part.clone(), sum.clone(), |e| format!("{k}:{e}"))
                .expect("tagged labels are in the sum")
        })
        .collect();
    (sum, injections)
}

/// The chosen pullback of `f` along itself together with the diagonal
/// Δ: f.dom → apex, which satisfies top∘Δ = id and left∘Δ = id.
pub fn diagonal_data(f: &FinMap) -> (PullbackSquare, FinMap) {
    let sq = chosen_pullback(f, f).expect("a map shares its own codomain");
    let diagonal = FinMap::from_fn(f.dom.clone(), sq.apex.clone(), |e| pair_label(e, e))
        .expect("diagonal pairs satisfy the pullback condition");
    (sq, diagonal)
}

/// All maps from `dom` to `cod`, in lexicographic order of their index tables.
pub fn all_maps(dom: &FinSet, cod: &FinSet) -> Vec<FinMap> {
    let n = dom.len();
    let m = cod.len();
    if n == 0 {
        return vec![FinMap::from_indices(dom.clone(), cod.clone(), Vec::new())];
    }
    if m == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut assignment = vec![0usize; n];
    loop {
        out.push(FinMap::from_indices(dom.clone(), cod.clone(), assignment.clone()));
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            assignment[i] += 1;
            if assignment[i] < m {
                break;
            }
            assignment[i] = 0;
        }
    }
}

/// All bijections from `dom` to `cod` (empty if the sizes differ).
pub fn all_bijections(dom: &FinSet, cod: &FinSet) -> Vec<FinMap> {
    if dom.len() != cod.len() {
        return Vec::new();
    }
    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for rest in permutations(n - 1) {
            for pos in 0..n {
                let mut perm = rest.clone();
                perm.insert(pos, n - 1);
                out.push(perm);
            }
        }
        out
    }
    let mut maps: Vec<FinMap> = permutations(dom.len())
        .into_iter()
        .map(|perm| FinMap::from_indices(dom.clone(), cod.clone(), perm))
        .collect();
    maps.sort();
    maps
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(label: &str, elems: &[&str]) -> FinSet {
        FinSet::new(label, elems.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn map(dom: &FinSet, cod: &FinSet, pairs: &[(&str, &str)]) -> FinMap {
        let table: BTreeMap<String, String> = pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        FinMap::new(dom.clone(), cod.clone(), &table).unwrap()
    }

    #[test]
    fn duplicate_elements_rejected() {
        let err = FinSet::new("s", vec!["a".into(), "a".into()]).unwrap_err();
        assert_eq!(err, FinSetError::DuplicateElement("a".into()));
    }

    #[test]
    fn pullback_over_terminal_is_product() {
        let three = FinSet::skeleton(3);
        let two = set("2", &["a", "b"]);
        let pt = FinSet::skeleton(1);
        let f = map(&three, &pt, &[("1", "1"), ("2", "1"), ("3", "1")]);
        let g = map(&two, &pt, &[("a", "1"), ("b", "1")]);
        let sq = chosen_pullback(&f, &g).unwrap();
        assert_eq!(sq.apex.len(), 6);
        assert!(is_pullback(&sq.top, &sq.left, &sq.bottom, &sq.right));
        assert!(sq.apex.contains(&pair_label("2", "b")));
    }

    #[test]
    fn pullback_along_identity_is_bijective() {
        let i = set("I", &["x", "y"]);
        let j = FinSet::skeleton(2);
        let g = map(&i, &j, &[("x", "1"), ("y", "1")]);
        let sq = chosen_pullback(&FinMap::identity(&j), &g).unwrap();
        assert_eq!(sq.apex.len(), i.len());
        assert!(sq.top.is_bijective());
    }

    #[test]
    fn pullback_of_disjoint_injections_is_empty() {
        let (sum, injs) = finite_sum(&[set("A", &["a"]), set("B", &["b"])]);
        assert_eq!(sum.elements(), ["0:a", "1:b"]);
        let sq = chosen_pullback(&injs[0], &injs[1]).unwrap();
        assert!(sq.apex.is_empty());
    }

    #[test]
    fn finite_sum_nullary_and_unary() {
        let (empty, injs) = finite_sum(&[]);
        assert!(empty.is_empty());
        assert!(injs.is_empty());
        let (s, injs) = finite_sum(&[set("s", &["x", "y"])]);
        assert_eq!(s.elements(), ["0:x", "0:y"]);
        assert!(injs[0].is_bijective());
    }

    #[test]
    fn diagonal_of_kernel_pair_over_terminal() {
        let two = FinSet::skeleton(2);
        let pt = FinSet::skeleton(1);
        let f = map(&two, &pt, &[("1", "1"), ("2", "1")]);
        let (sq, diag) = diagonal_data(&f);
        assert_eq!(sq.apex.len(), 4);
        assert_eq!(diag.apply("1"), Some("(1|1)"));
        assert_eq!(diag.apply("2"), Some("(2|2)"));
    }

    #[test]
    fn diagonal_of_swap() {
        // f the swap on {1,2}: only pairs with f(x) = f(y) are (1,1), (2,2).
        let two = FinSet::skeleton(2);
        let f = map(&two, &two, &[("1", "2"), ("2", "1")]);
        let (sq, diag) = diagonal_data(&f);
        assert_eq!(sq.apex.elements(), [pair_label("1", "1"), pair_label("2", "2")]);
        assert!(diag.is_bijective());
        assert!(diag.then(&sq.top).unwrap().is_identity());
        assert!(diag.then(&sq.left).unwrap().is_identity());
    }

    #[test]
    fn all_maps_counts() {
        let two = FinSet::skeleton(2);
        let three = FinSet::skeleton(3);
        assert_eq!(all_maps(&two, &three).len(), 9);
        assert_eq!(all_maps(&FinSet::empty(), &three).len(), 1);
        assert_eq!(all_maps(&two, &FinSet::empty()).len(), 0);
        assert_eq!(all_bijections(&three, &three).len(), 6);
    }

    /// Strategy: a map between skeleton sets of bounded size.
    fn arb_map(max: usize) -> impl Strategy<Value = FinMap> {
        (1..=max, 1..=max).prop_flat_map(|(n, m)| {
            proptest::collection::vec(0..m, n).prop_map(move |assignment| {
                FinMap::from_indices(FinSet::skeleton(n), FinSet::skeleton(m), assignment)
            })
        })
    }

    proptest! {
        #[test]
        fn chosen_pullback_is_a_pullback(
            (f, g) in (1..=4usize).prop_flat_map(|m| {
                let mk = move |n: usize, assignment: Vec<usize>| {
                    FinMap::from_indices(FinSet::skeleton(n), FinSet::skeleton(m), assignment)
                };
                ((1..=4usize), (1..=4usize)).prop_flat_map(move |(n1, n2)| {
                    let mk = mk.clone();
                    (proptest::collection::vec(0..m, n1), proptest::collection::vec(0..m, n2))
                        .prop_map(move |(a1, a2)| (mk(n1, a1), mk(n2, a2)))
                })
            })
        ) {
            let sq = chosen_pullback(&f, &g).unwrap();
            prop_assert!(is_pullback(&sq.top, &sq.left, &sq.bottom, &sq.right));
        }

        #[test]
        fn pasting_law_on_apex_cardinalities(
            f in arb_map(3), h_assign in proptest::collection::vec(0..3usize, 0..=3)
        ) {
            // For h: K → L and f: L → J, pulling back g along f∘h agrees with
            // pulling back the left leg of the (f, g) pullback along h.
            let l = f.dom.clone();
            let h = FinMap::from_indices(
                FinSet::skeleton(h_assign.len()),
                FinSet::skeleton(3),
                h_assign.iter().map(|&i| i % l.len().max(1)).collect(),
            );
            prop_assume!(h.cod.len() == 3 && l.len() <= 3);
            let h = FinMap::from_indices(h.dom.clone(), l.clone(), h.indices().to_vec());
            for g in all_maps(&FinSet::skeleton(2), &f.cod) {
                let outer = chosen_pullback(&h.then(&f).unwrap(), &g).unwrap();
                let inner = chosen_pullback(&f, &g).unwrap();
                let pasted = chosen_pullback(&h, &inner.left).unwrap();
                prop_assert_eq!(outer.apex.len(), pasted.apex.len());
                // The pasted square (with top legs composed) is again a pullback.
                let top = pasted.top.then(&inner.top).unwrap();
                prop_assert!(is_pullback(&top, &pasted.left, &h.then(&f).unwrap(), &g));
            }
        }

        #[test]
        fn diagonal_sections_are_identities(f in arb_map(4)) {
            let (sq, diag) = diagonal_data(&f);
            prop_assert!(diag.then(&sq.top).unwrap().is_identity());
            prop_assert!(diag.then(&sq.left).unwrap().is_identity());
        }
    }
}
