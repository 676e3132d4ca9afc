//! Traffic between fibered categories and fibered multicategories: building
//! a fibered multicategory from a fibration, the pullback characterization
//! of fibrations among multicategory functors, pseudofunctors with their
//! Grothendieck construction, and the inverse construction on unary
//! instances.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::base::{
    compute_chosen_pullbacks, is_pullback_explicit, BArr, BObj, BSquare, BaseFunctor,
    BaseProvider, ExplicitBase,
};
use crate::core::{special_lift, FiberedMulticategory, Multicat};
use crate::fincat::{is_cartesian_arrow, validate_functor, CatBuilder, FinCategory, FinFunctor};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BridgeError {
    #[error("not a fibration: {0}")]
    NotAFibration(String),
    #[error("not unary: {0}")]
    NotUnary(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// A fibered multicategory built from a fibration, together with the
/// inclusion of its cartesian subcategory D into M.
#[derive(Debug, Clone)]
pub struct Bridge {
    pub fm: FiberedMulticategory,
    pub inclusion: FinFunctor,
}

fn subcategory(cat: &FinCategory, keep: &[usize]) -> (FinCategory, Vec<usize>) {
    let mut b: CatBuilder<usize> = CatBuilder::new();
    for name in &cat.objects {
        b.add_object(name.clone());
    }
    let mut sub_to_full = Vec::new();
    for &a in keep {
        b.add_arrow(a, cat.arrows[a].id.clone(), cat.dom(a), cat.cod(a));
        sub_to_full.push(a);
    }
    let sub = b.build(
        |x| cat.identity_of(x),
        |&g, &f| cat.compose(g, f).expect("subcategory closed under composition"),
    );
    (sub, sub_to_full)
}

fn bridge_parts(
    p: &FinFunctor,
    unary: bool,
) -> Result<(FiberedMulticategory, Vec<usize>, Vec<usize>), BridgeError> {
    let errors = validate_functor(p);
    if !errors.is_empty() {
        return Err(BridgeError::ShapeMismatch(errors.join("; ")));
    }
    let total = &p.dom;
    let bcat = &p.cod;
    // A fibration: every base arrow has a cartesian lift to every object
    // over its codomain.
    let cartesian: Vec<bool> = (0..total.n_arrows()).map(|h| is_cartesian_arrow(p, h)).collect();
    for f in 0..bcat.n_arrows() {
        for y in 0..total.n_objects() {
            if p.ob(y) != bcat.cod(f) {
                continue;
            }
            let has_lift = total
                .arrows_to(y)
                .any(|h| p.arr(h) == f && cartesian[h]);
            if !has_lift {
                return Err(BridgeError::NotAFibration(format!(
                    "no cartesian lift of `{}` with codomain `{}`",
                    bcat.arrows[f].id, total.objects[y]
                )));
            }
        }
    }
    let base = BaseProvider::Explicit(ExplicitBase {
        cat: bcat.clone(),
        chosen: compute_chosen_pullbacks(bcat),
    });
    let d_keep: Vec<usize> = (0..total.n_arrows()).filter(|&h| cartesian[h]).collect();
    let (d_cat, d_to_t) = subcategory(total, &d_keep);
    let m_keep: Vec<usize> = if unary {
        (0..total.n_arrows())
            .filter(|&a| {
                let img = p.arr(a);
                bcat.inverse(img).is_some()
            })
            .collect()
    } else {
        (0..total.n_arrows()).collect()
    };
    let (m_cat, m_to_t) = subcategory(total, &m_keep);
    let on_objects: Vec<BObj> = (0..total.n_objects()).map(|x| BObj::Ix(p.ob(x))).collect();
    let d = BaseFunctor {
        on_objects: on_objects.clone(),
        on_arrows: d_to_t.iter().map(|&h| BArr::Ix(p.arr(h))).collect(),
    };
    let pm = BaseFunctor {
        on_objects,
        on_arrows: m_to_t.iter().map(|&a| BArr::Ix(p.arr(a))).collect(),
    };
    // Special squares: commutative squares in the total category with
    // cartesian horizontal sides, over a base pullback.
    let mut m_by_dc: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (mi, &a) in m_to_t.iter().enumerate() {
        m_by_dc.entry((total.dom(a), total.cod(a))).or_default().push(mi);
    }
    let empty: Vec<usize> = Vec::new();
    let mut special = BTreeSet::new();
    for (ti, &top) in d_to_t.iter().enumerate() {
        let (u, x) = (total.dom(top), total.cod(top));
        for (bi, &bottom) in d_to_t.iter().enumerate() {
            let (v, y) = (total.dom(bottom), total.cod(bottom));
            for &ri in m_by_dc.get(&(x, y)).unwrap_or(&empty) {
                let right = m_to_t[ri];
                for &li in m_by_dc.get(&(u, v)).unwrap_or(&empty) {
                    let left = m_to_t[li];
                    let lhs = total.compose(right, top);
                    if lhs != total.compose(bottom, left) || lhs.is_none() {
                        continue;
                    }
                    let bsq = BSquare {
                        top: BArr::Ix(p.arr(top)),
                        left: BArr::Ix(p.arr(left)),
                        bottom: BArr::Ix(p.arr(bottom)),
                        right: BArr::Ix(p.arr(right)),
                    };
                    if base.is_pullback(&bsq) {
                        special.insert((ti as u32, bi as u32, ri as u32, li as u32));
                    }
                }
            }
        }
    }
    let fm = FiberedMulticategory { base, d_cat, m_cat, d, p: pm, special };
    Ok((fm, d_to_t, m_to_t))
}

/// Builds the fibered multicategory of a fibration: D is the subcategory of
/// cartesian arrows, M the whole total category, and the special squares
/// are the commutative squares with cartesian horizontal sides over base
/// pullbacks.
pub fn from_fibration(p: &FinFunctor) -> Result<Bridge, BridgeError> {
    let (fm, d_to_t, m_to_t) = bridge_parts(p, false)?;
    let m_index: HashMap<usize, usize> =
        m_to_t.iter().enumerate().map(|(mi, &t)| (t, mi)).collect();
    let inclusion = FinFunctor {
        dom: fm.d_cat.clone(),
        cod: fm.m_cat.clone(),
        on_objects: (0..fm.d_cat.n_objects()).collect(),
        on_arrows: d_to_t.iter().map(|&t| m_index[&t]).collect(),
    };
    Ok(Bridge { fm, inclusion })
}

/// Restricts a fibration to its unary fibered multicategory: M keeps only
/// the arrows over base isomorphisms, D stays the cartesian subcategory.
pub fn unary_restriction(p: &FinFunctor) -> Result<FiberedMulticategory, BridgeError> {
    Ok(bridge_parts(p, true)?.0)
}

/// The outcome of the pullback characterization of fibrations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibcharReport {
    /// Every special square maps to a pullback square inside M.
    pub squares_are_pullbacks: bool,
    /// Every image of a D-arrow is cartesian over the base.
    pub lifts_are_cartesian: bool,
    pub witnesses: Vec<String>,
}

/// Checks the two sides of the fibration characterization for an
/// identity-on-objects functor F: D → M over the base.
pub fn fibchar_check(
    fm: &FiberedMulticategory,
    f: &FinFunctor,
) -> Result<FibcharReport, BridgeError> {
    if f.on_objects.len() != fm.d_cat.n_objects()
        || f.on_arrows.len() != fm.d_cat.n_arrows()
        || f.on_objects.iter().enumerate().any(|(x, &fx)| x != fx)
    {
        return Err(BridgeError::ShapeMismatch(
            "F must be an identity-on-objects functor out of D".into(),
        ));
    }
    for h in 0..fm.d_cat.n_arrows() {
        let img = f.arr(h);
        if img >= fm.m_cat.n_arrows()
            || fm.m_cat.dom(img) != fm.d_cat.dom(h)
            || fm.m_cat.cod(img) != fm.d_cat.cod(h)
            || fm.p.arr(img) != fm.d.arr(h)
        {
            return Err(BridgeError::ShapeMismatch(format!(
                "F is not over the base on `{}`",
                fm.d_cat.arrows[h].id
            )));
        }
    }
    let mut witnesses = Vec::new();
    let mut squares_are_pullbacks = true;
    for &sq in &fm.special {
        let (t, bt, r, l) = (sq.0 as usize, sq.1 as usize, sq.2 as usize, sq.3 as usize);
        if !is_pullback_explicit(&fm.m_cat, f.arr(t), l, f.arr(bt), r) {
            squares_are_pullbacks = false;
            witnesses.push(format!(
                "special square {} is not a pullback in M",
                fm.square_label(sq)
            ));
        }
    }
    let mut lifts_are_cartesian = true;
    for h in 0..fm.d_cat.n_arrows() {
        if !crate::base::is_cartesian_over_base(&fm.m_cat, &fm.base, &fm.p, f.arr(h)) {
            lifts_are_cartesian = false;
            witnesses.push(format!(
                "image of `{}` is not cartesian over the base",
                fm.d_cat.arrows[h].id
            ));
        }
    }
    Ok(FibcharReport { squares_are_pullbacks, lifts_are_cartesian, witnesses })
}

/// Searches for an identity-on-objects functor F: D → M over the base whose
/// images turn every special square into a pullback in M; `None` when no
/// such functor exists.
pub fn fibchar_search(fm: &FiberedMulticategory) -> Option<FinFunctor> {
    let n = fm.d_cat.n_arrows();
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n);
    for h in 0..n {
        if fm.d_cat.is_identity(h) {
            candidates.push(vec![fm.m_cat.identity_of(fm.d_cat.dom(h))]);
            continue;
        }
        let opts: Vec<usize> = (0..fm.m_cat.n_arrows())
            .filter(|&a| {
                fm.m_cat.dom(a) == fm.d_cat.dom(h)
                    && fm.m_cat.cod(a) == fm.d_cat.cod(h)
                    && fm.p.arr(a) == fm.d.arr(h)
            })
            .collect();
        if opts.is_empty() {
            return None;
        }
        candidates.push(opts);
    }
    let squares: Vec<(usize, usize, usize, usize)> = fm
        .special
        .iter()
        .map(|&(t, bt, r, l)| (t as usize, bt as usize, r as usize, l as usize))
        .collect();
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    fn consistent(
        fm: &FiberedMulticategory,
        squares: &[(usize, usize, usize, usize)],
        assignment: &[Option<usize>],
        h: usize,
    ) -> bool {
        // Functoriality on every composable pair that is now fully known.
        for other in 0..assignment.len() {
            let fo = match assignment[other] {
                Some(fo) => fo,
                None => continue,
            };
            let fh = assignment[h].expect("just assigned");
            for (g, f, fg, ff) in [(h, other, fh, fo), (other, h, fo, fh)] {
                if fm.d_cat.cod(f) != fm.d_cat.dom(g) {
                    continue;
                }
                let gf = fm.d_cat.compose(g, f).expect("composable");
                if let Some(fgf) = assignment[gf] {
                    if fm.m_cat.compose(fg, ff) != Some(fgf) {
                        return false;
                    }
                }
            }
        }
        // The goal condition on every square with both horizontal sides known.
        for &(t, bt, r, l) in squares {
            if let (Some(ft), Some(fbt)) = (assignment[t], assignment[bt]) {
                if (t == h || bt == h) && !is_pullback_explicit(&fm.m_cat, ft, l, fbt, r) {
                    return false;
                }
            }
        }
        true
    }
    fn search(
        fm: &FiberedMulticategory,
        candidates: &[Vec<usize>],
        squares: &[(usize, usize, usize, usize)],
        assignment: &mut Vec<Option<usize>>,
        h: usize,
    ) -> bool {
        if h == candidates.len() {
            return true;
        }
        for &c in &candidates[h] {
            assignment[h] = Some(c);
            if consistent(fm, squares, assignment, h)
                && search(fm, candidates, squares, assignment, h + 1)
            {
                return true;
            }
        }
        assignment[h] = None;
        false
    }
    if !search(fm, &candidates, &squares, &mut assignment, 0) {
        return None;
    }
    Some(FinFunctor {
        dom: fm.d_cat.clone(),
        cod: fm.m_cat.clone(),
        on_objects: (0..fm.d_cat.n_objects()).collect(),
        on_arrows: assignment.into_iter().map(|a| a.expect("complete")).collect(),
    })
}

/// A pseudofunctor from a finite base to Cat: one fiber per base object, a
/// reindexing functor per base arrow, and the comparison isomorphisms for
/// composition and identities.
#[derive(Debug, Clone)]
pub struct Pseudofunctor {
    pub base: FinCategory,
    pub fibers: Vec<FinCategory>,
    /// Per base arrow f: i → j, a functor fibers[j] → fibers[i].
    pub reindex: Vec<FinFunctor>,
    /// Per composable pair (g, f): per object z of fibers[cod g], an iso
    /// F_f(F_g z) → F_{g∘f} z in fibers[dom f].
    pub comp_iso: HashMap<(u32, u32), Vec<usize>>,
    /// Per base object i: per object x of fibers[i], an iso F_{id_i}(x) → x.
    pub id_iso: Vec<Vec<usize>>,
}

/// Exhaustively checks the pseudofunctor laws: functoriality and endpoints
/// of the reindexings, invertibility and naturality of the comparison isos,
/// and the associativity and unit coherence equations.
pub fn validate_pseudofunctor(ps: &Pseudofunctor) -> Vec<String> {
    let mut out = Vec::new();
    if ps.fibers.len() != ps.base.n_objects()
        || ps.reindex.len() != ps.base.n_arrows()
        || ps.id_iso.len() != ps.base.n_objects()
    {
        out.push("table lengths do not match the base".into());
        return out;
    }
    for f in 0..ps.base.n_arrows() {
        let rf = &ps.reindex[f];
        if rf.dom != ps.fibers[ps.base.cod(f)] || rf.cod != ps.fibers[ps.base.dom(f)] {
            out.push(format!("reindexing of `{}` has wrong endpoints", ps.base.arrows[f].id));
        }
        for e in validate_functor(rf) {
            out.push(format!("reindexing of `{}`: {e}", ps.base.arrows[f].id));
        }
    }
    if !out.is_empty() {
        return out;
    }
    for i in 0..ps.base.n_objects() {
        let fiber = &ps.fibers[i];
        let rid = &ps.reindex[ps.base.identity_of(i)];
        if ps.id_iso[i].len() != fiber.n_objects() {
            out.push(format!("identity comparison table at `{}` has wrong length", ps.base.objects[i]));
            continue;
        }
        for x in 0..fiber.n_objects() {
            let iso = ps.id_iso[i][x];
            if fiber.dom(iso) != rid.ob(x) || fiber.cod(iso) != x || !fiber.is_iso(iso) {
                out.push(format!(
                    "identity comparison at `{}`/`{}` is not an iso F_id(x) → x",
                    ps.base.objects[i], fiber.objects[x]
                ));
            }
        }
        // Naturality of the identity comparison.
        for v in 0..fiber.n_arrows() {
            let (x, y) = (fiber.dom(v), fiber.cod(v));
            let lhs = fiber.compose(ps.id_iso[i][y], rid.arr(v));
            let rhs = fiber.compose(v, ps.id_iso[i][x]);
            if lhs != rhs || lhs.is_none() {
                out.push(format!(
                    "identity comparison at `{}` is not natural in `{}`",
                    ps.base.objects[i], fiber.arrows[v].id
                ));
            }
        }
    }
    for g in 0..ps.base.n_arrows() {
        for f in 0..ps.base.n_arrows() {
            if ps.base.dom(g) != ps.base.cod(f) {
                continue;
            }
            let gf = ps.base.compose(g, f).expect("composable");
            let i = ps.base.dom(f);
            let k = ps.base.cod(g);
            let fiber_i = &ps.fibers[i];
            let fiber_k = &ps.fibers[k];
            let gamma = match ps.comp_iso.get(&(g as u32, f as u32)) {
                Some(gamma) if gamma.len() == fiber_k.n_objects() => gamma,
                _ => {
                    out.push(format!(
                        "missing composition comparison for `{}`∘`{}`",
                        ps.base.arrows[g].id, ps.base.arrows[f].id
                    ));
                    continue;
                }
            };
            for z in 0..fiber_k.n_objects() {
                let c = gamma[z];
                let dom_ok = fiber_i.dom(c) == ps.reindex[f].ob(ps.reindex[g].ob(z));
                let cod_ok = fiber_i.cod(c) == ps.reindex[gf].ob(z);
                if !dom_ok || !cod_ok || !fiber_i.is_iso(c) {
                    out.push(format!(
                        "composition comparison for `{}`∘`{}` at `{}` is not an iso",
                        ps.base.arrows[g].id, ps.base.arrows[f].id, fiber_k.objects[z]
                    ));
                }
            }
            // Naturality in the fiber over cod g.
            for v in 0..fiber_k.n_arrows() {
                let (z, zp) = (fiber_k.dom(v), fiber_k.cod(v));
                let lhs = fiber_i.compose(gamma[zp], ps.reindex[f].arr(ps.reindex[g].arr(v)));
                let rhs = fiber_i.compose(ps.reindex[gf].arr(v), gamma[z]);
                if lhs != rhs || lhs.is_none() {
                    out.push(format!(
                        "composition comparison for `{}`∘`{}` is not natural in `{}`",
                        ps.base.arrows[g].id, ps.base.arrows[f].id, fiber_k.arrows[v].id
                    ));
                }
            }
            // Unit equations.
            if ps.base.is_identity(f) {
                for z in 0..fiber_k.n_objects() {
                    let expected = ps.id_iso[i][ps.reindex[g].ob(z)];
                    if gamma[z] != expected {
                        out.push(format!(
                            "left unit law fails for `{}` at `{}`",
                            ps.base.arrows[g].id, fiber_k.objects[z]
                        ));
                    }
                }
            }
            if ps.base.is_identity(g) {
                for z in 0..fiber_k.n_objects() {
                    let expected = ps.reindex[f].arr(ps.id_iso[k][z]);
                    if gamma[z] != expected {
                        out.push(format!(
                            "right unit law fails for `{}` at `{}`",
                            ps.base.arrows[f].id, fiber_k.objects[z]
                        ));
                    }
                }
            }
        }
    }
    // Associativity coherence on all composable triples.
    for h in 0..ps.base.n_arrows() {
        for g in 0..ps.base.n_arrows() {
            if ps.base.cod(g) != ps.base.dom(h) {
                continue;
            }
            for f in 0..ps.base.n_arrows() {
                if ps.base.cod(f) != ps.base.dom(g) {
                    continue;
                }
                let i = ps.base.dom(f);
                let l = ps.base.cod(h);
                let hg = ps.base.compose(h, g).expect("composable");
                let gf = ps.base.compose(g, f).expect("composable");
                let fiber_i = &ps.fibers[i];
                let g_hg_f = &ps.comp_iso[&(hg as u32, f as u32)];
                let g_h_g = &ps.comp_iso[&(h as u32, g as u32)];
                let g_h_gf = &ps.comp_iso[&(h as u32, gf as u32)];
                let g_g_f = &ps.comp_iso[&(g as u32, f as u32)];
                for z in 0..ps.fibers[l].n_objects() {
                    let lhs = fiber_i.compose(g_hg_f[z], ps.reindex[f].arr(g_h_g[z]));
                    let rhs = fiber_i.compose(g_h_gf[z], g_g_f[ps.reindex[h].ob(z)]);
                    if lhs != rhs || lhs.is_none() {
                        out.push(format!(
                            "associativity coherence fails on `{}`∘`{}`∘`{}` at `{}`",
                            ps.base.arrows[h].id,
                            ps.base.arrows[g].id,
                            ps.base.arrows[f].id,
                            ps.fibers[l].objects[z]
                        ));
                    }
                }
            }
        }
    }
    out
}

/// The Grothendieck construction: the projection of the total category of a
/// pseudofunctor onto its base, which is a fibration.
pub fn pseudofunctor_to_fibration(ps: &Pseudofunctor) -> Result<FinFunctor, BridgeError> {
    let errors = validate_pseudofunctor(ps);
    if !errors.is_empty() {
        return Err(BridgeError::ShapeMismatch(errors.join("; ")));
    }
    // Objects (i, x); arrows (f: i → j, y over j, v: x → F_f(y)).
    let mut b: CatBuilder<(usize, usize, usize)> = CatBuilder::new();
    let mut obj_ix: HashMap<(usize, usize), usize> = HashMap::new();
    let mut objs: Vec<(usize, usize)> = Vec::new();
    for i in 0..ps.base.n_objects() {
        for x in 0..ps.fibers[i].n_objects() {
            let o = b.add_object(format!("{}.{}", ps.base.objects[i], ps.fibers[i].objects[x]));
            obj_ix.insert((i, x), o);
            objs.push((i, x));
        }
    }
    let mut on_arrows = Vec::new();
    for f in 0..ps.base.n_arrows() {
        let (i, j) = (ps.base.dom(f), ps.base.cod(f));
        for y in 0..ps.fibers[j].n_objects() {
            let fy = ps.reindex[f].ob(y);
            for v in 0..ps.fibers[i].n_arrows() {
                if ps.fibers[i].cod(v) != fy {
                    continue;
                }
                let x = ps.fibers[i].dom(v);
                b.add_arrow(
                    (f, y, v),
                    format!(
                        "({};{};{})",
                        ps.base.arrows[f].id,
                        ps.fibers[j].objects[y],
                        ps.fibers[i].arrows[v].id
                    ),
                    obj_ix[&(i, x)],
                    obj_ix[&(j, y)],
                );
                on_arrows.push(f);
            }
        }
    }
    let ps2 = ps.clone();
    let objs2 = objs.clone();
    let total = b.build(
        move |o| {
            let (i, x) = objs2[o];
            let idf = ps2.base.identity_of(i);
            let inv = ps2.fibers[i]
                .inverse(ps2.id_iso[i][x])
                .expect("identity comparison is invertible") as usize;
            (idf, x, inv)
        },
        {
            let ps3 = ps.clone();
            move |&(g, z, w), &(f, y, v)| {
                let i = ps3.base.dom(f);
                let _ = y;
                let gf = ps3.base.compose(g, f).expect("composable base arrows");
                let gamma = ps3.comp_iso[&(g as u32, f as u32)][z];
                let fw = ps3.reindex[f].arr(w);
                let u = ps3.fibers[i]
                    .compose(gamma, fw)
                    .and_then(|gw| ps3.fibers[i].compose(gw, v))
                    .expect("composable fiber arrows");
                (gf, z, u)
            }
        },
    );
    let on_objects = objs.iter().map(|&(i, _)| i).collect();
    Ok(FinFunctor { dom: total, cod: ps.base.clone(), on_objects, on_arrows })
}

/// The Grothendieck construction on a unary fibered multicategory: the
/// fibration whose arrows over f are pairs of the chosen cartesian lift of
/// f and a vertical M-arrow into its domain.
pub fn grothendieck_unary(fm: &FiberedMulticategory) -> Result<FinFunctor, BridgeError> {
    for a in 0..fm.m_cat.n_arrows() {
        if !fm.base.is_iso(fm.p.arr(a)) {
            return Err(BridgeError::NotUnary(format!(
                "M-arrow `{}` projects to the non-isomorphism {}",
                fm.m_cat.arrows[a].id,
                fm.base.arrow_label(fm.p.arr(a))
            )));
        }
    }
    let bcat = match &fm.base {
        BaseProvider::Explicit(e) => e.cat.clone(),
        BaseProvider::FinSets(_) => {
            return Err(BridgeError::ShapeMismatch(
                "the Grothendieck construction needs an explicit finite base".into(),
            ))
        }
    };
    let n_obj = fm.m_cat.n_objects();
    let proj_of = |x: usize| -> usize {
        match fm.obj_proj(&x) {
            BObj::Ix(i) => i,
            BObj::Set(_) => unreachable!("explicit base"),
        }
    };
    // The normalized cleavage: the chosen cartesian lift of each base arrow
    // to each object over its codomain, the identity lift on identities.
    let mut lift: HashMap<(usize, usize), usize> = HashMap::new();
    for f in 0..bcat.n_arrows() {
        for y in 0..n_obj {
            if proj_of(y) != bcat.cod(f) {
                continue;
            }
            let l = if bcat.is_identity(f) {
                Some(fm.d_cat.identity_of(y))
            } else {
                fm.d_cat.arrows_to(y).find(|&h| *fm.d.arr(h) == BArr::Ix(f))
            };
            match l {
                Some(l) => {
                    lift.insert((f, y), l);
                }
                None => {
                    return Err(BridgeError::ShapeMismatch(format!(
                        "no lift of `{}` in D with codomain `{}`",
                        bcat.arrows[f].id, fm.m_cat.objects[y]
                    )))
                }
            }
        }
    }
    let verticals: Vec<usize> = (0..fm.m_cat.n_arrows())
        .filter(|&a| fm.base.is_id(fm.p.arr(a)))
        .collect();
    // Contravariant transport of verticals along the cleavage.
    let reindex_square = |f: usize| -> BSquare {
        BSquare {
            top: BArr::Ix(f),
            left: bcat_id(&bcat, bcat.dom(f)),
            bottom: BArr::Ix(f),
            right: bcat_id(&bcat, bcat.cod(f)),
        }
    };
    fn bcat_id(bcat: &FinCategory, i: usize) -> BArr {
        BArr::Ix(bcat.identity_of(i))
    }
    let mut star: HashMap<(usize, usize), usize> = HashMap::new();
    for f in 0..bcat.n_arrows() {
        let sq = reindex_square(f);
        for &w in &verticals {
            let (y, yp) = (fm.m_cat.dom(w), fm.m_cat.cod(w));
            if proj_of(y) != bcat.cod(f) {
                continue;
            }
            let fw = special_lift(fm, &w, &sq, &lift[&(f, y)], &lift[&(f, yp)]).map_err(|e| {
                BridgeError::ShapeMismatch(format!(
                    "reindexing `{}` along `{}` failed: {e:?}",
                    fm.m_cat.arrows[w].id, bcat.arrows[f].id
                ))
            })?;
            star.insert((f, w), fw);
        }
    }
    // Comparison isos between iterated and one-step reindexed objects.
    let mut gamma: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for g in 0..bcat.n_arrows() {
        for f in 0..bcat.n_arrows() {
            if bcat.dom(g) != bcat.cod(f) {
                continue;
            }
            let gf = bcat.compose(g, f).expect("composable");
            let sq = reindex_square(gf);
            for z in 0..n_obj {
                if proj_of(z) != bcat.cod(g) {
                    continue;
                }
                let two_step = fm
                    .d_cat
                    .compose(lift[&(g, z)], lift[&(f, fm.d_cat.dom(lift[&(g, z)]))])
                    .expect("composable lifts");
                let c = special_lift(fm, &fm.m_cat.identity_of(z), &sq, &two_step, &lift[&(gf, z)])
                    .map_err(|e| {
                        BridgeError::ShapeMismatch(format!(
                            "comparison iso for `{}`∘`{}` at `{}` failed: {e:?}",
                            bcat.arrows[g].id, bcat.arrows[f].id, fm.m_cat.objects[z]
                        ))
                    })?;
                gamma.insert((g, f, z), c);
            }
        }
    }
    // The total category: arrows (f, y, v) with v vertical into f*y.
    let mut b: CatBuilder<(usize, usize, usize)> = CatBuilder::new();
    for name in &fm.m_cat.objects {
        b.add_object(name.clone());
    }
    let mut on_arrows = Vec::new();
    for f in 0..bcat.n_arrows() {
        for y in 0..n_obj {
            if proj_of(y) != bcat.cod(f) {
                continue;
            }
            let fy = fm.d_cat.dom(lift[&(f, y)]);
            for &v in &verticals {
                if fm.m_cat.cod(v) != fy {
                    continue;
                }
                b.add_arrow(
                    (f, y, v),
                    format!(
                        "({};{};{})",
                        bcat.arrows[f].id,
                        fm.m_cat.objects[y],
                        fm.m_cat.arrows[v].id
                    ),
                    fm.m_cat.dom(v),
                    y,
                );
                on_arrows.push(f);
            }
        }
    }
    let m_cat = fm.m_cat.clone();
    let bcat2 = bcat.clone();
    let total = b.build(
        |x| (bcat.identity_of(proj_of(x)), x, m_cat.identity_of(x)),
        |&(g, z, w), &(f, _y, v)| {
            let gf = bcat2.compose(g, f).expect("composable base arrows");
            let fw = star[&(f, w)];
            let u = m_cat
                .compose(gamma[&(g, f, z)], fw)
                .and_then(|gw| m_cat.compose(gw, v))
                .expect("composable verticals");
            (gf, z, u)
        },
    );
    let on_objects = (0..n_obj).map(proj_of).collect();
    Ok(FinFunctor { dom: total, cod: bcat, on_objects, on_arrows })
}

/// One arrow of the family fibration of Z/n: a base map together with a
/// ring element per domain element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamArrow {
    pub dom_size: usize,
    pub cod_size: usize,
    pub map: Vec<u32>,
    pub comps: Vec<u32>,
}

/// The family fibration of the one-object ring category Z/n over skeleton
/// finite sets of size at most `bound`, together with the arrow data in
/// total-arrow index order.
pub fn ring_family_fibration_data(n: u32, bound: usize) -> (FinFunctor, Vec<FamArrow>) {
    assert!(n > 0, "the modulus must be positive");
    fn maps(a: usize, b: usize) -> Vec<Vec<u32>> {
        if a == 0 {
            return vec![vec![]];
        }
        if b == 0 {
            return vec![];
        }
        let mut out = vec![Vec::new()];
        for _ in 0..a {
            out = out
                .into_iter()
                .flat_map(|m| {
                    (0..b as u32).map(move |v| {
                        let mut m2 = m.clone();
                        m2.push(v);
                        m2
                    })
                })
                .collect();
        }
        out
    }
    fn tuples(n: u32, len: usize) -> Vec<Vec<u32>> {
        maps(len, n as usize)
    }
    let mut bb: CatBuilder<(usize, usize, Vec<u32>)> = CatBuilder::new();
    for a in 0..=bound {
        bb.add_object(a.to_string());
    }
    for a in 0..=bound {
        for b in 0..=bound {
            for m in maps(a, b) {
                bb.add_arrow((a, b, m.clone()), format!("f{a}-{b}{m:?}"), a, b);
            }
        }
    }
    let bcat = bb.build(
        |x| (x, x, (0..x as u32).collect()),
        |g, f| (f.0, g.1, f.2.iter().map(|&i| g.2[i as usize]).collect()),
    );
    let mut tb: CatBuilder<(usize, usize, Vec<u32>, Vec<u32>)> = CatBuilder::new();
    for a in 0..=bound {
        tb.add_object(format!("F{a}"));
    }
    let mut on_arrows = Vec::new();
    let mut data = Vec::new();
    for a in 0..=bound {
        for b in 0..=bound {
            for m in maps(a, b) {
                let base_ix = bcat
                    .arrow_index(&format!("f{a}-{b}{m:?}"))
                    .expect("base arrow exists");
                for c in tuples(n, a) {
                    tb.add_arrow(
                        (a, b, m.clone(), c.clone()),
                        format!("m{a}-{b}{m:?}{c:?}"),
                        a,
                        b,
                    );
                    on_arrows.push(base_ix);
                    data.push(FamArrow { dom_size: a, cod_size: b, map: m.clone(), comps: c });
                }
            }
        }
    }
    let total = tb.build(
        |x| (x, x, (0..x as u32).collect(), vec![1 % n; x]),
        |g, f| {
            let map = f.2.iter().map(|&i| g.2[i as usize]).collect();
            let comps =
                f.3.iter()
                    .zip(f.2.iter())
                    .map(|(&c, &i)| (g.3[i as usize] * c) % n)
                    .collect();
            (f.0, g.1, map, comps)
        },
    );
    let ff = FinFunctor {
        dom: total,
        cod: bcat,
        on_objects: (0..=bound).collect(),
        on_arrows,
    };
    (ff, data)
}

/// As `ring_family_fibration_data`, returning the projection functor only.
pub fn ring_family_fibration(n: u32, bound: usize) -> FinFunctor {
    ring_family_fibration_data(n, bound).0
}

/// The chaotic category on two objects: exactly one arrow between each
/// ordered pair, hence a contractible groupoid.
fn chaotic_pair(tag: &str) -> FinCategory {
    let mut b: CatBuilder<(usize, usize)> = CatBuilder::new();
    b.add_object(format!("{tag}a"));
    b.add_object(format!("{tag}b"));
    for d in 0..2 {
        for c in 0..2 {
            b.add_arrow((d, c), format!("{tag}{d}{c}"), d, c);
        }
    }
    b.build(|x| (x, x), |&(_, c2), &(d1, _)| (d1, c2))
}

/// The interval category 0 → 1.
fn interval() -> FinCategory {
    let mut b: CatBuilder<(usize, usize)> = CatBuilder::new();
    b.add_object("0".into());
    b.add_object("1".into());
    b.add_arrow((0, 0), "id0".into(), 0, 0);
    b.add_arrow((0, 1), "t".into(), 0, 1);
    b.add_arrow((1, 1), "id1".into(), 1, 1);
    b.build(|x| (x, x), |&(_, c), &(d, _)| (d, c))
}

/// A pseudofunctor on the interval with two contractible two-object
/// groupoid fibers and the swap equivalence as reindexing.
pub fn groupoid_pseudofunctor() -> Pseudofunctor {
    let base = interval();
    let fiber0 = chaotic_pair("x");
    let fiber1 = chaotic_pair("y");
    let identity0 = FinFunctor {
        dom: fiber0.clone(),
        cod: fiber0.clone(),
        on_objects: vec![0, 1],
        on_arrows: (0..fiber0.n_arrows()).collect(),
    };
    let identity1 = FinFunctor {
        dom: fiber1.clone(),
        cod: fiber1.clone(),
        on_objects: vec![0, 1],
        on_arrows: (0..fiber1.n_arrows()).collect(),
    };
    // The swap: a ↦ b, b ↦ a; the unique arrows follow along.
    let swap = FinFunctor {
        dom: fiber1.clone(),
        cod: fiber0.clone(),
        on_objects: vec![1, 0],
        on_arrows: vec![3, 2, 1, 0],
    };
    let id_arrows = |fiber: &FinCategory| -> Vec<usize> {
        (0..fiber.n_objects()).map(|x| fiber.identity_of(x)).collect()
    };
    let id_iso = vec![id_arrows(&fiber0), id_arrows(&fiber1)];
    // The base arrows are id0 = 0, t = 1, id1 = 2; every composable pair
    // involves an identity, so the unit laws force all the comparisons.
    let t_ix = base.arrow_index("t").expect("t exists");
    let id0 = base.identity_of(0);
    let id1 = base.identity_of(1);
    let mut comp_iso = HashMap::new();
    comp_iso.insert((id0 as u32, id0 as u32), id_arrows(&fiber0));
    comp_iso.insert((id1 as u32, id1 as u32), id_arrows(&fiber1));
    comp_iso.insert(
        (t_ix as u32, id0 as u32),
        (0..fiber1.n_objects()).map(|z| fiber0.identity_of(swap.ob(z))).collect(),
    );
    comp_iso.insert(
        (id1 as u32, t_ix as u32),
        (0..fiber1.n_objects()).map(|z| fiber0.identity_of(swap.ob(z))).collect(),
    );
    Pseudofunctor {
        base,
        fibers: vec![fiber0, fiber1],
        reindex: vec![identity0, swap, identity1],
        comp_iso,
        id_iso,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartesian::{
        fibered_hom_monoid, verify_cartesian_structure, CartError, CartesianStructure, Section,
    };
    use crate::core::{materialize, verify_axioms};
    use crate::fincat::classify_fibration;
    use crate::standard::{poset3, skeletal_universe, zn_ring, FamilyInstance, SeqTheory};

    fn identity_functor(cat: &FinCategory) -> FinFunctor {
        FinFunctor {
            dom: cat.clone(),
            cod: cat.clone(),
            on_objects: (0..cat.n_objects()).collect(),
            on_arrows: (0..cat.n_arrows()).collect(),
        }
    }

    fn point() -> FinCategory {
        let mut b: CatBuilder<u32> = CatBuilder::new();
        b.add_object("*".into());
        b.add_arrow(0, "id".into(), 0, 0);
        b.build(|_| 0, |_, _| 0)
    }

    fn z2_group() -> FinCategory {
        let mut b: CatBuilder<u32> = CatBuilder::new();
        b.add_object("*".into());
        b.add_arrow(0, "e".into(), 0, 0);
        b.add_arrow(1, "s".into(), 0, 0);
        b.build(|_| 0, |g, f| g ^ f)
    }

    fn ring_instance(bound: usize) -> FamilyInstance<SeqTheory> {
        let (cat, enrich) = zn_ring(2);
        FamilyInstance::new(SeqTheory { cat, enrich: Some(enrich) }, skeletal_universe(bound), bound)
    }

    /// The arrow category of `c` with the codomain projection.
    fn codomain_fibration(c: &FinCategory) -> FinFunctor {
        let mut b: CatBuilder<(usize, usize, usize, usize)> = CatBuilder::new();
        for a in 0..c.n_arrows() {
            b.add_object(format!("[{}]", c.arrows[a].id));
        }
        let mut on_arrows = Vec::new();
        for a in 0..c.n_arrows() {
            for a2 in 0..c.n_arrows() {
                for u in 0..c.n_arrows() {
                    if c.dom(u) != c.dom(a) || c.cod(u) != c.dom(a2) {
                        continue;
                    }
                    for v in 0..c.n_arrows() {
                        if c.dom(v) != c.cod(a) || c.cod(v) != c.cod(a2) {
                            continue;
                        }
                        if c.compose(a2, u) != c.compose(v, a) {
                            continue;
                        }
                        b.add_arrow(
                            (a, a2, u, v),
                            format!("({},{})", c.arrows[u].id, c.arrows[v].id),
                            a,
                            a2,
                        );
                        on_arrows.push(v);
                    }
                }
            }
        }
        let c2 = c.clone();
        let arrow_cat = b.build(
            |a| (a, a, c2.identity_of(c2.dom(a)), c2.identity_of(c2.cod(a))),
            |&(_, a2, u2, v2), &(a1, _, u1, v1)| {
                (
                    a1,
                    a2,
                    c2.compose(u2, u1).expect("composable"),
                    c2.compose(v2, v1).expect("composable"),
                )
            },
        );
        let on_objects = (0..c.n_arrows()).map(|a| c.cod(a)).collect();
        FinFunctor { dom: arrow_cat, cod: c.clone(), on_objects, on_arrows }
    }

    #[test]
    fn identity_fibrations_give_pullback_squares() {
        for cat in [poset3(), point()] {
            let bridge = from_fibration(&identity_functor(&cat)).unwrap();
            assert!(verify_axioms(&bridge.fm).is_empty());
            assert_eq!(bridge.fm.d_cat.n_arrows(), cat.n_arrows());
            assert_eq!(bridge.fm.m_cat.n_arrows(), cat.n_arrows());
            let report = fibchar_check(&bridge.fm, &bridge.inclusion).unwrap();
            assert!(report.squares_are_pullbacks, "{:?}", report.witnesses);
            assert!(report.lifts_are_cartesian, "{:?}", report.witnesses);
        }
    }

    #[test]
    fn missing_lifts_are_rejected() {
        let total = point();
        let base = interval();
        let p = FinFunctor {
            dom: total,
            cod: base,
            on_objects: vec![1],
            on_arrows: vec![2],
        };
        assert!(matches!(from_fibration(&p), Err(BridgeError::NotAFibration(_))));
    }

    #[test]
    fn ring_families_materialize_through_the_fibration() {
        let (p, data) = ring_family_fibration_data(2, 2);
        assert!(validate_functor(&p).is_empty());
        assert_eq!(p.cod.n_arrows(), 11);
        assert_eq!(p.dom.n_arrows(), 29);
        assert_eq!(data.len(), 29);
        let bridge = from_fibration(&p).unwrap();
        assert!(verify_axioms(&bridge.fm).is_empty());
        // The cartesian arrows are exactly the all-units families, one per
        // base map.
        assert_eq!(bridge.fm.d_cat.n_arrows(), 11);
        // Hom-set sizes agree with the lazy family instance of the same
        // ring; objects are matched by their endo-hom counts.
        let mat = materialize(&ring_instance(2));
        assert_eq!(mat.m_cat.n_objects(), 3);
        let match_of = |a: usize| -> usize {
            let target = bridge.fm.m_cat.hom(a, a).len();
            (0..3).find(|&x| mat.m_cat.hom(x, x).len() == target).expect("matching object")
        };
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(
                    bridge.fm.m_cat.hom(a, b).len(),
                    mat.m_cat.hom(match_of(a), match_of(b)).len(),
                    "hom({a},{b})"
                );
            }
        }
    }

    #[test]
    fn codomain_fibration_of_the_interval_passes() {
        let p = codomain_fibration(&interval());
        assert!(validate_functor(&p).is_empty());
        let bridge = from_fibration(&p).unwrap();
        assert!(verify_axioms(&bridge.fm).is_empty());
        assert_eq!(bridge.fm.m_cat.n_objects(), 3);
    }

    #[test]
    fn search_finds_the_unit_inclusion_for_ring_families() {
        // The ring family instance is itself the image of a fibration, so
        // the all-units inclusion turns every special square into a
        // pullback; the search must find some such functor, and soundness
        // forces its images to be cartesian.
        let fm = materialize(&ring_instance(2));
        let f = fibchar_search(&fm).expect("the unit inclusion exists");
        let report = fibchar_check(&fm, &f).unwrap();
        assert!(report.squares_are_pullbacks, "{:?}", report.witnesses);
        assert!(report.lifts_are_cartesian, "{:?}", report.witnesses);
    }

    #[test]
    fn unsatisfiable_squares_defeat_the_search() {
        let mut fm = materialize(&ring_instance(2));
        // The size-one family has exactly two vertical endos (scaling by 0
        // and by 1); a special square between identities with mismatched
        // vertical sides cannot commute, let alone be a pullback.
        let x = (0..fm.m_cat.n_objects())
            .find(|&x| {
                fm.m_cat
                    .hom(x, x)
                    .iter()
                    .filter(|&&a| {
                        fm.m_cat.dom(a as usize) == x && {
                            let pa = fm.p.arr(a as usize);
                            fm.base.is_id(pa)
                        }
                    })
                    .count()
                    == 2
            })
            .expect("size-one object");
        let endos: Vec<u32> = fm
            .m_cat
            .hom(x, x)
            .iter()
            .copied()
            .filter(|&a| fm.base.is_id(fm.p.arr(a as usize)))
            .collect();
        let idx = fm.d_cat.identity_of(x) as u32;
        fm.special.insert((idx, idx, endos[0], endos[1]));
        assert!(fibchar_search(&fm).is_none());
    }

    #[test]
    fn groupoid_pseudofunctor_round_trips() {
        let ps = groupoid_pseudofunctor();
        assert!(validate_pseudofunctor(&ps).is_empty());
        let p = pseudofunctor_to_fibration(&ps).unwrap();
        assert!(validate_functor(&p).is_empty());
        assert_eq!(p.dom.n_objects(), 4);
        assert_eq!(p.dom.n_arrows(), 12);
        let report = classify_fibration(&p).unwrap();
        assert!(report.is_fibration_in_groupoids, "{:?}", report.witnesses);
        // Every arrow is cartesian, so D is the whole total category.
        let bridge = from_fibration(&p).unwrap();
        assert!(verify_axioms(&bridge.fm).is_empty());
        assert_eq!(bridge.fm.d_cat.n_arrows(), 12);
        // The unary restriction feeds the inverse Grothendieck
        // construction, which recovers a fibration of the same shape.
        let fm = unary_restriction(&p).unwrap();
        assert_eq!(fm.m_cat.n_arrows(), 8);
        let q = grothendieck_unary(&fm).unwrap();
        assert!(validate_functor(&q).is_empty());
        assert_eq!(q.dom.n_objects(), p.dom.n_objects());
        assert_eq!(q.dom.n_arrows(), p.dom.n_arrows());
        for f in 0..p.cod.n_arrows() {
            let count = |ff: &FinFunctor| ff.on_arrows.iter().filter(|&&g| g == f).count();
            assert_eq!(count(&q), count(&p), "arrows over `{}`", p.cod.arrows[f].id);
        }
        let round = from_fibration(&q).unwrap();
        assert!(verify_axioms(&round.fm).is_empty());
        let report = fibchar_check(&round.fm, &round.inclusion).unwrap();
        assert!(report.lifts_are_cartesian, "{:?}", report.witnesses);
    }

    #[test]
    fn broken_pseudofunctor_is_rejected() {
        let mut ps = groupoid_pseudofunctor();
        let t_ix = ps.base.arrow_index("t").unwrap() as u32;
        let id0 = ps.base.identity_of(0) as u32;
        // Replace a comparison iso with a non-unit arrow: x01 is the unique
        // arrow xa → xb, which breaks the endpoints of the comparison.
        let bad = ps.fibers[0].arrow_index("x01").unwrap();
        ps.comp_iso.get_mut(&(t_ix, id0)).unwrap()[0] = bad;
        assert!(!validate_pseudofunctor(&ps).is_empty());
        assert!(matches!(pseudofunctor_to_fibration(&ps), Err(BridgeError::ShapeMismatch(_))));
    }

    #[test]
    fn one_object_base_recovers_the_monoid() {
        let p = FinFunctor {
            dom: z2_group(),
            cod: point(),
            on_objects: vec![0],
            on_arrows: vec![0, 0],
        };
        let bridge = from_fibration(&p).unwrap();
        assert!(verify_axioms(&bridge.fm).is_empty());
        let q = grothendieck_unary(&bridge.fm).unwrap();
        assert_eq!(q.dom.n_objects(), 1);
        assert_eq!(q.dom.n_arrows(), 2);
    }

    #[test]
    fn many_input_arrows_block_the_inverse_construction() {
        let fm = materialize(&ring_instance(2));
        assert!(matches!(grothendieck_unary(&fm), Err(BridgeError::NotUnary(_))));
    }

    /// The family fibration of Z/2 carries sums: the triangle (f, a, b) is
    /// special when each component of b is the xor of the components of a
    /// over the corresponding fiber of the base map.
    fn ring_family_structure() -> (CartesianStructure, Bridge, Vec<FamArrow>) {
        let (p, data) = ring_family_fibration_data(2, 2);
        let bridge = from_fibration(&p).unwrap();
        let mut triangles = std::collections::BTreeSet::new();
        for h in 0..bridge.fm.d_cat.n_arrows() {
            let top = &data[bridge.inclusion.arr(h)];
            for (ai, a) in data.iter().enumerate() {
                if a.dom_size != top.dom_size {
                    continue;
                }
                for (bi, b) in data.iter().enumerate() {
                    if b.dom_size != top.cod_size || b.cod_size != a.cod_size {
                        continue;
                    }
                    let base_ok = (0..top.dom_size)
                        .all(|i| b.map[top.map[i] as usize] == a.map[i]);
                    if !base_ok {
                        continue;
                    }
                    let sums_ok = (0..top.cod_size).all(|v| {
                        let sum = (0..top.dom_size)
                            .filter(|&i| top.map[i] as usize == v)
                            .fold(0, |acc, i| acc ^ a.comps[i]);
                        b.comps[v] == sum
                    });
                    if sums_ok {
                        triangles.insert((h as u32, ai as u32, bi as u32));
                    }
                }
            }
        }
        (CartesianStructure { host: bridge.fm.clone(), triangles }, bridge, data)
    }

    fn unit_section(bridge: &Bridge, data: &[FamArrow]) -> Section {
        let mut obj = std::collections::BTreeMap::new();
        for i in 0..bridge.fm.m_cat.n_objects() {
            obj.insert(BObj::Ix(i), i);
        }
        let mut arr = std::collections::BTreeMap::new();
        for h in 0..bridge.fm.d_cat.n_arrows() {
            let mi = bridge.inclusion.arr(h);
            let f = match bridge.fm.p.arr(mi) {
                BArr::Ix(f) => *f,
                BArr::Map(_) => unreachable!("explicit base"),
            };
            assert!(data[mi].comps.iter().all(|&c| c == 1));
            arr.insert(BArr::Ix(f), mi);
        }
        Section { obj, arr }
    }

    #[test]
    fn family_sums_satisfy_the_cartesian_axioms() {
        let (cs, _, _) = ring_family_structure();
        let violations = verify_cartesian_structure(&cs);
        assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn transport_sections_form_a_monoid() {
        let (cs, bridge, data) = ring_family_structure();
        let s = unit_section(&bridge, &data);
        let (dp, violations) =
            fibered_hom_monoid(&cs, &bridge.inclusion.on_arrows, &s, &s).unwrap();
        assert!(violations.is_empty(), "{violations:?}");
        // One vertical per family of ring elements: 1 + 2 + 4 objects.
        assert_eq!(dp.d_cat.n_objects(), 7);
        assert_eq!(dp.p_cat.n_objects(), 7);
    }

    #[test]
    fn broken_section_is_rejected() {
        let (cs, bridge, data) = ring_family_structure();
        let mut s = unit_section(&bridge, &data);
        // Point one base arrow at a non-cartesian family arrow.
        let zero = data
            .iter()
            .position(|a| a.dom_size == 1 && a.cod_size == 1 && a.comps == vec![0])
            .unwrap();
        let key = match bridge.fm.p.arr(zero) {
            BArr::Ix(f) => BArr::Ix(*f),
            BArr::Map(_) => unreachable!("explicit base"),
        };
        s.arr.insert(key, zero);
        let t = unit_section(&bridge, &data);
        assert!(matches!(
            fibered_hom_monoid(&cs, &bridge.inclusion.on_arrows, &s, &t),
            Err(CartError::NotASection(_))
        ));
    }
}
