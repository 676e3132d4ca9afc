//! End-to-end acceptance suite: one pass/fail line per criterion.

use std::collections::BTreeSet;
use std::collections::BTreeMap;
use std::process::Command;

use fibmult::base::{BArr, BObj};
use fibmult::cartesian::{
    check_beck_chevalley_equation, check_coherence, check_frobenius_equation, coreindex,
    fibered_hom_monoid, materialize_cartesian, products_equivalence_report,
    verify_cartesian_structure, CartesianStructure, Section,
};
use fibmult::cli::{parse_presentation, serialize_presentation};
use fibmult::core::{
    commute_endomorphisms_all_choices, eckmann_hilton, materialize, verify_axioms,
    verify_fibered_monoid, verify_monoid_in_m, AxiomViolation, Endomorphism,
    FiberedMulticategory, MonoidInM, Multicat,
};
use fibmult::fibration_bridge::{
    fibchar_check, from_fibration, grothendieck_unary, groupoid_pseudofunctor,
    pseudofunctor_to_fibration, ring_family_fibration_data, unary_restriction,
    validate_pseudofunctor, Bridge, FamArrow,
};
use fibmult::fincat::{classify_fibration, validate_functor, FinFunctor};
use fibmult::finset::{FinMap, FinSet};
use fibmult::standard::{
    check_extensivity, gen_example, mat_z2, skeletal_universe, universe_with_apexes, zn_ring,
    DFam, ExtensivityViolation, Family, FamilyInstance, FnSingle, FnTheory, MFam, SeqTheory,
    TerminalTheory, Theory,
};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn criterion(n: usize, name: &str, body: impl FnOnce() -> Result<(), String>) {
    let res = body();
    println!("criterion {n} ({name}): {}", if res.is_ok() { "pass" } else { "fail" });
    if let Err(e) = res {
        panic!("criterion {n} ({name}): {e}");
    }
}

fn ring_lazy(bound: usize, universe: Vec<FinSet>) -> FamilyInstance<SeqTheory> {
    let (cat, enrich) = zn_ring(2);
    FamilyInstance::new(SeqTheory { cat, enrich: Some(enrich) }, universe, bound)
}

fn mat_lazy(bound: usize, universe: Vec<FinSet>) -> FamilyInstance<SeqTheory> {
    let (cat, enrich) = mat_z2(bound);
    FamilyInstance::new(SeqTheory { cat, enrich: Some(enrich) }, universe, bound)
}

/// Removes the m-arrow at index `k`, dropping its squares and reindexing.
fn delete_m_arrow(fm: &FiberedMulticategory, k: usize) -> FiberedMulticategory {
    let mut out = fm.clone();
    out.m_cat.delete_arrow(k);
    out.p.on_arrows.remove(k);
    let shift = |i: u32| -> Option<u32> {
        if (i as usize) == k {
            None
        } else if (i as usize) > k {
            Some(i - 1)
        } else {
            Some(i)
        }
    };
    out.special = fm
        .special
        .iter()
        .filter_map(|&(t, b, r, l)| Some((t, b, shift(r)?, shift(l)?)))
        .collect();
    out
}

#[test]
fn criterion_01_axiom_suite() {
    criterion(1, "axiom suite", || {
        let corpus = [
            ("terminal", None, 3),
            ("ring", Some(2), 3),
            ("ring", Some(3), 2),
            ("sequential", None, 2),
            ("finset_self_indexed", None, 2),
        ];
        for (name, modulus, bound) in corpus {
            let fm = gen_example(name, modulus, bound)
                .map_err(|e| format!("{name}: {e:?}"))?
                .fm;
            let axioms = verify_axioms(&fm);
            ensure!(axioms.is_empty(), "{name} bound {bound}: axiom violations {axioms:?}");
            let ext = check_extensivity(&fm);
            ensure!(ext.is_empty(), "{name} bound {bound}: extensivity violations {ext:?}");
        }
        let fm = gen_example("ring", Some(2), 2).unwrap().fm;
        // Mutant: deleting a special square with a non-identity top loses a
        // required lift.
        let mut deleted = fm.clone();
        let &sq = deleted
            .special
            .iter()
            .find(|s| !deleted.d_cat.is_identity(s.0 as usize))
            .expect("a non-identity-top square");
        deleted.special.remove(&sq);
        let violations = verify_axioms(&deleted);
        ensure!(
            violations.iter().any(|v| matches!(v, AxiomViolation::ExistenceViolation { .. })),
            "deleted square: no existence violation in {violations:?}"
        );
        ensure!(
            !violations.iter().any(|v| matches!(v, AxiomViolation::UniquenessViolation { .. })),
            "deleted square: unexpected uniqueness violation"
        );
        // Mutant: duplicating a lift with a parallel left side breaks
        // uniqueness.
        let mut duplicated = fm.clone();
        let extra = duplicated
            .special
            .iter()
            .find_map(|&(t, b, r, l)| {
                (0..duplicated.m_cat.n_arrows() as u32).find_map(|lp| {
                    let ok = lp != l
                        && duplicated.m_cat.dom(lp as usize) == duplicated.m_cat.dom(l as usize)
                        && duplicated.m_cat.cod(lp as usize) == duplicated.m_cat.cod(l as usize)
                        && duplicated.p.arr(lp as usize) == duplicated.p.arr(l as usize);
                    ok.then_some((t, b, r, lp))
                })
            })
            .expect("a square with a parallel alternative left");
        duplicated.special.insert(extra);
        let violations = verify_axioms(&duplicated);
        ensure!(
            violations.iter().any(|v| matches!(v, AxiomViolation::UniquenessViolation { .. })),
            "duplicated lift: no uniqueness violation in {violations:?}"
        );
        ensure!(
            !violations.iter().any(|v| matches!(v, AxiomViolation::ExistenceViolation { .. })),
            "duplicated lift: unexpected existence violation"
        );
        // Mutant: deleting a family arrow leaves an amalgamation without a
        // witness, caught by the extensivity check. A vertical arrow with a
        // two-element codomain is nobody else's point restriction.
        let k = (0..fm.m_cat.n_arrows())
            .find(|&a| {
                let m = fm.p.arr(a).map();
                !fm.m_cat.is_identity(a)
                    && m.is_identity()
                    && m.cod.len() == 2
                    && fm.m_cat.arrows[a].id.contains("<(0);(0)>")
            })
            .expect("the zero vertical arrow");
        let dropped = delete_m_arrow(&fm, k);
        let ext = check_extensivity(&dropped);
        ensure!(
            ext.iter().any(|v| matches!(v, ExtensivityViolation::ExistenceViolation { .. })),
            "deleted arrow: no extensivity existence violation in {ext:?}"
        );
        Ok(())
    });
}

#[test]
fn criterion_02_hand_computed_transports() {
    criterion(2, "hand-computed transports", || {
        // Ring families over Z/2: f = (1 ↦ 3, 2 ↦ 1, 3 ↦ 3) sends the tuple
        // (b, c, a) to (c, 0, b + a).
        let fm = ring_lazy(3, skeletal_universe(3));
        let i3 = FinSet::skeleton(3);
        let x = Family { index: i3.clone(), sorts: vec!["r".into(); 3] };
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
            let got = coreindex(&fm, &arr, &lift, &h);
            ensure!(got == Ok(expected), "ring transport of {arr:?} gave {got:?}");
        }
        // The finite-product-category analogue: transport along the same f
        // precomposes every function with (b, c, a) ↦ (a, b, a).
        let theory = FnTheory { sets: vec![("A".into(), 2), ("B".into(), 2), ("C".into(), 2)] };
        let singles = theory.singles(&["A".into(), "B".into(), "A".into()], "C");
        ensure!(singles.len() == 256, "expected 256 ternary functions");
        let fm = FamilyInstance::new(theory, skeletal_universe(3), 3);
        let i1 = FinSet::skeleton(1);
        let y = Family { index: i3.clone(), sorts: vec!["B".into(), "C".into(), "A".into()] };
        let x = Family { index: i3.clone(), sorts: vec!["A".into(), "B".into(), "A".into()] };
        let z = Family { index: i1.clone(), sorts: vec!["C".into()] };
        let lift = DFam { dom: x.clone(), cod: y.clone(), map: f };
        let bang = FinMap::from_indices(i3.clone(), i1, vec![0, 0, 0]);
        let h = BArr::Map(bang.clone());
        for t in singles {
            let arr = MFam {
                dom: x.clone(),
                cod: z.clone(),
                map: bang.clone(),
                singles: vec![t.clone()],
            };
            let res = coreindex(&fm, &arr, &lift, &h).map_err(|e| format!("{e:?}"))?;
            ensure!(res.dom == y, "transport changed the domain: {res:?}");
            for b in 0..2 {
                for c in 0..2 {
                    for a in 0..2 {
                        ensure!(
                            res.singles[0].eval(&[b, c, a]) == t.eval(&[a, b, a]),
                            "transport of {t:?} disagrees at ({b},{c},{a})"
                        );
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_03_products_equivalence() {
    criterion(3, "products equivalence", || {
        let fm = mat_lazy(2, universe_with_apexes(2));
        let report = products_equivalence_report(&fm, 2);
        ensure!(report.agree, "matrix instance: notions disagree {:?}", report.notes);
        ensure!(report.entries.len() == 57, "matrix entries: {}", report.entries.len());
        let with = report.entries.iter().filter(|e| e.algebraic).count();
        ensure!(with == 48, "matrix entries with products: {with}");
        for e in &report.entries {
            ensure!(e.algebraic == e.universal && e.algebraic == e.representable, "{e:?}");
        }
        let fm = ring_lazy(3, universe_with_apexes(3));
        let report = products_equivalence_report(&fm, 3);
        ensure!(report.agree, "ring instance: notions disagree {:?}", report.notes);
        ensure!(report.entries.len() == 60, "ring entries: {}", report.entries.len());
        let with = report.entries.iter().filter(|e| e.algebraic).count();
        ensure!(with == 10, "ring entries with products: {with}");
        for e in &report.entries {
            ensure!(e.algebraic == e.universal && e.algebraic == e.representable, "{e:?}");
        }
        Ok(())
    });
}

fn corpus_structures() -> Vec<(&'static str, CartesianStructure)> {
    vec![
        (
            "terminal",
            materialize_cartesian(&FamilyInstance::new(TerminalTheory, skeletal_universe(2), 2)),
        ),
        ("ring", materialize_cartesian(&ring_lazy(2, skeletal_universe(2)))),
        ("family fibration", ring_family_structure().0),
    ]
}

#[test]
fn criterion_04_coherence() {
    criterion(4, "coherence of invertible transports", || {
        for (name, cs) in corpus_structures() {
            ensure!(!cs.triangles.is_empty(), "{name}: no triangles");
            let violations = check_coherence(&cs);
            ensure!(violations.is_empty(), "{name}: {violations:?}");
        }
        Ok(())
    });
}

#[test]
fn criterion_05_frobenius_beck_chevalley() {
    criterion(5, "Frobenius and Beck-Chevalley", || {
        for (name, cs) in corpus_structures() {
            let fr = check_frobenius_equation(&cs);
            ensure!(fr.is_empty(), "{name}: Frobenius {fr:?}");
            let bc = check_beck_chevalley_equation(&cs);
            ensure!(bc.is_empty(), "{name}: Beck-Chevalley {bc:?}");
        }
        Ok(())
    });
}

/// The indexed monoid of a commutative table on {0, 1}: objects are the
/// all-`S` families, d-sections the reindexings, p-sections the fiberwise
/// folds of the operation.
fn two_element_monoid(
    fm: &FamilyInstance<FnTheory>,
    op: [usize; 4],
    unit: usize,
) -> MonoidInM<FamilyInstance<FnTheory>> {
    let fold = |k: usize| -> FnSingle {
        let mut table = Vec::with_capacity(1 << k);
        for args in 0..(1usize << k) {
            let mut acc = unit;
            for p in 0..k {
                let a = (args >> (k - 1 - p)) & 1;
                acc = op[acc * 2 + a];
            }
            table.push(acc);
        }
        FnSingle { dims: vec![2; k], cod_size: 2, table }
    };
    let family = |s: &FinSet| Family { index: s.clone(), sorts: vec!["S".into(); s.len()] };
    let mut obj = BTreeMap::new();
    for i in fm.base().objects() {
        let fam = family(i.set());
        obj.insert(i, fam);
    }
    let mut d_sec = BTreeMap::new();
    let mut p_sec = BTreeMap::new();
    for f in fm.base().all_arrows() {
        let m = f.map().clone();
        let (dom, cod) = (family(&m.dom), family(&m.cod));
        d_sec.insert(f.clone(), DFam { dom: dom.clone(), cod: cod.clone(), map: m.clone() });
        let singles = (0..m.cod.len()).map(|j| fold(m.fiber_idx(j).len())).collect();
        p_sec.insert(f, MFam { dom, cod, map: m, singles });
    }
    MonoidInM { obj, d_sec, p_sec }
}

#[test]
fn criterion_06_eckmann_hilton() {
    criterion(6, "Eckmann-Hilton", || {
        // The four commutative monoid structures on {0, 1}.
        let structures: [(&str, [usize; 4], usize); 4] = [
            ("xor", [0, 1, 1, 0], 0),
            ("or", [0, 1, 1, 1], 0),
            ("and", [0, 0, 0, 1], 1),
            ("xnor", [1, 0, 0, 1], 1),
        ];
        let small = FamilyInstance::new(
            FnTheory { sets: vec![("S".into(), 2)] },
            skeletal_universe(2),
            2,
        );
        for (name, op, unit) in structures {
            let m = two_element_monoid(&small, op, unit);
            let violations = verify_monoid_in_m(&small, &m);
            ensure!(violations.is_empty(), "{name} is not a monoid in M: {violations:?}");
        }
        let fm = FamilyInstance::new(
            FnTheory { sets: vec![("S".into(), 2)] },
            universe_with_apexes(2),
            4,
        );
        let i = BObj::Set(FinSet::skeleton(2));
        let monoids: Vec<_> = structures
            .iter()
            .map(|&(name, op, unit)| (name, two_element_monoid(&fm, op, unit)))
            .collect();
        for (n1, m1) in &monoids {
            for (n2, m2) in &monoids {
                let rep = eckmann_hilton(&fm, m1, m2, &i).map_err(|e| format!("{e:?}"))?;
                ensure!(
                    !(rep.shared_identity && rep.commuting) || rep.collapse_over_i,
                    "{n1}/{n2}: shared identity and commuting operations but no collapse: {rep:?}"
                );
                ensure!(
                    !rep.identities_commute || rep.identities_coincide,
                    "{n1}/{n2}: commuting diagonal liftings but distinct identities: {rep:?}"
                );
            }
        }
        let rep = eckmann_hilton(&fm, &monoids[0].1, &monoids[0].1, &i).unwrap();
        ensure!(
            rep.shared_identity && rep.commuting && rep.collapse_over_i
                && rep.identities_commute && rep.identities_coincide,
            "xor against itself should satisfy every flag: {rep:?}"
        );
        let rep = eckmann_hilton(&fm, &monoids[0].1, &monoids[1].1, &i).unwrap();
        ensure!(
            rep.shared_identity && !rep.commuting && !rep.collapse_over_i,
            "xor/or share their unit but do not interchange: {rep:?}"
        );
        let rep = eckmann_hilton(&fm, &monoids[0].1, &monoids[2].1, &i).unwrap();
        ensure!(!rep.shared_identity, "xor/and have distinct units: {rep:?}");
        Ok(())
    });
}

#[test]
fn criterion_07_grothendieck_bridge() {
    criterion(7, "Grothendieck bridge", || {
        let ps = groupoid_pseudofunctor();
        let issues = validate_pseudofunctor(&ps);
        ensure!(issues.is_empty(), "pseudofunctor invalid: {issues:?}");
        let p = pseudofunctor_to_fibration(&ps).map_err(|e| format!("{e}"))?;
        ensure!(validate_functor(&p).is_empty(), "total projection is not a functor");
        let report = classify_fibration(&p).map_err(|e| format!("{e:?}"))?;
        ensure!(report.is_fibration_in_groupoids, "not a fibration: {:?}", report.witnesses);
        let fm = unary_restriction(&p).map_err(|e| format!("{e}"))?;
        let q = grothendieck_unary(&fm).map_err(|e| format!("{e}"))?;
        ensure!(validate_functor(&q).is_empty(), "reconstructed projection is not a functor");
        ensure!(
            q.dom.n_objects() == p.dom.n_objects() && q.dom.n_arrows() == p.dom.n_arrows(),
            "reconstruction changed the total category shape"
        );
        let count = |ff: &FinFunctor, f: usize| ff.on_arrows.iter().filter(|&&g| g == f).count();
        for f in 0..p.cod.n_arrows() {
            ensure!(count(&q, f) == count(&p, f), "fiber over arrow {f} changed size");
        }
        let round = from_fibration(&q).map_err(|e| format!("{e}"))?;
        let axioms = verify_axioms(&round.fm);
        ensure!(axioms.is_empty(), "round trip violates the axioms: {axioms:?}");
        let rep = fibchar_check(&round.fm, &round.inclusion).map_err(|e| format!("{e}"))?;
        ensure!(
            rep.squares_are_pullbacks && rep.lifts_are_cartesian,
            "characterization fails on the round trip: {:?}",
            rep.witnesses
        );
        Ok(())
    });
}

#[test]
fn criterion_08_choice_independence() {
    criterion(8, "choice independence", || {
        // Identity endomorphisms of the terminal instance commute under
        // every admissible pullback/lift choice.
        let fm = materialize(&FamilyInstance::new(TerminalTheory, skeletal_universe(2), 2));
        for x in fm.objects() {
            let e = Endomorphism::new(&fm, fm.m_id(&x), fm.d_id(&x)).unwrap();
            let flags = commute_endomorphisms_all_choices(&fm, &e, &e)
                .map_err(|e| format!("{e:?}"))?;
            ensure!(!flags.is_empty(), "terminal object {x}: no admissible choice");
            ensure!(flags.iter().all(|&f| f), "terminal object {x}: flags {flags:?}");
        }
        // Scalar endomorphisms of a ring family commute (rs = sr in Z/2),
        // uniformly across choices.
        let fm = ring_lazy(2, skeletal_universe(2));
        let x = Family { index: FinSet::skeleton(1), sorts: vec!["r".into()] };
        let endo = |r: u32| {
            let a = MFam {
                dom: x.clone(),
                cod: x.clone(),
                map: FinMap::identity(&x.index),
                singles: vec![vec![r]],
            };
            Endomorphism::new(&fm, a, fm.d_id(&x)).unwrap()
        };
        for r in 0..2 {
            for s in 0..2 {
                let flags = commute_endomorphisms_all_choices(&fm, &endo(r), &endo(s))
                    .map_err(|e| format!("{e:?}"))?;
                ensure!(!flags.is_empty(), "ring scalars {r},{s}: no admissible choice");
                ensure!(flags.iter().all(|&f| f), "ring scalars {r},{s}: flags {flags:?}");
            }
        }
        // Negation and the constant-zero function do not commute; the verdict
        // is still uniform across choices.
        let fm = FamilyInstance::new(
            FnTheory { sets: vec![("S".into(), 2)] },
            skeletal_universe(2),
            2,
        );
        let x = Family { index: FinSet::skeleton(1), sorts: vec!["S".into()] };
        let endo = |table: Vec<usize>| {
            let a = MFam {
                dom: x.clone(),
                cod: x.clone(),
                map: FinMap::identity(&x.index),
                singles: vec![FnSingle { dims: vec![2], cod_size: 2, table }],
            };
            Endomorphism::new(&fm, a, fm.d_id(&x)).unwrap()
        };
        let flags =
            commute_endomorphisms_all_choices(&fm, &endo(vec![1, 0]), &endo(vec![0, 0]))
                .map_err(|e| format!("{e:?}"))?;
        ensure!(!flags.is_empty(), "function endomorphisms: no admissible choice");
        ensure!(flags.iter().all(|&f| !f), "negation/constant should not commute: {flags:?}");
        Ok(())
    });
}

/// The family fibration of Z/2 with sums: the triangle (f, a, b) is special
/// when each component of b is the xor of the components of a over the
/// corresponding fiber of the base map.
fn ring_family_structure() -> (CartesianStructure, Bridge, Vec<FamArrow>) {
    let (p, data) = ring_family_fibration_data(2, 2);
    let bridge = from_fibration(&p).unwrap();
    let mut triangles = BTreeSet::new();
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
                let base_ok = (0..top.dom_size).all(|i| b.map[top.map[i] as usize] == a.map[i]);
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
    let mut obj = BTreeMap::new();
    for i in 0..bridge.fm.m_cat.n_objects() {
        obj.insert(BObj::Ix(i), i);
    }
    let mut arr = BTreeMap::new();
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
fn criterion_09_fibered_hom_monoid() {
    criterion(9, "fibered hom monoid", || {
        let (cs, bridge, data) = ring_family_structure();
        let violations = verify_cartesian_structure(&cs);
        ensure!(violations.is_empty(), "family sums: {violations:?}");
        let s = unit_section(&bridge, &data);
        let (dp, violations) = fibered_hom_monoid(&cs, &bridge.inclusion.on_arrows, &s, &s)
            .map_err(|e| format!("{e}"))?;
        ensure!(violations.is_empty(), "hom monoid: {violations:?}");
        ensure!(
            dp.d_cat.n_objects() == 7 && dp.p_cat.n_objects() == 7,
            "expected one vertical per family of ring elements (1 + 2 + 4)"
        );
        let violations = verify_fibered_monoid(&dp);
        ensure!(violations.is_empty(), "fibered monoid axioms: {violations:?}");
        // Sums and products coincide on the same instance: the three product
        // notions agree pointwise on the Z/2 family multicategory.
        let report = products_equivalence_report(&ring_lazy(2, universe_with_apexes(2)), 2);
        ensure!(report.agree, "sums/products coincidence fails: {:?}", report.notes);
        ensure!(!report.entries.is_empty(), "no product entries");
        Ok(())
    });
}

#[test]
fn criterion_10_cli_contract() {
    criterion(10, "CLI contract", || {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
        let mut names = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| format!("{e}"))? {
            names.push(entry.map_err(|e| format!("{e}"))?.file_name());
        }
        names.sort();
        ensure!(names.len() >= 10, "fixture corpus too small: {names:?}");
        for name in &names {
            let text = std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{e}"))?;
            let name = name.to_string_lossy();
            if name == "bad_syntax.json" {
                ensure!(parse_presentation(&text).is_err(), "{name}: expected a parse error");
                continue;
            }
            let p = parse_presentation(&text).map_err(|e| format!("{name}: {e}"))?;
            ensure!(
                serialize_presentation(&p) == text,
                "{name}: serialization is not byte-stable"
            );
        }
        let run = |file: &str| -> Result<i32, String> {
            let status = Command::new(env!("CARGO_BIN_EXE_fibmult"))
                .arg("check")
                .arg(dir.join(file))
                .output()
                .map_err(|e| format!("{e}"))?;
            status.status.code().ok_or_else(|| "killed by signal".into())
        };
        ensure!(run("point_tables.json")? == 0, "passing fixture should exit 0");
        ensure!(run("missing_squares_tables.json")? == 1, "failing fixture should exit 1");
        ensure!(run("bad_syntax.json")? == 2, "unparseable fixture should exit 2");
        Ok(())
    });
}
