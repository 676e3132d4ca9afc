//! Presentation files, command dispatch, and machine/human report emission.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::base::{
    compute_chosen_pullbacks, validate_base_functor, BArr, BObj, BSquare, BaseFunctor,
    BaseProvider, ExplicitBase,
};
use crate::cartesian::{
    check_coherence, coreindex, cosquares_to_triangles, materialize_cartesian,
    products_equivalence_report, triangles_to_cosquares, verify_cartesian_structure,
    CartesianStructure, ProductsReport,
};
use crate::core::{special_lift, verify_axioms, FiberedMulticategory, Multicat};
use crate::fincat::{validate_category, ArrowRec, FinCategory};
use crate::standard::{
    check_extensivity, gen_example, skeletal_universe, universe_with_apexes, zn_ring,
    FamilyInstance, SeqTheory, TerminalTheory,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("syntax error at line {line}, column {column}: {msg}")]
    SyntaxError { line: usize, column: usize, msg: String },
    #[error("undeclared id `{id}` in {location}")]
    UndeclaredId { id: String, location: String },
    #[error("reserved character in label `{label}` in {location}")]
    ReservedLabel { label: String, location: String },
    #[error("{0}")]
    InputError(String),
}

/// A generator directive: name plus parameters, standing in for explicit
/// tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<u32>,
    pub bound: usize,
}

/// One finite category given extensionally by labelled tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatSpec {
    pub objects: Vec<String>,
    pub arrows: Vec<ArrowSpec>,
    /// Identity arrow id per object, in object order.
    pub identity: Vec<String>,
    /// Entries [g, f, g∘f] by arrow id.
    pub compose: Vec<[String; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowSpec {
    pub id: String,
    pub dom: String,
    pub cod: String,
}

/// A functor into the base, given by image names in object/arrow order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjSpec {
    pub objects: Vec<String>,
    pub arrows: Vec<String>,
}

/// Explicit presentation tables: the base, both layers, the projections,
/// and the marked squares (plus optional triangles).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tables {
    pub base: CatSpec,
    pub d: CatSpec,
    pub m: CatSpec,
    pub proj_d: ProjSpec,
    pub proj_p: ProjSpec,
    /// Entries [top, bottom, right, left]: top/bottom in D, right/left in M.
    pub special_squares: Vec<[String; 4]>,
    /// Entries [top, left, right]: top in D, left/right in M.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub special_triangles: Option<Vec<[String; 3]>>,
}

/// A presentation document: either a generator directive or explicit tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub format_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tables: Option<Tables>,
}

pub const FORMAT_VERSION: u32 = 1;

/// Parses and structurally validates a presentation document.
pub fn parse_presentation(text: &str) -> Result<Presentation, CliError> {
    let p: Presentation = serde_json::from_str(text).map_err(|e| CliError::SyntaxError {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    if p.format_version != FORMAT_VERSION {
        return Err(CliError::InputError(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            p.format_version
        )));
    }
    match (&p.generator, &p.tables) {
        (Some(_), Some(_)) => {
            return Err(CliError::InputError(
                "a presentation has either a generator or tables, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::InputError(
                "a presentation needs a generator or tables".into(),
            ))
        }
        _ => {}
    }
    if let Some(t) = &p.tables {
        validate_tables(t)?;
    }
    Ok(p)
}

/// Serializes a presentation; `parse_presentation` of the output is
/// identical to the input, and serialization is deterministic.
pub fn serialize_presentation(p: &Presentation) -> String {
    let mut s = serde_json::to_string_pretty(p).expect("presentations serialize");
    s.push('\n');
    s
}

fn check_label(label: &str, location: &str) -> Result<(), CliError> {
    if label.contains('|') || label.contains(':') {
        return Err(CliError::ReservedLabel {
            label: label.to_string(),
            location: location.to_string(),
        });
    }
    Ok(())
}

fn validate_cat_spec(spec: &CatSpec, name: &str) -> Result<(), CliError> {
    for o in &spec.objects {
        check_label(o, &format!("{name}.objects"))?;
    }
    let mut ids = BTreeSet::new();
    for a in &spec.arrows {
        check_label(&a.id, &format!("{name}.arrows"))?;
        if !ids.insert(a.id.as_str()) {
            return Err(CliError::InputError(format!("duplicate arrow id `{}` in {name}", a.id)));
        }
        for (end, loc) in [(&a.dom, "dom"), (&a.cod, "cod")] {
            if !spec.objects.contains(end) {
                return Err(CliError::UndeclaredId {
                    id: end.clone(),
                    location: format!("{name}.arrows.{}.{loc}", a.id),
                });
            }
        }
    }
    let need = |id: &str, loc: String| -> Result<(), CliError> {
        if ids.contains(id) {
            Ok(())
        } else {
            Err(CliError::UndeclaredId { id: id.to_string(), location: loc })
        }
    };
    if spec.identity.len() != spec.objects.len() {
        return Err(CliError::InputError(format!(
            "{name}.identity must list one arrow per object"
        )));
    }
    for (i, id) in spec.identity.iter().enumerate() {
        need(id, format!("{name}.identity[{i}]"))?;
    }
    for (i, row) in spec.compose.iter().enumerate() {
        for id in row {
            need(id, format!("{name}.compose[{i}]"))?;
        }
    }
    Ok(())
}

fn validate_tables(t: &Tables) -> Result<(), CliError> {
    validate_cat_spec(&t.base, "base")?;
    validate_cat_spec(&t.d, "d")?;
    validate_cat_spec(&t.m, "m")?;
    let base_objects: BTreeSet<&str> = t.base.objects.iter().map(|s| s.as_str()).collect();
    let base_arrows: BTreeSet<&str> = t.base.arrows.iter().map(|a| a.id.as_str()).collect();
    for (proj, cat, name) in [(&t.proj_d, &t.d, "proj_d"), (&t.proj_p, &t.m, "proj_p")] {
        if proj.objects.len() != cat.objects.len() || proj.arrows.len() != cat.arrows.len() {
            return Err(CliError::InputError(format!(
                "{name} must list one image per object and per arrow"
            )));
        }
        for (i, o) in proj.objects.iter().enumerate() {
            if !base_objects.contains(o.as_str()) {
                return Err(CliError::UndeclaredId {
                    id: o.clone(),
                    location: format!("{name}.objects[{i}]"),
                });
            }
        }
        for (i, a) in proj.arrows.iter().enumerate() {
            if !base_arrows.contains(a.as_str()) {
                return Err(CliError::UndeclaredId {
                    id: a.clone(),
                    location: format!("{name}.arrows[{i}]"),
                });
            }
        }
    }
    let d_arrows: BTreeSet<&str> = t.d.arrows.iter().map(|a| a.id.as_str()).collect();
    let m_arrows: BTreeSet<&str> = t.m.arrows.iter().map(|a| a.id.as_str()).collect();
    for (i, sq) in t.special_squares.iter().enumerate() {
        for (j, (id, pool)) in
            sq.iter().zip([&d_arrows, &d_arrows, &m_arrows, &m_arrows]).enumerate()
        {
            if !pool.contains(id.as_str()) {
                return Err(CliError::UndeclaredId {
                    id: id.clone(),
                    location: format!("special_squares[{i}][{j}]"),
                });
            }
        }
    }
    if let Some(tris) = &t.special_triangles {
        for (i, tri) in tris.iter().enumerate() {
            for (j, (id, pool)) in tri.iter().zip([&d_arrows, &m_arrows, &m_arrows]).enumerate() {
                if !pool.contains(id.as_str()) {
                    return Err(CliError::UndeclaredId {
                        id: id.clone(),
                        location: format!("special_triangles[{i}][{j}]"),
                    });
                }
            }
        }
    }
    Ok(())
}

fn build_cat(spec: &CatSpec) -> FinCategory {
    let obj_ix: HashMap<&str, usize> =
        spec.objects.iter().enumerate().map(|(i, o)| (o.as_str(), i)).collect();
    let arr_ix: HashMap<&str, usize> =
        spec.arrows.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let arrows = spec
        .arrows
        .iter()
        .map(|a| ArrowRec { id: a.id.clone(), dom: obj_ix[a.dom.as_str()], cod: obj_ix[a.cod.as_str()] })
        .collect();
    let identity = spec.identity.iter().map(|id| arr_ix[id.as_str()]).collect();
    let compose = spec
        .compose
        .iter()
        .map(|[g, f, gf]| {
            ((arr_ix[g.as_str()] as u32, arr_ix[f.as_str()] as u32), arr_ix[gf.as_str()] as u32)
        })
        .collect();
    FinCategory::new(spec.objects.clone(), arrows, identity, compose)
}

/// A built instance: the multicategory plus the triangle table and the
/// generator directive, when the presentation provides them.
pub struct Instance {
    pub fm: FiberedMulticategory,
    pub triangles: Option<BTreeSet<(u32, u32, u32)>>,
    pub generator: Option<GeneratorSpec>,
    pub bound: usize,
}

/// Builds the extensional instance a presentation describes.
pub fn build_instance(p: &Presentation, bound: Option<usize>) -> Result<Instance, CliError> {
    if let Some(g) = &p.generator {
        let bound = bound.unwrap_or(g.bound);
        let out = gen_example(&g.name, g.modulus, bound)
            .map_err(|e| CliError::InputError(e.to_string()))?;
        return Ok(Instance { fm: out.fm, triangles: None, generator: Some(g.clone()), bound });
    }
    let t = p.tables.as_ref().expect("validated: one of generator/tables");
    let bcat = build_cat(&t.base);
    let d_cat = build_cat(&t.d);
    let m_cat = build_cat(&t.m);
    let base = BaseProvider::Explicit(ExplicitBase {
        chosen: compute_chosen_pullbacks(&bcat),
        cat: bcat.clone(),
    });
    let proj = |spec: &ProjSpec| BaseFunctor {
        on_objects: spec
            .objects
            .iter()
            .map(|o| BObj::Ix(bcat.object_index(o).expect("validated")))
            .collect(),
        on_arrows: spec
            .arrows
            .iter()
            .map(|a| BArr::Ix(bcat.arrow_index(a).expect("validated")))
            .collect(),
    };
    let d = proj(&t.proj_d);
    let pm = proj(&t.proj_p);
    let dx = |id: &str| d_cat.arrow_index(id).expect("validated") as u32;
    let mx = |id: &str| m_cat.arrow_index(id).expect("validated") as u32;
    let special = t
        .special_squares
        .iter()
        .map(|[top, bottom, right, left]| (dx(top), dx(bottom), mx(right), mx(left)))
        .collect();
    let triangles = t.special_triangles.as_ref().map(|tris| {
        tris.iter().map(|[top, left, right]| (dx(top), mx(left), mx(right))).collect()
    });
    let fm = FiberedMulticategory { base, d_cat, m_cat, d, p: pm, special };
    Ok(Instance { fm, triangles, generator: None, bound: bound.unwrap_or(3) })
}

/// The cartesian structure of an instance: explicit triangles when given,
/// the canonical enrichment-generated structure for the generators that
/// have one.
pub fn cartesian_structure(inst: &Instance) -> Result<CartesianStructure, CliError> {
    if let Some(tris) = &inst.triangles {
        return Ok(CartesianStructure { host: inst.fm.clone(), triangles: tris.clone() });
    }
    let g = inst.generator.as_ref().ok_or_else(|| {
        CliError::InputError("no special triangles and no generator directive".into())
    })?;
    let bound = inst.bound;
    match g.name.as_str() {
        "terminal" => Ok(materialize_cartesian(&FamilyInstance::new(
            TerminalTheory,
            skeletal_universe(bound),
            bound,
        ))),
        "ring" => {
            let (cat, enrich) = zn_ring(g.modulus.unwrap_or(2));
            Ok(materialize_cartesian(&FamilyInstance::new(
                SeqTheory { cat, enrich: Some(enrich) },
                skeletal_universe(bound),
                bound,
            )))
        }
        other => Err(CliError::InputError(format!(
            "generator `{other}` has no canonical cartesian structure"
        ))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckBlock {
    pub name: String,
    pub ok: bool,
    pub violations: Vec<String>,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub millis: u128,
}

/// A command report: everything except `timing` is deterministic for a
/// fixed input and flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub command: String,
    pub digest: String,
    pub bound: usize,
    pub ok: bool,
    pub checks: Vec<CheckBlock>,
    pub timing: Timing,
}

fn block(name: &str, violations: Vec<String>, details: Vec<String>) -> CheckBlock {
    CheckBlock { name: name.to_string(), ok: violations.is_empty(), violations, details }
}

fn render_human(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "fibmult {} (digest {}, bound {})\n",
        r.command,
        &r.digest[..12.min(r.digest.len())],
        r.bound
    ));
    for c in &r.checks {
        out.push_str(&format!("  [{}] {}\n", if c.ok { "ok" } else { "FAIL" }, c.name));
        for d in &c.details {
            out.push_str(&format!("    {d}\n"));
        }
        for v in &c.violations {
            out.push_str(&format!("    violation: {v}\n"));
        }
    }
    out.push_str(&format!(
        "result: {} ({} ms)\n",
        if r.ok { "ok" } else { "violations found" },
        r.timing.millis
    ));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Machine,
    Human,
}

#[derive(Parser)]
#[command(name = "fibmult", about = "Verification kernel for finite fibered multicategories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Presentation file.
    file: PathBuf,
    /// Size bound override for generator instances.
    #[arg(long)]
    bound: Option<usize>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the fibered multicategory axioms and extensivity.
    Check(Common),
    /// Verify the cartesian-structure laws and coherence.
    CartesianCheck(Common),
    /// Contravariant reindexing: the special lift of an M-arrow.
    Reindex {
        #[command(flatten)]
        common: Common,
        /// The M-arrow to reindex.
        #[arg(long)]
        arrow: String,
        /// The D-lift of the square's top side.
        #[arg(long)]
        top: String,
        /// The D-lift of the square's bottom side.
        #[arg(long)]
        bottom: String,
        /// The base label of the square's left side; inferred when the
        /// commuting completion is unique.
        #[arg(long)]
        left: Option<String>,
    },
    /// Covariant reindexing: the unique special-triangle extension.
    Coreindex {
        #[command(flatten)]
        common: Common,
        /// The M-arrow to transport.
        #[arg(long)]
        arrow: String,
        /// The D-arrow along which to transport.
        #[arg(long)]
        lift: String,
    },
    /// Per-(object, arrow) product certificates within the bound.
    Products(Common),
    /// The algebraic/universal/representable equivalence report.
    Equiv(Common),
    /// Write a generator-directive presentation file.
    Gen {
        /// Generator name (terminal, ring, sequential, pseudo_identity,
        /// finset_self_indexed).
        #[arg(long)]
        name: String,
        /// Ring modulus, for the ring generator.
        #[arg(long)]
        modulus: Option<u32>,
        /// Family size bound.
        #[arg(long, default_value_t = 2)]
        bound: usize,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert triangles to covariant squares and back; verify round-trip.
    Convert(Common),
}

fn load(common: &Common) -> Result<(Instance, String), CliError> {
    let text = std::fs::read_to_string(&common.file)
        .map_err(|e| CliError::InputError(format!("{}: {e}", common.file.display())))?;
    let pres = parse_presentation(&text)?;
    let inst = build_instance(&pres, common.bound)?;
    let digest = format!("{:x}", Sha256::digest(text.as_bytes()));
    Ok((inst, digest))
}

fn check_blocks(fm: &FiberedMulticategory) -> Vec<CheckBlock> {
    let mut checks = Vec::new();
    checks.push(block(
        "categories",
        validate_category(&fm.d_cat)
            .into_iter()
            .map(|v| format!("d: {v:?}"))
            .chain(validate_category(&fm.m_cat).into_iter().map(|v| format!("m: {v:?}")))
            .collect(),
        vec![
            format!("d: {} objects, {} arrows", fm.d_cat.n_objects(), fm.d_cat.n_arrows()),
            format!("m: {} objects, {} arrows", fm.m_cat.n_objects(), fm.m_cat.n_arrows()),
        ],
    ));
    checks.push(block(
        "projections",
        validate_base_functor(&fm.d_cat, &fm.base, &fm.d)
            .into_iter()
            .map(|v| format!("d: {v}"))
            .chain(
                validate_base_functor(&fm.m_cat, &fm.base, &fm.p)
                    .into_iter()
                    .map(|v| format!("p: {v}")),
            )
            .collect(),
        vec![],
    ));
    checks.push(block(
        "axioms",
        verify_axioms(fm).into_iter().map(|v| format!("{v:?}")).collect(),
        vec![format!("{} special squares", fm.special.len())],
    ));
    match fm.base {
        BaseProvider::FinSets(_) => checks.push(block(
            "extensivity",
            check_extensivity(fm).into_iter().map(|v| format!("{v:?}")).collect(),
            vec![],
        )),
        BaseProvider::Explicit(_) => checks.push(block(
            "extensivity",
            Vec::new(),
            vec!["skipped: extensivity is defined over the finite-set base".into()],
        )),
    }
    checks
}

fn products_blocks(report: &ProductsReport, full_table: bool) -> Vec<CheckBlock> {
    let mut details = Vec::new();
    if full_table {
        for e in &report.entries {
            details.push(format!(
                "x={} f={} algebraic={} universal={} representable={}",
                e.x, e.f, e.algebraic, e.universal, e.representable
            ));
        }
    }
    details.push(format!(
        "{} entries, {} with products",
        report.entries.len(),
        report.entries.iter().filter(|e| e.algebraic).count()
    ));
    details.extend(report.notes.iter().map(|n| format!("note: {n}")));
    let violations = if report.agree {
        details.push("equivalent: the three notions agree pointwise".into());
        vec![]
    } else {
        report
            .entries
            .iter()
            .filter(|e| !(e.algebraic == e.universal && e.universal == e.representable))
            .map(|e| {
                format!(
                    "disagreement at x={} f={}: algebraic={} universal={} representable={}",
                    e.x, e.f, e.algebraic, e.universal, e.representable
                )
            })
            .collect()
    };
    vec![CheckBlock {
        name: "products equivalence".into(),
        ok: report.agree,
        violations,
        details,
    }]
}

fn run_command(cmd: &Command) -> Result<(Report, Format, Option<PathBuf>), CliError> {
    let start = Instant::now();
    let (name, common): (&str, Option<&Common>) = match cmd {
        Command::Check(c) => ("check", Some(c)),
        Command::CartesianCheck(c) => ("cartesian-check", Some(c)),
        Command::Reindex { common, .. } => ("reindex", Some(common)),
        Command::Coreindex { common, .. } => ("coreindex", Some(common)),
        Command::Products(c) => ("products", Some(c)),
        Command::Equiv(c) => ("equiv", Some(c)),
        Command::Convert(c) => ("convert", Some(c)),
        Command::Gen { .. } => ("gen", None),
    };
    if let Command::Gen { name: gname, modulus, bound, out } = cmd {
        gen_example(gname, *modulus, *bound).map_err(|e| CliError::InputError(e.to_string()))?;
        let pres = Presentation {
            format_version: FORMAT_VERSION,
            generator: Some(GeneratorSpec {
                name: gname.clone(),
                modulus: *modulus,
                bound: *bound,
            }),
            tables: None,
        };
        let text = serialize_presentation(&pres);
        if let Some(path) = out {
            std::fs::write(path, &text)
                .map_err(|e| CliError::InputError(format!("{}: {e}", path.display())))?;
        } else {
            print!("{text}");
        }
        let report = Report {
            format_version: FORMAT_VERSION,
            command: name.into(),
            digest: format!("{:x}", Sha256::digest(text.as_bytes())),
            bound: *bound,
            ok: true,
            checks: vec![block("generate", vec![], vec![format!("generator {gname}")])],
            timing: Timing { millis: start.elapsed().as_millis() },
        };
        return Ok((report, Format::Human, None));
    }
    let common = common.expect("all non-gen commands take a file");
    let (inst, digest) = load(common)?;
    let checks = match cmd {
        Command::Check(_) => check_blocks(&inst.fm),
        Command::CartesianCheck(_) => {
            let cs = cartesian_structure(&inst)?;
            vec![
                block(
                    "cartesian structure",
                    verify_cartesian_structure(&cs)
                        .into_iter()
                        .map(|v| format!("{v:?}"))
                        .collect(),
                    vec![format!("{} special triangles", cs.triangles.len())],
                ),
                block("coherence", check_coherence(&cs), vec![]),
            ]
        }
        Command::Reindex { arrow, top, bottom, left, .. } => {
            let fm = &inst.fm;
            let a = fm
                .m_cat
                .arrow_index(arrow)
                .ok_or_else(|| CliError::UndeclaredId { id: arrow.clone(), location: "m".into() })?;
            let lt = fm
                .d_cat
                .arrow_index(top)
                .ok_or_else(|| CliError::UndeclaredId { id: top.clone(), location: "d".into() })?;
            let lb = fm.d_cat.arrow_index(bottom).ok_or_else(|| CliError::UndeclaredId {
                id: bottom.clone(),
                location: "d".into(),
            })?;
            let (right, tp, bt) = (fm.m_proj(&a), fm.d_proj(&lt), fm.d_proj(&lb));
            let rt = fm.base.compose(&right, &tp).ok_or_else(|| {
                CliError::InputError("the top lift does not compose with the arrow".into())
            })?;
            let (lu, lv) = (fm.base.dom(&tp), fm.base.dom(&bt));
            let mut results = BTreeSet::new();
            for l in fm.base.arrows_between(&lu, &lv) {
                if fm.base.compose(&bt, &l) != Some(rt.clone()) {
                    continue;
                }
                if let Some(want) = left {
                    if fm.base.arrow_label(&l) != *want {
                        continue;
                    }
                }
                let sq = BSquare {
                    top: tp.clone(),
                    left: l.clone(),
                    bottom: bt.clone(),
                    right: right.clone(),
                };
                if let Ok(b) = special_lift(&inst.fm, &a, &sq, &lt, &lb) {
                    results.insert((fm.base.arrow_label(&l), b));
                }
            }
            let (violations, details) = match results.len() {
                1 => {
                    let (_, b) = results.into_iter().next().unwrap();
                    (vec![], vec![format!("f*({arrow}) = {}", inst.fm.m_cat.arrows[b].id)])
                }
                0 => (vec!["no special lift exists for this square".to_string()], vec![]),
                n => (
                    vec![format!(
                        "the base square is underdetermined ({n} pullback completions); \
                         pass --left with one of: {}",
                        results.iter().map(|(l, _)| l.as_str()).collect::<Vec<_>>().join(", ")
                    )],
                    vec![],
                ),
            };
            vec![CheckBlock {
                name: "reindex".into(),
                ok: violations.is_empty(),
                violations,
                details,
            }]
        }
        Command::Coreindex { arrow, lift, .. } => {
            let cs = cartesian_structure(&inst)?;
            let a = cs.host.m_cat.arrow_index(arrow).ok_or_else(|| CliError::UndeclaredId {
                id: arrow.clone(),
                location: "m".into(),
            })?;
            let f = cs.host.d_cat.arrow_index(lift).ok_or_else(|| CliError::UndeclaredId {
                id: lift.clone(),
                location: "d".into(),
            })?;
            let pa = cs.host.m_proj(&a);
            let df = cs.host.d_proj(&f);
            let (ju, jv) = (cs.host.base.cod(&df), cs.host.base.cod(&pa));
            let mut results = BTreeSet::new();
            for h in cs.host.base.arrows_between(&ju, &jv) {
                if cs.host.base.compose(&h, &df) != Some(pa.clone()) {
                    continue;
                }
                if let Ok(b) = coreindex(&cs, &a, &f, &h) {
                    results.insert(b);
                }
            }
            let (violations, details) = match results.len() {
                1 => {
                    let b = results.into_iter().next().unwrap();
                    (vec![], vec![format!("f!({arrow}) = {}", cs.host.m_cat.arrows[b].id)])
                }
                0 => (vec!["no special triangle extends this data".to_string()], vec![]),
                n => (vec![format!("the extension is ambiguous ({n} candidates)")], vec![]),
            };
            vec![CheckBlock {
                name: "coreindex".into(),
                ok: violations.is_empty(),
                violations,
                details,
            }]
        }
        Command::Products(_) | Command::Equiv(_) => {
            let full_table = matches!(cmd, Command::Products(_));
            // Generator instances run lazily over a universe closed under
            // the pullback apexes the product quantifiers need.
            let bound = inst.bound;
            let report = match inst.generator.as_ref().map(|g| (g.name.as_str(), g.modulus)) {
                Some(("terminal", _)) => products_equivalence_report(
                    &FamilyInstance::new(TerminalTheory, universe_with_apexes(bound), bound),
                    bound,
                ),
                Some(("ring", modulus)) => {
                    let (cat, enrich) = zn_ring(modulus.unwrap_or(2));
                    products_equivalence_report(
                        &FamilyInstance::new(
                            SeqTheory { cat, enrich: Some(enrich) },
                            universe_with_apexes(bound),
                            bound,
                        ),
                        bound,
                    )
                }
                _ => {
                    let cs = cartesian_structure(&inst)?;
                    products_equivalence_report(&cs, bound)
                }
            };
            products_blocks(&report, full_table)
        }
        Command::Convert(_) => {
            let cs = cartesian_structure(&inst)?;
            let squares = triangles_to_cosquares(&cs);
            match cosquares_to_triangles(&cs.host, &squares) {
                Err(e) => vec![block("convert", vec![e.to_string()], vec![])],
                Ok(back) => {
                    let same = back.triangles == cs.triangles;
                    vec![CheckBlock {
                        name: "convert".into(),
                        ok: same,
                        violations: if same {
                            vec![]
                        } else {
                            vec!["round-trip changed the triangle set".into()]
                        },
                        details: vec![
                            format!("{} triangles", cs.triangles.len()),
                            format!("{} covariant squares", squares.len()),
                            "round-trip identical".into(),
                        ],
                    }]
                }
            }
        }
        Command::Gen { .. } => unreachable!("handled above"),
    };
    let report = Report {
        format_version: FORMAT_VERSION,
        command: name.into(),
        digest,
        bound: inst.bound,
        ok: checks.iter().all(|c| c.ok),
        checks,
        timing: Timing { millis: start.elapsed().as_millis() },
    };
    Ok((report, common.format, common.out.clone()))
}

fn emit(report: &Report, format: Format, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = match format {
        Format::Machine => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Human => render_human(report),
    };
    match out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CliError::InputError(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses the process arguments, runs the command, and emits the report.
/// Exit codes: 0 ok, 1 violations found, 2 input error.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match run_command(&cli.command) {
        Ok((report, format, out)) => {
            if !matches!(cli.command, Command::Gen { .. }) {
                if let Err(e) = emit(&report, format, out.as_ref()) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
