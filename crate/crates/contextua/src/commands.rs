//! Command dispatch.

use std::time::Instant;

use contextua_core::bell::{
    bell_functional_value, check_bell_section, check_no_signalling, chsh_functional, deterministic_maximum,
    factorisability_lp, section_from_bipartite_state, BellReconstructor, BellScenario, BellSection, Factorisability,
    SectionVerdict,
};
use contextua_core::contexts::{export_dot, ContextPoset};
use contextua_core::gleason::{
    check_prob_section, constraint_rank, section_from_state, Reconstruction, StateReconstructor,
};
use contextua_core::opalg::{projection_from_ray, DensityMatrix};
use contextua_core::random;
use contextua_core::spectral::{assignment_space, enumerate_global_sections, find_global_section, Verdict};
use contextua_core::wigner::{
    conjugate_poset, jordan_check, transition_probability_defect, trivial_presheaf_automorphism, SymmetryKind,
    SymmetryOp,
};
use contextua_core::ComplexMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::report::{digest, RunReport};
use crate::scenario::{parse_scenario, BipartiteScenario, Scenario, ScenarioError, SingleScenario};

pub const COMMANDS: [&str; 8] = [
    "ks-check",
    "ks-enumerate",
    "gleason-roundtrip",
    "gleason-reconstruct",
    "bell-analyze",
    "bell-classify",
    "wigner-check",
    "poset-export",
];

/// Symmetries sampled per kind by `wigner-check`.
const WIGNER_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Debug, Clone)]
pub struct Options {
    pub tol: f64,
    pub cap: usize,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self { tol: 1e-9, cap: 1_000_000, seed: 0 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown command '{0}'")]
    UnknownCommand(String),
    #[error("scenario error at {0}")]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Core(#[from] contextua_core::Error),
    #[error("{0}")]
    Unsupported(String),
}

type Result<T> = std::result::Result<T, RunError>;

struct Timer {
    phases: Vec<(String, f64)>,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        Self { phases: Vec::new(), last: Instant::now() }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.phases.push((name.to_string(), (now - self.last).as_secs_f64() * 1e3));
        self.last = now;
    }
}

struct Outcome {
    verdict: &'static str,
    negative: bool,
    details: Map<String, Value>,
    dot: Option<String>,
}

impl Outcome {
    fn new(verdict: &'static str, negative: bool, details: Map<String, Value>) -> Self {
        Self { verdict, negative, details, dot: None }
    }
}

/// Parses `text` and runs `command` on it.
pub fn run(command: &str, text: &str, opts: &Options) -> Result<RunReport> {
    if !COMMANDS.contains(&command) {
        return Err(RunError::UnknownCommand(command.to_string()));
    }
    let mut timer = Timer::new();
    let scenario = parse_scenario(text)?;
    timer.lap("parse");
    let outcome = match (command, &scenario) {
        ("ks-check", Scenario::Single(s)) => ks_check(s, opts, &mut timer)?,
        ("ks-enumerate", Scenario::Single(s)) => ks_enumerate(s, opts, &mut timer)?,
        ("gleason-roundtrip", Scenario::Single(s)) => gleason_roundtrip(s, opts, &mut timer)?,
        ("gleason-reconstruct", Scenario::Single(s)) => gleason_reconstruct(s, opts, &mut timer)?,
        ("wigner-check", Scenario::Single(s)) => wigner_check(s, opts, &mut timer)?,
        ("poset-export", Scenario::Single(s)) => poset_export(s, opts, &mut timer)?,
        ("bell-analyze", Scenario::Bipartite(b)) => bell_analyze(b, opts, &mut timer)?,
        ("bell-classify", Scenario::Bipartite(b)) => bell_classify(b, opts, &mut timer)?,
        (cmd, sc) => {
            return Err(RunError::Unsupported(format!("{cmd} does not accept a {} scenario", sc.kind())));
        }
    };
    Ok(RunReport {
        command: command.to_string(),
        scenario_name: scenario.name().to_string(),
        scenario_digest: digest(text.as_bytes()),
        verdict: outcome.verdict.to_string(),
        negative: outcome.negative,
        details: outcome.details,
        timings: timer.phases,
        dot: outcome.dot,
    })
}

fn poset_details(d: &mut Map<String, Value>, poset: &ContextPoset) {
    d.insert("dim".into(), json!(poset.dim()));
    d.insert("catalog_contexts".into(), json!(poset.catalog_nodes().len()));
    d.insert("nodes".into(), json!(poset.len()));
    d.insert("covers".into(), json!(poset.covers().len()));
    d.insert("projections".into(), json!(poset.registry().len()));
}

fn build_poset(s: &SingleScenario, opts: &Options, timer: &mut Timer) -> Result<ContextPoset> {
    let poset = s.catalog.poset(opts.tol)?;
    timer.lap("poset");
    Ok(poset)
}

fn ks_check(s: &SingleScenario, opts: &Options, timer: &mut Timer) -> Result<Outcome> {
    let poset = build_poset(s, opts, timer)?;
    let cert = find_global_section(&poset);
    timer.lap("search");
    let mut d = Map::new();
    poset_details(&mut d, &poset);
    d.insert("ray_incidence".into(), json!(s.catalog.incidence()));
    d.insert("nodes_expanded".into(), json!(cert.stats.nodes_expanded));
    d.insert("backtracks".into(), json!(cert.stats.backtracks));
    d.insert("exhausted".into(), json!(cert.exhausted));
    if let Some(section) = &cert.section {
        let true_rays: Vec<usize> = (0..s.catalog.rays.len())
            .filter(|&i| {
                let p = projection_from_ray(&s.catalog.ray(i));
                poset.registry().find(&p).and_then(|id| section.value_of(&poset, id)) == Some(true)
            })
            .collect();
        d.insert("true_rays".into(), json!(true_rays));
    }
    Ok(match cert.verdict {
        Verdict::Colorable => Outcome::new("colorable", false, d),
        Verdict::NonColorable => Outcome::new("non_colorable", true, d),
    })
}

fn ks_enumerate(s: &SingleScenario, opts: &Options, timer: &mut Timer) -> Result<Outcome> {
    let poset = build_poset(s, opts, timer)?;
    let en = enumerate_global_sections(&poset, opts.cap);
    timer.lap("enumerate");
    let mut d = Map::new();
    poset_details(&mut d, &poset);
    d.insert("choice_tuples".into(), json!(assignment_space(&poset).to_string()));
    d.insert("sections".into(), json!(en.sections.len()));
    d.insert("truncated".into(), json!(en.truncated));
    Ok(if en.truncated {
        Outcome::new("truncated", false, d)
    } else if en.sections.is_empty() {
        Outcome::new("non_colorable", true, d)
    } else {
        Outcome::new("colorable", false, d)
    })
}

fn reconstruction_details(d: &mut Map<String, Value>, r: &Reconstruction) {
    match r {
        Reconstruction::State { residual, eigenvalues, .. } => {
            d.insert("residual".into(), json!(residual));
            d.insert("eigenvalues".into(), json!(eigenvalues));
        }
        Reconstruction::Underdetermined { solution_dim, residual } => {
            d.insert("residual".into(), json!(residual));
            d.insert("solution_dim".into(), json!(solution_dim));
        }
        Reconstruction::Infeasible { residual, eigenvalues, .. } => {
            d.insert("residual".into(), json!(residual));
            if let Some(ev) = eigenvalues {
                d.insert("eigenvalues".into(), json!(ev));
            }
        }
    }
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    let n = m.dim();
    let rows: Vec<Value> = (0..n).map(|i| (0..n).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()).collect();
    Value::Array(rows)
}

fn gleason_roundtrip(s: &SingleScenario, opts: &Options, timer: &mut Timer) -> Result<Outcome> {
    let poset = build_poset(s, opts, timer)?;
    let rho = match s.state_matrix() {
        Some(m) => DensityMatrix::new(m, opts.tol.max(1e-9))?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            DensityMatrix::new(random::density(&mut rng, poset.dim()), 1e-9)?
        }
    };
    let section = section_from_state(&poset, &rho)?;
    let r = StateReconstructor::new(&poset)?.reconstruct(&section)?;
    timer.lap("reconstruct");
    let mut d = Map::new();
    poset_details(&mut d, &poset);
    d.insert("state_source".into(), json!(if s.state.is_some() { "scenario" } else { "seeded" }));
    d.insert("constraint_rank".into(), json!(constraint_rank(&poset)));
    reconstruction_details(&mut d, &r);
    Ok(match r {
        Reconstruction::State { rho: back, .. } => {
            let err = back.dist(rho.matrix());
            d.insert("max_entry_error".into(), json!(err));
            if err <= 1e-8 {
                Outcome::new("recovered", false, d)
            } else {
                Outcome::new("mismatch", true, d)
            }
        }
        Reconstruction::Underdetermined { .. } => Outcome::new("underdetermined", true, d),
        Reconstruction::Infeasible { .. } => Outcome::new("infeasible", true, d),
    })
}

fn gleason_reconstruct(s: &SingleScenario, opts: &Options, timer: &mut Timer) -> Result<Outcome> {
    let poset = build_poset(s, opts, timer)?;
    let section = s
        .prob_section(&poset)?
        .ok_or_else(|| RunError::Unsupported("gleason-reconstruct needs a \"section\" in the scenario".into()))?;
    let mut d = Map::new();
    poset_details(&mut d, &poset);
    if let Err(why) = check_prob_section(&poset, &section, 1e-7) {
        d.insert("reason".into(), json!(why));
        timer.lap("check");
        return Ok(Outcome::new("inconsistent", true, d));
    }
    let r = StateReconstructor::new(&poset)?.reconstruct(&section)?;
    timer.lap("reconstruct");
    reconstruction_details(&mut d, &r);
    Ok(match r {
        Reconstruction::State { rho, .. } => {
            d.insert("state".into(), matrix_json(&rho));
            Outcome::new("state", false, d)
        }
        Reconstruction::Underdetermined { .. } => Outcome::new("underdetermined", false, d),
        Reconstruction::Infeasible { .. } => Outcome::new("infeasible", true, d),
    })
}

fn wigner_check(s: &SingleScenario, opts: &Options, timer: &mut Timer) -> Result<Outcome> {
    let poset = build_poset(s, opts, timer)?;
    let n = poset.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let projections: Vec<ComplexMatrix> = poset.registry().iter().map(|(_, p)| p.matrix().clone()).collect();
    let samples: Vec<(ComplexMatrix, ComplexMatrix)> =
        (0..WIGNER_SAMPLES).map(|_| (random::hermitian(&mut rng, n), random::hermitian(&mut rng, n))).collect();
    let mut automorphisms = 0;
    let mut max_jordan = 0.0f64;
    let mut max_transition = 0.0f64;
    let mut sign_errors = 0;
    for kind in [SymmetryKind::Unitary, SymmetryKind::Antiunitary] {
        let expected = if kind == SymmetryKind::Unitary { 1 } else { -1 };
        for _ in 0..WIGNER_SAMPLES {
            let op = SymmetryOp::new(kind, random::unitary(&mut rng, n), 1e-9)?;
            let (image, map) = conjugate_poset(&poset, &op)?;
            if trivial_presheaf_automorphism(&poset, &image, &map) {
                automorphisms += 1;
            }
            let report = jordan_check(&op, &samples, 1e-9);
            max_jordan = max_jordan.max(report.max_jordan_residual);
            sign_errors += report.pairs.iter().filter(|p| p.commutator_sign.is_some_and(|s| s != expected)).count();
            max_transition = max_transition.max(transition_probability_defect(&op, &projections));
        }
    }
    timer.lap("symmetries");
    let mut d = Map::new();
    poset_details(&mut d, &poset);
    d.insert("seed".into(), json!(opts.seed));
    d.insert("symmetries".into(), json!(2 * WIGNER_SAMPLES));
    d.insert("order_automorphisms".into(), json!(automorphisms));
    d.insert("max_jordan_residual".into(), json!(max_jordan));
    d.insert("commutator_sign_errors".into(), json!(sign_errors));
    d.insert("max_transition_defect".into(), json!(max_transition));
    let ok = automorphisms == 2 * WIGNER_SAMPLES && max_jordan <= 1e-9 && sign_errors == 0 && max_transition <= 1e-9;
    Ok(if ok { Outcome::new("preserved", false, d) } else { Outcome::new("violated", true, d) })
}

fn poset_export(s: &SingleScenario, opts: &Options, timer: &mut Timer) -> Result<Outcome> {
    let poset = build_poset(s, opts, timer)?;
    let dot = export_dot(&poset);
    timer.lap("export");
    let mut d = Map::new();
    poset_details(&mut d, &poset);
    d.insert("dot".into(), json!(dot));
    let mut o = Outcome::new("exported", false, d);
    o.dot = Some(dot);
    Ok(o)
}

fn bell_setup(
    b: &BipartiteScenario,
    opts: &Options,
    timer: &mut Timer,
) -> Result<(BellScenario, BellSection, &'static str)> {
    let sc = b.build(opts.tol)?;
    timer.lap("posets");
    let (section, source) = match (b.bell_section(&sc)?, b.state_matrix()) {
        (Some(s), _) => (s, "tables"),
        (None, Some(w)) => (section_from_bipartite_state(&sc, &w, 1e-9)?, "state"),
        (None, None) => return Err(RunError::Unsupported("bipartite scenario needs \"tables\" or \"state\"".into())),
    };
    timer.lap("section");
    Ok((sc, section, source))
}

fn bell_analyze(b: &BipartiteScenario, opts: &Options, timer: &mut Timer) -> Result<Outcome> {
    let (sc, section, source) = bell_setup(b, opts, timer)?;
    let mut d = Map::new();
    d.insert("dims".into(), json!([sc.left.dim(), sc.right.dim()]));
    d.insert("section_source".into(), json!(source));
    if let Err(why) = check_bell_section(&sc, &section, 1e-7) {
        d.insert("reason".into(), json!(why));
        return Ok(Outcome::new("inconsistent", true, d));
    }
    let no_signalling = check_no_signalling(&section, 1e-7);
    d.insert("no_signalling".into(), json!(no_signalling));
    if !no_signalling {
        return Ok(Outcome::new("signalling", true, d));
    }
    let (cl, cr) = (sc.left.catalog_nodes(), sc.right.catalog_nodes());
    if cl.len() == 2 && cr.len() == 2 && b.parties.iter().all(|p| (0..2).all(|c| p.atom_count(c) == 2)) {
        let chsh = chsh_functional([cl[0], cl[1]], [cr[0], cr[1]]);
        d.insert("chsh_value".into(), json!(bell_functional_value(&section, &chsh)?));
        let (max, count) = deterministic_maximum(&sc, &chsh)?;
        d.insert("chsh_classical_max".into(), json!(max));
        d.insert("strategies".into(), json!(count));
    }
    let contexts = b.listed_contexts(&sc);
    let f = factorisability_lp(&sc, &section, &contexts)?;
    timer.lap("factorisability");
    Ok(match f {
        Factorisability::Factorisable { weights, max_error, .. } => {
            d.insert("support".into(), json!(weights.len()));
            d.insert("max_error".into(), json!(max_error));
            Outcome::new("factorisable", false, d)
        }
        Factorisability::NotFactorisable { functional, constant, section_value, deterministic_max } => {
            d.insert("certificate_terms".into(), json!(functional.len()));
            d.insert("certificate_constant".into(), json!(constant));
            d.insert("certificate_section_value".into(), json!(section_value));
            d.insert("certificate_deterministic_max".into(), json!(deterministic_max));
            Outcome::new("not_factorisable", true, d)
        }
    })
}

fn bell_classify(b: &BipartiteScenario, opts: &Options, timer: &mut Timer) -> Result<Outcome> {
    let (sc, section, source) = bell_setup(b, opts, timer)?;
    let c = BellReconstructor::new(&sc)?.classify(&section)?;
    timer.lap("classify");
    let mut d = Map::new();
    d.insert("dims".into(), json!([sc.left.dim(), sc.right.dim()]));
    d.insert("section_source".into(), json!(source));
    d.insert("residual".into(), json!(c.residual));
    d.insert("solution_dim".into(), json!(c.solution_dim));
    d.insert("eigen_floor".into(), json!(c.eigen_floor));
    d.insert("partial_transpose_floor".into(), json!(c.partial_transpose_floor));
    d.insert("warnings".into(), json!(c.warnings));
    Ok(match c.verdict {
        SectionVerdict::Quantum => Outcome::new("quantum", false, d),
        SectionVerdict::QuantumTimeReversed => Outcome::new("quantum_time_reversed", false, d),
        SectionVerdict::Underdetermined => Outcome::new("underdetermined", false, d),
        SectionVerdict::NonQuantum => Outcome::new("non_quantum", true, d),
    })
}

/// Renders a report in the requested format; `dot` falls back to JSON for
/// commands without a graph.
pub fn render(report: &RunReport, format: Format, color: bool) -> String {
    match (format, &report.dot) {
        (Format::Dot, Some(dot)) => dot.clone(),
        (Format::Text, _) => report.render_text(color),
        _ => report.render_json(),
    }
}
