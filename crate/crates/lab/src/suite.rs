//! The acceptance matrix. A manifest lists criteria by id, each optionally
//! overriding some of its tolerances; the scenarios themselves (groups,
//! amplitudes, seeds, sample counts) are fixed, and the runs they need are
//! shared between criteria, so changing one criterion's tolerances never
//! changes another criterion's verdict.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use groupoid_lab_core::affine::{corpus, Certification, ConvexitySettings};
use groupoid_lab_core::averager::{
    average_step, defect, extract_action, AxiomDeviation, ExtractionSettings, OrbitComparison,
};
use groupoid_lab_core::groupoid::{
    ActionGroupoid, ActionSpec, ComposablePairSampler, LinearRep, PerturbedMap,
};
use groupoid_lab_core::lie::{haar_nodes, subgroup_rule, CompactGroup};
use groupoid_lab_core::rng::stream_rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{
    ActionConfig, AffineConfig, AverageConfig, ComplexSource, GkrConfig, GkrScenario,
    HamiltonianConfig, MomentumConfig, PhiConfig,
};
use crate::error::{config_err, LabError, Status};
use crate::report::{to_value, Cell, Outcome, Table};
use crate::run::{self, AverageRun};

/// One criterion of the matrix with its default tolerances.
pub struct CriterionSpec {
    pub id: &'static str,
    pub title: &'static str,
    pub tolerances: &'static [(&'static str, f64)],
}

pub const CRITERIA: [CriterionSpec; 11] = [
    CriterionSpec {
        id: "quadratic_contraction",
        title: "one averaging step squares the defect; iteration reaches the tolerance quickly",
        tolerances: &[
            ("slope", 2.0),
            ("slope_width", 0.3),
            ("defect", 1e-9),
            ("max_steps", 6.0),
            ("max_initial_defect", 0.05),
            ("held_out_factor", 3.0),
        ],
    },
    CriterionSpec {
        id: "abelian_one_step",
        title: "one averaging step on a torus gives a homomorphism",
        tolerances: &[("defect", 1e-10)],
    },
    CriterionSpec {
        id: "telescoping",
        title: "products of correction terms telescope at every node",
        tolerances: &[("error", 1e-10)],
    },
    CriterionSpec {
        id: "stability",
        title: "the limit stays within K times the initial defect",
        tolerances: &[("factor", 5.0)],
    },
    CriterionSpec {
        id: "linearization",
        title: "extracted action has the orbits of the linear model",
        tolerances: &[("hausdorff", 1e-5), ("points", 1000.0)],
    },
    CriterionSpec {
        id: "gkr",
        title: "near-homomorphisms of compact groups average to homomorphisms",
        tolerances: &[("defect", 1e-9), ("power_map", 1e-9)],
    },
    CriterionSpec {
        id: "mineur_arnold",
        title: "action integrals match the enclosed areas",
        tolerances: &[("oscillator", 1e-6), ("quartic", 1e-5)],
    },
    CriterionSpec {
        id: "momentum_image",
        title: "sampled CP2 momentum image fills the simplex",
        tolerances: &[("hausdorff", 0.02), ("resolution", 0.02)],
    },
    CriterionSpec {
        id: "frequency_set",
        title: "sampled frequency sums are gap free in the window",
        tolerances: &[("resolution", 0.05), ("min_offset", 1e-3)],
    },
    CriterionSpec {
        id: "affine_convexity",
        title: "convex complexes accepted, counterexamples rejected with witnesses",
        tolerances: &[],
    },
    CriterionSpec {
        id: "determinism",
        title: "repeated runs give byte-identical reports",
        tolerances: &[],
    },
];

/// Seeds of the fixed scenarios, echoed into the suite report.
pub const SUITE_SEEDS: [(&str, u64); 8] = [
    ("su2_perturbation", 7),
    ("su2_rule", 7),
    ("pair_sampler", 3),
    ("torus_perturbation", 7),
    ("so3_perturbation", 1),
    ("gkr_perturbation", 9),
    ("cp2_samples", 0),
    ("frequency_samples", 0),
];

pub const SU2_AMPLITUDES: [f64; 4] = [0.1, 0.05, 0.02, 0.01];

/// Tolerances of one criterion, by name.
pub type Tol = BTreeMap<String, f64>;

/// Criteria to run, in manifest order, with resolved tolerances.
pub type Plan = Vec<(&'static CriterionSpec, Tol)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub criteria: Vec<ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            criteria: CRITERIA
                .iter()
                .map(|c| ManifestEntry {
                    id: c.id.into(),
                    tolerances: BTreeMap::new(),
                })
                .collect(),
        }
    }
}

impl Manifest {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self, LabError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Read {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    /// Checks ids and tolerance names and fills in default tolerances.
    pub fn resolve(&self) -> Result<Plan, LabError> {
        if self.criteria.is_empty() {
            return Err(LabError::Config("manifest lists no criteria".into()));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in &self.criteria {
            let spec = CRITERIA
                .iter()
                .find(|c| c.id == e.id)
                .ok_or_else(|| LabError::Config(format!("unknown criterion {:?}", e.id)))?;
            if !seen.insert(spec.id) {
                return Err(LabError::Config(format!(
                    "criterion {:?} listed twice",
                    e.id
                )));
            }
            let mut tol: BTreeMap<String, f64> = spec
                .tolerances
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect();
            for (k, v) in &e.tolerances {
                match tol.get_mut(k) {
                    Some(slot) if v.is_finite() => *slot = *v,
                    Some(_) => {
                        return Err(LabError::Config(format!(
                            "{}: tolerance {k} must be finite",
                            spec.id
                        )))
                    }
                    None => {
                        return Err(LabError::Config(format!(
                            "{}: unknown tolerance {k:?}",
                            spec.id
                        )))
                    }
                }
            }
            out.push((spec, tol));
        }
        Ok(out)
    }
}

/// A measured quantity and the bounds it must satisfy; no bounds means the
/// value is reported for information.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let passed =
            !value.is_nan() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        Self {
            name: name.into(),
            value,
            lo,
            hi,
            passed,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Self::new(name, value, None, Some(hi))
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Self::new(name, value, Some(lo), None)
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, value, Some(lo), Some(hi))
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, f64::from(u8::from(ok)), Some(1.0), None)
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, None, None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CriterionResult {
    /// Failed checks, or the error, in one line.
    pub fn summary(&self) -> String {
        if let Some(e) = &self.error {
            return e.clone();
        }
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}={}", c.name, crate::report::format_f64(c.value)))
            .collect();
        if failed.is_empty() {
            format!("{} checks", self.checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        }
    }
}

struct Su2Run {
    amplitude: f64,
    lazy_before: f64,
    lazy_after: f64,
    run: AverageRun,
}

struct TorusStep {
    label: &'static str,
    before: f64,
    after: f64,
}

struct So3Run {
    run: AverageRun,
    orbits: Option<OrbitComparison>,
    axioms: Option<AxiomDeviation>,
}

struct GkrRun {
    label: &'static str,
    run: AverageRun,
    final_defect: Option<f64>,
    bijective: bool,
    winding: Option<i64>,
    expected_winding: Option<i64>,
    power_map_distance: Option<f64>,
}

/// Scenario runs shared by several criteria, computed on first use.
#[derive(Default)]
pub struct Context {
    su2: OnceCell<Result<Vec<Su2Run>, String>>,
    so3: OnceCell<Result<So3Run, String>>,
    gkr: OnceCell<Result<Vec<GkrRun>, String>>,
}

fn shared<T>(
    cell: &OnceCell<Result<T, String>>,
    f: impl FnOnce() -> Result<T, LabError>,
) -> Result<&T, LabError> {
    cell.get_or_init(|| f().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| LabError::Run(e.clone()))
}

pub fn su2_config(amplitude: f64) -> AverageConfig {
    AverageConfig {
        amplitude,
        ..AverageConfig::default()
    }
}

impl Context {
    fn su2(&self) -> Result<&Vec<Su2Run>, LabError> {
        shared(&self.su2, || {
            SU2_AMPLITUDES
                .iter()
                .map(|&a| {
                    let cfg = su2_config(a);
                    let groupoid = run::build_groupoid(&cfg)?;
                    let rule = subgroup_rule(groupoid.group(), cfg.rule.subgroup, cfg.rule.seed)
                        .map_err(config_err)?;
                    let phi = PerturbedMap::seeded_with_degree(groupoid, a, cfg.seed, cfg.degree);
                    let sampler = cfg.sampler.with_count(64);
                    let lazy_before = defect(&phi, &sampler).map_err(config_err)?.sampled_sup;
                    let hat = average_step(&phi, &rule).map_err(config_err)?;
                    let lazy_after = defect(&hat, &sampler).map_err(config_err)?.sampled_sup;
                    let (_, run) = run::averaging_run(&cfg)?;
                    Ok(Su2Run {
                        amplitude: a,
                        lazy_before,
                        lazy_after,
                        run,
                    })
                })
                .collect()
        })
    }

    fn so3(&self) -> Result<&So3Run, LabError> {
        shared(&self.so3, || {
            let (limit, run) = run::averaging_run(&AverageConfig::twisted_so3())?;
            let (mut orbits, mut axioms) = (None, None);
            if let Some(limit) = limit {
                let ex =
                    extract_action(limit, ExtractionSettings::default()).map_err(config_err)?;
                orbits = Some(
                    ex.compare_with_linear_orbits(10, 100, 5)
                        .map_err(config_err)?,
                );
                axioms = Some(
                    ex.axiom_deviation(&mut stream_rng(1, 1), 10)
                        .map_err(config_err)?,
                );
            }
            Ok(So3Run {
                run,
                orbits,
                axioms,
            })
        })
    }

    fn gkr(&self) -> Result<&Vec<GkrRun>, LabError> {
        shared(&self.gkr, || {
            let su2 = GkrConfig::default();
            let torus = GkrConfig {
                scenario: GkrScenario::TorusPower {
                    winding: 2,
                    grid: 16,
                    amplitude: 0.02,
                },
                ..GkrConfig::default()
            };
            [
                ("su2_identity", su2, None),
                ("torus_winding_2", torus, Some(2)),
            ]
            .into_iter()
            .map(|(label, cfg, expected_winding)| {
                let (_, limit, run) = run::gkr_run(&cfg)?;
                let power_map_distance = match (&cfg.scenario, &limit) {
                    (GkrScenario::TorusPower { winding, grid, .. }, Some(l)) => {
                        let w = *winding as f64;
                        Some(l.max_distance(&run::torus_node_map(*grid, |t| w * t)?))
                    }
                    _ => None,
                };
                Ok(GkrRun {
                    power_map_distance,
                    label,
                    final_defect: limit.as_ref().map(|l| l.defect()),
                    bijective: limit
                        .as_ref()
                        .is_some_and(|l| l.is_bijective_onto_image_subgroup(1e-8)),
                    winding: limit
                        .as_ref()
                        .and_then(groupoid_lab_core::averager::winding_number),
                    expected_winding,
                    run,
                })
            })
            .collect()
        })
    }

    /// Every iteration report of the averaging scenarios, labelled.
    fn all_runs(&self) -> Result<Vec<(String, &AverageRun)>, LabError> {
        let mut out: Vec<(String, &AverageRun)> = Vec::new();
        for r in self.su2()? {
            out.push((format!("su2_amp_{}", r.amplitude), &r.run));
        }
        out.push(("so3_twisted".into(), &self.so3()?.run));
        for g in self.gkr()? {
            out.push((format!("gkr_{}", g.label), &g.run));
        }
        Ok(out)
    }
}

fn t(tol: &Tol, k: &str) -> f64 {
    tol[k]
}

fn quadratic_contraction(ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    let runs = ctx.su2()?;
    let xs: Vec<f64> = runs.iter().map(|r| r.lazy_before).collect();
    let ys: Vec<f64> = runs.iter().map(|r| r.lazy_after).collect();
    let slope = groupoid_lab_core::averager::loglog_slope(&xs, &ys);
    let (s, w) = (t(tol, "slope"), t(tol, "slope_width"));
    let mut checks = vec![Check::within("one_step_loglog_slope", slope, s - w, s + w)];
    let mut started = 0;
    for r in runs {
        let a = r.amplitude;
        checks.push(Check::info(format!("amp_{a}_defect_before"), r.lazy_before));
        checks.push(Check::info(format!("amp_{a}_defect_after"), r.lazy_after));
        match r.run.report() {
            Some(rep) if rep.defects[0] <= t(tol, "max_initial_defect") => {
                started += 1;
                let last = *rep.defects.last().expect("at least one defect");
                checks.push(Check::at_most(
                    format!("amp_{a}_final_defect"),
                    last,
                    t(tol, "defect"),
                ));
                checks.push(Check::at_most(
                    format!("amp_{a}_steps"),
                    rep.iterations as f64,
                    t(tol, "max_steps"),
                ));
                let held = rep.held_out_defect.unwrap_or(f64::NAN);
                checks.push(Check::at_most(
                    format!("amp_{a}_held_out_defect"),
                    held,
                    t(tol, "held_out_factor") * t(tol, "defect"),
                ));
            }
            Some(rep) => checks.push(Check::info(
                format!("amp_{a}_initial_defect_above_start"),
                rep.defects[0],
            )),
            None => checks.push(Check::holds(format!("amp_{a}_started"), false)),
        }
    }
    checks.push(Check::at_least(
        "scenarios_started",
        f64::from(started),
        1.0,
    ));
    Ok(checks)
}

fn torus_steps() -> Result<Vec<TorusStep>, LabError> {
    let cases: [(&str, usize, Vec<Vec<i32>>); 2] = [
        ("torus1", 1, vec![vec![1]]),
        ("torus2", 2, vec![vec![1, 0], vec![1, 1]]),
    ];
    cases
        .into_iter()
        .map(|(label, n, charges)| {
            let g = ActionGroupoid::new(
                CompactGroup::torus(n),
                ActionSpec::linear(LinearRep::TorusCharges(charges)),
                0.8,
            )
            .map_err(config_err)?;
            let phi = PerturbedMap::seeded(g.clone(), 0.2, 7);
            let rule = haar_nodes(g.group(), 8, 0).map_err(config_err)?;
            let sampler = ComposablePairSampler::random(5, 200);
            let before = defect(&phi, &sampler).map_err(config_err)?.sampled_sup;
            let after = defect(&average_step(&phi, &rule).map_err(config_err)?, &sampler)
                .map_err(config_err)?
                .sampled_sup;
            Ok(TorusStep {
                label,
                before,
                after,
            })
        })
        .collect()
}

fn abelian_one_step(_ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    let mut checks = Vec::new();
    for s in torus_steps()? {
        checks.push(Check::info(format!("{}_defect_before", s.label), s.before));
        checks.push(Check::at_most(
            format!("{}_defect_after", s.label),
            s.after,
            t(tol, "defect"),
        ));
    }
    Ok(checks)
}

fn telescoping(ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    Ok(ctx
        .all_runs()?
        .into_iter()
        .map(|(label, r)| match r.report() {
            Some(rep) => Check::at_most(
                format!("{label}_telescoping_error"),
                rep.telescoping_error,
                t(tol, "error"),
            ),
            None => Check::holds(format!("{label}_started"), false),
        })
        .collect())
}

fn stability(ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    let mut checks = Vec::new();
    for (label, r) in ctx.all_runs()? {
        if let Some(rep) = r.report().filter(|rep| rep.converged()) {
            let d1 = rep.defects[0];
            let ratio = if d1 > 0.0 { rep.stability / d1 } else { 0.0 };
            checks.push(Check::at_most(
                format!("{label}_stability_over_initial_defect"),
                ratio,
                t(tol, "factor"),
            ));
        }
    }
    checks.push(Check::at_least(
        "converged_scenarios",
        checks.len() as f64,
        1.0,
    ));
    Ok(checks)
}

fn linearization(ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    let r = ctx.so3()?;
    let rep = r.run.report();
    let mut checks = vec![Check::holds(
        "converged",
        rep.is_some_and(|r| r.converged()),
    )];
    if let Some(rep) = rep {
        checks.push(Check::info(
            "final_defect",
            *rep.defects.last().expect("nonempty"),
        ));
    }
    if let (Some(o), Some(a)) = (r.orbits, r.axioms) {
        checks.push(Check::at_most(
            "orbit_hausdorff",
            o.hausdorff(),
            t(tol, "hausdorff"),
        ));
        checks.push(Check::at_least(
            "sampled_points",
            o.samples as f64,
            t(tol, "points"),
        ));
        checks.push(Check::info("action_composition_error", a.composition));
        checks.push(Check::info("action_unit_error", a.unit));
    }
    Ok(checks)
}

fn gkr(ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    let mut checks = Vec::new();
    for g in ctx.gkr()? {
        checks.push(Check::at_most(
            format!("{}_final_defect", g.label),
            g.final_defect.unwrap_or(f64::NAN),
            t(tol, "defect"),
        ));
        match g.expected_winding {
            // A power map of the circle is a covering, not an automorphism.
            Some(w) => {
                let found = g.winding.map_or(f64::NAN, |x| x as f64);
                checks.push(Check::within(
                    format!("{}_winding", g.label),
                    found,
                    w as f64,
                    w as f64,
                ));
                let d = g.power_map_distance.unwrap_or(f64::NAN);
                checks.push(Check::at_most(
                    format!("{}_distance_to_power_map", g.label),
                    d,
                    t(tol, "power_map"),
                ));
            }
            None => checks.push(Check::holds(
                format!("{}_bijective_onto_image", g.label),
                g.bijective,
            )),
        }
    }
    Ok(checks)
}

fn mineur_arnold(_ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    let mut checks = Vec::new();
    let osc = ActionConfig {
        hamiltonian: HamiltonianConfig::Oscillator,
        energies: vec![0.1, 0.5, 1.0],
        ..ActionConfig::default()
    };
    for (v, _) in run::action_run(&osc)? {
        checks.push(Check::at_most(
            format!("oscillator_E_{}_error", v.energy),
            (v.value - 2.0 * PI * v.energy).abs(),
            t(tol, "oscillator"),
        ));
    }
    let quartic = ActionConfig {
        hamiltonian: HamiltonianConfig::QuarticWell,
        energies: vec![1.0],
        ..ActionConfig::default()
    };
    for (v, area) in run::action_run(&quartic)? {
        checks.push(Check::info(
            format!("quartic_E_{}_action", v.energy),
            v.value,
        ));
        checks.push(Check::at_most(
            format!("quartic_E_{}_error", v.energy),
            (v.value - area).abs(),
            t(tol, "quartic"),
        ));
    }
    Ok(checks)
}

fn momentum_image(_ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    let cfg = MomentumConfig {
        resolution: t(tol, "resolution"),
        hausdorff_tolerance: t(tol, "hausdorff"),
        ..MomentumConfig::default()
    };
    let img = run::momentum_run(&cfg)?;
    Ok(vec![
        Check::at_most(
            "hausdorff_to_simplex",
            img.hausdorff.unwrap_or(f64::NAN),
            t(tol, "hausdorff"),
        ),
        Check::at_most("coverage_max_gap", img.certificate.max_gap, cfg.resolution),
        Check::holds("coverage_certificate", img.certificate.passed),
        Check::info("invariance_error", img.invariance_error.unwrap_or(f64::NAN)),
    ])
}

fn frequency_set(_ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    let r = t(tol, "resolution");
    let k1 = PhiConfig {
        lambda: vec![1.0],
        gamma: vec![1.0],
        samples: 10_000,
        window: vec![(2.0, 6.0)],
        resolution: r,
        ..PhiConfig::default()
    };
    let one = run::phi_run(&k1)?;
    let k2 = PhiConfig {
        resolution: r,
        ..PhiConfig::default()
    };
    let two = run::phi_run(&k2)?;
    Ok(vec![
        Check::at_most("k1_coverage_max_gap", one.coverage.max_gap, r),
        Check::holds("k1_coverage_certificate", one.coverage.passed),
        Check::at_most(
            "k1_min_minus_2",
            (one.min_point[0] - 2.0).abs(),
            t(tol, "min_offset"),
        ),
        Check::info("k2_windowed_samples", two.windowed as f64),
        Check::at_most("k2_coverage_max_gap", two.coverage.max_gap, r),
        Check::holds("k2_coverage_certificate", two.coverage.passed),
    ])
}

fn affine_convexity(_ctx: &Context, _tol: &Tol) -> Result<Vec<Check>, LabError> {
    let settings = ConvexitySettings::default();
    let mut checks = Vec::new();
    for x in corpus::positive() {
        let c = groupoid_lab_core::affine::certify(&x, &settings).map_err(config_err)?;
        checks.push(Check::holds(format!("{}_accepted", x.name), c.accepted()));
        let unimodular = x
            .gluings
            .iter()
            .all(|g| g.transition.determinant().abs() == 1);
        checks.push(Check::holds(format!("{}_unimodular", x.name), unimodular));
    }
    for x in corpus::negative() {
        let c = groupoid_lab_core::affine::certify(&x, &settings).map_err(config_err)?;
        let ok = match &c {
            Certification::Accepted(_) => false,
            Certification::Rejected(r) => r.verify(&x),
        };
        checks.push(Check::holds(
            format!("{}_rejected_with_verified_witness", x.name),
            ok,
        ));
    }
    Ok(checks)
}

/// Reduced scenarios of every subcommand, run twice.
fn determinism(_ctx: &Context, _tol: &Tol) -> Result<Vec<Check>, LabError> {
    type Runner = Box<dyn Fn() -> Result<Outcome, LabError>>;
    let runners: Vec<(&str, Runner)> = vec![
        (
            "average",
            Box::new(|| run::average(&AverageConfig::default())),
        ),
        ("gkr", Box::new(|| run::gkr(&GkrConfig::default()))),
        (
            "momentum",
            Box::new(|| {
                run::momentum(&MomentumConfig {
                    samples: 2000,
                    ..MomentumConfig::default()
                })
            }),
        ),
        ("action", Box::new(|| run::action(&ActionConfig::default()))),
        (
            "phi_set",
            Box::new(|| {
                run::phi_set_command(&PhiConfig {
                    samples: 5000,
                    ..PhiConfig::default()
                })
            }),
        ),
        (
            "affine_check",
            Box::new(|| {
                run::affine_check(&AffineConfig {
                    complex: ComplexSource::Corpus("frame".into()),
                    ..AffineConfig::default()
                })
            }),
        ),
    ];
    let mut checks = Vec::new();
    for (name, f) in runners {
        let render = |o: Outcome| {
            let mut s = o.report_json(1);
            for t in &o.tables {
                s.push_str(&t.to_csv());
            }
            s
        };
        let (a, b) = (render(f()?), render(f()?));
        checks.push(Check::holds(format!("{name}_identical"), a == b));
    }
    Ok(checks)
}

fn run_criterion(id: &str, ctx: &Context, tol: &Tol) -> Result<Vec<Check>, LabError> {
    match id {
        "quadratic_contraction" => quadratic_contraction(ctx, tol),
        "abelian_one_step" => abelian_one_step(ctx, tol),
        "telescoping" => telescoping(ctx, tol),
        "stability" => stability(ctx, tol),
        "linearization" => linearization(ctx, tol),
        "gkr" => gkr(ctx, tol),
        "mineur_arnold" => mineur_arnold(ctx, tol),
        "momentum_image" => momentum_image(ctx, tol),
        "frequency_set" => frequency_set(ctx, tol),
        "affine_convexity" => affine_convexity(ctx, tol),
        "determinism" => determinism(ctx, tol),
        _ => unreachable!("ids are checked when the manifest is resolved"),
    }
}

/// Runs one criterion; errors become a failed result.
pub fn evaluate(spec: &CriterionSpec, tol: &Tol, ctx: &Context) -> CriterionResult {
    let (checks, error) = match run_criterion(spec.id, ctx, tol) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionResult {
        id: spec.id.into(),
        title: spec.title.into(),
        passed: error.is_none() && checks.iter().all(|c| c.passed),
        tolerances: tol.clone(),
        checks,
        error,
    }
}

/// Runs the manifest, calling `progress` after each criterion.
pub fn run_suite(
    manifest: &Manifest,
    mut progress: impl FnMut(&CriterionResult),
) -> Result<Outcome, LabError> {
    let plan = manifest.resolve()?;
    let ctx = Context::default();
    let mut results = Vec::new();
    for (spec, tol) in &plan {
        let r = evaluate(spec, tol, &ctx);
        progress(&r);
        results.push(r);
    }
    let passed = results.iter().all(|r| r.passed);
    let mut summary = Table::new("criteria", &["id", "passed", "checks", "failed_checks"]);
    for r in &results {
        let failed = r.checks.iter().filter(|c| !c.passed).count() + usize::from(r.error.is_some());
        summary.push(vec![
            Cell::from(r.id.as_str()),
            r.passed.into(),
            r.checks.len().into(),
            failed.into(),
        ]);
    }
    let resolved = Manifest {
        criteria: plan
            .iter()
            .map(|(s, tol)| ManifestEntry {
                id: s.id.into(),
                tolerances: tol.clone(),
            })
            .collect(),
    };
    Ok(Outcome {
        command: "suite".into(),
        config: to_value(&resolved),
        seeds: SUITE_SEEDS
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
        result: json!({ "passed": passed, "criteria": to_value(&results) }),
        tables: vec![summary],
        status: if passed {
            Status::Passed
        } else {
            Status::Failed
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_manifest_lists_every_criterion_once() {
        let plan = Manifest::default().resolve().unwrap();
        assert_eq!(plan.len(), CRITERIA.len());
    }

    #[test]
    fn manifest_errors_are_config_errors() {
        let bad = |text: &str| {
            serde_json::from_str::<Manifest>(text)
                .map_err(config_err)
                .and_then(|m| m.resolve().map(|_| ()))
        };
        for text in [
            r#"{"criteria": []}"#,
            r#"{"criteria": [{"id": "nonsense"}]}"#,
            r#"{"criteria": [{"id": "gkr"}, {"id": "gkr"}]}"#,
            r#"{"criteria": [{"id": "gkr", "tolerances": {"winding": 1}}]}"#,
            r#"{"criterion": []}"#,
        ] {
            assert_eq!(bad(text).unwrap_err().exit_code(), 4, "{text}");
        }
    }

    #[test]
    fn overrides_replace_defaults_only_where_given() {
        let m: Manifest = serde_json::from_str(r#"{"criteria": [{"id": "quadratic_contraction", "tolerances": {"slope_width": 0.1}}]}"#).unwrap();
        let plan = m.resolve().unwrap();
        assert_eq!(plan[0].1["slope_width"], 0.1);
        assert_eq!(plan[0].1["slope"], 2.0);
    }

    #[test]
    fn checks_respect_bounds() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::at_most("a", f64::NAN, 1.0).passed);
        assert!(!Check::within("a", 2.5, 1.7, 2.3).passed);
        assert!(Check::info("a", -3.0).passed);
        assert!(!Check::holds("a", false).passed);
    }

    #[test]
    fn cheap_criteria_pass_in_isolation() {
        let ctx = Context::default();
        for id in ["abelian_one_step", "mineur_arnold", "affine_convexity"] {
            let spec = CRITERIA.iter().find(|c| c.id == id).unwrap();
            let tol = spec
                .tolerances
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect();
            let r = evaluate(spec, &tol, &ctx);
            assert!(r.passed, "{id}: {}", r.summary());
        }
    }
}
