//! One runner per subcommand: builds the scenario, runs it, and packs the
//! report and plot tables.

use std::f64::consts::PI;

use groupoid_lab_core::affine::{certify, corpus, AffineComplex, Certification};
use groupoid_lab_core::averager::{
    gkr_average, iterate, winding_number, AveragingError, ConvergenceReport, GkrOutcome, NodeMap,
};
use groupoid_lab_core::groupoid::{
    ActionGroupoid, BandLimitedField, GroupoidMap, PerturbedMap, ProjectionMap,
};
use groupoid_lab_core::lie::{subgroup_rule, CompactGroup, GroupElement, SubgroupSpec};
use groupoid_lab_core::momentum::{
    action_integral, cylinder_period, momentum_image, phi_set, ActionIntegralProblem, ActionValue,
    ComplexProjectiveSpace, CotangentTorus, FrequencyTuple, MomentumError, MomentumImage,
    OrbitPath, Oscillator, PhiSetReport, PhiSettings, PlanarHamiltonian, ProductSystem,
    QuarticWell, Sphere, ToricHamiltonianSystem,
};
use groupoid_lab_core::quadrature::gauss_legendre_interval;
use serde_json::{json, Value};

use crate::config::{
    ActionConfig, AffineConfig, AverageConfig, ComplexSource, GkrConfig, GkrScenario,
    HamiltonianConfig, MomentumConfig, PhiConfig, Scenario, SystemConfig,
};
use crate::error::{config_err, run_err, LabError, Status};
use crate::report::{to_value, Outcome, Table};

fn outcome<C: Scenario>(cfg: &C, result: Value, tables: Vec<Table>, status: Status) -> Outcome {
    Outcome {
        command: C::COMMAND.into(),
        config: to_value(cfg),
        seeds: cfg.seeds(),
        result,
        tables,
        status,
    }
}

/// `Delta_n` per averaging step; a run that needed no step has no rows.
pub fn defect_curve(report: &ConvergenceReport) -> Table {
    let mut t = Table::new("defect_curve", &["iteration", "defect", "ratio"]);
    for (n, w) in report.defects.windows(2).enumerate() {
        t.push(vec![
            (n + 1).into(),
            w[1].into(),
            (w[1] / (w[0] * w[0])).into(),
        ]);
    }
    t
}

/// An averaging run that reached a verdict.
#[derive(Debug, Clone)]
pub enum AverageRun {
    Finished(ConvergenceReport),
    TooLarge { defect: f64, limit: f64 },
}

impl AverageRun {
    pub fn status(&self) -> Status {
        match self {
            AverageRun::Finished(r) if r.converged() => Status::Passed,
            AverageRun::Finished(_) => Status::Stalled,
            AverageRun::TooLarge { .. } => Status::DefectTooLarge,
        }
    }

    pub fn report(&self) -> Option<&ConvergenceReport> {
        match self {
            AverageRun::Finished(r) => Some(r),
            AverageRun::TooLarge { .. } => None,
        }
    }
}

fn finish<T>(
    res: Result<(T, ConvergenceReport), AveragingError>,
) -> Result<(Option<T>, AverageRun), LabError> {
    match res {
        Ok((m, r)) => Ok((Some(m), AverageRun::Finished(r))),
        Err(AveragingError::Stalled(r)) => Ok((None, AverageRun::Finished(*r))),
        Err(AveragingError::DefectTooLarge { defect, limit }) => {
            Ok((None, AverageRun::TooLarge { defect, limit }))
        }
        Err(e @ AveragingError::RuleMismatch(_)) => Err(config_err(e)),
        Err(e) => Err(run_err(e)),
    }
}

pub fn build_groupoid(cfg: &AverageConfig) -> Result<ActionGroupoid, LabError> {
    let group = CompactGroup::new(cfg.group.clone(), cfg.metric_scale).map_err(config_err)?;
    ActionGroupoid::new(group, cfg.action.clone(), cfg.radius).map_err(config_err)
}

/// The map a scenario starts from.
pub fn initial_map(
    cfg: &AverageConfig,
    groupoid: ActionGroupoid,
) -> Result<Box<dyn GroupoidMap>, LabError> {
    if !(cfg.amplitude >= 0.0 && cfg.amplitude.is_finite()) {
        return Err(LabError::Config(format!(
            "amplitude must be finite and nonnegative, got {}",
            cfg.amplitude
        )));
    }
    Ok(if cfg.amplitude == 0.0 {
        Box::new(ProjectionMap::new(groupoid))
    } else {
        Box::new(PerturbedMap::seeded_with_degree(
            groupoid,
            cfg.amplitude,
            cfg.seed,
            cfg.degree,
        ))
    })
}

/// Iterates the averaging operator, keeping the limit map when it converged.
pub fn averaging_run(
    cfg: &AverageConfig,
) -> Result<(Option<impl GroupoidMap>, AverageRun), LabError> {
    let groupoid = build_groupoid(cfg)?;
    let rule =
        subgroup_rule(groupoid.group(), cfg.rule.subgroup, cfg.rule.seed).map_err(config_err)?;
    let phi = initial_map(cfg, groupoid)?;
    finish(iterate(phi, &rule, &cfg.sampler, &cfg.iteration))
}

pub fn average(cfg: &AverageConfig) -> Result<Outcome, LabError> {
    let (_, run) = averaging_run(cfg)?;
    let status = run.status();
    let (result, tables) = match &run {
        AverageRun::Finished(r) => (
            json!({ "convergence": to_value(r), "contraction_slope": r.contraction_slope() }),
            vec![defect_curve(r)],
        ),
        AverageRun::TooLarge { defect, limit } => (
            json!({ "initial_defect": defect, "start_limit": limit }),
            Vec::new(),
        ),
    };
    Ok(outcome(cfg, result, tables, status))
}

fn gkr_finish(
    res: Result<GkrOutcome, AveragingError>,
) -> Result<(Option<NodeMap>, AverageRun), LabError> {
    finish(res.map(|o| (o.limit, o.report)))
}

/// The node map a GKR scenario starts from.
pub fn gkr_initial(cfg: &GkrConfig) -> Result<NodeMap, LabError> {
    match &cfg.scenario {
        GkrScenario::Su2Identity {
            amplitude,
            subgroup,
            rule_seed,
        } => {
            let g = CompactGroup::su(2);
            let rule = subgroup_rule(&g, *subgroup, *rule_seed).map_err(config_err)?;
            let field = BandLimitedField::seeded(&g, 1, *amplitude, cfg.seed);
            NodeMap::from_fn(&rule, &g, |h| g.mul(h, &g.exp(&field.eval(h, &[1.0]))))
                .map_err(config_err)
        }
        GkrScenario::TorusPower {
            winding,
            grid,
            amplitude,
        } => {
            let (w, a) = (*winding as f64, *amplitude);
            torus_node_map(*grid, |t| w * t + a * t.sin())
        }
    }
}

pub fn torus_node_map(grid: usize, f: impl Fn(f64) -> f64) -> Result<NodeMap, LabError> {
    let t = CompactGroup::torus(1);
    let rule = subgroup_rule(&t, SubgroupSpec::TorusGrid(grid), None).map_err(config_err)?;
    NodeMap::from_fn(&rule, &t, |h| {
        GroupElement::Torus(
            [f(h.as_angles().expect("torus element")[0])]
                .into_iter()
                .collect(),
        )
    })
    .map_err(config_err)
}

pub fn gkr_run(cfg: &GkrConfig) -> Result<(NodeMap, Option<NodeMap>, AverageRun), LabError> {
    let rho = gkr_initial(cfg)?;
    let (limit, run) = gkr_finish(gkr_average(&rho, &cfg.iteration))?;
    Ok((rho, limit, run))
}

pub fn gkr(cfg: &GkrConfig) -> Result<Outcome, LabError> {
    let (rho, limit, run) = gkr_run(cfg)?;
    let mut status = run.status();
    let mut result = json!({ "initial_defect": rho.defect(), "nodes": rho.values.len() });
    match &run {
        AverageRun::Finished(r) => result["convergence"] = to_value(r),
        AverageRun::TooLarge { limit, .. } => result["start_limit"] = to_value(limit),
    }
    if let Some(limit) = &limit {
        result["final_defect"] = to_value(&limit.defect());
        result["bijective_onto_image"] = to_value(&limit.is_bijective_onto_image_subgroup(1e-8));
        if let GkrScenario::TorusPower { winding, grid, .. } = &cfg.scenario {
            let w = *winding as f64;
            let exact = torus_node_map(*grid, |t| w * t)?;
            let found = winding_number(limit);
            result["winding"] = to_value(&found);
            result["distance_to_power_map"] = to_value(&limit.max_distance(&exact));
            if found != Some(*winding) {
                status = Status::Failed;
            }
        }
    }
    let tables = run.report().map(defect_curve).into_iter().collect();
    Ok(outcome(cfg, result, tables, status))
}

pub fn build_system(s: &SystemConfig) -> Result<Box<dyn ToricHamiltonianSystem>, LabError> {
    Ok(match s {
        SystemConfig::ComplexProjective { n } if *n >= 1 => {
            Box::new(ComplexProjectiveSpace { n: *n })
        }
        SystemConfig::ComplexProjective { .. } => {
            return Err(LabError::Config("CP^n needs n >= 1".into()))
        }
        SystemConfig::Sphere => Box::new(Sphere),
        SystemConfig::Product { factors } => {
            let mut it = factors.iter();
            let first = it
                .next()
                .ok_or_else(|| LabError::Config("a product needs factors".into()))?;
            let mut acc = build_system(first)?;
            for f in it {
                acc = Box::new(ProductSystem::new(acc, build_system(f)?));
            }
            acc
        }
    })
}

fn momentum_err(e: MomentumError) -> LabError {
    match e {
        MomentumError::WrongShape(_)
        | MomentumError::Unsupported(_)
        | MomentumError::InvalidTuple(_)
        | MomentumError::EnergyOutOfRange { .. } => config_err(e),
        e => run_err(e),
    }
}

pub fn momentum_run(cfg: &MomentumConfig) -> Result<MomentumImage, LabError> {
    let sys = build_system(&cfg.system)?;
    momentum_image(sys.as_ref(), cfg.samples, cfg.seed, cfg.resolution).map_err(momentum_err)
}

fn point_table(name: &str, prefix: &str, pts: &[Vec<f64>]) -> Table {
    let k = pts.first().map_or(0, Vec::len);
    let cols: Vec<String> = (1..=k).map(|i| format!("{prefix}{i}")).collect();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(name, &cols);
    for p in pts {
        t.push(p.iter().map(|v| (*v).into()).collect());
    }
    t
}

pub fn momentum(cfg: &MomentumConfig) -> Result<Outcome, LabError> {
    let img = momentum_run(cfg)?;
    let ok = img.certificate.passed && img.hausdorff.is_none_or(|h| h <= cfg.hausdorff_tolerance);
    let result = json!({
        "system": img.system,
        "samples": img.samples.len(),
        "hull": img.hull,
        "certificate": to_value(&img.certificate),
        "hausdorff": img.hausdorff,
        "invariance_error": img.invariance_error,
    });
    let tables = vec![
        point_table("samples", "mu", &img.samples),
        point_table("hull", "mu", &img.hull),
    ];
    Ok(outcome(
        cfg,
        result,
        tables,
        if ok { Status::Passed } else { Status::Failed },
    ))
}

/// `oint p dq` over `h = E` for `h = (p^2 + V(q)) / 2`, as the enclosed area
/// `2 int sqrt(2E - V(q)) dq` over `[-q_max, q_max]`, with `q = q_max sin u`
/// to remove the endpoint singularities. Needs `V` even with `V(q_max s) =
/// 2E s^n`.
pub fn area_oracle(power: i32, energy: f64, nodes: usize) -> f64 {
    let q_max = (2.0 * energy).powf(1.0 / f64::from(power));
    let (u, w) = gauss_legendre_interval(nodes, -0.5 * PI, 0.5 * PI);
    let integral: f64 = u
        .iter()
        .zip(&w)
        .map(|(u, w)| {
            let s = u.sin();
            w * u.cos() * (1.0 - s.abs().powi(power)).max(0.0).sqrt()
        })
        .sum();
    2.0 * q_max * (2.0 * energy).sqrt() * integral
}

fn action_values<H: PlanarHamiltonian>(
    h: H,
    cfg: &ActionConfig,
) -> Result<Vec<ActionValue>, LabError> {
    let prob = ActionIntegralProblem {
        hamiltonian: h,
        center: [0.0, 0.0],
        energy_range: (0.0, f64::INFINITY),
    };
    cfg.energies
        .iter()
        .map(|e| action_integral(&prob, *e, &cfg.settings).map_err(momentum_err))
        .collect()
}

pub fn action_run(cfg: &ActionConfig) -> Result<Vec<(ActionValue, f64)>, LabError> {
    let (values, power) = match cfg.hamiltonian {
        HamiltonianConfig::Oscillator => (action_values(Oscillator, cfg)?, 2),
        HamiltonianConfig::QuarticWell => (action_values(QuarticWell, cfg)?, 4),
    };
    Ok(values
        .into_iter()
        .map(|v| {
            let area = area_oracle(power, v.energy, 200);
            (v, area)
        })
        .collect())
}

pub fn action(cfg: &ActionConfig) -> Result<Outcome, LabError> {
    if cfg.energies.is_empty() {
        return Err(LabError::Config("no energies given".into()));
    }
    let values = action_run(cfg)?;
    let mut t = Table::new(
        "action",
        &[
            "energy",
            "action",
            "area_quadrature",
            "error_estimate",
            "period",
            "arc_length",
            "steps",
            "closure_gap",
        ],
    );
    for (v, r) in &values {
        t.push(vec![
            v.energy.into(),
            v.value.into(),
            (*r).into(),
            v.error_estimate.into(),
            v.period.into(),
            v.arc_length.into(),
            v.steps.into(),
            v.closure_gap.into(),
        ]);
    }
    let mut result = json!({
        "values": values.iter().map(|(v, _)| to_value(v)).collect::<Vec<_>>(),
        "area_quadrature": values.iter().map(|(_, r)| *r).collect::<Vec<_>>(),
    });
    if let Some(c) = &cfg.cylinder {
        let path = OrbitPath {
            a0: c.a0,
            a1: c.a1,
            wobble: c.wobble,
        };
        let cyl = cylinder_period(&path, &CotangentTorus, &c.settings).map_err(momentum_err)?;
        result["cylinder"] = json!({
            "integral": to_value(&cyl),
            "endpoint_difference": cyl.endpoint_difference(),
            "expected": 2.0 * PI * (c.a1 - c.a0),
        });
    }
    Ok(outcome(cfg, result, vec![t], Status::Passed))
}

pub fn phi_run(cfg: &PhiConfig) -> Result<PhiSetReport, LabError> {
    let lambda = FrequencyTuple::new(cfg.lambda.clone()).map_err(config_err)?;
    let gamma = FrequencyTuple::new(cfg.gamma.clone()).map_err(config_err)?;
    let settings = PhiSettings {
        samples: cfg.samples,
        seed: cfg.seed,
        scale: cfg.scale,
        window: cfg.window.clone(),
        resolution: cfg.resolution,
    };
    phi_set(&lambda, &gamma, &settings).map_err(momentum_err)
}

pub fn phi_set_command(cfg: &PhiConfig) -> Result<Outcome, LabError> {
    let r = phi_run(cfg)?;
    let mut slices = Table::new("slices", &["position", "count", "max_gap"]);
    for s in &r.slices {
        slices.push(vec![s.position.into(), s.count.into(), s.max_gap.into()]);
    }
    let result = json!({
        "lambda": r.lambda,
        "gamma": r.gamma,
        "samples": r.samples.len(),
        "commuting_point": r.commuting_point,
        "min_point": r.min_point,
        "windowed": r.windowed,
        "hull": r.hull,
        "coverage": to_value(&r.coverage),
        "boundary_samples": r.boundary_samples,
    });
    let mut tables = vec![point_table("samples", "nu", &r.samples)];
    if !r.slices.is_empty() {
        tables.push(slices);
    }
    let status = if r.coverage.passed {
        Status::Passed
    } else {
        Status::Failed
    };
    Ok(outcome(cfg, result, tables, status))
}

/// Every complex of the built-in corpus.
pub fn corpus_complexes() -> Vec<AffineComplex> {
    let mut all = corpus::positive();
    all.extend(corpus::negative());
    all.push(corpus::half_strip(8));
    all
}

pub fn resolve_complex(src: &ComplexSource) -> Result<AffineComplex, LabError> {
    match src {
        ComplexSource::Inline(x) => Ok(x.clone()),
        ComplexSource::Corpus(name) => {
            let all = corpus_complexes();
            let names: Vec<String> = all.iter().map(|x| x.name.clone()).collect();
            all.into_iter().find(|x| &x.name == name).ok_or_else(|| {
                LabError::Config(format!(
                    "no corpus complex named {name:?}; known: {}",
                    names.join(", ")
                ))
            })
        }
    }
}

pub fn affine_check(cfg: &AffineConfig) -> Result<Outcome, LabError> {
    let x = resolve_complex(&cfg.complex)?;
    let c = certify(&x, &cfg.settings).map_err(config_err)?;
    let verified = match &c {
        Certification::Accepted(_) => None,
        Certification::Rejected(r) => Some(r.verify(&x)),
    };
    let result = json!({
        "complex": x.name,
        "cells": x.cells.len(),
        "gluings": x.gluings.len(),
        "accepted": c.accepted(),
        "witness_verified": verified,
        "certification": to_value(&c),
    });
    let status = if c.accepted() {
        Status::Passed
    } else {
        Status::Failed
    };
    Ok(outcome(cfg, result, Vec::new(), status))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_default_scenarios_run() {
        assert_eq!(
            action(&ActionConfig::default()).unwrap().status,
            Status::Passed
        );
        assert!(affine_check(&AffineConfig::default()).is_ok());
        let small = MomentumConfig {
            samples: 200,
            ..MomentumConfig::default()
        };
        assert!(momentum(&small).is_ok());
    }

    #[test]
    fn every_corpus_name_resolves() {
        for x in corpus_complexes() {
            assert_eq!(
                resolve_complex(&ComplexSource::Corpus(x.name.clone()))
                    .unwrap()
                    .name,
                x.name
            );
        }
        assert_eq!(
            resolve_complex(&ComplexSource::Corpus("nope".into()))
                .unwrap_err()
                .exit_code(),
            4
        );
    }

    #[test]
    fn quartic_oracle_matches_the_oscillator_limit() {
        // With power 2 the well is the oscillator, whose area is 2 pi E.
        assert!((area_oracle(2, 0.7, 200) - 2.0 * std::f64::consts::PI * 0.7).abs() < 1e-10);
    }
}
