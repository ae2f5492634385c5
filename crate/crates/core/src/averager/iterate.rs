use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::groupoid::{Arrow, ComposablePairSampler, GroupoidError, GroupoidMap};
use crate::lie::{CompactGroup, GroupElement, HaarQuadrature, SATURATED_DISTANCE};

use super::defect::{loglog_slope, sampler_tag};
use super::{AveragingError, IteratedMap};

/// Defects at or below this are treated as roundoff when fitting rates.
const ROUNDOFF_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct IterationSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Start threshold: the iteration refuses `Delta_1 > c0 / 4`.
    pub c0: f64,
    /// Allowed `sup dist(phi_inf, phi_1) / Delta_1`.
    pub stability_constant: f64,
    /// Held-out pairs must reach `held_out_factor * tol`.
    pub held_out_factor: f64,
}

impl Default for IterationSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 6,
            c0: 0.25,
            stability_constant: 5.0,
            held_out_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConvergenceStatus {
    Converged,
    Stalled,
    DefectTooLarge,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    /// `Delta_1, Delta_2, ...` on the training pairs, as measured.
    pub defects: Vec<f64>,
    /// `Delta_{n+1} / Delta_n^2`.
    pub ratios: Vec<f64>,
    /// `min Delta_n^2 / Delta_{n+1}` over steps above roundoff.
    pub c0_estimate: Option<f64>,
    pub iterations: usize,
    pub status: ConvergenceStatus,
    pub held_out_defect: Option<f64>,
    /// `sup dist(phi_final, phi_1)` over every arrow touched.
    pub stability: f64,
    pub stability_bound: f64,
    pub telescoping_error: f64,
    pub tol: f64,
    pub training_pairs: usize,
    pub held_out_pairs: usize,
    pub rule_tag: String,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.status == ConvergenceStatus::Converged
    }

    pub fn held_out_passed(&self, factor: f64) -> bool {
        self.held_out_defect.is_some_and(|d| d <= factor * self.tol)
    }

    pub fn stability_passed(&self) -> bool {
        self.stability <= self.stability_bound
    }

    /// Slope of `log Delta_{n+1}` against `log Delta_n` over the steps that
    /// stay above roundoff.
    pub fn contraction_slope(&self) -> f64 {
        let (xs, ys) = contraction_points(&self.defects);
        loglog_slope(&xs, &ys)
    }
}

fn contraction_points(defects: &[f64]) -> (Vec<f64>, Vec<f64>) {
    defects
        .windows(2)
        .filter(|w| w[1] > ROUNDOFF_FLOOR && w[0] > ROUNDOFF_FLOOR)
        .map(|w| (w[0], w[1]))
        .unzip()
}

fn level_defects(
    group: &CompactGroup,
    lpq: &[GroupElement],
    lp: &[GroupElement],
    lq: &[GroupElement],
) -> Vec<f64> {
    (0..lp.len())
        .map(|n| {
            group.dist_to_identity(&group.mul3(&lpq[n], &group.inv(&lq[n]), &group.inv(&lp[n])))
        })
        .collect()
}

struct Sweep {
    defects: Vec<f64>,
    /// `stability[n] = sup dist(phi_{n+1}, phi_1)`.
    stability: Vec<f64>,
}

fn sweep<M: GroupoidMap>(
    map: &IteratedMap<M>,
    pairs: &[(Arrow, Arrow)],
    levels: usize,
) -> Result<Sweep, AveragingError> {
    let groupoid = map.groupoid();
    let group = groupoid.group();
    let mut defects = alloc::vec![0.0f64; levels];
    let mut stability = alloc::vec![0.0f64; levels];
    for (p, q) in pairs {
        let pq = groupoid.compose(p, q)?;
        // q and pq share a source, so they reuse one orbit table.
        let eval = |a: &Arrow| match map.eval_levels(a, levels) {
            Ok(v) => Ok(Some(v)),
            Err(GroupoidError::OutOfChart { .. }) => Ok(None),
            Err(e) => Err(e),
        };
        let (lq, lpq, lp) = (eval(q)?, eval(&pq)?, eval(p)?);
        match (lq, lpq, lp) {
            (Some(lq), Some(lpq), Some(lp)) => {
                for (n, d) in level_defects(group, &lpq, &lp, &lq).into_iter().enumerate() {
                    defects[n] = defects[n].max(d);
                }
                for l in [&lq, &lpq, &lp] {
                    for n in 0..levels {
                        stability[n] = stability[n].max(group.dist(&l[n], &l[0]));
                    }
                }
            }
            _ => {
                defects
                    .iter_mut()
                    .skip(1)
                    .for_each(|d| *d = SATURATED_DISTANCE);
            }
        }
    }
    Ok(Sweep { defects, stability })
}

/// First level that reaches `tol`, or the level at which the defect has
/// risen twice in a row.
fn stopping_level(defects: &[f64], tol: f64) -> Option<(usize, ConvergenceStatus)> {
    let mut rises = 0;
    for n in 1..defects.len() {
        if defects[n] > defects[n - 1] {
            rises += 1;
        } else {
            rises = 0;
        }
        if defects[n] <= tol {
            return Some((n, ConvergenceStatus::Converged));
        }
        if rises >= 2 {
            return Some((n, ConvergenceStatus::Stalled));
        }
    }
    None
}

/// Runs `phi_{n+1} = average(phi_n)` over the finite subgroup `rule` until
/// the sampled defect drops to `settings.tol`, then validates on held-out
/// pairs. The returned map evaluates the final level.
pub fn iterate<M: GroupoidMap>(
    phi: M,
    rule: &HaarQuadrature,
    sampler: &ComposablePairSampler,
    settings: &IterationSettings,
) -> Result<(IteratedMap<M>, ConvergenceReport), AveragingError> {
    if !(settings.tol > 0.0) {
        return Err(AveragingError::RuleMismatch(
            "tolerance must be positive".into(),
        ));
    }
    let mut map = IteratedMap::new(phi, rule.clone(), 1)?;
    let groupoid = map.groupoid().clone();
    let training = sampler.pairs(&groupoid)?;
    let held = sampler.held_out().pairs(&groupoid)?;
    let rule_tag = alloc::format!("{}; {}", rule.exactness_class, sampler_tag(sampler));
    let limit = 0.25 * settings.c0;

    let first = sweep(&map, &training, 1)?;
    let delta1 = first.defects[0];
    let mut report = ConvergenceReport {
        defects: alloc::vec![delta1],
        ratios: Vec::new(),
        c0_estimate: None,
        iterations: 0,
        status: ConvergenceStatus::Converged,
        held_out_defect: None,
        stability: 0.0,
        stability_bound: settings.stability_constant * delta1,
        telescoping_error: 0.0,
        tol: settings.tol,
        training_pairs: training.len(),
        held_out_pairs: held.len(),
        rule_tag,
    };
    if delta1 > limit {
        return Err(AveragingError::DefectTooLarge {
            defect: delta1,
            limit,
        });
    }

    let (final_level, stability) = if delta1 <= settings.tol {
        (1, 0.0)
    } else {
        // Most runs finish in two steps; deeper levels are only built when needed.
        let top = settings.max_iter + 1;
        let mut schedule: Vec<usize> = [3, 5, top].into_iter().map(|l| l.min(top)).collect();
        schedule.dedup();
        let mut all = None;
        let mut stop = None;
        for levels in schedule {
            let s = sweep(&map, &training, levels)?;
            stop = stopping_level(&s.defects, settings.tol);
            all = Some(s);
            if stop.is_some() {
                break;
            }
        }
        let all = all.expect("schedule is never empty");
        let (n, status) = stop.unwrap_or((all.defects.len() - 1, ConvergenceStatus::Stalled));
        report.defects = all.defects[..=n].to_vec();
        report.status = status;
        (n + 1, all.stability[n])
    };
    report.iterations = final_level - 1;
    report.ratios = report
        .defects
        .windows(2)
        .map(|w| w[1] / (w[0] * w[0]))
        .collect();
    report.c0_estimate = report
        .defects
        .windows(2)
        .filter(|w| w[1] > ROUNDOFF_FLOOR)
        .map(|w| w[0] * w[0] / w[1])
        .reduce(f64::min);
    let held_sweep = sweep(&map, &held, final_level)?;
    report.held_out_defect = Some(held_sweep.defects[final_level - 1]);
    report.stability = stability.max(held_sweep.stability[final_level - 1]);
    report.telescoping_error = map.telescoping_error();
    map.set_level(final_level);
    if report.converged() {
        Ok((map, report))
    } else {
        Err(AveragingError::Stalled(Box::new(report)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{ActionGroupoid, ActionSpec, LinearRep, PerturbedMap, ProjectionMap};
    use crate::lie::{subgroup_rule, SubgroupSpec};

    fn su2() -> ActionGroupoid {
        ActionGroupoid::new(
            CompactGroup::su(2),
            ActionSpec::linear(LinearRep::Adjoint),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn homomorphism_converges_in_zero_steps() {
        let g = su2();
        let rule = subgroup_rule(g.group(), SubgroupSpec::BinaryTetrahedral, None).unwrap();
        let (_, report) = iterate(
            ProjectionMap::new(g),
            &rule,
            &ComposablePairSampler::random(1, 8),
            &IterationSettings::default(),
        )
        .unwrap();
        assert_eq!(report.iterations, 0);
        assert!(report.converged());
    }

    #[test]
    fn large_defect_is_refused() {
        let g = su2();
        let rule = subgroup_rule(g.group(), SubgroupSpec::BinaryTetrahedral, None).unwrap();
        let phi = PerturbedMap::seeded(g, 10.0, 1);
        let err = iterate(
            phi,
            &rule,
            &ComposablePairSampler::random(1, 8),
            &IterationSettings::default(),
        )
        .unwrap_err();
        assert!(
            matches!(err, AveragingError::DefectTooLarge { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn contraction_points_skip_roundoff() {
        let (xs, ys) = contraction_points(&[1e-2, 1e-4, 1e-8, 1e-16]);
        assert_eq!(xs, [1e-2, 1e-4]);
        assert_eq!(ys, [1e-4, 1e-8]);
    }
}
