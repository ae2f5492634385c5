use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::lie::{CompactGroup, GroupElement, GroupKind, HaarQuadrature, SubgroupTable};

use super::engine::{Elem, Engine};
use super::iterate::{ConvergenceReport, ConvergenceStatus, IterationSettings};
use super::AveragingError;

/// A map from the nodes of a finite subgroup `H` into a compact group.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMap {
    pub rule: HaarQuadrature,
    pub target: CompactGroup,
    /// `values[i]` is the image of `rule.nodes[i]`.
    pub values: Vec<GroupElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GkrOutcome {
    pub limit: NodeMap,
    pub report: ConvergenceReport,
}

impl NodeMap {
    pub fn from_fn(
        rule: &HaarQuadrature,
        target: &CompactGroup,
        f: impl Fn(&GroupElement) -> GroupElement,
    ) -> Result<Self, AveragingError> {
        if rule.subgroup.is_none() {
            return Err(AveragingError::RuleMismatch(
                "node maps need a rule whose nodes form a subgroup".into(),
            ));
        }
        let values = rule.nodes.iter().map(f).collect::<Vec<_>>();
        for v in &values {
            target.validate_element(v)?;
        }
        Ok(Self {
            rule: rule.clone(),
            target: target.clone(),
            values,
        })
    }

    fn table(&self) -> &SubgroupTable {
        self.rule
            .subgroup
            .as_ref()
            .expect("checked on construction")
    }

    /// `max dist(rho(h_i h_j) rho(h_j)^-1 rho(h_i)^-1, 1)` over all node pairs.
    pub fn defect(&self) -> f64 {
        let engine = Engine::new(&self.target);
        let lifted: Vec<Elem> = self.values.iter().map(|v| engine.lift(v)).collect();
        let inv: Vec<Elem> = lifted.iter().map(|e| engine.inv(e)).collect();
        defect_of(&engine, self.table(), &lifted, &inv)
    }

    /// Images are pairwise distinct and closed under multiplication, within `tol`.
    pub fn is_bijective_onto_image_subgroup(&self, tol: f64) -> bool {
        let g = &self.target;
        let n = self.values.len();
        for i in 0..n {
            for j in 0..i {
                if g.dist(&self.values[i], &self.values[j]) <= tol {
                    return false;
                }
            }
        }
        (0..n).all(|i| {
            (0..n).all(|j| {
                let p = g.mul(&self.values[i], &self.values[j]);
                self.values.iter().any(|v| g.dist(v, &p) <= tol)
            })
        })
    }

    pub fn max_distance(&self, other: &NodeMap) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| self.target.dist(a, b))
            .fold(0.0, f64::max)
    }
}

fn defect_of(engine: &Engine, table: &SubgroupTable, v: &[Elem], inv: &[Elem]) -> f64 {
    let n = v.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            let c = engine.mul(&engine.mul(&v[table.mul(i, k)], &inv[k]), &inv[i]);
            worst = worst.max(engine.dist_id(&c));
        }
    }
    worst
}

/// Averages a near-homomorphism from a finite subgroup of a compact group
/// into a compact group until it is a homomorphism on the nodes.
pub fn gkr_average(
    rho: &NodeMap,
    settings: &IterationSettings,
) -> Result<GkrOutcome, AveragingError> {
    let engine = Engine::new(&rho.target);
    let table = rho.table();
    let n = rho.values.len();
    let d = engine.dim();
    let mut cur: Vec<Elem> = rho.values.iter().map(|v| engine.lift(v)).collect();
    let mut inv: Vec<Elem> = cur.iter().map(|e| engine.inv(e)).collect();
    let first_inv = inv.clone();
    let id = engine.lift(&rho.target.identity());
    let mut running = vec![id; n];
    let delta1 = defect_of(&engine, table, &cur, &inv);
    let limit = 0.25 * settings.c0;
    if delta1 > limit {
        return Err(AveragingError::DefectTooLarge {
            defect: delta1,
            limit,
        });
    }
    let mut defects = vec![delta1];
    let mut telescoping: f64 = 0.0;
    let mut status = ConvergenceStatus::Stalled;
    let mut rises = 0;
    let mut terms = vec![0.0; n * d];
    if delta1 <= settings.tol {
        status = ConvergenceStatus::Converged;
    }
    while status != ConvergenceStatus::Converged && defects.len() <= settings.max_iter {
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            for k in 0..n {
                let c = engine.mul(&engine.mul(&cur[table.mul(i, k)], &inv[k]), &inv[i]);
                engine
                    .log_into(&c, &mut terms[k * d..(k + 1) * d])
                    .map_err(|distance| crate::groupoid::GroupoidError::OutOfChart { distance })?;
            }
            let (psi, value) = engine.average_update(&mut terms, &rho.rule.weights, &cur[i]);
            running[i] = engine.mul(&psi, &running[i]);
            telescoping =
                telescoping.max(engine.dist(&running[i], &engine.mul(&value, &first_inv[i])));
            next.push(value);
        }
        cur = next;
        inv = cur.iter().map(|e| engine.inv(e)).collect();
        let delta = defect_of(&engine, table, &cur, &inv);
        rises = if delta > *defects.last().expect("nonempty") {
            rises + 1
        } else {
            0
        };
        defects.push(delta);
        if delta <= settings.tol {
            status = ConvergenceStatus::Converged;
        } else if rises >= 2 {
            break;
        }
    }
    let limit_map = NodeMap {
        rule: rho.rule.clone(),
        target: rho.target.clone(),
        values: cur.iter().map(|e| engine.lower(e)).collect(),
    };
    let report = ConvergenceReport {
        ratios: defects.windows(2).map(|w| w[1] / (w[0] * w[0])).collect(),
        c0_estimate: defects
            .windows(2)
            .filter(|w| w[1] > 1e-13)
            .map(|w| w[0] * w[0] / w[1])
            .reduce(f64::min),
        iterations: defects.len() - 1,
        status,
        held_out_defect: None,
        stability: limit_map.max_distance(rho),
        stability_bound: settings.stability_constant * delta1,
        telescoping_error: telescoping,
        tol: settings.tol,
        training_pairs: n * n,
        held_out_pairs: 0,
        rule_tag: alloc::format!("{}; all node pairs", rho.rule.exactness_class),
        defects,
    };
    if report.converged() {
        Ok(GkrOutcome {
            limit: limit_map,
            report,
        })
    } else {
        Err(AveragingError::Stalled(Box::new(report)))
    }
}

/// Winding number of a map `torus(1) -> torus(1)` given on a grid subgroup:
/// the sum of wrapped increments of the image angle around the circle.
pub fn winding_number(map: &NodeMap) -> Option<i64> {
    if map.rule.group.kind != GroupKind::Torus(1) || map.target.kind != GroupKind::Torus(1) {
        return None;
    }
    let mut pts: Vec<(f64, f64)> = map
        .rule
        .nodes
        .iter()
        .zip(&map.values)
        .map(|(h, v)| {
            Some((
                {
                    let a = h.as_angles()?[0];
                    a - 2.0 * PI * Float::floor(a / (2.0 * PI))
                },
                v.as_angles()?[0],
            ))
        })
        .collect::<Option<_>>()?;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let wrap = |t: f64| t - 2.0 * PI * Float::round(t / (2.0 * PI));
    let total: f64 = (0..pts.len())
        .map(|i| wrap(pts[(i + 1) % pts.len()].1 - pts[i].1))
        .sum();
    Some(Float::round(total / (2.0 * PI)) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::BandLimitedField;
    use crate::lie::{subgroup_rule, SubgroupSpec};

    fn torus_map(rule: &HaarQuadrature, f: impl Fn(f64) -> f64) -> NodeMap {
        let t = CompactGroup::torus(1);
        NodeMap::from_fn(rule, &t, |h| {
            GroupElement::Torus([f(h.as_angles().unwrap()[0])].into_iter().collect())
        })
        .unwrap()
    }

    #[test]
    fn power_map_is_a_fixed_point() {
        let t = CompactGroup::torus(1);
        let rule = subgroup_rule(&t, SubgroupSpec::TorusGrid(12), None).unwrap();
        let rho = torus_map(&rule, |a| 3.0 * a);
        let out = gkr_average(&rho, &IterationSettings::default()).unwrap();
        assert_eq!(out.report.iterations, 0);
        assert!(out.limit.max_distance(&rho) < 1e-12);
        assert_eq!(winding_number(&rho), Some(3));
    }

    #[test]
    fn perturbed_doubling_recovers_winding_two() {
        let t = CompactGroup::torus(1);
        let rule = subgroup_rule(&t, SubgroupSpec::TorusGrid(16), None).unwrap();
        let rho = torus_map(&rule, |a| 2.0 * a + 0.02 * Float::sin(a));
        let out = gkr_average(&rho, &IterationSettings::default()).unwrap();
        assert_eq!(winding_number(&out.limit), Some(2));
        let exact = torus_map(&rule, |a| 2.0 * a);
        assert!(out.limit.max_distance(&exact) < 1e-12);
    }

    #[test]
    fn perturbed_identity_of_su2_becomes_an_automorphism() {
        let g = CompactGroup::su(2);
        let rule = subgroup_rule(&g, SubgroupSpec::BinaryOctahedral, Some(2)).unwrap();
        let field = BandLimitedField::seeded(&g, 1, 0.05, 9);
        let rho =
            NodeMap::from_fn(&rule, &g, |h| g.mul(h, &g.exp(&field.eval(h, &[1.0])))).unwrap();
        assert!(rho.defect() > 1e-4);
        let out = gkr_average(&rho, &IterationSettings::default()).unwrap();
        assert!(out.report.defects.last().unwrap() <= &1e-9);
        assert!(out.limit.is_bijective_onto_image_subgroup(1e-8));
        assert!(out.report.stability_passed());
        assert!(out.report.telescoping_error < 1e-10);
    }
}
