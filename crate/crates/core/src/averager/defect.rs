use alloc::string::String;
use alloc::vec::Vec;

use crate::groupoid::{
    ActionGroupoid, Arrow, ComposablePairSampler, GroupoidError, GroupoidMap, SamplingStrategy,
};
use crate::lie::{GroupElement, SATURATED_DISTANCE};

use super::AveragingError;

/// Sampled sup of the multiplicativity defect.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub sampled_sup: f64,
    pub argmax: Option<(Arrow, Arrow)>,
    pub sample_count: usize,
    pub rule_tag: String,
}

/// `phi(pq) phi(q)^-1 phi(p)^-1`.
pub fn cocycle<M: GroupoidMap + ?Sized>(
    phi: &M,
    p: &Arrow,
    q: &Arrow,
) -> Result<GroupElement, GroupoidError> {
    let g = phi.groupoid();
    let pq = g.compose(p, q)?;
    let group = g.group();
    let a = phi.eval(&pq)?;
    let b = phi.eval(q)?;
    let c = phi.eval(p)?;
    Ok(group.mul3(&a, &group.inv(&b), &group.inv(&c)))
}

/// `dist(cocycle(p, q), 1)`, saturated when a value leaves the chart.
pub fn pair_defect<M: GroupoidMap + ?Sized>(
    phi: &M,
    p: &Arrow,
    q: &Arrow,
) -> Result<f64, GroupoidError> {
    match cocycle(phi, p, q) {
        Ok(c) => Ok(phi.groupoid().group().dist_to_identity(&c)),
        Err(GroupoidError::OutOfChart { .. }) => Ok(SATURATED_DISTANCE),
        Err(e) => Err(e),
    }
}

/// Largest pair defect over the pairs the sampler emits.
pub fn defect<M: GroupoidMap + ?Sized>(
    phi: &M,
    sampler: &ComposablePairSampler,
) -> Result<DefectReport, AveragingError> {
    let pairs = sampler.pairs(phi.groupoid())?;
    defect_on_pairs(phi, &pairs, sampler_tag(sampler))
}

pub fn defect_on_pairs<M: GroupoidMap + ?Sized>(
    phi: &M,
    pairs: &[(Arrow, Arrow)],
    rule_tag: String,
) -> Result<DefectReport, AveragingError> {
    let mut best = 0.0;
    let mut argmax = None;
    for (p, q) in pairs {
        let d = pair_defect(phi, p, q)?;
        if d > best || argmax.is_none() {
            best = d;
            argmax = Some((p.clone(), q.clone()));
        }
    }
    Ok(DefectReport {
        sampled_sup: best,
        argmax,
        sample_count: pairs.len(),
        rule_tag,
    })
}

pub(crate) fn sampler_tag(s: &ComposablePairSampler) -> String {
    match &s.strategy {
        SamplingStrategy::Random => alloc::format!("random pairs N={}, seed {}", s.count, s.seed),
        SamplingStrategy::LowDiscrepancy => alloc::format!("Halton pairs N={}, seed {}", s.count, s.seed),
        SamplingStrategy::Grid { group_resolution, base_resolution } => alloc::format!(
            "grid pairs, group resolution {group_resolution}, base resolution {base_resolution}, seed {}",
            s.seed
        ),
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (num_traits::Float::ln(*x), num_traits::Float::ln(*y)))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Exhaustive pairs `((g, k.x), (k, x))` over all `k, g` in `nodes` and `x` in `points`.
pub fn all_pairs(
    groupoid: &ActionGroupoid,
    nodes: &[GroupElement],
    points: &[crate::groupoid::Point],
) -> Vec<(Arrow, Arrow)> {
    let mut out = Vec::with_capacity(nodes.len() * nodes.len() * points.len());
    for x in points {
        for k in nodes {
            let q = Arrow {
                g: k.clone(),
                x: x.clone(),
            };
            let tq = groupoid.target(&q);
            for g in nodes {
                out.push((
                    Arrow {
                        g: g.clone(),
                        x: tq.clone(),
                    },
                    q.clone(),
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [0.1, 0.05, 0.02, 0.01];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
