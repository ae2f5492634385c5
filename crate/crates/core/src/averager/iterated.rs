use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};

use crate::groupoid::{point_dist, ActionGroupoid, Arrow, GroupoidError, GroupoidMap, Point};
use crate::lie::{GroupElement, HaarQuadrature, SubgroupTable};
use crate::rng::stream_rng;

use super::engine::{Elem, Engine};
use super::AveragingError;

const CACHE_SLOTS: usize = 4;
const KERNEL_TOLERANCE: f64 = 1e-11;

/// `phi_n` for a fixed level `n`, where `phi_1` is the wrapped map and
/// `phi_{k+1}` is the average of `phi_k` over a finite subgroup `H`.
///
/// For a base point `z` the values `phi_k(h_a, h_j^-1 z)` with `h_a, h_j`
/// in `H` only ever need each other, so they are computed level by level
/// in an orbit table. An arbitrary arrow `(g, z)` then needs the chain
/// `phi_k(g h_i, h_i^-1 z)` on top of the table for `z`. Elements of `H`
/// that act trivially on the base are factored out of the table.
#[derive(Debug, Clone)]
pub struct IteratedMap<M> {
    inner: M,
    rule: HaarQuadrature,
    table: SubgroupTable,
    level: usize,
    engine: Engine,
    nodes: Vec<GroupElement>,
    node_inv: Vec<GroupElement>,
    class_of: Vec<u32>,
    reps: Vec<u32>,
    cache: RefCell<Vec<Rc<OrbitTable>>>,
    telescoping: Cell<f64>,
}

#[derive(Debug, Clone)]
struct OrbitTable {
    key: Vec<u64>,
    points: Vec<Point>,
    /// `values[k][a * classes + c] = phi_{k+1}(h_a, points[c])`.
    values: Vec<Vec<Elem>>,
    inverses: Vec<Vec<Elem>>,
    /// Product of the corrections applied so far at each entry.
    running: Vec<Elem>,
}

impl<M: GroupoidMap> IteratedMap<M> {
    pub fn new(inner: M, rule: HaarQuadrature, level: usize) -> Result<Self, AveragingError> {
        let groupoid = inner.groupoid();
        let group = groupoid.group();
        if &rule.group != group {
            return Err(AveragingError::RuleMismatch(
                "rule and groupoid use different groups".into(),
            ));
        }
        let table = rule.subgroup.clone().ok_or_else(|| {
            AveragingError::RuleMismatch(
                "iteration needs a rule whose nodes form a subgroup".into(),
            )
        })?;
        if level == 0 {
            return Err(AveragingError::RuleMismatch("levels start at 1".into()));
        }
        let n = rule.len();
        let engine = Engine::new(group);
        let node_inv: Vec<GroupElement> = rule.nodes.iter().map(|h| group.inv(h)).collect();

        // Kernel of the action restricted to H, detected on a few seeded points.
        let mut rng = stream_rng(0x6b65726e, 0);
        let probes: Vec<Point> = (0..4).map(|_| groupoid.sample_base(&mut rng)).collect();
        let kernel: Vec<usize> = (0..n)
            .filter(|&k| {
                probes
                    .iter()
                    .all(|x| point_dist(&groupoid.action(&rule.nodes[k], x), x) < KERNEL_TOLERANCE)
            })
            .collect();
        let mut class_of = vec![u32::MAX; n];
        let mut reps = Vec::new();
        for j in 0..n {
            if class_of[j] != u32::MAX {
                continue;
            }
            let c = reps.len() as u32;
            reps.push(j as u32);
            for &k in &kernel {
                class_of[table.mul(j, k)] = c;
            }
        }
        Ok(Self {
            inner,
            nodes: rule.nodes.clone(),
            rule,
            table,
            level,
            engine,
            node_inv,
            class_of,
            reps,
            cache: RefCell::new(Vec::new()),
            telescoping: Cell::new(0.0),
        })
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn rule(&self) -> &HaarQuadrature {
        &self.rule
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn set_level(&mut self, level: usize) {
        self.level = level.max(1);
    }

    /// Order of the subgroup of `H` acting trivially on the base.
    pub fn kernel_order(&self) -> usize {
        self.nodes.len() / self.reps.len()
    }

    /// Largest deviation seen so far between `Psi_n ... Psi_1` and
    /// `phi_{n+1} phi_1^-1`, over every table entry and chain.
    pub fn telescoping_error(&self) -> f64 {
        self.telescoping.get()
    }

    /// `[phi_1(p), ..., phi_levels(p)]`.
    pub fn eval_levels(
        &self,
        p: &Arrow,
        levels: usize,
    ) -> Result<Vec<GroupElement>, GroupoidError> {
        let groupoid = self.inner.groupoid();
        let group = groupoid.group();
        let first = self.inner.eval(p)?;
        if levels <= 1 {
            return Ok(vec![first]);
        }
        if self.inner.restricts_to_identity() && &p.x == groupoid.fixed_point() {
            // Every level restricts to the identity over the fixed point.
            return Ok(vec![p.g.clone(); levels]);
        }
        let t = self.table_for(&p.x, levels - 1)?;
        let n = self.nodes.len();
        let classes = self.reps.len();
        let d = self.engine.dim();
        let mut chain = Vec::with_capacity(n);
        for i in 0..n {
            let v = if i == 0 {
                first.clone()
            } else {
                let arrow = Arrow {
                    g: group.mul(&p.g, &self.nodes[i]),
                    x: t.points[self.class_of[i] as usize].clone(),
                };
                self.inner.eval(&arrow)?
            };
            chain.push(self.engine.lift(&v));
        }
        let first_inv = self.engine.inv(&chain[0]);
        let mut running = self.engine.lift(&group.identity());
        let mut out = Vec::with_capacity(levels);
        out.push(first);
        let mut terms = vec![0.0; n * d];
        let mut tele: f64 = 0.0;
        for level in 0..levels - 1 {
            let vinv = &t.inverses[level];
            let chain_inv: Vec<Elem> = chain.iter().map(|e| self.engine.inv(e)).collect();
            let mut next = Vec::with_capacity(n);
            // Only entry 0 is needed at the last level.
            let width = if level + 2 == levels { 1 } else { n };
            for i in 0..width {
                for k in 0..n {
                    let ik = self.table.mul(i, k);
                    let m = self.class_of[ik] as usize;
                    let e = self.engine.mul(
                        &self.engine.mul(&chain[ik], &vinv[k * classes + m]),
                        &chain_inv[i],
                    );
                    self.engine
                        .log_into(&e, &mut terms[k * d..(k + 1) * d])
                        .map_err(|distance| GroupoidError::OutOfChart { distance })?;
                }
                let (psi, value) =
                    self.engine
                        .average_update(&mut terms, &self.rule.weights, &chain[i]);
                if i == 0 {
                    running = self.engine.mul(&psi, &running);
                    tele = tele.max(
                        self.engine
                            .dist(&running, &self.engine.mul(&value, &first_inv)),
                    );
                    out.push(self.engine.lower(&value));
                }
                next.push(value);
            }
            chain = next;
        }
        self.note_telescoping(tele);
        Ok(out)
    }

    fn note_telescoping(&self, e: f64) {
        if e > self.telescoping.get() {
            self.telescoping.set(e);
        }
    }

    fn table_for(&self, z: &Point, levels: usize) -> Result<Rc<OrbitTable>, GroupoidError> {
        let key: Vec<u64> = z.iter().map(|v| v.to_bits()).collect();
        let hit = {
            let cache = self.cache.borrow();
            cache.iter().position(|t| t.key == key)
        };
        let mut table = match hit {
            Some(i) => {
                let t = self.cache.borrow_mut().remove(i);
                if t.values.len() >= levels {
                    self.cache.borrow_mut().insert(0, t.clone());
                    return Ok(t);
                }
                Rc::try_unwrap(t).unwrap_or_else(|rc| (*rc).clone())
            }
            None => self.first_level(z, key)?,
        };
        while table.values.len() < levels {
            self.advance(&mut table)?;
        }
        let t = Rc::new(table);
        let mut cache = self.cache.borrow_mut();
        cache.insert(0, t.clone());
        cache.truncate(CACHE_SLOTS);
        Ok(t)
    }

    fn first_level(&self, z: &Point, key: Vec<u64>) -> Result<OrbitTable, GroupoidError> {
        let groupoid = self.inner.groupoid();
        let points: Vec<Point> = self
            .reps
            .iter()
            .map(|&j| {
                if j == 0 {
                    z.clone()
                } else {
                    groupoid.action(&self.node_inv[j as usize], z)
                }
            })
            .collect();
        let mut values = Vec::with_capacity(self.nodes.len() * points.len());
        for h in &self.nodes {
            for y in &points {
                let v = self.inner.eval(&Arrow {
                    g: h.clone(),
                    x: y.clone(),
                })?;
                values.push(self.engine.lift(&v));
            }
        }
        let inverses = values.iter().map(|e| self.engine.inv(e)).collect();
        let id = self.engine.lift(&groupoid.group().identity());
        let running = vec![id; values.len()];
        Ok(OrbitTable {
            key,
            points,
            values: vec![values],
            inverses: vec![inverses],
            running,
        })
    }

    fn advance(&self, t: &mut OrbitTable) -> Result<(), GroupoidError> {
        let n = self.nodes.len();
        let classes = self.reps.len();
        let d = self.engine.dim();
        let cur = t.values.last().expect("table has a first level");
        let inv = t.inverses.last().expect("table has a first level");
        let first_inv = &t.inverses[0];
        let mut next = Vec::with_capacity(n * classes);
        let mut terms = vec![0.0; n * d];
        let mut tele: f64 = 0.0;
        for a in 0..n {
            for c in 0..classes {
                let j = self.reps[c] as usize;
                let idx = a * classes + c;
                for k in 0..n {
                    let m = self.class_of[self.table.mul(j, k)] as usize;
                    let ak = self.table.mul(a, k);
                    let e = self.engine.mul(
                        &self
                            .engine
                            .mul(&cur[ak * classes + m], &inv[k * classes + m]),
                        &inv[idx],
                    );
                    self.engine
                        .log_into(&e, &mut terms[k * d..(k + 1) * d])
                        .map_err(|distance| GroupoidError::OutOfChart { distance })?;
                }
                let (psi, value) =
                    self.engine
                        .average_update(&mut terms, &self.rule.weights, &cur[idx]);
                t.running[idx] = self.engine.mul(&psi, &t.running[idx]);
                tele = tele.max(
                    self.engine
                        .dist(&t.running[idx], &self.engine.mul(&value, &first_inv[idx])),
                );
                next.push(value);
            }
        }
        self.note_telescoping(tele);
        let next_inv = next.iter().map(|e| self.engine.inv(e)).collect();
        t.values.push(next);
        t.inverses.push(next_inv);
        Ok(())
    }
}

impl<M: GroupoidMap> GroupoidMap for IteratedMap<M> {
    fn groupoid(&self) -> &ActionGroupoid {
        self.inner.groupoid()
    }

    fn eval(&self, p: &Arrow) -> Result<GroupElement, GroupoidError> {
        let mut v = self.eval_levels(p, self.level)?;
        Ok(v.pop().expect("at least one level"))
    }

    fn restricts_to_identity(&self) -> bool {
        self.inner.restricts_to_identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averager::{average_step, pair_defect};
    use crate::groupoid::{ActionSpec, ComposablePairSampler, LinearRep, PerturbedMap};
    use crate::lie::{subgroup_rule, CompactGroup, SubgroupSpec};

    fn setup() -> (ActionGroupoid, HaarQuadrature) {
        let g = ActionGroupoid::new(
            CompactGroup::su(2),
            ActionSpec::linear(LinearRep::Adjoint),
            0.5,
        )
        .unwrap();
        let rule = subgroup_rule(g.group(), SubgroupSpec::BinaryTetrahedral, Some(4)).unwrap();
        (g, rule)
    }

    #[test]
    fn second_level_matches_the_lazy_step() {
        let (g, rule) = setup();
        let phi = PerturbedMap::seeded(g.clone(), 0.08, 3);
        let it = IteratedMap::new(&phi, rule.clone(), 2).unwrap();
        let lazy = average_step(&phi, &rule).unwrap();
        assert_eq!(it.kernel_order(), 2);
        let mut rng = stream_rng(8, 1);
        for _ in 0..10 {
            let p = Arrow {
                g: g.group().random_element(&mut rng),
                x: g.sample_base(&mut rng),
            };
            let a = it.eval(&p).unwrap();
            let b = lazy.eval(&p).unwrap();
            assert!(g.group().dist(&a, &b) < 1e-13, "{}", g.group().dist(&a, &b));
        }
    }

    #[test]
    fn third_level_matches_nested_lazy_steps() {
        let (g, rule) = setup();
        let phi = PerturbedMap::seeded(g.clone(), 0.08, 5);
        let it = IteratedMap::new(&phi, rule.clone(), 3).unwrap();
        let lazy = average_step(average_step(&phi, &rule).unwrap(), &rule).unwrap();
        let mut rng = stream_rng(9, 1);
        for _ in 0..3 {
            let p = Arrow {
                g: g.group().random_element(&mut rng),
                x: g.sample_base(&mut rng),
            };
            let levels = it.eval_levels(&p, 3).unwrap();
            assert!(g.group().dist(&levels[2], &lazy.eval(&p).unwrap()) < 1e-12);
            assert_eq!(levels[0], phi.eval(&p).unwrap());
        }
        assert!(it.telescoping_error() < 1e-12);
    }

    #[test]
    fn defect_shrinks_across_levels() {
        let (g, _) = setup();
        let rule = subgroup_rule(g.group(), SubgroupSpec::BinaryIcosahedral, Some(4)).unwrap();
        let phi = PerturbedMap::seeded(g.clone(), 0.05, 11);
        let it = IteratedMap::new(&phi, rule, 1).unwrap();
        let sampler = ComposablePairSampler::random(17, 3);
        let pairs = sampler.pairs(&g).unwrap();
        let mut worst = vec![0.0f64; 3];
        for (p, q) in &pairs {
            let pq = g.compose(p, q).unwrap();
            let lp = it.eval_levels(p, 3).unwrap();
            let lq = it.eval_levels(q, 3).unwrap();
            let lpq = it.eval_levels(&pq, 3).unwrap();
            for n in 0..3 {
                let c = g
                    .group()
                    .mul3(&lpq[n], &g.group().inv(&lq[n]), &g.group().inv(&lp[n]));
                worst[n] = worst[n].max(g.group().dist_to_identity(&c));
            }
            assert!(pair_defect(&phi, p, q).unwrap() <= worst[0] + 1e-15);
        }
        assert!(worst[1] < 0.1 * worst[0], "{worst:?}");
        assert!(worst[2] < 0.1 * worst[1], "{worst:?}");
    }

    #[test]
    fn requires_a_subgroup_rule() {
        let (g, _) = setup();
        let rule = crate::lie::haar_nodes(g.group(), 3, 0).unwrap();
        assert!(IteratedMap::new(PerturbedMap::seeded(g, 0.05, 1), rule, 2).is_err());
    }
}
