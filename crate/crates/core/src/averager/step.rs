use alloc::vec::Vec;

use crate::groupoid::{ActionGroupoid, Arrow, GroupoidError, GroupoidMap};
use crate::lie::{AlgebraVector, GroupElement, HaarQuadrature, LieError};

use super::AveragingError;

/// The three written forms of the averaged map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AveragingForm {
    /// `exp(int log(phi(pq) phi(q)^-1 phi(p)^-1) dq) phi(p)` over `q in t^-1(s(p))`.
    Left,
    /// `exp(int log(phi(r) phi(p^-1 r)^-1 phi(p)^-1) dr) phi(p)` over `r in t^-1(t(p))`.
    ChangeOfVariable,
    /// `phi(p) exp(int log(phi(p)^-1 phi(pq) phi(q)^-1) dq)`.
    AdCommuted,
}

/// `phi-hat`, evaluated lazily at any arrow with the given Haar rule.
#[derive(Debug, Clone)]
pub struct AveragedMap<M> {
    inner: M,
    rule: HaarQuadrature,
    form: AveragingForm,
}

/// One averaging step.
pub fn average_step<M: GroupoidMap>(
    phi: M,
    rule: &HaarQuadrature,
) -> Result<AveragedMap<M>, AveragingError> {
    AveragedMap::new(phi, rule.clone(), AveragingForm::Left)
}

impl<M: GroupoidMap> AveragedMap<M> {
    pub fn new(
        inner: M,
        rule: HaarQuadrature,
        form: AveragingForm,
    ) -> Result<Self, AveragingError> {
        if &rule.group != inner.groupoid().group() {
            return Err(AveragingError::RuleMismatch(
                "rule and groupoid use different groups".into(),
            ));
        }
        Ok(Self { inner, rule, form })
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn rule(&self) -> &HaarQuadrature {
        &self.rule
    }

    pub fn form(&self) -> AveragingForm {
        self.form
    }

    /// `Psi(p) = phi-hat(p) phi(p)^-1`.
    pub fn correction(&self, p: &Arrow) -> Result<GroupElement, GroupoidError> {
        let group = self.inner.groupoid().group();
        Ok(group.mul(&self.eval(p)?, &group.inv(&self.inner.eval(p)?)))
    }

    fn weighted_log_mean(&self, terms: Vec<GroupElement>) -> Result<AlgebraVector, GroupoidError> {
        let group = self.inner.groupoid().group();
        let logs = terms
            .iter()
            .zip(&self.rule.weights)
            .map(|(t, w)| group.log(t).map(|v| v.scale(*w)))
            .collect::<Result<Vec<_>, LieError>>()
            .map_err(|e| match e {
                LieError::CutLocus { distance } => GroupoidError::OutOfChart { distance },
                other => GroupoidError::Lie(other),
            })?;
        Ok(pairwise_algebra_sum(&logs).unwrap_or_else(|| group.zero_algebra()))
    }
}

pub(crate) fn pairwise_algebra_sum(v: &[AlgebraVector]) -> Option<AlgebraVector> {
    match v.len() {
        0 => None,
        1 => Some(v[0].clone()),
        n => {
            let (a, b) = v.split_at(n / 2);
            Some(pairwise_algebra_sum(a)?.add(&pairwise_algebra_sum(b)?))
        }
    }
}

impl<M: GroupoidMap> GroupoidMap for AveragedMap<M> {
    fn groupoid(&self) -> &ActionGroupoid {
        self.inner.groupoid()
    }

    fn eval(&self, p: &Arrow) -> Result<GroupElement, GroupoidError> {
        let g = self.inner.groupoid();
        let group = g.group();
        if self.inner.restricts_to_identity() && &p.x == g.fixed_point() {
            // Every integrand is exactly (gh) h^-1 g^-1 = 1 over the fixed point.
            return Ok(p.g.clone());
        }
        let phi_p = self.inner.eval(p)?;
        let phi_p_inv = group.inv(&phi_p);
        match self.form {
            AveragingForm::Left | AveragingForm::AdCommuted => {
                let mut terms = Vec::with_capacity(self.rule.len());
                for h in &self.rule.nodes {
                    let q = g.fiber_arrow(h, &p.x);
                    let pq = Arrow {
                        g: group.mul(&p.g, h),
                        x: q.x.clone(),
                    };
                    let a = self.inner.eval(&pq)?;
                    let b = group.inv(&self.inner.eval(&q)?);
                    terms.push(match self.form {
                        AveragingForm::Left => group.mul3(&a, &b, &phi_p_inv),
                        _ => group.mul3(&phi_p_inv, &a, &b),
                    });
                }
                let mean = self.weighted_log_mean(terms)?;
                Ok(match self.form {
                    AveragingForm::Left => group.mul(&group.exp(&mean), &phi_p),
                    _ => group.mul(&phi_p, &group.exp(&mean)),
                })
            }
            AveragingForm::ChangeOfVariable => {
                let tp = g.target(p);
                let p_inv = g.inverse(p);
                let mut terms = Vec::with_capacity(self.rule.len());
                for h in &self.rule.nodes {
                    let r = g.fiber_arrow(h, &tp);
                    let pr = Arrow {
                        g: group.mul(&p_inv.g, &r.g),
                        x: r.x.clone(),
                    };
                    let a = self.inner.eval(&r)?;
                    let b = group.inv(&self.inner.eval(&pr)?);
                    terms.push(group.mul3(&a, &b, &phi_p_inv));
                }
                let mean = self.weighted_log_mean(terms)?;
                Ok(group.mul(&group.exp(&mean), &phi_p))
            }
        }
    }

    fn restricts_to_identity(&self) -> bool {
        self.inner.restricts_to_identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averager::defect;
    use crate::groupoid::{
        ActionSpec, ComposablePairSampler, LinearRep, PerturbedMap, ProjectionMap,
    };
    use crate::lie::{haar_nodes, subgroup_rule, CompactGroup, SubgroupSpec};
    use crate::rng::stream_rng;

    fn su2() -> ActionGroupoid {
        ActionGroupoid::new(
            CompactGroup::su(2),
            ActionSpec::linear(LinearRep::Adjoint),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn exact_homomorphism_is_unchanged() {
        let g = su2();
        let rule = subgroup_rule(g.group(), SubgroupSpec::BinaryTetrahedral, None).unwrap();
        let hat = average_step(ProjectionMap::new(g.clone()), &rule).unwrap();
        let mut rng = stream_rng(41, 0);
        for _ in 0..20 {
            let p = Arrow {
                g: g.group().random_element(&mut rng),
                x: g.sample_base(&mut rng),
            };
            assert!(g.group().dist(&hat.eval(&p).unwrap(), &p.g) < 1e-12);
        }
    }

    #[test]
    fn identity_restriction_is_exact() {
        let g = su2();
        let rule = subgroup_rule(g.group(), SubgroupSpec::BinaryOctahedral, None).unwrap();
        let hat = average_step(PerturbedMap::seeded(g.clone(), 0.1, 1), &rule).unwrap();
        for h in &rule.nodes {
            let p = Arrow {
                g: h.clone(),
                x: g.fixed_point().clone(),
            };
            assert_eq!(&hat.eval(&p).unwrap(), h);
        }
    }

    #[test]
    fn three_forms_agree_within_quadrature_error() {
        let g = su2();
        let phi = PerturbedMap::seeded(g.clone(), 0.1, 2);
        let rule = subgroup_rule(g.group(), SubgroupSpec::BinaryIcosahedral, Some(3)).unwrap();
        let maps: Vec<_> = [
            AveragingForm::Left,
            AveragingForm::ChangeOfVariable,
            AveragingForm::AdCommuted,
        ]
        .into_iter()
        .map(|f| AveragedMap::new(&phi, rule.clone(), f).unwrap())
        .collect();
        let mut rng = stream_rng(42, 0);
        let mut worst_cov: f64 = 0.0;
        for _ in 0..20 {
            let p = Arrow {
                g: g.group().random_element(&mut rng),
                x: g.sample_base(&mut rng),
            };
            let v: Vec<_> = maps.iter().map(|m| m.eval(&p).unwrap()).collect();
            assert!(g.group().dist(&v[0], &v[2]) < 1e-13);
            worst_cov = worst_cov.max(g.group().dist(&v[0], &v[1]));
        }
        // The change of variable is exact only for translations in the rule;
        // the residual is second order in the perturbation.
        assert!(worst_cov < 1e-3, "{worst_cov}");
        let h = &rule.nodes[5];
        let x = g.sample_base(&mut rng);
        let p = Arrow {
            g: h.clone(),
            x: g.action(&g.group().inv(h), &x),
        };
        let a = maps[0].eval(&p).unwrap();
        let b = maps[1].eval(&p).unwrap();
        assert!(g.group().dist(&a, &b) < 1e-12);
    }

    #[test]
    fn torus_one_step_is_a_homomorphism() {
        let g = ActionGroupoid::new(
            CompactGroup::torus(1),
            ActionSpec::linear(LinearRep::TorusCharges(vec![vec![1]])),
            0.8,
        )
        .unwrap();
        let phi = PerturbedMap::seeded(g.clone(), 0.2, 7);
        let rule = haar_nodes(g.group(), 8, 0).unwrap();
        let sampler = ComposablePairSampler::random(5, 200);
        let before = defect(&phi, &sampler).unwrap().sampled_sup;
        let after = defect(&average_step(&phi, &rule).unwrap(), &sampler)
            .unwrap()
            .sampled_sup;
        assert!(before > 1e-3);
        assert!(after < 1e-13, "{after}");
    }

    #[test]
    fn rejects_foreign_rules() {
        let g = su2();
        let rule = haar_nodes(&CompactGroup::torus(1), 4, 0).unwrap();
        assert!(matches!(
            average_step(ProjectionMap::new(g), &rule),
            Err(AveragingError::RuleMismatch(_))
        ));
    }
}
