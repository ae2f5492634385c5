//! Scenario files. Each subcommand reads one JSON object; omitted fields
//! take the defaults below, unknown fields are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use groupoid_lab_core::affine::{AffineComplex, ConvexitySettings};
use groupoid_lab_core::averager::IterationSettings;
use groupoid_lab_core::groupoid::{ActionSpec, ComposablePairSampler, LinearRep, Twist};
use groupoid_lab_core::lie::{GroupKind, SubgroupSpec, DEFAULT_METRIC_SCALE};
use groupoid_lab_core::momentum::{ActionSettings, CylinderSettings};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, LabError};

/// A subcommand's scenario.
pub trait Scenario: Serialize + DeserializeOwned + Default + Clone {
    const COMMAND: &'static str;

    /// Every seed the run uses, by role.
    fn seeds(&self) -> BTreeMap<String, u64>;

    /// Applies `--seed`; scenarios without randomness ignore it.
    fn set_seed(&mut self, seed: u64);
}

/// Reads a scenario from `path`, or the default scenario without one.
pub fn load<C: Scenario>(path: Option<&Path>) -> Result<C, LabError> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| LabError::Read {
        path: path.into(),
        source,
    })?;
    parse(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

pub fn parse<C: Scenario>(text: &str) -> Result<C, LabError> {
    serde_json::from_str(text).map_err(config_err)
}

fn seeds<const N: usize>(pairs: [(&str, u64); N]) -> BTreeMap<String, u64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    pub subgroup: SubgroupSpec,
    /// Seed of the random conjugation of the subgroup; none keeps it standard.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AverageConfig {
    /// Seed of the perturbation field.
    pub seed: u64,
    pub group: GroupKind,
    pub metric_scale: f64,
    pub action: ActionSpec,
    pub radius: f64,
    /// Zero runs the exact homomorphism `(g, x) -> g`.
    pub amplitude: f64,
    /// Base-monomial degree of the perturbation field.
    pub degree: usize,
    pub rule: RuleConfig,
    pub sampler: ComposablePairSampler,
    pub iteration: IterationSettings,
}

impl Default for AverageConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            group: GroupKind::SpecialUnitary(2),
            metric_scale: DEFAULT_METRIC_SCALE,
            action: ActionSpec::linear(LinearRep::Adjoint),
            radius: 0.5,
            amplitude: 0.05,
            degree: 2,
            rule: RuleConfig {
                subgroup: SubgroupSpec::BinaryIcosahedral,
                seed: Some(7),
            },
            sampler: ComposablePairSampler::random(3, 16),
            iteration: IterationSettings::default(),
        }
    }
}

impl Scenario for AverageConfig {
    const COMMAND: &'static str = "average";
    fn seeds(&self) -> BTreeMap<String, u64> {
        let mut s = seeds([("perturbation", self.seed), ("sampler", self.sampler.seed)]);
        if let Some(r) = self.rule.seed {
            s.insert("rule".into(), r);
        }
        s
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

impl AverageConfig {
    /// SO(3) on `R^3` through the twisted defining representation.
    pub fn twisted_so3() -> Self {
        Self {
            seed: 1,
            group: GroupKind::SpecialOrthogonal(3),
            action: ActionSpec {
                linear: LinearRep::Standard,
                twist: Some(Twist {
                    plane: [0, 1],
                    strength: 0.6,
                    direction: vec![0.0, 0.0, 1.0],
                }),
            },
            degree: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum GkrScenario {
    /// `h -> h exp(amplitude * field(h))` on a finite subgroup of SU(2).
    Su2Identity {
        amplitude: f64,
        subgroup: SubgroupSpec,
        rule_seed: Option<u64>,
    },
    /// `theta -> winding * theta + amplitude * sin(theta)` on a grid of the circle.
    TorusPower {
        winding: i64,
        grid: usize,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GkrConfig {
    /// Seed of the SU(2) perturbation field.
    pub seed: u64,
    pub scenario: GkrScenario,
    pub iteration: IterationSettings,
}

impl Default for GkrConfig {
    fn default() -> Self {
        Self {
            seed: 9,
            scenario: GkrScenario::Su2Identity {
                amplitude: 0.05,
                subgroup: SubgroupSpec::BinaryOctahedral,
                rule_seed: Some(2),
            },
            iteration: IterationSettings::default(),
        }
    }
}

impl Scenario for GkrConfig {
    const COMMAND: &'static str = "gkr";
    fn seeds(&self) -> BTreeMap<String, u64> {
        match &self.scenario {
            GkrScenario::Su2Identity { rule_seed, .. } => {
                let mut s = seeds([("perturbation", self.seed)]);
                if let Some(r) = rule_seed {
                    s.insert("rule".into(), *r);
                }
                s
            }
            GkrScenario::TorusPower { .. } => BTreeMap::new(),
        }
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SystemConfig {
    ComplexProjective { n: usize },
    Sphere,
    Product { factors: Vec<SystemConfig> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentumConfig {
    pub seed: u64,
    pub system: SystemConfig,
    pub samples: usize,
    pub resolution: f64,
    /// Largest accepted Hausdorff distance to the known polytope.
    pub hausdorff_tolerance: f64,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            system: SystemConfig::ComplexProjective { n: 2 },
            samples: 10_000,
            resolution: 0.02,
            hausdorff_tolerance: 0.02,
        }
    }
}

impl Scenario for MomentumConfig {
    const COMMAND: &'static str = "momentum";
    fn seeds(&self) -> BTreeMap<String, u64> {
        seeds([("samples", self.seed)])
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianConfig {
    /// `(p^2 + q^2) / 2`.
    Oscillator,
    /// `(p^2 + q^4) / 2`.
    QuarticWell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderConfig {
    pub a0: f64,
    pub a1: f64,
    #[serde(default)]
    pub wobble: f64,
    #[serde(default)]
    pub settings: CylinderSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionConfig {
    pub hamiltonian: HamiltonianConfig,
    pub energies: Vec<f64>,
    pub settings: ActionSettings,
    /// Also integrates `omega` over a cylinder of orbits on `T^* T^1`.
    pub cylinder: Option<CylinderConfig>,
}

impl Default for ActionConfig {
    fn default() -> Self {
        Self {
            hamiltonian: HamiltonianConfig::Oscillator,
            energies: vec![0.1, 0.5, 1.0],
            settings: ActionSettings::default(),
            cylinder: None,
        }
    }
}

impl Scenario for ActionConfig {
    const COMMAND: &'static str = "action";
    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::new()
    }
    fn set_seed(&mut self, _seed: u64) {}
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiConfig {
    pub seed: u64,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub samples: usize,
    pub scale: f64,
    pub window: Vec<(f64, f64)>,
    pub resolution: f64,
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            lambda: vec![1.0, 2.0],
            gamma: vec![1.0, 3.0],
            samples: 100_000,
            scale: 1.0,
            window: vec![(2.5, 4.5), (5.5, 8.5)],
            resolution: 0.05,
        }
    }
}

impl Scenario for PhiConfig {
    const COMMAND: &'static str = "phi-set";
    fn seeds(&self) -> BTreeMap<String, u64> {
        seeds([("samples", self.seed)])
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexSource {
    /// A complex of the built-in corpus, by name.
    Corpus(String),
    Inline(AffineComplex),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineConfig {
    pub complex: ComplexSource,
    pub settings: ConvexitySettings,
}

impl Default for AffineConfig {
    fn default() -> Self {
        Self {
            complex: ComplexSource::Corpus("l-shape".into()),
            settings: ConvexitySettings::default(),
        }
    }
}

impl Scenario for AffineConfig {
    const COMMAND: &'static str = "affine-check";
    fn seeds(&self) -> BTreeMap<String, u64> {
        seeds([("star", self.settings.star.seed)])
    }
    fn set_seed(&mut self, seed: u64) {
        self.settings.star.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip<C: Scenario + PartialEq + std::fmt::Debug>() {
        let c = C::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(parse::<C>(&text).unwrap(), c);
        assert_eq!(parse::<C>("{}").unwrap(), c);
    }

    #[test]
    fn defaults_round_trip() {
        round_trip::<AverageConfig>();
        round_trip::<GkrConfig>();
        round_trip::<MomentumConfig>();
        round_trip::<ActionConfig>();
        round_trip::<PhiConfig>();
        round_trip::<AffineConfig>();
    }

    #[test]
    fn partial_files_keep_other_defaults() {
        let c: AverageConfig = parse(r#"{"amplitude": 0.1, "iteration": {"tol": 1e-8}}"#).unwrap();
        assert_eq!(c.amplitude, 0.1);
        assert_eq!(c.iteration.tol, 1e-8);
        assert_eq!(c.iteration.max_iter, 6);
        assert_eq!(c.radius, 0.5);
    }

    #[test]
    fn unknown_fields_are_config_errors() {
        let e = parse::<PhiConfig>(r#"{"lamda": [1.0]}"#).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn missing_file_is_a_config_error() {
        let e = load::<ActionConfig>(Some(Path::new("/nonexistent/scenario.json"))).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }
}
