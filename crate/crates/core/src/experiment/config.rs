use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{
    make_mixture, make_point_mass, make_power_law, power_law_i0_for_cap, WeightDistribution,
    WeightSequence,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Generate,
    Percolate,
    Lln,
    Scan,
    Trajectory,
    Sandwich,
    Kernel,
    Theory,
}

/// How the initial infected set is drawn: each vertex independently with
/// probability `p`, or with `p = n^{a-1}` so that about `n^a` vertices start infected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seeding {
    Probability { p: f64 },
    Exponent { a: f64 },
}

impl Seeding {
    pub fn probability(&self, n: usize) -> f64 {
        match *self {
            Seeding::Probability { p } => p,
            Seeding::Exponent { a } => (n as f64).powf(a - 1.0).min(1.0),
        }
    }
}

/// Finite-`n` construction for power-law models: `w_i = x0 (n / (i + i0))^{1/(beta-1)}`.
/// `i0` comes from `zeta` (largest weight `n^zeta`) when given, else from `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub offset: Option<f64>,
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretisationSpec {
    pub gamma: f64,
    pub ell: usize,
}

impl Default for DiscretisationSpec {
    fn default() -> Self {
        DiscretisationSpec {
            gamma: 0.05,
            ell: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    /// Seed-count exponents `a` with `n^a` expected seeds.
    pub exponents: Vec<f64>,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            exponents: vec![0.2, 0.25, 0.3, 1.0 / 3.0, 0.4, 0.45, 0.5, 0.55, 0.6],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSpec {
    /// Kernel is every vertex with weight at least this value.
    pub cutoff: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { cutoff: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySpec {
    /// Record every `stride`-th exposure step.
    pub stride: usize,
    /// RK4 step of the fluid limit.
    pub h: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec {
            stride: 100,
            h: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub fixed_point: f64,
    /// Largest accepted gap between the mean simulated fraction and the prediction.
    pub lln_gap: f64,
    /// Largest accepted `|A_f| / |A_0|` below the threshold.
    pub subcritical_ratio: f64,
    /// Largest accepted gap to the prediction above the threshold.
    pub supercritical_gap: f64,
    pub trajectory_deviation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            fixed_point: 1e-12,
            lln_gap: 0.01,
            subcritical_ratio: 1.1,
            supercritical_gap: 0.05,
            trajectory_deviation: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: WeightDistribution,
    pub sequence: SequenceSpec,
    pub n: usize,
    pub r: u32,
    pub seeding: Seeding,
    pub replicates: usize,
    pub seed: u64,
    pub discretisation: DiscretisationSpec,
    pub scan: ScanSpec,
    pub kernel: KernelSpec,
    pub trajectory: TrajectorySpec,
    pub tolerances: Tolerances,
    /// Output directory; nothing is written when absent.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Lln,
            model: WeightDistribution::PointMass { d: 10.0 },
            sequence: SequenceSpec::default(),
            n: 10_000,
            r: 2,
            seeding: Seeding::Probability { p: 0.2 },
            replicates: 20,
            seed: 1,
            discretisation: DiscretisationSpec::default(),
            scan: ScanSpec::default(),
            kernel: KernelSpec::default(),
            trajectory: TrajectorySpec::default(),
            tolerances: Tolerances::default(),
            out: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(config_err(format!("r must be at least 2, got {}", self.r)));
        }
        if self.n == 0 {
            return Err(config_err("n must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(config_err("replicates must be at least 1"));
        }
        match self.seeding {
            Seeding::Probability { p } if !(0.0..=1.0).contains(&p) => {
                return Err(config_err(format!("p must lie in [0, 1], got {p}")));
            }
            Seeding::Exponent { a } if !(0.0..=1.0).contains(&a) => {
                return Err(config_err(format!(
                    "seed exponent must lie in [0, 1], got {a}"
                )));
            }
            _ => {}
        }
        // Rebuild the law through its checked constructors.
        match &self.model {
            WeightDistribution::PointMass { d } => WeightDistribution::point_mass(*d),
            WeightDistribution::Mixture { values, probs } => {
                WeightDistribution::mixture(values.clone(), probs.clone())
            }
            WeightDistribution::PowerLaw {
                beta,
                x0,
                cap: None,
            } => WeightDistribution::power_law(*beta, *x0),
            WeightDistribution::PowerLaw {
                beta,
                x0,
                cap: Some(c),
            } => WeightDistribution::truncated_power_law(*beta, *x0, *c),
        }
        .map_err(|e| config_err(e.to_string()))?;
        if let Some(z) = self.sequence.zeta {
            if !(z > 0.0 && z <= 1.0) {
                return Err(config_err(format!("zeta must lie in (0, 1], got {z}")));
            }
        }
        if self.sequence.offset.is_some_and(|o| !(o >= 0.0)) {
            return Err(config_err("sequence offset must be nonnegative"));
        }
        let d = &self.discretisation;
        if !(d.gamma > 0.0 && d.gamma < 1.0) || d.ell == 0 {
            return Err(config_err(format!(
                "discretisation needs 0 < gamma < 1 and ell >= 1, got {d:?}"
            )));
        }
        if self.scan.exponents.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(config_err("scan exponents must lie in [0, 1]"));
        }
        if !(self.kernel.cutoff > 0.0) {
            return Err(config_err("kernel cutoff must be positive"));
        }
        if self.trajectory.stride == 0 || !(self.trajectory.h > 0.0) {
            return Err(config_err("trajectory needs stride >= 1 and h > 0"));
        }
        let t = &self.tolerances;
        if [
            t.fixed_point,
            t.lln_gap,
            t.subcritical_ratio,
            t.supercritical_gap,
            t.trajectory_deviation,
        ]
        .iter()
        .any(|x| !(*x > 0.0))
        {
            return Err(config_err("tolerances must be positive"));
        }
        Ok(())
    }

    pub fn p(&self) -> f64 {
        self.seeding.probability(self.n)
    }

    /// Power-law offset `i0` used for the finite sequence.
    pub fn power_law_offset(&self) -> f64 {
        match (&self.model, self.sequence) {
            (WeightDistribution::PowerLaw { beta, x0, .. }, SequenceSpec { zeta: Some(z), .. }) => {
                power_law_i0_for_cap(self.n, *x0, *beta, z)
            }
            (_, SequenceSpec { offset, .. }) => offset.unwrap_or(0.0),
        }
    }

    /// Exponent of the largest weight, `zeta`; `1/(beta-1)` for an uncapped sequence.
    pub fn zeta(&self) -> Option<f64> {
        match &self.model {
            WeightDistribution::PowerLaw { beta, .. } => {
                Some(self.sequence.zeta.unwrap_or(1.0 / (beta - 1.0)))
            }
            _ => None,
        }
    }

    /// Weight sequence of length `n` for the model.
    pub fn weight_sequence(&self) -> Result<WeightSequence> {
        match &self.model {
            WeightDistribution::PointMass { d } => make_point_mass(*d, self.n),
            WeightDistribution::Mixture { values, probs } => make_mixture(values, probs, self.n),
            WeightDistribution::PowerLaw { beta, x0, cap } => {
                let ws = make_power_law(self.n, *x0, *beta, self.power_law_offset())?;
                match cap {
                    Some(c) => {
                        WeightSequence::new(ws.weights().iter().map(|w| w.min(*c)).collect())
                    }
                    None => Ok(ws),
                }
            }
        }
    }
}
