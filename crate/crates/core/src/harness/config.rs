use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields3d::FieldModel3D;
use crate::integrate::IntegratorSettings;
use crate::spacetime::FaradayModel;
use crate::sympl::SymplecticSetup;
use crate::systems::{Dynamics, PauliParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    ClassicalPauli,
    RelativisticPauli,
    SymplecticLorentz,
}

/// Particle constants; `ε` comes from the run grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(rename = "M", default = "one")]
    pub big_m: f64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        ParticleConfig {
            m: 1.0,
            q: 1.0,
            big_m: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Sweep metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Max normal distance to the order-N truncated slow manifold.
    NormalDistance,
    /// Max |μ₂(t) − μ₂(0)|.
    Mu2Drift,
    /// Sup slow-coordinate error against the reduced reference dynamics:
    /// guiding-center equations (classical) or `ż = −εJ∇H` (symplectic).
    SlowError,
    /// Oracle gap to the order-0 closed form at the initial slow point.
    OracleGapOrder0,
    /// Oracle gap to the order-1 closed form at the initial slow point.
    OracleGapOrder1,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::NormalDistance => "normal_distance",
            Metric::Mu2Drift => "mu2_drift",
            Metric::SlowError => "slow_error",
            Metric::OracleGapOrder0 => "oracle_gap_order0",
            Metric::OracleGapOrder1 => "oracle_gap_order1",
        }
    }

    pub fn needs_trajectory(&self) -> bool {
        matches!(self, Metric::NormalDistance | Metric::Mu2Drift | Metric::SlowError)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldModel3D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faraday: Option<FaradayModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<SymplecticSetup>,
    #[serde(default)]
    pub particle: ParticleConfig,
    /// Initial slow coordinates: classical `[x, y, z, u]`, relativistic
    /// `[t, x, y, z, V³]` (`V⁰` from the mass shell), symplectic `z`.
    pub slow: Vec<f64>,
    /// Added to the fast coordinates after slow-manifold initialization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fast_offset: Option<Vec<f64>>,
    #[serde(default = "default_order")]
    pub order: usize,
    /// Single `ε` for `simulate` and `compare-gc` (defaults to the first grid entry).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_grid")]
    pub epsilons: Vec<f64>,
    /// `t_end = ε^(−k)`.
    #[serde(default = "default_horizon")]
    pub horizon_exponent: u32,
    /// Horizon in fast periods at the initial state; overrides `ε^(−k)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<f64>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub metrics: Option<Vec<Metric>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Seeded sample points per structure check.
    #[serde(default = "default_points")]
    pub check_points: usize,
}

fn default_order() -> usize {
    1
}

fn default_horizon() -> u32 {
    1
}

fn default_grid() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

fn default_seed() -> u64 {
    20_240_917
}

fn default_points() -> usize {
    50
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.order > 1 {
            return bad(format!("order must be 0 or 1, got {}", self.order));
        }
        if self.horizon_exponent > 2 {
            return bad(format!("horizon_exponent must be 0, 1 or 2, got {}", self.horizon_exponent));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return bad("epsilons must be a non-empty list of positive numbers".into());
        }
        if let Some(n) = self.periods {
            if !(n > 0.0) || !n.is_finite() {
                return bad(format!("periods must be positive, got {n}"));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        let p = self.particle;
        if !(p.m > 0.0) || p.q == 0.0 || !p.big_m.is_finite() {
            return bad("particle needs m > 0, q != 0 and finite M".into());
        }
        let (slow_len, fast_len) = match self.system {
            SystemKind::ClassicalPauli => {
                if self.field.is_none() {
                    return bad("classical-pauli needs a `field` model".into());
                }
                (4, 2)
            }
            SystemKind::RelativisticPauli => {
                if self.faraday.is_none() {
                    return bad("relativistic-pauli needs a `faraday` model".into());
                }
                (5, 2)
            }
            SystemKind::SymplecticLorentz => match &self.setup {
                None => return bad("symplectic-lorentz needs a `setup`".into()),
                Some(s) => {
                    if s.dof == 0 {
                        return bad("setup.dof must be at least 1".into());
                    }
                    (s.dim(), s.dim())
                }
            },
        };
        if self.slow.len() != slow_len {
            return bad(format!("`slow` must have {slow_len} entries for this system, got {}", self.slow.len()));
        }
        if let Some(off) = &self.fast_offset {
            if off.len() != fast_len {
                return bad(format!("`fast_offset` must have {fast_len} entries, got {}", off.len()));
            }
        }
        if self.system == SystemKind::RelativisticPauli && self.metrics().contains(&Metric::SlowError) {
            return bad("slow_error has no reference dynamics for relativistic-pauli".into());
        }
        Ok(())
    }

    pub fn sweep_requirements(&self) -> Result<()> {
        if self.epsilons.len() < 3 {
            return Err(Error::Config(format!("a sweep needs at least 3 epsilons, got {}", self.epsilons.len())));
        }
        Ok(())
    }

    pub fn single_epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(self.epsilons[0])
    }

    pub fn metrics(&self) -> Vec<Metric> {
        match &self.metrics {
            Some(m) => m.clone(),
            None => {
                let mut m = vec![Metric::NormalDistance, Metric::Mu2Drift];
                if self.system != SystemKind::RelativisticPauli {
                    m.push(Metric::SlowError);
                }
                m
            }
        }
    }

    pub fn params(&self, epsilon: f64) -> PauliParams {
        PauliParams {
            m: self.particle.m,
            q: self.particle.q,
            big_m: self.particle.big_m,
            epsilon,
        }
    }

    pub fn dynamics(&self, epsilon: f64) -> Dynamics {
        let params = self.params(epsilon);
        match self.system {
            SystemKind::ClassicalPauli => Dynamics::ClassicalPauli {
                model: self.field.expect("validated"),
                params,
            },
            SystemKind::RelativisticPauli => Dynamics::RelativisticPauli {
                model: self.faraday.expect("validated"),
                params,
            },
            SystemKind::SymplecticLorentz => Dynamics::SymplecticLorentz {
                setup: self.setup.clone().expect("validated"),
                params,
            },
        }
    }

    /// Horizon for a run whose initial fast frequency is `fast_frequency`.
    pub fn t_end(&self, epsilon: f64, fast_frequency: f64) -> f64 {
        match self.periods {
            Some(n) => n * 2.0 * std::f64::consts::PI / fast_frequency,
            None => epsilon.powi(-(self.horizon_exponent as i32)),
        }
    }

    pub fn model_label(&self) -> String {
        let value = match self.system {
            SystemKind::ClassicalPauli => serde_json::to_value(self.field),
            SystemKind::RelativisticPauli => serde_json::to_value(self.faraday),
            SystemKind::SymplecticLorentz => serde_json::to_value(&self.setup),
        };
        value.map(|v| v.to_string()).unwrap_or_default()
    }
}
