//! Time integration of the scaled Boltzmann equation
//! `∂t F + v·∇x F = Q(F, F)/ε`, fluctuation extraction, the first Hilbert
//! corrector and remainder diagnostics.

mod distribution;
mod hilbert;
mod stepper;

pub use distribution::Distribution;
pub use hilbert::{
    bgk_corrector, compatibility_residual, extract_fluctuation, first_corrector, hilbert_f1, local_equilibrium,
    remainder_diagnostics, streaming_residual, HilbertCorrector, RemainderDiagnostics, COMPAT_TOL,
};
pub use stepper::{run_kinetic, step_kinetic, KineticRun, RunLog};

use serde::{Deserialize, Serialize};

use crate::collision::{KernelConfig, RateModel};
use crate::error::{Error, Result};

/// Collision model used by the kinetic solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Quadrature of the full operator; explicit RK2, small velocity grids only.
    FullQ,
    /// Moment-matched relaxation, integrated exactly.
    #[default]
    Bgk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Velocity weight exponent of the sup-norm diagnostic.
    pub beta: f64,
    pub backend: Backend,
    pub rate: RateModel,
    pub kernel: KernelConfig,
    /// Explicit collision steps satisfy `dt ≤ c_stab · ε / max ν`.
    pub c_stab: f64,
    /// Nominal step `dt_factor · ε / max ν` for runs.
    pub dt_factor: f64,
    pub max_dt: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            delta: 0.1,
            beta: 3.5,
            backend: Backend::Bgk,
            rate: RateModel::default(),
            kernel: KernelConfig::default(),
            c_stab: 0.5,
            dt_factor: 0.5,
            max_dt: 1e-2,
        }
    }
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("ε must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("δ must be positive, got {}", self.delta)));
        }
        for (name, x) in [("c_stab", self.c_stab), ("dt_factor", self.dt_factor), ("max_dt", self.max_dt)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        self.rate.validate()?;
        self.kernel.validate()
    }

    /// `ε/δ`, small in the acoustic regime.
    pub fn regime_ratio(&self) -> f64 {
        self.epsilon / self.delta
    }
}
