//! Acoustic and compressible Euler solvers, and the second-order difference
//! fields that measure how far an Euler solution strays from its acoustic
//! linearization.

mod acoustic;
mod euler;
mod symmetrizer;

pub use acoustic::{acoustic_energy, solve_acoustic, SOUND_SPEED_SQ};
pub use euler::{euler_time_derivative, solve_euler, EulerRunConfig, EulerTrajectory, Scheme};
pub use symmetrizer::{check_symmetrizer, flux_matrix, symmetrizer_a0, SymmetrizerReport};

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, Spectral};
use crate::maxwellian::{AcousticState, DifferenceState, FluidState};

/// `σ_d = (ρ - 1 - δσ)/δ²`, `u_d = (u - δu_a)/δ²`, `θ_d = (T - 1 - δθ)/δ²`.
pub fn difference_fields(euler: &FluidState, acoustic: &AcousticState, delta: f64) -> Result<DifferenceState> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::Validation(format!("difference fields need a nonzero finite δ, got {delta}")));
    }
    let n = euler.len();
    euler.check_shape(n)?;
    acoustic.check_shape(n)?;
    let inv = 1.0 / (delta * delta);
    Ok(DifferenceState {
        sigma_d: (0..n).map(|i| (euler.rho[i] - 1.0 - delta * acoustic.sigma[i]) * inv).collect(),
        u_d: [0, 1, 2].map(|d| (0..n).map(|i| (euler.u[d][i] - delta * acoustic.u[d][i]) * inv).collect()),
        theta_d: (0..n).map(|i| (euler.temp[i] - 1.0 - delta * acoustic.theta[i]) * inv).collect(),
    })
}

/// `‖(ρ - 1 - δσ, u - δu_a, T - 1 - δθ)‖_{H^s}`, summed in square over the five components.
pub fn linearization_defect(
    euler: &FluidState,
    acoustic: &AcousticState,
    delta: f64,
    grid: &SpatialGrid,
    s: u32,
) -> Result<f64> {
    let d = difference_fields(euler, acoustic, delta)?;
    Ok(delta * delta * difference_norm(&d, grid, s)?)
}

/// `‖(σ_d, u_d, θ_d)‖_{H^s}`.
pub fn difference_norm(diff: &DifferenceState, grid: &SpatialGrid, s: u32) -> Result<f64> {
    if diff.len() != grid.len() {
        return Err(Error::Shape(format!("difference state has {} nodes, grid has {}", diff.len(), grid.len())));
    }
    if s > 3 {
        return Err(Error::Validation(format!("Sobolev order {s} unsupported; s must be in 0..=3")));
    }
    let sp = Spectral::new(grid);
    Ok(diff.components().iter().map(|c| sp.hs_norm_sq(c, s)).sum::<f64>().sqrt())
}
