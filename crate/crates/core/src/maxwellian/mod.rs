//! Local and global Maxwellians, the acoustic limit profile, and the
//! Taylor-jet machinery that compares a perturbed local Maxwellian with its
//! first-order expansion.

mod bounds;
mod jet;

pub use bounds::{check_bounds, BoundsViolation, MaxwellBounds};
pub use jet::{expansion_defect, expansion_defect_field, mu_z_jet, MaxwellianJet};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, VelocityGrid};
use crate::kinetic::Distribution;

/// Fluid fields `(ρ, u, T)` on a spatial grid; `u` always has three components.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub rho: Vec<f64>,
    pub u: [Vec<f64>; 3],
    pub temp: Vec<f64>,
}

impl FluidState {
    pub fn constant(len: usize, rho: f64, u: [f64; 3], temp: f64) -> Self {
        Self { rho: vec![rho; len], u: u.map(|c| vec![c; len]), temp: vec![temp; len] }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn at(&self, ix: usize) -> (f64, [f64; 3], f64) {
        (self.rho[ix], [self.u[0][ix], self.u[1][ix], self.u[2][ix]], self.temp[ix])
    }

    pub fn check_shape(&self, len: usize) -> Result<()> {
        let ok = self.rho.len() == len && self.temp.len() == len && self.u.iter().all(|c| c.len() == len);
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("fluid state does not match a grid of {len} nodes")))
        }
    }

    /// Checks `ρ > 0` and `T > 0` at every node.
    pub fn validate(&self) -> Result<()> {
        self.check_shape(self.rho.len())?;
        for ix in 0..self.len() {
            let (rho, u, t) = self.at(ix);
            if !(rho > 0.0) || !(t > 0.0) || !rho.is_finite() || !t.is_finite() || u.iter().any(|c| !c.is_finite()) {
                return Err(Error::Domain(format!("non-admissible fluid state at node {ix}: ρ = {rho}, T = {t}")));
            }
        }
        Ok(())
    }

    pub fn min_temperature(&self) -> f64 {
        self.temp.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_temperature(&self) -> f64 {
        self.temp.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Flattened component list `[ρ, u1, u2, u3, T]`.
    pub fn components(&self) -> [&[f64]; 5] {
        [&self.rho, &self.u[0], &self.u[1], &self.u[2], &self.temp]
    }
}

/// Acoustic fluctuation fields `(σ, u, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticState {
    pub sigma: Vec<f64>,
    pub u: [Vec<f64>; 3],
    pub theta: Vec<f64>,
}

impl AcousticState {
    pub fn zeros(len: usize) -> Self {
        Self { sigma: vec![0.0; len], u: [vec![0.0; len], vec![0.0; len], vec![0.0; len]], theta: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn check_shape(&self, len: usize) -> Result<()> {
        let ok = self.sigma.len() == len && self.theta.len() == len && self.u.iter().all(|c| c.len() == len);
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("acoustic state does not match a grid of {len} nodes")))
        }
    }

    pub fn components(&self) -> [&[f64]; 5] {
        [&self.sigma, &self.u[0], &self.u[1], &self.u[2], &self.theta]
    }

    /// Single-mode smooth data `σ = θ = a cos x₁`, `u = (b sin x₁, 0, 0)`.
    pub fn single_mode(grid: &SpatialGrid, a: f64, b: f64) -> Self {
        let k = 2.0 * PI / grid.period();
        let sigma = grid.sample(|x| a * (k * x[0]).cos());
        let u1 = grid.sample(|x| b * (k * x[0]).sin());
        Self { theta: sigma.clone(), sigma, u: [u1, vec![0.0; grid.len()], vec![0.0; grid.len()]] }
    }

    /// Euler data `ρ = 1 + δσ`, `u = δu`, `T = 1 + δθ`.
    pub fn perturbed_fluid(&self, delta: f64) -> FluidState {
        FluidState {
            rho: self.sigma.iter().map(|s| 1.0 + delta * s).collect(),
            u: [0, 1, 2].map(|d| self.u[d].iter().map(|c| delta * c).collect()),
            temp: self.theta.iter().map(|s| 1.0 + delta * s).collect(),
        }
    }
}

/// Second-order difference fields `(σ_d, u_d, θ_d)` between an Euler
/// solution and its acoustic linearization.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceState {
    pub sigma_d: Vec<f64>,
    pub u_d: [Vec<f64>; 3],
    pub theta_d: Vec<f64>,
}

impl DifferenceState {
    pub fn zeros(len: usize) -> Self {
        Self { sigma_d: vec![0.0; len], u_d: [vec![0.0; len], vec![0.0; len], vec![0.0; len]], theta_d: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.sigma_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_d.is_empty()
    }

    pub fn components(&self) -> [&[f64]; 5] {
        [&self.sigma_d, &self.u_d[0], &self.u_d[1], &self.u_d[2], &self.theta_d]
    }

    /// Reassembles `ρ = 1 + δσ + δ²σ_d`, `u = δu + δ²u_d`, `T = 1 + δθ + δ²θ_d`.
    pub fn reassemble(&self, acoustic: &AcousticState, delta: f64) -> FluidState {
        let d2 = delta * delta;
        let n = self.len();
        FluidState {
            rho: (0..n).map(|i| 1.0 + delta * acoustic.sigma[i] + d2 * self.sigma_d[i]).collect(),
            u: [0, 1, 2].map(|d| (0..n).map(|i| delta * acoustic.u[d][i] + d2 * self.u_d[d][i]).collect()),
            temp: (0..n).map(|i| 1.0 + delta * acoustic.theta[i] + d2 * self.theta_d[i]).collect(),
        }
    }
}

/// Maxwellian `ρ (2πT)^{-3/2} exp(-|v-u|²/(2T))` at every velocity node.
///
/// The Gaussian factorizes over the three axes, so only `3n` exponentials are
/// evaluated per call.
pub fn maxwellian_slice(rho: f64, u: [f64; 3], temp: f64, vgrid: &VelocityGrid) -> Vec<f64> {
    let nodes = vgrid.nodes_1d();
    let n = nodes.len();
    let norm = rho / (2.0 * PI * temp).powf(1.5);
    let factors: Vec<Vec<f64>> =
        (0..3).map(|d| nodes.iter().map(|&x| (-(x - u[d]) * (x - u[d]) / (2.0 * temp)).exp()).collect()).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        let a = norm * factors[0][i];
        for j in 0..n {
            let b = a * factors[1][j];
            for k in 0..n {
                out.push(b * factors[2][k]);
            }
        }
    }
    out
}

/// Global Maxwellian `μ⁰` with `ρ = T = 1`, `u = 0`.
pub fn global_maxwellian(vgrid: &VelocityGrid) -> Vec<f64> {
    maxwellian_slice(1.0, [0.0; 3], 1.0, vgrid)
}

/// Comparison Maxwellian `μ_M` of temperature `t_m`.
pub fn comparison_maxwellian(t_m: f64, vgrid: &VelocityGrid) -> Vec<f64> {
    maxwellian_slice(1.0, [0.0; 3], t_m, vgrid)
}

/// Local Maxwellian of a fluid state on the full phase-space grid.
pub fn maxwellian(state: &FluidState, space: &SpatialGrid, vgrid: &VelocityGrid) -> Result<Distribution> {
    state.check_shape(space.len())?;
    state.validate()?;
    let mut out = Distribution::zeros(space, vgrid);
    for ix in 0..space.len() {
        let (rho, u, t) = state.at(ix);
        out.set_slice(ix, &maxwellian_slice(rho, u, t, vgrid));
    }
    Ok(out)
}

/// Discrete `(mass, momentum, energy)` of a velocity profile, with energy `½Σ|v|² f`.
pub fn velocity_moments(profile: &[f64], vgrid: &VelocityGrid) -> (f64, [f64; 3], f64) {
    let w = vgrid.weight();
    let (mut m, mut p, mut e) = (0.0, [0.0; 3], 0.0);
    for (iv, f) in profile.iter().enumerate() {
        let v = vgrid.node(iv);
        m += f;
        for d in 0..3 {
            p[d] += v[d] * f;
        }
        e += 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * f;
    }
    (m * w, p.map(|c| c * w), e * w)
}

/// Acoustic limit profile `G = {σ + v·u + ((|v|²-3)/2) θ} μ⁰`.
pub fn limit_profile_g(state: &AcousticState, space: &SpatialGrid, vgrid: &VelocityGrid) -> Result<Distribution> {
    state.check_shape(space.len())?;
    let mu0 = global_maxwellian(vgrid);
    Ok(Distribution::from_fn(space, vgrid, |ix, iv| {
        let v = vgrid.node(iv);
        let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let poly = state.sigma[ix]
            + v[0] * state.u[0][ix]
            + v[1] * state.u[1][ix]
            + v[2] * state.u[2][ix]
            + 0.5 * (v2 - 3.0) * state.theta[ix];
        poly * mu0[iv]
    }))
}
