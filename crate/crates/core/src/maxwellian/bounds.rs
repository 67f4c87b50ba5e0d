use std::f64::consts::PI;
use std::fmt;

use super::{comparison_maxwellian, maxwellian_slice, FluidState};
use crate::error::Error;
use crate::grid::VelocityGrid;

/// Comparison constants between local Maxwellians and `μ_M`.
///
/// `c1` and `c2` are witnessed on the velocity grid; the `_continuum` values
/// are the exact infimum and supremum over all of `R³` and bracket them.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxwellBounds {
    pub t_m: f64,
    pub alpha: f64,
    /// Upper end of the admissible exponent interval `(1/2, alpha_max)`.
    pub alpha_max: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1_continuum: f64,
    pub c2_continuum: f64,
}

/// The moderate temperature condition `T_M < T < 2 T_M` failed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsViolation {
    pub state_index: usize,
    pub node: usize,
    pub temperature: f64,
    pub t_m: f64,
    pub reason: &'static str,
}

impl fmt::Display for BoundsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "state {} node {}: T = {} with T_M = {} ({})",
            self.state_index, self.node, self.temperature, self.t_m, self.reason
        )
    }
}

impl std::error::Error for BoundsViolation {}

impl From<BoundsViolation> for Error {
    fn from(v: BoundsViolation) -> Self {
        Error::Validation(v.to_string())
    }
}

/// Checks `T_M < min T ≤ max T < 2 T_M` over every state and node, then picks
/// the exponent `α` and measures `c1 μ_M ≤ μ ≤ c2 μ_M^α`.
///
/// `μ/μ_M^α` stays bounded in `v` exactly when `α < T_M/T` everywhere, so the
/// admissible exponents form `(1/2, min(1, T_M / max T))`. The exponent
/// reported sits a tenth of the way into that interval.
pub fn check_bounds(states: &[&FluidState], t_m: f64, vgrid: &VelocityGrid) -> Result<MaxwellBounds, BoundsViolation> {
    let mut t_max = f64::NEG_INFINITY;
    for (si, st) in states.iter().enumerate() {
        for (ix, &t) in st.temp.iter().enumerate() {
            if !(t > t_m) {
                return Err(BoundsViolation { state_index: si, node: ix, temperature: t, t_m, reason: "T <= T_M" });
            }
            if !(t < 2.0 * t_m) {
                return Err(BoundsViolation { state_index: si, node: ix, temperature: t, t_m, reason: "T >= 2 T_M" });
            }
            t_max = t_max.max(t);
        }
    }
    let alpha_max = (t_m / t_max).min(1.0);
    let alpha = 0.5 + 0.1 * (alpha_max - 0.5);

    let mu_m = comparison_maxwellian(t_m, vgrid);
    let mu_m_alpha: Vec<f64> = mu_m.iter().map(|m| m.powf(alpha)).collect();
    let (mut c1, mut c2) = (f64::INFINITY, 0.0_f64);
    let (mut c1c, mut c2c) = (f64::INFINITY, 0.0_f64);
    for st in states {
        for ix in 0..st.len() {
            let (rho, u, t) = st.at(ix);
            let mu = maxwellian_slice(rho, u, t, vgrid);
            for iv in 0..vgrid.len() {
                c1 = c1.min(mu[iv] / mu_m[iv]);
                c2 = c2.max(mu[iv] / mu_m_alpha[iv]);
            }
            let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            // inf over v of μ/μ_M: the exponent is convex with curvature 1/T_M - 1/T.
            let b = 1.0 / t_m - 1.0 / t;
            let lo = rho * (t_m / t).powf(1.5) * (-u2 / (2.0 * b * t * t) - u2 / (2.0 * t)).exp();
            // sup over v of μ/μ_M^α: concave exponent with curvature 1/T - α/T_M.
            let a = 1.0 / t - alpha / t_m;
            let hi = rho * (2.0 * PI * t).powf(-1.5) * (2.0 * PI * t_m).powf(1.5 * alpha)
                * (u2 / (2.0 * t * t * a) - u2 / (2.0 * t)).exp();
            c1c = c1c.min(lo);
            c2c = c2c.max(hi);
        }
    }
    Ok(MaxwellBounds { t_m, alpha, alpha_max, c1, c2, c1_continuum: c1c, c2_continuum: c2c })
}
