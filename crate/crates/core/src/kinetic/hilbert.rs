use super::{Backend, Distribution, ScalingConfig};
use crate::collision::{HydroProjector, KernelConfig, LinearizedOperator, MomentMatcher, RateModel, DiscreteMaxwellian};
use crate::error::{Error, Result};
use crate::fluid::euler_time_derivative;
use crate::grid::{min_weight_exponent, SpatialGrid, Spectral, VelocityGrid};
use crate::maxwellian::{comparison_maxwellian, global_maxwellian, maxwellian, maxwellian_slice, FluidState};

/// Largest `‖P r‖/‖r‖` accepted from a fluid state that claims to solve Euler.
pub const COMPAT_TOL: f64 = 5e-3;

/// `G^ε = (F - μ⁰)/δ`.
pub fn extract_fluctuation(f: &Distribution, delta: f64) -> Result<Distribution> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::Validation(format!("fluctuation amplitude must be nonzero and finite, got {delta}")));
    }
    let mu0 = global_maxwellian(f.velocity());
    let nx = f.space().len();
    let values = f.values().iter().enumerate().map(|(k, x)| (x - mu0[k / nx]) / delta).collect();
    Ok(Distribution::from_values(f.space(), f.velocity(), values)?.with_time(f.time()))
}

/// `r = μ^{-1/2} (∂t + v·∇x) μ` for the local Maxwellian of `fluid`, with
/// `∂t` taken from `rates` and spatial derivatives computed spectrally.
pub fn streaming_residual(
    fluid: &FluidState,
    rates: &FluidState,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
) -> Result<Distribution> {
    fluid.check_shape(space.len())?;
    rates.check_shape(space.len())?;
    fluid.validate()?;
    let sp = Spectral::new(space);
    let dim = space.dim();
    // grads[a] holds ∂_a of (ρ, u, T) as a FluidState
    let grads: Vec<FluidState> = (0..dim)
        .map(|a| FluidState {
            rho: sp.derivative(&fluid.rho, a),
            u: [0, 1, 2].map(|d| sp.derivative(&fluid.u[d], a)),
            temp: sp.derivative(&fluid.temp, a),
        })
        .collect();
    let nx = space.len();
    let mut out = Distribution::zeros(space, vgrid);
    for ix in 0..nx {
        let (rho, u, temp) = fluid.at(ix);
        let mu = maxwellian_slice(rho, u, temp, vgrid);
        let log_rate = |d: &FluidState, c: [f64; 3], c2: f64| {
            let (r1, u1, t1) = d.at(ix);
            r1 / rho + (c[0] * u1[0] + c[1] * u1[1] + c[2] * u1[2]) / temp + (c2 / (2.0 * temp * temp) - 1.5 / temp) * t1
        };
        for (iv, m) in mu.iter().enumerate() {
            let v = vgrid.node(iv);
            let c = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
            let c2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
            let mut s = log_rate(rates, c, c2);
            for (a, g) in grads.iter().enumerate() {
                s += v[a] * log_rate(g, c, c2);
            }
            out.values_mut()[iv * nx + ix] = m.sqrt() * s;
        }
    }
    Ok(out)
}

/// `‖P r‖₂ / ‖r‖₂` summed over all spatial nodes, with `P` built from each
/// node's local Maxwellian.
pub fn compatibility_residual(
    fluid: &FluidState,
    rates: &FluidState,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
) -> Result<f64> {
    let r = streaming_residual(fluid, rates, space, vgrid)?;
    let (mut num, mut den) = (0.0, 0.0);
    for ix in 0..space.len() {
        let (rho, u, temp) = fluid.at(ix);
        let proj = HydroProjector::new(&maxwellian_slice(rho, u, temp, vgrid), vgrid)?;
        let line = r.slice_at(ix);
        num += proj.apply(&line).iter().map(|x| x * x).sum::<f64>();
        den += line.iter().map(|x| x * x).sum::<f64>();
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

/// First Hilbert corrector at one spatial node.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertCorrector {
    /// `F₁` on the velocity grid, zero outside the collision ball.
    pub f1: Vec<f64>,
    /// `‖P r‖/‖r‖` at this node.
    pub compat_residual: f64,
    /// `‖L g₁ + (I-P) r‖/‖r‖` on the ball, with `g₁ = F₁/√μ`.
    pub inversion_residual: f64,
    /// Whether `compat_residual ≤ COMPAT_TOL`.
    pub consistent: bool,
}

/// `F₁ = -√μ L⁺ r` at node `ix` with `P(F₁/√μ) = 0`.
///
/// `rates` are the time derivatives of `fluid`; pass the Euler right-hand side
/// to test solvability, or anything else to see it fail.
pub fn hilbert_f1(
    fluid: &FluidState,
    rates: &FluidState,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
    ix: usize,
    cfg: &KernelConfig,
) -> Result<HilbertCorrector> {
    if ix >= space.len() {
        return Err(Error::Shape(format!("node {ix} outside a grid of {} nodes", space.len())));
    }
    let r_all = streaming_residual(fluid, rates, space, vgrid)?;
    let r = r_all.slice_at(ix);
    let (rho, u, temp) = fluid.at(ix);
    let mu = maxwellian_slice(rho, u, temp, vgrid);
    let compat_residual = {
        let pr = HydroProjector::new(&mu, vgrid)?.apply(&r);
        let n2 = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let den = n2(&r);
        if den == 0.0 {
            0.0
        } else {
            n2(&pr) / den
        }
    };

    let op = LinearizedOperator::assemble(&mu, vgrid, cfg)?;
    let pinv = op.pseudo_inverse()?;
    let active = op.active_nodes();
    let nodes: Vec<[f64; 3]> = active.iter().map(|&i| vgrid.node(i)).collect();
    let sqrt_mu: Vec<f64> = op.restrict(&mu).iter().map(|m| m.sqrt()).collect();
    let proj = HydroProjector::from_nodes(&sqrt_mu, &nodes, vgrid.weight())?;

    let mut g1 = op.restrict(&pinv.apply(&r)?);
    g1.iter_mut().for_each(|x| *x = -*x);
    let pg = proj.apply(&g1);
    g1.iter_mut().zip(&pg).for_each(|(x, p)| *x -= p);
    let g1_full = op.extend(&g1);

    let r_act = op.restrict(&r);
    let pr_act = proj.apply(&r_act);
    let lg = op.restrict(&op.apply(&g1_full)?);
    let res: f64 = lg.iter().zip(r_act.iter().zip(&pr_act)).map(|(l, (a, p))| (l + a - p).powi(2)).sum();
    let den: f64 = r_act.iter().map(|x| x * x).sum();
    let inversion_residual = if den == 0.0 { res.sqrt() } else { (res / den).sqrt() };

    let f1 = g1_full.iter().zip(&mu).map(|(g, m)| g * m.sqrt()).collect();
    Ok(HilbertCorrector { f1, compat_residual, inversion_residual, consistent: compat_residual <= COMPAT_TOL })
}

/// First corrector of the BGK model, `F₁ = -(√μ/ν)(I-P) r`, at every node.
pub fn bgk_corrector(
    fluid: &FluidState,
    rates: &FluidState,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
    rate: &RateModel,
) -> Result<Distribution> {
    rate.validate()?;
    let r = streaming_residual(fluid, rates, space, vgrid)?;
    let mut out = Distribution::zeros(space, vgrid);
    for ix in 0..space.len() {
        let (rho, u, temp) = fluid.at(ix);
        let mu = maxwellian_slice(rho, u, temp, vgrid);
        let nu = rate.rate(&DiscreteMaxwellian::from_fluid(rho, u, temp), vgrid);
        let line = r.slice_at(ix);
        let pr = HydroProjector::new(&mu, vgrid)?.apply(&line);
        let f1: Vec<f64> = line.iter().zip(&pr).zip(&mu).map(|((a, p), m)| -(a - p) * m.sqrt() / nu).collect();
        out.set_slice(ix, &f1);
    }
    Ok(out)
}

/// First corrector for the configured backend, with `∂t` from the Euler system.
///
/// The full collision backend assembles a dense `L` per spatial node.
pub fn first_corrector(
    fluid: &FluidState,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
    scaling: &ScalingConfig,
) -> Result<Distribution> {
    let rates = euler_time_derivative(fluid, space)?;
    match scaling.backend {
        Backend::Bgk => bgk_corrector(fluid, &rates, space, vgrid, &scaling.rate),
        Backend::FullQ => {
            let mut out = Distribution::zeros(space, vgrid);
            for ix in 0..space.len() {
                let h = hilbert_f1(fluid, &rates, space, vgrid, ix, &scaling.kernel)?;
                out.set_slice(ix, &h.f1);
            }
            Ok(out)
        }
    }
}

/// Remainder norms of a kinetic state against its fluid expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderDiagnostics {
    /// `‖μ^{-1/2} D‖₂` with `D = F - μ` (order 0) or `F - μ - εF₁` (order 1).
    pub f_l2: f64,
    /// `ε^{3/2} sup (1+|v|²)^β |D| / √μ_M`.
    pub h_winf: f64,
}

/// Compares `f` with the expansion of `fluid` to the requested order.
///
/// `t_m` is the comparison temperature of `μ_M`; `β` comes from `scaling` and
/// must be at least `(9-2γ)/2`.
pub fn remainder_diagnostics(
    f: &Distribution,
    fluid: &FluidState,
    order: u8,
    scaling: &ScalingConfig,
    t_m: f64,
) -> Result<RemainderDiagnostics> {
    let bound = min_weight_exponent(scaling.kernel.gamma);
    if scaling.beta < bound {
        return Err(Error::Validation(format!(
            "weight exponent β = {} is below the admissible bound (9-2γ)/2 = {bound}",
            scaling.beta
        )));
    }
    if !(t_m > 0.0) {
        return Err(Error::Validation(format!("comparison temperature must be positive, got {t_m}")));
    }
    let (space, vgrid) = (f.space(), f.velocity());
    let mu = maxwellian(fluid, space, vgrid)?;
    let mut defect = f.difference(&mu)?;
    match order {
        0 => {}
        1 => defect = defect.add_scaled(-scaling.epsilon, &first_corrector(fluid, space, vgrid, scaling)?)?,
        _ => return Err(Error::Validation(format!("expansion order must be 0 or 1, got {order}"))),
    }
    let nx = space.len();
    let mu_m = comparison_maxwellian(t_m, vgrid);
    let mut l2 = 0.0;
    let mut sup: f64 = 0.0;
    for (k, d) in defect.values().iter().enumerate() {
        let iv = k / nx;
        l2 += d * d / mu.values()[k];
        let w = (1.0 + vgrid.speed_sq(iv)).powf(scaling.beta);
        sup = sup.max(w * d.abs() / mu_m[iv].sqrt());
    }
    Ok(RemainderDiagnostics {
        f_l2: (l2 * space.cell_volume() * vgrid.weight()).sqrt(),
        h_winf: scaling.epsilon.powf(1.5) * sup,
    })
}

/// Moment-matched Maxwellian of every spatial slice.
pub fn local_equilibrium(f: &Distribution) -> Result<Distribution> {
    let matcher = MomentMatcher::new(f.velocity());
    let mut out = Distribution::zeros(f.space(), f.velocity());
    for ix in 0..f.space().len() {
        let s = f.slice_at(ix);
        out.set_slice(ix, &matcher.fit(matcher.moments(&s))?.evaluate(f.velocity()));
    }
    Ok(out.with_time(f.time()))
}
