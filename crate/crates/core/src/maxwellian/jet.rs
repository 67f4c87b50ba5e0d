use super::{global_maxwellian, limit_profile_g, maxwellian, maxwellian_slice, AcousticState, DifferenceState, FluidState};
use crate::error::{Error, Result};
use crate::grid::{NormKind, SpatialGrid, VelocityGrid};
use crate::kinetic::Distribution;

/// `μ(z)` and its first two `z`-derivatives along the quadratic path
/// `ρ = 1 + zσ + z²σ_d`, `u = zu + z²u_d`, `T = 1 + zθ + z²θ_d`.
#[derive(Debug, Clone)]
pub struct MaxwellianJet {
    pub mu: Distribution,
    pub d1: Distribution,
    pub d2: Distribution,
}

/// Evaluates `μ(z)`, `μ'(z) = D μ(z)` and `μ''(z) = (D' + D²) μ(z)`.
pub fn mu_z_jet(
    acoustic: &AcousticState,
    diff: &DifferenceState,
    z: f64,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
) -> Result<MaxwellianJet> {
    let nx = space.len();
    acoustic.check_shape(nx)?;
    if diff.len() != nx {
        return Err(Error::Shape(format!("difference state has {} nodes, grid has {nx}", diff.len())));
    }
    let mut mu = Distribution::zeros(space, vgrid);
    let mut d1 = Distribution::zeros(space, vgrid);
    let mut d2 = Distribution::zeros(space, vgrid);
    for ix in 0..nx {
        let rho = 1.0 + z * acoustic.sigma[ix] + z * z * diff.sigma_d[ix];
        let temp = 1.0 + z * acoustic.theta[ix] + z * z * diff.theta_d[ix];
        if !(rho > 0.0) || !(temp > 0.0) {
            return Err(Error::Domain(format!("path state at node {ix}, z = {z}: ρ = {rho}, T = {temp}")));
        }
        let u: [f64; 3] = [0, 1, 2].map(|d| z * acoustic.u[d][ix] + z * z * diff.u_d[d][ix]);
        let rho1 = acoustic.sigma[ix] + 2.0 * z * diff.sigma_d[ix];
        let temp1 = acoustic.theta[ix] + 2.0 * z * diff.theta_d[ix];
        let u1: [f64; 3] = [0, 1, 2].map(|d| acoustic.u[d][ix] + 2.0 * z * diff.u_d[d][ix]);
        let rho2 = 2.0 * diff.sigma_d[ix];
        let temp2 = 2.0 * diff.theta_d[ix];
        let u2: [f64; 3] = [0, 1, 2].map(|d| 2.0 * diff.u_d[d][ix]);

        let u1_sq = u1[0] * u1[0] + u1[1] * u1[1] + u1[2] * u1[2];
        // v-independent parts of D and D'.
        let d_const = rho1 / rho - 1.5 * temp1 / temp;
        let dp_const = rho2 / rho - rho1 * rho1 / (rho * rho) - 1.5 * temp2 / temp + 1.5 * temp1 * temp1 / (temp * temp)
            - u1_sq / temp;
        let dp_lin: [f64; 3] = [0, 1, 2].map(|d| u2[d] / temp - 2.0 * temp1 * u1[d] / (temp * temp));
        let dp_quad = temp2 / (2.0 * temp * temp) - temp1 * temp1 / (temp * temp * temp);

        let profile = maxwellian_slice(rho, u, temp, vgrid);
        for (iv, m) in profile.iter().enumerate() {
            let v = vgrid.node(iv);
            let c = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
            let c2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
            let c_dot_u1 = c[0] * u1[0] + c[1] * u1[1] + c[2] * u1[2];
            let dz = d_const + c_dot_u1 / temp + c2 * temp1 / (2.0 * temp * temp);
            let dpz = dp_const + c[0] * dp_lin[0] + c[1] * dp_lin[1] + c[2] * dp_lin[2] + c2 * dp_quad;
            let k = iv * nx + ix;
            mu.values_mut()[k] = *m;
            d1.values_mut()[k] = dz * m;
            d2.values_mut()[k] = (dpz + dz * dz) * m;
        }
    }
    Ok(MaxwellianJet { mu, d1, d2 })
}

/// `(‖μ^δ - μ⁰ - δG‖_∞, ‖μ^δ - μ⁰ - δG‖₂)` for an Euler state and the
/// acoustic state at the same time.
pub fn expansion_defect(
    delta: f64,
    euler: &FluidState,
    acoustic: &AcousticState,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
) -> Result<(f64, f64)> {
    let defect = expansion_defect_field(delta, euler, acoustic, space, vgrid)?;
    Ok((defect.norm(NormKind::Linf)?, defect.norm(NormKind::L2)?))
}

/// Pointwise `μ^δ - μ⁰ - δG`.
pub fn expansion_defect_field(
    delta: f64,
    euler: &FluidState,
    acoustic: &AcousticState,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
) -> Result<Distribution> {
    let mu_delta = maxwellian(euler, space, vgrid)?;
    let g = limit_profile_g(acoustic, space, vgrid)?;
    let mu0 = global_maxwellian(vgrid);
    let nx = space.len();
    let mut out = mu_delta;
    for (k, value) in out.values_mut().iter_mut().enumerate() {
        *value -= mu0[k / nx] + delta * g.values()[k];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup() -> (SpatialGrid, VelocityGrid, AcousticState, DifferenceState) {
        let g = SpatialGrid::slab(8).unwrap();
        let vg = VelocityGrid::new(8, 6.0).unwrap();
        let ac = AcousticState::single_mode(&g, 1.0, 1.0);
        let mut diff = DifferenceState::zeros(8);
        for ix in 0..8 {
            let x = g.coords(ix)[0];
            diff.sigma_d[ix] = 0.3 * (2.0 * x).cos();
            diff.u_d[0][ix] = -0.2 * (2.0 * x).sin();
            diff.u_d[1][ix] = 0.1 * x.cos();
            diff.theta_d[ix] = 0.25 * (2.0 * x).cos() - 0.1;
        }
        (g, vg, ac, diff)
    }

    #[test]
    fn jet_at_zero() {
        let (g, vg, ac, diff) = setup();
        let jet = mu_z_jet(&ac, &diff, 0.0, &g, &vg).unwrap();
        let mu0 = global_maxwellian(&vg);
        let gp = limit_profile_g(&ac, &g, &vg).unwrap();
        for k in 0..jet.mu.values().len() {
            assert_eq!(jet.mu.values()[k], mu0[k / g.len()]);
            assert!((jet.d1.values()[k] - gp.values()[k]).abs() <= 1e-12);
        }
    }

    /// Finite differences of the path `z ↦ μ(z)` as the oracle for both derivatives.
    #[test]
    fn jet_matches_finite_differences() {
        let (g, vg, ac, diff) = setup();
        let z = 0.07;
        let at = |z: f64| mu_z_jet(&ac, &diff, z, &g, &vg).unwrap().mu;
        let jet = mu_z_jet(&ac, &diff, z, &g, &vg).unwrap();
        let h = 1e-4;
        let (plus, minus) = (at(z + h), at(z - h));
        let centre = &jet.mu;
        let scale = centre.norm(NormKind::Linf).unwrap();
        for k in 0..centre.values().len() {
            let fd1 = (plus.values()[k] - minus.values()[k]) / (2.0 * h);
            let fd2 = (plus.values()[k] - 2.0 * centre.values()[k] + minus.values()[k]) / (h * h);
            assert!((fd1 - jet.d1.values()[k]).abs() <= 1e-6 * scale, "first derivative at {k}");
            assert!((fd2 - jet.d2.values()[k]).abs() <= 1e-3 * scale, "second derivative at {k}");
        }
    }

    #[test]
    fn central_difference_error_is_second_order() {
        let (g, vg, ac, diff) = setup();
        let d1 = mu_z_jet(&ac, &diff, 0.0, &g, &vg).unwrap().d1;
        let err = |h: f64| {
            let p = mu_z_jet(&ac, &diff, h, &g, &vg).unwrap().mu;
            let m = mu_z_jet(&ac, &diff, -h, &g, &vg).unwrap().mu;
            (0..d1.values().len())
                .map(|k| ((p.values()[k] - m.values()[k]) / (2.0 * h) - d1.values()[k]).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(2e-2), err(1e-2));
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "ratio {}", e1 / e2);
        assert!(err(1e-4) < 1e-6);
    }

    #[test]
    fn jet_matches_maxwellian_at_delta() {
        let (g, vg, ac, diff) = setup();
        let delta = 0.15;
        let jet = mu_z_jet(&ac, &diff, delta, &g, &vg).unwrap();
        let direct = maxwellian(&diff.reassemble(&ac, delta), &g, &vg).unwrap();
        for (a, b) in jet.mu.values().iter().zip(direct.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_delta_has_zero_defect() {
        let (g, vg, ac, _) = setup();
        let euler = FluidState::constant(8, 1.0, [0.0; 3], 1.0);
        let (linf, l2) = expansion_defect(0.0, &euler, &ac, &g, &vg).unwrap();
        assert_eq!((linf, l2), (0.0, 0.0));
    }

    /// Pointwise oracle: the closed-form Gaussian minus its first-order Taylor
    /// polynomial, evaluated without the separable factorization.
    #[test]
    fn initial_defect_matches_pointwise_oracle() {
        let (g, vg, ac, _) = setup();
        let delta = 0.1;
        let euler = ac.perturbed_fluid(delta);
        let field = expansion_defect_field(delta, &euler, &ac, &g, &vg).unwrap();
        let mut sup = 0.0_f64;
        for ix in 0..g.len() {
            let (rho, u, t) = euler.at(ix);
            for iv in 0..vg.len() {
                let v = vg.node(iv);
                let c2: f64 = (0..3).map(|d| (v[d] - u[d]).powi(2)).sum();
                let v2: f64 = v.iter().map(|c| c * c).sum();
                let mu = rho * (2.0 * PI * t).powf(-1.5) * (-c2 / (2.0 * t)).exp();
                let mu0 = (2.0 * PI).powf(-1.5) * (-v2 / 2.0).exp();
                let gv = (ac.sigma[ix] + v[0] * ac.u[0][ix] + v[1] * ac.u[1][ix] + v[2] * ac.u[2][ix]
                    + 0.5 * (v2 - 3.0) * ac.theta[ix])
                    * mu0;
                let oracle = mu - mu0 - delta * gv;
                assert!((field.get(ix, iv) - oracle).abs() <= 1e-14);
                sup = sup.max(oracle.abs());
            }
        }
        assert!(sup > 0.0);
    }
}
