use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{SpatialGrid, Spectral};
use crate::maxwellian::AcousticState;

/// Squared sound speed of the acoustic system.
pub const SOUND_SPEED_SQ: f64 = 5.0 / 3.0;

/// Exact solution of the acoustic system at time `t` (negative `t` runs backwards).
///
/// Each Fourier mode splits into a transverse velocity and an entropy wave
/// `σ - (3/2)θ`, both frozen, plus a sound pair `(σ+θ, k̂·u)` rotating at
/// frequency `c|k|`. Nyquist components of `k` are treated as zero so the
/// output stays real.
pub fn solve_acoustic(init: &AcousticState, grid: &SpatialGrid, t: f64) -> Result<AcousticState> {
    init.check_shape(grid.len())?;
    let sp = Spectral::new(grid);
    let mut coeffs: Vec<Vec<Complex64>> = init.components().iter().map(|f| sp.forward(f)).collect();
    let c = SOUND_SPEED_SQ.sqrt();
    let i = Complex64::new(0.0, 1.0);
    for idx in 0..grid.len() {
        let ijk = grid.unindex(idx);
        let mut k = sp.wavevector(idx);
        for axis in 0..grid.dim() {
            if sp.is_nyquist(ijk[axis]) {
                k[axis] = 0.0;
            }
        }
        let kappa = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        if kappa == 0.0 {
            continue;
        }
        let khat = k.map(|x| x / kappa);
        let sigma = coeffs[0][idx];
        let u = [coeffs[1][idx], coeffs[2][idx], coeffs[3][idx]];
        let theta = coeffs[4][idx];

        let w0 = khat[0] * u[0] + khat[1] * u[1] + khat[2] * u[2];
        let p0 = sigma + theta;
        let s = sigma - 1.5 * theta;
        let (sin, cos) = (c * kappa * t).sin_cos();
        let w = w0 * cos - i * p0 * (sin / c);
        let p = p0 * cos - i * w0 * (c * sin);

        let theta_t = (p - s) * 0.4;
        coeffs[0][idx] = p - theta_t;
        coeffs[4][idx] = theta_t;
        for d in 0..3 {
            coeffs[1 + d][idx] = u[d] + (w - w0) * khat[d];
        }
    }
    let mut fields = coeffs.iter().map(|c| sp.inverse(c));
    let sigma = fields.next().unwrap();
    let u = [fields.next().unwrap(), fields.next().unwrap(), fields.next().unwrap()];
    let theta = fields.next().unwrap();
    Ok(AcousticState { sigma, u, theta })
}

/// `‖(σ, u, √(3/2)θ)‖²_{H^s}`, the conserved acoustic energy.
pub fn acoustic_energy(state: &AcousticState, grid: &SpatialGrid, s: u32) -> Result<f64> {
    state.check_shape(grid.len())?;
    let sp = Spectral::new(grid);
    let base: f64 =
        [&state.sigma, &state.u[0], &state.u[1], &state.u[2]].iter().map(|f| sp.hs_norm_sq(f, s)).sum();
    Ok(base + 1.5 * sp.hs_norm_sq(&state.theta, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rough_data(grid: &SpatialGrid) -> AcousticState {
        let mut st = AcousticState::zeros(grid.len());
        st.sigma = grid.sample(|x| (x[0]).cos() + 0.3 * (3.0 * x[0]).sin());
        st.u[0] = grid.sample(|x| 0.5 * (2.0 * x[0]).sin() - 0.2 * x[0].cos());
        st.u[1] = grid.sample(|x| 0.7 * (x[0]).sin());
        st.u[2] = grid.sample(|x| (-(x[0] - 3.0).powi(2)).exp());
        st.theta = grid.sample(|x| 0.4 * (2.0 * x[0]).cos() + 0.1);
        st
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = SpatialGrid::slab(16).unwrap();
        let out = solve_acoustic(&AcousticState::zeros(16), &g, 3.7).unwrap();
        assert!(out.components().iter().all(|c| c.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn transverse_and_entropy_modes_are_frozen() {
        let g = SpatialGrid::slab(32).unwrap();
        let mut st = AcousticState::zeros(32);
        st.u[1] = g.sample(|x| x[0].sin());
        st.sigma = g.sample(|x| -(2.0 * x[0]).cos());
        st.theta = g.sample(|x| (2.0 * x[0]).cos());
        let out = solve_acoustic(&st, &g, 2.3).unwrap();
        for i in 0..32 {
            assert!((out.u[1][i] - st.u[1][i]).abs() < 1e-13);
            assert!((out.sigma[i] - st.sigma[i]).abs() < 1e-13);
            assert!(out.u[0][i].abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_matches_closed_form() {
        let g = SpatialGrid::slab(16).unwrap();
        let st = AcousticState::single_mode(&g, 1.0, 1.0);
        let t = 0.8;
        let out = solve_acoustic(&st, &g, t).unwrap();
        let c = SOUND_SPEED_SQ.sqrt();
        for ix in 0..16 {
            let x = g.coords(ix)[0];
            // p = a(t) cos x, u1 = b(t) sin x with a' = -(5/3) b, b' = a
            let w = x.sin() * ((c * t).cos() + (2.0 / c) * (c * t).sin());
            let p_exact = x.cos() * (2.0 * (c * t).cos() - c * (c * t).sin());
            let s = -0.5 * x.cos();
            let theta = 0.4 * (p_exact - s);
            assert!((out.u[0][ix] - w).abs() < 1e-13, "u at {ix}");
            assert!((out.theta[ix] - theta).abs() < 1e-13, "θ at {ix}");
            assert!((out.sigma[ix] - (p_exact - theta)).abs() < 1e-13, "σ at {ix}");
        }
    }

    #[test]
    fn energy_is_conserved() {
        let g = SpatialGrid::slab(64).unwrap();
        let st = rough_data(&g);
        for s in 0..=3 {
            let e0 = acoustic_energy(&st, &g, s).unwrap();
            for t in [0.5, 3.0, 10.0] {
                let e = acoustic_energy(&solve_acoustic(&st, &g, t).unwrap(), &g, s).unwrap();
                assert!(((e - e0) / e0).abs() < 1e-12, "s = {s}, t = {t}");
            }
        }
    }

    #[test]
    fn reversible() {
        let g = SpatialGrid::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        let mut st = AcousticState::zeros(g.len());
        st.sigma = g.sample(|x| (x[0] + 2.0 * x[1]).cos());
        st.u[0] = g.sample(|x| x[1].sin());
        st.u[1] = g.sample(|x| (x[0] - x[1]).cos());
        st.theta = g.sample(|x| (3.0 * x[0]).sin());
        let back = solve_acoustic(&solve_acoustic(&st, &g, 1.7).unwrap(), &g, -1.7).unwrap();
        for (a, b) in back.components().iter().zip(st.components()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-11);
            }
        }
    }
}
