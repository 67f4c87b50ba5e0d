use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, Spectral};
use crate::maxwellian::FluidState;

/// Spatial discretization of the Euler system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Fourier collocation with 2/3 dealiasing and an exponential filter.
    #[default]
    SpectralFiltered,
    /// MUSCL reconstruction (minmod) with a Rusanov flux on conserved variables.
    FiniteVolume,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EulerRunConfig {
    pub delta: f64,
    pub tau: f64,
    pub scheme: Scheme,
    pub cfl: f64,
    /// Sobolev order used by difference diagnostics.
    pub sobolev_order: u32,
    /// The run stops once `max|∇·u| > blowup_factor / δ`.
    pub blowup_factor: f64,
}

impl Default for EulerRunConfig {
    fn default() -> Self {
        Self { delta: 0.1, tau: 1.0, scheme: Scheme::SpectralFiltered, cfl: 0.5, sobolev_order: 2, blowup_factor: 50.0 }
    }
}

impl EulerRunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("δ must be non-negative, got {}", self.delta)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("τ must be positive, got {}", self.tau)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if self.sobolev_order > 3 {
            return Err(Error::Config(format!("Sobolev order must be at most 3, got {}", self.sobolev_order)));
        }
        if !(self.blowup_factor > 0.0) {
            return Err(Error::Config(format!("blowup factor must be positive, got {}", self.blowup_factor)));
        }
        Ok(())
    }

    pub fn blowup_threshold(&self) -> f64 {
        if self.delta == 0.0 {
            f64::INFINITY
        } else {
            self.blowup_factor / self.delta
        }
    }
}

/// Snapshots of an Euler run at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FluidState>,
    pub steps: usize,
}

impl EulerTrajectory {
    pub fn last(&self) -> &FluidState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

type Fields = [Vec<f64>; 5];

fn to_fields(s: &FluidState) -> Fields {
    [s.rho.clone(), s.u[0].clone(), s.u[1].clone(), s.u[2].clone(), s.temp.clone()]
}

fn from_fields(f: Fields) -> FluidState {
    let [rho, u0, u1, u2, temp] = f;
    FluidState { rho, u: [u0, u1, u2], temp }
}

fn axpy(base: &Fields, a: f64, k: &Fields) -> Fields {
    std::array::from_fn(|q| base[q].iter().zip(&k[q]).map(|(x, y)| x + a * y).collect())
}

/// Solves the non-conservative Euler system from `init` up to `cfg.tau`.
///
/// `sample_times` must be sorted and lie in `[0, τ]`; time steps are shortened
/// to land on each of them. The time integrator is classical RK4 for both
/// schemes.
pub fn solve_euler(
    init: &FluidState,
    grid: &SpatialGrid,
    cfg: &EulerRunConfig,
    sample_times: &[f64],
) -> Result<EulerTrajectory> {
    cfg.validate()?;
    init.check_shape(grid.len())?;
    init.validate()?;
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.iter().any(|t| !(*t >= 0.0 && *t <= cfg.tau)) {
        return Err(Error::Config(format!("sample times must be sorted within [0, {}]", cfg.tau)));
    }
    let solver: Box<dyn Discretization> = match cfg.scheme {
        Scheme::SpectralFiltered => Box::new(SpectralEuler::new(grid)),
        Scheme::FiniteVolume => Box::new(FiniteVolumeEuler::new(grid)),
    };
    let mut fields = solver.prepare(to_fields(init));
    let threshold = cfg.blowup_threshold();
    let dx = grid.spacing();

    let mut out = EulerTrajectory { times: Vec::new(), states: Vec::new(), steps: 0 };
    let mut t = 0.0;
    for &stop in sample_times {
        while t < stop {
            let speed = max_wave_speed(&fields, grid.dim());
            let mut dt = cfg.cfl * dx / speed;
            let landing = dt >= stop - t;
            if landing {
                dt = stop - t;
            }
            let k1 = solver.rhs(&fields);
            let k2 = solver.rhs(&axpy(&fields, 0.5 * dt, &k1));
            let k3 = solver.rhs(&axpy(&fields, 0.5 * dt, &k2));
            let k4 = solver.rhs(&axpy(&fields, dt, &k3));
            for q in 0..5 {
                for i in 0..fields[q].len() {
                    fields[q][i] += dt / 6.0 * (k1[q][i] + 2.0 * k2[q][i] + 2.0 * k3[q][i] + k4[q][i]);
                }
            }
            solver.finish_step(&mut fields);
            t = if landing { stop } else { t + dt };
            out.steps += 1;

            if let Some(ix) = (0..grid.len()).find(|&i| !(fields[0][i] > 0.0) || !(fields[4][i] > 0.0)) {
                return Err(Error::LifespanExceeded {
                    reached_time: t,
                    reason: format!("positivity lost at node {ix}: ρ = {}, T = {}", fields[0][ix], fields[4][ix]),
                });
            }
            let div = solver.max_divergence(&fields);
            if !(div <= threshold) {
                return Err(Error::LifespanExceeded {
                    reached_time: t,
                    reason: format!("max |∇·u| = {div:.3e} exceeds {threshold:.3e}"),
                });
            }
        }
        out.times.push(stop);
        out.states.push(from_fields(fields.clone()));
    }
    Ok(out)
}

/// `∂t(ρ, u, T)` implied by the Euler system at a given state, with spectral
/// derivatives and no dealiasing.
pub fn euler_time_derivative(state: &FluidState, grid: &SpatialGrid) -> Result<FluidState> {
    state.check_shape(grid.len())?;
    state.validate()?;
    let solver = SpectralEuler::new(grid);
    Ok(from_fields(solver.raw_rhs(&to_fields(state))))
}

fn max_wave_speed(f: &Fields, dim: usize) -> f64 {
    let mut s: f64 = 0.0;
    for i in 0..f[0].len() {
        let umax = (0..dim).map(|a| f[1 + a][i].abs()).fold(0.0, f64::max);
        s = s.max(umax + (5.0 / 3.0 * f[4][i].max(0.0)).sqrt());
    }
    s.max(1e-12)
}

trait Discretization {
    fn prepare(&self, f: Fields) -> Fields {
        f
    }
    fn rhs(&self, f: &Fields) -> Fields;
    fn finish_step(&self, _f: &mut Fields) {}
    fn max_divergence(&self, f: &Fields) -> f64;
}

struct SpectralEuler {
    sp: Spectral,
    dim: usize,
    /// 2/3-rule mask.
    keep: Vec<bool>,
    filter: Vec<f64>,
}

const FILTER_ALPHA: f64 = 36.0;
const FILTER_ORDER: i32 = 16;

impl SpectralEuler {
    fn new(grid: &SpatialGrid) -> Self {
        let sp = Spectral::new(grid);
        let n = grid.n();
        let cut = n / 3;
        let mut keep = vec![true; grid.len()];
        let mut filter = vec![1.0; grid.len()];
        for idx in 0..grid.len() {
            let ijk = grid.unindex(idx);
            for axis in 0..grid.dim() {
                let m = ijk[axis].min(n - ijk[axis]);
                if m > cut {
                    keep[idx] = false;
                    filter[idx] = 0.0;
                } else {
                    filter[idx] *= (-FILTER_ALPHA * (m as f64 / cut as f64).powi(FILTER_ORDER)).exp();
                }
            }
        }
        Self { sp, dim: grid.dim(), keep, filter }
    }

    fn apply_mask(&self, field: &[f64], mask: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut c = self.sp.forward(field);
        for (idx, v) in c.iter_mut().enumerate() {
            *v *= mask(idx);
        }
        self.sp.inverse(&c)
    }

    fn gradients(&self, f: &[f64]) -> Vec<Vec<f64>> {
        let coeffs = self.sp.forward(f);
        (0..self.dim)
            .map(|axis| {
                let mut c: Vec<Complex64> = coeffs.clone();
                self.sp.differentiate_coeffs(&mut c, axis);
                self.sp.inverse(&c)
            })
            .collect()
    }

    fn raw_rhs(&self, f: &Fields) -> Fields {
        let grads: Vec<Vec<Vec<f64>>> = f.iter().map(|q| self.gradients(q)).collect();
        let n = f[0].len();
        let mut out: Fields = std::array::from_fn(|_| vec![0.0; n]);
        for i in 0..n {
            let rho = f[0][i];
            let temp = f[4][i];
            let u = [f[1][i], f[2][i], f[3][i]];
            let adv = |q: usize| (0..self.dim).map(|a| u[a] * grads[q][a][i]).sum::<f64>();
            let div: f64 = (0..self.dim).map(|a| grads[1 + a][a][i]).sum();
            out[0][i] = -adv(0) - rho * div;
            for j in 0..3 {
                let pressure = if j < self.dim { grads[4][j][i] + temp / rho * grads[0][j][i] } else { 0.0 };
                out[1 + j][i] = -adv(1 + j) - pressure;
            }
            out[4][i] = -adv(4) - 2.0 / 3.0 * temp * div;
        }
        out
    }
}

impl Discretization for SpectralEuler {
    fn prepare(&self, f: Fields) -> Fields {
        f.map(|q| self.apply_mask(&q, |idx| if self.keep[idx] { 1.0 } else { 0.0 }))
    }

    fn rhs(&self, f: &Fields) -> Fields {
        self.raw_rhs(f).map(|q| self.apply_mask(&q, |idx| if self.keep[idx] { 1.0 } else { 0.0 }))
    }

    fn finish_step(&self, f: &mut Fields) {
        for q in f.iter_mut() {
            *q = self.apply_mask(q, |idx| self.filter[idx]);
        }
    }

    fn max_divergence(&self, f: &Fields) -> f64 {
        let n = f[0].len();
        let mut div = vec![0.0; n];
        for a in 0..self.dim {
            let d = self.sp.derivative(&f[1 + a], a);
            div.iter_mut().zip(d).for_each(|(x, y)| *x += y);
        }
        div.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

struct FiniteVolumeEuler {
    grid: SpatialGrid,
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

impl FiniteVolumeEuler {
    fn new(grid: &SpatialGrid) -> Self {
        Self { grid: grid.clone() }
    }

    fn neighbours(&self, idx: usize, axis: usize) -> (usize, usize) {
        let n = self.grid.n();
        let stride = n.pow((self.grid.dim() - 1 - axis) as u32);
        let m = (idx / stride) % n;
        let minus = if m == 0 { idx + (n - 1) * stride } else { idx - stride };
        let plus = if m == n - 1 { idx - (n - 1) * stride } else { idx + stride };
        (minus, plus)
    }

    /// Conserved variables `(ρ, ρu, E)` and flux along `axis` for a primitive state.
    fn conserved_and_flux(w: [f64; 5], axis: usize) -> ([f64; 5], [f64; 5]) {
        let [rho, u0, u1, u2, temp] = w;
        let u = [u0, u1, u2];
        let p = rho * temp;
        let energy = 0.5 * rho * (u0 * u0 + u1 * u1 + u2 * u2) + 1.5 * p;
        let ua = u[axis];
        let cons = [rho, rho * u0, rho * u1, rho * u2, energy];
        let mut flux = [rho * ua, rho * u0 * ua, rho * u1 * ua, rho * u2 * ua, (energy + p) * ua];
        flux[1 + axis] += p;
        (cons, flux)
    }
}

impl Discretization for FiniteVolumeEuler {
    fn rhs(&self, f: &Fields) -> Fields {
        let n = f[0].len();
        let dx = self.grid.spacing();
        let prim = |i: usize| [f[0][i], f[1][i], f[2][i], f[3][i], f[4][i]];
        let mut out: Fields = std::array::from_fn(|_| vec![0.0; n]);
        for axis in 0..self.grid.dim() {
            let slopes: Vec<[f64; 5]> = (0..n)
                .map(|i| {
                    let (m, p) = self.neighbours(i, axis);
                    let (wm, w, wp) = (prim(m), prim(i), prim(p));
                    std::array::from_fn(|q| minmod(w[q] - wm[q], wp[q] - w[q]))
                })
                .collect();
            // flux through the face between i and its plus neighbour
            for i in 0..n {
                let (_, p) = self.neighbours(i, axis);
                let wl: [f64; 5] = std::array::from_fn(|q| prim(i)[q] + 0.5 * slopes[i][q]);
                let wr: [f64; 5] = std::array::from_fn(|q| prim(p)[q] - 0.5 * slopes[p][q]);
                let (ul, fl) = Self::conserved_and_flux(wl, axis);
                let (ur, fr) = Self::conserved_and_flux(wr, axis);
                let speed = |w: [f64; 5]| w[1 + axis].abs() + (5.0 / 3.0 * w[4].max(0.0)).sqrt();
                let a = speed(wl).max(speed(wr));
                for q in 0..5 {
                    let face = 0.5 * (fl[q] + fr[q]) - 0.5 * a * (ur[q] - ul[q]);
                    out[q][i] -= face / dx;
                    out[q][p] += face / dx;
                }
            }
        }
        // `out` holds conserved rates; map them to primitive rates.
        for i in 0..n {
            let [rho, u0, u1, u2, temp] = prim(i);
            let u = [u0, u1, u2];
            let drho = out[0][i];
            let du: [f64; 3] = std::array::from_fn(|d| (out[1 + d][i] - u[d] * drho) / rho);
            let ke = u0 * u0 + u1 * u1 + u2 * u2;
            let de = out[4][i];
            let dp_part = de - 0.5 * ke * drho - rho * (u[0] * du[0] + u[1] * du[1] + u[2] * du[2]);
            let dtemp = (dp_part / 1.5 - temp * drho) / rho;
            out[0][i] = drho;
            for d in 0..3 {
                out[1 + d][i] = du[d];
            }
            out[4][i] = dtemp;
        }
        out
    }

    fn max_divergence(&self, f: &Fields) -> f64 {
        let dx = self.grid.spacing();
        (0..f[0].len())
            .map(|i| {
                (0..self.grid.dim())
                    .map(|a| {
                        let (m, p) = self.neighbours(i, a);
                        (f[1 + a][p] - f[1 + a][m]) / (2.0 * dx)
                    })
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxwellian::AcousticState;

    fn run(n: usize, delta: f64, scheme: Scheme) -> FluidState {
        let g = SpatialGrid::slab(n).unwrap();
        let init = AcousticState::single_mode(&g, 1.0, 1.0).perturbed_fluid(delta);
        let cfg = EulerRunConfig { delta, scheme, ..Default::default() };
        solve_euler(&init, &g, &cfg, &[1.0]).unwrap().last().clone()
    }

    /// Max nodal distance between a run on `n` nodes and one on `2n`.
    fn gap(coarse: &FluidState, fine: &FluidState) -> f64 {
        let mut e: f64 = 0.0;
        for (a, b) in coarse.components().iter().zip(fine.components()) {
            for i in 0..a.len() {
                e = e.max((a[i] - b[2 * i]).abs());
            }
        }
        e
    }

    #[test]
    fn constant_state_is_preserved() {
        let g = SpatialGrid::slab(32).unwrap();
        let init = FluidState::constant(32, 1.0, [0.0; 3], 1.0);
        let cfg = EulerRunConfig { delta: 0.0, ..Default::default() };
        for scheme in [Scheme::SpectralFiltered, Scheme::FiniteVolume] {
            let cfg = EulerRunConfig { scheme, ..cfg.clone() };
            let out = solve_euler(&init, &g, &cfg, &[0.5, 1.0]).unwrap();
            for (a, b) in out.last().components().iter().zip(init.components()) {
                assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn spectral_run_conserves_mass() {
        let g = SpatialGrid::slab(64).unwrap();
        let init = AcousticState::single_mode(&g, 1.0, 1.0).perturbed_fluid(0.2);
        let cfg = EulerRunConfig { delta: 0.2, ..Default::default() };
        let traj = solve_euler(&init, &g, &cfg, &[0.25, 0.5, 0.75, 1.0]).unwrap();
        let m0: f64 = init.rho.iter().sum();
        for s in &traj.states {
            let m: f64 = s.rho.iter().sum();
            assert!(((m - m0) / m0).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_self_convergence() {
        let delta = 0.05;
        let u16 = run(16, delta, Scheme::SpectralFiltered);
        let u32 = run(32, delta, Scheme::SpectralFiltered);
        let u64 = run(64, delta, Scheme::SpectralFiltered);
        let (e1, e2) = (gap(&u16, &u32), gap(&u32, &u64));
        assert!(e1 / e2 >= 8.0, "refinement gaps {e1:e} -> {e2:e}");
    }

    #[test]
    fn finite_volume_converges_to_spectral() {
        let delta = 0.1;
        let reference = run(128, delta, Scheme::SpectralFiltered);
        let err = |n: usize| {
            let fv = run(n, delta, Scheme::FiniteVolume);
            let stride = 128 / n;
            let mut e: f64 = 0.0;
            for (a, b) in fv.components().iter().zip(reference.components()) {
                for i in 0..n {
                    e = e.max((a[i] - b[i * stride]).abs());
                }
            }
            e
        };
        let (e32, e64) = (err(32), err(64));
        assert!(e32 / e64 > 2.5, "{e32:e} -> {e64:e}");
    }

    #[test]
    fn blowup_is_reported_with_reached_time() {
        let g = SpatialGrid::slab(64).unwrap();
        let init = AcousticState::single_mode(&g, 1.0, 1.0).perturbed_fluid(0.5);
        let cfg = EulerRunConfig { delta: 0.5, tau: 5.0, blowup_factor: 1.0, ..Default::default() };
        match solve_euler(&init, &g, &cfg, &[5.0]) {
            Err(Error::LifespanExceeded { reached_time, .. }) => assert!(reached_time > 0.0 && reached_time < 5.0),
            other => panic!("expected a lifespan error, got {other:?}"),
        }
    }

    #[test]
    fn time_derivative_of_a_steady_state_vanishes() {
        let g = SpatialGrid::slab(16).unwrap();
        // uniform pressure with a transverse shear is steady in a slab
        let mut st = FluidState::constant(16, 1.3, [0.0, -0.1, 0.4], 0.9);
        st.u[1] = g.sample(|x| 0.3 * x[0].sin());
        let d = euler_time_derivative(&st, &g).unwrap();
        assert!(d.components().iter().all(|c| c.iter().all(|x| x.abs() < 1e-12)));
    }
}
