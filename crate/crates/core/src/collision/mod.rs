//! Boltzmann collision operator on the discrete velocity cube, its
//! linearization, the near/far split of the compact part, and the BGK
//! relaxation used for large sweeps.
//!
//! Cost of the full operator: `collide_q` visits every (output node, partner
//! node, sphere direction) triple, i.e. `n_v^6 · n_sphere` work per spatial
//! point. [`FULL_Q_CAP`] bounds `n_v` for that path.

mod bgk;
mod linear;
mod split;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, Spectral, VelocityGrid};

pub use bgk::{bgk_operator, DiscreteMaxwellian, MomentMatcher, RateModel};
pub use linear::{
    linearized_l, measure_coercivity, project_p, CollisionDiagnostics, HydroProjector, LinearizedOperator,
    PseudoInverse, DENSE_CAP, NULL_THRESHOLD,
};
pub use split::{cutoff, split_k, KRows};

/// Largest `n_v` accepted by the full collision operator.
pub const FULL_Q_CAP: usize = 24;

/// Angular factor `B(θ)` of the collision kernel as a function of `cos θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularLaw {
    /// `B = |cos θ|`.
    #[default]
    AbsCos,
    /// `B = cos² θ`.
    CosSquared,
}

impl AngularLaw {
    pub fn eval(self, cos_theta: f64) -> f64 {
        match self {
            AngularLaw::AbsCos => cos_theta.abs(),
            AngularLaw::CosSquared => cos_theta * cos_theta,
        }
    }
}

/// Kernel `B(θ) |v - u|^γ` and the sphere resolution used to integrate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub gamma: f64,
    pub angular: AngularLaw,
    /// Gauss–Legendre nodes in `cos θ`; even.
    pub n_polar: usize,
    /// Uniform azimuth nodes; a multiple of 4.
    pub n_azimuth: usize,
    /// Radius `m` of the near-field cutoff `χ_m`.
    pub cutoff_m: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { gamma: 1.0, angular: AngularLaw::AbsCos, n_polar: 4, n_azimuth: 8, cutoff_m: 1.0 }
    }
}

impl KernelConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        Self { gamma, ..Self::default() }
    }

    /// Same kernel with the sphere resolution doubled in both angles.
    pub fn refined(&self) -> Self {
        Self { n_polar: 2 * self.n_polar, n_azimuth: 2 * self.n_azimuth, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > -3.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (-3, 1], got {}", self.gamma)));
        }
        if self.n_polar < 4 || self.n_polar % 2 != 0 {
            return Err(Error::Config(format!("n_polar must be even and >= 4, got {}", self.n_polar)));
        }
        if self.n_azimuth < 8 || self.n_azimuth % 4 != 0 {
            return Err(Error::Config(format!("n_azimuth must be a multiple of 4 and >= 8, got {}", self.n_azimuth)));
        }
        if !(self.cutoff_m > 0.0) {
            return Err(Error::Config(format!("cutoff_m must be positive, got {}", self.cutoff_m)));
        }
        Ok(())
    }

    /// `|w|^γ` for `|w| > 0`.
    #[inline]
    pub fn potential(&self, r: f64) -> f64 {
        if self.gamma == 1.0 {
            r
        } else if self.gamma == 0.0 {
            1.0
        } else {
            r.powf(self.gamma)
        }
    }
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ` times a uniform
/// azimuth grid offset by half a step.
///
/// The direction set is built to be invariant, bit for bit, under `ω ↦ -ω`
/// and under the 16 symmetries of the square prism around the third axis.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    dirs: Vec<[f64; 3]>,
    weights: Vec<f64>,
    n_polar: usize,
    n_azimuth: usize,
}

impl SphereQuadrature {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar < 2 || n_polar % 2 != 0 || n_azimuth < 4 || n_azimuth % 4 != 0 {
            return Err(Error::Config(format!("unsupported sphere rule {n_polar} x {n_azimuth}")));
        }
        let rule = GaussLegendre::new(n_polar).map_err(|e| Error::Config(e.to_string()))?;
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cos = vec![0.0; n_polar];
        let mut wpol = vec![0.0; n_polar];
        for i in 0..n_polar / 2 {
            let j = n_polar - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[j].1 + pairs[i].1);
            cos[i] = -x;
            cos[j] = x;
            wpol[i] = w;
            wpol[j] = w;
        }

        // Azimuth table from the first octant, mirrored into the rest.
        let q = n_azimuth / 4;
        let step = 2.0 * PI / n_azimuth as f64;
        let mut first = vec![(0.0, 0.0); q];
        for j in 0..q {
            let mirror = q - 1 - j;
            if j < mirror {
                let phi = (j as f64 + 0.5) * step;
                first[j] = (phi.cos(), phi.sin());
                first[mirror] = (phi.sin(), phi.cos());
            } else if j == mirror {
                first[j] = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
            }
        }
        let mut az = vec![(0.0, 0.0); n_azimuth];
        for j in 0..q {
            let (c, s) = first[j];
            az[j] = (c, s);
            az[2 * q - 1 - j] = (-c, s);
            az[2 * q + j] = (-c, -s);
            az[4 * q - 1 - j] = (c, -s);
        }

        let mut dirs = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for p in 0..n_polar {
            let sin = (1.0 - cos[p] * cos[p]).max(0.0).sqrt();
            for &(c, s) in &az {
                dirs.push([sin * c, sin * s, cos[p]]);
                weights.push(wpol[p] * step);
            }
        }
        Ok(Self { dirs, weights, n_polar, n_azimuth })
    }

    pub fn from_config(cfg: &KernelConfig) -> Result<Self> {
        cfg.validate()?;
        Self::new(cfg.n_polar, cfg.n_azimuth)
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn dirs(&self) -> &[[f64; 3]] {
        &self.dirs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Directions with positive third component; the others are their antipodes.
    pub fn upper_half(&self) -> std::ops::Range<usize> {
        (self.n_polar / 2) * self.n_azimuth..self.dirs.len()
    }

    /// `Σ_k w_k B(e·ω_k)` for a unit vector `e`.
    pub fn angular_sum(&self, law: AngularLaw, e: [f64; 3]) -> f64 {
        self.dirs
            .iter()
            .zip(&self.weights)
            .map(|(w, q)| q * law.eval(e[0] * w[0] + e[1] * w[1] + e[2] * w[2]))
            .sum()
    }
}

/// Interpolation of a grid function at off-grid velocities: trilinear weights
/// plus, along each axis, a second difference of weight `-t(1-t)/2` centred at
/// the nearest node. The correction cancels the `t(1-t)h²` overshoot of linear
/// interpolation on `x²`, so every quadratic is reproduced and the error is
/// `O(h³)`. Zero outside the ball `|v| ≤ v_max`; nodes beyond the grid count
/// as zero.
pub(crate) struct Interpolator<'a> {
    f: &'a [f64],
    n: usize,
    v_max: f64,
    inv_h: f64,
    r2: f64,
}

impl<'a> Interpolator<'a> {
    pub(crate) fn new(f: &'a [f64], vgrid: &VelocityGrid) -> Self {
        Self { f, n: vgrid.n(), v_max: vgrid.v_max(), inv_h: 1.0 / vgrid.h(), r2: vgrid.v_max() * vgrid.v_max() }
    }

    /// Visits `(node, weight)` for every in-grid stencil node.
    #[inline]
    pub(crate) fn for_each(&self, p: [f64; 3], mut visit: impl FnMut(usize, f64)) {
        if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > self.r2 {
            return;
        }
        let n = self.n as isize;
        let mut idx = [0isize; 3];
        let mut t = [0.0; 3];
        for d in 0..3 {
            let s = (p[d] + self.v_max) * self.inv_h - 0.5;
            let fl = s.floor();
            idx[d] = fl as isize;
            t[d] = s - fl;
        }
        let inside = |i: isize| i >= 0 && i < n;
        let flat = |i: isize, j: isize, k: isize| ((i * n + j) * n + k) as usize;
        for a in 0..2 {
            let i = idx[0] + a;
            if !inside(i) {
                continue;
            }
            let wa = if a == 0 { 1.0 - t[0] } else { t[0] };
            for b in 0..2 {
                let j = idx[1] + b;
                if !inside(j) {
                    continue;
                }
                let wb = wa * if b == 0 { 1.0 - t[1] } else { t[1] };
                for c in 0..2 {
                    let k = idx[2] + c;
                    if inside(k) {
                        visit(flat(i, j, k), wb * if c == 0 { 1.0 - t[2] } else { t[2] });
                    }
                }
            }
        }
        let near = [0, 1, 2].map(|d| idx[d] + isize::from(t[d] >= 0.5));
        for d in 0..3 {
            let c = -0.5 * t[d] * (1.0 - t[d]);
            if c == 0.0 || (0..3).any(|e| e != d && !inside(near[e])) {
                continue;
            }
            let m = near[d].clamp(1, n - 2);
            for (off, wt) in [(-1isize, c), (0, -2.0 * c), (1, c)] {
                let mut at = near;
                at[d] = m + off;
                visit(flat(at[0], at[1], at[2]), wt);
            }
        }
    }

    #[inline]
    pub(crate) fn at(&self, p: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        self.for_each(p, |node, w| acc += w * self.f[node]);
        acc
    }
}

/// `out(v_i) = Σ_{j≠i} W k(v_i - v_j) f(v_j)` by zero-padded FFT convolution.
pub(crate) fn kernel_convolution(f: &[f64], vgrid: &VelocityGrid, kernel: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
    let n = vgrid.n();
    let m = 2 * n;
    let pad = SpatialGrid::new(3, m, 1.0).expect("padded grid is valid");
    let fft = Spectral::new(&pad);
    let h = vgrid.h();
    let w = vgrid.weight();
    let zero = Complex64::new(0.0, 0.0);
    let mut kbuf = vec![zero; m * m * m];
    let offset = |a: usize| -> Option<f64> {
        match a {
            a if a < n => Some(a as f64),
            a if a > n => Some(a as f64 - m as f64),
            _ => None,
        }
    };
    for (idx, slot) in kbuf.iter_mut().enumerate() {
        let (a, b, c) = (idx / (m * m), (idx / m) % m, idx % m);
        if let (Some(x), Some(y), Some(z)) = (offset(a), offset(b), offset(c)) {
            if x != 0.0 || y != 0.0 || z != 0.0 {
                *slot = Complex64::new(w * kernel([x * h, y * h, z * h]), 0.0);
            }
        }
    }
    let mut fbuf = vec![zero; m * m * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                fbuf[(i * m + j) * m + k] = Complex64::new(f[vgrid.index(i, j, k)], 0.0);
            }
        }
    }
    fft.transform(&mut kbuf, false);
    fft.transform(&mut fbuf, false);
    for (a, b) in fbuf.iter_mut().zip(&kbuf) {
        *a *= b;
    }
    fft.transform(&mut fbuf, true);
    let scale = 1.0 / (m * m * m) as f64;
    let mut out = vec![0.0; vgrid.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[vgrid.index(i, j, k)] = fbuf[(i * m + j) * m + k].re * scale;
            }
        }
    }
    out
}

/// Loss-term kernel `|w|^γ Σ_k w_k B(ŵ·ω_k)`.
pub(crate) fn loss_kernel<'a>(cfg: &'a KernelConfig, quad: &'a SphereQuadrature) -> impl Fn([f64; 3]) -> f64 + 'a {
    move |w: [f64; 3]| {
        let r = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        cfg.potential(r) * quad.angular_sum(cfg.angular, [w[0] / r, w[1] / r, w[2] / r])
    }
}

fn check_profile(f: &[f64], vgrid: &VelocityGrid, what: &str) -> Result<()> {
    if f.len() != vgrid.len() {
        return Err(Error::Shape(format!("{what} has {} values, velocity grid has {}", f.len(), vgrid.len())));
    }
    Ok(())
}

/// `Q(F1, F2)` at every velocity node.
pub fn collide_q(f1: &[f64], f2: &[f64], vgrid: &VelocityGrid, cfg: &KernelConfig) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..vgrid.len()).collect();
    collide_q_at(f1, f2, vgrid, cfg, &all)
}

/// `Q(F1, F2)` at the listed velocity nodes only.
///
/// Gain: `Σ_j Σ_k W w_k B |v-u_j|^γ F1(u') F2(v')` with quadratic-exact
/// interpolation at `u' = u + ((v-u)·ω)ω`, `v' = v - ((v-u)·ω)ω`. Loss:
/// `F2(v) Σ_j W |v-u_j|^γ F1(u_j) Σ_k w_k B`. The coincident pair `u = v`
/// carries no relative velocity and is skipped in both. Antipodal directions
/// give the same post-collision pair, so the gain runs over one hemisphere.
pub fn collide_q_at(
    f1: &[f64],
    f2: &[f64],
    vgrid: &VelocityGrid,
    cfg: &KernelConfig,
    outputs: &[usize],
) -> Result<Vec<f64>> {
    check_profile(f1, vgrid, "first argument")?;
    check_profile(f2, vgrid, "second argument")?;
    if vgrid.n() > FULL_Q_CAP {
        return Err(Error::GridTooLarge { n_v: vgrid.n(), cap: FULL_Q_CAP });
    }
    let quad = SphereQuadrature::from_config(cfg)?;
    let loss = kernel_convolution(f1, vgrid, loss_kernel(cfg, &quad));
    let i1 = Interpolator::new(f1, vgrid);
    let i2 = Interpolator::new(f2, vgrid);
    let w = vgrid.weight();
    let n_nodes = vgrid.len();
    let upper = quad.upper_half();
    let out = outputs
        .par_iter()
        .map(|&i| {
            let v = vgrid.node(i);
            let mut gain = 0.0;
            for j in 0..n_nodes {
                if j == i {
                    continue;
                }
                let u = vgrid.node(j);
                let rel = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
                let r = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
                let pref = w * cfg.potential(r);
                let mut acc = 0.0;
                for (om, q) in quad.dirs[upper.clone()].iter().zip(&quad.weights[upper.clone()]) {
                    let a = rel[0] * om[0] + rel[1] * om[1] + rel[2] * om[2];
                    let b = cfg.angular.eval(a / r);
                    if b == 0.0 {
                        continue;
                    }
                    let up = [u[0] + a * om[0], u[1] + a * om[1], u[2] + a * om[2]];
                    let g1 = i1.at(up);
                    if g1 == 0.0 {
                        continue;
                    }
                    let vp = [v[0] - a * om[0], v[1] - a * om[1], v[2] - a * om[2]];
                    acc += q * b * g1 * i2.at(vp);
                }
                gain += 2.0 * pref * acc;
            }
            gain - f2[i] * loss[i]
        })
        .collect();
    Ok(out)
}

/// Nodes of one fundamental domain of the prism symmetry group shared by the
/// velocity grid and the sphere rule: the closed octant with `v_1 ≥ v_2`.
pub fn symmetry_representatives(vgrid: &VelocityGrid) -> Vec<usize> {
    let n = vgrid.n();
    let h = n / 2;
    let mut out = Vec::new();
    for i in h..n {
        for j in h..=i {
            for k in h..n {
                out.push(vgrid.index(i, j, k));
            }
        }
    }
    out
}

/// Collision frequency `ν(v) = Σ_{j≠i} W |v-u_j|^γ μ(u_j) Σ_k w_k B`.
pub fn collision_frequency(mu: &[f64], vgrid: &VelocityGrid, cfg: &KernelConfig) -> Result<Vec<f64>> {
    check_profile(mu, vgrid, "density")?;
    if let Some(i) = mu.iter().position(|x| !(*x >= 0.0)) {
        return Err(Error::Domain(format!("negative or non-finite density {} at velocity node {i}", mu[i])));
    }
    let quad = SphereQuadrature::from_config(cfg)?;
    Ok(kernel_convolution(mu, vgrid, loss_kernel(cfg, &quad)))
}

/// `ν` at an arbitrary velocity by direct summation over the grid.
pub fn collision_frequency_at(point: [f64; 3], mu: &[f64], vgrid: &VelocityGrid, cfg: &KernelConfig) -> Result<f64> {
    check_profile(mu, vgrid, "density")?;
    let quad = SphereQuadrature::from_config(cfg)?;
    let kernel = loss_kernel(cfg, &quad);
    let mut acc = 0.0;
    for (j, m) in mu.iter().enumerate() {
        let u = vgrid.node(j);
        let w = [point[0] - u[0], point[1] - u[1], point[2] - u[2]];
        if w != [0.0; 3] {
            acc += kernel(w) * m;
        }
    }
    Ok(acc * vgrid.weight())
}

/// Discrete `(mass, momentum, energy)` moments of a velocity field.
pub fn moments5(q: &[f64], vgrid: &VelocityGrid) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (i, x) in q.iter().enumerate() {
        let v = vgrid.node(i);
        out[0] += x;
        out[1] += v[0] * x;
        out[2] += v[1] * x;
        out[3] += v[2] * x;
        out[4] += (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * x;
    }
    out.map(|m| m * vgrid.weight())
}
