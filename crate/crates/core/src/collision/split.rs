use std::f64::consts::PI;

use rayon::prelude::*;

use super::{Interpolator, KernelConfig, SphereQuadrature, FULL_Q_CAP};
use crate::error::{Error, Result};
use crate::grid::VelocityGrid;

/// `χ_m(r)`: 1 on `[0, m]`, a cosine taper on `[m, 2m]`, 0 beyond.
pub fn cutoff(r: f64, m: f64) -> f64 {
    if r <= m {
        1.0
    } else if r >= 2.0 * m {
        0.0
    } else {
        0.5 * (1.0 + (PI * (r - m) / m).cos())
    }
}

/// Compact part `K = K1 - K2` of `L_M g = ν g + K g`, with
/// `L_M g = -μ_M^{-1/2}[Q(μ, √μ_M g) + Q(√μ_M g, μ)]`, discretized exactly as
/// [`collide_q`](super::collide_q) discretizes `Q`.
struct KernelRows<'a> {
    vgrid: &'a VelocityGrid,
    cfg: &'a KernelConfig,
    quad: SphereQuadrature,
    mu: &'a [f64],
    sqrt_mm: Vec<f64>,
}

impl<'a> KernelRows<'a> {
    fn new(mu: &'a [f64], mu_m: &[f64], vgrid: &'a VelocityGrid, cfg: &'a KernelConfig) -> Result<Self> {
        for (name, f) in [("density", mu), ("comparison Maxwellian", mu_m)] {
            if f.len() != vgrid.len() {
                return Err(Error::Shape(format!("{name} has {} values, grid has {}", f.len(), vgrid.len())));
            }
        }
        if let Some(i) = mu_m.iter().position(|x| !(*x > 0.0)) {
            return Err(Error::Domain(format!("comparison Maxwellian must be positive, got {} at node {i}", mu_m[i])));
        }
        let quad = SphereQuadrature::from_config(cfg)?;
        Ok(Self { vgrid, cfg, quad, mu, sqrt_mm: mu_m.iter().map(|x| x.sqrt()).collect() })
    }

    /// Calls `sink(node, coefficient, χ)` for every contribution to row `a`;
    /// contributions with `|v-u| ≥ radius` are skipped.
    fn visit(&self, a: usize, m: Option<f64>, mut sink: impl FnMut(usize, f64, f64)) {
        let vg = self.vgrid;
        let interp = Interpolator::new(self.mu, vg);
        let v = vg.node(a);
        let w = vg.weight();
        let inv = 1.0 / self.sqrt_mm[a];
        let mu_v = self.mu[a];
        let reach = m.map(|m| 2.0 * m).unwrap_or(f64::INFINITY);
        let n = vg.n();
        let centre = vg.unindex(a);
        let span = if reach.is_finite() { (reach / vg.h()).ceil() as usize } else { n };
        let range = |d: usize| centre[d].saturating_sub(span)..(centre[d] + span + 1).min(n);
        let partners = range(0).flat_map(|i| range(1).flat_map(move |j| range(2).map(move |k| (i * n + j) * n + k)));
        for j in partners {
            if j == a {
                continue;
            }
            let u = vg.node(j);
            let rel = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
            let r = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
            if r >= reach {
                continue;
            }
            let chi = m.map(|m| cutoff(r, m)).unwrap_or(1.0);
            let pref = w * self.cfg.potential(r) * inv;
            let upper = self.quad.upper_half();
            for (om, q) in self.quad.dirs()[upper.clone()].iter().zip(&self.quad.weights()[upper]) {
                let s = rel[0] * om[0] + rel[1] * om[1] + rel[2] * om[2];
                let b = self.cfg.angular.eval(s / r);
                if b == 0.0 {
                    continue;
                }
                let c = 2.0 * pref * q * b;
                sink(j, c * self.sqrt_mm[j] * mu_v, chi);
                let up = [u[0] + s * om[0], u[1] + s * om[1], u[2] + s * om[2]];
                let vp = [v[0] - s * om[0], v[1] - s * om[1], v[2] - s * om[2]];
                let mu_up = interp.at(up);
                if mu_up != 0.0 {
                    interp.for_each(vp, |node, wt| sink(node, -c * mu_up * wt * self.sqrt_mm[node], chi));
                }
                let mu_vp = interp.at(vp);
                if mu_vp != 0.0 {
                    interp.for_each(up, |node, wt| sink(node, -c * mu_vp * wt * self.sqrt_mm[node], chi));
                }
            }
        }
    }
}

/// `(K^m g, K^c g)` at every velocity node, `K^c = K - K^m`.
pub fn split_k(
    g: &[f64],
    mu: &[f64],
    mu_m: &[f64],
    m: f64,
    vgrid: &VelocityGrid,
    cfg: &KernelConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(m > 0.0) {
        return Err(Error::Config(format!("cutoff radius must be positive, got {m}")));
    }
    if g.len() != vgrid.len() {
        return Err(Error::Shape(format!("field has {} values, grid has {}", g.len(), vgrid.len())));
    }
    if vgrid.n() > FULL_Q_CAP {
        return Err(Error::GridTooLarge { n_v: vgrid.n(), cap: FULL_Q_CAP });
    }
    let rows = KernelRows::new(mu, mu_m, vgrid, cfg)?;
    let pairs: Vec<(f64, f64)> = (0..vgrid.len())
        .into_par_iter()
        .map(|a| {
            let (mut near, mut full) = (0.0, 0.0);
            rows.visit(a, None, |node, c, _| {
                full += c * g[node];
            });
            rows.visit(a, Some(m), |node, c, chi| {
                near += chi * c * g[node];
            });
            (near, full)
        })
        .collect();
    let near: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let far: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    Ok((near, far))
}

/// Rows of `K` or `K^m` at selected output nodes, stored sparsely.
///
/// `max_i Σ_j |K_ij|` over the rows is the exact `∞ → ∞` operator norm of
/// the discrete operator restricted to those outputs.
#[derive(Debug, Clone)]
pub struct KRows {
    outputs: Vec<usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl KRows {
    /// `m = None` gives the rows of the full `K`.
    pub fn compute(
        mu: &[f64],
        mu_m: &[f64],
        m: Option<f64>,
        vgrid: &VelocityGrid,
        cfg: &KernelConfig,
        outputs: &[usize],
    ) -> Result<Self> {
        if let Some(m) = m {
            if !(m > 0.0) {
                return Err(Error::Config(format!("cutoff radius must be positive, got {m}")));
            }
        }
        if let Some(&bad) = outputs.iter().find(|&&i| i >= vgrid.len()) {
            return Err(Error::Shape(format!("output node {bad} outside a grid of {} nodes", vgrid.len())));
        }
        let kr = KernelRows::new(mu, mu_m, vgrid, cfg)?;
        let n = vgrid.n();
        // Entries lie within the cutoff reach of the output, widened by the
        // interpolation stencil, so each row accumulates into a local box.
        let span = m.map(|m| (2.0 * m / vgrid.h()).ceil() as usize + 2).unwrap_or(n);
        let rows = outputs
            .par_iter()
            .map(|&a| {
                let c = vgrid.unindex(a);
                let lo = c.map(|x| x.saturating_sub(span));
                let hi = c.map(|x| (x + span + 1).min(n));
                let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
                let mut acc = vec![0.0; ext[0] * ext[1] * ext[2]];
                kr.visit(a, m, |node, coef, chi| {
                    let (i, j, k) = (node / (n * n), (node / n) % n, node % n);
                    acc[((i - lo[0]) * ext[1] + (j - lo[1])) * ext[2] + (k - lo[2])] += chi * coef;
                });
                let mut row = Vec::new();
                for (l, &x) in acc.iter().enumerate() {
                    if x != 0.0 {
                        let (i, j, k) = (l / (ext[1] * ext[2]), (l / ext[2]) % ext[1], l % ext[2]);
                        row.push((vgrid.index(i + lo[0], j + lo[1], k + lo[2]), x));
                    }
                }
                row
            })
            .collect();
        Ok(Self { outputs: outputs.to_vec(), rows })
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Merged `(node, coefficient)` entries of each row.
    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// `(K g)` at the output nodes.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, c)| c * g[j]).sum()).collect()
    }

    pub fn abs_row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1.abs()).sum()).collect()
    }

    /// `max_i Σ_j |K_ij|`.
    pub fn inf_norm(&self) -> f64 {
        self.abs_row_sums().into_iter().fold(0.0, f64::max)
    }

    /// `max_i Σ_j |K_ij| / ν_i`: the smallest `C` with `|K g| ≤ C ν ‖g‖_∞` at the outputs.
    pub fn relative_norm(&self, nu: &[f64]) -> f64 {
        self.abs_row_sums().iter().zip(&self.outputs).map(|(s, &i)| s / nu[i]).fold(0.0, f64::max)
    }
}
