use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use super::moments5;
use crate::error::{Error, Result};
use crate::grid::VelocityGrid;

/// Relaxation rate of the BGK operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateModel {
    /// `ν = nu`.
    Constant { nu: f64 },
    /// `ν = scale · Σ W M[F](v) (1 + |v - u|)^γ`, i.e. `ρ (1+|c|)^γ` averaged over the local Maxwellian.
    Hydrodynamic { gamma: f64, scale: f64 },
}

impl Default for RateModel {
    fn default() -> Self {
        RateModel::Constant { nu: 1.0 }
    }
}

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RateModel::Constant { nu } if !(nu > 0.0) => Err(Error::Config(format!("BGK rate must be positive, got {nu}"))),
            RateModel::Hydrodynamic { scale, .. } if !(scale > 0.0) => {
                Err(Error::Config(format!("BGK rate scale must be positive, got {scale}")))
            }
            RateModel::Hydrodynamic { gamma, .. } if !(gamma > -3.0 && gamma <= 1.0) => {
                Err(Error::Config(format!("BGK rate exponent must lie in (-3, 1], got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Rate for a node whose matched Maxwellian is `m`.
    pub fn rate(&self, m: &DiscreteMaxwellian, vgrid: &VelocityGrid) -> f64 {
        match *self {
            RateModel::Constant { nu } => nu,
            RateModel::Hydrodynamic { gamma, scale } => {
                let u = m.velocity();
                let values = m.evaluate(vgrid);
                let sum: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        let v = vgrid.node(i);
                        let c = ((v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2) + (v[2] - u[2]).powi(2)).sqrt();
                        f * (1.0 + c).powf(gamma)
                    })
                    .sum();
                scale * sum * vgrid.weight()
            }
        }
    }
}

/// `exp(a + b·v + c|v|²)` on the grid, `c < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteMaxwellian {
    pub a: f64,
    pub b: [f64; 3],
    pub c: f64,
}

impl DiscreteMaxwellian {
    /// Natural parameters of the continuous Maxwellian `μ(ρ, u, T)`.
    pub fn from_fluid(rho: f64, u: [f64; 3], temp: f64) -> Self {
        let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        Self {
            a: (rho / (2.0 * std::f64::consts::PI * temp).powf(1.5)).ln() - u2 / (2.0 * temp),
            b: u.map(|x| x / temp),
            c: -0.5 / temp,
        }
    }

    pub fn temperature(&self) -> f64 {
        -0.5 / self.c
    }

    pub fn velocity(&self) -> [f64; 3] {
        let t = self.temperature();
        self.b.map(|x| x * t)
    }

    /// Per-axis factors, with `e^a` folded into the first.
    pub fn factors(&self, vgrid: &VelocityGrid) -> [Vec<f64>; 3] {
        let nodes = vgrid.nodes_1d();
        [0, 1, 2].map(|d| {
            let shift = if d == 0 { self.a } else { 0.0 };
            nodes.iter().map(|&x| (shift + self.b[d] * x + self.c * x * x).exp()).collect()
        })
    }

    pub fn evaluate(&self, vgrid: &VelocityGrid) -> Vec<f64> {
        let [fx, fy, fz] = self.factors(vgrid);
        let mut out = Vec::with_capacity(vgrid.len());
        for a in &fx {
            for b in &fy {
                let ab = a * b;
                for c in &fz {
                    out.push(ab * c);
                }
            }
        }
        out
    }
}

/// Newton solver for the discrete Maxwellian with prescribed moments
/// `(Σ W f, Σ W v f, Σ W |v|² f)`.
///
/// The Gaussian factorizes over the axes, so each iteration needs only
/// one-dimensional sums.
#[derive(Debug, Clone)]
pub struct MomentMatcher {
    vgrid: VelocityGrid,
    max_iter: usize,
}

impl MomentMatcher {
    pub fn new(vgrid: &VelocityGrid) -> Self {
        Self { vgrid: vgrid.clone(), max_iter: 60 }
    }

    pub fn vgrid(&self) -> &VelocityGrid {
        &self.vgrid
    }

    /// `(mass, momentum, Σ|v|²)` of a profile.
    pub fn moments(&self, f: &[f64]) -> [f64; 5] {
        moments5(f, &self.vgrid)
    }

    /// Moments of `exp(a + b·v + c|v|²)` and their Jacobian in `(a, b, c)`.
    fn moments_and_jacobian(&self, m: &DiscreteMaxwellian) -> ([f64; 5], Matrix5<f64>) {
        let nodes = self.vgrid.nodes_1d();
        // s[d][p] = Σ_i x_i^p exp(b_d x_i + c x_i²)
        let mut s = [[0.0; 5]; 3];
        for d in 0..3 {
            for &x in nodes {
                let e = (m.b[d] * x + m.c * x * x).exp();
                let mut xp = e;
                for p in 0..5 {
                    s[d][p] += xp;
                    xp *= x;
                }
            }
        }
        let pre = self.vgrid.weight() * m.a.exp();
        let others = |d: usize| -> (usize, usize) { ((d + 1) % 3, (d + 2) % 3) };
        let mut mom = [0.0; 5];
        let mut jac = Matrix5::zeros();
        mom[0] = pre * s[0][0] * s[1][0] * s[2][0];
        for d in 0..3 {
            let (e, f) = others(d);
            mom[d + 1] = pre * s[d][1] * s[e][0] * s[f][0];
            mom[4] += pre * s[d][2] * s[e][0] * s[f][0];
        }
        jac[(0, 0)] = mom[0];
        for d in 0..3 {
            let (e, f) = others(d);
            jac[(0, d + 1)] = mom[d + 1];
            jac[(d + 1, d + 1)] = pre * s[d][2] * s[e][0] * s[f][0];
            let cross = pre * s[d][1] * s[e][1] * s[f][0];
            jac[(d + 1, e + 1)] = cross;
            jac[(e + 1, d + 1)] = cross;
            jac[(d + 1, 4)] = pre * (s[d][3] * s[e][0] * s[f][0] + s[d][1] * (s[e][2] * s[f][0] + s[f][2] * s[e][0]));
        }
        jac[(0, 4)] = mom[4];
        let mut q = 0.0;
        for d in 0..3 {
            let (e, f) = others(d);
            q += s[d][4] * s[e][0] * s[f][0] + 2.0 * s[d][2] * s[e][2] * s[f][0];
        }
        jac[(4, 4)] = pre * q;
        for c in 0..5 {
            jac[(4, c)] = jac[(c, 4)];
            jac[(c, 0)] = jac[(0, c)];
        }
        (mom, jac)
    }

    /// Discrete Maxwellian whose moments equal `target`.
    pub fn fit(&self, target: [f64; 5]) -> Result<DiscreteMaxwellian> {
        let rho = target[0];
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("non-positive mass {rho}")));
        }
        let u = [target[1] / rho, target[2] / rho, target[3] / rho];
        let temp = (target[4] / rho - (u[0] * u[0] + u[1] * u[1] + u[2] * u[2])) / 3.0;
        if !(temp > 0.0) {
            return Err(Error::Domain(format!("non-positive temperature {temp} from moments")));
        }
        let scale = rho * (1.0 + temp + u.iter().map(|x| x.abs()).sum::<f64>());
        let mut m = DiscreteMaxwellian::from_fluid(rho, u, temp);
        let mut resid = f64::INFINITY;
        for _ in 0..self.max_iter {
            let (mom, jac) = self.moments_and_jacobian(&m);
            let r = Vector5::from_fn(|k, _| target[k] - mom[k]);
            let new_resid = r.amax() / scale;
            if new_resid <= 4.0 * f64::EPSILON || (new_resid >= resid && new_resid < 1e-12) {
                resid = new_resid.min(resid);
                break;
            }
            resid = new_resid;
            let step = jac
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Domain("singular moment Jacobian".into()))?;
            m.a += step[0];
            for d in 0..3 {
                m.b[d] += step[d + 1];
            }
            m.c += step[4];
            if !(m.c < 0.0) || !m.a.is_finite() {
                return Err(Error::Domain("moment matching left the Gaussian family".into()));
            }
        }
        if !(resid < 1e-10) {
            return Err(Error::Domain(format!("moment matching did not converge (relative residual {resid:.3e})")));
        }
        Ok(m)
    }
}

/// `ν (M[F] - F)` for one velocity profile.
pub fn bgk_operator(f: &[f64], vgrid: &VelocityGrid, rate: &RateModel) -> Result<Vec<f64>> {
    if f.len() != vgrid.len() {
        return Err(Error::Shape(format!("profile has {} values, grid has {}", f.len(), vgrid.len())));
    }
    rate.validate()?;
    let matcher = MomentMatcher::new(vgrid);
    let m = matcher.fit(matcher.moments(f))?;
    let nu = rate.rate(&m, vgrid);
    Ok(m.evaluate(vgrid).iter().zip(f).map(|(a, b)| nu * (a - b)).collect())
}
