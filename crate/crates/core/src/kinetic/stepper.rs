use num_complex::Complex64;
use rayon::prelude::*;

use super::{Backend, Distribution, ScalingConfig};
use crate::collision::{collide_q, collision_frequency, MomentMatcher, RateModel};
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, Spectral, VelocityGrid};

/// Exact free streaming `F(x, v) ← F(x - v t, v)` by Fourier phase shifts.
///
/// Only the first `dim` velocity components move the field. Nyquist modes are
/// left in place so that the result stays real.
pub(crate) struct Transport {
    sp: Spectral,
    space: SpatialGrid,
    modes: Vec<[usize; 3]>,
}

impl Transport {
    pub(crate) fn new(space: &SpatialGrid) -> Self {
        let modes = (0..space.len()).map(|i| space.unindex(i)).collect();
        Self { sp: Spectral::new(space), space: space.clone(), modes }
    }

    pub(crate) fn apply(&self, values: &mut [f64], vgrid: &VelocityGrid, t: f64) {
        if t == 0.0 {
            return;
        }
        let n = self.space.n();
        let dim = self.space.dim();
        let nv = vgrid.n();
        // table[(a * nv + i) * n + m] = exp(-i k_m v_i t)
        let mut table = vec![Complex64::new(1.0, 0.0); dim * nv * n];
        for a in 0..dim {
            for (i, v) in vgrid.nodes_1d().iter().enumerate() {
                for m in 0..n {
                    if !self.sp.is_nyquist(m) {
                        let phase = -self.sp.wavenumber(m) * v * t;
                        table[(a * nv + i) * n + m] = Complex64::from_polar(1.0, phase);
                    }
                }
            }
        }
        let nx = self.space.len();
        let scale = 1.0 / nx as f64;
        values.par_chunks_mut(nx).enumerate().for_each(|(iv, line)| {
            let vi = vgrid.unindex(iv);
            let mut buf: Vec<Complex64> = line.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            self.sp.transform(&mut buf, false);
            for (c, m) in buf.iter_mut().zip(&self.modes) {
                let mut f = Complex64::new(scale, 0.0);
                for a in 0..dim {
                    f *= table[(a * nv + vi[a]) * n + m[a]];
                }
                *c *= f;
            }
            self.sp.transform(&mut buf, true);
            for (x, c) in line.iter_mut().zip(&buf) {
                *x = c.re;
            }
        });
    }
}

/// Reusable state for repeated kinetic steps on fixed grids.
pub(crate) struct Stepper {
    transport: Transport,
    matcher: MomentMatcher,
    space: SpatialGrid,
    vgrid: VelocityGrid,
    scaling: ScalingConfig,
}

impl Stepper {
    pub(crate) fn new(space: &SpatialGrid, vgrid: &VelocityGrid, scaling: &ScalingConfig) -> Result<Self> {
        scaling.validate()?;
        Ok(Self {
            transport: Transport::new(space),
            matcher: MomentMatcher::new(vgrid),
            space: space.clone(),
            vgrid: vgrid.clone(),
            scaling: scaling.clone(),
        })
    }

    pub(crate) fn transport(&self, values: &mut [f64], t: f64) {
        self.transport.apply(values, &self.vgrid, t);
    }

    fn slices(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let nx = self.space.len();
        (0..nx).map(|ix| (0..self.vgrid.len()).map(|iv| values[iv * nx + ix]).collect()).collect()
    }

    fn scatter(&self, values: &mut [f64], slices: Vec<Vec<f64>>) {
        let nx = self.space.len();
        for (ix, s) in slices.into_iter().enumerate() {
            for (iv, x) in s.into_iter().enumerate() {
                values[iv * nx + ix] = x;
            }
        }
    }

    /// Largest collision rate over the spatial nodes of `values`.
    pub(crate) fn max_rate(&self, values: &[f64]) -> Result<f64> {
        let slices = self.slices(values);
        let rates: Vec<f64> = match self.scaling.backend {
            Backend::Bgk => slices
                .par_iter()
                .map(|s| {
                    let m = self.matcher.fit(self.matcher.moments(s))?;
                    Ok(self.scaling.rate.rate(&m, &self.vgrid))
                })
                .collect::<Result<_>>()?,
            Backend::FullQ => slices
                .iter()
                .map(|s| {
                    let nu = collision_frequency(&s.iter().map(|x| x.max(0.0)).collect::<Vec<_>>(), &self.vgrid, &self.scaling.kernel)?;
                    Ok(nu.into_iter().fold(0.0, f64::max))
                })
                .collect::<Result<_>>()?,
        };
        Ok(rates.into_iter().fold(0.0, f64::max))
    }

    /// Collision substep over time `dt` for the scaled operator `Q/ε`.
    pub(crate) fn collide(&self, values: &mut [f64], dt: f64) -> Result<()> {
        let eps = self.scaling.epsilon;
        let slices = self.slices(values);
        let out: Vec<Vec<f64>> = match self.scaling.backend {
            Backend::Bgk => slices
                .into_par_iter()
                .map(|s| relax_bgk(&s, &self.matcher, &self.scaling.rate, dt / eps))
                .collect::<Result<_>>()?,
            Backend::FullQ => {
                let admissible = self.scaling.c_stab * eps / self.max_rate(values)?;
                if dt > admissible * (1.0 + 1e-12) {
                    return Err(Error::Stability { dt, admissible });
                }
                let cfg = &self.scaling.kernel;
                let h = dt / eps;
                slices
                    .into_iter()
                    .map(|s| {
                        let q1 = collide_q(&s, &s, &self.vgrid, cfg)?;
                        let s1: Vec<f64> = s.iter().zip(&q1).map(|(f, q)| f + h * q).collect();
                        let q2 = collide_q(&s1, &s1, &self.vgrid, cfg)?;
                        Ok(s.iter().zip(s1.iter().zip(&q2)).map(|(f, (g, q))| 0.5 * (f + g + h * q)).collect())
                    })
                    .collect::<Result<_>>()?
            }
        };
        self.scatter(values, out);
        Ok(())
    }
}

/// `F ← M + e^{-ν s}(F - M)` with `M` the moment-matched Maxwellian of `F`.
fn relax_bgk(f: &[f64], matcher: &MomentMatcher, rate: &RateModel, s: f64) -> Result<Vec<f64>> {
    let m = matcher.fit(matcher.moments(f))?;
    let decay = (-rate.rate(&m, matcher.vgrid()) * s).exp();
    let target = m.evaluate(matcher.vgrid());
    Ok(f.iter().zip(&target).map(|(x, mx)| mx + decay * (x - mx)).collect())
}

/// One Strang step: half transport, collision over `dt`, half transport.
///
/// The full collision backend refuses steps above `c_stab · ε / max ν` and
/// reports the admissible step.
pub fn step_kinetic(f: &Distribution, dt: f64, scaling: &ScalingConfig) -> Result<Distribution> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let stepper = Stepper::new(f.space(), f.velocity(), scaling)?;
    let mut values = f.values().to_vec();
    stepper.transport(&mut values, 0.5 * dt);
    stepper.collide(&mut values, dt)?;
    stepper.transport(&mut values, 0.5 * dt);
    Ok(Distribution::from_values(f.space(), f.velocity(), values)?.with_time(f.time() + dt))
}

/// Conservation and positivity record of a kinetic run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub steps: usize,
    pub dt: f64,
    /// Largest relative drift of `(mass, momentum, energy)` seen after any step;
    /// momentum drift is measured against the initial mass.
    pub max_drift: [f64; 3],
    pub min_value: f64,
}

#[derive(Debug, Clone)]
pub struct KineticRun {
    pub snapshots: Vec<Distribution>,
    pub log: RunLog,
}

/// Integrates from `init` to each of `sample_times` (sorted, in `[0, τ]`).
///
/// The step is `min(max_dt, dt_factor · ε / max ν)` with `ν` the initial
/// collision rate (for the full operator, `c_stab` replaces `dt_factor` when
/// it is smaller). Consecutive half transports are merged, so a run of `k`
/// Strang steps costs `k + 1` transports.
pub fn run_kinetic(init: &Distribution, tau: f64, scaling: &ScalingConfig, sample_times: &[f64]) -> Result<KineticRun> {
    if !(tau >= 0.0) {
        return Err(Error::Config(format!("horizon must be non-negative, got {tau}")));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.iter().any(|t| !(*t >= 0.0 && *t <= tau)) {
        return Err(Error::Config(format!("sample times must be sorted within [0, {tau}]")));
    }
    let stepper = Stepper::new(init.space(), init.velocity(), scaling)?;
    let nu = stepper.max_rate(init.values())?;
    let mut factor = scaling.dt_factor;
    if scaling.backend == Backend::FullQ {
        factor = factor.min(scaling.c_stab);
    }
    let dt_nominal = scaling.max_dt.min(factor * scaling.epsilon / nu);

    let m0 = init.total_moments();
    let mut log = RunLog { steps: 0, dt: dt_nominal, max_drift: [0.0; 3], min_value: init.min_value() };
    let mut values = init.values().to_vec();
    let mut snapshots = Vec::with_capacity(sample_times.len());
    let mut t = 0.0;
    for &stop in sample_times {
        let remaining = stop - t;
        if remaining > 0.0 {
            let k = (remaining / dt_nominal).ceil().max(1.0) as usize;
            let dt = remaining / k as f64;
            stepper.transport(&mut values, 0.5 * dt);
            for step in 0..k {
                stepper.collide(&mut values, dt)?;
                let shift = if step + 1 == k { 0.5 * dt } else { dt };
                stepper.transport(&mut values, shift);
                log.steps += 1;
                let snap = Distribution::from_values(init.space(), init.velocity(), values.clone())?;
                track(&mut log, &m0, &snap);
            }
            t = stop;
        }
        snapshots.push(Distribution::from_values(init.space(), init.velocity(), values.clone())?.with_time(stop));
    }
    Ok(KineticRun { snapshots, log })
}

fn track(log: &mut RunLog, m0: &[f64; 5], f: &Distribution) {
    let m = f.total_moments();
    let mass = m0[0].abs().max(f64::MIN_POSITIVE);
    let mom = ((m[1] - m0[1]).powi(2) + (m[2] - m0[2]).powi(2) + (m[3] - m0[3]).powi(2)).sqrt() / mass;
    let energy = (m[4] - m0[4]).abs() / m0[4].abs().max(f64::MIN_POSITIVE);
    let drift = [(m[0] - m0[0]).abs() / mass, mom, energy];
    for k in 0..3 {
        log.max_drift[k] = log.max_drift[k].max(drift[k]);
    }
    log.min_value = log.min_value.min(f.min_value());
}
