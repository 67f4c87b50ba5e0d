use super::{SpatialGrid, Spectral, VelocityGrid};
use crate::error::{Error, Result};

/// Norm selector shared by diagnostics and sweep records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    Linf,
    /// `(Σ ν f² dx dv)^{1/2}` with a supplied collision frequency.
    NuWeightedL2,
    /// `sup (1+|v|²)^β |f|`.
    WeightedLinf(f64),
    /// Fourier-multiplier Sobolev norm of integer order `s ≤ 3`.
    SobolevHs(u32),
}

impl NormKind {
    /// Stable text tag used in CSV output.
    pub fn tag(&self) -> String {
        match self {
            NormKind::L2 => "L2".into(),
            NormKind::Linf => "Linf".into(),
            NormKind::NuWeightedL2 => "NuL2".into(),
            NormKind::WeightedLinf(beta) => format!("WLinf({beta})"),
            NormKind::SobolevHs(s) => format!("H{s}"),
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        let tag = tag.trim();
        match tag {
            "L2" => return Ok(NormKind::L2),
            "Linf" => return Ok(NormKind::Linf),
            "NuL2" => return Ok(NormKind::NuWeightedL2),
            _ => {}
        }
        if let Some(rest) = tag.strip_prefix("WLinf(").and_then(|r| r.strip_suffix(')')) {
            let beta = rest.parse::<f64>().map_err(|e| Error::Config(format!("bad weight exponent in {tag}: {e}")))?;
            return Ok(NormKind::WeightedLinf(beta));
        }
        if let Some(rest) = tag.strip_prefix('H') {
            let s = rest.parse::<u32>().map_err(|e| Error::Config(format!("bad Sobolev order in {tag}: {e}")))?;
            let kind = NormKind::SobolevHs(s);
            kind.validate()?;
            return Ok(kind);
        }
        Err(Error::Config(format!("unknown norm tag {tag:?}")))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            NormKind::SobolevHs(s) if s > 3 => {
                Err(Error::Validation(format!("Sobolev order {s} unsupported; s must be in 0..=3")))
            }
            NormKind::WeightedLinf(beta) if !beta.is_finite() => {
                Err(Error::Validation("weight exponent must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A field together with the grids it lives on.
#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    /// Scalar function of x.
    Spatial { grid: &'a SpatialGrid, values: &'a [f64] },
    /// Function of v at one spatial point.
    Velocity { grid: &'a VelocityGrid, values: &'a [f64] },
    /// Function of (x, v) in velocity-major layout.
    Phase { space: &'a SpatialGrid, velocity: &'a VelocityGrid, values: &'a [f64] },
}

impl FieldRef<'_> {
    fn expected_len(&self) -> usize {
        match self {
            FieldRef::Spatial { grid, .. } => grid.len(),
            FieldRef::Velocity { grid, .. } => grid.len(),
            FieldRef::Phase { space, velocity, .. } => space.len() * velocity.len(),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            FieldRef::Spatial { values, .. } | FieldRef::Velocity { values, .. } | FieldRef::Phase { values, .. } => {
                values
            }
        }
    }
}

/// Smallest admissible weight exponent `(9 - 2γ)/2`.
pub fn min_weight_exponent(gamma: f64) -> f64 {
    (9.0 - 2.0 * gamma) / 2.0
}

/// Discrete norm of a field.
///
/// `nu` is required for [`NormKind::NuWeightedL2`]; it may hold one value per
/// velocity node or one per phase-space node.
pub fn norm(field: FieldRef<'_>, kind: NormKind, nu: Option<&[f64]>) -> Result<f64> {
    kind.validate()?;
    let values = field.values();
    if values.len() != field.expected_len() {
        return Err(Error::Shape(format!("field has {} values, grid expects {}", values.len(), field.expected_len())));
    }
    match kind {
        NormKind::Linf => Ok(values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))),
        NormKind::L2 => {
            let measure = match field {
                FieldRef::Spatial { grid, .. } => grid.cell_volume(),
                FieldRef::Velocity { grid, .. } => grid.weight(),
                FieldRef::Phase { space, velocity, .. } => space.cell_volume() * velocity.weight(),
            };
            Ok((measure * values.iter().map(|v| v * v).sum::<f64>()).sqrt())
        }
        NormKind::NuWeightedL2 => {
            let nu = nu.ok_or_else(|| Error::Validation("the ν-weighted norm needs a collision frequency".into()))?;
            match field {
                FieldRef::Spatial { .. } => {
                    Err(Error::Validation("the ν-weighted norm needs a velocity variable".into()))
                }
                FieldRef::Velocity { grid, .. } => {
                    if nu.len() != grid.len() {
                        return Err(Error::Shape(format!("ν has {} values, expected {}", nu.len(), grid.len())));
                    }
                    let s: f64 = values.iter().zip(nu).map(|(f, w)| w * f * f).sum();
                    Ok((grid.weight() * s).sqrt())
                }
                FieldRef::Phase { space, velocity, .. } => {
                    let nx = space.len();
                    let per_velocity = nu.len() == velocity.len();
                    if !per_velocity && nu.len() != values.len() {
                        return Err(Error::Shape(format!(
                            "ν has {} values, expected {} or {}",
                            nu.len(),
                            velocity.len(),
                            values.len()
                        )));
                    }
                    let s: f64 = values
                        .iter()
                        .enumerate()
                        .map(|(i, f)| {
                            let w = if per_velocity { nu[i / nx] } else { nu[i] };
                            w * f * f
                        })
                        .sum();
                    Ok((space.cell_volume() * velocity.weight() * s).sqrt())
                }
            }
        }
        NormKind::WeightedLinf(beta) => match field {
            FieldRef::Spatial { .. } => Err(Error::Validation("velocity weight needs a velocity variable".into())),
            FieldRef::Velocity { grid, .. } => {
                Ok((0..grid.len()).fold(0.0_f64, |m, i| m.max((1.0 + grid.speed_sq(i)).powf(beta) * values[i].abs())))
            }
            FieldRef::Phase { space, velocity, .. } => {
                let nx = space.len();
                Ok((0..velocity.len()).fold(0.0_f64, |m, iv| {
                    let w = (1.0 + velocity.speed_sq(iv)).powf(beta);
                    let line = &values[iv * nx..(iv + 1) * nx];
                    m.max(w * line.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
                }))
            }
        },
        NormKind::SobolevHs(s) => match field {
            FieldRef::Spatial { grid, values } => Ok(Spectral::new(grid).hs_norm_sq(values, s).sqrt()),
            FieldRef::Velocity { .. } => {
                Err(Error::Validation("Sobolev norms act on the spatial variable only".into()))
            }
            FieldRef::Phase { space, velocity, values } => {
                let sp = Spectral::new(space);
                let nx = space.len();
                let total: f64 = values.chunks(nx).map(|line| sp.hs_norm_sq(line, s)).sum();
                Ok((velocity.weight() * total).sqrt())
            }
        },
    }
}

/// `sup (1+|v|²)^β |h|` after checking `β ≥ (9-2γ)/2`.
pub fn weighted_sup(field: FieldRef<'_>, beta: f64, gamma: f64) -> Result<f64> {
    let bound = min_weight_exponent(gamma);
    if beta < bound {
        return Err(Error::Validation(format!(
            "weight exponent β = {beta} is below the admissible bound (9-2γ)/2 = {bound} for γ = {gamma}"
        )));
    }
    if matches!(field, FieldRef::Spatial { .. }) {
        return Err(Error::Validation("weighted sup needs a velocity variable".into()));
    }
    norm(field, NormKind::WeightedLinf(beta), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Closed-form Fourier sums for `a cos(kx)` on T¹: ‖·‖²_{H^s} = π a² (1+k²)^s.
    fn cosine_hs_oracle(a: f64, k: f64, s: u32) -> f64 {
        (PI * a * a * (1.0 + k * k).powi(s as i32)).sqrt()
    }

    #[test]
    fn constant_field_l2() {
        let g = SpatialGrid::slab(16).unwrap();
        let ones = vec![1.0; 16];
        let v = norm(FieldRef::Spatial { grid: &g, values: &ones }, NormKind::L2, None).unwrap();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn linf_is_max_abs() {
        let vg = VelocityGrid::new(4, 2.0).unwrap();
        let mut vals = vec![0.25; vg.len()];
        vals[17] = -3.5;
        let v = norm(FieldRef::Velocity { grid: &vg, values: &vals }, NormKind::Linf, None).unwrap();
        assert_eq!(v, 3.5);
    }

    #[test]
    fn cosine_sobolev_matches_closed_form() {
        let g = SpatialGrid::slab(32).unwrap();
        let f = g.sample(|x| x[0].cos());
        let l2 = norm(FieldRef::Spatial { grid: &g, values: &f }, NormKind::L2, None).unwrap();
        for s in 0..=3 {
            let hs = norm(FieldRef::Spatial { grid: &g, values: &f }, NormKind::SobolevHs(s), None).unwrap();
            assert!((hs - cosine_hs_oracle(1.0, 1.0, s)).abs() < 1e-12 * hs);
        }
        let h1 = norm(FieldRef::Spatial { grid: &g, values: &f }, NormKind::SobolevHs(1), None).unwrap();
        assert!((h1 - 2f64.sqrt() * l2).abs() < 1e-12);
    }

    #[test]
    fn weighted_sup_thresholds() {
        assert_eq!(min_weight_exponent(1.0), 3.5);
        assert_eq!(min_weight_exponent(-2.0), 6.5);
        let vg = VelocityGrid::new(4, 2.0).unwrap();
        let zeros = vec![0.0; vg.len()];
        let f = FieldRef::Velocity { grid: &vg, values: &zeros };
        assert_eq!(weighted_sup(f, 3.5, 1.0).unwrap(), 0.0);
        assert_eq!(weighted_sup(f, 10.0, -2.0).unwrap(), 0.0);
        match weighted_sup(f, 3.0, 1.0) {
            Err(Error::Validation(msg)) => assert!(msg.contains("3.5")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = SpatialGrid::slab(16).unwrap();
        let short = vec![1.0; 15];
        assert!(matches!(
            norm(FieldRef::Spatial { grid: &g, values: &short }, NormKind::L2, None),
            Err(Error::Shape(_))
        ));
        assert!(NormKind::parse("H4").is_err());
    }

    #[test]
    fn norm_tags_round_trip() {
        for kind in [NormKind::L2, NormKind::Linf, NormKind::NuWeightedL2, NormKind::WeightedLinf(3.5), NormKind::SobolevHs(2)] {
            assert_eq!(NormKind::parse(&kind.tag()).unwrap(), kind);
        }
    }

    fn smooth_field(g: &SpatialGrid, coeffs: &[f64]) -> Vec<f64> {
        g.sample(|x| {
            coeffs.iter().enumerate().map(|(m, c)| c * ((m as f64 + 1.0) * x[0] + 0.3 * m as f64).cos()).sum()
        })
    }

    proptest! {
        #[test]
        fn parseval(coeffs in proptest::collection::vec(-1.0f64..1.0, 1..8)) {
            let g = SpatialGrid::slab(32).unwrap();
            let f = smooth_field(&g, &coeffs);
            let field = FieldRef::Spatial { grid: &g, values: &f };
            let l2 = norm(field, NormKind::L2, None).unwrap();
            let h0 = norm(field, NormKind::SobolevHs(0), None).unwrap();
            prop_assert!((l2 - h0).abs() <= 1e-12 * l2.max(1e-300));
        }

        #[test]
        fn sobolev_monotone(coeffs in proptest::collection::vec(-1.0f64..1.0, 1..8)) {
            let g = SpatialGrid::slab(32).unwrap();
            let f = smooth_field(&g, &coeffs);
            let field = FieldRef::Spatial { grid: &g, values: &f };
            let mut prev = 0.0;
            for s in 0..=3 {
                let v = norm(field, NormKind::SobolevHs(s), None).unwrap();
                prop_assert!(v >= prev * (1.0 - 1e-12));
                prev = v;
            }
        }
    }
}
