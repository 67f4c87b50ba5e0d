use crate::error::{Error, Result};
use crate::grid::{norm, FieldRef, NormKind, SpatialGrid, VelocityGrid};

/// Phase-space density sampled on a spatial × velocity grid.
///
/// Values are stored velocity-major: `values[v * n_space + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    space: SpatialGrid,
    velocity: VelocityGrid,
    values: Vec<f64>,
    time: f64,
}

impl Distribution {
    pub fn zeros(space: &SpatialGrid, velocity: &VelocityGrid) -> Self {
        Self { space: space.clone(), velocity: velocity.clone(), values: vec![0.0; space.len() * velocity.len()], time: 0.0 }
    }

    pub fn from_values(space: &SpatialGrid, velocity: &VelocityGrid, values: Vec<f64>) -> Result<Self> {
        let expected = space.len() * velocity.len();
        if values.len() != expected {
            return Err(Error::Shape(format!("distribution has {} values, grids expect {expected}", values.len())));
        }
        Ok(Self { space: space.clone(), velocity: velocity.clone(), values, time: 0.0 })
    }

    /// Builds `F(x, v) = f(x_index, v_index)`.
    pub fn from_fn(space: &SpatialGrid, velocity: &VelocityGrid, f: impl Fn(usize, usize) -> f64) -> Self {
        let nx = space.len();
        let values = (0..velocity.len() * nx).map(|i| f(i % nx, i / nx)).collect();
        Self { space: space.clone(), velocity: velocity.clone(), values, time: 0.0 }
    }

    /// Spatially homogeneous distribution repeating one velocity profile.
    pub fn homogeneous(space: &SpatialGrid, velocity: &VelocityGrid, profile: &[f64]) -> Result<Self> {
        if profile.len() != velocity.len() {
            return Err(Error::Shape(format!("profile has {} values, expected {}", profile.len(), velocity.len())));
        }
        Ok(Self::from_fn(space, velocity, |_, iv| profile[iv]))
    }

    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    pub fn velocity(&self) -> &VelocityGrid {
        &self.velocity
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn get(&self, ix: usize, iv: usize) -> f64 {
        self.values[iv * self.space.len() + ix]
    }

    /// The spatial line owned by velocity node `iv`.
    pub fn line(&self, iv: usize) -> &[f64] {
        let nx = self.space.len();
        &self.values[iv * nx..(iv + 1) * nx]
    }

    /// Velocity profile at spatial node `ix`.
    pub fn slice_at(&self, ix: usize) -> Vec<f64> {
        let nx = self.space.len();
        (0..self.velocity.len()).map(|iv| self.values[iv * nx + ix]).collect()
    }

    pub fn set_slice(&mut self, ix: usize, profile: &[f64]) {
        let nx = self.space.len();
        for (iv, p) in profile.iter().enumerate() {
            self.values[iv * nx + ix] = *p;
        }
    }

    fn check_same_grids(&self, other: &Self) -> Result<()> {
        if self.space != other.space || self.velocity != other.velocity {
            return Err(Error::Shape("distributions live on different grids".into()));
        }
        Ok(())
    }

    /// `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_same_grids(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { values, ..self.clone() })
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Result<Self> {
        self.check_same_grids(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        Ok(Self { values, ..self.clone() })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { values: self.values.iter().map(|x| a * x).collect(), ..self.clone() }
    }

    pub fn field(&self) -> FieldRef<'_> {
        FieldRef::Phase { space: &self.space, velocity: &self.velocity, values: &self.values }
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        norm(self.field(), kind, None)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Spatial integrals of the velocity moments `(1, v, |v|²)` in that order.
    pub fn total_moments(&self) -> [f64; 5] {
        let nx = self.space.len();
        let measure = self.space.cell_volume() * self.velocity.weight();
        let mut out = [0.0; 5];
        for iv in 0..self.velocity.len() {
            let v = self.velocity.node(iv);
            let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let s: f64 = self.values[iv * nx..(iv + 1) * nx].iter().sum();
            out[0] += s;
            out[1] += v[0] * s;
            out[2] += v[1] * s;
            out[3] += v[2] * s;
            out[4] += v2 * s;
        }
        out.map(|m| m * measure)
    }
}
