//! Binary snapshots: a short text header followed by raw little-endian `f64`.
//!
//! ```text
//! kinlab-snapshot 1
//! quantity F
//! shape 13824 64
//! space 1 64 6.2831853071795862e0
//! velocity 24 6.0000000000000000e0
//! time 1.0000000000000000e0
//! end
//! <product(shape) × 8 bytes>
//! ```
//!
//! `shape` lists dimensions outermost first. Distributions are stored
//! velocity-major, so their shape is `[n_velocity_nodes, n_space_nodes]`;
//! fluid states are `[5, n_space_nodes]` in the order `ρ, u₁, u₂, u₃, T`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{GridConfig, SpatialGrid, VelocityGrid};
use crate::kinetic::Distribution;
use crate::maxwellian::FluidState;

const MAGIC: &str = "kinlab-snapshot 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub quantity: String,
    pub shape: Vec<usize>,
    pub grid: GridConfig,
    pub time: f64,
    pub data: Vec<f64>,
}

fn grid_config(space: &SpatialGrid, velocity: &VelocityGrid) -> GridConfig {
    GridConfig {
        dim_x: space.dim(),
        n_x: space.n(),
        period: space.period(),
        n_v: velocity.n(),
        v_max: velocity.v_max(),
    }
}

impl Snapshot {
    pub fn from_distribution(quantity: &str, f: &Distribution) -> Self {
        Self {
            quantity: quantity.into(),
            shape: vec![f.velocity().len(), f.space().len()],
            grid: grid_config(f.space(), f.velocity()),
            time: f.time(),
            data: f.values().to_vec(),
        }
    }

    pub fn from_fluid(state: &FluidState, space: &SpatialGrid, velocity: &VelocityGrid, time: f64) -> Self {
        Self {
            quantity: "fluid".into(),
            shape: vec![5, state.len()],
            grid: grid_config(space, velocity),
            time,
            data: state.components().concat(),
        }
    }

    pub fn to_distribution(&self) -> Result<Distribution> {
        let space = SpatialGrid::new(self.grid.dim_x, self.grid.n_x, self.grid.period)?;
        let velocity = VelocityGrid::new(self.grid.n_v, self.grid.v_max)?;
        if self.shape != [velocity.len(), space.len()] {
            return Err(Error::Shape(format!("snapshot shape {:?} does not match its grids", self.shape)));
        }
        Ok(Distribution::from_values(&space, &velocity, self.data.clone())?.with_time(self.time))
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        let g = &self.grid;
        let shape: Vec<String> = self.shape.iter().map(|d| d.to_string()).collect();
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "quantity {}", self.quantity)?;
        writeln!(w, "shape {}", shape.join(" "))?;
        writeln!(w, "space {} {} {:.16e}", g.dim_x, g.n_x, g.period)?;
        writeln!(w, "velocity {} {:.16e}", g.n_v, g.v_max)?;
        writeln!(w, "time {:.16e}", self.time)?;
        writeln!(w, "end")?;
        let mut bytes = Vec::with_capacity(8 * self.data.len());
        for x in &self.data {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read(mut r: impl BufRead) -> Result<Self> {
        let bad = |msg: &str| Error::Io(format!("malformed snapshot: {msg}"));
        let mut line = String::new();
        let mut next = |r: &mut dyn BufRead| -> Result<String> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(bad("truncated header"));
            }
            Ok(line.trim_end().to_string())
        };
        if next(&mut r)? != MAGIC {
            return Err(bad("missing magic line"));
        }
        let (mut quantity, mut shape, mut space, mut velocity, mut time) = (None, None, None, None, None);
        loop {
            let l = next(&mut r)?;
            if l == "end" {
                break;
            }
            let (key, rest) = l.split_once(' ').ok_or_else(|| bad(&l))?;
            let fields: Vec<&str> = rest.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&l));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(&l));
            match (key, fields.as_slice()) {
                ("quantity", [q]) => quantity = Some(q.to_string()),
                ("shape", dims) => shape = Some(dims.iter().map(|d| int(d)).collect::<Result<Vec<_>>>()?),
                ("space", [d, n, p]) => space = Some((int(d)?, int(n)?, num(p)?)),
                ("velocity", [n, v]) => velocity = Some((int(n)?, num(v)?)),
                ("time", [t]) => time = Some(num(t)?),
                _ => return Err(bad(&l)),
            }
        }
        let (quantity, shape) = (quantity.ok_or_else(|| bad("no quantity"))?, shape.ok_or_else(|| bad("no shape"))?);
        let ((dim_x, n_x, period), (n_v, v_max)) =
            (space.ok_or_else(|| bad("no space line"))?, velocity.ok_or_else(|| bad("no velocity line"))?);
        let count: usize = shape.iter().product();
        let mut bytes = vec![0u8; 8 * count];
        r.read_exact(&mut bytes).map_err(|_| bad("payload shorter than shape"))?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(bad("payload longer than shape"));
        }
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self {
            quantity,
            shape,
            grid: GridConfig { dim_x, n_x, period, n_v, v_max },
            time: time.ok_or_else(|| bad("no time"))?,
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxwellian::{maxwellian, AcousticState};

    #[test]
    fn distribution_round_trip_is_bitwise() {
        let space = SpatialGrid::slab(8).unwrap();
        let vg = VelocityGrid::new(4, 5.0).unwrap();
        let fluid = AcousticState::single_mode(&space, 1.0, 1.0).perturbed_fluid(0.1);
        let f = maxwellian(&fluid, &space, &vg).unwrap().with_time(0.3);
        let mut buf = Vec::new();
        Snapshot::from_distribution("F", &f).write(&mut buf).unwrap();
        let back = Snapshot::read(buf.as_slice()).unwrap();
        assert_eq!(back.quantity, "F");
        assert_eq!(back.to_distribution().unwrap(), f);

        let mut buf2 = Vec::new();
        Snapshot::from_fluid(&fluid, &space, &vg, 0.3).write(&mut buf2).unwrap();
        let s = Snapshot::read(buf2.as_slice()).unwrap();
        assert_eq!(s.shape, vec![5, 8]);
        assert_eq!(&s.data[..8], fluid.rho.as_slice());
        assert!(s.to_distribution().is_err());
    }

    #[test]
    fn rejects_damaged_files() {
        let space = SpatialGrid::slab(4).unwrap();
        let vg = VelocityGrid::new(4, 3.0).unwrap();
        let mut buf = Vec::new();
        Snapshot::from_distribution("F", &Distribution::zeros(&space, &vg)).write(&mut buf).unwrap();
        assert!(Snapshot::read(&buf[..buf.len() - 3]).is_err());
        let mut longer = buf.clone();
        longer.push(0);
        assert!(Snapshot::read(longer.as_slice()).is_err());
        assert!(Snapshot::read(&buf[1..]).is_err());
    }
}
