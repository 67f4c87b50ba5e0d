use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::config::{Quantity, SweepConfig};
use super::snapshot::Snapshot;
use crate::error::{Error, Result};
use crate::fluid::{linearization_defect, solve_acoustic, solve_euler, EulerTrajectory};
use crate::grid::{build_grids, NormKind, SpatialGrid, VelocityGrid};
use crate::kinetic::{extract_fluctuation, remainder_diagnostics, run_kinetic, KineticRun, ScalingConfig};
use crate::maxwellian::{
    check_bounds, expansion_defect_field, limit_profile_g, maxwellian, AcousticState, FluidState,
};

pub const CSV_HEADER: [&str; 7] = ["epsilon", "delta", "t", "quantity", "norm", "value", "status"];

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(String),
}

impl Status {
    pub fn tag(&self) -> String {
        match self {
            Status::Ok => "ok".into(),
            Status::Failed(reason) => format!("failed: {reason}"),
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        if tag == "ok" {
            Ok(Status::Ok)
        } else if let Some(reason) = tag.strip_prefix("failed: ") {
            Ok(Status::Failed(reason.into()))
        } else {
            Err(Error::Io(format!("unknown status {tag:?}")))
        }
    }
}

/// One measurement. Successful rows carry a finite non-negative value;
/// failed rows carry NaN and the reason in `status`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub delta: f64,
    pub t: f64,
    pub quantity: String,
    pub norm: String,
    pub value: f64,
    pub status: Status,
}

impl SweepRecord {
    pub fn ok(epsilon: f64, delta: f64, t: f64, quantity: &str, norm: &str, value: f64) -> Self {
        Self { epsilon, delta, t, quantity: quantity.into(), norm: norm.into(), value, status: Status::Ok }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(records: &[SweepRecord], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    out.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        out.write_record([
            fmt_f64(r.epsilon),
            fmt_f64(r.delta),
            fmt_f64(r.t),
            r.quantity.clone(),
            r.norm.clone(),
            fmt_f64(r.value),
            r.status.tag(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv_file(records: &[SweepRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(records, std::io::BufWriter::new(file))
}

pub fn read_csv(r: impl Read) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let header = rdr.headers().map_err(io)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Io(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(io)?;
        let num = |k: usize| {
            row[k].parse::<f64>().map_err(|e| Error::Io(format!("column {}: {:?}: {e}", CSV_HEADER[k], &row[k])))
        };
        out.push(SweepRecord {
            epsilon: num(0)?,
            delta: num(1)?,
            t: num(2)?,
            quantity: row[3].into(),
            norm: row[4].into(),
            value: num(5)?,
            status: Status::parse(&row[6])?,
        });
    }
    Ok(out)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(file))
}

/// Runs every `(ε, δ)` pair and returns records in config order: pair, then
/// sample time, then quantity, then norm. Pairs run in parallel; a failed
/// sub-run marks the rows that depend on it and the sweep carries on.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let (space, vgrid) = build_grids(&cfg.grid)?;
    let init = cfg.initial.acoustic(&space);
    let norms = cfg.parsed_norms()?;
    let rows: Vec<Vec<SweepRecord>> = cfg
        .pairs()
        .par_iter()
        .map(|&(eps, delta)| run_pair(cfg, &space, &vgrid, &init, &norms, eps, delta))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

struct PairRuns {
    euler: Option<Result<EulerTrajectory>>,
    acoustic: Result<Vec<AcousticState>>,
    kinetic: Option<Result<KineticRun>>,
    t_m: Option<Result<f64>>,
}

fn run_pair(
    cfg: &SweepConfig,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
    init: &AcousticState,
    norms: &[NormKind],
    eps: f64,
    delta: f64,
) -> Vec<SweepRecord> {
    let times = &cfg.sample_times;
    let fluid0 = init.perturbed_fluid(delta);
    let scaling = cfg.kinetic.scaling(eps, delta);
    let need = |p: fn(Quantity) -> bool| cfg.quantities.iter().any(|q| p(*q));

    let euler = need(Quantity::needs_euler)
        .then(|| solve_euler(&fluid0, space, &cfg.fluid.run_config(delta, cfg.tau), times));
    let acoustic = times.iter().map(|&t| solve_acoustic(init, space, t)).collect();
    let kinetic = need(Quantity::needs_kinetic).then(|| {
        let f0 = maxwellian(&fluid0, space, vgrid)?;
        let run = run_kinetic(&f0, cfg.tau, &scaling, times)?;
        if let Some(dir) = &cfg.snapshot_dir {
            std::fs::create_dir_all(dir)?;
            for snap in &run.snapshots {
                let name = format!("F_eps{eps:e}_delta{delta:e}_t{:e}.snap", snap.time());
                let file = std::fs::File::create(dir.join(name))?;
                Snapshot::from_distribution("F", snap).write(std::io::BufWriter::new(file))?;
            }
        }
        Ok(run)
    });
    // T_M from the sampled trajectory, which includes the initial state.
    let t_m = match (&euler, need(Quantity::needs_bounds)) {
        (Some(Ok(traj)), true) => Some((|| {
            let states: Vec<&FluidState> = std::iter::once(&fluid0).chain(&traj.states).collect();
            let t_min = states.iter().map(|s| s.min_temperature()).fold(f64::INFINITY, f64::min);
            let t_m = cfg.t_m_factor * t_min;
            check_bounds(&states, t_m, vgrid)?;
            Ok(t_m)
        })()),
        _ => None,
    };
    let runs = PairRuns { euler, acoustic, kinetic, t_m };

    let mut out = Vec::new();
    for (ti, &t) in times.iter().enumerate() {
        for &q in &cfg.quantities {
            for &norm in norms.iter().filter(|n| q.accepts(**n)) {
                let measured = measure(&runs, &scaling, space, vgrid, ti, q, norm);
                let (value, status) = match measured {
                    Ok(v) if v.is_finite() && v >= 0.0 => (v, Status::Ok),
                    Ok(v) => (f64::NAN, Status::Failed(format!("non-finite or negative value {v}"))),
                    Err(e) => (f64::NAN, Status::Failed(e.to_string())),
                };
                out.push(SweepRecord { epsilon: eps, delta, t, quantity: q.id().into(), norm: norm.tag(), value, status });
            }
        }
    }
    out
}

fn take<'a, T>(r: &'a Option<Result<T>>, what: &str) -> Result<&'a T> {
    match r {
        Some(Ok(x)) => Ok(x),
        Some(Err(e)) => Err(e.clone()),
        None => Err(Error::Config(format!("{what} was not run"))),
    }
}

fn measure(
    runs: &PairRuns,
    scaling: &ScalingConfig,
    space: &SpatialGrid,
    vgrid: &VelocityGrid,
    ti: usize,
    q: Quantity,
    norm: NormKind,
) -> Result<f64> {
    let delta = scaling.delta;
    let euler = || take(&runs.euler, "Euler solve").map(|traj| &traj.states[ti]);
    let kinetic = || take(&runs.kinetic, "kinetic run").map(|run| &run.snapshots[ti]);
    let acoustic = || runs.acoustic.as_ref().map(|a| &a[ti]).map_err(|e| e.clone());
    match q {
        Quantity::ExpansionDefect => expansion_defect_field(delta, euler()?, acoustic()?, space, vgrid)?.norm(norm),
        Quantity::LinearizationDefect => match norm {
            NormKind::SobolevHs(s) => linearization_defect(euler()?, acoustic()?, delta, space, s),
            _ => Err(Error::Config(format!("norm {} does not apply to {}", norm.tag(), q.id()))),
        },
        Quantity::EulerDefect => kinetic()?.difference(&maxwellian(euler()?, space, vgrid)?)?.norm(norm),
        Quantity::AcousticDefect => {
            let g = limit_profile_g(acoustic()?, space, vgrid)?;
            extract_fluctuation(kinetic()?, delta)?.difference(&g)?.norm(norm)
        }
        Quantity::RemainderOrder0 | Quantity::RemainderOrder1 => {
            let order = if q == Quantity::RemainderOrder0 { 0 } else { 1 };
            let t_m = *take(&runs.t_m, "temperature bound check")?;
            match norm {
                NormKind::L2 => Ok(remainder_diagnostics(kinetic()?, euler()?, order, scaling, t_m)?.f_l2),
                NormKind::WeightedLinf(beta) => {
                    let s = ScalingConfig { beta, ..scaling.clone() };
                    Ok(remainder_diagnostics(kinetic()?, euler()?, order, &s, t_m)?.h_winf)
                }
                _ => Err(Error::Config(format!("norm {} does not apply to {}", norm.tag(), q.id()))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;
    use crate::harness::config::DeltaRule;

    fn small(quantities: Vec<Quantity>) -> SweepConfig {
        SweepConfig {
            epsilons: vec![4e-2, 2e-2, 1e-2, 5e-3],
            delta: DeltaRule::Fixed { values: vec![0.1] },
            tau: 0.2,
            sample_times: vec![0.2],
            grid: GridConfig { n_x: 16, n_v: 8, ..GridConfig::default() },
            quantities,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn row_count_and_order() {
        let cfg = small(vec![Quantity::EulerDefect, Quantity::AcousticDefect, Quantity::ExpansionDefect]);
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.is_ok() && r.value.is_finite() && r.value >= 0.0));
        let ids: Vec<&str> = rows[..3].iter().map(|r| r.quantity.as_str()).collect();
        assert_eq!(ids, ["euler_defect", "acoustic_defect", "expansion_defect"]);
        assert!(rows.windows(2).all(|w| w[0].epsilon >= w[1].epsilon));
    }

    #[test]
    fn output_is_byte_identical_across_runs() {
        let cfg = small(vec![Quantity::EulerDefect, Quantity::RemainderOrder1]);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_csv(&run_sweep(&cfg).unwrap(), &mut a).unwrap();
        write_csv(&run_sweep(&cfg).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        assert!(String::from_utf8(a).unwrap().starts_with("epsilon,delta,t,quantity,norm,value,status\n"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![
            SweepRecord::ok(1e-3, 0.1, 1.0, "euler_defect", "L2", 0.1 + 0.2),
            SweepRecord::ok(std::f64::consts::PI, 1.0 / 3.0, 0.25, "acoustic_defect", "WLinf(3.5)", 7.0e-300),
            SweepRecord {
                status: Status::Failed("lifespan exceeded at t = 0.5: density, \"quoted\"".into()),
                value: f64::NAN,
                ..SweepRecord::ok(1e-2, 0.4, 0.5, "euler_defect", "L2", 0.0)
            },
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[..2], rows[..2]);
        assert!(back[2].value.is_nan() && back[2].status == rows[2].status);
    }

    #[test]
    fn failed_sub_run_marks_dependent_rows_only() {
        // A full-Q run on a grid above the collision cap fails; fluid-only rows survive.
        let mut cfg = small(vec![Quantity::ExpansionDefect, Quantity::EulerDefect]);
        cfg.epsilons = vec![1e-2];
        cfg.grid.n_v = 26;
        cfg.grid.n_x = 8;
        cfg.kinetic.backend = crate::kinetic::Backend::FullQ;
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].is_ok());
        assert!(matches!(&rows[1].status, Status::Failed(r) if r.contains("cap")), "{:?}", rows[1].status);
    }

    #[test]
    fn norms_follow_quantities() {
        let mut cfg = small(vec![Quantity::LinearizationDefect, Quantity::ExpansionDefect]);
        cfg.epsilons = vec![1e-2];
        cfg.norms = vec!["L2".into(), "H2".into(), "Linf".into()];
        let rows = run_sweep(&cfg).unwrap();
        let tags: Vec<(&str, &str)> = rows.iter().map(|r| (r.quantity.as_str(), r.norm.as_str())).collect();
        assert_eq!(
            tags,
            [("linearization_defect", "H2"), ("expansion_defect", "L2"), ("expansion_defect", "Linf")]
        );
    }

    #[test]
    fn snapshots_are_written() {
        let dir = std::env::temp_dir().join(format!("kinlab-snap-{}", std::process::id()));
        let mut cfg = small(vec![Quantity::EulerDefect]);
        cfg.epsilons = vec![1e-2];
        cfg.sample_times = vec![0.1, 0.2];
        cfg.snapshot_dir = Some(dir.clone());
        run_sweep(&cfg).unwrap();
        let mut names: Vec<String> =
            std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        names.sort();
        assert_eq!(names.len(), 2);
        let file = std::fs::File::open(dir.join(&names[1])).unwrap();
        let snap = Snapshot::read(std::io::BufReader::new(file)).unwrap();
        assert_eq!(snap.time, 0.2);
        assert_eq!(snap.shape, vec![512, 16]);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
