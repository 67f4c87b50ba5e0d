use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::collision::{KernelConfig, RateModel};
use crate::error::{Error, Result};
use crate::fluid::{EulerRunConfig, Scheme};
use crate::grid::{build_grids, GridConfig, NormKind, SpatialGrid};
use crate::kinetic::{Backend, ScalingConfig};
use crate::maxwellian::{check_bounds, AcousticState};

/// How δ is chosen for each ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaRule {
    /// Every listed δ is paired with every ε.
    Fixed { values: Vec<f64> },
    /// `δ = ε^exponent`, one δ per ε.
    Coupled { exponent: f64 },
}

impl Default for DeltaRule {
    fn default() -> Self {
        DeltaRule::Fixed { values: vec![0.1] }
    }
}

/// Measured quantities. Distribution-valued ones accept `L2`, `Linf` and
/// `WLinf(β)`; the linearization defect accepts `H0..H3`; the remainder
/// diagnostics report `‖D/√μ‖₂` under `L2` and the weighted sup of `h`
/// under `WLinf(β)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `μ^δ - μ⁰ - δG`.
    ExpansionDefect,
    /// `(ρ-1-δσ, u-δu_a, T-1-δθ)`.
    LinearizationDefect,
    /// `F^ε - μ^δ`.
    EulerDefect,
    /// `G^ε - G` with `G^ε = (F^ε - μ⁰)/δ`.
    AcousticDefect,
    /// `F^ε - μ^δ` measured against `√μ` and `√μ_M`.
    RemainderOrder0,
    /// `F^ε - μ^δ - εF₁`.
    RemainderOrder1,
}

impl Quantity {
    pub fn id(self) -> &'static str {
        match self {
            Quantity::ExpansionDefect => "expansion_defect",
            Quantity::LinearizationDefect => "linearization_defect",
            Quantity::EulerDefect => "euler_defect",
            Quantity::AcousticDefect => "acoustic_defect",
            Quantity::RemainderOrder0 => "remainder_order0",
            Quantity::RemainderOrder1 => "remainder_order1",
        }
    }

    pub fn accepts(self, norm: NormKind) -> bool {
        match self {
            Quantity::LinearizationDefect => matches!(norm, NormKind::SobolevHs(_)),
            Quantity::RemainderOrder0 | Quantity::RemainderOrder1 => {
                matches!(norm, NormKind::L2 | NormKind::WeightedLinf(_))
            }
            _ => matches!(norm, NormKind::L2 | NormKind::Linf | NormKind::WeightedLinf(_)),
        }
    }

    pub(crate) fn needs_kinetic(self) -> bool {
        !matches!(self, Quantity::ExpansionDefect | Quantity::LinearizationDefect)
    }

    pub(crate) fn needs_euler(self) -> bool {
        self != Quantity::AcousticDefect
    }

    pub(crate) fn needs_bounds(self) -> bool {
        matches!(self, Quantity::RemainderOrder0 | Quantity::RemainderOrder1)
    }
}

/// Single-mode well-prepared data `σ = θ = a cos x₁`, `u = (b sin x₁, 0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialData {
    pub a: f64,
    pub b: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0 }
    }
}

impl InitialData {
    pub fn acoustic(&self, grid: &SpatialGrid) -> AcousticState {
        AcousticState::single_mode(grid, self.a, self.b)
    }
}

/// Kinetic solver settings shared by every run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticOptions {
    pub backend: Backend,
    pub rate: RateModel,
    pub kernel: KernelConfig,
    pub beta: f64,
    pub c_stab: f64,
    pub dt_factor: f64,
    pub max_dt: f64,
}

impl Default for KineticOptions {
    fn default() -> Self {
        let s = ScalingConfig::default();
        Self {
            backend: s.backend,
            rate: s.rate,
            kernel: s.kernel,
            beta: s.beta,
            c_stab: s.c_stab,
            dt_factor: s.dt_factor,
            max_dt: s.max_dt,
        }
    }
}

impl KineticOptions {
    pub fn scaling(&self, epsilon: f64, delta: f64) -> ScalingConfig {
        ScalingConfig {
            epsilon,
            delta,
            beta: self.beta,
            backend: self.backend,
            rate: self.rate.clone(),
            kernel: self.kernel.clone(),
            c_stab: self.c_stab,
            dt_factor: self.dt_factor,
            max_dt: self.max_dt,
        }
    }
}

/// Euler solver settings; δ and τ come from the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidOptions {
    pub scheme: Scheme,
    pub cfl: f64,
    pub blowup_factor: f64,
}

impl Default for FluidOptions {
    fn default() -> Self {
        let e = EulerRunConfig::default();
        Self { scheme: e.scheme, cfl: e.cfl, blowup_factor: e.blowup_factor }
    }
}

impl FluidOptions {
    pub fn run_config(&self, delta: f64, tau: f64) -> EulerRunConfig {
        EulerRunConfig {
            delta,
            tau,
            scheme: self.scheme,
            cfl: self.cfl,
            blowup_factor: self.blowup_factor,
            ..EulerRunConfig::default()
        }
    }
}

/// Preset sweeps matching the `kinlab` subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Expansion,
    Linearization,
    EulerLimit,
    AcousticLimit,
    AcousticFixedEpsilon,
}

impl Study {
    fn source(self) -> &'static str {
        match self {
            Study::Expansion => include_str!("../../configs/expand.toml"),
            Study::Linearization => include_str!("../../configs/linearize.toml"),
            Study::EulerLimit => include_str!("../../configs/euler_limit.toml"),
            Study::AcousticLimit => include_str!("../../configs/acoustic_limit.toml"),
            Study::AcousticFixedEpsilon => include_str!("../../configs/acoustic_fixed_eps.toml"),
        }
    }
}

/// One sweep over `(ε, δ)` pairs. Everything a run needs lives here, so the
/// records are a pure function of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    pub delta: DeltaRule,
    pub tau: f64,
    pub sample_times: Vec<f64>,
    pub grid: GridConfig,
    pub initial: InitialData,
    pub quantities: Vec<Quantity>,
    /// Norm tags, e.g. `"L2"`, `"Linf"`, `"WLinf(3.5)"`, `"H2"`.
    pub norms: Vec<String>,
    pub kinetic: KineticOptions,
    pub fluid: FluidOptions,
    /// `T_M = t_m_factor · min T` over the Euler trajectory of each run.
    pub t_m_factor: f64,
    /// CSV destination; the CLI writes to stdout when absent.
    pub output: Option<PathBuf>,
    /// Directory for binary snapshots of `F^ε` at every sample time.
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-2],
            delta: DeltaRule::default(),
            tau: 1.0,
            sample_times: vec![1.0],
            grid: GridConfig::default(),
            initial: InitialData::default(),
            quantities: Vec::new(),
            norms: vec!["L2".into()],
            kinetic: KineticOptions::default(),
            fluid: FluidOptions::default(),
            t_m_factor: 0.75,
            output: None,
            snapshot_dir: None,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn preset(study: Study) -> Self {
        Self::from_toml(study.source()).expect("bundled preset parses")
    }

    pub fn parsed_norms(&self) -> Result<Vec<NormKind>> {
        self.norms.iter().map(|t| NormKind::parse(t)).collect()
    }

    /// `(ε, δ)` pairs in sweep order: ε outer, δ inner.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &eps in &self.epsilons {
            match &self.delta {
                DeltaRule::Fixed { values } => out.extend(values.iter().map(|&d| (eps, d))),
                DeltaRule::Coupled { exponent } => out.push((eps, eps.powf(*exponent))),
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilons is empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::Config(format!("ε must be positive and finite, got {e}")));
        }
        match &self.delta {
            DeltaRule::Fixed { values } if values.is_empty() => {
                return Err(Error::Config("fixed δ rule needs at least one value".into()))
            }
            DeltaRule::Coupled { exponent } if !(*exponent > 0.0 && *exponent < 1.0) => {
                return Err(Error::Config(format!("coupling exponent must lie in (0, 1), got {exponent}")))
            }
            _ => {}
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("τ must be positive, got {}", self.tau)));
        }
        if self.sample_times.is_empty() {
            return Err(Error::Config("sample_times is empty".into()));
        }
        if self.sample_times.iter().any(|t| !(*t >= 0.0 && *t <= self.tau)) {
            return Err(Error::Config(format!("sample times must lie in [0, τ = {}]", self.tau)));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sample times must be strictly increasing".into()));
        }
        if self.quantities.is_empty() {
            return Err(Error::Config("no quantities requested".into()));
        }
        let norms = self.parsed_norms()?;
        for q in &self.quantities {
            if !norms.iter().any(|n| q.accepts(*n)) {
                return Err(Error::Config(format!("none of the norms {:?} applies to {}", self.norms, q.id())));
            }
        }
        if !(self.t_m_factor > 0.5 && self.t_m_factor < 1.0) {
            return Err(Error::Config(format!("t_m_factor must lie in (1/2, 1), got {}", self.t_m_factor)));
        }
        let (space, vgrid) = build_grids(&self.grid)?;
        self.fluid.run_config(0.1, self.tau).validate()?;
        self.kinetic.scaling(1.0, 0.1).validate()?;

        // Admissibility of the initial data at the largest δ.
        let pairs = self.pairs();
        let delta_max = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
        if !(delta_max > 0.0 && delta_max.is_finite()) {
            return Err(Error::Config(format!("δ must be positive and finite, got {delta_max}")));
        }
        if let Some(d) = pairs.iter().map(|p| p.1).find(|d| !(*d > 0.0)) {
            return Err(Error::Config(format!("δ must be positive, got {d}")));
        }
        let init = self.initial.acoustic(&space).perturbed_fluid(delta_max);
        init.validate().map_err(|e| Error::Config(format!("initial data at δ = {delta_max}: {e}")))?;
        if self.quantities.iter().any(|q| q.needs_bounds()) {
            let t_m = self.t_m_factor * init.min_temperature();
            check_bounds(&[&init], t_m, &vgrid)
                .map_err(|v| Error::Config(format!("moderate temperature condition at δ = {delta_max}: {v}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for s in [
            Study::Expansion,
            Study::Linearization,
            Study::EulerLimit,
            Study::AcousticLimit,
            Study::AcousticFixedEpsilon,
        ] {
            SweepConfig::preset(s).validate().unwrap();
        }
    }

    #[test]
    fn coupled_rule_pairs() {
        let cfg = SweepConfig {
            epsilons: vec![1e-2, 1e-4],
            delta: DeltaRule::Coupled { exponent: 0.5 },
            ..SweepConfig::default()
        };
        let p = cfg.pairs();
        assert_eq!(p.len(), 2);
        assert!((p[0].1 - 0.1).abs() < 1e-15 && (p[1].1 - 0.01).abs() < 1e-15);
    }

    #[test]
    fn fixed_rule_is_a_product() {
        let cfg = SweepConfig {
            epsilons: vec![1e-2, 1e-3],
            delta: DeltaRule::Fixed { values: vec![0.2, 0.1, 0.05] },
            ..SweepConfig::default()
        };
        assert_eq!(cfg.pairs(), vec![(1e-2, 0.2), (1e-2, 0.1), (1e-2, 0.05), (1e-3, 0.2), (1e-3, 0.1), (1e-3, 0.05)]);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = SweepConfig::preset(Study::EulerLimit);
        assert_eq!(SweepConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = SweepConfig { quantities: vec![Quantity::EulerDefect], ..SweepConfig::default() };
        base.validate().unwrap();
        let bad = [
            SweepConfig { epsilons: vec![], ..base.clone() },
            SweepConfig { epsilons: vec![-1e-3], ..base.clone() },
            SweepConfig { delta: DeltaRule::Coupled { exponent: 1.0 }, ..base.clone() },
            SweepConfig { delta: DeltaRule::Fixed { values: vec![] }, ..base.clone() },
            SweepConfig { sample_times: vec![0.5, 0.2], ..base.clone() },
            SweepConfig { sample_times: vec![2.0], ..base.clone() },
            SweepConfig { norms: vec!["H2".into()], ..base.clone() },
            SweepConfig { norms: vec!["L3".into()], ..base.clone() },
            SweepConfig { quantities: vec![], ..base.clone() },
            // density 1 - 1.5 cos x goes negative
            SweepConfig { delta: DeltaRule::Fixed { values: vec![1.5] }, ..base.clone() },
            // T ranges over [0.6, 1.4], outside (T_M, 2T_M) with T_M = 0.45
            SweepConfig {
                delta: DeltaRule::Fixed { values: vec![0.4] },
                quantities: vec![Quantity::RemainderOrder0],
                ..base.clone()
            },
        ];
        for (k, cfg) in bad.iter().enumerate() {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "case {k}: {:?}", cfg.validate());
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SweepConfig::from_toml("epsilon = [1e-2]").is_err());
        assert!(SweepConfig::from_toml("[delta]\nrule = \"fixed\"\nvalue = [0.1]").is_err());
        let cfg = SweepConfig::from_toml("[delta]\nrule = \"coupled\"\nexponent = 0.5").unwrap();
        assert_eq!(cfg.delta, DeltaRule::Coupled { exponent: 0.5 });
    }
}
