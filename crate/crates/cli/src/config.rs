use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use cvtomo::estimator::BhomOptWeighting;
use cvtomo::{BhomConfig, Method, StateFamily};
use serde::{Deserialize, Serialize};

/// Everything a subcommand needs. Missing keys take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Monte Carlo replications `R` for `mse`.
    pub replications: usize,
    pub methods: Vec<Method>,
    pub orders: Vec<usize>,
    pub eta: f64,
    pub out: Option<PathBuf>,
    pub states: StatesConfig,
    pub grid: GridConfig,
    pub sampler: SamplerConfig,
    pub bhom: BhomConfig,
    pub figure: FigureConfig,
    pub validate: ValidateConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatesConfig {
    pub gaussian_mu: Vec<f64>,
    /// Squeezing of every Gaussian; `λ = μ` when absent.
    pub gaussian_lambda: Option<f64>,
    pub fock_n: Vec<usize>,
}

/// Quadrature grid for numeric bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width `L`; the per-state covering rule when absent.
    pub extent: Option<f64>,
    /// Nodes per axis `M`.
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub het_events: u64,
    pub uhom_events_per_point: u64,
    pub bhom_events_per_phase: u64,
    /// Nodes per axis of the HET/UHOM sampling grid.
    pub grid_points: usize,
    pub bhomopt_weighting: BhomOptWeighting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureConfig {
    /// Abscissae of the Gaussian sweep (`λ = μ`).
    pub gaussian_mu: Vec<f64>,
    pub fock_n: Vec<usize>,
    /// Replications behind each marker; 0 gives theory only.
    pub replications: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub random_states: usize,
    pub random_dim: usize,
    pub random_support: usize,
    pub etas: Vec<f64>,
    /// Relative tolerance between quadrature and closed-form bounds.
    pub numeric_tolerance: f64,
    pub ratio_replications: usize,
    pub correlation_replications: usize,
    pub correlation_events: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            replications: 200,
            methods: Method::ALL.to_vec(),
            orders: vec![1, 2, 3, 4],
            eta: 1.0,
            out: None,
            states: StatesConfig::default(),
            grid: GridConfig::default(),
            sampler: SamplerConfig::default(),
            bhom: BhomConfig::default(),
            figure: FigureConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

impl Default for StatesConfig {
    fn default() -> Self {
        Self {
            gaussian_mu: vec![1.0, 1.5, 2.0, 3.0],
            gaussian_lambda: None,
            fock_n: (0..=5).collect(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            extent: None,
            points: cvtomo::phase_space::DEFAULT_POINTS,
        }
    }
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            het_events: 100_000,
            uhom_events_per_point: 1_000,
            bhom_events_per_phase: 10_000,
            grid_points: 121,
            bhomopt_weighting: BhomOptWeighting::default(),
        }
    }
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self {
            gaussian_mu: (10..=30).map(|i| i as f64 / 10.0).collect(),
            fock_n: (0..=5).collect(),
            replications: 0,
        }
    }
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            random_states: 50,
            random_dim: 20,
            random_support: 16,
            etas: vec![0.5, 0.8],
            numeric_tolerance: 1e-3,
            ratio_replications: 20_000,
            correlation_replications: 2_000,
            correlation_events: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level checks; every problem is reported at once.
    pub fn validate(&self) -> anyhow::Result<()> {
        let mut errs: Vec<String> = Vec::new();
        if self.methods.is_empty() {
            errs.push("methods: must list at least one of HET, UHOM, BHOM, BHOMOPT".into());
        }
        if self.orders.is_empty() {
            errs.push("orders: must list at least one order".into());
        }
        for m in &self.orders {
            if !(1..=4).contains(m) {
                errs.push(format!("orders: {m} is outside 1..=4"));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            errs.push(format!("eta: {} is outside (0, 1]", self.eta));
        } else if self.eta < 1.0 && self.methods.iter().any(|m| matches!(m, Method::Bhom | Method::BhomOpt)) {
            errs.push("eta: detector efficiency below 1 is only modelled for HET and UHOM".into());
        }
        if self.replications < 2 {
            errs.push(format!("replications: {} is below 2", self.replications));
        }
        if self.states.gaussian_mu.is_empty() && self.states.fock_n.is_empty() {
            errs.push("states: no Gaussian or Fock states listed".into());
        }
        for mu in &self.states.gaussian_mu {
            if !(*mu >= 1.0 && mu.is_finite()) {
                errs.push(format!("states.gaussian_mu: {mu} is below 1"));
            }
        }
        if let Some(l) = self.states.gaussian_lambda {
            if !(l > 0.0 && l.is_finite()) {
                errs.push(format!("states.gaussian_lambda: {l} must be positive"));
            }
        }
        if let Some(l) = self.grid.extent {
            if !(l > 0.0 && l.is_finite()) {
                errs.push(format!("grid.extent: {l} must be positive"));
            }
        }
        if self.grid.points < cvtomo::phase_space::MIN_POINTS {
            errs.push(format!(
                "grid.points: {} is below {}",
                self.grid.points,
                cvtomo::phase_space::MIN_POINTS
            ));
        }
        if self.sampler.grid_points < cvtomo::phase_space::MIN_POINTS {
            errs.push(format!("sampler.grid_points: {} is too small", self.sampler.grid_points));
        }
        for (name, v) in [
            ("sampler.het_events", self.sampler.het_events),
            ("sampler.uhom_events_per_point", self.sampler.uhom_events_per_point),
            ("sampler.bhom_events_per_phase", self.sampler.bhom_events_per_phase),
            ("validate.correlation_events", self.validate.correlation_events),
        ] {
            if v == 0 {
                errs.push(format!("{name}: must be at least 1"));
            }
        }
        let max_order = self.orders.iter().copied().max().unwrap_or(1);
        if let Err(e) = self.bhom.validate(max_order) {
            errs.push(format!("bhom: {e}"));
        }
        for mu in &self.figure.gaussian_mu {
            if !(*mu >= 1.0 && mu.is_finite()) {
                errs.push(format!("figure.gaussian_mu: {mu} is below 1"));
            }
        }
        if self.figure.replications == 1 {
            errs.push("figure.replications: use 0 for theory only or at least 2".into());
        }
        let v = &self.validate;
        if v.random_support == 0 || v.random_support >= v.random_dim {
            errs.push(format!(
                "validate.random_support: {} must lie in 1..{}",
                v.random_support, v.random_dim
            ));
        }
        for eta in &v.etas {
            if !(*eta > 0.0 && *eta <= 1.0) {
                errs.push(format!("validate.etas: {eta} is outside (0, 1]"));
            }
        }
        if !(v.numeric_tolerance > 0.0) {
            errs.push("validate.numeric_tolerance: must be positive".into());
        }
        if v.ratio_replications < 2 || v.correlation_replications < 2 {
            errs.push("validate: replication counts must be at least 2".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            bail!("invalid configuration:\n  {}", errs.join("\n  "))
        }
    }

    /// States of the `states` table in declaration order.
    pub fn state_families(&self) -> Vec<StateFamily> {
        let mut out: Vec<StateFamily> = self
            .states
            .gaussian_mu
            .iter()
            .map(|&mu| StateFamily::Gaussian {
                mu,
                lambda: self.states.gaussian_lambda.unwrap_or(mu),
            })
            .collect();
        out.extend(self.states.fock_n.iter().map(|&n| StateFamily::Fock { n }));
        out
    }

    /// Monte Carlo settings for one (state, method, order).
    pub fn experiment(&self, family: StateFamily, method: Method, order: usize, replications: usize, seed: u64) -> cvtomo::MseExperiment {
        let mut exp = cvtomo::MseExperiment::new(family, method, order);
        exp.het_events = self.sampler.het_events;
        exp.uhom_events_per_point = self.sampler.uhom_events_per_point;
        exp.bhom_events_per_phase = self.sampler.bhom_events_per_phase;
        exp.bhom = self.bhom.clone();
        exp.bhomopt_weighting = self.sampler.bhomopt_weighting;
        exp.grid_points = self.sampler.grid_points;
        exp.eta = self.eta;
        exp.replications = replications;
        exp.seed = seed;
        exp
    }
}
