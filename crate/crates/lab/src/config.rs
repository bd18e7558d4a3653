//! Experiment definitions read from TOML.
//!
//! ```toml
//! system = "lorenz"
//! n = 1000
//! seeds = [0, 1, 2]
//!
//! [noise]
//! snr = 100
//!
//! [features]
//! kind = "qff"
//! count = 80
//! ```

use std::path::{Path, PathBuf};

use qff::ode::{BenchmarkSystem, NoiseSpec};
use qff::{FeatureKind, RbfHyperparams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Qff,
    Rff,
    Rffb,
    Exact,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Qff => "qff",
            Kind::Rff => "rff",
            Kind::Rffb => "rffb",
            Kind::Exact => "exact",
        }
    }

    pub fn feature_kind(self) -> Option<FeatureKind> {
        match self {
            Kind::Qff => Some(FeatureKind::Qff),
            Kind::Rff => Some(FeatureKind::Rff),
            Kind::Rffb => Some(FeatureKind::RffB),
            Kind::Exact => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

impl Noise {
    pub fn spec(&self) -> Result<NoiseSpec> {
        match (self.variance, self.snr) {
            (Some(v), None) if v >= 0.0 && v.is_finite() => Ok(NoiseSpec::Variance(v)),
            (None, Some(s)) if s > 0.0 && s.is_finite() => Ok(NoiseSpec::Snr(s)),
            (Some(_), None) => Err(LabError::config("noise.variance", "must be finite and non-negative")),
            (None, Some(_)) => Err(LabError::config("noise.snr", "must be positive")),
            _ => Err(LabError::config("noise", "set exactly one of `variance` or `snr`")),
        }
    }
}

impl Default for Noise {
    fn default() -> Self {
        Noise { variance: Some(0.1), snr: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Features {
    pub kind: Kind,
    /// Feature dimension; the quadrature order is half of it.
    pub count: usize,
}

impl Default for Features {
    fn default() -> Self {
        Features { kind: Kind::Qff, count: 80 }
    }
}

impl Features {
    pub fn order(&self) -> usize {
        self.count / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HyperMode {
    Fit,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyper {
    pub mode: HyperMode,
    /// `[variance, lengthscale]` per state dimension, lengthscales in
    /// `[0, 1]`-rescaled time.
    #[serde(default)]
    pub values: Vec<[f64; 2]>,
    /// `fit` mode maximizes the exact marginal likelihood on at most this
    /// many evenly strided observations.
    #[serde(default = "default_fit_points")]
    pub fit_points: usize,
}

fn default_fit_points() -> usize {
    200
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper { mode: HyperMode::Fit, values: Vec::new(), fit_points: default_fit_points() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Data {
    pub format: DataFormat,
}

impl Default for Data {
    fn default() -> Self {
        Data { format: DataFormat::Text }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSweep {
    pub lengthscales: Vec<f64>,
    pub orders: Vec<usize>,
    pub grid: usize,
    pub rff_samples: usize,
    pub kinds: Vec<Kind>,
    pub variance: f64,
}

impl Default for KernelSweep {
    fn default() -> Self {
        KernelSweep {
            lengthscales: vec![0.05, 0.1, 0.5],
            orders: (1..=16).map(|i| 8 * i).collect(),
            grid: 1001,
            rff_samples: 100,
            kinds: vec![Kind::Qff, Kind::Rff, Kind::Rffb],
            variance: std::f64::consts::PI.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PosteriorSweep {
    pub orders: Vec<usize>,
    pub taus: Vec<f64>,
    pub kinds: Vec<Kind>,
}

impl Default for PosteriorSweep {
    fn default() -> Self {
        PosteriorSweep {
            orders: vec![16, 32, 48, 64, 80, 96],
            taus: vec![0.8],
            kinds: vec![Kind::Qff, Kind::Rff, Kind::Rffb],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Odin {
    /// Quadrature orders to run; empty means `features.count / 2` only.
    pub orders: Vec<usize>,
    pub max_iter: usize,
    /// Starting parameters; empty means all ones.
    pub theta0: Vec<f64>,
    /// Fixed (or initial) gradient-matching variance for every dimension;
    /// unset means the observation noise variance.
    pub gamma: Option<f64>,
}

impl Default for Odin {
    fn default() -> Self {
        Odin { orders: Vec::new(), max_iter: 5000, theta0: Vec::new(), gamma: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMode {
    Observations,
    Features,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bench {
    pub mode: BenchMode,
    /// Observation counts or quadrature orders, depending on `mode`.
    pub ladder: Vec<usize>,
    /// Quadrature order held fixed in `observations` mode.
    pub order: usize,
    /// Observation count held fixed in `features` mode; also the dataset
    /// size used to fit hyperparameters.
    pub n: usize,
    pub repeats: usize,
}

impl Default for Bench {
    fn default() -> Self {
        Bench { mode: BenchMode::Observations, ladder: vec![1000, 2000, 4000, 8000], order: 40, n: 1000, repeats: 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_system")]
    pub system: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub features: Features,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub hyper: Hyper,
    #[serde(default)]
    pub learn_gamma: bool,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub data: Data,
    #[serde(default)]
    pub kernel_sweep: KernelSweep,
    #[serde(default)]
    pub posterior_sweep: PosteriorSweep,
    #[serde(default)]
    pub odin: Odin,
    #[serde(default)]
    pub bench: Bench,
}

fn default_system() -> String {
    "lotka-volterra".into()
}

fn default_n() -> usize {
    100
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output() -> PathBuf {
    "out".into()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

/// `line:column` (1-based) of a byte offset.
fn position(src: &str, offset: usize) -> String {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    format!("{line}:{col}")
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
            let location = e.span().map_or_else(|| "<input>".to_string(), |s| position(src, s.start));
            LabError::config(location, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml(&src).map_err(|e| match e {
            LabError::Config { location, message } => {
                LabError::config(format!("{}:{location}", path.display()), message)
            }
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let system = self.system()?;
        if self.n < 2 {
            return Err(LabError::config("n", "need at least two observations"));
        }
        self.noise.spec()?;
        if self.seeds.is_empty() {
            return Err(LabError::config("seeds", "must list at least one seed"));
        }
        if self.features.kind != Kind::Exact && self.features.count == 0 {
            return Err(LabError::config("features.count", "must be positive"));
        }
        if self.features.kind == Kind::Qff && !self.features.count.is_multiple_of(2) {
            return Err(LabError::config(
                "features.count",
                format!("{} is odd; quadrature features come in cosine/sine pairs", self.features.count),
            ));
        }
        if self.hyper.mode == HyperMode::Fixed {
            let k = qff::ode::RealRhs::state_dim(&system);
            if self.hyper.values.len() != k {
                return Err(LabError::config(
                    "hyper.values",
                    format!("expected {k} [variance, lengthscale] pairs for {}", system.name()),
                ));
            }
            for (i, [rho, l]) in self.hyper.values.iter().enumerate() {
                RbfHyperparams::new(*rho, *l)
                    .map_err(|e| LabError::config(format!("hyper.values[{i}]"), e.to_string()))?;
            }
        }
        let ks = &self.kernel_sweep;
        if ks.grid < 2 {
            return Err(LabError::config("kernel_sweep.grid", "need at least 2 grid points"));
        }
        if ks.lengthscales.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(LabError::config("kernel_sweep.lengthscales", "must be positive"));
        }
        if ks.orders.contains(&0) {
            return Err(LabError::config("kernel_sweep.orders", "orders start at 1"));
        }
        if !(ks.variance > 0.0 && ks.variance.is_finite()) {
            return Err(LabError::config("kernel_sweep.variance", "must be positive"));
        }
        let ps = &self.posterior_sweep;
        if ps.orders.contains(&0) {
            return Err(LabError::config("posterior_sweep.orders", "orders start at 1"));
        }
        if ps.taus.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(LabError::config("posterior_sweep.taus", "query points lie in [0, 1]"));
        }
        if self.hyper.fit_points < 3 {
            return Err(LabError::config("hyper.fit_points", "need at least 3"));
        }
        let od = &self.odin;
        if od.orders.contains(&0) {
            return Err(LabError::config("odin.orders", "orders start at 1"));
        }
        if !od.theta0.is_empty() && od.theta0.len() != qff::ode::RealRhs::param_dim(&system) {
            return Err(LabError::config("odin.theta0", "length must match the system's parameter count"));
        }
        if od.max_iter == 0 {
            return Err(LabError::config("odin.max_iter", "must be positive"));
        }
        if od.gamma.is_some_and(|g| !(g > 0.0 && g.is_finite())) {
            return Err(LabError::config("odin.gamma", "must be positive"));
        }
        let b = &self.bench;
        if b.ladder.len() < 3 {
            return Err(LabError::config("bench.ladder", "a scaling fit needs at least 3 ladder points"));
        }
        if b.ladder.contains(&0) || b.order == 0 || b.n < 2 {
            return Err(LabError::config("bench", "ladder entries, order and n must be positive"));
        }
        if b.repeats == 0 {
            return Err(LabError::config("bench.repeats", "must be positive"));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<BenchmarkSystem> {
        BenchmarkSystem::from_name(&self.system)
            .ok_or_else(|| LabError::config("system", format!("unknown system `{}`", self.system)))
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        self.noise.spec().expect("validated")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
