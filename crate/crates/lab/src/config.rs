//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [experiment]
//! seed = 7
//! repeats = 5
//! out = "out/iris-qubits"
//!
//! [data]
//! dataset = "iris"          # iris | wine | titanic | mnist | none
//! path = "data/iris.csv"
//!
//! [sweep]
//! axis = "qubits"           # or "layers"
//! values = [2, 4, 6, 8, 10]
//! fixed = 5                 # layers for a qubit sweep, qubits for a layer sweep
//!
//! [[strategy]]
//! init = "normal"
//! prior = true
//! diffusion = true
//! dr_max = 0.30
//! ```
//!
//! Every section and key is optional; omitted values take the defaults below.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vqc_core::datasets::DatasetName;
use vqc_core::simcore::{EntanglerKind, Observable, MAX_QUBITS};
use vqc_core::trainer::{AdamParams, DiffusionConfig, TrainConfig};
use vqc_core::{DiffusionMode, GradientMethod, InitFamily, InitStrategy};

use crate::error::{LabError, Result};

/// Candidate `dr_max` grid searched by `select-dr`.
pub const DR_MAX_GRID: [f64; 7] = [0.01, 0.02, 0.04, 0.16, 0.20, 0.30, 0.50];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub data: DataSection,
    pub circuit: CircuitSection,
    pub sweep: SweepSection,
    pub train: TrainSection,
    pub diffusion: DiffusionSection,
    #[serde(rename = "strategy")]
    pub strategies: Vec<StrategySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub seed: u64,
    pub repeats: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seed: 0,
            repeats: 5,
            out: None,
        }
    }
}

/// Dataset choice. `none` feeds a single all-zero input and only supports
/// measurements at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DatasetChoice {
    None,
    Named(DatasetName),
}

impl FromStr for DatasetChoice {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("none") {
            return Ok(DatasetChoice::None);
        }
        s.parse()
            .map(DatasetChoice::Named)
            .map_err(|_| LabError::Config(format!("unknown dataset `{s}`")))
    }
}

impl TryFrom<String> for DatasetChoice {
    type Error = LabError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DatasetChoice> for String {
    fn from(d: DatasetChoice) -> String {
        d.to_string()
    }
}

impl fmt::Display for DatasetChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetChoice::None => f.write_str("none"),
            DatasetChoice::Named(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub dataset: DatasetChoice,
    /// File (or MNIST directory); defaults to `data/<dataset>` in the
    /// working directory.
    pub path: Option<PathBuf>,
    /// Validation samples the gradient probe is evaluated on.
    pub eval_batch: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            dataset: DatasetChoice::Named(DatasetName::Iris),
            path: None,
            eval_batch: 20,
        }
    }
}

impl DataSection {
    pub fn resolved_path(&self) -> Option<PathBuf> {
        match self.dataset {
            DatasetChoice::None => None,
            DatasetChoice::Named(name) => Some(self.path.clone().unwrap_or_else(|| {
                let file = match name {
                    DatasetName::Mnist => "mnist".to_string(),
                    other => format!("{other}.csv"),
                };
                Path::new("data").join(file)
            })),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    /// `Z` on qubit 0, the classifier readout.
    #[default]
    Z0,
    /// The global projector `|0…0⟩⟨0…0|`.
    ZeroProjector,
}

impl ObservableKind {
    pub fn build(self, n_qubits: usize) -> vqc_core::Result<Observable> {
        match self {
            ObservableKind::Z0 => Observable::z(n_qubits, 0),
            ObservableKind::ZeroProjector => Ok(Observable::zero_projector(n_qubits)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntanglerChoice {
    #[default]
    Cnot,
    Cz,
}

impl From<EntanglerChoice> for EntanglerKind {
    fn from(e: EntanglerChoice) -> Self {
        match e {
            EntanglerChoice::Cnot => EntanglerKind::Cnot,
            EntanglerChoice::Cz => EntanglerKind::Cz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    pub n_rot: usize,
    pub entangler: EntanglerChoice,
    /// Observable whose gradients the probe measures.
    pub observable: ObservableKind,
}

impl Default for CircuitSection {
    fn default() -> Self {
        Self {
            n_rot: 3,
            entangler: EntanglerChoice::Cnot,
            observable: ObservableKind::Z0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Qubits,
    Layers,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Qubits => "qubits",
            SweepAxis::Layers => "layers",
        }
    }

    pub fn default_values(self) -> Vec<usize> {
        match self {
            SweepAxis::Qubits => vec![2, 4, 6, 8, 10],
            SweepAxis::Layers => (1..=10).collect(),
        }
    }

    pub fn default_fixed(self) -> usize {
        match self {
            SweepAxis::Qubits => 5,
            SweepAxis::Layers => 6,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qubits" | "n" => Ok(SweepAxis::Qubits),
            "layers" | "l" => Ok(SweepAxis::Layers),
            _ => Err(LabError::Config(format!("unknown sweep axis `{s}`"))),
        }
    }
}

/// How first-layer gradients are reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// One variance over every (run, sample, parameter) gradient.
    #[default]
    Pooled,
    /// Variance per parameter over (run, sample), averaged over parameters.
    PerParameter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordWhen {
    /// Only at initialization (epoch 0).
    Init,
    /// At initialization and after every epoch.
    #[default]
    EveryEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    /// Defaults to `{2,4,6,8,10}` qubits or `1..=10` layers.
    pub values: Option<Vec<usize>>,
    /// Layer count of a qubit sweep, qubit count of a layer sweep.
    pub fixed: Option<usize>,
    pub estimator: Estimator,
    pub record: RecordWhen,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Qubits,
            values: None,
            fixed: None,
            estimator: Estimator::Pooled,
            record: RecordWhen::EveryEpoch,
        }
    }
}

impl SweepSection {
    pub fn values(&self) -> Vec<usize> {
        self.values
            .clone()
            .unwrap_or_else(|| self.axis.default_values())
    }

    pub fn fixed(&self) -> usize {
        self.fixed.unwrap_or_else(|| self.axis.default_fixed())
    }

    /// `(n_qubits, n_layers)` at one sweep value.
    pub fn dims(&self, value: usize) -> (usize, usize) {
        match self.axis {
            SweepAxis::Qubits => (value, self.fixed()),
            SweepAxis::Layers => (self.fixed(), value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// `0` measures at initialization only.
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// `parameter-shift` or `adjoint` for the training updates; probes
    /// always use the parameter-shift rule.
    pub gradient: GradientMethod,
}

impl Default for TrainSection {
    fn default() -> Self {
        let adam = AdamParams::default();
        Self {
            learning_rate: 1e-2,
            batch_size: 20,
            epochs: 50,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_eps: adam.eps,
            gradient: GradientMethod::ParameterShift,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionSection {
    pub dr_min: f64,
    pub mode: DiffusionMode,
    /// `dr_max` values tried by `select-dr`.
    pub candidates: Vec<f64>,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self {
            dr_min: 1e-4,
            mode: DiffusionMode::Cumulative,
            candidates: DR_MAX_GRID.to_vec(),
        }
    }
}

/// One column of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub init: InitFamily,
    #[serde(default)]
    pub prior: bool,
    #[serde(default)]
    pub diffusion: bool,
    #[serde(default)]
    pub dr_max: Option<f64>,
}

impl StrategySpec {
    pub fn baseline() -> Self {
        Self {
            init: InitFamily::Normal,
            prior: false,
            diffusion: false,
            dr_max: None,
        }
    }

    pub fn init_strategy(&self) -> Result<InitStrategy> {
        Ok(InitStrategy::new(self.init, self.prior)?)
    }

    /// Stable label, e.g. `normal+pr+dr0.3`.
    pub fn id(&self) -> String {
        let base = if self.prior {
            format!("{}+pr", self.init)
        } else {
            self.init.to_string()
        };
        match (self.diffusion, self.dr_max) {
            (true, Some(dr)) => format!("{base}+dr{dr}"),
            (true, None) => format!("{base}+dr"),
            _ => base,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<String>,
    pub data_path: Option<PathBuf>,
    /// `qubits`, `layers`, or `axis:v1,v2,…`.
    pub sweep: Option<String>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|source| LabError::ConfigParse {
            path: PathBuf::from("<inline>"),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        toml::from_str(&text).map_err(|source| LabError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(d) = &o.dataset {
            self.data.dataset = d.parse()?;
            self.data.path = None;
        }
        if let Some(p) = &o.data_path {
            self.data.path = Some(p.clone());
        }
        if let Some(s) = &o.sweep {
            let (axis, values) = match s.split_once(':') {
                Some((a, v)) => (a, Some(v)),
                None => (s.as_str(), None),
            };
            let axis: SweepAxis = axis.parse()?;
            if axis != self.sweep.axis {
                self.sweep.fixed = None;
            }
            self.sweep.axis = axis;
            self.sweep.values = match values {
                Some(v) => Some(
                    v.split(',')
                        .map(|x| {
                            x.trim()
                                .parse()
                                .map_err(|_| LabError::Config(format!("bad sweep value `{x}`")))
                        })
                        .collect::<Result<_>>()?,
                ),
                None => None,
            };
        }
        if let Some(r) = o.repeats {
            self.experiment.repeats = r;
        }
        if let Some(s) = o.seed {
            self.experiment.seed = s;
        }
        if let Some(out) = &o.out {
            self.experiment.out = Some(out.clone());
        }
        Ok(())
    }

    /// The configured strategies, or the Normal(0, 1) baseline alone.
    pub fn strategies(&self) -> Vec<StrategySpec> {
        if self.strategies.is_empty() {
            vec![StrategySpec::baseline()]
        } else {
            self.strategies.clone()
        }
    }

    pub fn out_dir(&self, fallback: &Path) -> PathBuf {
        self.experiment
            .out
            .clone()
            .unwrap_or_else(|| fallback.to_path_buf())
    }

    /// Trainer settings for one run.
    pub fn train_config(&self, strategy: &StrategySpec, seed: u64) -> Result<TrainConfig> {
        let diffusion = if strategy.diffusion {
            let dr_max = strategy.dr_max.ok_or_else(|| {
                LabError::Config(format!("{}: diffusion needs dr_max", strategy.id()))
            })?;
            Some(DiffusionConfig {
                dr_min: self.diffusion.dr_min,
                dr_max,
                mode: self.diffusion.mode,
            })
        } else {
            None
        };
        Ok(TrainConfig {
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            adam: AdamParams {
                beta1: self.train.adam_beta1,
                beta2: self.train.adam_beta2,
                eps: self.train.adam_eps,
            },
            diffusion,
            init: strategy.init_strategy()?,
            seed,
            gradient: self.train.gradient,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.experiment.repeats == 0 {
            return bad("repeats must be ≥ 1".into());
        }
        let values = self.sweep.values();
        if values.is_empty() || values[0] == 0 || values.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!(
                "sweep values must be strictly increasing and ≥ 1: {values:?}"
            ));
        }
        if self.sweep.fixed() == 0 {
            return bad("fixed sweep dimension must be ≥ 1".into());
        }
        for &v in &values {
            let (n, _) = self.sweep.dims(v);
            if n > MAX_QUBITS {
                return bad(format!(
                    "{n} qubits exceeds the simulator limit of {MAX_QUBITS}"
                ));
            }
        }
        if self.circuit.n_rot == 0 {
            return bad("n_rot must be ≥ 1".into());
        }
        if self.data.eval_batch == 0 {
            return bad("eval_batch must be ≥ 1".into());
        }
        if self.data.dataset == DatasetChoice::None && self.train.epochs > 0 {
            return bad("dataset `none` only supports epochs = 0".into());
        }
        if self.train.epochs > 0 {
            if !(self.train.learning_rate > 0.0 && self.train.learning_rate.is_finite()) {
                return bad(format!("learning rate {}", self.train.learning_rate));
            }
            if self.train.batch_size == 0 {
                return bad("batch size must be ≥ 1".into());
            }
        }
        let dr_min = self.diffusion.dr_min;
        if !(dr_min > 0.0 && dr_min < 1.0) {
            return bad(format!("dr_min {dr_min} outside (0, 1)"));
        }
        for s in self.strategies() {
            s.init_strategy()?;
            if s.prior && self.data.dataset == DatasetChoice::None {
                return bad(format!("{}: a prior needs a dataset", s.id()));
            }
            if let Some(dr) = s.dr_max {
                if !(dr >= dr_min && dr < 1.0) {
                    return bad(format!("{}: dr_max {dr} outside [dr_min, 1)", s.id()));
                }
            } else if s.diffusion {
                return bad(format!("{}: diffusion needs dr_max", s.id()));
            }
        }
        let ids: Vec<String> = self.strategies().iter().map(StrategySpec::id).collect();
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return bad(format!("duplicate strategy `{id}`"));
            }
        }
        Ok(())
    }
}
