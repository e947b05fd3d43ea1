//! Grid sweeps: every (strategy, axis value, repeat) run is initialized,
//! optionally trained, and probed for first-layer gradients of `E` on a fixed
//! validation batch.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vqc_core::ansatz::{
    first_layer_gradient, CircuitSpec, EncodedSample, ParamTensor, DEFAULT_AXES,
};
use vqc_core::datasets::{
    binarize_and_split, load, to_samples, EncodedDataset, Split, SplitDataset,
};
use vqc_core::regularize::stream_id;
use vqc_core::simcore::Observable;
use vqc_core::trainer::{initial_params, train_from, TrainObserver};
use vqc_core::TrainReport;

use crate::config::{
    DatasetChoice, Estimator, ExperimentConfig, RecordWhen, StrategySpec, SweepAxis,
};
use crate::error::{LabError, Result};

/// One point of a variance curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRecord {
    pub dataset: String,
    pub strategy: String,
    pub axis: SweepAxis,
    pub axis_value: usize,
    pub epoch: usize,
    pub variance: f64,
    /// Repeats × evaluation samples behind the estimate.
    pub n_samples: usize,
}

/// First-layer gradients of one run: per recorded epoch, one row per
/// evaluation sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Probe {
    pub epochs: Vec<usize>,
    pub grads: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub strategy: String,
    pub axis_value: usize,
    pub repeat: usize,
    pub seed: u64,
    pub initial_params: ParamTensor,
    pub probe: Probe,
    /// `None` when the run only measures at initialization.
    pub report: Option<TrainReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub strategy: String,
    pub axis_value: usize,
    pub repeat: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub dataset: String,
    pub axis: Option<SweepAxis>,
    pub records: Vec<VarianceRecord>,
    pub runs: Vec<RunOutcome>,
    pub failures: Vec<CellFailure>,
}

impl SweepOutput {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Seed of one run. Strategies are deliberately left out so every strategy
/// at the same (axis value, repeat) shares its random numbers.
pub fn run_seed(base: u64, axis_value: usize, repeat: usize) -> u64 {
    stream_id(&[base, axis_value as u64, repeat as u64])
}

/// Population variance, computed over sorted values so the result does not
/// depend on the order samples arrive in.
pub fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (dev.iter().sum::<f64>() / n).max(0.0)
}

/// Reduces gradient rows (one per run × sample) to a single variance.
pub fn estimate(rows: &[&[f64]], estimator: Estimator) -> f64 {
    match estimator {
        Estimator::Pooled => {
            let all: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
            variance(&all)
        }
        Estimator::PerParameter => {
            let width = rows.first().map_or(0, |r| r.len());
            if width == 0 {
                return 0.0;
            }
            let per: Vec<f64> = (0..width)
                .map(|k| variance(&rows.iter().map(|r| r[k]).collect::<Vec<_>>()))
                .collect();
            per.iter().sum::<f64>() / width as f64
        }
    }
}

/// Loaded data shared by every run of a sweep.
pub struct Workbench {
    config: ExperimentConfig,
    split: Option<SplitDataset>,
    encoded: BTreeMap<usize, EncodedDataset>,
}

impl Workbench {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let split = match config.data.dataset {
            DatasetChoice::None => None,
            DatasetChoice::Named(name) => {
                let path = config
                    .data
                    .resolved_path()
                    .expect("named datasets have a path");
                let raw = load(name, &path)?;
                Some(binarize_and_split(&raw, config.experiment.seed)?)
            }
        };
        let mut encoded = BTreeMap::new();
        for v in config.sweep.values() {
            let (n, _) = config.sweep.dims(v);
            if encoded.contains_key(&n) {
                continue;
            }
            let data = match &split {
                Some(s) => EncodedDataset::encode(s, n)?,
                None => zero_dataset(),
            };
            encoded.insert(n, data);
        }
        Ok(Self {
            config: config.clone(),
            split,
            encoded,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn dataset_name(&self) -> String {
        self.config.data.dataset.to_string()
    }

    pub fn split(&self) -> Option<&SplitDataset> {
        self.split.as_ref()
    }

    pub fn encoded(&self, n_qubits: usize) -> Option<&EncodedDataset> {
        self.encoded.get(&n_qubits)
    }

    pub fn circuit(&self, axis_value: usize) -> Result<CircuitSpec> {
        let (n, l) = self.config.sweep.dims(axis_value);
        let axes: Vec<_> = DEFAULT_AXES
            .iter()
            .copied()
            .cycle()
            .take(self.config.circuit.n_rot)
            .collect();
        Ok(CircuitSpec::with_axes(
            n,
            &axes,
            l,
            self.config.circuit.entangler.into(),
        )?)
    }

    /// Validation samples the probe evaluates (a single zero input without data).
    pub fn eval_batch(&self, n_qubits: usize) -> Result<Vec<EncodedSample>> {
        let data = self
            .encoded(n_qubits)
            .ok_or_else(|| LabError::Config(format!("no encoding for {n_qubits} qubits")))?;
        let samples = to_samples(&data.valid, n_qubits)?;
        Ok(samples
            .into_iter()
            .take(self.config.data.eval_batch)
            .collect())
    }

    /// Initializes, probes and (when epochs > 0) trains one run.
    pub fn run_one(
        &self,
        strategy: &StrategySpec,
        axis_value: usize,
        repeat: usize,
    ) -> Result<RunOutcome> {
        let seed = run_seed(self.config.experiment.seed, axis_value, repeat);
        let circuit = self.circuit(axis_value)?;
        let n = circuit.n_qubits();
        let obs = self.config.circuit.observable.build(n)?;
        let data = self
            .encoded(n)
            .ok_or_else(|| LabError::Config(format!("no encoding for {n} qubits")))?;
        let eval = self.eval_batch(n)?;
        let train_config = self.config.train_config(strategy, seed)?;
        let (init, prior) = initial_params(&circuit, data, &train_config)?;
        let mut probe = ProbeObserver {
            circuit: &circuit,
            obs: &obs,
            eval: &eval,
            every_epoch: self.config.sweep.record == RecordWhen::EveryEpoch,
            probe: Probe::default(),
        };
        let report = if self.config.train.epochs == 0 {
            probe.record(0, &init)?;
            None
        } else {
            Some(train_from(
                &circuit,
                data,
                &train_config,
                init.clone(),
                prior,
                &mut probe,
            )?)
        };
        Ok(RunOutcome {
            strategy: strategy.id(),
            axis_value,
            repeat,
            seed,
            initial_params: init,
            probe: probe.probe,
            report,
        })
    }
}

fn zero_dataset() -> EncodedDataset {
    let one = Split {
        features: vec![Vec::new()],
        labels: vec![0],
    };
    EncodedDataset {
        name: "none".into(),
        train: one.clone(),
        valid: one.clone(),
        test: one,
        encoder: None,
    }
}

struct ProbeObserver<'a> {
    circuit: &'a CircuitSpec,
    obs: &'a Observable,
    eval: &'a [EncodedSample],
    every_epoch: bool,
    probe: Probe,
}

impl ProbeObserver<'_> {
    fn record(&mut self, epoch: usize, params: &ParamTensor) -> vqc_core::Result<()> {
        let rows = self
            .eval
            .par_iter()
            .map(|s| first_layer_gradient(self.circuit, params, s, self.obs))
            .collect::<vqc_core::Result<Vec<_>>>()?;
        self.probe.epochs.push(epoch);
        self.probe.grads.push(rows);
        Ok(())
    }
}

impl TrainObserver for ProbeObserver<'_> {
    fn on_start(&mut self, params: &ParamTensor) -> vqc_core::Result<()> {
        self.record(0, params)
    }

    fn on_epoch_end(&mut self, epoch: usize, params: &ParamTensor) -> vqc_core::Result<()> {
        if self.every_epoch {
            self.record(epoch, params)?;
        }
        Ok(())
    }
}

/// Variance records of one cell from its successful runs.
pub fn cell_records(
    dataset: &str,
    axis: SweepAxis,
    estimator: Estimator,
    runs: &[&RunOutcome],
) -> Vec<VarianceRecord> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    first
        .probe
        .epochs
        .iter()
        .enumerate()
        .map(|(i, &epoch)| {
            let rows: Vec<&[f64]> = runs
                .iter()
                .flat_map(|r| r.probe.grads[i].iter().map(Vec::as_slice))
                .collect();
            VarianceRecord {
                dataset: dataset.to_string(),
                strategy: first.strategy.clone(),
                axis,
                axis_value: first.axis_value,
                epoch,
                variance: estimate(&rows, estimator),
                n_samples: rows.len(),
            }
        })
        .collect()
}

/// Runs the whole grid. Failures are confined to their cell: a cell with a
/// failed repeat yields no records, every other cell is unaffected.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    let bench = Workbench::new(config)?;
    run_on(&bench)
}

pub fn run_on(bench: &Workbench) -> Result<SweepOutput> {
    let config = bench.config();
    let strategies = config.strategies();
    let values = config.sweep.values();
    let repeats = config.experiment.repeats;
    let jobs: Vec<(usize, usize, usize)> = (0..strategies.len())
        .flat_map(|s| {
            values
                .iter()
                .flat_map(move |&v| (0..repeats).map(move |r| (s, v, r)))
        })
        .collect();
    let results: Vec<Result<RunOutcome>> = jobs
        .par_iter()
        .map(|&(s, v, r)| bench.run_one(&strategies[s], v, r))
        .collect();

    let dataset = bench.dataset_name();
    let axis = config.sweep.axis;
    let mut out = SweepOutput {
        dataset: dataset.clone(),
        axis: Some(axis),
        ..SweepOutput::default()
    };
    let mut results = results.into_iter();
    for strategy in &strategies {
        for &v in &values {
            let mut runs = Vec::with_capacity(repeats);
            let mut failed = false;
            for r in 0..repeats {
                match results.next().expect("one result per job") {
                    Ok(run) => runs.push(run),
                    Err(e) => {
                        failed = true;
                        out.failures.push(CellFailure {
                            strategy: strategy.id(),
                            axis_value: v,
                            repeat: r,
                            error: e.to_string(),
                        });
                    }
                }
            }
            if !failed {
                let refs: Vec<&RunOutcome> = runs.iter().collect();
                out.records
                    .extend(cell_records(&dataset, axis, config.sweep.estimator, &refs));
            }
            out.runs.extend(runs);
        }
    }
    Ok(out)
}
