//! Mini-batch Adam training of the classifier circuit with optional noise
//! diffusion after every optimizer step.
//!
//! Readout: `p(y = 1 | x) = σ(s · ⟨Z_0⟩)` with `s = READOUT_SCALE`, trained
//! with binary cross-entropy. The batch gradient is the mean of per-sample
//! parameter-shift gradients, reduced in sample order.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{
    evaluate, evaluate_with_gradient_by, CircuitSpec, EncodedSample, GradientMethod, ParamTensor,
};
use crate::datasets::{to_samples, EncodedDataset};
use crate::error::{Error, Result};
use crate::regularize::{
    diffuse, fit_prior, rng_stream, sample_init, stream_id, DiffusionMode, DiffusionSchedule,
    InitStrategy, PriorStats,
};
use crate::simcore::Observable;

pub const READOUT_SCALE: f64 = 5.0;

/// Probabilities are kept this far from 0 and 1 inside the log.
const PROB_EPS: f64 = 1e-12;

const STREAM_SHUFFLE: u64 = 0x5u64;
const STREAM_DIFFUSION: u64 = 0xd1ffu64;

/// Generator feeding the diffusion noise of a run seeded with `seed`.
pub fn diffusion_rng(seed: u64) -> ChaCha8Rng {
    rng_stream(seed, stream_id(&[STREAM_DIFFUSION]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    hp: AdamParams,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, hp: AdamParams, n_params: usize) -> Self {
        Self {
            lr,
            hp,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        self.t += 1;
        let AdamParams { beta1, beta2, eps } = self.hp;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    pub dr_min: f64,
    pub dr_max: f64,
    #[serde(default)]
    pub mode: DiffusionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamParams,
    pub diffusion: Option<DiffusionConfig>,
    pub init: InitStrategy,
    pub seed: u64,
    #[serde(default)]
    pub gradient: GradientMethod,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            batch_size: 20,
            epochs: 50,
            adam: AdamParams::default(),
            diffusion: None,
            init: InitStrategy::default(),
            seed: 0,
            gradient: GradientMethod::ParameterShift,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be ≥ 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be ≥ 1".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `probability` against a 0/1 label.
pub fn loss(probability: f64, label: u8) -> f64 {
    let p = probability.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `σ(s · ⟨Z_0⟩)`.
pub fn predict(circuit: &CircuitSpec, params: &ParamTensor, sample: &EncodedSample) -> Result<f64> {
    let z0 = Observable::z(circuit.n_qubits(), 0)?;
    Ok(sigmoid(
        READOUT_SCALE * evaluate(circuit, params, sample, &z0)?,
    ))
}

/// Per-sample loss and its parameter-shift gradient.
pub fn loss_and_gradient(
    circuit: &CircuitSpec,
    params: &ParamTensor,
    sample: &EncodedSample,
) -> Result<(f64, Vec<f64>)> {
    loss_and_gradient_by(circuit, params, sample, GradientMethod::ParameterShift)
}

pub fn loss_and_gradient_by(
    circuit: &CircuitSpec,
    params: &ParamTensor,
    sample: &EncodedSample,
    method: GradientMethod,
) -> Result<(f64, Vec<f64>)> {
    let z0 = Observable::z(circuit.n_qubits(), 0)?;
    let (e, grad_e) = evaluate_with_gradient_by(circuit, params, sample, &z0, method)?;
    let p = sigmoid(READOUT_SCALE * e);
    // d BCE / d z = σ(z) − y for z = s·E
    let dz = p - f64::from(sample.label);
    let scale = dz * READOUT_SCALE;
    let grad = grad_e.as_slice().iter().map(|g| scale * g).collect();
    Ok((loss(p, sample.label), grad))
}

/// Mean loss and accuracy (threshold 0.5) over `samples`.
pub fn assess(
    circuit: &CircuitSpec,
    params: &ParamTensor,
    samples: &[EncodedSample],
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let probs = samples
        .par_iter()
        .map(|s| predict(circuit, params, s))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    let mut correct = 0usize;
    for (p, s) in probs.iter().zip(samples) {
        total += loss(*p, s.label);
        if u8::from(*p >= 0.5) == s.label {
            correct += 1;
        }
    }
    let n = samples.len() as f64;
    Ok((total / n, correct as f64 / n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub train_accuracy: f64,
    pub valid_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub dataset: String,
    pub strategy: String,
    pub seed: u64,
    pub n_qubits: usize,
    pub n_rot: usize,
    pub n_layers: usize,
    pub prior: Option<PriorStats>,
    pub schedule_steps: usize,
    pub epochs: Vec<EpochRecord>,
    pub test_accuracy: f64,
    /// Batch-mean gradient of the first layer at every optimizer step.
    pub first_layer_gradients: Vec<Vec<f64>>,
    pub initial_params: ParamTensor,
    pub final_params: ParamTensor,
}

/// Callbacks around the training loop. All methods default to no-ops.
pub trait TrainObserver {
    fn on_start(&mut self, _params: &ParamTensor) -> Result<()> {
        Ok(())
    }
    fn after_update(&mut self, _step: usize, _params: &ParamTensor) {}
    fn after_diffusion(&mut self, _step: usize, _params: &ParamTensor) {}
    fn on_epoch_end(&mut self, _epoch: usize, _params: &ParamTensor) -> Result<()> {
        Ok(())
    }
}

pub struct NoObserver;

impl TrainObserver for NoObserver {}

/// Prior stats of the encoded training values (when at least two exist).
pub fn data_prior(data: &EncodedDataset) -> Result<Option<PriorStats>> {
    let values = data.train_values();
    if values.len() < 2 {
        return Ok(None);
    }
    fit_prior(&values).map(Some)
}

/// Draws the initial parameters for `config`, fitting the prior when needed.
pub fn initial_params(
    circuit: &CircuitSpec,
    data: &EncodedDataset,
    config: &TrainConfig,
) -> Result<(ParamTensor, Option<PriorStats>)> {
    let prior = data_prior(data)?;
    let params = sample_init(config.init, prior.as_ref(), circuit.shape(), config.seed)?;
    Ok((params, prior))
}

pub fn train(
    circuit: &CircuitSpec,
    data: &EncodedDataset,
    config: &TrainConfig,
) -> Result<TrainReport> {
    train_observed(circuit, data, config, &mut NoObserver)
}

pub fn train_observed(
    circuit: &CircuitSpec,
    data: &EncodedDataset,
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    let (params, prior) = initial_params(circuit, data, config)?;
    train_from(circuit, data, config, params, prior, observer)
}

/// Number of optimizer steps one epoch takes for `n_train` samples.
pub fn batches_per_epoch(n_train: usize, batch_size: usize) -> usize {
    n_train.div_ceil(batch_size.max(1))
}

/// Runs the training loop from explicit initial parameters.
pub fn train_from(
    circuit: &CircuitSpec,
    data: &EncodedDataset,
    config: &TrainConfig,
    initial: ParamTensor,
    prior: Option<PriorStats>,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    config.validate()?;
    let total_steps = config.epochs * batches_per_epoch(data.train.len(), config.batch_size);
    let rates = match config.diffusion {
        Some(d) => {
            let sched = DiffusionSchedule::build(total_steps, d.dr_min, d.dr_max)?;
            let rates: Vec<f64> = (0..total_steps)
                .map(|t| {
                    sched
                        .coefficient(t, d.mode)
                        .expect("schedule covers every step")
                })
                .collect();
            Some(rates)
        }
        None => None,
    };
    train_with_rates(
        circuit,
        data,
        config,
        initial,
        prior,
        rates.as_deref(),
        observer,
    )
}

/// Training loop with an explicit per-step diffusion rate sequence
/// (`None` disables diffusion). `rates` must cover every optimizer step.
pub fn train_with_rates(
    circuit: &CircuitSpec,
    data: &EncodedDataset,
    config: &TrainConfig,
    initial: ParamTensor,
    prior: Option<PriorStats>,
    rates: Option<&[f64]>,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    config.validate()?;
    let n = circuit.n_qubits();
    if data.width() > n {
        return Err(Error::Shape(format!(
            "{} encoded features for a {n}-qubit circuit",
            data.width()
        )));
    }
    if initial.shape() != circuit.shape() {
        return Err(Error::Shape(
            "initial parameters do not match the circuit".into(),
        ));
    }
    let train_set = to_samples(&data.train, n)?;
    let valid_set = to_samples(&data.valid, n)?;
    let test_set = to_samples(&data.test, n)?;
    if train_set.is_empty() {
        return Err(Error::Config("empty training split".into()));
    }
    let total_steps = config.epochs * batches_per_epoch(train_set.len(), config.batch_size);
    if let Some(r) = rates {
        if r.len() < total_steps {
            return Err(Error::Schedule(format!(
                "{} diffusion rates for {total_steps} steps",
                r.len()
            )));
        }
    }

    let mut params = initial.clone();
    let mut adam = Adam::new(config.learning_rate, config.adam, params.len());
    let mut shuffle_rng = rng_stream(config.seed, stream_id(&[STREAM_SHUFFLE]));
    let mut noise_rng = diffusion_rng(config.seed);
    let first_width = circuit.shape().per_layer();

    observer.on_start(&params)?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut first_layer_gradients = Vec::with_capacity(total_steps);
    let mut step = 0usize;
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(config.batch_size) {
            let per_sample = batch
                .par_iter()
                .map(|&i| loss_and_gradient_by(circuit, &params, &train_set[i], config.gradient))
                .collect::<Result<Vec<_>>>()?;
            let mut grad = vec![0.0; params.len()];
            let mut batch_loss = 0.0;
            for (l, g) in &per_sample {
                batch_loss += l;
                grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            batch_loss *= inv;
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    value: batch_loss,
                });
            }
            first_layer_gradients.push(grad[..first_width].to_vec());

            adam.step(params.as_mut_slice(), &grad);
            observer.after_update(step, &params);
            if let Some(rates) = rates {
                params = diffuse(&params, rates[step], &mut noise_rng)?;
                observer.after_diffusion(step, &params);
            }
            step += 1;
        }
        let (train_loss, train_accuracy) = assess(circuit, &params, &train_set)?;
        let (valid_loss, valid_accuracy) = assess(circuit, &params, &valid_set)?;
        epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            valid_loss,
            train_accuracy,
            valid_accuracy,
        });
        observer.on_epoch_end(epoch + 1, &params)?;
    }
    let (_, test_accuracy) = assess(circuit, &params, &test_set)?;
    Ok(TrainReport {
        dataset: data.name.clone(),
        strategy: config.init.id(),
        seed: config.seed,
        n_qubits: n,
        n_rot: circuit.n_rot(),
        n_layers: circuit.n_layers(),
        prior,
        schedule_steps: total_steps,
        epochs,
        test_accuracy,
        first_layer_gradients,
        initial_params: initial,
        final_params: params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{Axis, EntanglerKind};

    #[test]
    fn adam_first_step_on_quadratic() {
        let mut adam = Adam::new(0.1, AdamParams::default(), 1);
        let mut theta = [1.0];
        let grad = [2.0 * theta[0]];
        adam.step(&mut theta, &grad);
        assert!((theta[0] - 0.9).abs() < 1e-3, "{}", theta[0]);
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut adam = Adam::new(0.01, AdamParams::default(), 3);
        let mut p = [0.3, -1.0, 2.5];
        adam.step(&mut p, &[0.0; 3]);
        assert_eq!(p, [0.3, -1.0, 2.5]);
    }

    #[test]
    fn readout_closed_forms() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((loss(0.5, 1) - std::f64::consts::LN_2).abs() < 1e-15);
        let p = sigmoid(READOUT_SCALE * 1.0);
        let want = (1.0 + (-5.0f64).exp()).ln();
        assert!((loss(p, 1) - want).abs() < 1e-12);
        assert!((want - 6.7153e-3).abs() < 1e-7);
    }

    #[test]
    fn loss_is_finite_at_extremes() {
        for p in [0.0, 1.0, 1e-300, 1.0 - 1e-17] {
            assert!(loss(p, 0).is_finite() && loss(p, 1).is_finite());
        }
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::default();
        assert!(c.validate().is_ok());
        c.batch_size = 0;
        assert!(c.validate().is_err());
        c = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        c = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn chained_gradient_matches_finite_differences() {
        let c = CircuitSpec::build(3, 2, 2).unwrap();
        let vals: Vec<f64> = (0..c.n_params())
            .map(|i| (i as f64 * 0.91).cos() * 2.0)
            .collect();
        let p = ParamTensor::from_vec(c.shape(), vals).unwrap();
        let s = EncodedSample::new(vec![0.3, 2.2, 1.4], 1).unwrap();
        let (_, g) = loss_and_gradient(&c, &p, &s).unwrap();
        let h = 1e-5;
        for k in 0..c.n_params() {
            let mut plus = p.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = p.clone();
            minus.as_mut_slice()[k] -= h;
            let lp = loss(predict(&c, &plus, &s).unwrap(), 1);
            let lm = loss(predict(&c, &minus, &s).unwrap(), 1);
            let fd = (lp - lm) / (2.0 * h);
            let err = (g[k] - fd).abs();
            assert!(
                err < 1e-7 || err / fd.abs() < 1e-5,
                "k={k}: {} vs {fd}",
                g[k]
            );
        }
    }

    #[test]
    fn predict_range() {
        let c = CircuitSpec::with_axes(1, &[Axis::Y], 1, EntanglerKind::Cnot).unwrap();
        let p = ParamTensor::zeros(c.shape());
        let prob = predict(&c, &p, &EncodedSample::zeros(1)).unwrap();
        assert!((prob - sigmoid(5.0)).abs() < 1e-15);
    }
}
