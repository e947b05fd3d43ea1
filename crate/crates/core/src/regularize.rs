//! Prior-knowledge initialization and Gaussian noise diffusion.
//!
//! Priors are fitted on the flattened, already-encoded training features.
//! Diffusion follows a linear rate schedule `dr_min → dr_max`; after every
//! optimizer step `t` the parameters are replaced by
//! `√Γ_t · θ + √(1 − Γ_t) · ε`, `ε ~ N(0, I)`, where `Γ_t = ∏_{i≤t} (1 − dr_i)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::ansatz::{ParamShape, ParamTensor};
use crate::error::{Error, Result};

/// Deterministic generator for one `(seed, stream)` pair. Distinct streams of
/// the same seed are independent ChaCha keystreams.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Folds a path of identifiers (run, repeat, purpose, ...) into a stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    // splitmix64 finalizer over a running accumulator
    let mut acc = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        acc = z ^ (z >> 31);
    }
    acc
}

/// Distribution statistics of the training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorStats {
    pub d_min: f64,
    pub d_max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Method-of-moments `(α, β)` on min-max rescaled data; `None` when the
    /// data has no spread (or moments admit no Beta fit).
    pub beta: Option<(f64, f64)>,
}

impl PriorStats {
    pub fn is_degenerate(&self) -> bool {
        self.beta.is_none()
    }
}

/// Beta `(α, β)` matching mean `m` and variance `v` on `[0, 1]`.
pub fn beta_moments(m: f64, v: f64) -> Option<(f64, f64)> {
    if !(v > 0.0) || !(0.0..=1.0).contains(&m) {
        return None;
    }
    let common = m * (1.0 - m) / v - 1.0;
    let (a, b) = (m * common, (1.0 - m) * common);
    (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then_some((a, b))
}

pub fn fit_prior(values: &[f64]) -> Result<PriorStats> {
    if values.len() < 2 {
        return Err(Error::PriorData(format!(
            "need at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::PriorData(format!("non-finite value {v}")));
    }
    let n = values.len() as f64;
    let d_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let range = d_max - d_min;
    let beta = if range > 0.0 {
        let scaled: Vec<f64> = values.iter().map(|x| (x - d_min) / range).collect();
        let m = scaled.iter().sum::<f64>() / n;
        let v = scaled.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        beta_moments(m, v)
    } else {
        None
    };
    Ok(PriorStats {
        d_min,
        d_max,
        mean,
        std: var.sqrt(),
        beta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitFamily {
    Uniform,
    Normal,
    Beta,
    XavierUniform,
    XavierNormal,
    KaimingUniform,
    KaimingNormal,
    TruncatedNormal,
    /// Uniform over a full rotation period `[0, 2π)`, the random-circuit
    /// baseline for barren-plateau scaling.
    FullAngle,
}

impl InitFamily {
    pub const ALL: [InitFamily; 9] = [
        InitFamily::Uniform,
        InitFamily::Normal,
        InitFamily::Beta,
        InitFamily::XavierUniform,
        InitFamily::XavierNormal,
        InitFamily::KaimingUniform,
        InitFamily::KaimingNormal,
        InitFamily::TruncatedNormal,
        InitFamily::FullAngle,
    ];

    /// Whether a data-fitted prior exists for this family.
    pub fn has_prior(self) -> bool {
        matches!(
            self,
            InitFamily::Uniform | InitFamily::Normal | InitFamily::Beta
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            InitFamily::Uniform => "uniform",
            InitFamily::Normal => "normal",
            InitFamily::Beta => "beta",
            InitFamily::XavierUniform => "xavier-uniform",
            InitFamily::XavierNormal => "xavier-normal",
            InitFamily::KaimingUniform => "kaiming-uniform",
            InitFamily::KaimingNormal => "kaiming-normal",
            InitFamily::TruncatedNormal => "truncated-normal",
            InitFamily::FullAngle => "full-angle",
        }
    }
}

impl fmt::Display for InitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        InitFamily::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::Strategy(format!("unknown init family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InitStrategy {
    family: InitFamily,
    use_prior: bool,
}

impl InitStrategy {
    pub fn new(family: InitFamily, use_prior: bool) -> Result<Self> {
        if use_prior && !family.has_prior() {
            return Err(Error::Strategy(format!("{family} has no data prior")));
        }
        Ok(Self { family, use_prior })
    }

    pub fn family(&self) -> InitFamily {
        self.family
    }

    pub fn use_prior(&self) -> bool {
        self.use_prior
    }

    /// Short identifier such as `normal+pr`.
    pub fn id(&self) -> String {
        if self.use_prior {
            format!("{}+pr", self.family)
        } else {
            self.family.to_string()
        }
    }
}

impl Default for InitStrategy {
    fn default() -> Self {
        Self {
            family: InitFamily::Normal,
            use_prior: false,
        }
    }
}

enum Sampler {
    Const(f64),
    Uniform(Uniform<f64>),
    Normal(Normal<f64>),
    /// Beta draw mapped affinely onto `[lo, hi]`.
    Beta(Beta<f64>, f64, f64),
    Truncated(f64),
}

impl Sampler {
    fn uniform(lo: f64, hi: f64) -> Self {
        if hi > lo {
            Sampler::Uniform(Uniform::new(lo, hi))
        } else {
            Sampler::Const(lo)
        }
    }

    fn normal(mean: f64, std: f64) -> Result<Self> {
        if std == 0.0 {
            return Ok(Sampler::Const(mean));
        }
        Normal::new(mean, std)
            .map(Sampler::Normal)
            .map_err(|e| Error::Strategy(e.to_string()))
    }

    fn beta(a: f64, b: f64, lo: f64, hi: f64) -> Result<Self> {
        Beta::new(a, b)
            .map(|d| Sampler::Beta(d, lo, hi))
            .map_err(|e| Error::Strategy(e.to_string()))
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Const(c) => *c,
            Sampler::Uniform(d) => d.sample(rng),
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Beta(d, lo, hi) => (lo + (hi - lo) * d.sample(rng)).clamp(*lo, *hi),
            Sampler::Truncated(bound) => loop {
                let z: f64 = rng.sample(StandardNormal);
                if z.abs() <= *bound {
                    break z;
                }
            },
        }
    }
}

/// Draws an initial parameter tensor. `prior` is only read when the
/// strategy uses one. Deterministic in `seed`.
pub fn sample_init(
    strategy: InitStrategy,
    prior: Option<&PriorStats>,
    shape: ParamShape,
    seed: u64,
) -> Result<ParamTensor> {
    // fan-in and fan-out both equal the width of one layer
    let fan = shape.per_layer() as f64;
    let sampler = if strategy.use_prior() {
        let p = prior.ok_or_else(|| {
            Error::Strategy(format!("{} requires fitted prior stats", strategy.id()))
        })?;
        match strategy.family() {
            InitFamily::Uniform => Sampler::uniform(p.d_min, p.d_max),
            InitFamily::Normal => Sampler::normal(p.mean, p.std)?,
            InitFamily::Beta => {
                let (a, b) = p.beta.ok_or(Error::DegenerateBeta)?;
                Sampler::beta(a, b, p.d_min, p.d_max)?
            }
            other => return Err(Error::Strategy(format!("{other} has no data prior"))),
        }
    } else {
        match strategy.family() {
            InitFamily::Uniform => Sampler::uniform(0.0, 1.0),
            InitFamily::Normal => Sampler::normal(0.0, 1.0)?,
            InitFamily::Beta => Sampler::beta(0.5, 0.5, 0.0, 1.0)?,
            InitFamily::XavierUniform => {
                let a = (6.0 / (2.0 * fan)).sqrt();
                Sampler::uniform(-a, a)
            }
            InitFamily::XavierNormal => Sampler::normal(0.0, (2.0 / (2.0 * fan)).sqrt())?,
            InitFamily::KaimingUniform => {
                let a = (6.0 / fan).sqrt();
                Sampler::uniform(-a, a)
            }
            InitFamily::KaimingNormal => Sampler::normal(0.0, (2.0 / fan).sqrt())?,
            InitFamily::TruncatedNormal => Sampler::Truncated(2.0),
            InitFamily::FullAngle => Sampler::uniform(0.0, 2.0 * PI),
        }
    };
    let mut rng = rng_stream(seed, stream_id(&[0x1417]));
    let values = (0..shape.len()).map(|_| sampler.draw(&mut rng)).collect();
    ParamTensor::from_vec(shape, values)
}

/// Which rate scales the parameters in each diffusion step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionMode {
    /// Cumulative product `Γ_t`.
    #[default]
    Cumulative,
    /// The single-step rate `γ_t`.
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    pub dr_min: f64,
    pub dr_max: f64,
    pub dr: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_bar: Vec<f64>,
}

impl DiffusionSchedule {
    pub fn build(total_steps: usize, dr_min: f64, dr_max: f64) -> Result<Self> {
        if total_steps == 0 {
            return Err(Error::Schedule("total_steps must be ≥ 1".into()));
        }
        if !(dr_min > 0.0 && dr_min <= dr_max && dr_max < 1.0) {
            return Err(Error::Schedule(format!(
                "need 0 < dr_min ≤ dr_max < 1, got dr_min={dr_min}, dr_max={dr_max}"
            )));
        }
        let dr: Vec<f64> = if total_steps == 1 {
            vec![dr_min]
        } else {
            let last = (total_steps - 1) as f64;
            (0..total_steps)
                .map(|t| {
                    let w = t as f64 / last;
                    dr_min * (1.0 - w) + dr_max * w
                })
                .collect()
        };
        let gamma: Vec<f64> = dr.iter().map(|d| 1.0 - d).collect();
        let gamma_bar = gamma
            .iter()
            .scan(1.0, |acc, g| {
                *acc *= g;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            dr_min,
            dr_max,
            dr,
            gamma,
            gamma_bar,
        })
    }

    pub fn total_steps(&self) -> usize {
        self.dr.len()
    }

    /// Rate applied at step `t`; `None` past the end of the schedule.
    pub fn coefficient(&self, t: usize, mode: DiffusionMode) -> Option<f64> {
        match mode {
            DiffusionMode::Cumulative => self.gamma_bar.get(t).copied(),
            DiffusionMode::PerStep => self.gamma.get(t).copied(),
        }
    }
}

/// `√Γ · θ + √(1 − Γ) · ε` element-wise. Always consumes exactly
/// `params.len()` standard-normal draws from `rng`.
pub fn diffuse<R: Rng + ?Sized>(
    params: &ParamTensor,
    gamma_bar: f64,
    rng: &mut R,
) -> Result<ParamTensor> {
    if !(gamma_bar > 0.0 && gamma_bar <= 1.0) {
        return Err(Error::GammaBar(gamma_bar));
    }
    let keep = gamma_bar.sqrt();
    let noise = (1.0 - gamma_bar).sqrt();
    let mut out = params.clone();
    for v in out.as_mut_slice() {
        let eps: f64 = rng.sample(StandardNormal);
        if noise > 0.0 {
            *v = keep * *v + noise * eps;
        }
    }
    Ok(out)
}
