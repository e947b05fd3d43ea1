//! Variational quantum circuit laboratory: a dense statevector simulator, a
//! layered hardware-efficient ansatz with parameter-shift gradients,
//! data-prior initialization and Gaussian noise diffusion, benchmark
//! loaders, and an Adam training loop.

pub mod ansatz;
pub mod datasets;
pub mod error;
pub mod regularize;
pub mod simcore;
pub mod trainer;

pub use ansatz::{CircuitSpec, EncodedSample, GradientMethod, ParamShape, ParamTensor};
pub use error::{Error, Result};
pub use regularize::{DiffusionMode, DiffusionSchedule, InitFamily, InitStrategy, PriorStats};
pub use simcore::{Axis, EntanglerKind, Observable, StateVector};
pub use trainer::{TrainConfig, TrainReport};
