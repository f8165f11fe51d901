//! Tensor decomposition by truncated Newton and friends.
//!
//! The crate fits CP, DEDICOM and PARATUCK2 models to dense third-order
//! tensors. The main solver, [`optim::vechgrad_solve`], is a truncated
//! Newton method: finite-difference gradients, Hessian-vector products from
//! differenced gradients, a conjugate gradient inner loop and a strong
//! Wolfe line search. Alongside it sit alternating least squares and the
//! usual first-order and quasi-Newton baselines, plus a small benchmark
//! harness.
//!
//! ```
//! use tdopt::harness::synthesize_tensor;
//! use tdopt::models::{init_random, Family, ModelSpec};
//! use tdopt::optim::{decompose, MonotonicClock, OptimizerConfig, OptimizerFamily};
//!
//! let (target, _) = synthesize_tensor([5, 5, 5], Family::Cp, 2, 0.0, 1).unwrap();
//! let spec = ModelSpec::cp([5, 5, 5], 2).unwrap();
//! let cfg = OptimizerConfig::new(OptimizerFamily::VecHGrad);
//! let (_, report) = decompose(&target, &init_random(&spec, 7), &cfg, &MonotonicClock::default()).unwrap();
//! assert!(report.final_loss < report.loss_history[0]);
//! ```

pub mod als;
pub mod error;
pub mod harness;
pub mod linesearch;
pub mod models;
pub mod numdiff;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
pub use models::{Factors, Family, ModelSpec, ParamVector};
pub use numdiff::Objective;
pub use optim::{OptimizerConfig, OptimizerFamily, RunReport, StopReason};
pub use tensor::DenseTensor;
