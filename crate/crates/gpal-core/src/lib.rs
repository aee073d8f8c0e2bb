//! Gaussian-process predictive modeling under intrinsic and extrinsic
//! uncertainty, with pool-based active learning.
//!
//! The crate covers the full benchmark loop for force-to-deviation
//! surrogate modeling:
//!
//! * two model variants — stochastic Kriging (spatial term plus nugget)
//!   and a surrogate that additionally carries actuator-noise and
//!   part-variability terms — fit per output by profile maximum
//!   likelihood ([`gp`]);
//! * analytic Fisher information of the fitted hyperparameters and the
//!   D-optimality score ([`fisher`]);
//! * maximin Latin hypercube designs for the initial design and the
//!   candidate/evaluation pools ([`design`]);
//! * a synthetic oracle with a frozen GP ground truth, input
//!   perturbation, and measurement noise ([`oracle`]);
//! * the sequential query loop with two informed strategies
//!   (variance-weighted, D-optimal-weighted) and four baselines, plus the
//!   streak-based stopping rule ([`active`]);
//! * the evaluation scores: mean/max MAD over the evaluation pool and
//!   leave-one-out cross-validation MSE ([`eval`]).
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats, and the
//! command-line harness live in the companion `gpal-cli` crate. Everything
//! is deterministic given a master seed: every random stream derives from
//! it via [`seed::child_seed`].

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod active;
pub mod design;
pub mod error;
pub mod eval;
pub mod fisher;
pub mod gp;
pub mod kernel;
pub mod optim;
pub mod oracle;
pub mod seed;
pub mod types;

pub use active::{
    check_stop, run_loop, run_loop_with_model, standard_pools, CandidatePool, Clock, CurveRow, LearningCurve,
    LoopConfig, NoClock, Pools, StopDecision, StopReason, Strategy,
};
pub use design::{maximin_lhd, min_pairwise_distance, LhdConfig};
pub use error::{Error, Result};
pub use eval::{cv_mse, max_mad, mean_mad, CvConfig, CvReport, EvalPool};
pub use fisher::{d_optimality_score, fisher_information, FisherMatrix};
pub use gp::{FitConfig, FitDiagnostics, FittedModel, OutputFit};
pub use kernel::{assemble_covariance, correlation, cross_covariance, covariance_derivative, Correlation, CovarianceBundle};
pub use oracle::{Observation, Oracle, OracleConfig, OracleSpec};
pub use types::{
    validate_dataset, Bounds, Dataset, DesignMatrix, ForcePoint, Hyperparameters, ModelSpec,
    ModelVariant,
};
