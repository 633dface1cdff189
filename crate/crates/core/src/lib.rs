//! Finite-key analysis toolkit for the high-dimensional two-way Ping-Pong
//! QKD protocol.
//!
//! The crate is organised bottom-up:
//!
//! * [`mathcore`]: words over finite alphabets, Hamming statistics, entropy
//!   functions and exact Hamming-ball volumes.
//! * [`sampling`]: the two-party test-subset sampling strategy, its failure
//!   bound and an exhaustive small-instance oracle.
//! * [`channels`]: depolarizing channel models, protocol states, the
//!   decoding POVM and decode-probability tables.
//! * [`keyrate`]: finite-key secret-key lengths for ideal and lossy devices,
//!   asymptotic limits and noise tolerance.
//! * [`simulator`]: seeded Monte Carlo simulation of the observable
//!   statistics, feeding the key-rate computation.
//! * [`oracles`]: small-instance numerical certification of the
//!   linear-algebra steps behind the min-entropy bound.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the matrix-based
//! oracles and the simulator work in `f64`. The `*F64` aliases below name the
//! concrete instantiations used by the CLI.

// negated comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod keyrate;
pub mod linalg;
pub mod mathcore;
pub mod oracles;
pub mod sampling;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Real;

pub use channels::{ChannelMode, ChannelScenario, DecodeTable};
pub use keyrate::{DeviceModel, KeyRateReport, Observation, ProtocolParams};
pub use mathcore::Word;
pub use sampling::{FailureBound, SamplingParams};
pub use simulator::{SimConfig, SimResult};

pub type ProtocolParamsF64 = ProtocolParams<f64>;
pub type ChannelScenarioF64 = ChannelScenario<f64>;
pub type ObservationF64 = Observation<f64>;
pub type KeyRateReportF64 = KeyRateReport<f64>;
pub type DecodeTableF64 = DecodeTable<f64>;
pub type SamplingParamsF64 = SamplingParams<f64>;

pub type ProtocolParamsF32 = ProtocolParams<f32>;
pub type ChannelScenarioF32 = ChannelScenario<f32>;
pub type KeyRateReportF32 = KeyRateReport<f32>;
