//! Link-level simulation of an indoor multicast optical wireless downlink in
//! which two user groups share a single LED through power-domain NOMA, with
//! each group's frame protected by random linear network coding over GF(2^8).
//!
//! The crate is organised bottom-up:
//!
//! - [`gf256`]: field arithmetic used by the coder.
//! - [`rlnc`]: generation-based encoder, incremental Gaussian-elimination
//!   decoder and the analytic full-rank probability.
//! - [`channel`]: Lambertian line-of-sight channel, user drops and grouping.
//! - [`noma`]: OOK superposition, threshold/SIC detection, BER oracles and
//!   SINR/rate formulas.
//! - [`sim`]: seeded Monte-Carlo trials and power-allocation sweeps.

pub mod channel;
pub mod error;
pub mod gf256;
pub mod noma;
pub mod rlnc;
pub mod sim;

pub use channel::{LedParams, PdParams, Point3, RoomGeometry, UserGroup, UserTerminal};
pub use error::{Error, Result};
pub use gf256::Gf256;
pub use noma::{NomaLink, PowerAllocation, SicMode};
pub use rlnc::{CodedPacket, Decoder, SourceFrame};
pub use sim::{Fidelity, ScenarioConfig, SweepRow};
