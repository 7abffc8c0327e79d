//! Multibeam transmit beamforming for joint communication and sensing with a
//! single-RF-chain analog array.
//!
//! A transmit weight vector carries a fixed subbeam toward the communication
//! receiver and a scanning subbeam for sensing. This crate provides
//!
//! * array geometry, channels and beam metrics ([`array`]),
//! * subbeam construction and pattern synthesis ([`subbeam`]),
//! * closed-form optimal combination phases under sensing or communication
//!   constraints ([`combiner`]),
//! * semidefinite-relaxation global optimizers for the full weight vector
//!   ([`global`]),
//! * brute-force reference searches used to certify the above ([`oracle`]).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub mod array;
pub mod combiner;
mod error;
pub mod global;
pub mod oracle;
pub mod subbeam;

pub use error::BeamError;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;
