//! Discrete element simulation of cohesive micron-scale metal powders.
//!
//! Soft-sphere DEM with linear spring-dashpot normal contact, Coulomb
//! friction with tangential spring history, velocity-proportional rolling
//! resistance and a regularized van der Waals adhesion law parameterized by
//! an effective surface energy. On top of the core model the crate ships a
//! funnel-test scenario, angle-of-repose measurement from pile snapshots,
//! and a calibration harness that fits the surface energy to a target angle
//! of repose.
//!
//! The pair-force loop is data-parallel via rayon (default `parallel`
//! feature) with a bit-identical sequential fallback; force accumulation is
//! ordered so that runs reproduce exactly regardless of thread count.

pub mod analysis;
pub mod calibrate;
pub mod cli;
pub mod config;
pub mod core;
pub mod forces;
pub mod integrator;
pub mod math;
pub mod neighbors;
pub mod rng;
pub mod scenario;
pub mod snapshot;
pub mod walls;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Percentiles passed to the size-distribution fit are not strictly increasing.
    NonMonotonePercentiles { d10: f64, d50: f64, d90: f64 },
    /// Rejection sampling failed to produce an in-range diameter.
    SamplingExhausted { attempts: usize },
    /// A material or distribution parameter violates its admissible range.
    InvalidParameter(String),
    /// Configured time step exceeds the critical step size.
    TimeStepTooLarge { dt: f64, dt_crit: f64 },
    /// A particle state became non-finite; the simulation aborted.
    NonFiniteState { step: usize, particle_id: u32 },
    /// Particle insertion could not find a free spot.
    InsertionFailed { attempts: usize },
    /// Pile analysis could not be carried out.
    Analysis(String),
    /// Calibration grid is unusable (too few points or non-monotone).
    Calibration(String),
    /// Configuration file problem, anchored to a 1-based line number when known.
    Config { line: Option<usize>, message: String },
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonMonotonePercentiles { d10, d50, d90 } => write!(
                f,
                "size percentiles must satisfy 0 < D10 < D50 < D90, got {d10:e}, {d50:e}, {d90:e}"
            ),
            Error::SamplingExhausted { attempts } => {
                write!(f, "diameter rejection sampling failed after {attempts} attempts")
            }
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::TimeStepTooLarge { dt, dt_crit } => {
                write!(f, "time step {dt:e} exceeds critical step size {dt_crit:e}")
            }
            Error::NonFiniteState { step, particle_id } => {
                write!(f, "non-finite state at step {step}, particle {particle_id}")
            }
            Error::InsertionFailed { attempts } => {
                write!(f, "particle insertion failed after {attempts} attempts")
            }
            Error::Analysis(m) => write!(f, "analysis: {m}"),
            Error::Calibration(m) => write!(f, "calibration: {m}"),
            Error::Config { line: Some(l), message } => write!(f, "config line {l}: {message}"),
            Error::Config { line: None, message } => write!(f, "config: {message}"),
            Error::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
