//! Parallel adiabatic passage in three-level Λ systems.
//!
//! The crate designs pump/Stokes pulse pairs whose instantaneous eigenvalues
//! stay equidistant at all times, propagates the resulting dynamics,
//! compares transfer efficiency against conventional STIRAP, measures
//! robustness to field noise, and turns the designed fields into spectral
//! shaper masks.
//!
//! Internally every time is in units of a characteristic duration `T` and
//! every frequency in units of `1/T`, with `ħ = 1`. Physical units only
//! appear in [`shaper`].
//!
//! ```
//! use parstirap::{design, propagate, lambda::QuantumState};
//!
//! let schedule = design::make_parallel_schedule(&design::DesignParams::new(5.8))?;
//! let run = propagate::propagate(&schedule, &QuantumState::ground(), propagate::DEFAULT_DT)?;
//! assert!(run.p3() > 0.99);
//! # Ok::<(), parstirap::Error>(())
//! ```

pub mod benchmark;
pub mod design;
pub mod error;
pub mod lambda;
pub mod noise;
pub mod propagate;
pub mod shaper;

pub use error::{Error, Result};
