//! Simulator for a spin-1/2 collision model of open-system dynamics with
//! long-range interactions inside the environment.
//!
//! A system qubit collides with a chain of environment qubits one at a
//! time; after each collision the spent subenvironment interacts with one
//! or several of the qubits the system has not met yet, which is what
//! carries information forward and makes the reduced dynamics
//! non-Markovian. The crate computes the trace-distance based
//! non-Markovianity measure, the l1 coherence of the system, the mutual
//! information built up in a collision, and a correlation-based upper
//! bound on the trace-distance derivative.
//!
//! See the guide under `book/` for a narrative walk-through; the
//! [`cli`] module and the `collisim` binary drive full experiments.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod register;

pub use config::{ExperimentConfig, MiHook, PureState};
pub use engine::{CollisionRecord, Engine};
pub use error::{Error, Result};
pub use measures::{BoundMode, NormKind};
pub use model::EnvModel;
pub use register::{DensityMatrix, Label, RegisterLayout};

// The guide chapters double as doc-tests so their snippets cannot rot.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/engine.md")]
    mod engine {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/bound.md")]
    mod bound {}
}
