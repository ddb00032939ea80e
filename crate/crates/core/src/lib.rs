//! Simulation and analysis of the two-qubit SWAP quantum heat engine.
//!
//! Two qubits with level spacings `omega1`, `omega2` each relax in contact with
//! their own thermal bath. A train of instantaneous two-qubit gates couples
//! them and exchanges energy with the work source. The crate offers
//!
//! * [`thermo`]: closed-form mean energetics, operation regimes and efficiency bounds,
//! * [`gates`]: the complex-SWAP family, iSWAP and a 15-angle chart of U(4) with a
//!   work-maximizing optimizer,
//! * [`trajectory`]: quantum-jump trajectories with full event bookkeeping,
//! * [`stats`]: ensemble histograms and fluctuation-relation estimators,
//! * [`eventlog`] and [`reconstruct`]: the text event-log format and the
//!   calorimetric reconstruction of work from bath quanta,
//! * [`cli`]: the commands behind the `swapeng` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod eventlog;
pub mod gates;
pub mod optimize;
pub mod reconstruct;
pub mod regression;
pub mod state;
pub mod stats;
pub mod thermo;
pub mod trajectory;

pub use error::{Error, Result};
pub use gates::{GateSpec, Unitary4};
pub use state::{BasisState, JointState};
pub use thermo::{Bath, EngineConfig, MeanEnergetics, Regime};
pub use trajectory::{Protocol, Simulator, TrajectoryRecord};

