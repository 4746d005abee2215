//! Quantum-trajectory simulation and certification for coherence-gated routing.
//!
//! A driven qubit is weakly monitored on two non-commuting channels (σx and
//! σz). The conditional state is filtered in real time and a photon is routed
//! by comparing the coherence score `S = sqrt(x² + y²)` of the estimate with a
//! threshold. The crate covers the whole chain:
//!
//! * [`params`] and [`state`]: physical parameters, density matrices, Bloch vectors.
//! * [`dynamics`]: ground-truth stochastic master equation, homodyne records,
//!   unconditional (Lindblad) baseline.
//! * [`estimators`]: direct SME with PSD repair, unnormalized (Zakai) filter, EKF.
//! * [`ensemble`]: deterministic parallel ensembles of truth/estimate pairs.
//! * [`gating`]: scores, routing decisions, phase feedforward, threshold sweeps.
//! * [`certify`]: closed-form min-entropy, fidelity and rate calculators.
//! * [`tuning`]: empirical assumed-efficiency sweep.
//! * [`bounds`]: error process, OU comparison, supermartingale bound,
//!   overcertification statistics.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certify;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod gating;
pub mod params;
pub mod rng;
pub mod state;
pub mod tuning;

pub use error::{Error, Result};
pub use params::{validate_params, DerivedRates, Rates, SimParams};
pub use state::{bloch_from_density, density_from_bloch, Bloch, QubitState};
