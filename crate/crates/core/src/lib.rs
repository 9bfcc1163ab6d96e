//! Two-parameter phase estimation in a balanced Mach-Zehnder interferometer.
//!
//! A displaced squeezed state and a coherent state enter the two input ports,
//! and both output ports are read out by balanced homodyne detection. The crate
//! models the Gaussian outcome distribution exactly, evaluates the classical
//! Fisher information for the phase sum `φ_s = φ₁ + φ₂` and difference
//! `φ_d = φ₁ − φ₂` (exactly and in the large-photon-number limit), and runs
//! Monte Carlo experiments with closed-form and numeric maximum-likelihood
//! estimators.
//!
//! # Conventions
//!
//! * `ħ = 1`; the vacuum has quadrature variance `½`.
//! * Quadratures are ordered in blocks `(q₁ … q_m, p₁ … p_m)`.
//! * A coherent amplitude `α` displaces the `q` quadrature by `√2·α`.
//! * The squeezed mode has `Γ = ½·diag(e^{2r}, e^{−2r})` in its `(q, p)` pair,
//!   so `N_s = sinh² r`.
//!
//! Modules, bottom-up: [`gaussian`] (moments and symplectic propagation),
//! [`interferometer`] (MZI unitary and its amplitude/phase decomposition),
//! [`homodyne`] (joint homodyne distribution), [`fisher`] (Fisher information
//! and Cramér–Rao bounds), [`estimation`] (sampling and estimators) and
//! [`experiment`] (configuration-driven sweeps, CSV and plots).

pub mod error;
pub mod estimation;
pub mod experiment;
pub mod fisher;
pub mod gaussian;
pub mod homodyne;
pub mod interferometer;
mod numeric;

pub use error::{Error, Result};
pub use estimation::{EstimateMethod, EstimateRecord, EstimatorStats, SampleBatch};
pub use fisher::{CrbReport, ExactFisher, FisherKind, FisherMatrix};
pub use gaussian::{GaussianState, ModeUnitary, Probe, SymplecticRotation};
pub use homodyne::{HomodyneDistribution, LoSetting};
pub use interferometer::{PhasePair, UnitaryDecomposition};
