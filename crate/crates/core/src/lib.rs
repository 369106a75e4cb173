//! Polarization-entangled two-photon states: construction of Werner and
//! maximally entangled mixed states, entanglement measures, CHSH analysis,
//! simulation of a ring-shaped parametric down-conversion source, and
//! two-qubit tomography.
//!
//! Basis order everywhere is `HH, HV, VH, VV`, qubit 1 first.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
mod csvio;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod qstate;
pub mod sampling;
pub mod source;
pub mod tomography;

pub use bell::{
    chsh, chsh_from_counts, chsh_optimal_family, chsh_optimize, correlation, horodecki_max, observable, AnglePlan,
    BlochSetting, ChshEstimate, ChshOptimum, ChshSettings, CountsTable,
};
pub use entanglement::{
    classify, concurrence, is_separable_ppt, linear_entropy, tangle, tangle_curve, EntropyPoint, Family,
    NonlocalityClass, PptResult, Region,
};
pub use error::{Error, Result};
pub use qstate::{
    bell_state, mems, mix, nonmax_state, singlet, singlet_projector, tune_entanglement, werner, werner_from_fidelity,
    Basis, BellKind, DensityMatrix, MatrixJson, PureState,
};
pub use source::{SectorPartition, SourceConfig, Treatment};
pub use tomography::{
    fidelity, linear_reconstruct, ml_reconstruct, simulate_tomography, standard_settings, TomoData, TomoSetting,
};
