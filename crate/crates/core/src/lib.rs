//! Channel models, gain-field evaluation and reflective beam design for
//! reconfigurable intelligent surfaces in the far field and radiating near field.

pub mod analytic;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod grcs;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod profile;
pub mod sim;

pub use error::{Error, Result};
pub use nalgebra;
pub use num_complex::{self, Complex64};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use geometry::{
    classify_regime, far_field_distance, phase_delta_exact, phase_delta_expanded, quadratic_near_field_distance,
    steering_vector, steering_vector_upa, upa_geometry, Angles, ArrayGeometry, PhaseExpansion, Position3, Regime,
    UpaLayout, Wavelength,
};
pub use grcs::{to_db, GrcsField, ResponseVector, ScanRegion, TargetSet};
pub use optimizer::{penalty_sca, ScaOutcome, ScaParams, ScaTrace};
pub use profile::PhaseProfile;
pub use sim::{BenchmarkId, DesignId, Scenario};
