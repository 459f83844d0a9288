//! Parameter sets, jump measures, admissibility and the truncation-free
//! drift conversion.

pub mod drift;
pub mod measure;
pub mod params;
pub mod validate;

pub use drift::LinearDrift;
pub use measure::{
    jump_transform_m, jump_transform_mu, truncation, AtomicMeasure, MatrixAtom, MatrixAtomicMeasure, ScalarAtom,
};
pub use params::{detruncate, growth_constant, truncate, AffineParams, AlphaClass, GrowthConstant, TruncatedParams};
pub use validate::{inward_pointing_check, validate, Check, InwardPointing, ValidationReport};
