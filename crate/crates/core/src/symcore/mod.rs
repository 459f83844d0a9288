//! Symmetric-matrix kernel: cone geometry, spectral operations and the trace
//! inequalities used by the a-priori bounds.

pub mod eigen;
pub mod expm;
pub mod inequality;
pub mod mat;
pub mod sym;

pub use expm::mat_exp;
pub use inequality::{
    boundary_pairs, canonical_boundary_pairs, lemma_b_form, random_boundary_pair, random_orthogonal,
    riccati_quadratic_real, BoundaryPair, LemmaBForm,
};
pub use mat::{CMat, Mat};
pub use sym::{
    is_psd, psd_project, sqrt_psd, svec_len, trace_inner, trace_inner_complex, CSymMatrix, Spectrum, SymMatrix,
    PSD_TOL,
};
