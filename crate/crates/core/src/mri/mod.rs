//! Compressed-sensing MRI over Haar wavelet coefficients.

pub mod dft;
pub mod haar;
pub mod image;
pub mod problem;
pub mod recon;

pub use haar::{haar_forward, haar_inverse};
pub use problem::{build_mri_problem, make_sparse_source, reconstruct_image, KMask, MaskDensity, MriProblem, SparseImage};
pub use recon::{reconstruct, reconstruct_from, MriMethod, MriOutcome, MriSettings};
