//! Wave-optics reflectance toolkit.
//!
//! Surface microstructures are turned into Wigner distribution tables,
//! re-interpreted as signed, angle-shift-invariant scattering functions
//! (WBSDFs) and used inside an ordinary path-tracing loop. Brute-force
//! scalar-wave references live in [`oracle`] and are used to validate the
//! tables; [`psf`] covers diffraction-limited lens kernels.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod config;
pub mod error;
pub mod field;
pub mod imageio;
pub mod math;
pub mod microstructure;
pub mod oracle;
pub mod psf;
pub mod render;
pub mod validate;
pub mod wbsdf;

pub use error::{Error, Result};
