//! Brute-force scalar-wave references.

mod ensemble;
mod opd;

pub use ensemble::{ensemble_statistical, EmbeddingPolicy, EnsembleResult, MIN_SURFACES};
pub use opd::{opd_far_field, opd_render_reference, OpdReport, OpdSetup};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ComplexGrid;

/// Fraunhofer intensity `|T(u)|^2` on the DFT lattice, mapped to `sin(theta) = u lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub sin_theta: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Spatial-frequency step between consecutive entries.
    pub du: f64,
}

/// Propagating part (`|sin theta| <= 1`) of the far-field intensity of `t`.
pub fn far_field_intensity(t: &ComplexGrid, lambda: f64) -> FarField {
    let spec = t.spectrum();
    let n = t.len();
    let du = t.du();
    let mut sin_theta = Vec::new();
    let mut intensity = Vec::new();
    for (i, c) in spec.iter().enumerate() {
        let s = (i as f64 - (n / 2) as f64) * du * lambda;
        if s.abs() <= 1.0 {
            sin_theta.push(s);
            intensity.push(c.norm_sqr());
        }
    }
    FarField { sin_theta, intensity, du }
}

/// Direct Huygens summation `field(r) = sum_x t(x) exp(i 2 pi d / lambda) / d`
/// to receivers at `(x_r, z)` on a line parallel to the surface.
///
/// The receiver spacing must resolve the finest intensity fringe,
/// `lambda z / (2 A)` with `A` the extent of the nonzero support.
pub fn huygens_sum(t: &ComplexGrid, z: f64, lambda: f64, receivers: &[f64]) -> Result<Vec<Complex64>> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Argument(format!("propagation distance must be positive, got {z}")));
    }
    if receivers.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("receiver positions must be strictly increasing".into()));
    }
    let support: Vec<usize> = (0..t.len()).filter(|&i| t.samples()[i].norm_sqr() > 0.0).collect();
    let Some((&first, &last)) = support.first().zip(support.last()) else {
        return Ok(vec![Complex64::new(0.0, 0.0); receivers.len()]);
    };
    let extent = (last - first + 1) as f64 * t.dx();
    let limit = lambda * z / (2.0 * extent);
    if let Some(w) = receivers.windows(2).map(|w| w[1] - w[0]).reduce(f64::max) {
        if w > limit * (1.0 + 1e-12) {
            return Err(Error::Precision(format!(
                "receiver spacing {w:e} m exceeds the fringe Nyquist limit {limit:e} m"
            )));
        }
    }
    let k = 2.0 * PI / lambda;
    let pts: Vec<(f64, Complex64)> = support.iter().map(|&i| (t.x(i), t.samples()[i])).collect();
    Ok(receivers
        .par_iter()
        .map(|&xr| {
            pts.iter().fold(Complex64::new(0.0, 0.0), |acc, &(x, a)| {
                let d = ((xr - x).powi(2) + z * z).sqrt();
                acc + a * Complex64::from_polar(1.0 / d, k * d)
            })
        })
        .collect())
}
