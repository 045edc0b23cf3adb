//! WebAssembly bindings for the browser demo.
//!
//! Each exported function has a plain Rust twin in [`demo`] so the numbers
//! can be tested natively; the wrappers only convert errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

pub mod demo;

/// Row-major grid of values with its axis ranges.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    extent: [f64; 4],
}

#[wasm_bindgen]
impl Heatmap {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `values[row * width + col]`.
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// `[col_min, col_max, row_min, row_max]` in display units.
    pub fn extent(&self) -> Vec<f64> {
        self.extent.to_vec()
    }
}

impl Heatmap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, extent: [f64; 4]) -> Self {
        Self { width, height, values, extent }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

fn js(e: wbsdf_kit::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Wigner table of a sinusoidal phase grating over `periods` periods.
/// Columns are spatial frequency in 1/um, rows position in um.
#[wasm_bindgen]
pub fn grating_wdf(
    phase: f64,
    pitch_um: f64,
    lambda_nm: f64,
    periods: usize,
    per_period: usize,
) -> Result<Heatmap, JsError> {
    demo::grating_wdf(phase, pitch_um, lambda_nm, periods, per_period).map_err(js)
}

/// Scattered lobes of the grating WBSDF for one incidence angle, as
/// interleaved `[theta_o_deg, weight, ...]` pairs.
#[wasm_bindgen]
pub fn wbsdf_lobes(phase: f64, pitch_um: f64, lambda_nm: f64, theta_i_deg: f64) -> Result<Vec<f64>, JsError> {
    demo::wbsdf_lobes(phase, pitch_um, lambda_nm, theta_i_deg).map_err(js)
}

/// Thin-lens PSF kernel; `focus_m <= 0` focuses at infinity.
#[wasm_bindgen]
pub fn psf_kernel(
    focal_mm: f64,
    f_number: f64,
    focus_m: f64,
    depth_m: f64,
    lambda_nm: f64,
    size: usize,
    pitch_um: f64,
) -> Result<Heatmap, JsError> {
    demo::psf_kernel(focal_mm, f_number, focus_m, depth_m, lambda_nm, size, pitch_um).map_err(js)
}
