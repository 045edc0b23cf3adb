use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Boundary, WignerTable};
use crate::microstructure::Wavelength;

/// Normalized height autocorrelation `rho_h(x') = R_h(x') / sigma_h^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AutocorrelationModel {
    /// `R_h = sigma_h^2 (1 - (x/a)^4)`: quartic fall-off from the peak,
    /// clamped at `rho = -1`.
    Quartic { a: f64 },
    /// `rho = exp(-(x/l)^2)`.
    Gaussian { correlation_length: f64 },
    /// Tabulated `R_h(k dx)` for `k = 0, 1, ...` in m^2; zero beyond the table.
    Sampled { values: Vec<f64>, dx: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticalSurfaceSpec {
    /// Height standard deviation, meters.
    pub sigma_h: f64,
    pub autocorrelation: AutocorrelationModel,
}

impl StatisticalSurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_h.is_finite() && self.sigma_h >= 0.0) {
            return Err(Error::Argument(format!("sigma_h must be >= 0, got {}", self.sigma_h)));
        }
        match &self.autocorrelation {
            AutocorrelationModel::Quartic { a } if !(*a > 0.0 && a.is_finite()) => {
                Err(Error::Argument("quartic scale a must be positive".into()))
            }
            AutocorrelationModel::Gaussian { correlation_length: l } if !(*l > 0.0 && l.is_finite()) => {
                Err(Error::Argument("correlation length must be positive".into()))
            }
            AutocorrelationModel::Sampled { values, dx } => {
                if values.is_empty() || !(*dx > 0.0) {
                    return Err(Error::Argument("sampled autocorrelation needs values and dx > 0".into()));
                }
                if self.sigma_h > 0.0 {
                    let s2 = self.sigma_h * self.sigma_h;
                    if (values[0] - s2).abs() > 1e-6 * s2 {
                        return Err(Error::Data(format!(
                            "sampled R_h(0) = {:e} differs from sigma_h^2 = {s2:e}",
                            values[0]
                        )));
                    }
                    if values.iter().any(|r| r.abs() > s2 * (1.0 + 1e-9)) {
                        return Err(Error::Data("|R_h| exceeds sigma_h^2".into()));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `rho_h` at lag `x`.
    pub fn rho(&self, x: f64) -> f64 {
        match &self.autocorrelation {
            AutocorrelationModel::Quartic { a } => (1.0 - (x / a).powi(4)).max(-1.0),
            AutocorrelationModel::Gaussian { correlation_length } => (-(x / correlation_length).powi(2)).exp(),
            AutocorrelationModel::Sampled { values, dx } => {
                let s2 = values[0];
                if s2 <= 0.0 {
                    return 1.0;
                }
                let f = x.abs() / dx;
                let i = f.floor() as usize;
                let w = f - f.floor();
                let at = |k: usize| values.get(k).copied().unwrap_or(0.0);
                (at(i) * (1.0 - w) + at(i + 1) * w) / s2
            }
        }
    }

    /// `R_h(x) = sigma_h^2 rho_h(x)`.
    pub fn r_h(&self, x: f64) -> f64 {
        self.sigma_h * self.sigma_h * self.rho(x)
    }

    /// Phase variance `[2 pi (sigma_h / lambda)(1 + cos theta_i)]^2`.
    pub fn phase_variance(&self, theta_i: f64, lambda: Wavelength) -> f64 {
        (2.0 * PI * self.sigma_h / lambda.meters() * (1.0 + theta_i.cos())).powi(2)
    }
}

/// Lag lattice of a statistical table: `n` lags (and `n` bins) at `dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticalAxes {
    pub n: usize,
    pub dx: f64,
}

impl StatisticalAxes {
    pub fn du(&self) -> f64 {
        1.0 / (self.n as f64 * self.dx)
    }
}

/// Statistical WBSDF `W(u) = F[exp(-sigma_a^2 (1 - rho_h(x')))]` shifted to
/// the incident frequency `sin(theta_i)/lambda` (nearest bin).
///
/// The result is a single-row, x-invariant table over absolute `u` with
/// `sum_u W du = 1`. The exponent is formed directly (`-sigma_a^2 (1 - rho)`
/// lies in `[-2 sigma_a^2, 0]`), so the only failure is a non-finite phase
/// variance.
pub fn statistical_wbsdf(
    spec: &StatisticalSurfaceSpec,
    theta_i: f64,
    lambda: Wavelength,
    axes: &StatisticalAxes,
) -> Result<WignerTable> {
    spec.validate()?;
    let n = axes.n;
    if n < 2 || !n.is_power_of_two() || !(axes.dx > 0.0) {
        return Err(Error::Argument("statistical axes need a power-of-two n and dx > 0".into()));
    }
    let var = spec.phase_variance(theta_i, lambda);
    if !var.is_finite() {
        return Err(Error::Precision(format!("phase variance {var} is not finite")));
    }
    let mut g: Vec<Complex64> = (0..n)
        .map(|i| {
            let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
            let log = -var * (1.0 - spec.rho(m * axes.dx));
            Complex64::new(log.exp(), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut g);
    let du = axes.du();
    let shift = (theta_i.sin() / lambda.meters() / du).round() as i64;
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let src = (k as i64 - n as i64 / 2 - shift).rem_euclid(n as i64) as usize;
            axes.dx * g[src].re
        })
        .collect();
    WignerTable::new(values, 1, n, 0.0, n as f64 * axes.dx, -((n / 2) as f64) * du, du, Boundary::Periodic)
}
