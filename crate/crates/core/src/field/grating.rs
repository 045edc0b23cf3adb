use std::f64::consts::PI;

use super::table::{Boundary, WignerTable};
use crate::bessel::bessel_j_orders;
use crate::error::{Error, Result};

/// Energy fraction the truncated Bessel series must capture.
pub const SERIES_CONVERGENCE: f64 = 1e-9;

/// Lattice of a periodic table: `n` rows at `dx`, `2n` frequency bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicAxes {
    pub n: usize,
    pub dx: f64,
    pub x0: f64,
}

impl PeriodicAxes {
    pub fn du(&self) -> f64 {
        1.0 / (2.0 * self.n as f64 * self.dx)
    }
}

/// Wigner table of the sinusoidal phase grating `exp(i (m/2) sin(2 pi x / p))`
/// from its double Bessel series
///
/// `W(x,u) = sum_{q1,q2} J_q1(m/2) J_q2(m/2) exp(i 2 pi x (q1-q2)/p) delta(u - (q1+q2)/(2p))`.
///
/// Each delta is placed in its nearest frequency bin (weight `1/du`).
/// Harmonics above the sampling band `1/(2 dx)` fold back into the band the
/// way sampling the field on `dx` folds them.
pub fn grating_wdf_closed_form(m: f64, pitch: f64, q_max: usize, axes: &PeriodicAxes) -> Result<WignerTable> {
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(Error::Argument(format!("pitch must be positive, got {pitch}")));
    }
    if axes.n < 2 || !(axes.dx > 0.0) {
        return Err(Error::Argument("invalid table axes".into()));
    }
    let j = bessel_j_orders(m / 2.0, q_max);
    let captured = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
    if captured < 1.0 - SERIES_CONVERGENCE {
        return Err(Error::Precision(format!(
            "q_max = {q_max} captures only {captured} of the grating energy (m/2 = {})",
            m / 2.0
        )));
    }
    let jq = |q: i64| {
        let v = j[q.unsigned_abs() as usize];
        if q < 0 && q % 2 != 0 {
            -v
        } else {
            v
        }
    };

    let n = axes.n;
    let n_u = 2 * n;
    let du = axes.du();
    let band = 1.0 / axes.dx;
    let fold = |u: f64| u - band * (u / band + 0.5).floor();
    let qm = q_max as i64;

    let mut values = vec![0.0; n * n_u];
    for q1 in -qm..=qm {
        let u1 = fold(q1 as f64 / pitch);
        for q2 in -qm..=qm {
            let c = jq(q1) * jq(q2) / du;
            if c == 0.0 {
                continue;
            }
            let u2 = fold(q2 as f64 / pitch);
            let s = ((0.5 * (u1 + u2)) / du).round() as i64;
            let col = (s + n as i64).rem_euclid(n_u as i64) as usize;
            let freq = (q1 - q2) as f64 / pitch;
            for row in 0..n {
                let x = axes.x0 + row as f64 * axes.dx;
                values[row * n_u + col] += c * (2.0 * PI * x * freq).cos();
            }
        }
    }
    WignerTable::new(values, n, n_u, axes.x0, axes.dx, -(n as f64) * du, du, Boundary::Periodic)
}

/// Far-field order efficiencies `J_q(m/2)^2` for `q = -q_max ..= q_max`.
pub fn grating_order_efficiencies(m: f64, q_max: usize) -> Vec<(i64, f64)> {
    let j = bessel_j_orders(m / 2.0, q_max);
    (-(q_max as i64)..=q_max as i64).map(|q| (q, j[q.unsigned_abs() as usize].powi(2))).collect()
}
