use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::grid::{ComplexGrid, ComplexGrid2d};
use super::table::{Boundary, WignerTable};
use crate::error::{Error, Result};

/// Imaginary residue allowed before it is discarded, relative to `max |W|`.
pub const REALNESS_TOLERANCE: f64 = 1e-10;

/// Mutual intensity `J(x, x') = t(x + x'/2) t*(x - x'/2)` at `x = x_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct MutualIntensity {
    /// Values for `x' = (l - (N - 1)) * shift_spacing`, `l = 0 .. 2N-2`.
    pub values: Vec<Complex64>,
    /// Spacing of the shift axis: `2 dx`, so `x'/2` stays on the samples.
    pub shift_spacing: f64,
}

impl MutualIntensity {
    pub fn shift(&self, l: usize) -> f64 {
        let n = self.values.len().div_ceil(2);
        (l as f64 - (n as f64 - 1.0)) * self.shift_spacing
    }

    /// Value at the signed half-shift `x'/2 = k dx`.
    pub fn at_half_shift(&self, k: isize) -> Complex64 {
        let n = (self.values.len() as isize + 1) / 2;
        let idx = k + n - 1;
        if idx < 0 || idx as usize >= self.values.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }
}

/// Mutual intensity on the even shift sublattice; samples outside the patch
/// are zero.
pub fn mutual_intensity(t: &ComplexGrid, x_index: usize) -> Result<MutualIntensity> {
    let n = t.len();
    if x_index >= n {
        return Err(Error::Argument(format!("x_index {x_index} out of range for grid of {n} samples")));
    }
    let s = t.samples();
    let values = (-(n as isize - 1)..=(n as isize - 1))
        .map(|k| {
            let a = x_index as isize + k;
            let b = x_index as isize - k;
            if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                Complex64::new(0.0, 0.0)
            } else {
                s[a as usize] * s[b as usize].conj()
            }
        })
        .collect();
    Ok(MutualIntensity { values, shift_spacing: 2.0 * t.dx() })
}

/// Discrete Wigner distribution of a 1D field with an opaque surround.
pub fn wdf_1d(t: &ComplexGrid) -> Result<WignerTable> {
    wdf_1d_with(t, Boundary::Zero)
}

/// Discrete Wigner distribution with an explicit boundary model.
///
/// * [`Boundary::Zero`]: `N x N` table, `du = 1/(N dx)`. Row `n` is the DFT
///   over `x'` of the sublattice mutual intensity at `x_n` plus half the
///   mutual intensities of the two half-sample rows `x_n +- dx/2`. With this
///   weighting both marginals and Parseval hold exactly on the lattice.
/// * [`Boundary::Periodic`]: `N x 2N` table, `du = 1/(2N dx)`: the exact
///   Wigner distribution of the trigonometric interpolant of one period,
///   which keeps the half-integer cross orders of periodic structures.
pub fn wdf_1d_with(t: &ComplexGrid, boundary: Boundary) -> Result<WignerTable> {
    let (values, max_imag, n_u, du) = match boundary {
        Boundary::Zero => zero_padded_rows(t),
        Boundary::Periodic => periodic_rows(t),
    };
    let n = t.len();
    let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_imag > REALNESS_TOLERANCE * max_abs.max(f64::MIN_POSITIVE) {
        return Err(Error::Internal(format!(
            "imaginary residue {max_imag:e} exceeds {REALNESS_TOLERANCE:e} * max|W| ({max_abs:e})"
        )));
    }
    let u0 = -((n_u / 2) as f64) * du;
    WignerTable::new(values, n, n_u, t.x0(), t.dx(), u0, du, boundary)
}

fn zero_padded_rows(t: &ComplexGrid) -> (Vec<f64>, f64, usize, f64) {
    let n = t.len();
    let s = t.samples();
    let dx = t.dx();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut values = vec![0.0; n * n];
    let max_imag = values
        .par_chunks_mut(n)
        .enumerate()
        .map(|(row, out)| {
            let mut g = vec![Complex64::new(0.0, 0.0); n];
            let lmax = row.min(n - 1 - row) as isize;
            for l in -lmax..=lmax {
                let a = (row as isize + l) as usize;
                let b = (row as isize - l) as usize;
                g[(2 * l).rem_euclid(n as isize) as usize] += s[a] * s[b].conj();
            }
            // half-sample rows j = 2 row -+ 1, each shared with a neighbour
            for j in [2 * row as isize - 1, 2 * row as isize + 1] {
                if j < 1 || j > 2 * n as isize - 3 {
                    continue;
                }
                let a_lo = (j - (n as isize - 1)).max(0);
                let a_hi = j.min(n as isize - 1);
                for a in a_lo..=a_hi {
                    let b = j - a;
                    let m = a - b;
                    g[m.rem_euclid(n as isize) as usize] += 0.5 * s[a as usize] * s[b as usize].conj();
                }
            }
            fft.process(&mut g);
            let mut imag = 0.0_f64;
            for (i, o) in out.iter_mut().enumerate() {
                let c = g[(i + n / 2) % n];
                *o = dx * c.re;
                imag = imag.max((dx * c.im).abs());
            }
            imag
        })
        .reduce(|| 0.0, f64::max);
    (values, max_imag, n, 1.0 / (n as f64 * dx))
}

/// Band-limited 2x upsampling: `out[j] = t(x0 + j dx / 2)` for the
/// trigonometric interpolant with frequencies `k = -N/2 .. N/2-1`.
pub(crate) fn upsample2(s: &[Complex64]) -> Vec<Complex64> {
    let n = s.len();
    let mut planner = FftPlanner::new();
    let mut spec = s.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut wide = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (k, c) in spec.iter().enumerate() {
        let dst = if k < n / 2 { k } else { k + n };
        wide[dst] = *c;
    }
    planner.plan_fft_inverse(2 * n).process(&mut wide);
    let scale = 1.0 / n as f64;
    wide.iter_mut().for_each(|c| *c *= scale);
    wide
}

fn periodic_rows(t: &ComplexGrid) -> (Vec<f64>, f64, usize, f64) {
    let n = t.len();
    let n2 = 2 * n;
    let dx = t.dx();
    let t2 = upsample2(t.samples());
    let fft = FftPlanner::new().plan_fft_forward(n2);
    let mut values = vec![0.0; n * n2];
    let max_imag = values
        .par_chunks_mut(n2)
        .enumerate()
        .map(|(row, out)| {
            let g0 = 2 * row;
            let mut g: Vec<Complex64> = (0..n2).map(|m| t2[(g0 + m) % n2] * t2[(g0 + n2 - m) % n2].conj()).collect();
            fft.process(&mut g);
            let mut imag = 0.0_f64;
            for (i, o) in out.iter_mut().enumerate() {
                let c = g[(i + n) % n2];
                *o = dx * c.re;
                imag = imag.max((dx * c.im).abs());
            }
            imag
        })
        .reduce(|| 0.0, f64::max);
    (values, max_imag, n2, 1.0 / (n2 as f64 * dx))
}

/// Separable 2D Wigner distribution `W(x,y,u,v) = Wx(x,u) Wy(y,v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableWigner {
    pub x: WignerTable,
    pub y: WignerTable,
}

impl SeparableWigner {
    pub fn get(&self, ix: usize, iy: usize, iu: usize, iv: usize) -> f64 {
        self.x.get(ix, iu) * self.y.get(iy, iv)
    }
}

/// Relative reconstruction error allowed when checking separability.
pub const SEPARABILITY_TOLERANCE: f64 = 1e-6;

/// Splits `t(x, y) = t1(x) t2(y)` and returns the Wigner table of each factor.
///
/// Non-separable fields (a circular aperture, for instance) are rejected with
/// a data error; propagate those with the 2D oracle instead.
pub fn wdf_2d_separable(t: &ComplexGrid2d) -> Result<SeparableWigner> {
    wdf_2d_separable_with(t, Boundary::Zero)
}

pub fn wdf_2d_separable_with(t: &ComplexGrid2d, boundary: Boundary) -> Result<SeparableWigner> {
    let (fx, fy) = separate(t)?;
    Ok(SeparableWigner { x: wdf_1d_with(&fx, boundary)?, y: wdf_1d_with(&fy, boundary)? })
}

/// Factorizes a separable 2D field around its largest sample.
pub fn separate(t: &ComplexGrid2d) -> Result<(ComplexGrid, ComplexGrid)> {
    let (nx, ny) = (t.nx(), t.ny());
    let s = t.samples();
    let (imax, peak) =
        s.iter().enumerate().fold((0, 0.0), |(bi, bv), (i, c)| if c.norm() > bv { (i, c.norm()) } else { (bi, bv) });
    if peak == 0.0 {
        return Err(Error::Data("field is identically zero".into()));
    }
    let (i0, j0) = (imax % nx, imax / nx);
    let pivot = t.get(i0, j0);
    let row: Vec<Complex64> = (0..nx).map(|i| t.get(i, j0)).collect();
    let col: Vec<Complex64> = (0..ny).map(|j| t.get(i0, j) / pivot).collect();
    let scale = peak * peak;
    let mut worst = 0.0_f64;
    for (j, c) in col.iter().enumerate() {
        for (i, r) in row.iter().enumerate() {
            let err = (r * c - t.get(i, j)).norm() * peak / scale;
            worst = worst.max(err);
        }
    }
    if worst > SEPARABILITY_TOLERANCE {
        return Err(Error::Data(format!("field is not separable: relative reconstruction error {worst:e}")));
    }
    Ok((ComplexGrid::new(row, t.dx(), t.x0())?, ComplexGrid::new(col, t.dy(), t.y0())?))
}
