//! Wigner tables re-read as signed, angle-shift-invariant scattering functions.
//!
//! A WBSDF stores one [`WignerTable`] per wavelength. The column axis is the
//! spatial-frequency shift `du = (s sin(theta_o) - sin(theta_i)) / lambda`
//! with `s = +1` for transmission and `s = -1` for reflection, so the mirror
//! direction of a reflective table is `theta_o = -theta_i`. In 3D the same
//! shift applies to the direction components along the patch tangent.

mod io;
mod statistical;

pub use io::{read_tables, write_table, MAGIC};
pub use statistical::{statistical_wbsdf, AutocorrelationModel, StatisticalAxes, StatisticalSurfaceSpec};

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::field::WignerTable;
use crate::microstructure::{Mode, Wavelength};

/// Scale applied to every table: a flat `|t| = 1` surface is already a
/// unit-albedo mirror because `sum_u W du = |t|^2`.
pub const NORMALIZATION: f64 = 1.0;

/// Which kernel row a query uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowSelect {
    /// Row at position `x` on the patch (periodic in the table extent).
    At(f64),
    /// Row averaged over the whole table extent.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    lambda: Wavelength,
    table: WignerTable,
    mean: Vec<f64>,
    /// Prefix sums of `|W|`, `n_u + 1` per row, rows `0..n_x` then the mean row.
    cdf: Vec<f64>,
}

impl Layer {
    fn new(lambda: Wavelength, table: WignerTable) -> Result<Self> {
        if table.max_abs() == 0.0 {
            return Err(Error::Data("WBSDF table is identically zero".into()));
        }
        let mean = table.mean_row();
        let n_u = table.n_u();
        let mut cdf = Vec::with_capacity((table.n_x() + 1) * (n_u + 1));
        for row in (0..table.n_x()).map(|i| table.row(i)).chain(std::iter::once(&mean[..])) {
            let mut acc = 0.0;
            cdf.push(0.0);
            for v in row {
                acc += v.abs();
                cdf.push(acc);
            }
        }
        Ok(Self { lambda, table, mean, cdf })
    }

    fn row_index(&self, x: f64) -> usize {
        let t = &self.table;
        let f = ((x - t.x0()) / t.dx()).round() as i64;
        f.rem_euclid(t.n_x() as i64) as usize
    }

    fn row_values(&self, sel: RowSelect) -> (&[f64], &[f64]) {
        let n_u = self.table.n_u();
        let r = match sel {
            RowSelect::At(x) => self.row_index(x),
            RowSelect::Mean => self.table.n_x(),
        };
        let vals = if r == self.table.n_x() { &self.mean[..] } else { self.table.row(r) };
        (vals, &self.cdf[r * (n_u + 1)..(r + 1) * (n_u + 1)])
    }

    /// Linear interpolation along `u` of one row; zero outside the axis.
    fn lerp_u(&self, row: &[f64], du: f64) -> f64 {
        let t = &self.table;
        let f = (du - t.u0()) / t.du();
        if !(f > -1.0 && f < t.n_u() as f64) {
            return 0.0;
        }
        let i = f.floor();
        let w = f - i;
        let at = |k: f64| if k >= 0.0 && (k as usize) < t.n_u() { row[k as usize] } else { 0.0 };
        at(i) * (1.0 - w) + at(i + 1.0) * w
    }

    fn eval(&self, sel: RowSelect, du: f64) -> f64 {
        match sel {
            RowSelect::Mean => self.lerp_u(&self.mean, du),
            RowSelect::At(x) => {
                let t = &self.table;
                let f = (x - t.x0()) / t.dx();
                let i = f.floor();
                let w = f - i;
                let n = t.n_x() as i64;
                let r0 = (i as i64).rem_euclid(n) as usize;
                let r1 = (i as i64 + 1).rem_euclid(n) as usize;
                self.lerp_u(t.row(r0), du) * (1.0 - w) + self.lerp_u(t.row(r1), du) * w
            }
        }
    }

    /// Bin range `lo..hi` whose centres satisfy `|s_in + dir * u lambda| <= s_max`.
    fn propagating(&self, s_in: f64, s_max: f64, dir: f64) -> (usize, usize) {
        let t = &self.table;
        let lam = self.lambda.meters();
        let (a, b) = if dir > 0.0 {
            ((-s_max - s_in) / lam, (s_max - s_in) / lam)
        } else {
            ((s_in - s_max) / lam, (s_in + s_max) / lam)
        };
        let lo = ((a - t.u0()) / t.du() - 1e-9).ceil().max(0.0);
        let hi = ((b - t.u0()) / t.du() + 1e-9).floor() + 1.0;
        let hi = hi.min(t.n_u() as f64);
        if hi <= lo {
            (0, 0)
        } else {
            (lo as usize, hi as usize)
        }
    }
}

/// Result of drawing a frequency shift from a WBSDF row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSample {
    /// Sampled shift (bin centre), cycles per meter.
    pub delta_u: f64,
    /// New tangential direction component `s_in +- delta_u lambda`.
    pub s_out: f64,
    /// Signed estimator weight: `W du / pdf`.
    pub weight: f64,
    /// Discrete probability of the chosen bin.
    pub pdf: f64,
    /// Width of the chosen bin, cycles per meter.
    pub bin_width: f64,
}

/// Outgoing angle, signed weight and pdf of one WBSDF draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSample {
    pub theta_o: f64,
    pub weight: f64,
    pub pdf: f64,
}

/// Signed, tabulated scattering function, one table per wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct Wbsdf {
    mode: Mode,
    layers: Vec<Layer>,
}

impl Wbsdf {
    /// Single-wavelength WBSDF using `w` as the shift kernel.
    pub fn from_wdf(w: WignerTable, lambda: Wavelength, mode: Mode) -> Result<Self> {
        Self::from_tables(vec![(lambda, w)], mode)
    }

    /// One table per wavelength sample (sorted by wavelength).
    pub fn from_tables(tables: Vec<(Wavelength, WignerTable)>, mode: Mode) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::Argument("WBSDF needs at least one table".into()));
        }
        let mut layers = tables.into_iter().map(|(l, t)| Layer::new(l, t)).collect::<Result<Vec<_>>>()?;
        layers.sort_by(|a, b| a.lambda.meters().total_cmp(&b.lambda.meters()));
        Ok(Self { mode, layers })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn wavelengths(&self) -> Vec<Wavelength> {
        self.layers.iter().map(|l| l.lambda).collect()
    }

    pub fn table(&self, layer: usize) -> &WignerTable {
        &self.layers[layer].table
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Index of the table whose wavelength is closest to `lambda`.
    pub fn layer_for(&self, lambda: f64) -> usize {
        self.layers
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.lambda.meters() - lambda).abs().total_cmp(&(b.1.lambda.meters() - lambda).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Table extent along the grating axis: one period or the whole patch.
    pub fn cell(&self, layer: usize) -> f64 {
        self.layers[layer].table.extent()
    }

    fn sign(&self) -> f64 {
        match self.mode {
            Mode::Transmissive => 1.0,
            Mode::Reflective => -1.0,
        }
    }

    /// `(s sin(theta_o) - sin(theta_i)) / lambda`.
    pub fn delta_u(&self, theta_i: f64, theta_o: f64, lambda: f64) -> f64 {
        (self.sign() * theta_o.sin() - theta_i.sin()) / lambda
    }

    /// Signed kernel value `W(x, du)`, bilinear in `(x, du)`.
    pub fn eval(&self, x: f64, theta_i: f64, theta_o: f64, lambda: f64) -> f64 {
        if theta_i.abs() >= FRAC_PI_2 || theta_o.abs() >= FRAC_PI_2 {
            return 0.0;
        }
        let l = &self.layers[self.layer_for(lambda)];
        NORMALIZATION * l.eval(RowSelect::At(x), self.delta_u(theta_i, theta_o, lambda))
    }

    /// Kernel value at an explicit shift for the chosen row.
    pub fn eval_shift(&self, layer: usize, row: RowSelect, delta_u: f64) -> f64 {
        NORMALIZATION * self.layers[layer].eval(row, delta_u)
    }

    /// Draws a shift with probability `|W| / sum |W|` over the bins that keep
    /// `|s_out| <= s_max`, where `s_out = s_in + delta_u lambda` (`reverse`
    /// traces the shift backwards: `s_out = s_in - delta_u lambda`).
    pub fn sample_shift(
        &self,
        layer: usize,
        row: RowSelect,
        s_in: f64,
        s_max: f64,
        reverse: bool,
        draw: f64,
    ) -> Result<ShiftSample> {
        let l = &self.layers[layer];
        let dir = if reverse { -1.0 } else { 1.0 };
        let (lo, hi) = l.propagating(s_in, s_max, dir);
        let (vals, cdf) = l.row_values(row);
        let total = if hi > lo { cdf[hi] - cdf[lo] } else { 0.0 };
        if !(total > 0.0) {
            return Err(Error::Sampling("no propagating energy in the kernel row".into()));
        }
        let target = cdf[lo] + draw.clamp(0.0, 1.0) * total;
        // first bin whose upper prefix exceeds the target; ties go to the lower bin
        let mut j = lo + cdf[lo + 1..=hi].partition_point(|&c| c <= target);
        if j >= hi {
            j = hi - 1;
            while j > lo && vals[j] == 0.0 {
                j -= 1;
            }
        }
        let t = &l.table;
        let v = vals[j];
        let du = t.u(j);
        Ok(ShiftSample {
            delta_u: du,
            s_out: s_in + dir * du * l.lambda.meters(),
            weight: NORMALIZATION * v.signum() * total * t.du(),
            pdf: v.abs() / total,
            bin_width: t.du(),
        })
    }

    /// Uniform comparator: every propagating bin is equally likely.
    pub fn sample_shift_uniform(
        &self,
        layer: usize,
        row: RowSelect,
        s_in: f64,
        s_max: f64,
        reverse: bool,
        draw: f64,
    ) -> Result<ShiftSample> {
        let l = &self.layers[layer];
        let dir = if reverse { -1.0 } else { 1.0 };
        let (lo, hi) = l.propagating(s_in, s_max, dir);
        if hi <= lo {
            return Err(Error::Sampling("no propagating bins".into()));
        }
        let k = hi - lo;
        let j = (lo + (draw * k as f64) as usize).min(hi - 1);
        let (vals, _) = l.row_values(row);
        let t = &l.table;
        let du = t.u(j);
        Ok(ShiftSample {
            delta_u: du,
            s_out: s_in + dir * du * l.lambda.meters(),
            weight: NORMALIZATION * vals[j] * t.du() * k as f64,
            pdf: 1.0 / k as f64,
            bin_width: t.du(),
        })
    }

    /// Fraction of `sum |W|` in the row that is propagating for `s_in`.
    pub fn propagating_fraction(&self, layer: usize, row: RowSelect, s_in: f64, s_max: f64) -> f64 {
        let l = &self.layers[layer];
        let (lo, hi) = l.propagating(s_in, s_max, 1.0);
        let (_, cdf) = l.row_values(row);
        let all = cdf[cdf.len() - 1];
        if all == 0.0 || hi <= lo {
            0.0
        } else {
            (cdf[hi] - cdf[lo]) / all
        }
    }

    /// Importance-sampled outgoing angle for incidence `theta_i`.
    pub fn sample(&self, x: f64, theta_i: f64, lambda: f64, draw: f64) -> Result<AngleSample> {
        let layer = self.layer_for(lambda);
        let s = self.sample_shift(layer, RowSelect::At(x), theta_i.sin(), 1.0, false, draw)?;
        Ok(AngleSample { theta_o: (self.sign() * s.s_out).clamp(-1.0, 1.0).asin(), weight: s.weight, pdf: s.pdf })
    }

    /// Far-field intensity `sum_x W(x, du) dx` for the pair of angles, as a
    /// diffraction shader would report it.
    pub fn stam_far_field(&self, theta_1: f64, theta_2: f64, lambda: f64) -> f64 {
        let l = &self.layers[self.layer_for(lambda)];
        let du = self.delta_u(theta_1, theta_2, lambda);
        let t = &l.table;
        NORMALIZATION * l.lerp_u(&l.mean, du) * t.extent()
    }
}
