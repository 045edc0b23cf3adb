use std::io::Write;

use crate::error::{Error, Result};

/// How a finite patch is continued outside its samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Opaque surround: samples outside the patch are zero.
    Zero,
    /// The patch is one period of an infinite periodic structure.
    Periodic,
}

/// Real, signed table `W(x, u)` with uniform position / spatial-frequency axes.
///
/// Values are stored row-major with `x` outer. Units are chosen so that
/// `sum_u W du` is the local intensity `|t(x)|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerTable {
    pub(crate) values: Vec<f64>,
    pub(crate) n_x: usize,
    pub(crate) n_u: usize,
    pub(crate) x0: f64,
    pub(crate) dx: f64,
    pub(crate) u0: f64,
    pub(crate) du: f64,
    pub(crate) boundary: Boundary,
}

impl WignerTable {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        values: Vec<f64>,
        n_x: usize,
        n_u: usize,
        x0: f64,
        dx: f64,
        u0: f64,
        du: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if n_x == 0 || n_u == 0 || values.len() != n_x * n_u {
            return Err(Error::Argument(format!("table shape {n_x}x{n_u} does not match {} values", values.len())));
        }
        if !(dx > 0.0 && du > 0.0 && dx.is_finite() && du.is_finite()) {
            return Err(Error::Argument("table spacings must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite table value".into()));
        }
        Ok(Self { values, n_x, n_u, x0, dx, u0, du, boundary })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn du(&self) -> f64 {
        self.du
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iu: usize) -> f64 {
        self.values[ix * self.n_u + iu]
    }

    pub fn row(&self, ix: usize) -> &[f64] {
        &self.values[ix * self.n_u..(ix + 1) * self.n_u]
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }

    pub fn u(&self, iu: usize) -> f64 {
        self.u0 + iu as f64 * self.du
    }

    /// Bin index of `u` if it falls on the axis (nearest bin).
    pub fn u_index(&self, u: f64) -> Option<usize> {
        let f = ((u - self.u0) / self.du).round();
        if f >= 0.0 && (f as usize) < self.n_u {
            Some(f as usize)
        } else {
            None
        }
    }

    /// Length of the x axis, `n_x * dx`: the patch (or period) it describes.
    pub fn extent(&self) -> f64 {
        self.n_x as f64 * self.dx
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `sum_u W(x, u) du` for every x row: the local intensity.
    pub fn intensity_marginal(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.row(i).iter().sum::<f64>() * self.du).collect()
    }

    /// `sum_x W(x, u) dx` for every u bin: the far-field spectrum.
    pub fn spectrum_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_u];
        for i in 0..self.n_x {
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|v| *v *= self.dx);
        out
    }

    /// `sum_{x,u} W dx du`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx * self.du
    }

    /// Row averaged over the full x axis (one patch / one period).
    pub fn mean_row(&self) -> Vec<f64> {
        let mut m = self.spectrum_marginal();
        let ext = self.extent();
        m.iter_mut().for_each(|v| *v /= ext);
        m
    }

    /// CSV with header `x_meters,u_cycles_per_meter,value`, x outer.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x_meters,u_cycles_per_meter,value")?;
        for i in 0..self.n_x {
            let x = self.x(i);
            for (k, v) in self.row(i).iter().enumerate() {
                writeln!(w, "{:e},{:e},{:e}", x, self.u(k), v)?;
            }
        }
        Ok(())
    }
}

/// Both projections of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    /// `sum_u W du`, one value per x row.
    pub intensity: Vec<f64>,
    /// `sum_x W dx`, one value per u bin.
    pub spectrum: Vec<f64>,
}

pub fn marginals(w: &WignerTable) -> Marginals {
    Marginals { intensity: w.intensity_marginal(), spectrum: w.spectrum_marginal() }
}
