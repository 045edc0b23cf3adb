use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Uniformly sampled complex transmittance / reflectance `t(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    samples: Vec<Complex64>,
    dx: f64,
    x0: f64,
}

fn check_len(n: usize, what: &str) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Argument(format!("{what} length must be a power of two >= 2, got {n}")));
    }
    Ok(())
}

fn check_spacing(d: f64, what: &str) -> Result<()> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Argument(format!("{what} must be positive, got {d}")));
    }
    Ok(())
}

impl ComplexGrid {
    pub fn new(samples: Vec<Complex64>, dx: f64, x0: f64) -> Result<Self> {
        check_len(samples.len(), "grid")?;
        check_spacing(dx, "dx")?;
        if !x0.is_finite() {
            return Err(Error::Argument("x0 must be finite".into()));
        }
        if let Some(i) = samples.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Data(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, dx, x0 })
    }

    /// Samples `f` at `x0 + i * dx`.
    pub fn from_fn(n: usize, dx: f64, x0: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = (0..n).map(|i| f(x0 + i as f64 * dx)).collect();
        Self::new(samples, dx, x0)
    }

    /// Grid centred on `x = 0` (sample `n/2` sits at the origin).
    pub fn centered(samples: Vec<Complex64>, dx: f64) -> Result<Self> {
        let x0 = -((samples.len() / 2) as f64) * dx;
        Self::new(samples, dx, x0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// Physical extent `N * dx`.
    pub fn extent(&self) -> f64 {
        self.len() as f64 * self.dx
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `sum |t|^2 dx`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx
    }

    /// Continuous-normalized spectrum `T(u_k) = dx * DFT(t)[k]` in centred
    /// order, `k = -N/2 .. N/2-1`, `u_k = k / (N dx)`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let n = self.len();
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        (0..n).map(|i| buf[(i + n / 2) % n] * self.dx).collect()
    }

    /// Frequency spacing of [`ComplexGrid::spectrum`].
    pub fn du(&self) -> f64 {
        1.0 / (self.len() as f64 * self.dx)
    }

    /// Circularly shifts the samples by `k` (positive moves content to +x).
    pub fn translated(&self, k: isize) -> ComplexGrid {
        let n = self.len() as isize;
        let samples = (0..n).map(|i| self.samples[((i - k).rem_euclid(n)) as usize]).collect();
        ComplexGrid { samples, dx: self.dx, x0: self.x0 }
    }

    /// Multiplies by the plane wave `exp(i 2 pi u0 (x - x0))`.
    pub fn modulated(&self, u0: f64) -> ComplexGrid {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * u0 * i as f64 * self.dx))
            .collect();
        ComplexGrid { samples, dx: self.dx, x0: self.x0 }
    }
}

/// Row-major (`y` outer) 2D complex field `t(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid2d {
    samples: Vec<Complex64>,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    x0: f64,
    y0: f64,
}

impl ComplexGrid2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(samples: Vec<Complex64>, nx: usize, ny: usize, dx: f64, dy: f64, x0: f64, y0: f64) -> Result<Self> {
        check_len(nx, "grid x")?;
        check_len(ny, "grid y")?;
        check_spacing(dx, "dx")?;
        check_spacing(dy, "dy")?;
        if samples.len() != nx * ny {
            return Err(Error::Argument(format!("expected {} samples, got {}", nx * ny, samples.len())));
        }
        if samples.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Data("non-finite sample in 2D grid".into()));
        }
        Ok(Self { samples, nx, ny, dx, dy, x0, y0 })
    }

    pub fn from_fn(nx: usize, ny: usize, dx: f64, dy: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let x0 = -((nx / 2) as f64) * dx;
        let y0 = -((ny / 2) as f64) * dy;
        let mut samples = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                samples.push(f(x0 + i as f64 * dx, y0 + j as f64 * dy));
            }
        }
        Self::new(samples, nx, ny, dx, dy, x0, y0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.samples[j * self.nx + i]
    }
}
