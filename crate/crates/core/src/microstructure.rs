//! Parametric surface models and their complex transmittance `t(x) = a(x) e^{i phi(x)}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexGrid, ComplexGrid2d};

/// Finest feature must span at least this many samples.
pub const MIN_SAMPLES_PER_FEATURE: f64 = 8.0;

/// Refractive index assumed for transmissive height profiles.
pub const DEFAULT_REFRACTIVE_INDEX: f64 = 1.5;

/// Vacuum wavelength in meters, restricted to 100 nm ..= 10 um.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Wavelength(f64);

impl Wavelength {
    pub const MIN: f64 = 100e-9;
    pub const MAX: f64 = 10e-6;

    pub fn new(meters: f64) -> Result<Self> {
        if !(Self::MIN..=Self::MAX).contains(&meters) {
            return Err(Error::Argument(format!(
                "wavelength {meters:e} m outside [{:e}, {:e}] (units are meters)",
                Self::MIN,
                Self::MAX
            )));
        }
        Ok(Self(meters))
    }

    pub fn meters(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Wavelength {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Wavelength> for f64 {
    fn from(w: Wavelength) -> f64 {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Transmissive,
    #[default]
    Reflective,
}

/// Grating depth, either as the phase excursion itself or as a height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    /// Peak-to-peak phase `m` in radians, independent of wavelength.
    Phase(f64),
    /// Peak-to-peak height in meters.
    Height(f64),
}

impl Modulation {
    fn phase(self, scale: f64) -> f64 {
        match self {
            Modulation::Phase(m) => m,
            Modulation::Height(h) => scale * h,
        }
    }

    fn value(self) -> f64 {
        match self {
            Modulation::Phase(v) | Modulation::Height(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MicrostructureKind {
    Flat,
    /// `t(x) = exp(i (m/2) sin(2 pi x / p))`.
    SinusoidalGrating {
        depth: Modulation,
        pitch: f64,
    },
    /// Phase `m` inside the groove (`duty` of each period), 0 elsewhere.
    BinaryPhaseGrating {
        depth: Modulation,
        pitch: f64,
        #[serde(default = "default_duty")]
        duty: f64,
    },
    Slit {
        width: f64,
    },
    DoubleSlit {
        width: f64,
        separation: f64,
    },
    CircularAperture {
        radius: f64,
    },
    /// Height samples (meters) at spacing `dx`, repeated periodically.
    Heightfield {
        samples: Vec<f64>,
        dx: f64,
    },
}

fn default_duty() -> f64 {
    0.5
}

fn default_index() -> f64 {
    DEFAULT_REFRACTIVE_INDEX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Microstructure {
    #[serde(flatten)]
    pub kind: MicrostructureKind,
    #[serde(default)]
    pub mode: Mode,
    /// Per-sample amplitude `a(x)` in `[0, 1]`; must match the grid length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_mask: Option<Vec<f64>>,
    #[serde(default = "default_index")]
    pub refractive_index: f64,
}

impl Microstructure {
    pub fn new(kind: MicrostructureKind, mode: Mode) -> Self {
        Self { kind, mode, amplitude_mask: None, refractive_index: DEFAULT_REFRACTIVE_INDEX }
    }

    pub fn flat(mode: Mode) -> Self {
        Self::new(MicrostructureKind::Flat, mode)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Argument(format!("{what} must be positive, got {v}")))
            }
        };
        match &self.kind {
            MicrostructureKind::Flat => {}
            MicrostructureKind::SinusoidalGrating { depth, pitch } => {
                pos(*pitch, "pitch")?;
                nonneg(depth.value(), "grating depth")?;
            }
            MicrostructureKind::BinaryPhaseGrating { depth, pitch, duty } => {
                pos(*pitch, "pitch")?;
                nonneg(depth.value(), "grating depth")?;
                if !(*duty > 0.0 && *duty < 1.0) {
                    return Err(Error::Argument(format!("duty must be in (0, 1), got {duty}")));
                }
            }
            MicrostructureKind::Slit { width } => pos(*width, "slit width")?,
            MicrostructureKind::DoubleSlit { width, separation } => {
                pos(*width, "slit width")?;
                pos(*separation, "slit separation")?;
                if separation <= width {
                    return Err(Error::Argument("slit separation must exceed the width".into()));
                }
            }
            MicrostructureKind::CircularAperture { radius } => pos(*radius, "radius")?,
            MicrostructureKind::Heightfield { samples, dx } => {
                pos(*dx, "heightfield dx")?;
                if samples.len() < 2 {
                    return Err(Error::Argument("heightfield needs at least 2 samples".into()));
                }
                if let Some(i) = samples.iter().position(|h| !h.is_finite()) {
                    return Err(Error::Data(format!("non-finite height at sample {i}")));
                }
            }
        }
        pos(self.refractive_index, "refractive index")?;
        if let Some(mask) = &self.amplitude_mask {
            if let Some(i) = mask.iter().position(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::Argument(format!("amplitude mask value {} at {i} outside [0, 1]", mask[i])));
            }
        }
        Ok(())
    }

    /// Radians of phase per meter of height.
    pub fn phase_per_height(&self, lambda: Wavelength, theta_i: f64) -> f64 {
        let k = 2.0 * PI / lambda.meters();
        match self.mode {
            Mode::Reflective => k * (1.0 + theta_i.cos()),
            Mode::Transmissive => k * (self.refractive_index - 1.0),
        }
    }

    /// Smallest length the sampling grid has to resolve.
    pub fn finest_feature(&self) -> Option<f64> {
        match &self.kind {
            MicrostructureKind::Flat | MicrostructureKind::Heightfield { .. } => None,
            MicrostructureKind::SinusoidalGrating { pitch, .. } => Some(*pitch),
            MicrostructureKind::BinaryPhaseGrating { pitch, duty, .. } => Some(pitch * duty.min(1.0 - duty)),
            MicrostructureKind::Slit { width } | MicrostructureKind::DoubleSlit { width, .. } => Some(*width),
            MicrostructureKind::CircularAperture { radius } => Some(2.0 * radius),
        }
    }

    /// Complex amplitude (before the amplitude mask) at position `x`.
    fn value_at(&self, x: f64, scale: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match &self.kind {
            MicrostructureKind::Flat => one,
            MicrostructureKind::SinusoidalGrating { depth, pitch } => {
                let m = depth.phase(scale);
                Complex64::from_polar(1.0, 0.5 * m * (2.0 * PI * x / pitch).sin())
            }
            MicrostructureKind::BinaryPhaseGrating { depth, pitch, duty } => {
                let frac = (x / pitch).rem_euclid(1.0);
                if frac < *duty {
                    Complex64::from_polar(1.0, depth.phase(scale))
                } else {
                    one
                }
            }
            MicrostructureKind::Slit { width } => {
                if in_open(x, *width) {
                    one
                } else {
                    zero
                }
            }
            MicrostructureKind::DoubleSlit { width, separation } => {
                let h = 0.5 * separation;
                if in_open(x - h, *width) || in_open(x + h, *width) {
                    one
                } else {
                    zero
                }
            }
            MicrostructureKind::CircularAperture { radius } => {
                if x.abs() <= *radius {
                    one
                } else {
                    zero
                }
            }
            MicrostructureKind::Heightfield { samples, dx } => {
                Complex64::from_polar(1.0, scale * interp_periodic(samples, *dx, x))
            }
        }
    }
}

fn nonneg(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("{what} must be >= 0, got {v}")))
    }
}

/// Half-open window `[-w/2, w/2)`, so a width of `k dx` covers exactly `k` samples.
fn in_open(x: f64, width: f64) -> bool {
    let eps = 1e-9 * width;
    x >= -0.5 * width - eps && x < 0.5 * width - eps
}

fn interp_periodic(h: &[f64], dx: f64, x: f64) -> f64 {
    let n = h.len();
    let f = (x / dx).rem_euclid(n as f64);
    let i = f.floor() as usize % n;
    let w = f - f.floor();
    h[i] * (1.0 - w) + h[(i + 1) % n] * w
}

/// Sampling lattice of a realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub dx: f64,
    /// Coordinate of sample 0; centred on the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

impl GridSpec {
    pub fn centered(n: usize, dx: f64) -> Self {
        Self { n, dx, x0: None }
    }

    /// Grid starting at `x = 0`, the natural choice for one grating period.
    pub fn from_origin(n: usize, dx: f64) -> Self {
        Self { n, dx, x0: Some(0.0) }
    }

    pub fn origin(&self) -> f64 {
        self.x0.unwrap_or(-((self.n / 2) as f64) * self.dx)
    }
}

fn check_sampling(s: &Microstructure, dx: f64) -> Result<()> {
    if let Some(f) = s.finest_feature() {
        let per = f / dx;
        if per < MIN_SAMPLES_PER_FEATURE * (1.0 - 1e-9) {
            return Err(Error::Precision(format!(
                "grid undersamples the microstructure: finest feature {f:e} m spans {per:.2} samples, need >= {MIN_SAMPLES_PER_FEATURE}"
            )));
        }
    }
    Ok(())
}

/// Samples `t(x)` of the microstructure for one wavelength and incidence angle.
///
/// Reflective height profiles use the tangent-plane phase
/// `(2 pi / lambda)(1 + cos theta_i) h(x)`; transmissive ones
/// `(2 pi / lambda)(n - 1) h(x)`.
pub fn realize(s: &Microstructure, lambda: Wavelength, theta_i: f64, grid: &GridSpec) -> Result<ComplexGrid> {
    s.validate()?;
    if matches!(s.kind, MicrostructureKind::CircularAperture { .. }) {
        return Err(Error::Argument("a circular aperture is two-dimensional and not separable; use realize_2d".into()));
    }
    if !theta_i.is_finite() || theta_i.abs() >= PI / 2.0 {
        return Err(Error::Argument(format!("incidence angle {theta_i} outside (-pi/2, pi/2)")));
    }
    check_sampling(s, grid.dx)?;
    let scale = s.phase_per_height(lambda, theta_i);
    let x0 = grid.origin();
    let mut t = ComplexGrid::from_fn(grid.n, grid.dx, x0, |x| s.value_at(x, scale))?;
    if let Some(mask) = &s.amplitude_mask {
        if mask.len() != grid.n {
            return Err(Error::Argument(format!("amplitude mask has {} samples, grid has {}", mask.len(), grid.n)));
        }
        let samples = t.samples().iter().zip(mask).map(|(c, a)| c * a).collect();
        t = ComplexGrid::new(samples, grid.dx, x0)?;
    }
    Ok(t)
}

/// 2D realization; 1D kinds are extruded along `y`.
pub fn realize_2d(
    s: &Microstructure,
    lambda: Wavelength,
    theta_i: f64,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
) -> Result<ComplexGrid2d> {
    s.validate()?;
    check_sampling(s, dx.max(dy))?;
    let scale = s.phase_per_height(lambda, theta_i);
    if s.amplitude_mask.is_some() {
        return Err(Error::Argument("amplitude masks are one-dimensional".into()));
    }
    ComplexGrid2d::from_fn(nx, ny, dx, dy, |x, y| match &s.kind {
        MicrostructureKind::CircularAperture { radius } => {
            if x * x + y * y <= radius * radius {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        _ => s.value_at(x, scale),
    })
}

/// Sample autocorrelation of a height profile.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightAutocorrelation {
    /// `R_h(k dx)` for `k = 0 .. N-1`; `R_h(0) = sigma_h^2`.
    pub values: Vec<f64>,
    pub dx: f64,
    pub sigma_h: f64,
}

/// Unbiased autocorrelation of the mean-removed heights:
/// `R(k) = 1/(N-k) sum_i (h_i - mean)(h_{i+k} - mean)`.
pub fn autocorrelation_height(s: &Microstructure) -> Result<HeightAutocorrelation> {
    let MicrostructureKind::Heightfield { samples, dx } = &s.kind else {
        return Err(Error::Argument("autocorrelation needs a heightfield microstructure".into()));
    };
    s.validate()?;
    let n = samples.len();
    if samples.iter().all(|h| *h == samples[0]) {
        // exact zero, not the rounding residue of the mean removal
        return Ok(HeightAutocorrelation { values: vec![0.0; n], dx: *dx, sigma_h: 0.0 });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = samples.iter().map(|h| h - mean).collect();
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let s: f64 = (0..n - k).map(|i| d[i] * d[i + k]).sum();
            s / (n - k) as f64
        })
        .collect();
    let sigma_h = values[0].max(0.0).sqrt();
    Ok(HeightAutocorrelation { values, dx: *dx, sigma_h })
}

/// Reads a uniformly spaced height profile from CSV rows `x_meters,height_meters`.
///
/// A header row is allowed; the spacing is taken from the first two rows and
/// every later step must agree with it to 1e-6 relative.
pub fn heightfield_from_csv(r: impl std::io::Read, mode: Mode) -> Result<Microstructure> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut xs = Vec::new();
    let mut hs = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("heightfield CSV: {e}")))?;
        if rec.len() != 2 {
            return Err(Error::Data(format!(
                "heightfield CSV line {}: expected 2 columns, got {}",
                line + 1,
                rec.len()
            )));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(h)) => {
                xs.push(x);
                hs.push(h);
            }
            _ if line == 0 => continue,
            _ => return Err(Error::Data(format!("heightfield CSV line {}: not a number pair", line + 1))),
        }
    }
    if xs.len() < 2 {
        return Err(Error::Data("heightfield CSV needs at least two samples".into()));
    }
    let dx = xs[1] - xs[0];
    if !(dx > 0.0) || xs.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-6 * dx) {
        return Err(Error::Data("heightfield CSV x values must be increasing and uniformly spaced".into()));
    }
    let s = Microstructure::new(MicrostructureKind::Heightfield { samples: hs, dx }, mode);
    s.validate()?;
    Ok(s)
}
