//! Diffraction-limited thin-lens PSFs.
//!
//! Kernels come from the pupil function: a circular aperture (foreshortened
//! off axis) carrying the quadratic defocus phase of a source that focuses
//! at `s'_src` while the film sits at `s'`. The film field is the pupil's
//! Fourier transform evaluated directly at film positions, so no resampling
//! is needed. Kernels are expressed relative to the chief-ray image point.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sub-samples per film pixel along each axis.
const SUPERSAMPLE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LensSpec {
    pub focal_length: f64,
    pub f_number: f64,
    /// Distance of the plane in focus; infinity when absent.
    #[serde(default)]
    pub focus_distance: Option<f64>,
}

/// Image distance for an object at `s` (infinity when `None`).
fn image_distance(f: f64, s: Option<f64>) -> Result<f64> {
    match s {
        None => Ok(f),
        Some(s) if s > f => Ok(1.0 / (1.0 / f - 1.0 / s)),
        Some(s) => Err(Error::Argument(format!("object distance {s} must exceed the focal length {f}"))),
    }
}

impl LensSpec {
    pub fn new(focal_length: f64, f_number: f64, focus_distance: Option<f64>) -> Result<Self> {
        let l = Self { focal_length, f_number, focus_distance };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length > 0.0 && self.f_number > 0.0) || self.focus_distance.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::Argument("lens parameters must be positive".into()));
        }
        self.film_distance().map(|_| ())
    }

    pub fn aperture_diameter(&self) -> f64 {
        self.focal_length / self.f_number
    }

    /// Lens-to-film distance from the thin-lens equation.
    pub fn film_distance(&self) -> Result<f64> {
        image_distance(self.focal_length, self.focus_distance)
    }

    /// First Airy zero on the film for a source in focus.
    pub fn airy_radius(&self, lambda: f64) -> f64 {
        1.22 * lambda * self.film_distance().unwrap_or(self.focal_length) / self.aperture_diameter()
    }

    /// Geometric circle-of-confusion diameter for a source at `depth`.
    pub fn blur_diameter(&self, depth: Option<f64>) -> Result<f64> {
        let s_img = self.film_distance()?;
        let s_src = image_distance(self.focal_length, depth)?;
        Ok(self.aperture_diameter() * (s_src - s_img).abs() / s_src)
    }
}

/// Square film sampling of a kernel: `size` (odd) pixels of `pitch` meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub size: usize,
    pub pitch: f64,
}

/// Nonnegative, unit-sum intensity kernel, row-major, centre at `size / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfKernel {
    pub size: usize,
    pub pitch: f64,
    pub values: Vec<f64>,
}

impl PsfKernel {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.size + x]
    }

    /// One-pixel identity kernel.
    pub fn identity(pitch: f64) -> Self {
        Self { size: 1, pitch, values: vec![1.0] }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Pupil-function PSF for a source at `source_depth` (infinity when `None`)
/// seen at `field_angle` radians off axis.
pub fn compute_psf(
    lens: &LensSpec,
    source_depth: Option<f64>,
    field_angle: f64,
    lambda: f64,
    kernel: KernelSpec,
) -> Result<PsfKernel> {
    lens.validate()?;
    if kernel.size.is_multiple_of(2) || !(kernel.pitch > 0.0) {
        return Err(Error::Argument("kernel size must be odd and pitch positive".into()));
    }
    if !(field_angle.abs() < PI / 2.0) || !(lambda > 0.0) {
        return Err(Error::Argument("field angle must be within +-90 degrees and lambda positive".into()));
    }
    let s_img = lens.film_distance()?;
    let r0 = lens.airy_radius(lambda);
    let c = lens.blur_diameter(source_depth)?;
    // central lobe: Airy core widened by the geometric blur
    let core = 2.0 * r0 + c;
    if core < 6.0 * kernel.pitch {
        return Err(Error::Precision(format!(
            "kernel pitch {:.3e} m puts fewer than 6 samples across the PSF core ({:.3e} m wide; Airy first zero {:.3e} m)",
            kernel.pitch, core, r0
        )));
    }
    let s_src = image_distance(lens.focal_length, source_depth)?;
    let d = lens.aperture_diameter();
    let r = d / 2.0;
    let half = (kernel.size / 2) as f64 * kernel.pitch + kernel.pitch;
    // pupil spacing chosen so the film-side period covers the kernel twice
    let period = 2.0 * (2.0 * half + c) + 8.0 * r0;
    let np = ((d * period / (lambda * s_img)).ceil() as usize).clamp(64, 4096);
    let dxi = d / np as f64;
    let squash = field_angle.cos();
    let defocus = PI / lambda * (1.0 / s_img - 1.0 / s_src);

    // anti-aliased, foreshortened pupil with defocus phase
    const AA: usize = 4;
    let mut pupil = vec![Complex64::new(0.0, 0.0); np * np];
    pupil.par_chunks_mut(np).enumerate().for_each(|(j, row)| {
        for (i, p) in row.iter_mut().enumerate() {
            let mut cover = 0usize;
            for a in 0..AA {
                for b in 0..AA {
                    let xi = -r + (i as f64 + (a as f64 + 0.5) / AA as f64) * dxi;
                    let eta = -r + (j as f64 + (b as f64 + 0.5) / AA as f64) * dxi;
                    if (xi / (r * squash)).powi(2) + (eta / r).powi(2) <= 1.0 {
                        cover += 1;
                    }
                }
            }
            if cover > 0 {
                let xi = -r + (i as f64 + 0.5) * dxi;
                let eta = -r + (j as f64 + 0.5) * dxi;
                *p = Complex64::from_polar(cover as f64 / (AA * AA) as f64, defocus * (xi * xi + eta * eta));
            }
        }
    });

    // film sample positions with supersampling
    let m = kernel.size * SUPERSAMPLE;
    let pos: Vec<f64> = (0..m)
        .map(|k| {
            let pix = (k / SUPERSAMPLE) as f64 - (kernel.size / 2) as f64;
            let sub = ((k % SUPERSAMPLE) as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
            (pix + sub) * kernel.pitch
        })
        .collect();
    // A[k][i] = exp(-i 2 pi xi_i x_k / (lambda s'))
    let dft: Vec<Complex64> = pos
        .iter()
        .flat_map(|&x| {
            (0..np).map(move |i| {
                let xi = -r + (i as f64 + 0.5) * dxi;
                Complex64::from_polar(1.0, -2.0 * PI * xi * x / (lambda * s_img))
            })
        })
        .collect();
    // tmp[j][k] = sum_i pupil[j][i] A[k][i]  (transform along xi)
    let tmp: Vec<Complex64> = (0..np)
        .into_par_iter()
        .flat_map_iter(|j| {
            let row = &pupil[j * np..(j + 1) * np];
            let dft = &dft;
            (0..m).map(move |k| {
                let a = &dft[k * np..(k + 1) * np];
                row.iter().zip(a).map(|(p, e)| p * e).sum::<Complex64>()
            })
        })
        .collect();
    // film[ky][kx] = sum_j A[ky][j] tmp[j][kx]
    let fine: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|ky| {
            let a = &dft[ky * np..(ky + 1) * np];
            let tmp = &tmp;
            (0..m).map(move |kx| (0..np).map(|j| a[j] * tmp[j * m + kx]).sum::<Complex64>().norm_sqr())
        })
        .collect();
    let mut values = vec![0.0; kernel.size * kernel.size];
    for ky in 0..m {
        for kx in 0..m {
            // film y runs upward, rows run downward
            let row = kernel.size - 1 - ky / SUPERSAMPLE;
            values[row * kernel.size + kx / SUPERSAMPLE] += fine[ky * m + kx];
        }
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Internal("PSF has no energy".into()));
    }
    values.iter_mut().for_each(|v| *v /= total);
    Ok(PsfKernel { size: kernel.size, pitch: kernel.pitch, values })
}

/// `n` source depths spaced geometrically over `[near, far]`.
pub fn depth_planes(near: f64, far: f64, n: usize) -> Result<Vec<f64>> {
    if !(near > 0.0 && far >= near) || n == 0 {
        return Err(Error::Argument("depth range must be positive and ordered, with at least one plane".into()));
    }
    if n == 1 {
        return Ok(vec![(near * far).sqrt()]);
    }
    let q = (far / near).powf(1.0 / (n - 1) as f64);
    Ok((0..n).map(|i| near * q.powi(i as i32)).collect())
}

pub const DEFAULT_DEPTH_PLANES: usize = 8;

/// Kernels indexed by (field angle, depth plane, wavelength).
#[derive(Debug, Clone, PartialEq)]
pub struct PsfStack {
    pub lens: LensSpec,
    pub field_angles: Vec<f64>,
    pub depths: Vec<f64>,
    pub wavelengths: Vec<f64>,
    pub pitch: f64,
    /// `[(field * depths + depth) * wavelengths + lambda]`.
    pub kernels: Vec<PsfKernel>,
}

impl PsfStack {
    pub fn build(
        lens: LensSpec,
        field_angles: &[f64],
        depths: &[f64],
        wavelengths: &[f64],
        kernel: KernelSpec,
    ) -> Result<Self> {
        if field_angles.is_empty() || depths.is_empty() || wavelengths.is_empty() {
            return Err(Error::Argument("stack needs at least one field angle, depth and wavelength".into()));
        }
        let (nd, nl) = (depths.len(), wavelengths.len());
        let kernels = (0..field_angles.len() * nd * nl)
            .into_par_iter()
            .map(|i| {
                let (f, d, l) = (i / (nd * nl), (i / nl) % nd, i % nl);
                compute_psf(&lens, Some(depths[d]), field_angles[f], wavelengths[l], kernel)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lens,
            field_angles: field_angles.to_vec(),
            depths: depths.to_vec(),
            wavelengths: wavelengths.to_vec(),
            pitch: kernel.pitch,
            kernels,
        })
    }

    /// A stack holding a single kernel for every lookup.
    pub fn single(lens: LensSpec, kernel: PsfKernel, depth: f64, wavelengths: usize) -> Self {
        Self {
            lens,
            field_angles: vec![0.0],
            depths: vec![depth],
            wavelengths: vec![0.0; wavelengths],
            pitch: kernel.pitch,
            kernels: vec![kernel; wavelengths],
        }
    }

    pub fn kernel(&self, field: usize, depth: usize, lambda: usize) -> &PsfKernel {
        &self.kernels[(field * self.depths.len() + depth) * self.wavelengths.len() + lambda]
    }

    fn nearest_field(&self, angle: f64) -> usize {
        nearest(&self.field_angles, angle, |a| a)
    }

    /// Nearest plane in log depth; `None` when `depth` lies outside the stack.
    fn depth_index(&self, depth: f64) -> (usize, bool) {
        let lo = self.depths.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.depths.iter().copied().fold(0.0, f64::max);
        let clamped = !(depth >= lo && depth <= hi);
        let d = if depth.is_finite() && depth > 0.0 { depth.clamp(lo, hi) } else { hi };
        (nearest(&self.depths, d, f64::ln), clamped)
    }
}

fn nearest(xs: &[f64], v: f64, map: impl Fn(f64) -> f64) -> usize {
    let mv = map(v);
    (0..xs.len()).min_by(|&a, &b| (map(xs[a]) - mv).abs().total_cmp(&(map(xs[b]) - mv).abs())).unwrap_or(0)
}

/// Multi-channel image, one channel per stack wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// `[(y * width + x) * channels + c]`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsfOutput {
    pub image: ChannelImage,
    /// Pixels whose depth fell outside the stack and were clamped.
    pub clamped_depths: usize,
}

/// Spatially varying convolution: every input pixel spreads its value with
/// the kernel of its (field bucket, nearest depth plane, wavelength), and the
/// part of the kernel falling inside the frame is renormalized so no energy
/// leaves through the edges. The image pitch is the stack's kernel pitch.
pub fn apply_psf(image: &ChannelImage, stack: &PsfStack, depth_map: &[f64]) -> Result<PsfOutput> {
    let (w, h, nc) = (image.width, image.height, image.channels);
    if depth_map.len() != w * h || image.values.len() != w * h * nc {
        return Err(Error::Argument("image and depth map sizes differ".into()));
    }
    if nc != stack.wavelengths.len() {
        return Err(Error::Argument("image channels must match the stack wavelengths".into()));
    }
    let s_img = stack.lens.film_distance()?;
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut clamped = 0;
    // per input pixel: field bucket, depth plane, azimuth
    let lookup: Vec<(usize, usize, f64)> = (0..w * h)
        .map(|i| {
            let (fx, fy) = ((i % w) as f64 - cx, cy - (i / w) as f64);
            let rho = (fx * fx + fy * fy).sqrt() * stack.pitch;
            let field = stack.nearest_field((rho / s_img).atan());
            let (d, c) = stack.depth_index(depth_map[i]);
            clamped += c as usize;
            (field, d, fy.atan2(fx))
        })
        .collect();

    // kernel weight an input pixel sends to offset (ox, oy), image axes
    let weight = |i: usize, c: usize, ox: isize, oy: isize| -> f64 {
        let (f, d, phi) = lookup[i];
        let k = stack.kernel(f, d, c);
        let half = (k.size / 2) as isize;
        let (kx, ky) = if stack.field_angles[f] == 0.0 {
            (ox, oy)
        } else {
            // rotate into the kernel frame whose x axis points radially
            let (s, co) = phi.sin_cos();
            let (ex, ey) = (ox as f64, -(oy as f64));
            let rx = ex * co + ey * s;
            let ry = -ex * s + ey * co;
            (rx.round() as isize, -(ry.round() as isize))
        };
        if kx.abs() > half || ky.abs() > half {
            0.0
        } else {
            k.get((kx + half) as usize, (ky + half) as usize)
        }
    };
    let radius = stack.kernels.iter().map(|k| k.size / 2).max().unwrap_or(0) as isize;
    let norms: Vec<f64> = (0..w * h * nc)
        .into_par_iter()
        .map(|ic| {
            let (i, c) = (ic / nc, ic % nc);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            let mut s = 0.0;
            for oy in -radius..=radius {
                for ox in -radius..=radius {
                    let (tx, ty) = (x + ox, y + oy);
                    if tx >= 0 && ty >= 0 && (tx as usize) < w && (ty as usize) < h {
                        s += weight(i, c, ox, oy);
                    }
                }
            }
            s
        })
        .collect();
    let values: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let (norms, weight) = (&norms, &weight);
            (0..w * nc).map(move |xc| {
                let (x, c) = ((xc / nc) as isize, xc % nc);
                let y = y as isize;
                let mut acc = 0.0;
                for oy in -radius..=radius {
                    for ox in -radius..=radius {
                        let (sx, sy) = (x - ox, y - oy);
                        if sx < 0 || sy < 0 || sx as usize >= w || sy as usize >= h {
                            continue;
                        }
                        let i = sy as usize * w + sx as usize;
                        let v = image.values[i * nc + c];
                        if v != 0.0 {
                            let n = norms[i * nc + c];
                            if n > 0.0 {
                                acc += v * weight(i, c, ox, oy) / n;
                            }
                        }
                    }
                }
                acc
            })
        })
        .collect();
    Ok(PsfOutput { image: ChannelImage { width: w, height: h, channels: nc, values }, clamped_depths: clamped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub field_angle: f64,
    pub depth: f64,
    pub wavelength: f64,
    pub size: usize,
    pub pitch: f64,
    /// Byte offset of this image inside the bundle file.
    pub offset: u64,
    pub length: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleIndex {
    pub version: u32,
    pub bundle: String,
    pub lens: LensSpec,
    pub kernels: Vec<BundleEntry>,
}

/// Writes `psf_stack.pfm` (concatenated gray PFM images) and `index.json` into `dir`.
pub fn export_stack(stack: &PsfStack, dir: &Path) -> Result<BundleIndex> {
    std::fs::create_dir_all(dir)?;
    let mut bundle = Vec::new();
    let mut entries = Vec::new();
    for (f, &fa) in stack.field_angles.iter().enumerate() {
        for (d, &depth) in stack.depths.iter().enumerate() {
            for (l, &wl) in stack.wavelengths.iter().enumerate() {
                let k = stack.kernel(f, d, l);
                let start = bundle.len() as u64;
                let rgb: Vec<[f64; 3]> = k.values.iter().map(|&v| [v; 3]).collect();
                crate::imageio::write_pfm(&mut bundle, k.size, k.size, &rgb)?;
                entries.push(BundleEntry {
                    field_angle: fa,
                    depth,
                    wavelength: wl,
                    size: k.size,
                    pitch: k.pitch,
                    offset: start,
                    length: bundle.len() as u64 - start,
                });
            }
        }
    }
    std::fs::File::create(dir.join("psf_stack.pfm"))?.write_all(&bundle)?;
    let index = BundleIndex { version: 1, bundle: "psf_stack.pfm".into(), lens: stack.lens, kernels: entries };
    let json = serde_json::to_string_pretty(&index).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(dir.join("index.json"), json)?;
    Ok(index)
}
