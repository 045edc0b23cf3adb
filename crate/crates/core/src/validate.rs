//! Named cross-checks behind `wbsdf-kit validate`.
//!
//! Every check compares the toolkit against an independent reference (a
//! direct DFT, the Bessel series, Huygens summation, a surface ensemble, the
//! Airy pattern) and reports the measured discrepancy next to its tolerance.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::bessel_j;
use crate::config::ValidationConfig;
use crate::error::{Error, Result};
use crate::field::{grating_wdf_closed_form, marginals, wdf_1d, wdf_1d_with, Boundary, ComplexGrid, PeriodicAxes};
use crate::microstructure::{realize, Microstructure, MicrostructureKind, Mode, Wavelength};
use crate::oracle::{ensemble_statistical, far_field_intensity, huygens_sum, EmbeddingPolicy};
use crate::psf::{compute_psf, KernelSpec, LensSpec, PsfKernel};
use crate::render::{render, variance_ratio, RenderOutput, Scene, NEGATIVITY_TOLERANCE};
use crate::wbsdf::{statistical_wbsdf, AutocorrelationModel, StatisticalAxes, StatisticalSurfaceSpec, Wbsdf};

/// Scenes shipped in `scenes/`, by file stem.
pub const SHIPPED_SCENES: &[(&str, &str)] = &[
    ("grating_goniometer", include_str!("../../../scenes/grating_goniometer.json")),
    ("double_slit", include_str!("../../../scenes/double_slit.json")),
    ("cd_on_wall", include_str!("../../../scenes/cd_on_wall.json")),
];

pub const CHECK_NAMES: &[&str] = &[
    "wdf-fourier-identity",
    "wdf-marginal",
    "grating-closed-form",
    "grating-equation",
    "double-slit",
    "nonnegativity",
    "importance-sampling",
    "statistical-ensemble",
    "psf-airy",
    "psf-pupil-vs-wbsdf",
    "stam-far-field",
    "determinism",
    "undersampling",
];

/// Equal-spp budget of the variance comparison.
const VARIANCE_SPP: usize = 64;
/// Samples per pixel of the thread-count comparison.
const DETERMINISM_SPP: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{:<4} {:<22} measured {:<11.4e} tol {:<9.2e} {:>6.2}s  {}\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
                c.seconds,
                c.detail
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        s.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        s
    }
}

struct Outcome {
    measured: f64,
    tolerance: f64,
    passed: bool,
    detail: String,
}

impl Outcome {
    /// Passes when `measured <= tolerance`.
    fn below(measured: f64, tolerance: f64, detail: String) -> Self {
        Self { measured, tolerance, passed: measured <= tolerance, detail }
    }
}

/// Renders shared between checks.
struct Ctx<'a> {
    cfg: &'a ValidationConfig,
    renders: HashMap<&'static str, RenderOutput>,
}

impl<'a> Ctx<'a> {
    fn scene(name: &str) -> Result<Scene> {
        let text = SHIPPED_SCENES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| Error::Internal(format!("no shipped scene {name}")))?;
        Scene::from_json(text, None)
    }

    fn rendered(&mut self, name: &'static str) -> Result<(Scene, &RenderOutput)> {
        let scene = Self::scene(name)?;
        if !self.renders.contains_key(name) {
            let out = render(&scene, self.cfg.spp, None, self.cfg.seed)?;
            self.renders.insert(name, out);
        }
        Ok((scene, &self.renders[name]))
    }
}

/// Runs the named checks (all of them when `only` is empty).
pub fn run(cfg: &ValidationConfig, only: &[String]) -> Result<ValidationReport> {
    for name in only {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(Error::Argument(format!("unknown check {name:?}; known: {}", CHECK_NAMES.join(", "))));
        }
    }
    if cfg.spp == 0 || cfg.corpus == 0 {
        return Err(Error::Argument("validation spp and corpus must be >= 1".into()));
    }
    let mut ctx = Ctx { cfg, renders: HashMap::new() };
    let mut checks = Vec::new();
    for &name in CHECK_NAMES {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let start = Instant::now();
        let outcome = match name {
            "wdf-fourier-identity" => fourier_identity(&ctx),
            "wdf-marginal" => marginal(&ctx),
            "grating-closed-form" => closed_form(&ctx),
            "grating-equation" => grating_equation(&mut ctx),
            "double-slit" => double_slit(&mut ctx),
            "nonnegativity" => nonnegativity(&mut ctx),
            "importance-sampling" => importance_sampling(&ctx),
            "statistical-ensemble" => statistical_ensemble(&ctx),
            "psf-airy" => psf_airy(&ctx),
            "psf-pupil-vs-wbsdf" => psf_pupil_vs_wbsdf(),
            "stam-far-field" => stam_far_field(&ctx),
            "determinism" => determinism(&ctx),
            "undersampling" => undersampling(&ctx),
            _ => unreachable!(),
        };
        let outcome = outcome.unwrap_or_else(|e| Outcome {
            measured: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            detail: format!("{name}: {e}"),
        });
        checks.push(CheckResult {
            name: name.to_string(),
            passed: outcome.passed,
            measured: outcome.measured,
            tolerance: outcome.tolerance,
            detail: outcome.detail,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(ValidationReport { passed: checks.iter().all(|c| c.passed), checks })
}

fn corpus(ctx: &Ctx) -> Vec<ComplexGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut out = Vec::new();
    for n in [32usize, 64, 128] {
        for _ in 0..ctx.cfg.corpus {
            let s = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            out.push(ComplexGrid::centered(s, 1e-7).expect("valid corpus grid"));
        }
    }
    out
}

/// `|sum_j t_j exp(-i 2 pi k j / n) dx|^2` by direct summation, centred.
fn direct_power_spectrum(t: &ComplexGrid) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let k = i as f64 - (n / 2) as f64;
            let acc: Complex64 = t
                .samples()
                .iter()
                .enumerate()
                .map(|(j, s)| s * Complex64::from_polar(1.0, -2.0 * PI * k * j as f64 / n as f64))
                .sum();
            (acc * t.dx()).norm_sqr()
        })
        .collect()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

fn fourier_identity(ctx: &Ctx) -> Result<Outcome> {
    let grids = corpus(ctx);
    let worst = grids
        .par_iter()
        .map(|t| Ok(max_rel(&marginals(&wdf_1d(t)?).spectrum, &direct_power_spectrum(t))))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Outcome::below(worst, ctx.cfg.identity_tol, format!("{} random grids, N in 32/64/128", grids.len())))
}

fn marginal(ctx: &Ctx) -> Result<Outcome> {
    let grids = corpus(ctx);
    let worst = grids
        .par_iter()
        .map(|t| Ok(max_rel(&marginals(&wdf_1d(t)?).intensity, &t.intensity())))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Outcome::below(worst, ctx.cfg.identity_tol, format!("{} random grids", grids.len())))
}

fn closed_form(ctx: &Ctx) -> Result<Outcome> {
    let (n, dx, ps) = (128usize, 5e-8, 16usize);
    let p = ps as f64 * dx;
    let mut worst = 0.0_f64;
    let mut orders = (0.0, 0.0);
    for half_m in [0.5, 1.0, 2.0] {
        let t = ComplexGrid::from_fn(n, dx, 0.0, |x| Complex64::from_polar(1.0, half_m * (2.0 * PI * x / p).sin()))?;
        let num = wdf_1d_with(&t, Boundary::Periodic)?;
        let cf = grating_wdf_closed_form(2.0 * half_m, p, 40, &PeriodicAxes { n, dx, x0: 0.0 })?;
        worst = worst.max(max_rel(num.values(), cf.values()));
        if half_m == 1.0 {
            let spec = num.spectrum_marginal();
            let total: f64 = spec.iter().sum();
            let at = |q: f64| num.u_index(q / p).map(|k| spec[k] / total).unwrap_or(f64::NAN);
            orders = (at(0.0), at(1.0));
        }
    }
    let (j0, j1) = (bessel_j(0, 1.0).powi(2), bessel_j(1, 1.0).powi(2));
    let order_err = (orders.0 - j0).abs().max((orders.1 - j1).abs());
    let passed = worst <= ctx.cfg.closed_form_tol && order_err <= 1e-4;
    Ok(Outcome {
        measured: worst,
        tolerance: ctx.cfg.closed_form_tol,
        passed,
        detail: format!(
            "orders at m/2 = 1: I0 = {:.5} (J0(1)^2 = {j0:.5}), I1 = {:.5} (J1(1)^2 = {j1:.5}), max error {order_err:.1e}",
            orders.0, orders.1
        ),
    })
}

/// Intensity-weighted centre of the pixels above 20% of the peak, in pixels.
fn bright_centroid(out: &RenderOutput, bin: usize) -> (f64, f64) {
    let img = &out.image;
    let mut mx = 0.0_f64;
    for y in 0..img.height {
        for x in 0..img.width {
            mx = mx.max(img.get(x, y, bin));
        }
    }
    let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
    for y in 0..img.height {
        for x in 0..img.width {
            let v = img.get(x, y, bin);
            if v > 0.2 * mx {
                sx += v * (x as f64 + 0.5);
                sy += v * (y as f64 + 0.5);
                s += v;
            }
        }
    }
    (sx / s, sy / s)
}

fn grating_equation(ctx: &mut Ctx) -> Result<Outcome> {
    let (scene, out) = ctx.rendered("grating_goniometer")?;
    let (cx, cy) = bright_centroid(out, 0);
    if !cx.is_finite() {
        return Err(Error::Internal("no diffracted light reached the film".into()));
    }
    let cam = &scene.camera;
    let o = -cam.generate(cx, cy, 0.5, 0.5).direction;
    let theta = o.x.asin();
    let expect = (532e-9_f64 / 2e-6).asin();
    let bin = cam.pixel_pitch / cam.film_distance;
    Ok(Outcome::below(
        (theta - expect).abs() / bin,
        1.0,
        format!(
            "first order at {:.4} deg, grating equation {:.4} deg, one pixel = {:.4} deg",
            theta.to_degrees(),
            expect.to_degrees(),
            bin.to_degrees()
        ),
    ))
}

/// Fringe spacing error and worst position offset (pixels) of a rendered
/// profile against an oracle profile, over the 21 peaks nearest the centre.
pub fn fringe_agreement(oracle: &[f64], rendered: &[f64], fringes: usize) -> Result<(f64, f64)> {
    let w = oracle.len();
    if rendered.len() != w || w < 3 {
        return Err(Error::Argument("profiles must have equal length >= 3".into()));
    }
    let mx = oracle.iter().cloned().fold(0.0, f64::max);
    let mut peaks: Vec<usize> = (1..w - 1)
        .filter(|&i| oracle[i] > oracle[i - 1] && oracle[i] >= oracle[i + 1] && oracle[i] > 1e-3 * mx)
        .collect();
    if peaks.len() < fringes + 1 {
        return Err(Error::Precision(format!("oracle shows {} fringes, need {}", peaks.len(), fringes + 1)));
    }
    peaks.sort_by_key(|&p| (p as isize - w as isize / 2).abs());
    let mut sel = peaks[..=fringes].to_vec();
    sel.sort_unstable();
    let half = ((sel[fringes] - sel[0]) as f64 / fringes as f64 / 2.0).floor() as isize;
    let centroid = |p: &[f64], c: usize| {
        let (mut s, mut m) = (0.0, 0.0);
        for k in -half..=half {
            let i = (c as isize + k).clamp(0, w as isize - 1) as usize;
            s += p[i];
            m += p[i] * i as f64;
        }
        m / s
    };
    let po: Vec<f64> = sel.iter().map(|&c| centroid(oracle, c)).collect();
    let pr: Vec<f64> = sel.iter().map(|&c| centroid(rendered, c)).collect();
    let so = (po[fringes] - po[0]) / fringes as f64;
    let sr = (pr[fringes] - pr[0]) / fringes as f64;
    let dev = po.iter().zip(&pr).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(((sr - so).abs() / so, dev))
}

fn double_slit(ctx: &mut Ctx) -> Result<Outcome> {
    let (scene, out) = ctx.rendered("double_slit")?;
    let img = &out.image;
    let (w, h) = (img.width, img.height);
    let profile: Vec<f64> = (0..w).map(|x| (0..h).map(|y| img.get(x, y, 0)).sum()).collect();
    let slits = scene
        .desc
        .materials
        .values()
        .find_map(|m| match m {
            crate::render::MaterialDesc::Wbsdf { microstructure: Some(ms), grid: Some(g), .. } => {
                Some((ms.clone(), *g))
            }
            _ => None,
        })
        .ok_or_else(|| Error::Internal("double-slit scene has no microstructure".into()))?;
    let lambda = scene.wavelengths[0];
    let t = realize(&slits.0, lambda, 0.0, &slits.1)?;
    // receivers along a far screen, one per pixel column; x decreases with px
    let z = 1.0;
    let cam = &scene.camera;
    let rec: Vec<f64> = (0..w)
        .rev()
        .map(|x| {
            let o = -cam.generate(x as f64 + 0.5, h as f64 / 2.0, 0.5, 0.5).direction;
            z * o.x / o.z
        })
        .collect();
    let field = huygens_sum(&t, z, lambda.meters(), &rec)?;
    let oracle: Vec<f64> = field.iter().rev().map(|c| c.norm_sqr()).collect();
    let (spacing, dev) = fringe_agreement(&oracle, &profile, 20)?;
    Ok(Outcome {
        measured: spacing,
        tolerance: 0.01,
        passed: spacing <= 0.01 && dev <= 1.0,
        detail: format!("central 20 fringes: spacing error {:.3}%, worst offset {dev:.3} px", 100.0 * spacing),
    })
}

fn nonnegativity(ctx: &mut Ctx) -> Result<Outcome> {
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for &(name, _) in SHIPPED_SCENES {
        let (_, out) = ctx.rendered(name)?;
        let s = &out.stats;
        let rel = if s.max > 0.0 { (-s.min_before_clamp).max(0.0) / s.max } else { 0.0 };
        worst = worst.max(rel);
        parts.push(format!("{name} {rel:.1e}"));
    }
    Ok(Outcome::below(
        worst,
        NEGATIVITY_TOLERANCE,
        format!("-min/max before clamp at {} spp: {}", ctx.cfg.spp, parts.join(", ")),
    ))
}

fn importance_sampling(ctx: &Ctx) -> Result<Outcome> {
    let scene = Ctx::scene("grating_goniometer")?;
    let ratio = variance_ratio(&scene, VARIANCE_SPP, None, ctx.cfg.seed)?;
    Ok(Outcome {
        measured: ratio,
        tolerance: 1.0,
        passed: ratio > 1.0,
        detail: format!("variance uniform / importance-sampled = {ratio:.2} at {VARIANCE_SPP} spp"),
    })
}

/// Full width at half maximum of a single-peaked sampled curve.
pub fn fwhm(values: &[f64], step: f64) -> f64 {
    let (im, mx) = values.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let half = mx / 2.0;
    let cross = |range: &mut dyn Iterator<Item = usize>| -> f64 {
        let mut prev = im;
        for i in range {
            if values[i] <= half {
                let (a, b) = (values[prev], values[i]);
                return prev as f64 + (i as f64 - prev as f64) * (a - half) / (a - b);
            }
            prev = i;
        }
        prev as f64
    };
    let right = cross(&mut (im + 1..values.len()));
    let left = cross(&mut (0..im).rev());
    (right - left) * step
}

/// Relative L1 of `a` against `reference` over the bins where the reference
/// exceeds 10% of its peak.
pub fn core_l1(a: &[f64], reference: &[f64]) -> f64 {
    let mx = reference.iter().cloned().fold(0.0, f64::max);
    let (num, den) = a
        .iter()
        .zip(reference)
        .filter(|(_, r)| **r > 0.1 * mx)
        .fold((0.0, 0.0), |(n, d), (x, r)| (n + (x - r).abs(), d + r));
    num / den
}

/// Quartic-family axes: the lobe spans a few dozen bins at every sigma.
pub const QUARTIC_SCALE: f64 = 55e-6;
pub const QUARTIC_AXES: StatisticalAxes = StatisticalAxes { n: 1024, dx: 0.5e-6 };
pub const QUARTIC_SIGMAS: [f64; 4] = [4.0, 6.0, 8.0, 10.0];

fn statistical_ensemble(ctx: &Ctx) -> Result<Outcome> {
    let lambda = Wavelength::new(550e-9)?;
    // realizable control: Gaussian correlation, sigma = 4 wavelengths
    let control = StatisticalSurfaceSpec {
        sigma_h: 4.0 * lambda.meters(),
        autocorrelation: AutocorrelationModel::Gaussian { correlation_length: 200e-6 },
    };
    let axes = StatisticalAxes { n: 4096, dx: 0.5e-6 };
    let w = statistical_wbsdf(&control, 0.0, lambda, &axes)?;
    let e = ensemble_statistical(
        &control,
        0.0,
        lambda,
        &axes,
        ctx.cfg.ensemble_surfaces,
        ctx.cfg.seed,
        EmbeddingPolicy::Reject,
    )?;
    let l1 = core_l1(&e.intensity, w.row(0));

    // the quartic family: lobe ordering, plus the (non-realizable) ensemble gap
    let mut widths = Vec::new();
    for sigma in QUARTIC_SIGMAS {
        let spec = StatisticalSurfaceSpec {
            sigma_h: sigma * lambda.meters(),
            autocorrelation: AutocorrelationModel::Quartic { a: QUARTIC_SCALE },
        };
        let t = statistical_wbsdf(&spec, 0.0, lambda, &QUARTIC_AXES)?;
        widths.push(fwhm(t.row(0), t.du()) * lambda.meters());
    }
    let ordered = widths.windows(2).all(|p| p[0] < p[1]);
    Ok(Outcome {
        measured: l1,
        tolerance: 0.03,
        passed: l1 <= 0.03 && ordered,
        detail: format!(
            "Gaussian-correlated control, {} surfaces: core L1 {:.2}%; quartic FWHM (sin) for sigma 4/6/8/10: {}{}",
            ctx.cfg.ensemble_surfaces,
            100.0 * l1,
            widths.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" < "),
            if ordered { "" } else { " (NOT ordered)" }
        ),
    })
}

/// Radius of the first minimum along the central row, refined by a parabola.
pub fn first_zero_radius(k: &PsfKernel) -> f64 {
    let c = k.size / 2;
    let row: Vec<f64> = (0..k.size).map(|x| k.get(x, c)).collect();
    let mut i = c + 1;
    while i + 1 < k.size && row[i + 1] < row[i] {
        i += 1;
    }
    if i + 1 >= k.size {
        return f64::NAN;
    }
    let (a, b, d) = (row[i - 1], row[i], row[i + 1]);
    let off = 0.5 * (a - d) / (a - 2.0 * b + d);
    (i as f64 - c as f64 + off) * k.pitch
}

/// Relative RMS between a kernel and the area-sampled uniform disk of diameter `c`.
pub fn disk_rms(k: &PsfKernel, c: f64) -> f64 {
    let size = k.size;
    let half = (size / 2) as f64;
    const SS: usize = 16;
    let mut disk = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let mut cover = 0;
            for a in 0..SS {
                for b in 0..SS {
                    let px = (x as f64 - half + (a as f64 + 0.5) / SS as f64 - 0.5) * k.pitch;
                    let py = (y as f64 - half + (b as f64 + 0.5) / SS as f64 - 0.5) * k.pitch;
                    if px * px + py * py <= c * c / 4.0 {
                        cover += 1;
                    }
                }
            }
            disk[y * size + x] = cover as f64;
        }
    }
    let s: f64 = disk.iter().sum();
    disk.iter_mut().for_each(|v| *v /= s);
    let num: f64 = k.values.iter().zip(&disk).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = disk.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

fn psf_airy(ctx: &Ctx) -> Result<Outcome> {
    let lambda = 550e-9;
    let zero = 3.831_705_970_207_512 / PI;
    let mut radii = Vec::new();
    let mut worst = 0.0_f64;
    for n in [5.6, 11.0] {
        let lens = LensSpec::new(0.05, n, None)?;
        let expect = zero * lambda * n;
        let k = compute_psf(&lens, None, 0.0, lambda, KernelSpec { size: 81, pitch: expect / 20.0 })?;
        let r = first_zero_radius(&k);
        worst = worst.max(((r - expect) / expect).abs());
        radii.push(r);
    }
    let ratio_err = ((radii[1] / radii[0]) / (11.0 / 5.6) - 1.0).abs();
    // strong defocus at a pitch coarser than the Fresnel edge ripple
    let lens = LensSpec::new(0.05, 5.6, Some(2.0))?;
    let (depth, pitch) = (0.08, 200e-6);
    let c = lens.blur_diameter(Some(depth))?;
    let size = 2 * ((0.75 * c / pitch).ceil() as usize) + 1;
    let k = compute_psf(&lens, Some(depth), 0.0, lambda, KernelSpec { size, pitch })?;
    let rms = disk_rms(&k, c);
    let tol = ctx.cfg.airy_tol;
    Ok(Outcome {
        measured: worst,
        tolerance: tol,
        passed: worst <= tol && ratio_err <= tol && rms <= 0.05,
        detail: format!(
            "first zero F/5.6 {:.3} um, F/11 {:.3} um; ratio error {:.2}%; defocus disk RMS {:.2}%",
            radii[0] * 1e6,
            radii[1] * 1e6,
            100.0 * ratio_err,
            100.0 * rms
        ),
    })
}

/// Line spread function of an in-focus F/5.6 lens two ways: summing the
/// pupil-route kernel over rows, and integrating the far field of WBSDF
/// tables built from the circular pupil's rows.
pub fn pupil_vs_wbsdf_l1() -> Result<f64> {
    let lambda = 550e-9;
    let lens = LensSpec::new(0.05, 5.6, None)?;
    let s_img = lens.film_distance()?;
    let r0 = lens.airy_radius(lambda);
    let ks = KernelSpec { size: 41, pitch: r0 / 4.0 };
    let kernel = compute_psf(&lens, None, 0.0, lambda, ks)?;
    let pupil_lsf: Vec<f64> = (0..ks.size).map(|x| (0..ks.size).map(|y| kernel.get(x, y)).sum()).collect();

    let r = lens.aperture_diameter() / 2.0;
    let n = 1024;
    // frequency lattice a third of a pixel on the film
    let dx = 3.0 * lambda * s_img / ks.pitch / n as f64;
    let dy = dx / 2.0;
    let rows = (r / dy).ceil() as i64;
    let lam = Wavelength::new(lambda)?;
    let film: Vec<f64> = (0..ks.size * 3)
        .map(|k| ((k / 3) as f64 - (ks.size / 2) as f64 + ((k % 3) as f64 + 0.5) / 3.0 - 0.5) * ks.pitch)
        .collect();
    let per_row = (-rows..=rows)
        .into_par_iter()
        .map(|j| -> Result<Vec<f64>> {
            let y = j as f64 * dy;
            let half = (r * r - y * y).max(0.0).sqrt();
            if half == 0.0 {
                return Ok(vec![0.0; film.len()]);
            }
            // chord of the pupil, with exact fractional edge coverage
            let t = ComplexGrid::from_fn(n, dx, -((n / 2) as f64) * dx, |x| {
                let lo = (x - dx / 2.0).max(-half);
                let hi = (x + dx / 2.0).min(half);
                Complex64::new(((hi - lo) / dx).max(0.0), 0.0)
            })?;
            let b = Wbsdf::from_wdf(wdf_1d(&t)?, lam, Mode::Transmissive)?;
            Ok(film.iter().map(|xf| b.stam_far_field(0.0, (xf / s_img).asin(), lambda)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut wbsdf_lsf = vec![0.0; ks.size];
    for row in per_row {
        for (k, v) in row.iter().enumerate() {
            wbsdf_lsf[k / 3] += v;
        }
    }
    let (sa, sb): (f64, f64) = (pupil_lsf.iter().sum(), wbsdf_lsf.iter().sum());
    Ok(pupil_lsf.iter().zip(&wbsdf_lsf).map(|(a, b)| (a / sa - b / sb).abs()).sum())
}

fn psf_pupil_vs_wbsdf() -> Result<Outcome> {
    let l1 = pupil_vs_wbsdf_l1()?;
    Ok(Outcome::below(l1, 0.02, format!("F/5.6 line spread functions differ by {:.3}% (L1)", 100.0 * l1)))
}

fn stam_far_field(ctx: &Ctx) -> Result<Outcome> {
    let lambda = 550e-9;
    let lam = Wavelength::new(lambda)?;
    // finite patch of a random smooth height profile
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let n = 1024;
    let dx = 0.25e-6;
    let mut h = vec![0.0; n];
    for _ in 0..12 {
        let (a, k, ph): (f64, f64, f64) =
            (rng.random_range(0.0..40e-9), rng.random_range(1.0..30.0), rng.random_range(0.0..2.0 * PI));
        for (i, v) in h.iter_mut().enumerate() {
            *v += a * (2.0 * PI * k * i as f64 / n as f64 + ph).sin();
        }
    }
    let mask: Vec<f64> = (0..n).map(|i| if (n / 4..3 * n / 4).contains(&i) { 1.0 } else { 0.0 }).collect();
    let mut s = Microstructure::new(MicrostructureKind::Heightfield { samples: h, dx }, Mode::Reflective);
    s.amplitude_mask = Some(mask);
    let t = realize(&s, lam, 0.0, &crate::microstructure::GridSpec::centered(n, dx))?;
    let b = Wbsdf::from_wdf(wdf_1d(&t)?, lam, Mode::Reflective)?;
    let ff = far_field_intensity(&t, lambda);
    let lim = 10f64.to_radians().sin();
    let (mut num, mut den) = (0.0, 0.0);
    for (s, i) in ff.sin_theta.iter().zip(&ff.intensity) {
        if s.abs() < lim {
            // reflective tables mirror the outgoing angle
            let v = b.stam_far_field(0.0, -s.asin(), lambda);
            num += (v - i).abs();
            den += i;
        }
    }
    let l1 = num / den;
    Ok(Outcome::below(l1, ctx.cfg.far_field_l1, format!("random height patch, |theta| < 10 deg: L1 {:.2e}", l1)))
}

fn determinism(ctx: &Ctx) -> Result<Outcome> {
    let mut differing = Vec::new();
    for &(name, _) in SHIPPED_SCENES {
        let scene = Ctx::scene(name)?;
        let bytes = |threads| -> Result<Vec<u8>> {
            let out = render(&scene, DETERMINISM_SPP, Some(threads), ctx.cfg.seed)?;
            let mut buf = Vec::new();
            crate::imageio::write_pfm(&mut buf, out.image.width, out.image.height, &out.image.to_rgb())?;
            Ok(buf)
        };
        if bytes(1)? != bytes(8)? {
            differing.push(name);
        }
    }
    Ok(Outcome {
        measured: differing.len() as f64,
        tolerance: 0.0,
        passed: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{} scenes byte-identical with 1 and 8 threads", SHIPPED_SCENES.len())
        } else {
            format!("PFM bytes differ across thread counts: {}", differing.join(", "))
        },
    })
}

fn undersampling(ctx: &Ctx) -> Result<Outcome> {
    let Some(f) = &ctx.cfg.sampling_fixture else {
        return Ok(Outcome {
            measured: 0.0,
            tolerance: 0.0,
            passed: true,
            detail: "no sampling fixture configured".into(),
        });
    };
    let lambda = Wavelength::new(f.wavelength)?;
    match realize(&f.microstructure, lambda, 0.0, &f.grid) {
        Ok(_) => {
            let per = f.microstructure.finest_feature().map(|p| p / f.grid.dx).unwrap_or(f64::INFINITY);
            Ok(Outcome {
                measured: per,
                tolerance: 8.0,
                passed: true,
                detail: format!("fixture resolved ({per:.1} samples per feature)"),
            })
        }
        Err(e @ Error::Precision(_)) => Ok(Outcome {
            measured: f.microstructure.finest_feature().map(|p| p / f.grid.dx).unwrap_or(f64::NAN),
            tolerance: 8.0,
            passed: false,
            detail: format!("undersampling: {e}"),
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fwhm_of_a_triangle() {
        let v: Vec<f64> = (0..21).map(|i| 10.0 - (i as f64 - 10.0).abs()).collect();
        assert!((fwhm(&v, 1.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_check_is_an_argument_error() {
        let e = run(&ValidationConfig::default(), &["no-such-check".into()]).unwrap_err();
        assert!(matches!(e, Error::Argument(_)));
    }

    #[test]
    fn shipped_scenes_parse() {
        for (name, _) in SHIPPED_SCENES {
            Ctx::scene(name).unwrap();
        }
    }
}
