//! Acceptance suite: one line per criterion, references computed here.
//!
//! Runs without the libtest harness so every line reaches the terminal.
//! The process fails if any attainable criterion fails; a criterion known
//! to be unattainable is reported as FAIL with its measurement and does
//! not change the exit status.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wbsdf_kit::field::{grating_wdf_closed_form, marginals, wdf_1d, wdf_1d_with, Boundary, ComplexGrid, PeriodicAxes};
use wbsdf_kit::imageio::write_pfm;
use wbsdf_kit::microstructure::{realize, GridSpec, Microstructure, MicrostructureKind, Mode, Wavelength};
use wbsdf_kit::oracle::{ensemble_statistical, EmbeddingPolicy};
use wbsdf_kit::psf::{compute_psf, KernelSpec, LensSpec, PsfKernel};
use wbsdf_kit::render::{render, render_with, MaterialDesc, RenderOptions, RenderOutput, Scene};
use wbsdf_kit::wbsdf::{statistical_wbsdf, AutocorrelationModel, StatisticalAxes, StatisticalSurfaceSpec, Wbsdf};

const SCENES: [&str; 3] = ["grating_goniometer", "double_slit", "cd_on_wall"];
const SPP: usize = 1024;

struct Line {
    id: &'static str,
    passed: bool,
    /// Known to be unattainable; reported but not fatal.
    expected_failure: bool,
    text: String,
    seconds: f64,
}

fn scene(name: &str) -> Scene {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Scene::from_json(&text, path.parent()).expect("shipped scene parses")
}

// ---- references ----------------------------------------------------------

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `J_n(x)` from its power series.
fn bessel_series(n: u32, x: f64) -> f64 {
    (0..40u32)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (x / 2.0).powi((2 * k + n) as i32) / (factorial(k) * factorial(k + n))
        })
        .sum()
}

/// First positive zero of `J_1`, by bisection on the series.
fn j1_first_zero() -> f64 {
    let (mut lo, mut hi) = (3.0, 4.5);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if bessel_series(1, lo) * bessel_series(1, mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `|sum_j t_j exp(-i 2 pi u x_j) dx|^2` at `u`.
fn direct_power(t: &ComplexGrid, u: f64) -> f64 {
    let acc: Complex64 =
        t.samples().iter().enumerate().map(|(j, s)| s * Complex64::from_polar(1.0, -2.0 * PI * u * t.x(j))).sum();
    (acc * t.dx()).norm_sqr()
}

/// Scalar field at `(xr, z)` from point sources on the grid.
fn huygens(t: &ComplexGrid, z: f64, lambda: f64, xr: f64) -> Complex64 {
    t.samples()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.norm_sqr() > 0.0)
        .map(|(j, s)| {
            let d = ((xr - t.x(j)).powi(2) + z * z).sqrt();
            s * Complex64::from_polar(1.0 / d, 2.0 * PI * d / lambda)
        })
        .sum()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

fn corpus() -> Vec<ComplexGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();
    for (n, count) in [(32usize, 34), (64, 33), (128, 33)] {
        for _ in 0..count {
            let s = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            out.push(ComplexGrid::centered(s, 1e-7).unwrap());
        }
    }
    out
}

/// Centroids of the `fringes + 1` oracle peaks nearest the middle, measured
/// on both profiles; returns (relative spacing error, worst offset in samples).
fn fringes(oracle: &[f64], rendered: &[f64], fringes: usize) -> (f64, f64) {
    let w = oracle.len();
    let mx = oracle.iter().cloned().fold(0.0, f64::max);
    let mut peaks: Vec<usize> = (1..w - 1)
        .filter(|&i| oracle[i] > oracle[i - 1] && oracle[i] >= oracle[i + 1] && oracle[i] > 1e-3 * mx)
        .collect();
    assert!(peaks.len() > fringes, "oracle shows only {} fringes", peaks.len());
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
    ((sr - so).abs() / so, dev)
}

fn fwhm(values: &[f64], step: f64) -> f64 {
    let (im, mx) = values.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let half = mx / 2.0;
    let r = (im..values.len()).find(|&i| values[i] <= half).expect("lobe falls below half maximum");
    let l = (0..=im).rev().find(|&i| values[i] <= half).expect("lobe falls below half maximum");
    let right = (r - 1) as f64 + (values[r - 1] - half) / (values[r - 1] - values[r]);
    let left = (l + 1) as f64 - (values[l + 1] - half) / (values[l + 1] - values[l]);
    (right - left) * step
}

/// Relative L1 over the bins where the reference exceeds 10% of its peak.
fn core_l1(a: &[f64], reference: &[f64]) -> f64 {
    let mx = reference.iter().cloned().fold(0.0, f64::max);
    let (num, den) = a
        .iter()
        .zip(reference)
        .filter(|(_, r)| **r > 0.1 * mx)
        .fold((0.0, 0.0), |(n, d), (x, r)| (n + (x - r).abs(), d + r));
    num / den
}

fn first_minimum(k: &PsfKernel) -> f64 {
    let c = k.size / 2;
    let row: Vec<f64> = (0..k.size).map(|x| k.get(x, c)).collect();
    let mut i = c + 1;
    while i + 1 < k.size && row[i + 1] < row[i] {
        i += 1;
    }
    let (a, b, d) = (row[i - 1], row[i], row[i + 1]);
    (i as f64 - c as f64 + 0.5 * (a - d) / (a - 2.0 * b + d)) * k.pitch
}

fn pfm_bytes(out: &RenderOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pfm(&mut buf, out.image.width, out.image.height, &out.image.to_rgb()).unwrap();
    buf
}

// ---- criteria -------------------------------------------------------------

fn ac1() -> (bool, String) {
    let grids = corpus();
    let worst = grids
        .iter()
        .map(|t| {
            let spec = marginals(&wdf_1d(t).unwrap()).spectrum;
            let n = t.len();
            let direct: Vec<f64> = (0..n).map(|i| direct_power(t, (i as f64 - (n / 2) as f64) * t.du())).collect();
            max_rel(&spec, &direct)
        })
        .fold(0.0, f64::max);
    (
        worst <= 1e-9,
        format!("sum_x W dx vs direct |T(u)|^2, {} grids: max rel error {worst:.2e} (tol 1e-9)", grids.len()),
    )
}

fn ac2() -> (bool, String) {
    let grids = corpus();
    let worst = grids
        .iter()
        .map(|t| {
            let direct: Vec<f64> = t.samples().iter().map(|s| s.re * s.re + s.im * s.im).collect();
            max_rel(&marginals(&wdf_1d(t).unwrap()).intensity, &direct)
        })
        .fold(0.0, f64::max);
    (worst <= 1e-9, format!("sum_u W du vs |t(x)|^2, {} grids: max rel error {worst:.2e} (tol 1e-9)", grids.len()))
}

fn ac3() -> (bool, String) {
    let (n, dx, ps) = (128usize, 5e-8, 16usize);
    let p = ps as f64 * dx;
    let mut worst = 0.0_f64;
    let mut orders = (0.0, 0.0);
    for half_m in [0.5, 1.0, 2.0] {
        let t = ComplexGrid::from_fn(n, dx, 0.0, |x| Complex64::from_polar(1.0, half_m * (2.0 * PI * x / p).sin()))
            .unwrap();
        let num = wdf_1d_with(&t, Boundary::Periodic).unwrap();
        let cf = grating_wdf_closed_form(2.0 * half_m, p, 40, &PeriodicAxes { n, dx, x0: 0.0 }).unwrap();
        worst = worst.max(max_rel(num.values(), cf.values()));
        if half_m == 1.0 {
            let spec = num.spectrum_marginal();
            let total: f64 = spec.iter().sum();
            let at = |q: f64| spec[num.u_index(q / p).unwrap()] / total;
            orders = (at(0.0), at(1.0));
        }
    }
    let (j0, j1) = (bessel_series(0, 1.0).powi(2), bessel_series(1, 1.0).powi(2));
    let err = (orders.0 - j0).abs().max((orders.1 - j1).abs());
    (
        worst <= 1e-6 && err <= 1e-4,
        format!(
            "numeric vs closed form max rel {worst:.1e} (tol 1e-6); I0 = {:.5} vs J0(1)^2 = {j0:.5}, I1 = {:.5} vs J1(1)^2 = {j1:.5} (tol 1e-4)",
            orders.0, orders.1
        ),
    )
}

fn ac4(out: &RenderOutput, s: &Scene) -> (bool, String) {
    let img = &out.image;
    let mx = (0..img.height)
        .flat_map(|y| (0..img.width).map(move |x| (x, y)))
        .map(|(x, y)| img.get(x, y, 0))
        .fold(0.0, f64::max);
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for y in 0..img.height {
        for x in 0..img.width {
            let v = img.get(x, y, 0);
            if v > 0.2 * mx {
                sx += v * (x as f64 + 0.5);
                sy += v * (y as f64 + 0.5);
                sw += v;
            }
        }
    }
    let o = -s.camera.generate(sx / sw, sy / sw, 0.5, 0.5).direction;
    let theta = o.x.asin();
    let expect = (s.wavelengths[0].meters() / 2e-6).asin();
    let bin = s.camera.pixel_pitch / s.camera.film_distance;
    let off = (theta - expect).abs() / bin;
    (
        off <= 1.0 && img.width == 128 && img.height == 128 && out.stats.spp >= SPP,
        format!(
            "{}x{} at {} spp: peak {:.4} deg, asin(lambda/p) = {:.4} deg, off by {off:.3} bins",
            img.width,
            img.height,
            out.stats.spp,
            theta.to_degrees(),
            expect.to_degrees()
        ),
    )
}

fn ac5(out: &RenderOutput, s: &Scene) -> (bool, String) {
    let img = &out.image;
    let (w, h) = (img.width, img.height);
    let profile: Vec<f64> = (0..w).map(|x| (0..h).map(|y| img.get(x, y, 0)).sum()).collect();
    let (ms, grid) = s
        .desc
        .materials
        .values()
        .find_map(|m| match m {
            MaterialDesc::Wbsdf { microstructure: Some(ms), grid: Some(g), .. } => Some((ms.clone(), *g)),
            _ => None,
        })
        .expect("double-slit material");
    let lambda = s.wavelengths[0];
    let t = realize(&ms, lambda, 0.0, &grid).unwrap();
    let z = 1.0;
    let oracle: Vec<f64> = (0..w)
        .map(|x| {
            let o = -s.camera.generate(x as f64 + 0.5, h as f64 / 2.0, 0.5, 0.5).direction;
            huygens(&t, z, lambda.meters(), z * o.x / o.z).norm_sqr()
        })
        .collect();
    let (spacing, dev) = fringes(&oracle, &profile, 20);
    (
        spacing <= 0.01 && dev <= 1.0,
        format!(
            "central 20 fringes vs Huygens sum: spacing error {:.3}% (tol 1%), worst offset {dev:.2} px (tol 1)",
            100.0 * spacing
        ),
    )
}

fn ac6(outs: &[(String, RenderOutput)]) -> (bool, String) {
    let mut ok = true;
    let parts: Vec<String> = outs
        .iter()
        .map(|(name, o)| {
            let rel = if o.stats.max > 0.0 { (-o.stats.min_before_clamp).max(0.0) / o.stats.max } else { 0.0 };
            ok &= rel <= 1e-6 && o.stats.spp >= SPP;
            format!("{name} {rel:.1e}")
        })
        .collect();
    (ok, format!("-min/max before clamp at {SPP} spp (tol 1e-6): {}", parts.join(", ")))
}

fn ac7() -> (bool, String) {
    let s = scene("grating_goniometer");
    let spp = 64;
    let total = |uniform| {
        let o = render_with(
            &s,
            &RenderOptions { spp, seed: 1, threads: None, only_group: None, uniform_wbsdf_sampling: uniform },
        )
        .unwrap();
        o.raw.variance.iter().sum::<f64>()
    };
    let ratio = total(true) / total(false);

    let dir = tempfile::tempdir().unwrap();
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes/grating_goniometer.json");
    let status = Command::new(env!("CARGO_BIN_EXE_wbsdf-kit"))
        .arg("render")
        .arg(&path)
        .args(["--spp", "64", "--seed", "1", "--compare-uniform", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let stats: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    let reported = stats["variance_ratio"].as_f64().unwrap_or(f64::NAN);
    (
        status.status.success() && ratio > 1.0 && (reported - ratio).abs() <= 1e-9 * ratio,
        format!("variance uniform / importance-sampled at {spp} spp = {ratio:.2}; stats.json reports {reported:.2}"),
    )
}

fn quartic(sigma: f64, lambda: Wavelength) -> StatisticalSurfaceSpec {
    StatisticalSurfaceSpec {
        sigma_h: sigma * lambda.meters(),
        autocorrelation: AutocorrelationModel::Quartic { a: 55e-6 },
    }
}

const QUARTIC_AXES: StatisticalAxes = StatisticalAxes { n: 1024, dx: 0.5e-6 };

fn ac8a() -> (bool, String) {
    let lambda = Wavelength::new(550e-9).unwrap();
    // circulant eigenvalues of the wrapped covariance, by direct summation
    let spec = quartic(4.0, lambda);
    let m = 2 * QUARTIC_AXES.n;
    let cov: Vec<f64> = (0..m)
        .map(|k| {
            let lag = k.min(m - k) as f64 * QUARTIC_AXES.dx;
            spec.r_h(lag)
        })
        .collect();
    let eig: Vec<f64> = (0..m)
        .map(|f| cov.iter().enumerate().map(|(k, c)| c * (2.0 * PI * (f * k) as f64 / m as f64).cos()).sum())
        .collect();
    let neg: f64 = eig.iter().filter(|e| **e < 0.0).map(|e| -e).sum();
    let abs: f64 = eig.iter().map(|e| e.abs()).sum();

    let mut worst = 0.0_f64;
    for sigma in [4.0, 6.0, 8.0, 10.0] {
        let spec = quartic(sigma, lambda);
        let table = statistical_wbsdf(&spec, 0.0, lambda, &QUARTIC_AXES).unwrap();
        let e = ensemble_statistical(&spec, 0.0, lambda, &QUARTIC_AXES, 2000, 1, EmbeddingPolicy::Clip).unwrap();
        worst = worst.max(core_l1(&e.intensity, table.row(0)));
    }
    (
        worst <= 0.03,
        format!(
            "quartic R_h, 2000 surfaces: worst core L1 {:.1}% (tol 3%); the covariance is not positive semidefinite \
             ({:.1}% of its spectral mass is negative), so no Gaussian ensemble realizes it",
            100.0 * worst,
            100.0 * neg / abs
        ),
    )
}

fn ac8b() -> (bool, String) {
    let lambda = Wavelength::new(550e-9).unwrap();
    let widths: Vec<f64> = [4.0, 6.0, 8.0, 10.0]
        .iter()
        .map(|&sigma| {
            let t = statistical_wbsdf(&quartic(sigma, lambda), 0.0, lambda, &QUARTIC_AXES).unwrap();
            fwhm(t.row(0), t.du()) * lambda.meters()
        })
        .collect();
    let ordered = widths.windows(2).all(|p| p[0] < p[1]);
    (
        ordered,
        format!(
            "quartic lobe FWHM (sin) for sigma 4/6/8/10 wavelengths: {}",
            widths.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn ac9() -> (bool, String) {
    let lambda = 550e-9;
    let zero = j1_first_zero() / PI;
    let mut radii = Vec::new();
    let mut worst = 0.0_f64;
    for n in [5.6, 11.0] {
        let lens = LensSpec::new(0.05, n, None).unwrap();
        let expect = zero * lambda * n;
        let k = compute_psf(&lens, None, 0.0, lambda, KernelSpec { size: 81, pitch: expect / 20.0 }).unwrap();
        let r = first_minimum(&k);
        worst = worst.max(((r - expect) / expect).abs());
        radii.push(r);
    }
    let ratio_err = ((radii[1] / radii[0]) / (11.0 / 5.6) - 1.0).abs();

    // geometric blur disk: c = A |s - s_f| / s with thin-lens image distances
    let (f, n, focus, depth, pitch) = (0.05, 5.6, 2.0, 0.08, 200e-6);
    let lens = LensSpec::new(f, n, Some(focus)).unwrap();
    let img = |d: f64| f * d / (d - f);
    let (s_film, s_src) = (img(focus), img(depth));
    let c = (f / n) * (s_src - s_film).abs() / s_src;
    let size = 2 * ((0.75 * c / pitch).ceil() as usize) + 1;
    let k = compute_psf(&lens, Some(depth), 0.0, lambda, KernelSpec { size, pitch }).unwrap();
    let half = (size / 2) as f64;
    let ss = 16;
    let mut disk = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            for a in 0..ss {
                for b in 0..ss {
                    let px = (x as f64 - half + (a as f64 + 0.5) / ss as f64 - 0.5) * pitch;
                    let py = (y as f64 - half + (b as f64 + 0.5) / ss as f64 - 0.5) * pitch;
                    if px * px + py * py <= c * c / 4.0 {
                        disk[y * size + x] += 1.0;
                    }
                }
            }
        }
    }
    let sum: f64 = disk.iter().sum();
    disk.iter_mut().for_each(|v| *v /= sum);
    let num: f64 = k.values.iter().zip(&disk).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = disk.iter().map(|b| b * b).sum();
    let rms = (num / den).sqrt();
    (
        worst <= 0.02 && ratio_err <= 0.02 && rms <= 0.05,
        format!(
            "first zero F/5.6 {:.3} um, F/11 {:.3} um vs {:.4} lambda N: worst {:.2}% (tol 2%); ratio error {:.2}% (tol 2%); defocus disk RMS {:.2}% (tol 5%)",
            radii[0] * 1e6,
            radii[1] * 1e6,
            zero,
            100.0 * worst,
            100.0 * ratio_err,
            100.0 * rms
        ),
    )
}

fn ac10() -> (bool, String) {
    let lambda = 550e-9;
    let lam = Wavelength::new(lambda).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, dx) = (1024usize, 0.25e-6);
    let mut h = vec![0.0; n];
    for _ in 0..12 {
        let (a, k, ph): (f64, f64, f64) =
            (rng.random_range(0.0..40e-9), rng.random_range(1.0..30.0), rng.random_range(0.0..2.0 * PI));
        for (i, v) in h.iter_mut().enumerate() {
            *v += a * (2.0 * PI * k * i as f64 / n as f64 + ph).sin();
        }
    }
    let mut s = Microstructure::new(MicrostructureKind::Heightfield { samples: h, dx }, Mode::Reflective);
    s.amplitude_mask = Some((0..n).map(|i| if (n / 4..3 * n / 4).contains(&i) { 1.0 } else { 0.0 }).collect());
    let t = realize(&s, lam, 0.0, &GridSpec::centered(n, dx)).unwrap();
    let b = Wbsdf::from_wdf(wdf_1d(&t).unwrap(), lam, Mode::Reflective).unwrap();
    let lim = 10f64.to_radians().sin();
    let du = t.du();
    let (mut num, mut den) = (0.0, 0.0);
    let kmax = (lim / lambda / du).floor() as i64;
    for k in -kmax..=kmax {
        let u = k as f64 * du;
        let reference = direct_power(&t, u);
        // reflective tables mirror the outgoing angle
        let v = b.stam_far_field(0.0, -(u * lambda).asin(), lambda);
        num += (v - reference).abs();
        den += reference;
    }
    let l1 = num / den;
    (l1 <= 0.01, format!("random height patch, |theta| < 10 deg, {} directions: L1 {l1:.2e} (tol 1%)", 2 * kmax + 1))
}

fn ac11() -> (bool, String) {
    let mut differing = Vec::new();
    for name in SCENES {
        let s = scene(name);
        let a = pfm_bytes(&render(&s, 16, Some(1), 5).unwrap());
        let b = pfm_bytes(&render(&s, 16, Some(3), 5).unwrap());
        let c = pfm_bytes(&render(&s, 16, Some(8), 5).unwrap());
        if a != b || a != c {
            differing.push(name);
        }
    }
    (
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} shipped scenes byte-identical with 1, 3 and 8 threads", SCENES.len())
        } else {
            format!("bytes differ: {}", differing.join(", "))
        },
    )
}

fn timed(id: &'static str, expected_failure: bool, f: impl FnOnce() -> (bool, String)) -> Line {
    let start = Instant::now();
    let (passed, text) = f();
    let line = Line { id, passed, expected_failure, text, seconds: start.elapsed().as_secs_f64() };
    let tag = match (line.passed, line.expected_failure) {
        (true, _) => "PASS",
        (false, false) => "FAIL",
        (false, true) => "FAIL (known)",
    };
    println!("{:<5} {tag:<12} {:>6.1}s  {}", line.id, line.seconds, line.text);
    line
}

fn main() -> ExitCode {
    println!("acceptance suite");
    let mut lines = vec![timed("AC1", false, ac1), timed("AC2", false, ac2), timed("AC3", false, ac3)];

    let start = Instant::now();
    let renders: Vec<(String, Scene, RenderOutput)> = SCENES
        .iter()
        .map(|name| {
            let s = scene(name);
            let o = render(&s, SPP, None, 1).unwrap();
            (name.to_string(), s, o)
        })
        .collect();
    println!("      rendered {} scenes at {SPP} spp in {:.1}s", renders.len(), start.elapsed().as_secs_f64());
    lines.push(timed("AC4", false, || ac4(&renders[0].2, &renders[0].1)));
    lines.push(timed("AC5", false, || ac5(&renders[1].2, &renders[1].1)));
    let outs: Vec<(String, RenderOutput)> = renders.into_iter().map(|(n, _, o)| (n, o)).collect();
    lines.push(timed("AC6", false, || ac6(&outs)));
    lines.push(timed("AC7", false, ac7));
    lines.push(timed("AC8a", true, ac8a));
    lines.push(timed("AC8b", false, ac8b));
    lines.push(timed("AC9", false, ac9));
    lines.push(timed("AC10", false, ac10));
    lines.push(timed("AC11", false, ac11));

    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed && !l.expected_failure).map(|l| l.id).collect();
    let known: Vec<&str> = lines.iter().filter(|l| !l.passed && l.expected_failure).map(|l| l.id).collect();
    println!(
        "{} criteria, {} passed, {} failed{}",
        lines.len(),
        lines.iter().filter(|l| l.passed).count(),
        failed.len() + known.len(),
        if known.is_empty() {
            String::new()
        } else {
            format!(" ({} known unattainable: {})", known.len(), known.join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
