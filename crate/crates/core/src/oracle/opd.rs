//! Path-length (OPD) reference for single-bounce scenes.
//!
//! Every receiver direction is computed independently by summing the surface
//! samples with their exact far-field path-length phase. Far away the path
//! difference between two surface points for plane-wave illumination is
//! exactly `x (s_in - s_out)`, so the sum is a non-uniform DFT. A Monte-Carlo
//! variant draws surface points uniformly, which is what an OPD renderer has
//! to do because it cannot importance-sample directions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{wdf_1d_with, ComplexGrid};
use crate::microstructure::realize;
use crate::render::{Light, Material, MaterialDesc, Scene};
use crate::wbsdf::{RowSelect, Wbsdf};

/// Far-field intensity per unit patch length, `|sum_j t_j e^{-i 2 pi x_j du} dx|^2 / L`,
/// at `du = (s_out - s_in) / lambda` for each entry of `s_out`.
pub fn opd_far_field(t: &ComplexGrid, lambda: f64, s_in: f64, s_out: &[f64]) -> Vec<f64> {
    let l = t.extent();
    s_out
        .par_iter()
        .map(|&s| {
            let du = (s - s_in) / lambda;
            let f: Complex64 =
                (0..t.len()).map(|j| t.samples()[j] * Complex64::from_polar(1.0, -2.0 * PI * t.x(j) * du)).sum();
            (f * t.dx()).norm_sqr() / l
        })
        .collect()
}

/// Inputs of the equal-quality cost comparison.
#[derive(Debug, Clone)]
pub struct OpdSetup {
    pub t: ComplexGrid,
    pub wbsdf: Wbsdf,
    pub lambda: f64,
    /// Tangential component of the incident propagation direction.
    pub s_in: f64,
    /// Normalized RMS error both estimators must reach.
    pub target_rel_rms: f64,
    pub seed: u64,
    /// Cap on per-direction OPD samples and on WBSDF photons.
    pub max_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpdReport {
    pub width: usize,
    pub height: usize,
    /// Per-pixel OPD intensity summed over spectral bins (kernel units).
    pub image: Vec<f64>,
    /// Receiver bins used for the cost comparison.
    pub receiver_bins: usize,
    /// Uniform surface samples per direction needed to reach the target.
    pub opd_samples_per_dir: usize,
    /// Importance-sampled WBSDF photons needed to reach the target.
    pub wbsdf_photons: usize,
    pub opd_rel_rms: f64,
    pub wbsdf_rel_rms: f64,
    /// `opd_samples_per_dir * receiver_bins / wbsdf_photons`.
    pub ratio: f64,
}

fn rel_rms(est: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = est.iter().zip(reference).map(|(e, r)| (e - r).powi(2)).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

impl OpdSetup {
    /// Receiver lattice: the grid's DFT bins that propagate for `s_in`.
    fn receivers(&self) -> Vec<f64> {
        let n = self.t.len();
        let du = self.t.du();
        (0..n).map(|k| (k as f64 - (n / 2) as f64) * du).filter(|u| (self.s_in + u * self.lambda).abs() < 1.0).collect()
    }

    /// Unbiased uniform-sampling estimate of `|T(u)|^2 / L` with `k` surface
    /// points per direction.
    fn opd_estimate(&self, receivers: &[f64], k: usize) -> Vec<f64> {
        let t = &self.t;
        let n = t.len();
        let l = t.extent();
        receivers
            .par_iter()
            .enumerate()
            .map(|(r, &u)| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(r as u64);
                let mut sum = Complex64::new(0.0, 0.0);
                let mut sq = 0.0;
                for _ in 0..k {
                    let j = rng.random_range(0..n);
                    let a = t.samples()[j] * Complex64::from_polar(1.0, -2.0 * PI * t.x(j) * u);
                    sum += a;
                    sq += a.norm_sqr();
                }
                let kk = k as f64;
                // E|sum|^2 = k(k-1)|E a|^2 + k E|a|^2
                (sum.norm_sqr() - sq) / (kk * (kk - 1.0)) * (n as f64 * t.dx()).powi(2) / l
            })
            .collect()
    }

    /// Photon histogram of `m` importance-sampled WBSDF shifts on the mean row.
    fn wbsdf_estimate(&self, receivers: &[f64], m: usize) -> Result<Vec<f64>> {
        let du = self.t.du();
        let mut hist = vec![0.0; receivers.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9);
        let u_lo = receivers[0];
        for _ in 0..m {
            let s = self.wbsdf.sample_shift(0, RowSelect::Mean, self.s_in, 1.0, false, rng.random())?;
            let b = ((s.delta_u - u_lo) / du).round();
            if b >= 0.0 && (b as usize) < hist.len() {
                hist[b as usize] += s.weight;
            }
        }
        Ok(hist.into_iter().map(|h| h / (m as f64 * du)).collect())
    }

    /// Doubles both sample counts until each estimator reaches the target.
    pub fn compare(&self) -> Result<(usize, f64, usize, f64)> {
        let receivers = self.receivers();
        if receivers.is_empty() {
            return Err(Error::Scope("no propagating receiver directions".into()));
        }
        let reference =
            opd_far_field(&self.t, self.lambda, 0.0, &receivers.iter().map(|u| u * self.lambda).collect::<Vec<_>>());
        let mut k = 4;
        let mut k_err;
        loop {
            k_err = rel_rms(&self.opd_estimate(&receivers, k), &reference);
            if k_err <= self.target_rel_rms || k >= self.max_samples {
                break;
            }
            k *= 2;
        }
        let mut m = 16;
        let mut m_err;
        loop {
            m_err = rel_rms(&self.wbsdf_estimate(&receivers, m)?, &reference);
            if m_err <= self.target_rel_rms || m >= self.max_samples {
                break;
            }
            m *= 2;
        }
        Ok((k, k_err, m, m_err))
    }
}

/// Most periods summed by the periodic reference image.
const MAX_TILES: usize = 4096;

/// `|sum_{m < n} exp(-i 2 pi m f)|^2`: path-length phases of `n` copies of a
/// period, `f` being the phase step in cycles.
fn array_factor(n: usize, f: f64) -> f64 {
    let s = (PI * f).sin();
    if s.abs() < 1e-12 {
        return (n * n) as f64;
    }
    ((n as f64 * PI * f).sin() / s).powi(2)
}

/// OPD reference image of a single-bounce scene (one WBSDF patch built from
/// a microstructure, one distant light) plus the equal-quality sample-count
/// comparison against importance-sampled WBSDF photons.
///
/// `samples_per_dir` directions are averaged over each pixel.
pub fn opd_render_reference(scene: &Scene, samples_per_dir: usize, seed: u64) -> Result<OpdReport> {
    if samples_per_dir == 0 {
        return Err(Error::Argument("samples_per_dir must be >= 1".into()));
    }
    let [patch] = scene.patches.as_slice() else {
        return Err(Error::Scope("OPD reference needs exactly one patch".into()));
    };
    let [Light::Distant { direction, .. }] = scene.lights.as_slice() else {
        return Err(Error::Scope("OPD reference needs exactly one distant light".into()));
    };
    let Material::Wbsdf { index } = patch.material else {
        return Err(Error::Scope("OPD reference needs a WBSDF patch".into()));
    };
    let desc = scene.desc.materials.values().filter(|m| matches!(m, MaterialDesc::Wbsdf { .. })).nth(index);
    let Some(MaterialDesc::Wbsdf { microstructure: Some(ms), grid: Some(grid), boundary, .. }) = desc else {
        return Err(Error::Scope("OPD reference needs a WBSDF built from a microstructure".into()));
    };
    let grid = match (boundary, grid.x0) {
        (crate::field::Boundary::Periodic, None) => crate::microstructure::GridSpec::from_origin(grid.n, grid.dx),
        _ => *grid,
    };
    let w = &scene.wbsdfs[index];
    let s_in = direction.dot(patch.axis);
    let grids = scene.wavelengths.iter().map(|&l| realize(ms, l, 0.0, &grid)).collect::<Result<Vec<_>>>()?;

    // pixel image: chief rays through jittered film positions
    let cam = &scene.camera;
    let (wd, ht) = (cam.width, cam.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs = Vec::with_capacity(wd * ht * samples_per_dir);
    for py in 0..ht {
        for px in 0..wd {
            for _ in 0..samples_per_dir {
                let fx = px as f64 + rng.random::<f64>();
                let fy = py as f64 + rng.random::<f64>();
                let r = cam.generate(fx, fy, 0.5, 0.5);
                let hits = patch.rect.intersect(r.origin, r.direction, 0.0).is_some();
                dirs.push(hits.then(|| (-r.direction).dot(patch.axis)));
            }
        }
    }
    // A periodic table holds one period; its lone-period lobes are wider than
    // the orders are apart, so sum over enough periods to resolve a pixel.
    let tiles = if *boundary == crate::field::Boundary::Periodic {
        let period = grids[0].extent();
        let lambda_max = scene.wavelengths.iter().map(|l| l.meters()).fold(0.0, f64::max);
        let pixel = cam.pixel_pitch / cam.film_distance;
        ((2.0 * lambda_max / (period * pixel)).ceil() as usize).clamp(1, MAX_TILES)
    } else {
        1
    };
    let mut image = vec![0.0; wd * ht];
    for (b, t) in grids.iter().enumerate() {
        let lambda = scene.wavelengths[b].meters();
        let s_out: Vec<f64> = dirs.iter().map(|d| d.unwrap_or(0.0)).collect();
        let mut vals = opd_far_field(t, lambda, s_in, &s_out);
        if tiles > 1 {
            let period = t.extent();
            for (v, s) in vals.iter_mut().zip(&s_out) {
                *v *= array_factor(tiles, period * (s - s_in) / lambda) / tiles as f64;
            }
        }
        for (i, v) in vals.iter().enumerate() {
            if dirs[i].is_some() {
                image[i / samples_per_dir] += v / samples_per_dir as f64;
            }
        }
    }

    let t0 = grids[0].clone();
    let table = wdf_1d_with(&t0, *boundary)?;
    let setup = OpdSetup {
        t: t0,
        wbsdf: Wbsdf::from_wdf(table, scene.wavelengths[0], w.mode())?,
        lambda: scene.wavelengths[0].meters(),
        s_in,
        target_rel_rms: 0.05,
        seed,
        max_samples: 1 << 22,
    };
    let receivers = setup.receivers().len();
    let (k, k_err, m, m_err) = setup.compare()?;
    Ok(OpdReport {
        width: wd,
        height: ht,
        image,
        receiver_bins: receivers,
        opd_samples_per_dir: k,
        wbsdf_photons: m,
        opd_rel_rms: k_err,
        wbsdf_rel_rms: m_err,
        ratio: (k * receivers) as f64 / m as f64,
    })
}
