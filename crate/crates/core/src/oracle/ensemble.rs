use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::microstructure::{realize, GridSpec, Microstructure, MicrostructureKind, Mode, Wavelength};
use crate::wbsdf::{StatisticalAxes, StatisticalSurfaceSpec};

pub const MIN_SURFACES: usize = 100;

/// What to do when the wrapped autocorrelation has negative eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingPolicy {
    /// Refuse with a data error.
    #[default]
    Reject,
    /// Zero the negative eigenvalues and synthesize the nearest valid process.
    Clip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Spatial frequency of each bin, `k / (n dx)`, centred.
    pub u: Vec<f64>,
    pub sin_theta: Vec<f64>,
    /// Mean of `|T(u)|^2 / L` over the ensemble (`sum I du = 1`).
    pub intensity: Vec<f64>,
    pub du: f64,
    /// Standard deviation of all synthesized heights.
    pub sample_sigma_h: f64,
    /// Mean circular autocorrelation of the synthesized heights, lags `0..n`.
    pub sample_autocorrelation: Vec<f64>,
    /// Negative eigenvalue mass removed by [`EmbeddingPolicy::Clip`], relative to the total.
    pub clipped_fraction: f64,
}

/// Monte-Carlo far field of Gaussian random surfaces with the requested
/// `sigma_h` and `R_h`, synthesized by circulant embedding on a periodic
/// lattice and realized with the reflective tangent-plane phase.
pub fn ensemble_statistical(
    spec: &StatisticalSurfaceSpec,
    theta_i: f64,
    lambda: Wavelength,
    axes: &StatisticalAxes,
    n_surfaces: usize,
    seed: u64,
    policy: EmbeddingPolicy,
) -> Result<EnsembleResult> {
    spec.validate()?;
    if n_surfaces < MIN_SURFACES {
        return Err(Error::Argument(format!("need at least {MIN_SURFACES} surfaces, got {n_surfaces}")));
    }
    let n = axes.n;
    let dx = axes.dx;
    if n < 2 || !n.is_power_of_two() || !(dx > 0.0) {
        return Err(Error::Argument("ensemble axes need a power-of-two n and dx > 0".into()));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);

    // eigenvalues of the circulant covariance
    let mut eig: Vec<Complex64> = (0..n).map(|k| Complex64::new(spec.r_h(k.min(n - k) as f64 * dx), 0.0)).collect();
    fft.process(&mut eig);
    let total: f64 = eig.iter().map(|c| c.re.abs()).sum();
    let negative: f64 = eig.iter().map(|c| (-c.re).max(0.0)).sum();
    let tol = 1e-10 * total.max(f64::MIN_POSITIVE);
    if negative > tol && policy == EmbeddingPolicy::Reject {
        return Err(Error::Data(format!(
            "autocorrelation is not positive semidefinite on the grid: negative eigenvalue mass {:.3e} of {:.3e}",
            negative, total
        )));
    }
    let amp: Vec<f64> = eig.iter().map(|c| (c.re.max(0.0) / n as f64).sqrt()).collect();

    let du = axes.du();
    let shift = (theta_i.sin() / lambda.meters() / du).round();
    let pairs = n_surfaces.div_ceil(2);
    const CHUNK: usize = 16;
    let chunks: Vec<(Vec<f64>, Vec<f64>, f64, usize)> = (0..pairs.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<_> {
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_forward(n);
            let ifft = planner.plan_fft_inverse(n);
            let mut inten = vec![0.0; n];
            let mut acorr = vec![0.0; n];
            let mut sumsq = 0.0;
            let mut count = 0;
            for p in c * CHUNK..((c + 1) * CHUNK).min(pairs) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(p as u64);
                let mut y: Vec<Complex64> = amp
                    .iter()
                    .map(|a| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re, im) * a
                    })
                    .collect();
                fft.process(&mut y);
                let parts: [Vec<f64>; 2] = [y.iter().map(|c| c.re).collect(), y.iter().map(|c| c.im).collect()];
                for h in parts.into_iter().take(n_surfaces - 2 * p) {
                    accumulate_surface(&h, dx, theta_i, lambda, shift, &mut inten)?;
                    // circular autocorrelation through the power spectrum
                    let mut ps: Vec<Complex64> = h.iter().map(|v| Complex64::new(*v, 0.0)).collect();
                    fft.process(&mut ps);
                    ps.iter_mut().for_each(|c| *c = Complex64::new(c.norm_sqr(), 0.0));
                    ifft.process(&mut ps);
                    let norm = (n * n) as f64;
                    acorr.iter_mut().zip(&ps).for_each(|(a, c)| *a += c.re / norm);
                    sumsq += h.iter().map(|v| v * v).sum::<f64>();
                    count += 1;
                }
            }
            Ok((inten, acorr, sumsq, count))
        })
        .collect::<Result<_>>()?;

    let mut intensity = vec![0.0; n];
    let mut acorr = vec![0.0; n];
    let mut sumsq = 0.0;
    let mut count = 0;
    for (i, a, s, c) in chunks {
        intensity.iter_mut().zip(&i).for_each(|(o, v)| *o += v);
        acorr.iter_mut().zip(&a).for_each(|(o, v)| *o += v);
        sumsq += s;
        count += c;
    }
    intensity.iter_mut().for_each(|v| *v /= count as f64);
    acorr.iter_mut().for_each(|v| *v /= count as f64);
    let u: Vec<f64> = (0..n).map(|k| (k as f64 - (n / 2) as f64) * du).collect();
    Ok(EnsembleResult {
        sin_theta: u.iter().map(|u| u * lambda.meters()).collect(),
        u,
        intensity,
        du,
        sample_sigma_h: (sumsq / (count * n) as f64).sqrt(),
        sample_autocorrelation: acorr,
        clipped_fraction: negative / total.max(f64::MIN_POSITIVE),
    })
}

fn accumulate_surface(h: &[f64], dx: f64, theta_i: f64, lambda: Wavelength, shift: f64, out: &mut [f64]) -> Result<()> {
    let n = h.len();
    let s = Microstructure::new(MicrostructureKind::Heightfield { samples: h.to_vec(), dx }, Mode::Reflective);
    let t = realize(&s, lambda, theta_i, &GridSpec::from_origin(n, dx))?;
    let t = t.modulated(shift * t.du());
    let ext = t.extent();
    for (o, c) in out.iter_mut().zip(t.spectrum()) {
        *o += c.norm_sqr() / ext;
    }
    Ok(())
}
