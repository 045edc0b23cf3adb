use wbsdf_kit::field::{wdf_1d_with, Boundary};
use wbsdf_kit::microstructure::{realize, GridSpec, Microstructure, MicrostructureKind, Mode, Modulation, Wavelength};
use wbsdf_kit::psf::{compute_psf, KernelSpec, LensSpec};
use wbsdf_kit::wbsdf::{RowSelect, Wbsdf};
use wbsdf_kit::{Error, Result};

use crate::Heatmap;

/// Largest grid the page asks for; keeps the table under a few MB.
pub const MAX_SAMPLES: usize = 1024;

fn grating(phase: f64, pitch: f64) -> Microstructure {
    Microstructure::new(
        MicrostructureKind::SinusoidalGrating { depth: Modulation::Phase(phase), pitch },
        Mode::Reflective,
    )
}

fn grating_table(
    phase: f64,
    pitch_um: f64,
    lambda_nm: f64,
    periods: usize,
    per_period: usize,
) -> Result<(Wavelength, wbsdf_kit::field::WignerTable)> {
    let n = periods * per_period;
    if n == 0 || n > MAX_SAMPLES {
        return Err(Error::Argument(format!("grid of {n} samples outside 1..={MAX_SAMPLES}")));
    }
    let pitch = pitch_um * 1e-6;
    let lambda = Wavelength::new(lambda_nm * 1e-9)?;
    let t = realize(&grating(phase, pitch), lambda, 0.0, &GridSpec::from_origin(n, pitch / per_period as f64))?;
    Ok((lambda, wdf_1d_with(&t, Boundary::Periodic)?))
}

pub fn grating_wdf(phase: f64, pitch_um: f64, lambda_nm: f64, periods: usize, per_period: usize) -> Result<Heatmap> {
    let (_, w) = grating_table(phase, pitch_um, lambda_nm, periods, per_period)?;
    let (nx, nu) = (w.n_x(), w.n_u());
    let extent = [w.u(0) * 1e-6, w.u(nu - 1) * 1e-6, w.x(0) * 1e6, w.x(nx - 1) * 1e6];
    Ok(Heatmap::new(nu, nx, w.values().to_vec(), extent))
}

pub fn wbsdf_lobes(phase: f64, pitch_um: f64, lambda_nm: f64, theta_i_deg: f64) -> Result<Vec<f64>> {
    if !(theta_i_deg.abs() < 90.0) {
        return Err(Error::Argument("incidence must be within +-90 degrees".into()));
    }
    let (lambda, w) = grating_table(phase, pitch_um, lambda_nm, 8, 64)?;
    let l = lambda.meters();
    let us: Vec<f64> = (0..w.n_u()).map(|i| w.u(i)).collect();
    let f = Wbsdf::from_wdf(w, lambda, Mode::Reflective)?;
    let s_in = theta_i_deg.to_radians().sin();
    let mut pairs: Vec<(f64, f64)> = us
        .into_iter()
        .filter_map(|u| {
            // reflective: delta_u = (-sin(theta_o) - sin(theta_i)) / lambda
            let s_out = -(s_in + u * l);
            (s_out.abs() < 1.0).then(|| (s_out.asin().to_degrees(), f.eval_shift(0, RowSelect::Mean, u)))
        })
        .collect();
    let peak = pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    pairs.retain(|p| p.1.abs() > 1e-9 * peak);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().flat_map(|(a, v)| [a, v]).collect())
}

pub fn psf_kernel(
    focal_mm: f64,
    f_number: f64,
    focus_m: f64,
    depth_m: f64,
    lambda_nm: f64,
    size: usize,
    pitch_um: f64,
) -> Result<Heatmap> {
    let focus = (focus_m > 0.0).then_some(focus_m);
    let depth = (depth_m > 0.0).then_some(depth_m);
    let lens = LensSpec::new(focal_mm * 1e-3, f_number, focus)?;
    let pitch = pitch_um * 1e-6;
    let k = compute_psf(&lens, depth, 0.0, lambda_nm * 1e-9, KernelSpec { size, pitch })?;
    let half = (size / 2) as f64 * pitch_um;
    Ok(Heatmap::new(k.size, k.size, k.values, [-half, half, -half, half]))
}
