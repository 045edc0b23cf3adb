//! Spectral path tracer with signed radiance.
//!
//! Paths start at a thin-lens camera and are traced backwards. Diffuse
//! vertices use next-event estimation, mirror and WBSDF vertices continue
//! deterministically or by sampling the kernel, and emitters hit directly
//! after a camera, mirror or WBSDF vertex add their radiance. WBSDF weights
//! may be negative; the sign is carried through the throughput. Each
//! coherence group is rendered separately and the finalized images are summed
//! in intensity.

mod image;
mod scene;

pub use image::{finalize, incoherent_sum, FinalImage, Image, NEGATIVITY_TOLERANCE};
pub use scene::{
    Camera, CameraDesc, Light, LightDesc, Material, MaterialDesc, Patch, PatchDesc, Rect, RectDesc, RenderSettings,
    Scene, SceneDesc, MAX_SPECTRAL_BINS, SCENE_VERSION,
};

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{concentric_disk, orthonormal_basis, Vec3};
use crate::microstructure::Mode;
use crate::wbsdf::RowSelect;

const T_MIN: f64 = 1e-9;
const RR_DEPTH: usize = 3;

/// Ray payload: a path vertex carrying signed radiance weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedRadianceSample {
    pub origin: Vec3,
    pub direction: Vec3,
    pub lambda: f64,
    /// Signed path throughput (radiance scale) accumulated so far.
    pub radiance: f64,
    pub bounce_count: usize,
}

/// Camera ray and what is needed to estimate its footprint.
#[derive(Debug, Clone, Copy)]
pub struct CameraRay {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Camera {
    /// Ray through film position `(px + jx, py + jy)` and lens sample `(l1, l2)`.
    pub fn generate(&self, px: f64, py: f64, l1: f64, l2: f64) -> CameraRay {
        let fx = (px - self.width as f64 / 2.0) * self.pixel_pitch;
        let fy = (self.height as f64 / 2.0 - py) * self.pixel_pitch;
        let chief = (self.forward * self.film_distance + self.right * fx + self.up * fy).normalized();
        let (lx, ly) = concentric_disk(l1, l2);
        let origin = self.position + (self.right * lx + self.up * ly) * self.aperture_radius;
        let direction = match self.focus_distance {
            None => chief,
            Some(s) => {
                let focal = self.position + chief * (s / chief.dot(self.forward));
                (focal - origin).normalized()
            }
        };
        CameraRay { origin, direction }
    }

    /// Width of one pixel's ray bundle at distance `t` along `d`.
    pub fn footprint(&self, d: Vec3, t: f64) -> f64 {
        let depth = t * d.dot(self.forward).abs();
        let blur = match self.focus_distance {
            None => 2.0 * self.aperture_radius,
            Some(s) => 2.0 * self.aperture_radius * (1.0 - depth / s).abs(),
        };
        blur + self.pixel_pitch * depth / self.film_distance
    }
}

enum Hit {
    Patch(usize, f64),
    Light(usize),
}

fn closest(scene: &Scene, o: Vec3, d: Vec3) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    let mut t_best = f64::INFINITY;
    for (i, p) in scene.patches.iter().enumerate() {
        if let Some(t) = p.rect.intersect(o, d, T_MIN) {
            if t < t_best {
                t_best = t;
                best = Some(Hit::Patch(i, t));
            }
        }
    }
    for (i, l) in scene.lights.iter().enumerate() {
        if let Light::Area { rect, .. } = l {
            if let Some(t) = rect.intersect(o, d, T_MIN) {
                if t < t_best {
                    t_best = t;
                    best = Some(Hit::Light(i));
                }
            }
        }
    }
    best
}

fn occluded(scene: &Scene, o: Vec3, d: Vec3, t_max: f64) -> bool {
    scene.patches.iter().any(|p| p.rect.intersect(o, d, T_MIN).is_some_and(|t| t < t_max))
        || scene.lights.iter().any(|l| match l {
            Light::Area { rect, .. } => rect.intersect(o, d, T_MIN).is_some_and(|t| t < t_max),
            _ => false,
        })
}

/// Radiance of the group's distant lights seen along `d`.
fn sky(scene: &Scene, group: u32, d: Vec3) -> f64 {
    scene
        .lights
        .iter()
        .map(|l| match l {
            Light::Distant { direction, cos_radius, radiance, group: g, .. }
                if *g == group && (-*direction).dot(d) >= *cos_radius =>
            {
                *radiance
            }
            _ => 0.0,
        })
        .sum()
}

/// Irradiance-like NEE term `sum L cos / pdf` at a diffuse point with normal `n`.
fn direct_light(scene: &Scene, group: u32, p: Vec3, n: Vec3, rng: &mut ChaCha8Rng) -> f64 {
    let mut e = 0.0;
    for l in &scene.lights {
        if l.group() != group {
            continue;
        }
        match l {
            Light::Point { position, intensity, .. } => {
                let to = *position - p;
                let dist = to.length();
                let d = to / dist;
                let c = n.dot(d);
                if c > 0.0 && !occluded(scene, p, d, dist * (1.0 - 1e-9)) {
                    e += intensity * c / (dist * dist);
                }
            }
            Light::Area { rect, radiance, .. } => {
                let q = rect.point(rng.random(), rng.random());
                let to = q - p;
                let dist = to.length();
                let d = to / dist;
                let c = n.dot(d);
                let cl = -d.dot(rect.normal);
                if c > 0.0 && cl > 0.0 && !occluded(scene, p, d, dist * (1.0 - 1e-9)) {
                    e += radiance * c * cl * rect.area / (dist * dist);
                }
            }
            Light::Distant { direction, cos_radius, solid_angle, radiance, frame, .. } => {
                let ct = 1.0 - rng.random::<f64>() * (1.0 - cos_radius);
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                let axis = -*direction;
                let d = (frame.0 * (st * phi.cos()) + frame.1 * (st * phi.sin()) + axis * ct).normalized();
                let c = n.dot(d);
                if c > 0.0 && !occluded(scene, p, d, f64::INFINITY) {
                    e += radiance * c * solid_angle;
                }
            }
        }
    }
    e
}

fn cosine_hemisphere(n: Vec3, rng: &mut ChaCha8Rng) -> Vec3 {
    let (x, y) = concentric_disk(rng.random(), rng.random());
    let z = (1.0 - x * x - y * y).max(0.0).sqrt();
    let (t, b) = orthonormal_basis(n);
    (t * x + b * y + n * z).normalized()
}

/// Per-path counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PathCounters {
    /// WBSDF vertices rejected by the paraxial guard.
    pub paraxial_rejections: u64,
    /// WBSDF vertices with no propagating kernel energy.
    pub evanescent_absorptions: u64,
}

impl PathCounters {
    fn add(&mut self, o: &PathCounters) {
        self.paraxial_rejections += o.paraxial_rejections;
        self.evanescent_absorptions += o.evanescent_absorptions;
    }
}

struct Tracer<'a> {
    scene: &'a Scene,
    group: u32,
    sin_guard: f64,
    uniform: bool,
    /// Table layer per (bin, wbsdf).
    layers: Vec<Vec<usize>>,
}

impl Tracer<'_> {
    fn trace(&self, ray: CameraRay, bin: usize, rng: &mut ChaCha8Rng, counters: &mut PathCounters) -> f64 {
        let scene = self.scene;
        let lambda = scene.wavelengths[bin].meters();
        let mut s = SignedRadianceSample {
            origin: ray.origin,
            direction: ray.direction,
            lambda,
            radiance: 1.0,
            bounce_count: 0,
        };
        let mut count_emission = true;
        // None: the bundle has been spread by a diffuse bounce
        let mut footprint: Option<f64> = None;
        let mut primary = true;
        let mut result = 0.0;
        while s.bounce_count < scene.settings.max_depth {
            let d = s.direction;
            let hit = closest(scene, s.origin, d);
            let (pi, t) = match hit {
                None => {
                    if count_emission {
                        result += s.radiance * sky(scene, self.group, d);
                    }
                    break;
                }
                Some(Hit::Light(li)) => {
                    if let Light::Area { rect, radiance, group } = &scene.lights[li] {
                        if count_emission && *group == self.group && d.dot(rect.normal) < 0.0 {
                            result += s.radiance * radiance;
                        }
                    }
                    break;
                }
                Some(Hit::Patch(pi, t)) => (pi, t),
            };
            let patch = &scene.patches[pi];
            let p = s.origin + d * t;
            let n = patch.rect.normal;
            let cos_hit = d.dot(n).abs().max(1e-6);
            if primary {
                footprint = Some(scene.camera.footprint(d, t) / cos_hit);
                primary = false;
            }
            let next = match patch.material {
                Material::Diffuse { albedo } => {
                    let ns = if d.dot(n) < 0.0 { n } else { -n };
                    result += s.radiance * albedo / PI * direct_light(scene, self.group, p, ns, rng);
                    s.radiance *= albedo;
                    count_emission = false;
                    footprint = None;
                    cosine_hemisphere(ns, rng)
                }
                Material::Mirror => {
                    count_emission = true;
                    d - n * (2.0 * d.dot(n))
                }
                Material::Wbsdf { index } => {
                    let w = &scene.wbsdfs[index];
                    let layer = self.layers[bin][index];
                    let out = -d;
                    let (st, sb, sn) = (out.dot(patch.axis), out.dot(patch.binormal), out.dot(n));
                    let g2 = self.sin_guard * self.sin_guard;
                    if st * st + sb * sb > g2 {
                        counters.paraxial_rejections += 1;
                        break;
                    }
                    let s_max = (g2 - sb * sb).max(0.0).sqrt();
                    let row = match footprint {
                        Some(f) if f < w.cell(layer) => RowSelect::At((p - patch.rect.corner).dot(patch.axis)),
                        _ => RowSelect::Mean,
                    };
                    let draw = rng.random::<f64>();
                    let sample = if self.uniform {
                        w.sample_shift_uniform(layer, row, st, s_max, true, draw)
                    } else {
                        w.sample_shift(layer, row, st, s_max, true, draw)
                    };
                    let Ok(sample) = sample else {
                        counters.evanescent_absorptions += 1;
                        break;
                    };
                    // spread the shift uniformly over the bin
                    let s_new = sample.s_out - (rng.random::<f64>() - 0.5) * sample.bin_width * lambda;
                    let c2 = 1.0 - s_new * s_new - sb * sb;
                    if c2 <= 0.0 {
                        counters.evanescent_absorptions += 1;
                        break;
                    }
                    let wn = match w.mode() {
                        Mode::Reflective => -sn.signum() * c2.sqrt(),
                        Mode::Transmissive => sn.signum() * c2.sqrt(),
                    };
                    let incoming = patch.axis * s_new + patch.binormal * sb + n * wn;
                    s.radiance *= sample.weight;
                    count_emission = true;
                    -incoming
                }
            };
            s.origin = p;
            s.direction = next.normalized();
            s.bounce_count += 1;
            if s.bounce_count >= RR_DEPTH {
                let q = s.radiance.abs().min(1.0);
                if q <= 0.0 || rng.random::<f64>() >= q {
                    break;
                }
                s.radiance /= q;
            }
        }
        result
    }
}

/// Signed per-bin sums for one pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelEstimate {
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub counters: PathCounters,
}

/// RNG stream of one (coherence group, pixel) pair.
pub fn pixel_rng(seed: u64, group: u32, pixel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((group as u64) << 40) | pixel as u64);
    rng
}

fn tracer<'a>(scene: &'a Scene, group: u32, uniform: bool) -> Tracer<'a> {
    let layers =
        scene.wavelengths.iter().map(|l| scene.wbsdfs.iter().map(|w| w.layer_for(l.meters())).collect()).collect();
    Tracer { scene, group, sin_guard: scene.settings.paraxial_limit_deg.to_radians().sin(), uniform, layers }
}

/// Monte-Carlo estimate for pixel `(px, py)`: stratified film jitter,
/// aperture-disk lens samples, one path per spectral bin.
pub fn trace_pixel(
    scene: &Scene,
    group: u32,
    px: usize,
    py: usize,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PixelEstimate> {
    if n_samples == 0 {
        return Err(Error::Argument("n_samples must be >= 1".into()));
    }
    Ok(trace_pixel_with(&tracer(scene, group, scene.settings.uniform_wbsdf_sampling), px, py, n_samples, rng))
}

fn trace_pixel_with(tr: &Tracer<'_>, px: usize, py: usize, n: usize, rng: &mut ChaCha8Rng) -> PixelEstimate {
    let nb = tr.scene.wavelengths.len();
    let mut est = PixelEstimate { sum: vec![0.0; nb], sum_sq: vec![0.0; nb], counters: PathCounters::default() };
    let strata = (n as f64).sqrt().floor().max(1.0) as usize;
    for i in 0..n {
        let (sx, sy) = (i % strata, (i / strata) % strata);
        let jx = (sx as f64 + rng.random::<f64>()) / strata as f64;
        let jy = (sy as f64 + rng.random::<f64>()) / strata as f64;
        let ray = tr.scene.camera.generate(px as f64 + jx, py as f64 + jy, rng.random(), rng.random());
        for b in 0..nb {
            let v = tr.trace(ray, b, rng, &mut est.counters);
            est.sum[b] += v;
            est.sum_sq[b] += v * v;
        }
    }
    est
}

/// Options for [`render_with`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RenderOptions {
    pub spp: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Render only this coherence group (other groups' emitters stay dark).
    pub only_group: Option<u32>,
    pub uniform_wbsdf_sampling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderStats {
    pub spp: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    pub groups: Vec<u32>,
    /// Smallest signed pixel value before the final clamp.
    pub min_before_clamp: f64,
    pub max: f64,
    pub counters: PathCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    /// Incoherent sum of the finalized group images.
    pub image: FinalImage,
    /// Signed estimate summed over groups, before clamping.
    pub raw: Image,
    pub stats: RenderStats,
}

/// Renders one coherence group.
pub fn render_group(scene: &Scene, group: u32, opts: &RenderOptions) -> Result<(Image, PathCounters)> {
    let cam = &scene.camera;
    let (w, h) = (cam.width, cam.height);
    let tr = tracer(scene, group, opts.uniform_wbsdf_sampling);
    let run = || -> Vec<PixelEstimate> {
        (0..w * h)
            .into_par_iter()
            .map(|i| {
                let mut rng = pixel_rng(opts.seed, group, i);
                trace_pixel_with(&tr, i % w, i / w, opts.spp, &mut rng)
            })
            .collect()
    };
    let pixels = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let wl: Vec<f64> = scene.wavelengths.iter().map(|l| l.meters()).collect();
    let nb = wl.len();
    let mut img = Image::zeros(w, h, wl, opts.spp);
    let mut counters = PathCounters::default();
    let n = opts.spp as f64;
    for (i, px) in pixels.iter().enumerate() {
        counters.add(&px.counters);
        for b in 0..nb {
            let mean = px.sum[b] / n;
            let var = if opts.spp > 1 { ((px.sum_sq[b] / n - mean * mean) * n / (n - 1.0)).max(0.0) / n } else { 0.0 };
            img.mean[i * nb + b] = mean;
            img.variance[i * nb + b] = var;
        }
    }
    Ok((img, counters))
}

/// Renders every coherence group (or only `opts.only_group`) and sums the
/// finalized images incoherently.
pub fn render_with(scene: &Scene, opts: &RenderOptions) -> Result<RenderOutput> {
    if opts.spp == 0 {
        return Err(Error::Argument("spp must be >= 1".into()));
    }
    let start = Instant::now();
    let groups: Vec<u32> = match opts.only_group {
        Some(g) => vec![g],
        None => scene.groups(),
    };
    let wl: Vec<f64> = scene.wavelengths.iter().map(|l| l.meters()).collect();
    let mut raw = Image::zeros(scene.camera.width, scene.camera.height, wl, opts.spp);
    let mut finals = Vec::new();
    let mut counters = PathCounters::default();
    for &g in &groups {
        let (img, c) = render_group(scene, g, opts)?;
        counters.add(&c);
        raw.accumulate(&img)?;
        finals.push(finalize(&img));
    }
    let image = if finals.is_empty() { finalize(&raw) } else { incoherent_sum(&finals)? };
    let stats = RenderStats {
        spp: opts.spp,
        seed: opts.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        groups,
        min_before_clamp: raw.min().min(0.0),
        max: raw.max().max(0.0),
        counters,
    };
    Ok(RenderOutput { image, raw, stats })
}

/// Renders with the scene's settings overridden by `spp`, `threads`, `seed`.
pub fn render(scene: &Scene, spp: usize, threads: Option<usize>, seed: u64) -> Result<RenderOutput> {
    render_with(
        scene,
        &RenderOptions {
            spp,
            seed,
            threads,
            only_group: None,
            uniform_wbsdf_sampling: scene.settings.uniform_wbsdf_sampling,
        },
    )
}

/// Equal-spp variance ratio, uniform over importance-sampled WBSDF draws.
///
/// Variances are summed over every pixel and bin, so pixels that only one
/// estimator reaches still count.
pub fn variance_ratio(scene: &Scene, spp: usize, threads: Option<usize>, seed: u64) -> Result<f64> {
    let mut totals = [0.0; 2];
    for (uniform, total) in [false, true].into_iter().zip(totals.iter_mut()) {
        let opts = RenderOptions { spp, seed, threads, only_group: None, uniform_wbsdf_sampling: uniform };
        *total = render_with(scene, &opts)?.raw.variance.iter().sum();
    }
    if totals[0] <= 0.0 {
        return Err(Error::Scope("importance-sampled render has zero variance; no WBSDF path reaches the film".into()));
    }
    Ok(totals[1] / totals[0])
}
