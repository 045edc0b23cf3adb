//! `wbsdf-kit`: tables, renders, validation and lens PSFs from the command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 bad input, 3 scene error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wbsdf_kit::config::{Config, ValidationConfig};
use wbsdf_kit::field::{wdf_1d_with, Boundary, WignerTable};
use wbsdf_kit::imageio::{read_pfm, write_pfm, write_ppm};
use wbsdf_kit::microstructure::{
    heightfield_from_csv, realize, GridSpec, Microstructure, MicrostructureKind, Mode, Modulation, Wavelength,
};
use wbsdf_kit::psf::{
    apply_psf, depth_planes, export_stack, ChannelImage, KernelSpec, LensSpec, PsfStack, DEFAULT_DEPTH_PLANES,
};
use wbsdf_kit::render::{render_with, variance_ratio, RenderOptions, Scene};
use wbsdf_kit::validate::{self, first_zero_radius};
use wbsdf_kit::wbsdf::write_table;
use wbsdf_kit::Error;

#[derive(Parser)]
#[command(name = "wbsdf-kit", version, about = "Wigner-distribution BSDF toolkit")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "WBSDF_KIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build Wigner tables of a microstructure and check their marginals.
    Wdf(WdfArgs),
    /// Path-trace a scene.
    Render(RenderArgs),
    /// Run the named cross-checks.
    Validate(ValidateArgs),
    /// Build a thin-lens PSF stack and optionally apply it to an image.
    Psf(PsfArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Zero,
    Periodic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Reflective,
    Transmissive,
}

#[derive(Args)]
struct WdfArgs {
    /// JSON config supplying the microstructure, grid and wavelengths.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sinusoidal phase grating: `m=<phase>` or `h=<height>`, and `p=<pitch>`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    grating: Option<Vec<String>>,
    /// Binary phase grating: `m=` or `h=`, `p=`, optional `duty=`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    binary: Option<Vec<String>>,
    /// Single slit of width `w=`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    slit: Option<Vec<String>>,
    /// Two slits: width `w=`, centre separation `d=`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    double_slit: Option<Vec<String>>,
    /// Unmodulated surface.
    #[arg(long)]
    flat: bool,
    /// Height profile CSV (`x_meters,height_meters`).
    #[arg(long)]
    heightfield: Option<PathBuf>,
    /// Grid samples (power of two).
    #[arg(long)]
    n: Option<usize>,
    /// Grid spacing, meters.
    #[arg(long)]
    dx: Option<f64>,
    /// Wavelengths in meters.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Incidence angle used for height-to-phase conversion, radians.
    #[arg(long)]
    theta_i: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "wdf-out")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Scene JSON (or give `--config` with a `scene` entry).
    scene: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    spp: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Render a single coherence group.
    #[arg(long)]
    group: Option<u32>,
    /// Also render with uniform WBSDF sampling and report the variance ratio.
    #[arg(long)]
    compare_uniform: bool,
    /// Output directory.
    #[arg(long, default_value = "render-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only these checks (repeatable).
    #[arg(long)]
    only: Vec<String>,
    /// Directory for `validation.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
    /// List the check names and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct PsfArgs {
    /// Focal length, meters.
    #[arg(long, default_value_t = 0.05)]
    focal_length: f64,
    #[arg(long, default_value_t = 5.6)]
    f_number: f64,
    /// Focus distance, meters (infinity when absent).
    #[arg(long)]
    focus: Option<f64>,
    /// Source depths, meters.
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<f64>>,
    /// Geometric depth range `near,far`, split into `--planes` planes.
    #[arg(long, value_delimiter = ',', value_name = "NEAR,FAR")]
    depth_range: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_DEPTH_PLANES)]
    planes: usize,
    /// Field angles, degrees.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    fields: Vec<f64>,
    /// Wavelengths, meters.
    #[arg(long, value_delimiter = ',', default_value = "450e-9,550e-9,650e-9")]
    wavelengths: Vec<f64>,
    /// Kernel size in pixels (odd).
    #[arg(long, default_value_t = 31)]
    size: usize,
    /// Film pixel pitch, meters.
    #[arg(long)]
    pitch: f64,
    /// RGB PFM to blur; channels map to the three wavelengths.
    #[arg(long)]
    apply: Option<PathBuf>,
    /// PFM depth map (first channel, meters) for `--apply`.
    #[arg(long)]
    depth_map: Option<PathBuf>,
    #[arg(long, default_value = "psf-out")]
    out: PathBuf,
}

/// Failure of a subcommand together with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Scene(_) | Error::Scope(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.cmd {
        Cmd::Wdf(a) => cmd_wdf(a),
        Cmd::Render(a) => cmd_render(a, cli.threads),
        Cmd::Validate(a) => cmd_validate(a),
        Cmd::Psf(a) => cmd_psf(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn bad(msg: impl Into<String>) -> Failure {
    Error::Argument(msg.into()).into()
}

fn open(path: &Path) -> std::result::Result<File, Failure> {
    File::open(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Parses `key=value` pairs into a lookup.
fn pairs(flag: &str, items: &[String]) -> std::result::Result<Vec<(String, f64)>, Failure> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| bad(format!("--{flag}: expected KEY=VALUE, got {s:?}")))?;
            let v: f64 = v.parse().map_err(|_| bad(format!("--{flag}: {k} is not a number: {v:?}")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn take(flag: &str, kv: &[(String, f64)], key: &str) -> std::result::Result<f64, Failure> {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| *v).ok_or_else(|| bad(format!("--{flag}: missing {key}=")))
}

fn depth(flag: &str, kv: &[(String, f64)]) -> std::result::Result<Modulation, Failure> {
    match (kv.iter().find(|(k, _)| k == "m"), kv.iter().find(|(k, _)| k == "h")) {
        (Some((_, m)), None) => Ok(Modulation::Phase(*m)),
        (None, Some((_, h))) => Ok(Modulation::Height(*h)),
        _ => Err(bad(format!("--{flag}: give exactly one of m= (phase) or h= (height)"))),
    }
}

fn microstructure_from_flags(a: &WdfArgs, mode: Mode) -> std::result::Result<Option<Microstructure>, Failure> {
    let mut found = Vec::new();
    if let Some(v) = &a.grating {
        let kv = pairs("grating", v)?;
        found.push(MicrostructureKind::SinusoidalGrating {
            depth: depth("grating", &kv)?,
            pitch: take("grating", &kv, "p")?,
        });
    }
    if let Some(v) = &a.binary {
        let kv = pairs("binary", v)?;
        let duty = kv.iter().find(|(k, _)| k == "duty").map(|(_, v)| *v).unwrap_or(0.5);
        found.push(MicrostructureKind::BinaryPhaseGrating {
            depth: depth("binary", &kv)?,
            pitch: take("binary", &kv, "p")?,
            duty,
        });
    }
    if let Some(v) = &a.slit {
        found.push(MicrostructureKind::Slit { width: take("slit", &pairs("slit", v)?, "w")? });
    }
    if let Some(v) = &a.double_slit {
        let kv = pairs("double-slit", v)?;
        found.push(MicrostructureKind::DoubleSlit {
            width: take("double-slit", &kv, "w")?,
            separation: take("double-slit", &kv, "d")?,
        });
    }
    if a.flat {
        found.push(MicrostructureKind::Flat);
    }
    let csv = match &a.heightfield {
        Some(p) => Some(heightfield_from_csv(open(p)?, mode)?),
        None => None,
    };
    match (found.len(), csv) {
        (0, None) => Ok(None),
        (0, Some(s)) => Ok(Some(s)),
        (1, None) => {
            let s = Microstructure::new(found.pop().expect("one kind"), mode);
            s.validate()?;
            Ok(Some(s))
        }
        _ => Err(bad("give only one microstructure flag")),
    }
}

fn cmd_wdf(a: WdfArgs) -> CmdResult {
    let cfg = match &a.config {
        Some(p) => Some(Config::parse(&read_text(p)?)?),
        None => None,
    };
    let mode = match a.mode {
        Some(ModeArg::Reflective) => Mode::Reflective,
        Some(ModeArg::Transmissive) => Mode::Transmissive,
        None => cfg.as_ref().and_then(|c| c.microstructure.as_ref().map(|m| m.mode)).unwrap_or_default(),
    };
    let s = match microstructure_from_flags(&a, mode)? {
        Some(s) => s,
        None => cfg.as_ref().and_then(|c| c.microstructure.clone()).ok_or_else(|| {
            bad("no microstructure: use --grating/--binary/--slit/--double-slit/--flat/--heightfield or --config")
        })?,
    };
    let grid = match (a.n, a.dx) {
        (Some(n), Some(dx)) => GridSpec::centered(n, dx),
        (None, None) => match (&s.kind, cfg.as_ref().and_then(|c| c.grid)) {
            (_, Some(g)) => g,
            (MicrostructureKind::Heightfield { samples, dx }, None) => GridSpec::from_origin(samples.len(), *dx),
            _ => return Err(bad("grid required: give --n and --dx (or a config grid)")),
        },
        _ => return Err(bad("--n and --dx go together")),
    };
    let boundary = match a.boundary {
        Some(BoundaryArg::Zero) => Boundary::Zero,
        Some(BoundaryArg::Periodic) => Boundary::Periodic,
        None => cfg.as_ref().map(|c| c.boundary).unwrap_or(Boundary::Zero),
    };
    let lambdas = match (&a.lambda, &cfg) {
        (Some(l), _) => l.clone(),
        (None, Some(c)) => c.wavelengths.clone(),
        (None, None) => vec![550e-9],
    };
    let theta_i = a.theta_i.or(cfg.as_ref().map(|c| c.theta_i)).unwrap_or(0.0);

    std::fs::create_dir_all(&a.out)?;
    let mut bin = BufWriter::new(File::create(a.out.join("table.wbsdf"))?);
    let mut reports = Vec::new();
    for &l in &lambdas {
        let lambda = Wavelength::new(l)?;
        let t = realize(&s, lambda, theta_i, &grid)?;
        let w = wdf_1d_with(&t, boundary)?;
        write_table(&mut bin, &w, lambda, s.mode)?;
        let tag = format!("{:.0}nm", l * 1e9);
        w.write_csv(BufWriter::new(File::create(a.out.join(format!("wdf_{tag}.csv")))?))?;
        write_marginals(&a.out, &tag, &w, l)?;
        let r = wdf_report(&s, &t, &w, l);
        println!("{tag}: {}", r["summary"].as_str().unwrap_or_default());
        reports.push(r);
    }
    bin.flush()?;
    write_json(&a.out.join("report.json"), &json!({ "tables": reports }))?;
    println!("wrote {} table(s) to {}", lambdas.len(), a.out.display());
    Ok(())
}

fn write_marginals(dir: &Path, tag: &str, w: &WignerTable, lambda: f64) -> CmdResult {
    let mut f = BufWriter::new(File::create(dir.join(format!("marginal_u_{tag}.csv")))?);
    writeln!(f, "u_cycles_per_meter,sin_theta,value")?;
    for (k, v) in w.spectrum_marginal().iter().enumerate() {
        writeln!(f, "{:e},{:e},{:e}", w.u(k), w.u(k) * lambda, v)?;
    }
    let mut f = BufWriter::new(File::create(dir.join(format!("marginal_x_{tag}.csv")))?);
    writeln!(f, "x_meters,value")?;
    for (i, v) in w.intensity_marginal().iter().enumerate() {
        writeln!(f, "{:e},{:e}", w.x(i), v)?;
    }
    Ok(())
}

fn wdf_report(
    s: &Microstructure,
    t: &wbsdf_kit::field::ComplexGrid,
    w: &WignerTable,
    lambda: f64,
) -> serde_json::Value {
    let inten = t.intensity();
    let scale = inten.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let x_err = w.intensity_marginal().iter().zip(&inten).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max);
    let spec = w.spectrum_marginal();
    let mass: f64 = spec.iter().map(|v| v.abs()).sum();
    let (peak, peak_v) = spec.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let mut summary =
        format!("N = {}, dx = {:e} m, du = {:e} 1/m; x-marginal max rel error {x_err:.2e}", w.n_x(), w.dx(), w.du());
    if w.boundary() == Boundary::Zero {
        let direct: Vec<f64> = t.spectrum().iter().map(|c| c.norm_sqr()).collect();
        let dscale = direct.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let u_err = spec.iter().zip(&direct).map(|(a, b)| (a - b).abs() / dscale).fold(0.0, f64::max);
        summary.push_str(&format!(", u-marginal max rel error {u_err:.2e}"));
    }
    if peak_v >= (1.0 - 1e-9) * mass && w.u(peak).abs() < 0.5 * w.du() {
        summary.push_str("; spectrum: delta at u=0");
    } else {
        summary.push_str(&format!("; spectrum peak at u = {:e} (sin = {:.4})", w.u(peak), w.u(peak) * lambda));
    }
    let mut first_zero = None;
    if let MicrostructureKind::Slit { width } = s.kind {
        if let Some(k0) = w.u_index(0.0) {
            let k = (k0 + 1..spec.len() - 1).find(|&k| spec[k] <= spec[k - 1] && spec[k] <= spec[k + 1]);
            if let Some(k) = k {
                first_zero = Some(w.u(k));
                summary.push_str(&format!("; first zero at u = {:e} (1/w = {:e})", w.u(k), 1.0 / width));
            }
        }
    }
    json!({
        "wavelength": lambda,
        "n_x": w.n_x(),
        "n_u": w.n_u(),
        "dx": w.dx(),
        "du": w.du(),
        "x_marginal_max_rel_error": x_err,
        "first_zero_u": first_zero,
        "summary": summary,
    })
}

fn cmd_render(a: RenderArgs, threads: Option<usize>) -> CmdResult {
    let cfg = match &a.config {
        Some(p) => Some(Config::parse(&read_text(p)?)?),
        None => None,
    };
    let scene_path = match (&a.scene, &cfg) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => {
            let rel = c.scene.clone().ok_or_else(|| bad("/scene: config names no scene file"))?;
            a.config.as_ref().and_then(|p| p.parent()).map(|d| d.join(&rel)).unwrap_or(rel)
        }
        (None, None) => return Err(bad("give a scene file or --config")),
    };
    let text = read_text(&scene_path)?;
    let mut scene = Scene::from_json(&text, scene_path.parent())?;
    let over = cfg.as_ref().map(|c| c.render.clone()).unwrap_or_default();
    if let Some(d) = a.max_depth.or(over.max_depth) {
        scene.settings.max_depth = d;
    }
    let spp = a.spp.or(over.spp).unwrap_or(scene.settings.spp);
    let seed = a.seed.or(over.seed).unwrap_or(scene.settings.seed);
    let threads = threads.or(over.threads);
    let opts = RenderOptions {
        spp,
        seed,
        threads,
        only_group: a.group,
        uniform_wbsdf_sampling: scene.settings.uniform_wbsdf_sampling,
    };
    let out = render_with(&scene, &opts)?;
    let ratio = if a.compare_uniform { Some(variance_ratio(&scene, spp, threads, seed)?) } else { None };

    std::fs::create_dir_all(&a.out)?;
    let img = &out.image;
    let rgb = img.to_rgb();
    write_pfm(BufWriter::new(File::create(a.out.join("image.pfm"))?), img.width, img.height, &rgb)?;
    write_ppm(
        BufWriter::new(File::create(a.out.join("image.ppm"))?),
        img.width,
        img.height,
        &rgb,
        display_white(&rgb),
    )?;
    let mut stats = serde_json::to_value(&out.stats).map_err(|e| Error::Internal(e.to_string()))?;
    stats["variance_ratio"] = json!(ratio);
    stats["scene"] = json!(scene_path.display().to_string());
    write_json(&a.out.join("stats.json"), &stats)?;
    println!(
        "{}x{} at {spp} spp in {:.2}s; min before clamp {:.3e}, max {:.3e}{}",
        img.width,
        img.height,
        out.stats.wall_time_s,
        out.stats.min_before_clamp,
        out.stats.max,
        ratio.map(|r| format!("; variance ratio (uniform / importance) {r:.2}")).unwrap_or_default()
    );
    Ok(())
}

/// 99.5th percentile of the nonzero channel values, so a few bright pixels
/// do not darken the preview.
fn display_white(rgb: &[[f64; 3]]) -> f64 {
    let mut v: Vec<f64> = rgb.iter().flatten().copied().filter(|c| *c > 0.0).collect();
    if v.is_empty() {
        return 1.0;
    }
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * 0.995) as usize]
}

fn cmd_validate(a: ValidateArgs) -> CmdResult {
    if a.list {
        for n in validate::CHECK_NAMES {
            println!("{n}");
        }
        return Ok(());
    }
    let cfg = match &a.config {
        Some(p) => Config::parse(&read_text(p)?)?.validation,
        None => ValidationConfig::default(),
    };
    let report = validate::run(&cfg, &a.only)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?);
    } else {
        print!("{}", report.summary());
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("validation.json"), &report)?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (measured {:.4e}, tolerance {:.2e})", c.name, c.measured, c.tolerance))
            .collect();
        Err(Failure { code: 1, message: format!("failed: {}", failed.join("; ")) })
    }
}

fn cmd_psf(a: PsfArgs) -> CmdResult {
    let lens = LensSpec::new(a.focal_length, a.f_number, a.focus)?;
    let depths = match (&a.depths, &a.depth_range) {
        (Some(_), Some(_)) => return Err(bad("--depths and --depth-range are exclusive")),
        (Some(d), None) => d.clone(),
        (None, Some(r)) if r.len() == 2 => depth_planes(r[0], r[1], a.planes)?,
        (None, Some(_)) => return Err(bad("--depth-range takes NEAR,FAR")),
        // a kilometre is in focus for any lens focused at infinity
        (None, None) => vec![a.focus.unwrap_or(1e3)],
    };
    let fields: Vec<f64> = a.fields.iter().map(|d| d.to_radians()).collect();
    let stack = PsfStack::build(lens, &fields, &depths, &a.wavelengths, KernelSpec { size: a.size, pitch: a.pitch })?;
    let index = export_stack(&stack, &a.out)?;
    for (l, &wl) in a.wavelengths.iter().enumerate() {
        let k = stack.kernel(0, 0, l);
        println!(
            "{:.0} nm: Airy first zero 1.22 lambda N = {:.3} um; kernel (depth {:.3} m) first minimum {:.3} um",
            wl * 1e9,
            lens.airy_radius(wl) * 1e6,
            depths[0],
            first_zero_radius(k) * 1e6
        );
    }
    println!("wrote {} kernels to {}", index.kernels.len(), a.out.display());

    if let Some(path) = &a.apply {
        let (w, h, px) = read_pfm(open(path)?)?;
        let nc = a.wavelengths.len();
        if nc != 3 && nc != 1 {
            return Err(bad("--apply needs one or three wavelengths"));
        }
        let values: Vec<f64> = px.iter().flat_map(|p| p[..nc].iter().map(|v| *v as f64).collect::<Vec<_>>()).collect();
        let image = ChannelImage { width: w, height: h, channels: nc, values };
        let depth_map = match &a.depth_map {
            Some(p) => {
                let (dw, dh, d) = read_pfm(open(p)?)?;
                if (dw, dh) != (w, h) {
                    return Err(bad("depth map size differs from the image"));
                }
                d.iter().map(|p| p[0] as f64).collect()
            }
            None => vec![depths[0]; w * h],
        };
        let out = apply_psf(&image, &stack, &depth_map)?;
        let rgb: Vec<[f64; 3]> =
            out.image.values.chunks(nc).map(|c| if nc == 3 { [c[0], c[1], c[2]] } else { [c[0]; 3] }).collect();
        write_pfm(BufWriter::new(File::create(a.out.join("applied.pfm"))?), w, h, &rgb)?;
        println!("applied stack to {}x{} image; {} pixel depths clamped", w, h, out.clamped_depths);
    }
    Ok(())
}
