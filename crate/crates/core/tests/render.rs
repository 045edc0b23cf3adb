use std::f64::consts::PI;
use std::path::PathBuf;

use serde_json::{json, Value};
use wbsdf_kit::render::{finalize, incoherent_sum, render, render_with, FinalImage, RenderOptions, Scene};
use wbsdf_kit::Error;

fn scenes_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(scenes_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn build(v: &Value) -> Scene {
    Scene::from_json(&v.to_string(), Some(&scenes_dir())).unwrap()
}

fn build_err(v: &Value) -> Error {
    Scene::from_json(&v.to_string(), Some(&scenes_dir())).unwrap_err()
}

fn camera(position: [f64; 3], look_at: [f64; 3], up: [f64; 3], w: usize, h: usize, pitch: f64) -> Value {
    json!({
        "position": position, "look_at": look_at, "up": up,
        "focal_length": 0.05, "aperture_radius": 1e-3,
        "width": w, "height": h, "pixel_pitch": pitch
    })
}

fn opts(spp: usize, seed: u64) -> RenderOptions {
    RenderOptions { spp, seed, ..Default::default() }
}

/// Column profile summed over rows.
fn columns(img: &FinalImage) -> Vec<f64> {
    (0..img.width).map(|x| (0..img.height).map(|y| img.get(x, y, 0)).sum()).collect()
}

#[test]
fn empty_scene_renders_black() {
    let s = build(&json!({
        "version": 1, "wavelengths": [5e-7], "materials": {}, "patches": [], "lights": [],
        "camera": camera([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], 8, 8, 1e-4)
    }));
    let out = render(&s, 4, None, 0).unwrap();
    assert!(out.image.values.iter().all(|&v| v == 0.0));
    assert!(out.raw.variance.iter().all(|&v| v == 0.0));
}

// Point-to-parallel-rectangle form factor, corner at the foot of the normal.
fn form_corner(a: f64, b: f64) -> f64 {
    let (ra, rb) = ((1.0 + a * a).sqrt(), (1.0 + b * b).sqrt());
    (a / ra * (b / ra).atan() + b / rb * (a / rb).atan()) / (2.0 * PI)
}

fn form_factor(p: (f64, f64), x: (f64, f64), y: (f64, f64), c: f64) -> f64 {
    let f = |u: f64, v: f64| form_corner((u - p.0) / c, (v - p.1) / c);
    f(x.1, y.1) - f(x.0, y.1) - f(x.1, y.0) + f(x.0, y.0)
}

#[test]
fn diffuse_patch_under_area_light_matches_form_factor() {
    let (albedo, radiance) = (0.8, 3.0);
    let s = build(&json!({
        "version": 1, "wavelengths": [5.5e-7],
        "materials": { "wall": { "type": "diffuse", "albedo": albedo } },
        "patches": [{ "corner": [-0.5, -0.5, 0.0], "edge_u": [1.0, 0.0, 0.0], "edge_v": [0.0, 1.0, 0.0], "material": "wall" }],
        "lights": [{ "type": "area", "corner": [-0.5, -0.5, 1.0], "edge_u": [0.0, 1.0, 0.0], "edge_v": [1.0, 0.0, 0.0], "radiance": radiance }],
        "camera": camera([0.0, -2.0, 0.5], [0.1, 0.0, 0.0], [0.0, 0.0, 1.0], 16, 16, 2e-4)
    }));
    let out = render(&s, 4096, None, 3).unwrap();
    let (mut got, mut want) = (0.0, 0.0);
    for py in 0..16 {
        for px in 0..16 {
            let ray = s.camera.generate(px as f64 + 0.5, py as f64 + 0.5, 0.5, 0.5);
            let t = -ray.origin.z / ray.direction.z;
            let hit = ray.origin + ray.direction * t;
            want += albedo * radiance * form_factor((hit.x, hit.y), (-0.5, 0.5), (-0.5, 0.5), 1.0);
            got += out.image.get(px, py, 0);
        }
    }
    assert!((got / want - 1.0).abs() < 0.02, "rendered {got}, analytic {want}");
}

#[test]
fn mirror_scene_is_noise_free() {
    let s = build(&json!({
        "version": 1, "wavelengths": [5.5e-7],
        "materials": { "m": { "type": "mirror" } },
        "patches": [{ "corner": [-2.0, -2.0, 0.0], "edge_u": [4.0, 0.0, 0.0], "edge_v": [0.0, 4.0, 0.0], "material": "m" }],
        "lights": [{ "type": "area", "corner": [-10.0, -10.0, 2.0], "edge_u": [0.0, 20.0, 0.0], "edge_v": [20.0, 0.0, 0.0], "radiance": 2.5 }],
        "camera": camera([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], 16, 16, 1e-4)
    }));
    let out = render(&s, 64, None, 9).unwrap();
    assert!(out.image.values.iter().all(|&v| v == 2.5));
    assert!(out.raw.variance.iter().all(|&v| v == 0.0));
}

#[test]
fn thread_count_does_not_change_pixels() {
    let s = build(&load("grating_goniometer.json"));
    let a = render(&s, 8, Some(1), 5).unwrap();
    let b = render(&s, 8, Some(8), 5).unwrap();
    assert_eq!(a.raw.mean, b.raw.mean);
    assert_eq!(a.image.values, b.image.values);
}

fn two_source_slits(tilt: f64) -> Value {
    let mut v = load("double_slit.json");
    let light = |dir: [f64; 3], group: u32| json!({ "type": "distant", "direction": dir, "angular_radius": 0.005, "radiance": 1.0, "coherence_group": group });
    v["lights"] = json!([light([0.0, 0.0, 1.0], 0), light([tilt.sin(), 0.0, tilt.cos()], 1)]);
    v
}

#[test]
fn groups_render_independently_and_sum_exactly() {
    let s = build(&two_source_slits(0.01));
    let full = render_with(&s, &opts(16, 2)).unwrap();
    assert_eq!(full.stats.groups, vec![0, 1]);
    let parts: Vec<FinalImage> = [0, 1]
        .iter()
        .map(|&g| render_with(&s, &RenderOptions { only_group: Some(g), ..opts(16, 2) }).unwrap().image)
        .collect();
    let sum = incoherent_sum(&parts).unwrap();
    assert_eq!(sum.values, full.image.values);
}

#[test]
fn incoherent_sum_identity_and_layout_check() {
    let s = build(&load("double_slit.json"));
    let img = render(&s, 4, None, 1).unwrap().image;
    let mut zero = img.clone();
    zero.values.iter_mut().for_each(|v| *v = 0.0);
    assert_eq!(incoherent_sum(&[img.clone(), zero]).unwrap().values, img.values);

    let mut other = img.clone();
    other.width /= 2;
    other.height *= 2;
    assert!(matches!(incoherent_sum(&[img, other]), Err(Error::Argument(_))));
    assert!(matches!(incoherent_sum(&[]), Err(Error::Argument(_))));
}

fn visibility(profile: &[f64]) -> f64 {
    let mid = profile.len() / 2;
    let core = &profile[mid - 50..mid + 50];
    let hi = core.iter().cloned().fold(f64::MIN, f64::max);
    let lo = core.iter().cloned().fold(f64::MAX, f64::min);
    (hi - lo) / (hi + lo)
}

#[test]
fn incoherent_sources_wash_out_fringes() {
    // half a fringe period apart: lambda / (2 d)
    let tilt = 5.5e-7 / (2.0 * 2e-5);
    let one = build(&load("double_slit.json"));
    let two = build(&two_source_slits(tilt));
    let v1 = visibility(&columns(&render(&one, 256, None, 4).unwrap().image));
    let v2 = visibility(&columns(&render(&two, 256, None, 4).unwrap().image));
    assert!(v1 > 0.5, "single source visibility {v1}");
    assert!(v2 < 0.5 * v1, "two-source visibility {v2} vs {v1}");
}

fn stacked_gratings(both: bool) -> Value {
    let lam = 5.5e-7;
    let grating = |pitch: f64| {
        json!({
            "type": "wbsdf",
            "microstructure": { "kind": "sinusoidal_grating", "depth": { "phase": 1.5 }, "pitch": pitch, "mode": "transmissive" },
            "grid": { "n": 2048, "dx": 1.2e-5 / 512.0 },
            "boundary": "periodic"
        })
    };
    let patch = |z: f64, m: &str| json!({ "corner": [-0.6, -0.6, z], "edge_u": [1.2, 0.0, 0.0], "edge_v": [0.0, 1.2, 0.0], "material": m });
    let patches =
        if both { json!([patch(0.0, "fine"), patch(0.05, "coarse")]) } else { json!([patch(0.05, "coarse")]) };
    let mut cam = camera([0.0, 0.0, -0.5], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], 512, 2, 1.2e-4);
    cam["aperture_radius"] = json!(0.005);
    json!({
        "version": 1, "wavelengths": [lam],
        "materials": { "coarse": grating(2e-6), "fine": grating(3e-6) },
        "patches": patches,
        "lights": [{ "type": "distant", "direction": [0.0, 0.0, -1.0], "angular_radius": 0.01, "radiance": 1.0 }],
        "camera": cam,
        "render": { "max_depth": 6, "paraxial_limit_deg": 80.0 }
    })
}

/// Energy in columns whose chief-ray sine lies within `half` of `+-target`.
fn mass_near(s: &Scene, profile: &[f64], target: f64, half: f64) -> f64 {
    let h = s.camera.height as f64 / 2.0;
    (0..profile.len())
        .filter(|&x| {
            let d = s.camera.generate(x as f64 + 0.5, h, 0.5, 0.5).direction;
            (d.x.abs() - target).abs() < half
        })
        .map(|x| profile[x])
        .sum()
}

#[test]
fn stacked_gratings_combine_orders() {
    let lam = 5.5e-7;
    let (s1, s2) = (lam / 2e-6, lam / 3e-6);
    let mixed = s1 - s2;
    let empty = mixed / 2.0;

    let two = build(&stacked_gratings(true));
    let p2 = columns(&render(&two, 256, None, 6).unwrap().image);
    for target in [mixed, s2, s1, s1 + s2] {
        let m = mass_near(&two, &p2, target, 0.012);
        let e = mass_near(&two, &p2, empty, 0.012);
        assert!(m > 10.0 * e, "order at {target}: {m} vs background {e}");
    }

    // one grating alone has nothing at the difference order
    let one = build(&stacked_gratings(false));
    let p1 = columns(&render(&one, 256, None, 6).unwrap().image);
    let at_mixed = mass_near(&one, &p1, mixed, 0.012);
    let at_first = mass_near(&one, &p1, s1, 0.012);
    assert!(at_mixed < 0.02 * at_first, "{at_mixed} vs {at_first}");
}

fn furnace(material: Value) -> Scene {
    build(&json!({
        "version": 1, "wavelengths": [5.5e-7],
        "materials": { "surface": material },
        "patches": [{ "corner": [-0.2, -0.2, 0.0], "edge_u": [0.4, 0.0, 0.0], "edge_v": [0.0, 0.4, 0.0], "material": "surface" }],
        "lights": [{ "type": "area", "corner": [-50.0, -50.0, 0.6], "edge_u": [0.0, 100.0, 0.0], "edge_v": [100.0, 0.0, 0.0], "radiance": 1.0 }],
        "camera": camera([0.0, -0.3, 0.3], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0], 16, 16, 2e-4),
        "render": { "paraxial_limit_deg": 85.0 }
    }))
}

#[test]
fn surfaces_under_uniform_light_do_not_create_energy() {
    let mirror = furnace(json!({ "type": "mirror" }));
    let out = render(&mirror, 16, None, 1).unwrap();
    let total: f64 = out.image.values.iter().sum();
    assert!((total / 256.0 - 1.0).abs() < 1e-12);

    let grating = furnace(json!({
        "type": "wbsdf",
        "microstructure": { "kind": "sinusoidal_grating", "depth": { "phase": 2.0 }, "pitch": 2e-6, "mode": "reflective" },
        "grid": { "n": 512, "dx": 3.125e-8 },
        "boundary": "periodic"
    }));
    let out = render(&grating, 1024, None, 1).unwrap();
    let total: f64 = out.raw.mean.iter().sum();
    let sigma = out.raw.variance.iter().sum::<f64>().sqrt();
    let emitted = 256.0;
    assert!(total <= emitted + 3.0 * sigma, "film {total} > {emitted} + 3 sigma ({sigma})");
    assert!(total > 0.8 * emitted, "film {total}");
}

#[test]
fn invalid_scenes_are_rejected() {
    let base = load("grating_goniometer.json");

    let mut pinhole = base.clone();
    pinhole["camera"]["aperture_radius"] = json!(0.0);
    assert!(matches!(build_err(&pinhole), Error::Scene(_)));

    let mut flat_patch = base.clone();
    flat_patch["patches"][0]["edge_v"] = json!([0.0, 0.0, 0.0]);
    assert!(matches!(build_err(&flat_patch), Error::Scene(_)));

    let mut missing = base.clone();
    missing["materials"]["grating"] = json!({ "type": "wbsdf", "table": "no-such-table.wbsdf" });
    let e = build_err(&missing);
    assert!(matches!(&e, Error::Scene(m) if m.contains("no-such-table")), "{e}");

    let mut bright = base.clone();
    bright["materials"]["wall"] = json!({ "type": "diffuse", "albedo": 1.5 });
    assert!(matches!(build_err(&bright), Error::Scene(_)));

    let mut typo = base;
    typo["camera"]["focal_lenght"] = json!(0.05);
    let e = build_err(&typo);
    assert!(matches!(&e, Error::Argument(m) if m.starts_with("/camera")), "{e}");
}

#[test]
fn steep_views_are_counted_as_paraxial_rejections() {
    let mut v = load("grating_goniometer.json");
    // about 70 degrees from the normal
    v["camera"]["position"] = json!([0.4698, 0.0, 0.1710]);
    v["camera"]["width"] = json!(8);
    v["camera"]["height"] = json!(8);
    let out = render(&build(&v), 4, None, 0).unwrap();
    assert_eq!(out.stats.counters.paraxial_rejections, 8 * 8 * 4);
    assert!(out.image.values.iter().all(|&x| x == 0.0));

    v["render"]["paraxial_limit_deg"] = json!(85.0);
    let out = render(&build(&v), 4, None, 0).unwrap();
    assert_eq!(out.stats.counters.paraxial_rejections, 0);
}

#[test]
fn finalize_clamps_and_records_minimum() {
    let s = build(&load("double_slit.json"));
    let mut raw = render(&s, 2, None, 0).unwrap().raw;
    raw.mean[0] = -0.25;
    let f = finalize(&raw);
    assert_eq!(f.values[0], 0.0);
    assert_eq!(f.min_before_clamp, -0.25);
}
