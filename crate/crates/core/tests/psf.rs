use wbsdf_kit::psf::{
    apply_psf, compute_psf, depth_planes, export_stack, ChannelImage, KernelSpec, LensSpec, PsfKernel, PsfStack,
};
use wbsdf_kit::Error;

// first zero of J1, divided by pi
const AIRY_ZERO: f64 = 3.831_705_970_207_512 / std::f64::consts::PI;

/// Radius of the first minimum along the central row, refined by a parabola.
fn first_zero(k: &PsfKernel) -> f64 {
    let c = k.size / 2;
    let row: Vec<f64> = (0..k.size).map(|x| k.get(x, c)).collect();
    let mut i = c + 1;
    while i + 1 < k.size && row[i + 1] < row[i] {
        i += 1;
    }
    let (a, b, d) = (row[i - 1], row[i], row[i + 1]);
    let off = 0.5 * (a - d) / (a - 2.0 * b + d);
    (i as f64 - c as f64 + off) * k.pitch
}

fn airy_kernel(n: f64, lambda: f64) -> PsfKernel {
    let lens = LensSpec::new(0.05, n, None).unwrap();
    let r0 = AIRY_ZERO * lambda * n;
    let pitch = r0 / 20.0;
    compute_psf(&lens, None, 0.0, lambda, KernelSpec { size: 81, pitch }).unwrap()
}

#[test]
fn in_focus_airy_radius() {
    for n in [5.6, 11.0] {
        let k = airy_kernel(n, 550e-9);
        let r = first_zero(&k);
        let expect = AIRY_ZERO * 550e-9 * n;
        assert!(((r - expect) / expect).abs() < 0.02, "F/{n}: {r} vs {expect}");
        assert!((k.sum() - 1.0).abs() < 1e-9);
        assert!(k.values.iter().all(|&v| v >= 0.0));
    }
    // the radius quoted for F/5.6 at 550 nm
    assert!((1.22f64 * 550e-9 * 5.6 - 3.76e-6).abs() < 0.01e-6);
}

#[test]
fn f_number_ratio() {
    let r1 = first_zero(&airy_kernel(5.6, 550e-9));
    let r2 = first_zero(&airy_kernel(11.0, 550e-9));
    let ratio = r2 / r1;
    assert!((ratio / (11.0 / 5.6) - 1.0).abs() < 0.02, "ratio {ratio}");
}

#[test]
fn radius_scales_with_wavelength() {
    let lens = LensSpec::new(0.05, 8.0, None).unwrap();
    let pitch = AIRY_ZERO * 450e-9 * 8.0 / 20.0;
    let r: Vec<f64> = [450e-9, 550e-9, 650e-9]
        .iter()
        .map(|&l| first_zero(&compute_psf(&lens, None, 0.0, l, KernelSpec { size: 101, pitch }).unwrap()))
        .collect();
    for (ri, l) in r.iter().zip([450e-9, 550e-9, 650e-9]) {
        assert!((ri / r[0] / (l / 450e-9) - 1.0).abs() < 0.02);
    }
}

/// Relative RMS between a defocused kernel and the area-sampled geometric disk.
fn disk_rms(depth: f64, pitch: f64) -> f64 {
    let lens = LensSpec::new(0.05, 5.6, Some(2.0)).unwrap();
    let c = lens.blur_diameter(Some(depth)).unwrap();
    let size = 2 * ((0.75 * c / pitch).ceil() as usize) + 1;
    let k = compute_psf(&lens, Some(depth), 0.0, 550e-9, KernelSpec { size, pitch }).unwrap();
    let half = (size / 2) as f64;
    let mut disk = vec![0.0; size * size];
    let ss = 16;
    for y in 0..size {
        for x in 0..size {
            let mut cov = 0;
            for a in 0..ss {
                for b in 0..ss {
                    let px = (x as f64 - half + (a as f64 + 0.5) / ss as f64 - 0.5) * pitch;
                    let py = (y as f64 - half + (b as f64 + 0.5) / ss as f64 - 0.5) * pitch;
                    if px * px + py * py <= c * c / 4.0 {
                        cov += 1;
                    }
                }
            }
            disk[y * size + x] = cov as f64;
        }
    }
    let s: f64 = disk.iter().sum();
    disk.iter_mut().for_each(|v| *v /= s);
    let num: f64 = k.values.iter().zip(&disk).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = disk.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

#[test]
fn strong_defocus_tends_to_geometric_disk() {
    // pixels stay coarser than the Fresnel edge width so the limit is visible
    let mild = disk_rms(0.3, 100e-6);
    let strong = disk_rms(0.08, 200e-6);
    assert!(strong < mild, "{strong} !< {mild}");
    assert!(strong < 0.05, "relative RMS {strong}");
}

#[test]
fn undersampled_kernel_is_rejected() {
    let lens = LensSpec::new(0.05, 5.6, None).unwrap();
    let e = compute_psf(&lens, None, 0.0, 550e-9, KernelSpec { size: 9, pitch: 2e-6 }).unwrap_err();
    assert!(matches!(e, Error::Precision(_)));
}

#[test]
fn off_axis_kernel_differs() {
    let lens = LensSpec::new(0.05, 5.6, None).unwrap();
    let ks = KernelSpec { size: 41, pitch: 0.4e-6 };
    let a = compute_psf(&lens, None, 0.0, 550e-9, ks).unwrap();
    let b = compute_psf(&lens, None, 0.5, 550e-9, ks).unwrap();
    let diff: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
    assert!(diff > 1e-3, "{diff}");
    // foreshortened pupil widens the kernel radially
    assert!(first_zero(&b) > first_zero(&a));
}

fn random_image(w: usize, h: usize, seed: u64) -> ChannelImage {
    let mut s = seed;
    let values = (0..w * h)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    ChannelImage { width: w, height: h, channels: 1, values }
}

#[test]
fn identity_stack_is_exact() {
    let lens = LensSpec::new(0.05, 5.6, None).unwrap();
    let img = random_image(17, 13, 3);
    let stack = PsfStack::single(lens, PsfKernel::identity(1e-6), 1.0, 1);
    let out = apply_psf(&img, &stack, &vec![1.0; 17 * 13]).unwrap();
    assert_eq!(out.image.values, img.values);
    assert_eq!(out.clamped_depths, 0);
}

#[test]
fn single_kernel_matches_dense_convolution_inside() {
    let lens = LensSpec::new(0.05, 5.6, None).unwrap();
    let k = compute_psf(&lens, None, 0.0, 550e-9, KernelSpec { size: 7, pitch: 0.6e-6 }).unwrap();
    let (w, h) = (24, 20);
    let mut img = random_image(w, h, 9);
    // keep content away from the border so no renormalization applies
    for y in 0..h {
        for x in 0..w {
            if x < 3 || y < 3 || x >= w - 3 || y >= h - 3 {
                img.values[y * w + x] = 0.0;
            }
        }
    }
    let stack = PsfStack::single(lens, k.clone(), 1.0, 1);
    let out = apply_psf(&img, &stack, &vec![1.0; w * h]).unwrap();
    let r = 3isize;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for ky in -r..=r {
                for kx in -r..=r {
                    let (sx, sy) = (x - kx, y - ky);
                    if sx >= 0 && sy >= 0 && sx < w as isize && sy < h as isize {
                        acc +=
                            img.values[(sy as usize) * w + sx as usize] * k.get((kx + r) as usize, (ky + r) as usize);
                    }
                }
            }
            assert!((acc - out.image.values[y as usize * w + x as usize]).abs() < 1e-9);
        }
    }
    let si: f64 = img.values.iter().sum();
    let so: f64 = out.image.values.iter().sum();
    assert!((si - so).abs() / si < 0.005);
}

#[test]
fn point_source_reproduces_kernel() {
    let lens = LensSpec::new(0.05, 5.6, None).unwrap();
    let k = compute_psf(&lens, None, 0.0, 550e-9, KernelSpec { size: 9, pitch: 0.6e-6 }).unwrap();
    let (w, h) = (21, 21);
    let mut img = ChannelImage { width: w, height: h, channels: 1, values: vec![0.0; w * h] };
    img.values[10 * w + 10] = 1.0;
    let stack = PsfStack::single(lens, k.clone(), 1.0, 1);
    let out = apply_psf(&img, &stack, &vec![1.0; w * h]).unwrap();
    for y in 0..9 {
        for x in 0..9 {
            assert!((out.image.values[(y + 6) * w + x + 6] - k.get(x, y)).abs() < 1e-6);
        }
    }
}

#[test]
fn edge_renormalization_conserves_energy() {
    let lens = LensSpec::new(0.05, 5.6, None).unwrap();
    let k = compute_psf(&lens, None, 0.0, 550e-9, KernelSpec { size: 9, pitch: 0.6e-6 }).unwrap();
    let img = random_image(15, 15, 4);
    let stack = PsfStack::single(lens, k, 1.0, 1);
    let out = apply_psf(&img, &stack, &vec![1.0; 225]).unwrap();
    let si: f64 = img.values.iter().sum();
    let so: f64 = out.image.values.iter().sum();
    assert!((si - so).abs() / si < 1e-12);
}

#[test]
fn out_of_range_depths_are_clamped_and_counted() {
    let lens = LensSpec::new(0.05, 5.6, Some(2.0)).unwrap();
    let depths = depth_planes(1.0, 4.0, 3).unwrap();
    assert!((depths[1] - 2.0).abs() < 1e-12);
    let stack = PsfStack::build(lens, &[0.0], &depths, &[550e-9], KernelSpec { size: 15, pitch: 0.5e-6 }).unwrap();
    let img = random_image(8, 8, 1);
    let mut dm = vec![2.0; 64];
    dm[0] = 100.0;
    dm[1] = 0.1;
    let out = apply_psf(&img, &stack, &dm).unwrap();
    assert_eq!(out.clamped_depths, 2);
}

#[test]
fn bundle_export_indexes_every_kernel() {
    let lens = LensSpec::new(0.05, 5.6, Some(2.0)).unwrap();
    let depths = depth_planes(1.0, 4.0, 2).unwrap();
    let stack =
        PsfStack::build(lens, &[0.0, 0.1], &depths, &[450e-9, 650e-9], KernelSpec { size: 15, pitch: 0.5e-6 }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let index = export_stack(&stack, dir.path()).unwrap();
    assert_eq!(index.kernels.len(), 8);
    let bytes = std::fs::read(dir.path().join("psf_stack.pfm")).unwrap();
    let e = &index.kernels[5];
    let (w, h, px) = wbsdf_kit::imageio::read_pfm(&bytes[e.offset as usize..(e.offset + e.length) as usize]).unwrap();
    assert_eq!((w, h), (15, 15));
    let sum: f64 = px.iter().map(|p| p[0] as f64).sum();
    assert!((sum - 1.0).abs() < 1e-5);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("index.json")).unwrap()).unwrap();
    assert_eq!(json["kernels"].as_array().unwrap().len(), 8);
}
