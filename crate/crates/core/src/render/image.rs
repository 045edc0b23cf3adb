use crate::error::{Error, Result};

/// Signed spectral estimate: per pixel and bin, the Monte-Carlo mean and the
/// variance of that mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub wavelengths: Vec<f64>,
    /// `[(y * width + x) * bins + b]`.
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub spp: usize,
}

impl Image {
    pub fn zeros(width: usize, height: usize, wavelengths: Vec<f64>, spp: usize) -> Self {
        let n = width * height * wavelengths.len();
        Self { width, height, wavelengths, mean: vec![0.0; n], variance: vec![0.0; n], spp }
    }

    pub fn bins(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn get(&self, x: usize, y: usize, bin: usize) -> f64 {
        self.mean[(y * self.width + x) * self.bins() + bin]
    }

    /// Pixel values summed over bins.
    pub fn luminance(&self) -> Vec<f64> {
        self.mean.chunks(self.bins()).map(|c| c.iter().sum()).collect()
    }

    pub fn min(&self) -> f64 {
        self.mean.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn same_layout(&self, o: &Image) -> bool {
        self.width == o.width && self.height == o.height && self.wavelengths == o.wavelengths
    }

    /// Adds an independent estimate (another coherence group).
    pub fn accumulate(&mut self, o: &Image) -> Result<()> {
        if !self.same_layout(o) {
            return Err(Error::Argument("image layouts differ".into()));
        }
        self.mean.iter_mut().zip(&o.mean).for_each(|(a, b)| *a += b);
        self.variance.iter_mut().zip(&o.variance).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// Mean per-pixel variance over pixels with a nonzero estimate.
    pub fn mean_variance(&self) -> f64 {
        let (s, n) = self
            .mean
            .iter()
            .zip(&self.variance)
            .filter(|(m, _)| **m != 0.0)
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        if n == 0 {
            0.0
        } else {
            s / n as f64
        }
    }
}

/// Relative tolerance for negative values surviving aperture integration.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-6;

/// Nonnegative image after spectral accumulation.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalImage {
    pub width: usize,
    pub height: usize,
    pub wavelengths: Vec<f64>,
    pub values: Vec<f64>,
    /// Smallest value before the clamp at zero.
    pub min_before_clamp: f64,
    pub max: f64,
}

impl FinalImage {
    pub fn bins(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn get(&self, x: usize, y: usize, bin: usize) -> f64 {
        self.values[(y * self.width + x) * self.bins() + bin]
    }

    /// True when no value was below `-NEGATIVITY_TOLERANCE * max` before clamping.
    pub fn nonnegative(&self) -> bool {
        self.min_before_clamp >= -NEGATIVITY_TOLERANCE * self.max.max(0.0)
    }

    /// Box conversion to RGB: bins are split into three equal wavelength
    /// ranges (blue, green, red); fewer than three bins give gray.
    pub fn to_rgb(&self) -> Vec<[f64; 3]> {
        let nb = self.bins();
        self.values
            .chunks(nb)
            .map(|px| {
                if nb < 3 {
                    let v = px.iter().sum::<f64>() / nb as f64;
                    return [v; 3];
                }
                let mut order: Vec<usize> = (0..nb).collect();
                order.sort_by(|a, b| self.wavelengths[*a].total_cmp(&self.wavelengths[*b]));
                let mut rgb = [0.0; 3];
                let mut cnt = [0usize; 3];
                for (rank, &b) in order.iter().enumerate() {
                    // rank 0 is the shortest wavelength -> blue
                    let ch = 2 - (rank * 3 / nb);
                    rgb[ch] += px[b];
                    cnt[ch] += 1;
                }
                for c in 0..3 {
                    if cnt[c] > 0 {
                        rgb[c] /= cnt[c] as f64;
                    }
                }
                rgb
            })
            .collect()
    }
}

/// Records the minimum, then clamps negative values to zero.
pub fn finalize(img: &Image) -> FinalImage {
    let min = img.min();
    let max = img.max();
    FinalImage {
        width: img.width,
        height: img.height,
        wavelengths: img.wavelengths.clone(),
        values: img.mean.iter().map(|v| v.max(0.0)).collect(),
        min_before_clamp: if min.is_finite() { min } else { 0.0 },
        max: if max.is_finite() { max } else { 0.0 },
    }
}

/// Incoherent superposition: per-bin addition of finalized intensities.
pub fn incoherent_sum(images: &[FinalImage]) -> Result<FinalImage> {
    let Some(first) = images.first() else {
        return Err(Error::Argument("incoherent_sum needs at least one image".into()));
    };
    let mut out = first.clone();
    for im in &images[1..] {
        if im.width != out.width || im.height != out.height || im.wavelengths != out.wavelengths {
            return Err(Error::Argument("image layouts differ".into()));
        }
        out.values.iter_mut().zip(&im.values).for_each(|(a, b)| *a += b);
        out.min_before_clamp = out.min_before_clamp.min(im.min_before_clamp);
    }
    out.max = out.values.iter().copied().fold(0.0, f64::max);
    Ok(out)
}
