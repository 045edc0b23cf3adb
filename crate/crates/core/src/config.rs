//! Versioned JSON configuration shared by the CLI subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Boundary;
use crate::microstructure::{GridSpec, Microstructure};

pub const CONFIG_VERSION: u32 = 1;

/// JSON pointer (RFC 6901) for a deserialization path.
pub(crate) fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Deserializes `text`, reporting failures as `<json pointer>: <message>`.
pub fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| Error::Argument(format!("{}: {}", json_pointer(e.path()), e.inner())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub microstructure: Option<Microstructure>,
    #[serde(default = "default_wavelengths")]
    pub wavelengths: Vec<f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    /// Incidence angle used when realizing the microstructure, radians.
    #[serde(default)]
    pub theta_i: f64,
    /// Scene file, relative to the config file.
    #[serde(default)]
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub render: RenderOverrides,
    #[serde(default)]
    pub validation: ValidationConfig,
}

fn default_wavelengths() -> Vec<f64> {
    vec![450e-9, 550e-9, 650e-9]
}

fn default_boundary() -> Boundary {
    Boundary::Zero
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderOverrides {
    pub spp: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub max_depth: Option<usize>,
}

/// Knobs of the `validate` suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    /// Relative tolerance of the exact WDF identities.
    pub identity_tol: f64,
    /// Closed-form grating agreement.
    pub closed_form_tol: f64,
    /// Relative L1 for far-field equivalence.
    pub far_field_l1: f64,
    /// Relative tolerance of Airy radii.
    pub airy_tol: f64,
    /// Random grids per corpus size.
    pub corpus: usize,
    /// Samples per pixel of the render checks.
    pub spp: usize,
    /// Surfaces in the ensemble check.
    pub ensemble_surfaces: usize,
    pub seed: u64,
    /// Optional microstructure/grid pair checked for sufficient sampling.
    pub sampling_fixture: Option<SamplingFixture>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            identity_tol: 1e-9,
            closed_form_tol: 1e-6,
            far_field_l1: 0.01,
            airy_tol: 0.02,
            corpus: 34,
            spp: 1024,
            ensemble_surfaces: 2000,
            seed: 1,
            sampling_fixture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingFixture {
    pub microstructure: Microstructure,
    pub grid: GridSpec,
    pub wavelength: f64,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Config = from_json_str(text)?;
        if c.version != CONFIG_VERSION {
            return Err(Error::Argument(format!(
                "/version: unsupported version {} (expected {CONFIG_VERSION})",
                c.version
            )));
        }
        if c.wavelengths.is_empty() {
            return Err(Error::Argument("/wavelengths: at least one wavelength is required".into()));
        }
        for (i, l) in c.wavelengths.iter().enumerate() {
            crate::microstructure::Wavelength::new(*l)
                .map_err(|e| Error::Argument(format!("/wavelengths/{i}: {e}")))?;
        }
        if let Some(m) = &c.microstructure {
            m.validate().map_err(|e| Error::Argument(format!("/microstructure: {e}")))?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
