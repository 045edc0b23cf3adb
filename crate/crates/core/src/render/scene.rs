use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{wdf_1d_with, Boundary, WignerTable};
use crate::math::{orthonormal_basis, Vec3};
use crate::microstructure::{realize, GridSpec, Microstructure, Mode, Wavelength};
use crate::wbsdf::{read_tables, Wbsdf};

pub const SCENE_VERSION: u32 = 1;
pub const MAX_SPECTRAL_BINS: usize = 16;

fn default_wavelengths() -> Vec<f64> {
    vec![450e-9, 550e-9, 650e-9]
}

/// Rectangle `corner + a edge_u + b edge_v`, `a, b in [0, 1]`; the front
/// side faces `edge_u x edge_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectDesc {
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialDesc {
    Diffuse {
        albedo: f64,
    },
    Mirror,
    Wbsdf {
        /// Surface to tabulate, one table per spectral bin.
        #[serde(default)]
        microstructure: Option<Microstructure>,
        #[serde(default)]
        grid: Option<GridSpec>,
        #[serde(default = "default_boundary")]
        boundary: Boundary,
        /// Precomputed binary table file (relative to the scene file).
        #[serde(default)]
        table: Option<PathBuf>,
        #[serde(default)]
        mode: Option<Mode>,
    },
}

fn default_boundary() -> Boundary {
    Boundary::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchDesc {
    #[serde(flatten)]
    pub rect: RectDesc,
    pub material: String,
    /// Grating axis in the patch plane; defaults to `edge_u`.
    #[serde(default)]
    pub axis: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LightDesc {
    /// Isotropic point source of radiant intensity `intensity` (per bin).
    Point {
        position: Vec3,
        intensity: f64,
        #[serde(default)]
        coherence_group: u32,
    },
    /// One-sided rectangular emitter of uniform radiance.
    Area {
        #[serde(flatten)]
        rect: RectDesc,
        radiance: f64,
        #[serde(default)]
        coherence_group: u32,
    },
    /// Source at infinity: a cone of half-angle `angular_radius` around the
    /// propagation `direction`.
    Distant {
        direction: Vec3,
        angular_radius: f64,
        radiance: f64,
        #[serde(default)]
        coherence_group: u32,
    },
}

impl LightDesc {
    pub fn coherence_group(&self) -> u32 {
        match self {
            LightDesc::Point { coherence_group, .. }
            | LightDesc::Area { coherence_group, .. }
            | LightDesc::Distant { coherence_group, .. } => *coherence_group,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDesc {
    pub position: Vec3,
    pub look_at: Vec3,
    #[serde(default = "default_up")]
    pub up: Vec3,
    pub focal_length: f64,
    pub aperture_radius: f64,
    /// Distance of the plane in focus; infinity when absent.
    #[serde(default)]
    pub focus_distance: Option<f64>,
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: f64,
}

fn default_up() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSettings {
    #[serde(default = "default_spp")]
    pub spp: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    /// Largest angle from the normal a WBSDF vertex accepts, degrees.
    #[serde(default = "default_paraxial")]
    pub paraxial_limit_deg: f64,
    /// Sample WBSDF vertices uniformly over propagating bins instead of by `|W|`.
    #[serde(default)]
    pub uniform_wbsdf_sampling: bool,
}

fn default_spp() -> usize {
    64
}
fn default_seed() -> u64 {
    1
}
fn default_depth() -> usize {
    8
}
fn default_paraxial() -> f64 {
    60.0
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            spp: default_spp(),
            seed: default_seed(),
            max_depth: default_depth(),
            paraxial_limit_deg: default_paraxial(),
            uniform_wbsdf_sampling: false,
        }
    }
}

/// JSON scene document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDesc {
    pub version: u32,
    #[serde(default = "default_wavelengths")]
    pub wavelengths: Vec<f64>,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialDesc>,
    #[serde(default)]
    pub patches: Vec<PatchDesc>,
    #[serde(default)]
    pub lights: Vec<LightDesc>,
    pub camera: CameraDesc,
    #[serde(default)]
    pub render: RenderSettings,
}

/// Validated rectangle with an orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
    pub normal: Vec3,
    pub len_u: f64,
    pub len_v: f64,
    pub area: f64,
}

impl Rect {
    pub fn new(d: &RectDesc) -> Result<Self> {
        let (lu, lv) = (d.edge_u.length(), d.edge_v.length());
        if !(d.corner.is_finite() && lu.is_finite() && lv.is_finite()) || lu == 0.0 || lv == 0.0 {
            return Err(Error::Scene("degenerate rectangle: zero-length edge".into()));
        }
        if d.edge_u.dot(d.edge_v).abs() > 1e-9 * lu * lv {
            return Err(Error::Scene("rectangle edges must be perpendicular".into()));
        }
        Ok(Self {
            corner: d.corner,
            edge_u: d.edge_u,
            edge_v: d.edge_v,
            normal: d.edge_u.cross(d.edge_v).normalized(),
            len_u: lu,
            len_v: lv,
            area: lu * lv,
        })
    }

    /// Ray parameter of the hit, if any, beyond `t_min`.
    pub fn intersect(&self, o: Vec3, d: Vec3, t_min: f64) -> Option<f64> {
        let denom = d.dot(self.normal);
        if denom.abs() < 1e-14 {
            return None;
        }
        let t = (self.corner - o).dot(self.normal) / denom;
        if !(t > t_min) {
            return None;
        }
        let p = o + d * t - self.corner;
        let a = p.dot(self.edge_u) / (self.len_u * self.len_u);
        let b = p.dot(self.edge_v) / (self.len_v * self.len_v);
        if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
            Some(t)
        } else {
            None
        }
    }

    pub fn point(&self, a: f64, b: f64) -> Vec3 {
        self.corner + self.edge_u * a + self.edge_v * b
    }

    pub fn center(&self) -> Vec3 {
        self.point(0.5, 0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Material {
    Diffuse { albedo: f64 },
    Mirror,
    Wbsdf { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub rect: Rect,
    pub material: Material,
    /// Unit tangent along the grating axis, and the in-plane binormal.
    pub axis: Vec3,
    pub binormal: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Light {
    Point { position: Vec3, intensity: f64, group: u32 },
    Area { rect: Rect, radiance: f64, group: u32 },
    Distant { direction: Vec3, cos_radius: f64, solid_angle: f64, radiance: f64, group: u32, frame: (Vec3, Vec3) },
}

impl Light {
    pub fn group(&self) -> u32 {
        match self {
            Light::Point { group, .. } | Light::Area { group, .. } | Light::Distant { group, .. } => *group,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub focal_length: f64,
    pub aperture_radius: f64,
    pub focus_distance: Option<f64>,
    /// Lens-to-film distance from the thin-lens equation.
    pub film_distance: f64,
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: f64,
}

/// Validated, ready-to-render scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub patches: Vec<Patch>,
    pub lights: Vec<Light>,
    pub camera: Camera,
    pub wavelengths: Vec<Wavelength>,
    pub wbsdfs: Vec<Wbsdf>,
    pub settings: RenderSettings,
    /// Material descriptions kept for the reference renderers.
    pub desc: SceneDesc,
}

fn scene_err(msg: impl Into<String>) -> Error {
    Error::Scene(msg.into())
}

impl Scene {
    /// Parses a JSON scene; relative table paths resolve against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let desc: SceneDesc = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Argument(format!("{}: {}", crate::config::json_pointer(e.path()), e.inner())))?;
        Self::build(desc, base)
    }

    pub fn build(desc: SceneDesc, base: Option<&Path>) -> Result<Self> {
        if desc.version != SCENE_VERSION {
            return Err(Error::Argument(format!(
                "/version: unsupported scene version {} (expected {SCENE_VERSION})",
                desc.version
            )));
        }
        if desc.wavelengths.is_empty() || desc.wavelengths.len() > MAX_SPECTRAL_BINS {
            return Err(scene_err(format!("need 1..={MAX_SPECTRAL_BINS} spectral bins")));
        }
        let wavelengths = desc
            .wavelengths
            .iter()
            .map(|&l| Wavelength::new(l))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| scene_err(e.to_string()))?;
        let s = &desc.render;
        if s.spp == 0 {
            return Err(scene_err("spp must be >= 1"));
        }
        if !(s.paraxial_limit_deg > 0.0 && s.paraxial_limit_deg < 90.0) {
            return Err(scene_err("paraxial limit must be in (0, 90) degrees"));
        }

        let mut wbsdfs = Vec::new();
        let mut materials = BTreeMap::new();
        for (name, m) in &desc.materials {
            let mat = match m {
                MaterialDesc::Diffuse { albedo } => {
                    if !(0.0..=1.0).contains(albedo) {
                        return Err(scene_err(format!("material {name}: albedo {albedo} outside [0, 1]")));
                    }
                    Material::Diffuse { albedo: *albedo }
                }
                MaterialDesc::Mirror => Material::Mirror,
                MaterialDesc::Wbsdf { microstructure, grid, boundary, table, mode } => {
                    let b = build_wbsdf(name, microstructure, grid, *boundary, table, *mode, &wavelengths, base)?;
                    wbsdfs.push(b);
                    Material::Wbsdf { index: wbsdfs.len() - 1 }
                }
            };
            materials.insert(name.clone(), mat);
        }

        let mut patches = Vec::new();
        for (i, p) in desc.patches.iter().enumerate() {
            let rect = Rect::new(&p.rect).map_err(|e| scene_err(format!("patch {i}: {e}")))?;
            let material = materials
                .get(&p.material)
                .cloned()
                .ok_or_else(|| scene_err(format!("patch {i}: unknown material '{}'", p.material)))?;
            let axis = p.axis.unwrap_or(rect.edge_u);
            let axis = (axis - rect.normal * axis.dot(rect.normal)).normalized();
            if !axis.is_finite() {
                return Err(scene_err(format!("patch {i}: grating axis lies along the normal")));
            }
            let binormal = rect.normal.cross(axis);
            patches.push(Patch { rect, material, axis, binormal });
        }

        let mut lights = Vec::new();
        for (i, l) in desc.lights.iter().enumerate() {
            let light = match l {
                LightDesc::Point { position, intensity, coherence_group } => {
                    if !position.is_finite() || !(*intensity >= 0.0) {
                        return Err(scene_err(format!("light {i}: invalid point light")));
                    }
                    Light::Point { position: *position, intensity: *intensity, group: *coherence_group }
                }
                LightDesc::Area { rect, radiance, coherence_group } => {
                    let rect = Rect::new(rect).map_err(|e| scene_err(format!("light {i}: {e}")))?;
                    if !(*radiance >= 0.0) {
                        return Err(scene_err(format!("light {i}: negative radiance")));
                    }
                    Light::Area { rect, radiance: *radiance, group: *coherence_group }
                }
                LightDesc::Distant { direction, angular_radius, radiance, coherence_group } => {
                    let d = direction.normalized();
                    if !d.is_finite() || !(*angular_radius > 0.0 && *angular_radius < 0.5) || !(*radiance >= 0.0) {
                        return Err(scene_err(format!(
                            "light {i}: distant lights need a direction, 0 < angular_radius < 0.5 rad and radiance >= 0"
                        )));
                    }
                    let c = angular_radius.cos();
                    Light::Distant {
                        direction: d,
                        cos_radius: c,
                        solid_angle: 2.0 * std::f64::consts::PI * (1.0 - c),
                        radiance: *radiance,
                        group: *coherence_group,
                        frame: orthonormal_basis(d),
                    }
                }
            };
            lights.push(light);
        }

        let camera = build_camera(&desc.camera)?;
        Ok(Self { patches, lights, camera, wavelengths, wbsdfs, settings: desc.render.clone(), desc })
    }

    /// Coherence groups present, ascending.
    pub fn groups(&self) -> Vec<u32> {
        let mut g: Vec<u32> = self.lights.iter().map(|l| l.group()).collect();
        g.sort_unstable();
        g.dedup();
        g
    }
}

fn build_camera(c: &CameraDesc) -> Result<Camera> {
    if !(c.aperture_radius > 0.0) {
        return Err(scene_err("camera aperture radius must be > 0 (pinhole cameras are not supported)"));
    }
    if !(c.focal_length > 0.0 && c.pixel_pitch > 0.0) || c.width == 0 || c.height == 0 {
        return Err(scene_err("camera needs positive focal length, pixel pitch and film size"));
    }
    let forward = (c.look_at - c.position).normalized();
    let right = forward.cross(c.up).normalized();
    if !forward.is_finite() || !right.is_finite() {
        return Err(scene_err("camera look direction is degenerate or parallel to up"));
    }
    let up = right.cross(forward);
    let film_distance = match c.focus_distance {
        None => c.focal_length,
        Some(s) if s > c.focal_length => 1.0 / (1.0 / c.focal_length - 1.0 / s),
        Some(s) => return Err(scene_err(format!("focus distance {s} must exceed the focal length"))),
    };
    Ok(Camera {
        position: c.position,
        forward,
        right,
        up,
        focal_length: c.focal_length,
        aperture_radius: c.aperture_radius,
        focus_distance: c.focus_distance,
        film_distance,
        width: c.width,
        height: c.height,
        pixel_pitch: c.pixel_pitch,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_wbsdf(
    name: &str,
    microstructure: &Option<Microstructure>,
    grid: &Option<GridSpec>,
    boundary: Boundary,
    table: &Option<PathBuf>,
    mode: Option<Mode>,
    wavelengths: &[Wavelength],
    base: Option<&Path>,
) -> Result<Wbsdf> {
    match (microstructure, table) {
        (Some(m), None) => {
            let grid = grid.ok_or_else(|| scene_err(format!("material {name}: wbsdf needs a grid")))?;
            let grid = match (boundary, grid.x0) {
                (Boundary::Periodic, None) => GridSpec::from_origin(grid.n, grid.dx),
                _ => grid,
            };
            let tables = wavelengths
                .iter()
                .map(|&l| -> Result<(Wavelength, WignerTable)> {
                    let t = realize(m, l, 0.0, &grid)?;
                    Ok((l, wdf_1d_with(&t, boundary)?))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| scene_err(format!("material {name}: {e}")))?;
            Wbsdf::from_tables(tables, mode.unwrap_or(m.mode)).map_err(|e| scene_err(format!("material {name}: {e}")))
        }
        (None, Some(path)) => {
            let full = match base {
                Some(b) if path.is_relative() => b.join(path),
                _ => path.clone(),
            };
            let file = std::fs::File::open(&full)
                .map_err(|e| scene_err(format!("material {name}: missing table {}: {e}", full.display())))?;
            let recs =
                read_tables(std::io::BufReader::new(file)).map_err(|e| scene_err(format!("material {name}: {e}")))?;
            let Some(file_mode) = recs.first().map(|r| r.2) else {
                return Err(scene_err(format!("material {name}: empty table file")));
            };
            let tables = recs.into_iter().map(|(t, l, _)| (l, t)).collect();
            Wbsdf::from_tables(tables, mode.unwrap_or(file_mode))
                .map_err(|e| scene_err(format!("material {name}: {e}")))
        }
        _ => Err(scene_err(format!("material {name}: wbsdf needs exactly one of 'microstructure' or 'table'"))),
    }
}
