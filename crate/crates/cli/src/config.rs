//! Flat `key = value` configuration with dotted section keys.
//!
//! Lines starting with `#` are comments. Every key must be one of [`KEYS`];
//! unknown or repeated keys are errors so typos do not silently fall back to
//! defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use gausslab::estimates::EstimateParams;
use gausslab::jacobi::Tolerances;
use gausslab::measure::{RadialQuadratic, WeightSpec};
use gausslab::{Shape, SurfaceSpec};
use serde::{Deserialize, Serialize};

pub const KEYS: &[&str] = &[
    "surface.kind",
    "surface.dim",
    "surface.level",
    "surface.radius",
    "surface.center",
    "surface.offset",
    "surface.truncation",
    "surface.half_length",
    "surface.major",
    "surface.minor",
    "surface.amplitude",
    "surface.width",
    "weight.kind",
    "weight.scale",
    "weight.shift",
    "eig.count",
    "tol.zero",
    "tol.cluster",
    "tol.split",
    "tol.simons",
    "estimate.radius",
    "estimate.gamma",
    "estimate.m",
    "estimate.s",
    "estimate.t",
    "estimate.lambda",
    "estimate.delta",
    "estimate.r0",
    "phiv.radius",
    "analytic.tolerance",
    "output.path",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
            let key = key.trim();
            check_key(key).with_context(|| format!("line {}", n + 1))?;
            if cfg.entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                bail!("line {}: key {key} given twice", n + 1);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        check_key(key)?;
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `KEY=VAL` override. Keys without a section refer to `tol.*`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec.split_once('=').ok_or_else(|| anyhow!("override `{spec}` must look like KEY=VAL"))?;
        let key = key.trim();
        if key.contains('.') {
            self.set(key, value)
        } else {
            self.set(&format!("tol.{key}"), value)
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.entries
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("{key}: cannot parse `{v}`: {e}")))
            .transpose()
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn check_key(key: &str) -> Result<()> {
    if !KEYS.contains(&key) {
        bail!("unknown config key `{key}`");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightChoice {
    Gaussian,
    /// `f = shift − scale·|x|²` through the general-weight code path.
    RadialQuadratic { scale: f64, shift: f64 },
}

impl WeightChoice {
    pub fn spec(&self) -> WeightSpec {
        match *self {
            Self::Gaussian => WeightSpec::Gaussian,
            Self::RadialQuadratic { scale, shift } => WeightSpec::custom(RadialQuadratic { scale, shift }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub surface: Option<SurfaceSpec>,
    pub weight: WeightChoice,
    pub eig_count: usize,
    pub tolerances: Tolerances,
    pub estimates: EstimateParams,
    pub phi_v_radius: f64,
    /// Relative tolerance of the analytic comparisons.
    pub analytic_tolerance: f64,
    pub output: Option<String>,
}

impl AnalysisConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let tol_default = Tolerances::default();
        let tolerances = Tolerances {
            zero: raw.get_or("tol.zero", tol_default.zero)?,
            cluster: raw.get_or("tol.cluster", tol_default.cluster)?,
            split: raw.get_or("tol.split", tol_default.split)?,
            simons: raw.get_or("tol.simons", tol_default.simons)?,
        };
        tolerances.validate()?;
        let est_default = EstimateParams::default();
        let estimates = EstimateParams {
            radius: raw.get_or("estimate.radius", est_default.radius)?,
            gamma: raw.get_or("estimate.gamma", est_default.gamma)?,
            m: raw.get_or("estimate.m", est_default.m)?,
            s: raw.get_or("estimate.s", est_default.s)?,
            t: raw.get_or("estimate.t", est_default.t)?,
            lambda: raw.get("estimate.lambda")?,
            delta: raw.get_or("estimate.delta", est_default.delta)?,
            r0: raw.get_or("estimate.r0", est_default.r0)?,
        };
        let weight = match raw.get_str("weight.kind").unwrap_or("gaussian") {
            "gaussian" => WeightChoice::Gaussian,
            "radial_quadratic" => WeightChoice::RadialQuadratic {
                scale: raw.get_or("weight.scale", 0.25)?,
                shift: raw.get_or("weight.shift", 0.0)?,
            },
            other => bail!("weight.kind: unknown weight `{other}` (expected gaussian or radial_quadratic)"),
        };
        let surface = surface_from_raw(raw)?;
        // Plane disks resolve the third Hermite level only to a few percent at
        // moderate refinement, so their default stops after the second.
        let default_count = match surface.as_ref().map(|s| &s.shape) {
            Some(Shape::PlaneDisk { .. }) => 5,
            _ => 9,
        };
        let eig_count = raw.get_or("eig.count", default_count)?;
        if eig_count == 0 {
            bail!("eig.count must be at least 1");
        }
        let analytic_tolerance: f64 = raw.get_or("analytic.tolerance", 0.02)?;
        let phi_v_radius: f64 = raw.get_or("phiv.radius", 4.0)?;
        for (key, v) in [("analytic.tolerance", analytic_tolerance), ("phiv.radius", phi_v_radius)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{key} must be positive, got {v}");
            }
        }
        Ok(Self {
            surface,
            weight,
            eig_count,
            tolerances,
            estimates,
            phi_v_radius,
            analytic_tolerance,
            output: raw.get_str("output.path").map(str::to_string),
        })
    }

    pub fn surface(&self) -> Result<&SurfaceSpec> {
        self.surface.as_ref().ok_or_else(|| anyhow!("no surface configured (set surface.kind or pass --mesh)"))
    }
}

fn parse_center(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| anyhow!("surface.center: {e}"))?;
    <[f64; 3]>::try_from(parts).map_err(|_| anyhow!("surface.center needs three comma-separated numbers"))
}

fn surface_from_raw(raw: &RawConfig) -> Result<Option<SurfaceSpec>> {
    let Some(kind) = raw.get_str("surface.kind") else {
        return Ok(None);
    };
    let shape = match kind {
        "sphere" => Shape::Sphere {
            radius: raw.get_or("surface.radius", 1.0)?,
            center: raw.get_str("surface.center").map(parse_center).transpose()?.unwrap_or([0.0; 3]),
        },
        "plane_disk" => Shape::PlaneDisk {
            offset: raw.get_or("surface.offset", 0.0)?,
            truncation: raw.get_or("surface.truncation", 8.0)?,
        },
        "cylinder" => Shape::Cylinder {
            radius: raw.get_or("surface.radius", 1.0)?,
            half_length: raw.get_or("surface.half_length", 6.0)?,
        },
        "torus" => Shape::Torus { major: raw.get_or("surface.major", 2.0)?, minor: raw.get_or("surface.minor", 0.5)? },
        "graph" => Shape::Graph {
            offset: raw.get_or("surface.offset", 0.0)?,
            amplitude: raw.get_or("surface.amplitude", 0.5)?,
            width: raw.get_or("surface.width", 1.0)?,
            truncation: raw.get_or("surface.truncation", 6.0)?,
        },
        other => bail!("surface.kind: unknown kind `{other}`"),
    };
    // The 8-wide plane disk needs one more level than the compact shapes to
    // resolve its second eigenvalue level within the analytic tolerance.
    let default_level = if matches!(shape, Shape::PlaneDisk { .. }) { 5 } else { 4 };
    let spec = SurfaceSpec { dim: raw.get_or("surface.dim", 2usize)?, shape, level: raw.get_or("surface.level", default_level)? };
    spec.validate().context("invalid surface")?;
    Ok(Some(spec))
}
