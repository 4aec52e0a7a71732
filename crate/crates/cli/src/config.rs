//! Experiment configuration: a TOML document with unit-tagged quantities,
//! resolved to SI on load.

use std::path::{Path, PathBuf};

use compliance_core::{RodProperties, TendonSign};
use nalgebra::Vector3;
use serde::Deserialize;

use crate::units::{parse_quantity, Dimension, UnitError, GRAVITY};

/// Preset with the 3⁶ wrench grid and the tendon segment scenario.
pub const DEFAULT_PRESET: &str = include_str!("../presets/default.toml");
/// Preset with the 3⁷ = 2187 shape protocol.
pub const GRID_2187_PRESET: &str = include_str!("../presets/grid_2187.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("[{section}] {key}: {source}")]
    Unit {
        section: &'static str,
        key: String,
        source: UnitError,
    },
    #[error("[{section}] {key}: {message}")]
    Invalid {
        section: &'static str,
        key: &'static str,
        message: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    jobs: usize,
    rod: RawRod,
    basis: RawBasis,
    grid: RawGrid,
    increments: RawIncrements,
    segment: RawSegment,
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRod {
    length: String,
    diameter: String,
    youngs_modulus: String,
    poisson_ratio: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBasis {
    orders: Vec<i64>,
    steps: i64,
    #[serde(default = "default_coefficients")]
    coefficients: String,
}

fn default_coefficients() -> String {
    "fit".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    force_axes: Vec<String>,
    force_levels: Vec<String>,
    moment_axes: Vec<String>,
    moment_levels: Vec<String>,
    #[serde(default)]
    axial_offsets: Vec<String>,
    #[serde(default)]
    sample: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIncrements {
    force: String,
    moment: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPull {
    mass: String,
    direction: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    length: String,
    pitch_radius: String,
    bending_stiffness: String,
    torsion_ratio: f64,
    tendon_stiffness: String,
    tendon_count: usize,
    order: i64,
    steps: i64,
    oracle_order: i64,
    oracle_steps: i64,
    quadrature_nodes: usize,
    pretension: String,
    pulley_radius: String,
    sign: String,
    configurations: Vec<[String; 2]>,
    pulls: Vec<RawPull>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: String,
    format: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientSource {
    /// Least-squares fit of the oracle's curvature samples.
    Fit,
    /// Modal equilibrium under the base wrench, started from the fit.
    Equilibrium,
}

impl CoefficientSource {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientSource::Fit => "fit",
            CoefficientSource::Equilibrium => "equilibrium",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            "both" => Some(OutputFormat::Both),
            _ => None,
        }
    }

    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RodSpec {
    pub length: f64,
    pub diameter: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
}

impl RodSpec {
    pub fn properties(&self) -> RodProperties {
        RodProperties::circular(self.length, self.diameter, self.youngs_modulus, self.poisson_ratio)
            .expect("rod spec validated on load")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    pub orders: Vec<usize>,
    pub steps: usize,
    pub coefficients: CoefficientSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Axis indices 0..3 carrying the force levels.
    pub force_axes: Vec<usize>,
    pub force_levels: Vec<f64>,
    pub moment_axes: Vec<usize>,
    pub moment_levels: Vec<f64>,
    /// Extra grid dimension: offsets added to the axial force f_z.
    pub axial_offsets: Vec<f64>,
    /// Seeded random subset of this many shapes.
    pub sample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSpec {
    pub force: f64,
    pub moment: f64,
}

impl IncrementSpec {
    /// Step size per wrench axis, moment-first.
    pub fn per_axis(&self) -> [f64; 6] {
        [self.moment, self.moment, self.moment, self.force, self.force, self.force]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pull {
    pub label: String,
    /// Hanging weight of the mass, N.
    pub force: f64,
    pub direction: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpec {
    pub length: f64,
    pub pitch_radius: f64,
    pub bending_stiffness: f64,
    pub torsion_ratio: f64,
    pub tendon_stiffness: f64,
    pub tendon_count: usize,
    pub order: usize,
    pub steps: usize,
    pub oracle_order: usize,
    pub oracle_steps: usize,
    pub quadrature_nodes: usize,
    pub pretension: f64,
    pub pulley_radius: f64,
    pub sign: TendonSign,
    /// Actuator angles `(θ₁, θ₂)` in radians.
    pub configurations: Vec<(f64, f64)>,
    pub pulls: Vec<Pull>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub rod: RodSpec,
    pub basis: BasisSpec,
    pub grid: GridSpec,
    pub increments: IncrementSpec,
    pub segment: SegmentSpec,
    pub output: OutputSpec,
    /// The document as given, echoed verbatim into reports.
    pub source: String,
}

fn quantity(section: &'static str, key: &str, text: &str, dim: Dimension) -> Result<f64, ConfigError> {
    parse_quantity(text, dim).map_err(|source| ConfigError::Unit {
        section,
        key: key.to_string(),
        source,
    })
}

fn quantities(
    section: &'static str,
    key: &str,
    texts: &[String],
    dim: Dimension,
) -> Result<Vec<f64>, ConfigError> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| quantity(section, &format!("{key}[{i}]"), t, dim))
        .collect()
}

fn invalid(section: &'static str, key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        section,
        key,
        message: message.into(),
    }
}

fn positive(section: &'static str, key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(section, key, format!("must be positive, got {v}")))
    }
}

fn order(section: &'static str, key: &'static str, v: i64) -> Result<usize, ConfigError> {
    usize::try_from(v).map_err(|_| invalid(section, key, format!("must be non-negative, got {v}")))
}

fn count(section: &'static str, key: &'static str, v: i64) -> Result<usize, ConfigError> {
    match usize::try_from(v) {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(invalid(section, key, format!("must be at least 1, got {v}"))),
    }
}

fn axes(section: &'static str, key: &'static str, names: &[String]) -> Result<Vec<usize>, ConfigError> {
    let mut out = Vec::new();
    for name in names {
        let axis = match name.as_str() {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            other => return Err(invalid(section, key, format!("unknown axis `{other}`"))),
        };
        if out.contains(&axis) {
            return Err(invalid(section, key, format!("axis `{name}` listed twice")));
        }
        out.push(axis);
    }
    Ok(out)
}

/// Parses directions such as `+x`, `-y` or `+x-y` into a unit vector.
fn direction(text: &str) -> Option<Vector3<f64>> {
    let mut v = Vector3::zeros();
    let mut chars = text.chars();
    let mut any = false;
    while let Some(sign) = chars.next() {
        let s = match sign {
            '+' => 1.0,
            '-' => -1.0,
            _ => return None,
        };
        let axis = match chars.next()? {
            'x' => 0,
            'y' => 1,
            'z' => 2,
            _ => return None,
        };
        if v[axis] != 0.0 {
            return None;
        }
        v[axis] = s;
        any = true;
    }
    any.then(|| v.normalize())
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn default_preset() -> Self {
        Self::parse(DEFAULT_PRESET).expect("bundled preset is valid")
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;

        let r = &raw.rod;
        let rod = RodSpec {
            length: positive("rod", "length", quantity("rod", "length", &r.length, Dimension::Length)?)?,
            diameter: positive("rod", "diameter", quantity("rod", "diameter", &r.diameter, Dimension::Length)?)?,
            youngs_modulus: positive(
                "rod",
                "youngs_modulus",
                quantity("rod", "youngs_modulus", &r.youngs_modulus, Dimension::Pressure)?,
            )?,
            poisson_ratio: r.poisson_ratio,
        };
        if !(rod.poisson_ratio > -1.0 && rod.poisson_ratio < 0.5) {
            return Err(invalid("rod", "poisson_ratio", "must lie in (-1, 0.5)"));
        }

        let b = &raw.basis;
        let orders = b
            .orders
            .iter()
            .map(|&n| order("basis", "orders", n))
            .collect::<Result<Vec<_>, _>>()?;
        if orders.is_empty() {
            return Err(invalid("basis", "orders", "at least one order is required"));
        }
        let coefficients = match b.coefficients.as_str() {
            "fit" => CoefficientSource::Fit,
            "equilibrium" => CoefficientSource::Equilibrium,
            other => return Err(invalid("basis", "coefficients", format!("unknown source `{other}`"))),
        };
        let basis = BasisSpec {
            orders,
            steps: count("basis", "steps", b.steps)?,
            coefficients,
        };

        let g = &raw.grid;
        let grid = GridSpec {
            force_axes: axes("grid", "force_axes", &g.force_axes)?,
            force_levels: quantities("grid", "force_levels", &g.force_levels, Dimension::Force)?,
            moment_axes: axes("grid", "moment_axes", &g.moment_axes)?,
            moment_levels: quantities("grid", "moment_levels", &g.moment_levels, Dimension::Moment)?,
            axial_offsets: quantities("grid", "axial_offsets", &g.axial_offsets, Dimension::Force)?,
            sample: g.sample,
        };
        if !grid.force_axes.is_empty() && grid.force_levels.is_empty() {
            return Err(invalid("grid", "force_levels", "force axes need at least one level"));
        }
        if !grid.moment_axes.is_empty() && grid.moment_levels.is_empty() {
            return Err(invalid("grid", "moment_levels", "moment axes need at least one level"));
        }

        let i = &raw.increments;
        let increments = IncrementSpec {
            force: positive("increments", "force", quantity("increments", "force", &i.force, Dimension::Force)?)?,
            moment: positive(
                "increments",
                "moment",
                quantity("increments", "moment", &i.moment, Dimension::Moment)?,
            )?,
        };

        let s = &raw.segment;
        let sign = match s.sign.as_str() {
            "physical" => TendonSign::Physical,
            "reversed" => TendonSign::Reversed,
            other => return Err(invalid("segment", "sign", format!("unknown sign `{other}`"))),
        };
        let mut configurations = Vec::new();
        for (k, [a, b]) in s.configurations.iter().enumerate() {
            configurations.push((
                quantity("segment", &format!("configurations[{k}][0]"), a, Dimension::Angle)?,
                quantity("segment", &format!("configurations[{k}][1]"), b, Dimension::Angle)?,
            ));
        }
        let mut pulls = Vec::new();
        for (k, p) in s.pulls.iter().enumerate() {
            let mass = quantity("segment", &format!("pulls[{k}].mass"), &p.mass, Dimension::Mass)?;
            if mass < 0.0 {
                return Err(invalid("segment", "pulls", format!("pull {k} has a negative mass")));
            }
            let direction = direction(&p.direction).ok_or_else(|| {
                invalid("segment", "pulls", format!("pull {k}: bad direction `{}`", p.direction))
            })?;
            pulls.push(Pull {
                label: p.direction.clone(),
                force: mass * GRAVITY,
                direction,
            });
        }
        if s.tendon_count != 4 {
            return Err(invalid("segment", "tendon_count", "the two-actuator scenario needs 4 tendons"));
        }
        let segment = SegmentSpec {
            length: positive("segment", "length", quantity("segment", "length", &s.length, Dimension::Length)?)?,
            pitch_radius: positive(
                "segment",
                "pitch_radius",
                quantity("segment", "pitch_radius", &s.pitch_radius, Dimension::Length)?,
            )?,
            bending_stiffness: positive(
                "segment",
                "bending_stiffness",
                quantity("segment", "bending_stiffness", &s.bending_stiffness, Dimension::FlexuralRigidity)?,
            )?,
            torsion_ratio: positive("segment", "torsion_ratio", s.torsion_ratio)?,
            tendon_stiffness: positive(
                "segment",
                "tendon_stiffness",
                quantity("segment", "tendon_stiffness", &s.tendon_stiffness, Dimension::LinearStiffness)?,
            )?,
            tendon_count: s.tendon_count,
            order: order("segment", "order", s.order)?,
            steps: count("segment", "steps", s.steps)?,
            oracle_order: order("segment", "oracle_order", s.oracle_order)?,
            oracle_steps: count("segment", "oracle_steps", s.oracle_steps)?,
            quadrature_nodes: if s.quadrature_nodes > 0 {
                s.quadrature_nodes
            } else {
                return Err(invalid("segment", "quadrature_nodes", "must be at least 1"));
            },
            pretension: quantity("segment", "pretension", &s.pretension, Dimension::Force)?,
            pulley_radius: positive(
                "segment",
                "pulley_radius",
                quantity("segment", "pulley_radius", &s.pulley_radius, Dimension::Length)?,
            )?,
            sign,
            configurations,
            pulls,
        };
        if segment.pretension < 0.0 {
            return Err(invalid("segment", "pretension", "must be non-negative"));
        }

        let format = OutputFormat::parse(&raw.output.format)
            .ok_or_else(|| invalid("output", "format", format!("unknown format `{}`", raw.output.format)))?;
        let output = OutputSpec {
            dir: PathBuf::from(&raw.output.dir),
            format,
        };

        Ok(Self {
            seed: raw.seed,
            jobs: raw.jobs,
            rod,
            basis,
            grid,
            increments,
            segment,
            output,
            source: text.to_string(),
        })
    }
}
