//! Experiment configuration schema and its translation into core objects.
//!
//! Everything here runs before any numerical work. Unknown keys, wrong
//! types and out-of-range parameters are all reported as configuration
//! errors.

use std::path::Path;
use std::sync::Arc;

use helicity_core::fields::{AnalyticField, HarmonicTorusField, ScalarPotential, SpheromakField, TubeField};
use helicity_core::geometry::{AxisymTorus, Ball, Domain, Frame, MaskedGrid, PolylineCurve};
use helicity_core::transport::FlowFamily;
use helicity_core::{Mat3, Vec3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

type V3 = [f64; 3];

fn origin() -> V3 {
    [0.0; 3]
}

fn z_axis() -> V3 {
    [0.0, 0.0, 1.0]
}

fn one() -> f64 {
    1.0
}

fn vec3(v: V3) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

fn mat3(rows: [V3; 3]) -> Mat3 {
    Mat3::from_row_slice(&[
        rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0], rows[2][1], rows[2][2],
    ])
}

fn frame(center: V3, axis: V3) -> Result<Frame, CliError> {
    Frame::from_axis(vec3(center), vec3(axis)).map_err(CliError::config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field2: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub options: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Parses `options` into a command-specific struct. A missing or null
    /// `options` block means all defaults.
    pub fn options<T: DeserializeOwned + Serialize>(&mut self) -> Result<T, CliError> {
        let raw = match &self.options {
            serde_json::Value::Null => serde_json::Value::Object(Default::default()),
            v => v.clone(),
        };
        let typed: T = serde_json::from_value(raw).map_err(|e| CliError::Config(format!("invalid options: {e}")))?;
        // store the defaults-filled form so it is what gets echoed in outputs
        self.options = serde_json::to_value(&typed).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(typed)
    }

    pub fn require_domain(&self) -> Result<Domain, CliError> {
        self.domain.as_ref().ok_or_else(|| CliError::missing("domain"))?.build()
    }

    pub fn require_field(&self) -> Result<AnalyticField, CliError> {
        self.field.as_ref().ok_or_else(|| CliError::missing("field"))?.build()
    }

    pub fn require_flow(&self) -> Result<FlowFamily, CliError> {
        let f = self.flow.clone().ok_or_else(|| CliError::missing("flow"))?;
        f.validate().map_err(CliError::config)?;
        Ok(f)
    }

    pub fn require_times(&self) -> Result<Vec<f64>, CliError> {
        let t = self.times.clone().ok_or_else(|| CliError::missing("times"))?;
        if t.is_empty() || t.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("times must be a non-empty list of finite numbers".into()));
        }
        Ok(t)
    }

    pub fn require_grid(&self, domain: &Domain) -> Result<Arc<MaskedGrid>, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| CliError::missing("grid"))?;
        if !(g.h.is_finite() && g.h > 0.0) {
            return Err(CliError::Config(format!("grid.h must be positive, got {}", g.h)));
        }
        MaskedGrid::build(domain, g.h, g.padding).map(Arc::new).map_err(CliError::config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub h: f64,
    #[serde(default = "default_padding")]
    pub padding: usize,
}

fn default_padding() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball {
        #[serde(default = "origin")]
        center: V3,
        radius: f64,
    },
    Torus {
        #[serde(default = "origin")]
        center: V3,
        #[serde(default = "z_axis")]
        axis: V3,
        major_radius: f64,
        minor_radius: f64,
    },
    Union {
        components: Vec<DomainSpec>,
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain, CliError> {
        match self {
            DomainSpec::Ball { center, radius } => {
                Ok(Domain::Ball(Ball::new(vec3(*center), *radius).map_err(CliError::config)?))
            }
            DomainSpec::Torus { center, axis, major_radius, minor_radius } => Ok(Domain::Torus(
                AxisymTorus::new(frame(*center, *axis)?, *major_radius, *minor_radius).map_err(CliError::config)?,
            )),
            DomainSpec::Union { components } => {
                let parts = components.iter().map(DomainSpec::build).collect::<Result<Vec<_>, _>>()?;
                Domain::union(parts).map_err(CliError::config)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `½ xᵀQx + b·x`.
    Quadratic {
        q: [V3; 3],
        #[serde(default = "origin")]
        b: V3,
    },
    Gaussian {
        #[serde(default = "origin")]
        center: V3,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<ScalarPotential, CliError> {
        match self {
            PotentialSpec::Quadratic { q, b } => {
                let m = mat3(*q);
                if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
                    return Err(CliError::Config("quadratic potential matrix must be symmetric".into()));
                }
                Ok(ScalarPotential::Quadratic { q: m, b: vec3(*b) })
            }
            PotentialSpec::Gaussian { center, width, amplitude } => {
                if !(width.is_finite() && *width > 0.0 && amplitude.is_finite()) {
                    return Err(CliError::Config("gaussian potential needs a positive width".into()));
                }
                Ok(ScalarPotential::Gaussian { center: vec3(*center), width: *width, amplitude: *amplitude })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coefficient: f64,
    pub field: FieldSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Flux tube along the circle of radius `loop_radius` about `axis`.
    Tube {
        #[serde(default = "origin")]
        center: V3,
        #[serde(default = "z_axis")]
        axis: V3,
        loop_radius: f64,
        tube_radius: f64,
        #[serde(default = "one")]
        flux: f64,
        #[serde(default)]
        twist: f64,
    },
    /// Harmonic knot field of an axisymmetric torus.
    Harmonic {
        #[serde(default = "origin")]
        center: V3,
        #[serde(default = "z_axis")]
        axis: V3,
        major_radius: f64,
        minor_radius: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Spheromak {
        #[serde(default = "origin")]
        center: V3,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Gradient {
        potential: PotentialSpec,
    },
    Constant {
        value: V3,
    },
    Linear {
        matrix: [V3; 3],
        #[serde(default = "origin")]
        offset: V3,
    },
    Combination {
        terms: Vec<Term>,
    },
}

impl FieldSpec {
    pub fn build(&self) -> Result<AnalyticField, CliError> {
        match self {
            FieldSpec::Tube { center, axis, loop_radius, tube_radius, flux, twist } => Ok(AnalyticField::Tube(
                TubeField::twisted(frame(*center, *axis)?, *loop_radius, *tube_radius, *flux, *twist)
                    .map_err(CliError::config)?,
            )),
            FieldSpec::Harmonic { center, axis, major_radius, minor_radius, scale } => {
                let torus =
                    AxisymTorus::new(frame(*center, *axis)?, *major_radius, *minor_radius).map_err(CliError::config)?;
                if !scale.is_finite() {
                    return Err(CliError::Config("harmonic scale must be finite".into()));
                }
                let base = HarmonicTorusField::new(torus);
                Ok(AnalyticField::HarmonicTorus(HarmonicTorusField { scale: base.scale * scale, ..base }))
            }
            FieldSpec::Spheromak { center, radius, amplitude } => {
                let ball = Ball::new(vec3(*center), *radius).map_err(CliError::config)?;
                if !amplitude.is_finite() {
                    return Err(CliError::Config("spheromak amplitude must be finite".into()));
                }
                Ok(AnalyticField::Spheromak(SpheromakField::new(ball, *amplitude)))
            }
            FieldSpec::Gradient { potential } => Ok(AnalyticField::Gradient(potential.build()?)),
            FieldSpec::Constant { value } => Ok(AnalyticField::constant(vec3(*value))),
            FieldSpec::Linear { matrix, offset } => {
                Ok(AnalyticField::Linear { matrix: mat3(*matrix), offset: vec3(*offset) })
            }
            FieldSpec::Combination { terms } => {
                let built = terms
                    .iter()
                    .map(|t| Ok((t.coefficient, t.field.build()?)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                AnalyticField::combination(built).map_err(CliError::config)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        #[serde(default = "origin")]
        center: V3,
        #[serde(default = "z_axis")]
        axis: V3,
        radius: f64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    /// `(p, q)` torus knot on the standard torus.
    TorusKnot {
        p: u32,
        q: u32,
        major_radius: f64,
        minor_radius: f64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    Polyline {
        vertices: Vec<V3>,
        #[serde(default = "closed_default")]
        closed: bool,
    },
}

fn default_segments() -> usize {
    256
}

fn closed_default() -> bool {
    true
}

impl CurveSpec {
    pub fn build(&self) -> Result<PolylineCurve, CliError> {
        match self {
            CurveSpec::Circle { center, axis, radius, segments } => {
                PolylineCurve::circle(&frame(*center, *axis)?, *radius, *segments).map_err(CliError::config)
            }
            CurveSpec::TorusKnot { p, q, major_radius, minor_radius, segments } => {
                PolylineCurve::torus_knot(*p, *q, *major_radius, *minor_radius, *segments).map_err(CliError::config)
            }
            CurveSpec::Polyline { vertices, closed } => {
                PolylineCurve::new(vertices.iter().copied().map(vec3).collect(), *closed).map_err(CliError::config)
            }
        }
    }
}
