//! Instance and result files.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use stmdm::mdm::CompactSetDescriptor;
use stmdm::{Point64, Tolerance64};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Steiner,
    Mdm,
}

/// The compact set of an mdm instance. Circles and stadiums are planar and
/// centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDescriptor {
    Circle { radius: f64 },
    Stadium { radius: f64, seg_len: f64 },
    Polygon { vertices: Vec<Vec<f64>> },
    Points { points: Vec<Vec<f64>> },
    Samples { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Terminals {
    Points(Vec<Vec<f64>>),
    Set(SetDescriptor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: String,
    pub dim: usize,
    pub problem: Problem,
    pub terminals: Terminals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Malformed,
    MissingField,
    DimensionMismatch,
    InvalidValue,
    UnsupportedVersion,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Malformed => "malformed",
            Self::MissingField => "missing_field",
            Self::DimensionMismatch => "dimension_mismatch",
            Self::InvalidValue => "invalid_value",
            Self::UnsupportedVersion => "unsupported_version",
        }
    }
}

/// Validation failure; `field` is a path such as `terminals[2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceError {
    pub kind: ErrorKind,
    pub field: String,
    pub message: String,
}

impl InstanceError {
    fn new(kind: ErrorKind, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}: {}", self.kind.as_str(), self.message)
        } else {
            write!(f, "{} in `{}`: {}", self.kind.as_str(), self.field, self.message)
        }
    }
}

impl std::error::Error for InstanceError {}

type Checked<T> = Result<T, InstanceError>;

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> InstanceError {
    InstanceError::new(ErrorKind::InvalidValue, field, msg)
}

/// Parses and validates an instance. `schema_version` may be omitted.
pub fn parse_instance(bytes: &[u8]) -> Checked<InstanceFile> {
    let text = std::str::from_utf8(bytes).map_err(|e| InstanceError::new(ErrorKind::Malformed, "", e.to_string()))?;
    let value: Value = serde_json::from_str(text).map_err(|e| InstanceError::new(ErrorKind::Malformed, "", e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(InstanceError::new(ErrorKind::Malformed, "", "expected a JSON object"));
    };
    let missing = |f: &str| InstanceError::new(ErrorKind::MissingField, f, "required field is missing");

    let schema_version = match obj.get("schema_version") {
        None => SCHEMA_VERSION.to_string(),
        Some(Value::String(s)) if s == SCHEMA_VERSION => s.clone(),
        Some(Value::String(s)) => {
            return Err(InstanceError::new(
                ErrorKind::UnsupportedVersion,
                "schema_version",
                format!("unsupported version {s:?}, expected {SCHEMA_VERSION:?}"),
            ))
        }
        Some(_) => return Err(invalid("schema_version", "must be a string")),
    };
    let dim = match obj.get("dim") {
        None => return Err(missing("dim")),
        Some(v) => v.as_u64().ok_or_else(|| invalid("dim", "must be a non-negative integer"))? as usize,
    };
    if dim < 2 {
        return Err(invalid("dim", format!("must be at least 2, got {dim}")));
    }
    let problem = match obj.get("problem").map(Value::as_str) {
        None => return Err(missing("problem")),
        Some(Some("steiner")) => Problem::Steiner,
        Some(Some("mdm")) => Problem::Mdm,
        Some(_) => return Err(invalid("problem", "expected \"steiner\" or \"mdm\"")),
    };
    let raw = obj.get("terminals").ok_or_else(|| missing("terminals"))?;
    let r = match obj.get("r") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_f64().ok_or_else(|| invalid("r", "must be a number"))?),
    };

    let terminals = match problem {
        Problem::Steiner => {
            let pts = point_list(raw, dim, "terminals")?;
            if pts.len() < 2 {
                return Err(invalid("terminals", "need at least two terminals"));
            }
            Terminals::Points(pts)
        }
        Problem::Mdm => {
            let r = r.ok_or_else(|| missing("r"))?;
            if !(r > 0.0) || !r.is_finite() {
                return Err(invalid("r", "must be positive and finite"));
            }
            if raw.is_array() {
                Terminals::Points(point_list(raw, dim, "terminals")?)
            } else {
                Terminals::Set(descriptor(raw, dim)?)
            }
        }
    };
    if problem == Problem::Steiner && r.is_some() {
        return Err(invalid("r", "only meaningful for mdm instances"));
    }
    Ok(InstanceFile {
        schema_version,
        dim,
        problem,
        terminals,
        r,
    })
}

fn point_list(v: &Value, dim: usize, field: &str) -> Checked<Vec<Vec<f64>>> {
    let Value::Array(items) = v else {
        return Err(invalid(field, "must be a list of coordinate lists"));
    };
    if items.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let at = format!("{field}[{i}]");
            let Value::Array(cs) = p else {
                return Err(invalid(at, "must be a coordinate list"));
            };
            if cs.len() != dim {
                return Err(InstanceError::new(
                    ErrorKind::DimensionMismatch,
                    at,
                    format!("expected {dim} coordinates, found {}", cs.len()),
                ));
            }
            cs.iter()
                .map(|c| c.as_f64().filter(|x| x.is_finite()).ok_or_else(|| invalid(at.clone(), "coordinates must be finite numbers")))
                .collect()
        })
        .collect()
}

fn descriptor(v: &Value, dim: usize) -> Checked<SetDescriptor> {
    let Value::Object(obj) = v else {
        return Err(invalid("terminals", "must be a list of points or a descriptor object"));
    };
    let kind = obj
        .get("kind")
        .ok_or_else(|| InstanceError::new(ErrorKind::MissingField, "terminals.kind", "required field is missing"))?
        .as_str()
        .ok_or_else(|| invalid("terminals.kind", "must be a string"))?;
    let number = |name: &str| -> Checked<f64> {
        let at = format!("terminals.{name}");
        obj.get(name)
            .ok_or_else(|| InstanceError::new(ErrorKind::MissingField, at.clone(), "required field is missing"))?
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| invalid(at, "must be a finite number"))
    };
    let list = |name: &str| -> Checked<Vec<Vec<f64>>> {
        let at = format!("terminals.{name}");
        let raw = obj
            .get(name)
            .ok_or_else(|| InstanceError::new(ErrorKind::MissingField, at.clone(), "required field is missing"))?;
        point_list(raw, dim, &at)
    };
    let planar = |k: &str| {
        if dim == 2 {
            Ok(())
        } else {
            Err(InstanceError::new(
                ErrorKind::DimensionMismatch,
                "dim",
                format!("a {k} lives in the plane, got dim = {dim}"),
            ))
        }
    };
    let desc = match kind {
        "circle" => {
            planar(kind)?;
            let radius = number("radius")?;
            if radius <= 0.0 {
                return Err(invalid("terminals.radius", "must be positive"));
            }
            SetDescriptor::Circle { radius }
        }
        "stadium" => {
            planar(kind)?;
            let radius = number("radius")?;
            let seg_len = number("seg_len")?;
            if radius <= 0.0 {
                return Err(invalid("terminals.radius", "must be positive"));
            }
            if seg_len < 0.0 {
                return Err(invalid("terminals.seg_len", "must be non-negative"));
            }
            SetDescriptor::Stadium { radius, seg_len }
        }
        "polygon" => {
            let vertices = list("vertices")?;
            if vertices.len() < 3 {
                return Err(invalid("terminals.vertices", "a polygon needs at least three vertices"));
            }
            SetDescriptor::Polygon { vertices }
        }
        "points" => SetDescriptor::Points { points: list("points")? },
        "samples" => SetDescriptor::Samples { points: list("points")? },
        other => return Err(invalid("terminals.kind", format!("unknown kind {other:?}"))),
    };
    Ok(desc)
}

fn to_points(raw: &[Vec<f64>]) -> Vec<Point64> {
    raw.iter().map(|c| Point64::from_slice(c).expect("validated coordinates")).collect()
}

impl InstanceFile {
    /// Terminal points of a steiner instance, or the finite set of an mdm one.
    pub fn points(&self) -> Option<Vec<Point64>> {
        match &self.terminals {
            Terminals::Points(p) | Terminals::Set(SetDescriptor::Points { points: p }) => Some(to_points(p)),
            _ => None,
        }
    }

    pub fn descriptor(&self) -> CompactSetDescriptor<f64> {
        match &self.terminals {
            Terminals::Points(p) => CompactSetDescriptor::Points(to_points(p)),
            Terminals::Set(s) => match s {
                SetDescriptor::Circle { radius } => CompactSetDescriptor::Circle { radius: *radius },
                SetDescriptor::Stadium { radius, seg_len } => CompactSetDescriptor::Stadium {
                    radius: *radius,
                    seg_len: *seg_len,
                },
                SetDescriptor::Polygon { vertices } => CompactSetDescriptor::Polygon(to_points(vertices)),
                SetDescriptor::Points { points } => CompactSetDescriptor::Points(to_points(points)),
                SetDescriptor::Samples { points } => CompactSetDescriptor::Samples(to_points(points)),
            },
        }
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance serializes");
        hex(&Sha256::digest(&bytes))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn coords(p: &Point64) -> Vec<f64> {
    p.coords().to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub terminals: Vec<Vec<f64>>,
    pub steiner_points: Vec<Vec<f64>>,
    /// Topology edge list; node `i` is a terminal for `i < terminals.len()`.
    pub edges: Vec<(usize, usize)>,
    /// Edge lists of every topology reaching the minimum.
    #[serde(default)]
    pub cominimal: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkJson {
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
    pub r: f64,
    /// Samples of `M` (closed curve when `closed`), kept for rendering.
    pub compact: Vec<Vec<f64>>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageJson {
    pub max_defect: f64,
    pub covered: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergeticJson {
    pub x: Vec<f64>,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub min_angle: Option<f64>,
    pub max_degree: usize,
    pub degrees: Vec<usize>,
    pub is_tree: bool,
    #[serde(default)]
    pub degenerate_edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageJson>,
    #[serde(default)]
    pub energetic_points: Vec<EnergeticJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolJson {
    pub eps_len: f64,
    pub eps_angle: f64,
    pub eps_tie: f64,
    pub coverage_eps: f64,
}

impl From<&Tolerance64> for TolJson {
    fn from(t: &Tolerance64) -> Self {
        Self {
            eps_len: t.eps_len,
            eps_angle: t.eps_angle,
            eps_tie: t.eps_tie,
            coverage_eps: t.coverage_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverJson {
    pub name: String,
    pub iterations: usize,
    pub converged: bool,
    pub profile: String,
    pub tolerances: TolJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema_version: String,
    pub instance_digest: String,
    pub problem: Problem,
    pub dim: usize,
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkJson>,
    pub report: ReportJson,
    pub solver: SolverJson,
}

impl ResultFile {
    /// Pretty JSON with a trailing newline. Floats use the shortest
    /// representation that reads back to the same double.
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("result serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, InstanceError> {
        serde_json::from_slice(bytes).map_err(|e| InstanceError::new(ErrorKind::Malformed, "", e.to_string()))
    }

    pub fn matches(&self, instance: &InstanceFile) -> bool {
        self.instance_digest == instance.digest()
    }
}
