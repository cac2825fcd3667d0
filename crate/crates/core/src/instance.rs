//! The shared instance file format.
//!
//! A JSON document with fields `kind` (`unit_cube` | `box` | `ball`), `dim`,
//! `numeric_mode` (`float` | `rational`), named object groups under `parts`
//! (`P`/`Q`/`R`/`S` or a single `V`), and for balls a shared `radius_sq`.
//! Rows hold centers for unit cubes and balls, `[lo..., hi...]` pairs for
//! boxes. Rational values are serialized as `"num/den"` strings so instances
//! round-trip exactly; float values round-trip bit-exact through serde_json.
//!
//! Generators may attach per-object `labels` (source-vertex tags) and a
//! free-form `meta` map; the observation verifier requires them.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geom::{AxisBoxD, BallD, GeomError, GeomObject, PointD};
use crate::scalar::{Rat, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    UnitCube,
    Box,
    Ball,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::UnitCube => "unit_cube",
            Kind::Box => "box",
            Kind::Ball => "ball",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        match s {
            "unit_cube" => Some(Kind::UnitCube),
            "box" => Some(Kind::Box),
            "ball" => Some(Kind::Ball),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance json: {0}")]
    Json(String),
    #[error("unknown kind {0:?}")]
    UnknownKind(String),
    #[error("unknown numeric mode {0:?}")]
    UnknownMode(String),
    #[error("part {part}: row {row} has {got} values, expected {want}")]
    RowLength {
        part: String,
        row: usize,
        got: usize,
        want: usize,
    },
    #[error("ball instance missing radius_sq")]
    MissingRadius,
    #[error("labels for part {0} do not match object count")]
    LabelCount(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Clone, Debug)]
pub struct Part<S> {
    pub name: String,
    /// Raw coordinate rows; interpretation depends on the instance kind.
    pub rows: Vec<Vec<S>>,
    /// Optional per-object source tags (one per row when present).
    pub labels: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Instance<S> {
    pub kind: Kind,
    pub dim: usize,
    pub radius_sq: Option<S>,
    pub parts: Vec<Part<S>>,
    pub meta: BTreeMap<String, String>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(kind: Kind, dim: usize) -> Self {
        Instance {
            kind,
            dim,
            radius_sq: None,
            parts: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn push_part(&mut self, name: &str) -> usize {
        self.parts.push(Part {
            name: name.to_string(),
            rows: Vec::new(),
            labels: Vec::new(),
        });
        self.parts.len() - 1
    }

    pub fn part(&self, name: &str) -> Option<&Part<S>> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn row_len(&self) -> usize {
        match self.kind {
            Kind::Box => 2 * self.dim,
            _ => self.dim,
        }
    }

    pub fn total_objects(&self) -> usize {
        self.parts.iter().map(|p| p.rows.len()).sum()
    }

    pub fn object_from_row(&self, row: &[S]) -> Result<GeomObject<S>, InstanceError> {
        match self.kind {
            Kind::UnitCube => Ok(GeomObject::UnitCube(PointD::new(row.to_vec())?)),
            Kind::Box => {
                let lo = PointD::new(row[..self.dim].to_vec())?;
                let hi = PointD::new(row[self.dim..].to_vec())?;
                Ok(GeomObject::Box(AxisBoxD::new(lo, hi)?))
            }
            Kind::Ball => {
                let rsq = self
                    .radius_sq
                    .clone()
                    .ok_or(InstanceError::MissingRadius)?;
                Ok(GeomObject::Ball(BallD::from_radius_sq(
                    PointD::new(row.to_vec())?,
                    rsq,
                )?))
            }
        }
    }

    /// All objects of one part, in row order.
    pub fn part_objects(&self, part: &Part<S>) -> Result<Vec<GeomObject<S>>, InstanceError> {
        part.rows.iter().map(|r| self.object_from_row(r)).collect()
    }

    /// Objects of every part concatenated, with per-vertex part index.
    pub fn all_objects(&self) -> Result<(Vec<GeomObject<S>>, Vec<usize>), InstanceError> {
        let mut objs = Vec::with_capacity(self.total_objects());
        let mut part_of = Vec::with_capacity(self.total_objects());
        for (pi, part) in self.parts.iter().enumerate() {
            for row in &part.rows {
                objs.push(self.object_from_row(row)?);
                part_of.push(pi);
            }
        }
        Ok((objs, part_of))
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let want = self.row_len();
        for part in &self.parts {
            for (i, row) in part.rows.iter().enumerate() {
                if row.len() != want {
                    return Err(InstanceError::RowLength {
                        part: part.name.clone(),
                        row: i,
                        got: row.len(),
                        want,
                    });
                }
            }
            if !part.labels.is_empty() && part.labels.len() != part.rows.len() {
                return Err(InstanceError::LabelCount(part.name.clone()));
            }
        }
        if self.kind == Kind::Ball && self.radius_sq.is_none() {
            return Err(InstanceError::MissingRadius);
        }
        Ok(())
    }
}

/// Scalar <-> JSON value conversion, one impl per numeric mode.
pub trait JsonScalar: Scalar {
    const MODE: &'static str;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self, InstanceError>;
}

impl JsonScalar for f64 {
    const MODE: &'static str = "float";
    fn to_json(&self) -> Value {
        json!(self)
    }
    fn from_json(v: &Value) -> Result<Self, InstanceError> {
        v.as_f64()
            .ok_or_else(|| InstanceError::Json(format!("expected float, got {v}")))
    }
}

impl JsonScalar for Rat {
    const MODE: &'static str = "rational";
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self, InstanceError> {
        match v {
            Value::String(s) => s
                .parse()
                .map_err(|e| InstanceError::Json(format!("bad rational {s:?}: {e}"))),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Rat::int(i))
                } else {
                    Err(InstanceError::Json(format!(
                        "rational instances store non-integers as \"num/den\" strings, got {n}"
                    )))
                }
            }
            _ => Err(InstanceError::Json(format!("expected rational, got {v}"))),
        }
    }
}

impl<S: JsonScalar> Instance<S> {
    pub fn to_json_string(&self) -> String {
        let mut parts = Map::new();
        let mut labels = Map::new();
        for part in &self.parts {
            let rows: Vec<Value> = part
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(|v| v.to_json()).collect()))
                .collect();
            parts.insert(part.name.clone(), Value::Array(rows));
            if !part.labels.is_empty() {
                labels.insert(
                    part.name.clone(),
                    Value::Array(part.labels.iter().map(|l| json!(l)).collect()),
                );
            }
        }
        let mut root = Map::new();
        root.insert("kind".into(), json!(self.kind.as_str()));
        root.insert("dim".into(), json!(self.dim));
        root.insert("numeric_mode".into(), json!(S::MODE));
        if let Some(r) = &self.radius_sq {
            root.insert("radius_sq".into(), r.to_json());
        }
        root.insert("parts".into(), Value::Object(parts));
        if !labels.is_empty() {
            root.insert("labels".into(), Value::Object(labels));
        }
        if !self.meta.is_empty() {
            root.insert(
                "meta".into(),
                Value::Object(
                    self.meta
                        .iter()
                        .map(|(k, v)| (k.clone(), json!(v)))
                        .collect(),
                ),
            );
        }
        serde_json::to_string_pretty(&Value::Object(root)).expect("instance serialization")
    }

    pub fn from_json_str(s: &str) -> Result<Self, InstanceError> {
        let root: Value =
            serde_json::from_str(s).map_err(|e| InstanceError::Json(e.to_string()))?;
        let kind_s = root["kind"]
            .as_str()
            .ok_or_else(|| InstanceError::Json("missing kind".into()))?;
        let kind =
            Kind::parse(kind_s).ok_or_else(|| InstanceError::UnknownKind(kind_s.to_string()))?;
        let mode = root["numeric_mode"]
            .as_str()
            .ok_or_else(|| InstanceError::Json("missing numeric_mode".into()))?;
        if mode != S::MODE {
            return Err(InstanceError::UnknownMode(format!(
                "{mode} (expected {})",
                S::MODE
            )));
        }
        let dim = root["dim"]
            .as_u64()
            .ok_or_else(|| InstanceError::Json("missing dim".into()))? as usize;
        let mut inst = Instance::new(kind, dim);
        if let Some(r) = root.get("radius_sq") {
            inst.radius_sq = Some(S::from_json(r)?);
        }
        let parts = root["parts"]
            .as_object()
            .ok_or_else(|| InstanceError::Json("missing parts".into()))?;
        let labels = root.get("labels").and_then(|l| l.as_object());
        for (name, rows) in parts {
            let rows = rows
                .as_array()
                .ok_or_else(|| InstanceError::Json(format!("part {name} not an array")))?;
            let mut part = Part {
                name: name.clone(),
                rows: Vec::with_capacity(rows.len()),
                labels: Vec::new(),
            };
            for row in rows {
                let row = row
                    .as_array()
                    .ok_or_else(|| InstanceError::Json("row not an array".into()))?;
                part.rows
                    .push(row.iter().map(S::from_json).collect::<Result<_, _>>()?);
            }
            if let Some(ls) = labels.and_then(|m| m.get(name)).and_then(|v| v.as_array()) {
                part.labels = ls
                    .iter()
                    .map(|v| v.as_str().unwrap_or_default().to_string())
                    .collect();
            }
            inst.parts.push(part);
        }
        if let Some(meta) = root.get("meta").and_then(|m| m.as_object()) {
            for (k, v) in meta {
                inst.meta
                    .insert(k.clone(), v.as_str().unwrap_or_default().to_string());
            }
        }
        inst.validate()?;
        Ok(inst)
    }
}

/// An instance in either numeric mode, as read from disk.
pub enum AnyInstance {
    Float(Instance<f64>),
    Rational(Instance<Rat>),
}

impl AnyInstance {
    pub fn from_json_str(s: &str) -> Result<Self, InstanceError> {
        let root: Value =
            serde_json::from_str(s).map_err(|e| InstanceError::Json(e.to_string()))?;
        match root["numeric_mode"].as_str() {
            Some("float") => Ok(AnyInstance::Float(Instance::from_json_str(s)?)),
            Some("rational") => Ok(AnyInstance::Rational(Instance::from_json_str(s)?)),
            other => Err(InstanceError::UnknownMode(format!("{other:?}"))),
        }
    }
}
