//! Sampled index fields over the Cartesian workspace and their aspects.
//!
//! A field holds one normalized kinetostatic index per grid vertex, with
//! `NaN` marking vertices the chosen branch cannot reach. Aspects are the
//! 4-connected components of vertices whose index clears a threshold.

mod aspects;
mod export;
pub mod field;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::kinematics::{AssemblyMode, Posture, WorkingMode};

pub use aspects::{aspect_of_point, compute_aspects, AspectMap, DEFAULT_SINGULAR_THRESHOLD};
pub use export::{format_g, write_aspects_csv, write_aspects_pgm, write_field_csv, write_field_pgm};
pub use field::{
    fivebar_workspace_contains, raw_index, sample_index_field, serial_workspace_contains, AtlasMechanism, IndexField,
    DEGENERATE_RAW,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtlasError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field kind {kind:?} does not apply to this mechanism/mode")]
    KindMismatch { kind: FieldKind },
    #[error("every reachable cell has a raw index below {DEGENERATE_RAW:e} (max {max_raw:e})")]
    DegenerateField { max_raw: f64 },
    #[error("point ({}, {}) lies outside the grid", .0.x, .0.y)]
    OutOfGrid(Vec2),
    #[error("singular threshold {0} must lie in (0, 1)")]
    InvalidThreshold(f64),
    #[error("unrecognised field mode {0:?}")]
    BadMode(String),
}

/// Vertex grid: `nx` samples spanning `[x_min, x_max]` inclusive, likewise in y.
/// Values are stored row-major with row 0 at `y_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self, AtlasError> {
        let g = GridSpec {
            x_min: x_range.0,
            x_max: x_range.1,
            y_min: y_range.0,
            y_max: y_range.1,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), AtlasError> {
        if self.nx < 2 || self.ny < 2 {
            return Err(AtlasError::InvalidGrid(format!(
                "need at least 2x2 samples, got {}x{}",
                self.nx, self.ny
            )));
        }
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(AtlasError::InvalidGrid(format!(
                "degenerate bounds x [{}, {}] y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (self.y_max - self.y_min) * j as f64 / (self.ny - 1) as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.x(i), self.y(j))
    }

    /// Nearest grid vertex to `p`; `OutOfGrid` outside the bounds.
    pub fn nearest(&self, p: Vec2) -> Result<(usize, usize), AtlasError> {
        if !(p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max) {
            return Err(AtlasError::OutOfGrid(p));
        }
        let fx = (p.x - self.x_min) / (self.x_max - self.x_min) * (self.nx - 1) as f64;
        let fy = (p.y - self.y_min) / (self.y_max - self.y_min) * (self.ny - 1) as f64;
        Ok((
            (fx.round() as usize).min(self.nx - 1),
            (fy.round() as usize).min(self.ny - 1),
        ))
    }

    /// Square-ish grid covering a box padded by 2 % on every side.
    pub fn padded(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self, AtlasError> {
        let px = 0.02 * (x_range.1 - x_range.0);
        let py = 0.02 * (y_range.1 - y_range.0);
        GridSpec::new(
            (x_range.0 - px, x_range.1 + px),
            (y_range.0 - py, y_range.1 + py),
            nx,
            ny,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// |det J| scaled down by the joint-limit index.
    SerialCombined,
    /// |det A|: parallel (type-2) singularities inside the workspace.
    #[serde(rename = "fivebar_direct")]
    FiveBarDirect,
    /// |det B|: serial (type-1) singularities on the workspace boundary.
    #[serde(rename = "fivebar_inverse")]
    FiveBarInverse,
    /// |det A| |det B|.
    #[serde(rename = "fivebar_composed")]
    FiveBarComposed,
}

impl FieldKind {
    pub fn is_serial(self) -> bool {
        matches!(self, FieldKind::SerialCombined)
    }
}

/// Branch a field is sampled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FieldMode {
    Posture(Posture),
    /// Every posture the limits admit; a vertex takes the smallest index
    /// among them.
    AllPostures,
    Working {
        working_mode: WorkingMode,
        assembly_mode: Option<AssemblyMode>,
    },
}

impl FieldMode {
    pub fn working(working_mode: WorkingMode) -> Self {
        FieldMode::Working {
            working_mode,
            assembly_mode: None,
        }
    }
}

impl fmt::Display for FieldMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldMode::Posture(p) => write!(f, "{p:?}"),
            FieldMode::AllPostures => f.write_str("AllPostures"),
            FieldMode::Working {
                working_mode,
                assembly_mode: None,
            } => write!(f, "{working_mode:?}"),
            FieldMode::Working {
                working_mode,
                assembly_mode: Some(am),
            } => write!(f, "{working_mode:?}-{am:?}"),
        }
    }
}

impl FromStr for FieldMode {
    type Err = AtlasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wm = |t: &str| match t.to_ascii_uppercase().as_str() {
            "WM1" => Some(WorkingMode::WM1),
            "WM2" => Some(WorkingMode::WM2),
            "WM3" => Some(WorkingMode::WM3),
            "WM4" => Some(WorkingMode::WM4),
            _ => None,
        };
        let am = |t: &str| match t.to_ascii_uppercase().as_str() {
            "AM1" => Some(AssemblyMode::AM1),
            "AM2" => Some(AssemblyMode::AM2),
            _ => None,
        };
        let bad = || AtlasError::BadMode(s.to_string());
        match s.to_ascii_lowercase().as_str() {
            "elbowplus" | "elbow-plus" | "plus" => return Ok(FieldMode::Posture(Posture::ElbowPlus)),
            "elbowminus" | "elbow-minus" | "minus" => return Ok(FieldMode::Posture(Posture::ElbowMinus)),
            "allpostures" | "all-postures" | "all" => return Ok(FieldMode::AllPostures),
            _ => {}
        }
        match s.split_once('-') {
            None => Ok(FieldMode::working(wm(s).ok_or_else(bad)?)),
            Some((w, a)) => Ok(FieldMode::Working {
                working_mode: wm(w).ok_or_else(bad)?,
                assembly_mode: Some(am(a).ok_or_else(bad)?),
            }),
        }
    }
}

impl TryFrom<String> for FieldMode {
    type Error = AtlasError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FieldMode> for String {
    fn from(m: FieldMode) -> Self {
        m.to_string()
    }
}
