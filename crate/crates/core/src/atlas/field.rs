use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AtlasError, FieldKind, FieldMode, GridSpec};
use crate::geometry::Vec2;
use crate::kinematics::{
    fivebar_det_a, fivebar_det_b, fivebar_ik, joint_limit_index, serial_det_j, serial_ik, FiveBarGeometry,
    FiveBarState, Posture, SerialGeometry, SerialState, WorkingMode, WORKSPACE_EPS,
};

/// A field whose reachable raw values all fall below this is degenerate.
pub const DEGENERATE_RAW: f64 = 1e-12;

/// Mechanism description an atlas is sampled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mech", rename_all = "lowercase")]
pub enum AtlasMechanism {
    Serial {
        geometry: SerialGeometry,
        /// Width of the joint-limit ramp, in radians.
        limit_margin: f64,
    },
    #[serde(rename = "fivebar")]
    FiveBar { geometry: FiveBarGeometry },
}

impl AtlasMechanism {
    /// Bounding box of the reachable set, padded by 2 %.
    pub fn default_grid(&self, nx: usize, ny: usize) -> Result<GridSpec, AtlasError> {
        match self {
            AtlasMechanism::Serial { geometry, .. } => {
                let r = geometry.outer_radius();
                GridSpec::padded((-r, r), (-r, r), nx, ny)
            }
            AtlasMechanism::FiveBar { geometry: g } => {
                let r1 = g.l1 + g.l3;
                let r2 = g.l2 + g.l4;
                let x_lo = (-r1).max(g.l0 - r2);
                let x_hi = r1.min(g.l0 + r2);
                let r = r1.min(r2);
                if x_lo >= x_hi {
                    return Err(AtlasError::InvalidGrid("the two legs cannot meet".into()));
                }
                GridSpec::padded((x_lo, x_hi), (-r, r), nx, ny)
            }
        }
    }

    fn accepts(&self, kind: FieldKind, mode: FieldMode) -> bool {
        match self {
            AtlasMechanism::Serial { .. } => {
                kind.is_serial() && matches!(mode, FieldMode::Posture(_) | FieldMode::AllPostures)
            }
            AtlasMechanism::FiveBar { .. } => !kind.is_serial() && matches!(mode, FieldMode::Working { .. }),
        }
    }
}

/// |det J| (1 - joint-limit index) of a serial pose.
pub fn serial_raw(geom: &SerialGeometry, state: &SerialState, margin: f64) -> f64 {
    let det = serial_det_j(geom, state.theta1, state.theta2).abs();
    det * (1.0 - joint_limit_index(geom, state.theta1, state.theta2, margin))
}

/// Unnormalized five-bar index of the given kind.
pub fn fivebar_raw(geom: &FiveBarGeometry, state: &FiveBarState, kind: FieldKind) -> f64 {
    match kind {
        FieldKind::FiveBarDirect => fivebar_det_a(state, geom).abs(),
        FieldKind::FiveBarInverse => fivebar_det_b(state, geom).abs(),
        FieldKind::FiveBarComposed | FieldKind::SerialCombined => {
            fivebar_det_a(state, geom).abs() * fivebar_det_b(state, geom).abs()
        }
    }
}

/// Raw index at `p`, or `None` when the branch cannot reach it.
pub fn raw_index(mech: &AtlasMechanism, kind: FieldKind, mode: FieldMode, p: Vec2) -> Option<f64> {
    match (mech, mode) {
        (AtlasMechanism::Serial { geometry, limit_margin }, FieldMode::Posture(posture)) => {
            serial_ik(geometry, p, posture)
                .ok()
                .map(|s| serial_raw(geometry, &s, *limit_margin))
        }
        (AtlasMechanism::Serial { geometry, limit_margin }, FieldMode::AllPostures) => {
            [Posture::ElbowPlus, Posture::ElbowMinus]
                .into_iter()
                .filter_map(|posture| serial_ik(geometry, p, posture).ok())
                .map(|s| serial_raw(geometry, &s, *limit_margin))
                .reduce(f64::min)
        }
        (
            AtlasMechanism::FiveBar { geometry },
            FieldMode::Working {
                working_mode,
                assembly_mode,
            },
        ) => {
            let s = fivebar_ik(geometry, p, working_mode).ok()?;
            match assembly_mode {
                Some(am) if !s.singular && s.assembly_mode != am => None,
                _ => Some(fivebar_raw(geometry, &s, kind)),
            }
        }
        _ => None,
    }
}

/// Normalized index samples; `NaN` marks unreachable vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexField {
    pub grid: GridSpec,
    pub kind: FieldKind,
    pub mode: FieldMode,
    pub values: Vec<f64>,
    /// Raw value that maps to 1; 0 for a field with no reachable vertex.
    pub max_raw: f64,
}

impl IndexField {
    /// Wraps precomputed normalized values. Values outside [0, 1] other than
    /// `NaN` are rejected.
    pub fn from_values(grid: GridSpec, kind: FieldKind, mode: FieldMode, values: Vec<f64>) -> Result<Self, AtlasError> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(AtlasError::InvalidGrid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if values.iter().any(|v| !v.is_nan() && !(0.0..=1.0).contains(v)) {
            return Err(AtlasError::InvalidGrid("values must lie in [0, 1]".into()));
        }
        Ok(IndexField {
            grid,
            kind,
            mode,
            values,
            max_raw: 1.0,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.values[self.grid.index(i, j)];
        (!v.is_nan()).then_some(v)
    }

    /// Value at the grid vertex nearest to `p`.
    pub fn value_at(&self, p: Vec2) -> Result<Option<f64>, AtlasError> {
        let (i, j) = self.grid.nearest(p)?;
        Ok(self.get(i, j))
    }

    pub fn reachable(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|v| !v.is_nan())
    }

    /// `(min, max)` over reachable vertices.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.reachable().fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Maps a raw index onto this field's scale, clamped to [0, 1].
    pub fn normalize(&self, raw: f64) -> f64 {
        if self.max_raw > 0.0 {
            (raw / self.max_raw).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Samples the raw index at every vertex and divides by the field maximum.
///
/// Vertices are evaluated in parallel but collected in index order and the
/// maximum is folded sequentially, so the result is bit-identical across runs.
pub fn sample_index_field(
    mech: &AtlasMechanism,
    grid: GridSpec,
    kind: FieldKind,
    mode: FieldMode,
) -> Result<IndexField, AtlasError> {
    grid.validate()?;
    if !mech.accepts(kind, mode) {
        return Err(AtlasError::KindMismatch { kind });
    }
    let raw: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.coords(k);
            raw_index(mech, kind, mode, grid.point(i, j)).unwrap_or(f64::NAN)
        })
        .collect();
    let mut any = false;
    let mut max_raw = 0.0f64;
    for v in raw.iter().filter(|v| !v.is_nan()) {
        any = true;
        max_raw = max_raw.max(*v);
    }
    if any && max_raw < DEGENERATE_RAW {
        return Err(AtlasError::DegenerateField { max_raw });
    }
    let values = if any {
        raw.into_iter().map(|v| v / max_raw).collect()
    } else {
        raw
    };
    Ok(IndexField {
        grid,
        kind,
        mode,
        values,
        max_raw,
    })
}

/// Annulus test, plus an admissible posture when joint limits are set.
pub fn serial_workspace_contains(geom: &SerialGeometry, p: Vec2) -> bool {
    let r = p.norm();
    if r < geom.inner_radius() - WORKSPACE_EPS || r > geom.outer_radius() + WORKSPACE_EPS {
        return false;
    }
    !geom.has_limits()
        || [Posture::ElbowPlus, Posture::ElbowMinus]
            .into_iter()
            .any(|posture| serial_ik(geom, p, posture).is_ok())
}

/// Both legs reach `p`; with a working mode, that branch specifically.
pub fn fivebar_workspace_contains(geom: &FiveBarGeometry, p: Vec2, mode: Option<WorkingMode>) -> bool {
    match mode {
        Some(wm) => fivebar_ik(geom, p, wm).is_ok(),
        None => fivebar_ik(geom, p, WorkingMode::WM1).is_ok(),
    }
}
