use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{AtlasError, FieldKind, FieldMode, GridSpec, IndexField};
use crate::geometry::Vec2;

pub const DEFAULT_SINGULAR_THRESHOLD: f64 = 0.02;

/// Aspect label per vertex: 0 for unreachable or singular-band vertices,
/// `1..=count` for aspects numbered in row-major first-seen order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectMap {
    pub grid: GridSpec,
    pub kind: FieldKind,
    pub mode: FieldMode,
    pub singular_threshold: f64,
    pub labels: Vec<u32>,
    pub count: u32,
}

impl AspectMap {
    pub fn label(&self, i: usize, j: usize) -> u32 {
        self.labels[self.grid.index(i, j)]
    }

    /// Number of vertices carrying each label, index 0 being the band.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count as usize + 1];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

/// 4-connected flood fill over vertices whose index is at least the threshold.
pub fn compute_aspects(field: &IndexField, singular_threshold: f64) -> Result<AspectMap, AtlasError> {
    if !(singular_threshold > 0.0 && singular_threshold < 1.0) {
        return Err(AtlasError::InvalidThreshold(singular_threshold));
    }
    let grid = field.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let free: Vec<bool> = field
        .values
        .iter()
        .map(|v| !v.is_nan() && *v >= singular_threshold)
        .collect();
    let mut labels = vec![0u32; grid.len()];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        if !free[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = grid.coords(k);
            let mut visit = |n: usize| {
                if free[n] && labels[n] == 0 {
                    labels[n] = count;
                    queue.push_back(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - nx);
            }
            if j + 1 < ny {
                visit(k + nx);
            }
        }
    }
    Ok(AspectMap {
        grid,
        kind: field.kind,
        mode: field.mode,
        singular_threshold,
        labels,
        count,
    })
}

/// Label of the vertex nearest to `p`.
pub fn aspect_of_point(map: &AspectMap, p: Vec2) -> Result<u32, AtlasError> {
    let (i, j) = map.grid.nearest(p)?;
    Ok(map.label(i, j))
}
