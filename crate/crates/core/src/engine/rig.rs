//! Per-mechanism kinematic models behind one interface, so the engine's
//! drag, projection and snapshot logic is written once.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};
use std::fmt::Debug;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::protocol::GeometryEcho;
use super::EngineError;
use crate::atlas::{AtlasMechanism, FieldKind, FieldMode};
use crate::geometry::Vec2;
use crate::haptic::{boundary_definer, Normalization, Pose, RenderMode};
use crate::kinematics::{
    fivebar_det_a, fivebar_det_b, fivebar_fk, fivebar_ik, serial_ik, AssemblyMode, BranchLabels, FiveBarGeometry,
    FiveBarState, KinematicsError, Mechanism, Posture, SerialGeometry, SerialState, WorkingMode,
};

const PROJECTION_ITERS: usize = 100;

/// Branch switch requested by a client; fields that do not apply to the
/// mechanism must be absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeChange {
    pub working_mode: Option<WorkingMode>,
    pub assembly_mode: Option<AssemblyMode>,
    pub posture: Option<Posture>,
}

pub trait Rig: Clone + Debug {
    type State: Copy + Debug + PartialEq;
    const MECH: Mechanism;

    /// Rest pose after start-up or a geometry change that loses the old pose.
    fn default_state(&self) -> Self::State;
    /// Inverse kinematics on the branch of `like`.
    fn solve(&self, p: Vec2, like: &Self::State) -> Result<Self::State, KinematicsError>;
    /// Nearest point of the reachable set, approximately.
    fn project(&self, p: Vec2) -> Vec2;
    fn switch(&self, state: &Self::State, change: ModeChange) -> Result<Self::State, EngineError>;

    fn position(state: &Self::State) -> Vec2;
    fn labels(state: &Self::State) -> BranchLabels;
    fn singular(state: &Self::State) -> bool;
    fn angles(state: &Self::State) -> Vec<f64>;

    fn atlas_mechanism(&self) -> AtlasMechanism;
    fn geometry_hash(&self) -> u64;
    fn echo(&self) -> GeometryEcho;
    /// Atlas fields the current branch needs.
    fn fields(&self, state: &Self::State) -> Vec<(FieldKind, FieldMode)>;
    fn normalization_fields(&self, state: &Self::State) -> (FieldMode, Vec<FieldKind>);
    fn aspect_field(&self, state: &Self::State, mode: RenderMode) -> (FieldKind, FieldMode);
    /// Upper bounds on the raw indices, used before any atlas exists.
    fn analytic_normalization(&self) -> Normalization;
    fn boundary_definer(&self, state: &Self::State, norm: &Normalization, mode: RenderMode) -> f64;
}

fn project_annulus(p: Vec2, centre: Vec2, r_min: f64, r_max: f64) -> Vec2 {
    let v = p - centre;
    let r = v.norm();
    if r == 0.0 {
        return centre + Vec2::new(r_min, 0.0);
    }
    let clamped = r.clamp(r_min, r_max);
    if clamped == r {
        p
    } else {
        centre + v * (clamped / r)
    }
}

fn hash_bits(values: impl IntoIterator<Item = f64>) -> u64 {
    let mut h = DefaultHasher::new();
    for v in values {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialRig {
    pub geometry: SerialGeometry,
    pub limit_margin: f64,
}

impl Rig for SerialRig {
    type State = SerialState;
    const MECH: Mechanism = Mechanism::Serial;

    fn default_state(&self) -> SerialState {
        let mid = |i: usize| self.geometry.joint_limits[i].map(|l| 0.5 * (l.lo + l.hi));
        let theta1 = mid(0).unwrap_or(FRAC_PI_6);
        let theta2 = mid(1).unwrap_or(theta1 + FRAC_PI_2);
        SerialState::from_angles(&self.geometry, theta1, theta2, Posture::ElbowPlus)
    }

    fn solve(&self, p: Vec2, like: &SerialState) -> Result<SerialState, KinematicsError> {
        serial_ik(&self.geometry, p, like.posture)
    }

    fn project(&self, p: Vec2) -> Vec2 {
        project_annulus(
            p,
            Vec2::ZERO,
            self.geometry.inner_radius(),
            self.geometry.outer_radius(),
        )
    }

    fn switch(&self, state: &SerialState, change: ModeChange) -> Result<SerialState, EngineError> {
        if change.working_mode.is_some() || change.assembly_mode.is_some() {
            return Err(EngineError::InvalidValue("the serial arm only has a posture".into()));
        }
        let Some(posture) = change.posture else {
            return Ok(*state);
        };
        if posture == state.posture {
            return Ok(*state);
        }
        if state.singular {
            return Err(EngineError::Rejected(
                "postures merge here; move off the singularity first".into(),
            ));
        }
        serial_ik(&self.geometry, state.p, posture).map_err(|e| EngineError::Rejected(e.to_string()))
    }

    fn position(state: &SerialState) -> Vec2 {
        state.p
    }

    fn labels(state: &SerialState) -> BranchLabels {
        BranchLabels::Serial { posture: state.posture }
    }

    fn singular(state: &SerialState) -> bool {
        state.singular
    }

    fn angles(state: &SerialState) -> Vec<f64> {
        vec![state.theta1, state.theta2]
    }

    fn atlas_mechanism(&self) -> AtlasMechanism {
        AtlasMechanism::Serial {
            geometry: self.geometry,
            limit_margin: self.limit_margin,
        }
    }

    fn geometry_hash(&self) -> u64 {
        let limits = self.geometry.joint_limits.iter().flat_map(|l| match l {
            Some(l) => [1.0, l.lo, l.hi],
            None => [0.0; 3],
        });
        hash_bits(
            [self.geometry.l1, self.geometry.l2, self.limit_margin]
                .into_iter()
                .chain(limits),
        )
    }

    fn echo(&self) -> GeometryEcho {
        GeometryEcho {
            lengths: vec![self.geometry.l1, self.geometry.l2],
            joint_limits: Some(self.geometry.joint_limits),
            limit_margin: Some(self.limit_margin),
        }
    }

    fn fields(&self, state: &SerialState) -> Vec<(FieldKind, FieldMode)> {
        vec![(FieldKind::SerialCombined, FieldMode::Posture(state.posture))]
    }

    fn normalization_fields(&self, state: &SerialState) -> (FieldMode, Vec<FieldKind>) {
        (FieldMode::Posture(state.posture), vec![FieldKind::SerialCombined])
    }

    fn aspect_field(&self, state: &SerialState, _mode: RenderMode) -> (FieldKind, FieldMode) {
        (FieldKind::SerialCombined, FieldMode::Posture(state.posture))
    }

    fn analytic_normalization(&self) -> Normalization {
        Normalization {
            serial: Some(self.geometry.l1 * self.geometry.l2),
            ..Normalization::default()
        }
    }

    fn boundary_definer(&self, state: &SerialState, norm: &Normalization, mode: RenderMode) -> f64 {
        let pose = Pose::Serial {
            geometry: &self.geometry,
            state,
            limit_margin: self.limit_margin,
        };
        boundary_definer(pose, norm, mode).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiveBarRig {
    pub geometry: FiveBarGeometry,
}

impl FiveBarRig {
    fn leg_ranges(&self) -> [(Vec2, f64, f64); 2] {
        let g = &self.geometry;
        [
            (g.a1(), (g.l1 - g.l3).abs(), g.l1 + g.l3),
            (g.a2(), (g.l2 - g.l4).abs(), g.l2 + g.l4),
        ]
    }
}

impl Rig for FiveBarRig {
    type State = FiveBarState;
    const MECH: Mechanism = Mechanism::FiveBar;

    /// Elbows up with both cranks vertical when that closes, otherwise the
    /// best-conditioned point on the symmetry line.
    fn default_state(&self) -> FiveBarState {
        let g = &self.geometry;
        if let Ok(s) = fivebar_fk(g, FRAC_PI_2, FRAC_PI_2, AssemblyMode::AM1) {
            if !s.singular && s.working_mode == WorkingMode::WM1 {
                return s;
            }
        }
        let reach = (g.l1 + g.l3).max(g.l2 + g.l4);
        let x = 0.5 * g.l0;
        let score = |s: &FiveBarState| (fivebar_det_a(s, g) * fivebar_det_b(s, g)).abs();
        (0..=200)
            .filter_map(|k| fivebar_ik(g, Vec2::new(x, reach * (1.0 - k as f64 / 100.0)), WorkingMode::WM1).ok())
            .fold(None::<FiveBarState>, |best, s| match best {
                Some(b) if score(&b) >= score(&s) => Some(b),
                _ => Some(s),
            })
            .or_else(|| fivebar_fk(g, FRAC_PI_2, FRAC_PI_2, AssemblyMode::AM1).ok())
            .expect("validated five-bar geometry has a reachable pose")
    }

    fn solve(&self, p: Vec2, like: &FiveBarState) -> Result<FiveBarState, KinematicsError> {
        fivebar_ik(&self.geometry, p, like.working_mode)
    }

    /// Alternating projection onto the two leg annuli.
    fn project(&self, p: Vec2) -> Vec2 {
        let [(c1, lo1, hi1), (c2, lo2, hi2)] = self.leg_ranges();
        let mut q = p;
        for _ in 0..PROJECTION_ITERS {
            let next = project_annulus(project_annulus(q, c1, lo1, hi1), c2, lo2, hi2);
            if next == q {
                break;
            }
            q = next;
        }
        q
    }

    fn switch(&self, state: &FiveBarState, change: ModeChange) -> Result<FiveBarState, EngineError> {
        if change.posture.is_some() {
            return Err(EngineError::InvalidValue(
                "the five-bar takes working and assembly modes".into(),
            ));
        }
        let wants_wm = change.working_mode.filter(|wm| *wm != state.working_mode);
        let wants_am = change.assembly_mode.filter(|am| *am != state.assembly_mode);
        if wants_wm.is_none() && wants_am.is_none() {
            return Ok(*state);
        }
        if state.singular {
            return Err(EngineError::Rejected(
                "branches merge here; move off the singularity first".into(),
            ));
        }
        let rejected = |e: KinematicsError| EngineError::Rejected(e.to_string());
        let mut s = *state;
        if let Some(wm) = wants_wm {
            s = fivebar_ik(&self.geometry, s.p, wm).map_err(rejected)?;
        }
        if let Some(am) = change.assembly_mode.filter(|am| *am != s.assembly_mode) {
            s = fivebar_fk(&self.geometry, s.theta1, s.theta2, am).map_err(rejected)?;
        }
        Ok(s)
    }

    fn position(state: &FiveBarState) -> Vec2 {
        state.p
    }

    fn labels(state: &FiveBarState) -> BranchLabels {
        BranchLabels::FiveBar {
            working_mode: state.working_mode,
            assembly_mode: state.assembly_mode,
        }
    }

    fn singular(state: &FiveBarState) -> bool {
        state.singular
    }

    fn angles(state: &FiveBarState) -> Vec<f64> {
        state.angles().to_vec()
    }

    fn atlas_mechanism(&self) -> AtlasMechanism {
        AtlasMechanism::FiveBar {
            geometry: self.geometry,
        }
    }

    fn geometry_hash(&self) -> u64 {
        let g = &self.geometry;
        hash_bits([g.l0, g.l1, g.l2, g.l3, g.l4])
    }

    fn echo(&self) -> GeometryEcho {
        let g = &self.geometry;
        GeometryEcho {
            lengths: vec![g.l0, g.l1, g.l2, g.l3, g.l4],
            joint_limits: None,
            limit_margin: None,
        }
    }

    fn fields(&self, state: &FiveBarState) -> Vec<(FieldKind, FieldMode)> {
        let mode = FieldMode::working(state.working_mode);
        [
            FieldKind::FiveBarDirect,
            FieldKind::FiveBarInverse,
            FieldKind::FiveBarComposed,
        ]
        .into_iter()
        .map(|k| (k, mode))
        .collect()
    }

    fn normalization_fields(&self, state: &FiveBarState) -> (FieldMode, Vec<FieldKind>) {
        (
            FieldMode::working(state.working_mode),
            vec![FieldKind::FiveBarDirect, FieldKind::FiveBarInverse],
        )
    }

    fn aspect_field(&self, state: &FiveBarState, mode: RenderMode) -> (FieldKind, FieldMode) {
        (mode.field_kind(), FieldMode::working(state.working_mode))
    }

    fn analytic_normalization(&self) -> Normalization {
        let g = &self.geometry;
        Normalization {
            serial: None,
            direct: Some(g.l3 * g.l4),
            inverse: Some(g.l1 * g.l3 * g.l2 * g.l4),
        }
    }

    fn boundary_definer(&self, state: &FiveBarState, norm: &Normalization, mode: RenderMode) -> f64 {
        let pose = Pose::FiveBar {
            geometry: &self.geometry,
            state,
        };
        boundary_definer(pose, norm, mode).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_poses() {
        let s = SerialRig {
            geometry: SerialGeometry::default(),
            limit_margin: 0.3,
        }
        .default_state();
        assert_eq!(s.posture, Posture::ElbowPlus);
        assert!(!s.singular);
        let f = FiveBarRig {
            geometry: FiveBarGeometry::default(),
        }
        .default_state();
        assert_eq!(f.working_mode, WorkingMode::WM1);
        assert!((f.p - Vec2::new(1.0, 2.0)).norm() < 1e-12);
        let odd = FiveBarRig {
            geometry: FiveBarGeometry::new(2.0, 1.0, 1.0, 1.2, 1.2).unwrap(),
        };
        let s = odd.default_state();
        assert!(odd.solve(s.p, &s).is_ok());
    }

    #[test]
    fn projections_land_in_workspace() {
        let rig = FiveBarRig {
            geometry: FiveBarGeometry::default(),
        };
        let like = rig.default_state();
        for p in [Vec2::new(1.0, 5.0), Vec2::new(-3.0, 0.0), Vec2::new(4.0, -1.0)] {
            let q = rig.project(p);
            assert!(rig.solve(q, &like).is_ok(), "{p:?} -> {q:?}");
        }
        let serial = SerialRig {
            geometry: SerialGeometry::default(),
            limit_margin: 0.3,
        };
        let q = serial.project(Vec2::new(3.0, 4.0));
        assert!((q - Vec2::new(1.2, 1.6)).norm() < 1e-15);
    }

    #[test]
    fn hash_tracks_geometry() {
        let a = FiveBarRig {
            geometry: FiveBarGeometry::default(),
        };
        let mut b = a.clone();
        assert_eq!(a.geometry_hash(), b.geometry_hash());
        b.geometry.l3 = 1.5;
        assert_ne!(a.geometry_hash(), b.geometry_hash());
    }
}
