use serde::{Deserialize, Serialize};

use super::{
    elbow_sine, solve_two_link, AssemblyMode, KinematicsError, Posture, WorkingMode, SINGULAR_EPS, WORKSPACE_EPS,
};
use crate::geometry::{angle_distance, sin_diff, Vec2};

/// Five-bar link lengths. The fixed pivots are `A1 = (0, 0)` and `A2 = (l0, 0)`;
/// `l1`/`l2` are the actuated links, `l3`/`l4` the distal links meeting at P.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveBarGeometry {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

impl Default for FiveBarGeometry {
    fn default() -> Self {
        let d = std::f64::consts::SQRT_2;
        FiveBarGeometry {
            l0: 2.0,
            l1: 1.0,
            l2: 1.0,
            l3: d,
            l4: d,
        }
    }
}

impl FiveBarGeometry {
    pub fn new(l0: f64, l1: f64, l2: f64, l3: f64, l4: f64) -> Result<Self, KinematicsError> {
        let g = FiveBarGeometry { l0, l1, l2, l3, l4 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let lengths = [self.l0, self.l1, self.l2, self.l3, self.l4];
        if lengths.iter().all(|l| l.is_finite() && *l > 0.0) {
            Ok(())
        } else {
            Err(KinematicsError::InvalidGeometry(format!(
                "five-bar lengths must be positive, got {lengths:?}"
            )))
        }
    }

    pub fn a1(&self) -> Vec2 {
        Vec2::ZERO
    }

    pub fn a2(&self) -> Vec2 {
        Vec2::new(self.l0, 0.0)
    }

    pub fn elbows(&self, theta1: f64, theta2: f64) -> (Vec2, Vec2) {
        (
            self.a1() + Vec2::from_angle(theta1) * self.l1,
            self.a2() + Vec2::from_angle(theta2) * self.l2,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveBarState {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub working_mode: WorkingMode,
    pub assembly_mode: AssemblyMode,
    /// Some branch sine vanishes: a leg is stretched/folded or the distal
    /// links are aligned.
    pub singular: bool,
    pub p: Vec2,
}

impl FiveBarState {
    pub fn angles(&self) -> [f64; 4] {
        [self.theta1, self.theta2, self.theta3, self.theta4]
    }

    /// Largest distance between the two legs' computed end points.
    pub fn closure_error(&self, geom: &FiveBarGeometry) -> f64 {
        let (e1, e2) = geom.elbows(self.theta1, self.theta2);
        let p1 = e1 + Vec2::from_angle(self.theta3) * geom.l3;
        let p2 = e2 + Vec2::from_angle(self.theta4) * geom.l4;
        p1.distance(self.p).max(p2.distance(self.p))
    }

    fn same_pose(&self, other: &FiveBarState) -> bool {
        self.angles()
            .iter()
            .zip(other.angles().iter())
            .all(|(a, b)| angle_distance(*a, *b) < 1e-9)
    }
}

/// Builds a state from all four angles, classifying branches from the sines.
/// Labels of vanishing sines fall back to the supplied ones.
fn classify(thetas: [f64; 4], p: Vec2, fallback_wm: WorkingMode, fallback_am: AssemblyMode) -> FiveBarState {
    let [t1, t2, t3, t4] = thetas;
    let (fb1, fb2) = fallback_wm.legs();
    let leg1 = Posture::classify(elbow_sine(t1, t3));
    let leg2 = Posture::classify(elbow_sine(t2, t4));
    let am_sine = sin_diff(t4, t3);
    let am = if am_sine > SINGULAR_EPS {
        Some(AssemblyMode::AM1)
    } else if am_sine < -SINGULAR_EPS {
        Some(AssemblyMode::AM2)
    } else {
        None
    };
    FiveBarState {
        theta1: t1,
        theta2: t2,
        theta3: t3,
        theta4: t4,
        working_mode: WorkingMode::from_legs(leg1.unwrap_or(fb1), leg2.unwrap_or(fb2)),
        assembly_mode: am.unwrap_or(fallback_am),
        singular: leg1.is_none() || leg2.is_none() || am.is_none(),
        p,
    }
}

/// Direct kinematics: P is the intersection of the circle of radius `l3`
/// around elbow 1 and radius `l4` around elbow 2 selected by `assembly`.
/// Tangent circles return their single contact point for either mode.
pub fn fivebar_fk(
    geom: &FiveBarGeometry,
    theta1: f64,
    theta2: f64,
    assembly: AssemblyMode,
) -> Result<FiveBarState, KinematicsError> {
    let (e1, e2) = geom.elbows(theta1, theta2);
    let span = e2 - e1;
    let dist = span.norm();
    let gap_out = dist - (geom.l3 + geom.l4);
    let gap_in = (geom.l3 - geom.l4).abs() - dist;
    if gap_out > WORKSPACE_EPS {
        return Err(KinematicsError::NoAssembly { gap: gap_out });
    }
    if gap_in > WORKSPACE_EPS || dist <= f64::EPSILON * (geom.l3 + geom.l4) {
        return Err(KinematicsError::NoAssembly { gap: gap_in.max(0.0) });
    }
    let along = span * (1.0 / dist);
    let a = (dist * dist + geom.l3 * geom.l3 - geom.l4 * geom.l4) / (2.0 * dist);
    let h = (geom.l3 * geom.l3 - a * a).max(0.0).sqrt();
    // +perp puts P where sin(theta4 - theta3) > 0
    let p = e1 + along * a + along.perp() * (h * assembly.sign());
    let theta3 = (p - e1).angle();
    let theta4 = (p - e2).angle();
    let fallback_wm = WorkingMode::from_legs(
        Posture::classify(elbow_sine(theta1, theta3)).unwrap_or(Posture::ElbowPlus),
        Posture::classify(elbow_sine(theta2, theta4)).unwrap_or(Posture::ElbowPlus),
    );
    Ok(classify([theta1, theta2, theta3, theta4], p, fallback_wm, assembly))
}

/// Inverse kinematics: each leg solved as a two-link chain on the elbow branch
/// given by `mode`.
pub fn fivebar_ik(geom: &FiveBarGeometry, p: Vec2, mode: WorkingMode) -> Result<FiveBarState, KinematicsError> {
    let (elbow1, elbow2) = mode.legs();
    let leg1 = solve_two_link(geom.a1(), geom.l1, geom.l3, p, elbow1)
        .map_err(|distance| KinematicsError::OutOfWorkspace { leg: Some(1), distance })?;
    let leg2 = solve_two_link(geom.a2(), geom.l2, geom.l4, p, elbow2)
        .map_err(|distance| KinematicsError::OutOfWorkspace { leg: Some(2), distance })?;
    let thetas = [leg1.proximal, leg2.proximal, leg1.distal, leg2.distal];
    let mut state = classify(thetas, p, mode, AssemblyMode::AM1);
    state.working_mode = mode;
    state.singular |= leg1.singular || leg2.singular;
    Ok(state)
}

/// Every distinct inverse-kinematic solution at `p`, in working-mode order.
pub fn fivebar_ik_all(geom: &FiveBarGeometry, p: Vec2) -> Vec<FiveBarState> {
    let mut out: Vec<FiveBarState> = Vec::with_capacity(4);
    for wm in WorkingMode::ALL {
        if let Ok(s) = fivebar_ik(geom, p, wm) {
            if !out.iter().any(|o| o.same_pose(&s)) {
                out.push(s);
            }
        }
    }
    out
}

/// Every distinct direct-kinematic solution for the actuated pair.
pub fn fivebar_fk_all(geom: &FiveBarGeometry, theta1: f64, theta2: f64) -> Vec<FiveBarState> {
    let mut out: Vec<FiveBarState> = Vec::with_capacity(2);
    for am in [AssemblyMode::AM1, AssemblyMode::AM2] {
        if let Ok(s) = fivebar_fk(geom, theta1, theta2, am) {
            if !out.iter().any(|o| o.same_pose(&s)) {
                out.push(s);
            }
        }
    }
    out
}

/// det A = l3 l4 sin(theta4 - theta3): vanishes when the distal links align.
pub fn fivebar_det_a(state: &FiveBarState, geom: &FiveBarGeometry) -> f64 {
    geom.l3 * geom.l4 * sin_diff(state.theta4, state.theta3)
}

/// Diagonal entries of B: `(l1 l3 sin(theta3 - theta1), l2 l4 sin(theta4 - theta2))`.
pub fn fivebar_det_b_factors(state: &FiveBarState, geom: &FiveBarGeometry) -> (f64, f64) {
    (
        geom.l1 * geom.l3 * sin_diff(state.theta3, state.theta1),
        geom.l2 * geom.l4 * sin_diff(state.theta4, state.theta2),
    )
}

/// det B: vanishes when either leg is stretched or folded.
pub fn fivebar_det_b(state: &FiveBarState, geom: &FiveBarGeometry) -> f64 {
    let (b1, b2) = fivebar_det_b_factors(state, geom);
    b1 * b2
}
