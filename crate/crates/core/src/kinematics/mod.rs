//! Forward and inverse kinematics of the 2R serial arm and the five-bar linkage.
//!
//! All angles are absolute (measured from the +x axis). The serial arm is
//! based at the origin; the five-bar's fixed pivots sit at `(0, 0)` and
//! `(l0, 0)`.

mod fivebar;
mod serial;

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{sin_diff, wrap_angle, Vec2};

pub use fivebar::{
    fivebar_det_a, fivebar_det_b, fivebar_det_b_factors, fivebar_fk, fivebar_fk_all, fivebar_ik, fivebar_ik_all,
    FiveBarGeometry, FiveBarState,
};
pub use serial::{joint_limit_index, serial_det_j, serial_fk, serial_ik, SerialGeometry, SerialState};

/// Workspace membership tolerance, in metres.
pub const WORKSPACE_EPS: f64 = 1e-9;

/// A branch sine at or below this magnitude is treated as singular.
pub const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("point out of workspace{} by {distance:.3e} m", leg.map(|l| format!(" of leg {l}")).unwrap_or_default())]
    OutOfWorkspace { leg: Option<u8>, distance: f64 },
    #[error("joint {joint} at {angle:.6} rad violates its limits")]
    JointLimitViolation { joint: u8, angle: f64 },
    #[error("distal circles do not meet (gap {gap:.3e} m)")]
    NoAssembly { gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Serial,
    #[serde(rename = "fivebar")]
    FiveBar,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Serial => "serial",
            Mechanism::FiveBar => "fivebar",
        })
    }
}

/// Elbow branch of a two-link chain: `ElbowPlus` when sin(distal - proximal) > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Posture {
    ElbowPlus,
    ElbowMinus,
}

impl Posture {
    pub fn sign(self) -> f64 {
        match self {
            Posture::ElbowPlus => 1.0,
            Posture::ElbowMinus => -1.0,
        }
    }

    pub fn flipped(self) -> Posture {
        match self {
            Posture::ElbowPlus => Posture::ElbowMinus,
            Posture::ElbowMinus => Posture::ElbowPlus,
        }
    }

    /// Classifies a branch sine; `None` when it is singular.
    pub fn classify(sine: f64) -> Option<Posture> {
        if sine > SINGULAR_EPS {
            Some(Posture::ElbowPlus)
        } else if sine < -SINGULAR_EPS {
            Some(Posture::ElbowMinus)
        } else {
            None
        }
    }
}

/// Inverse-kinematic branch of the five-bar: one elbow choice per leg.
///
/// `WM1` is (leg 1 minus, leg 2 plus), the elbows-outward pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkingMode {
    WM1,
    WM2,
    WM3,
    WM4,
}

impl WorkingMode {
    pub const ALL: [WorkingMode; 4] = [WorkingMode::WM1, WorkingMode::WM2, WorkingMode::WM3, WorkingMode::WM4];

    pub fn legs(self) -> (Posture, Posture) {
        use Posture::*;
        match self {
            WorkingMode::WM1 => (ElbowMinus, ElbowPlus),
            WorkingMode::WM2 => (ElbowPlus, ElbowMinus),
            WorkingMode::WM3 => (ElbowPlus, ElbowPlus),
            WorkingMode::WM4 => (ElbowMinus, ElbowMinus),
        }
    }

    pub fn from_legs(leg1: Posture, leg2: Posture) -> WorkingMode {
        use Posture::*;
        match (leg1, leg2) {
            (ElbowMinus, ElbowPlus) => WorkingMode::WM1,
            (ElbowPlus, ElbowMinus) => WorkingMode::WM2,
            (ElbowPlus, ElbowPlus) => WorkingMode::WM3,
            (ElbowMinus, ElbowMinus) => WorkingMode::WM4,
        }
    }

    /// Working mode of the configuration mirrored across the base's bisector.
    pub fn mirrored(self) -> WorkingMode {
        let (a, b) = self.legs();
        WorkingMode::from_legs(b.flipped(), a.flipped())
    }
}

/// Direct-kinematic branch of the five-bar: `AM1` when sin(theta4 - theta3) > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssemblyMode {
    AM1,
    AM2,
}

impl AssemblyMode {
    pub fn sign(self) -> f64 {
        match self {
            AssemblyMode::AM1 => 1.0,
            AssemblyMode::AM2 => -1.0,
        }
    }

    pub fn flipped(self) -> AssemblyMode {
        match self {
            AssemblyMode::AM1 => AssemblyMode::AM2,
            AssemblyMode::AM2 => AssemblyMode::AM1,
        }
    }
}

/// Branch labels of whichever mechanism produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BranchLabels {
    Serial {
        posture: Posture,
    },
    FiveBar {
        working_mode: WorkingMode,
        assembly_mode: AssemblyMode,
    },
}

impl fmt::Display for BranchLabels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchLabels::Serial { posture } => write!(f, "{posture:?}"),
            BranchLabels::FiveBar {
                working_mode,
                assembly_mode,
            } => write!(f, "{working_mode:?}-{assembly_mode:?}"),
        }
    }
}

/// Closed angular interval `[lo, hi]`, interpreted modulo 2 pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval { lo: v[0], hi: v[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, KinematicsError> {
        let i = Interval { lo, hi };
        i.validate()?;
        Ok(i)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo >= self.hi || self.hi - self.lo > TAU {
            return Err(KinematicsError::InvalidGeometry(format!(
                "joint limits [{}, {}] need lo < hi and hi - lo <= 2 pi",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn full_turn(&self) -> bool {
        self.hi - self.lo >= TAU
    }

    /// Representative of `theta` in `[lo, lo + 2 pi)`.
    fn lift(&self, theta: f64) -> f64 {
        self.lo + (theta - self.lo).rem_euclid(TAU)
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.full_turn() || self.lift(theta) <= self.hi
    }

    /// Distance to the nearer limit, or `None` outside the interval.
    pub fn clearance(&self, theta: f64) -> Option<f64> {
        let t = self.lift(theta);
        if t > self.hi && !self.full_turn() {
            return None;
        }
        Some((t - self.lo).min(self.hi - t).max(0.0))
    }

    /// 0 at least `margin` away from both limits, ramping linearly to 1 at a
    /// limit, and 1 outside.
    pub fn proximity(&self, theta: f64, margin: f64) -> f64 {
        match self.clearance(theta) {
            None => 1.0,
            Some(c) if c >= margin => 0.0,
            Some(c) => 1.0 - c / margin,
        }
    }
}

/// Solution of one two-link chain rooted at `base`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TwoLinkSolution {
    pub proximal: f64,
    pub distal: f64,
    pub singular: bool,
}

/// Inverse kinematics of a two-link chain (`l_prox` at the base, `l_dist` to
/// the tip) for the requested elbow branch. Returns the signed distance outside
/// the reachable annulus on failure.
pub(crate) fn solve_two_link(
    base: Vec2,
    l_prox: f64,
    l_dist: f64,
    p: Vec2,
    elbow: Posture,
) -> Result<TwoLinkSolution, f64> {
    let rel = p - base;
    let r = rel.norm();
    let outer = l_prox + l_dist;
    let inner = (l_prox - l_dist).abs();
    if r > outer + WORKSPACE_EPS {
        return Err(r - outer);
    }
    if r < inner - WORKSPACE_EPS {
        return Err(inner - r);
    }
    let denom = 2.0 * l_prox * l_dist;
    let cos_phi = ((r * r - l_prox * l_prox - l_dist * l_dist) / denom).clamp(-1.0, 1.0);
    // (outer^2 - r^2)(r^2 - inner^2) factored to keep precision near the rims
    let span = ((outer - r).max(0.0) * (outer + r)) * ((r - inner).max(0.0) * (r + inner));
    let sin_mag = span.sqrt() / denom;
    let sin_phi = elbow.sign() * sin_mag.min(1.0);
    let phi = sin_phi.atan2(cos_phi);
    let proximal = rel.angle() - (l_dist * sin_phi).atan2(l_prox + l_dist * cos_phi);
    Ok(TwoLinkSolution {
        proximal: wrap_angle(proximal),
        distal: wrap_angle(proximal + phi),
        singular: sin_mag <= SINGULAR_EPS,
    })
}

/// Signed sine used for branch classification of a two-link chain.
pub(crate) fn elbow_sine(proximal: f64, distal: f64) -> f64 {
    sin_diff(distal, proximal)
}
