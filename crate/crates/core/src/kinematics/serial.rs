use serde::{Deserialize, Serialize};

use super::{elbow_sine, solve_two_link, Interval, KinematicsError, Posture};
use crate::geometry::{sin_diff, Vec2};

/// Link lengths and optional joint limits of the 2R arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerialGeometry {
    pub l1: f64,
    pub l2: f64,
    /// Limits on theta1 and theta2, in radians.
    #[serde(default)]
    pub joint_limits: [Option<Interval>; 2],
}

impl Default for SerialGeometry {
    fn default() -> Self {
        SerialGeometry {
            l1: 1.0,
            l2: 1.0,
            joint_limits: [None, None],
        }
    }
}

impl SerialGeometry {
    pub fn new(l1: f64, l2: f64) -> Result<Self, KinematicsError> {
        let g = SerialGeometry {
            l1,
            l2,
            joint_limits: [None, None],
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_limits(mut self, theta1: Option<Interval>, theta2: Option<Interval>) -> Result<Self, KinematicsError> {
        self.joint_limits = [theta1, theta2];
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.l1 > 0.0 && self.l2 > 0.0 && self.l1.is_finite() && self.l2.is_finite()) {
            return Err(KinematicsError::InvalidGeometry(format!(
                "serial link lengths must be positive, got l1={} l2={}",
                self.l1, self.l2
            )));
        }
        for lim in self.joint_limits.iter().flatten() {
            lim.validate()?;
        }
        Ok(())
    }

    pub fn has_limits(&self) -> bool {
        self.joint_limits.iter().any(Option::is_some)
    }

    pub fn inner_radius(&self) -> f64 {
        (self.l1 - self.l2).abs()
    }

    pub fn outer_radius(&self) -> f64 {
        self.l1 + self.l2
    }

    /// First joint whose limits `(theta1, theta2)` violates, 1-based.
    pub fn violated_joint(&self, theta1: f64, theta2: f64) -> Option<(u8, f64)> {
        [theta1, theta2]
            .into_iter()
            .zip(self.joint_limits.iter())
            .enumerate()
            .find_map(|(k, (theta, lim))| match lim {
                Some(l) if !l.contains(theta) => Some((k as u8 + 1, theta)),
                _ => None,
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerialState {
    pub theta1: f64,
    pub theta2: f64,
    pub posture: Posture,
    /// Both postures coincide here (arm stretched or folded).
    pub singular: bool,
    pub p: Vec2,
}

impl SerialState {
    /// State at the given joint angles, classifying the posture. A singular
    /// pose keeps `fallback` as its label.
    pub fn from_angles(geom: &SerialGeometry, theta1: f64, theta2: f64, fallback: Posture) -> Self {
        let classified = Posture::classify(elbow_sine(theta1, theta2));
        SerialState {
            theta1,
            theta2,
            posture: classified.unwrap_or(fallback),
            singular: classified.is_none(),
            p: serial_fk(geom, theta1, theta2),
        }
    }
}

pub fn serial_fk(geom: &SerialGeometry, theta1: f64, theta2: f64) -> Vec2 {
    Vec2::from_angle(theta1) * geom.l1 + Vec2::from_angle(theta2) * geom.l2
}

/// Inverse kinematics on the requested posture. On the workspace rims both
/// postures merge and either request returns the single solution.
pub fn serial_ik(geom: &SerialGeometry, p: Vec2, posture: Posture) -> Result<SerialState, KinematicsError> {
    let sol = solve_two_link(Vec2::ZERO, geom.l1, geom.l2, p, posture)
        .map_err(|distance| KinematicsError::OutOfWorkspace { leg: None, distance })?;
    if let Some((joint, angle)) = geom.violated_joint(sol.proximal, sol.distal) {
        return Err(KinematicsError::JointLimitViolation { joint, angle });
    }
    Ok(SerialState {
        theta1: sol.proximal,
        theta2: sol.distal,
        posture,
        singular: sol.singular,
        p: serial_fk(geom, sol.proximal, sol.distal),
    })
}

/// Jacobian determinant `l1 l2 sin(theta1 - theta2)`; zero exactly when the
/// links are aligned.
pub fn serial_det_j(geom: &SerialGeometry, theta1: f64, theta2: f64) -> f64 {
    geom.l1 * geom.l2 * sin_diff(theta1, theta2)
}

/// Largest per-joint limit proximity; 0 when the arm has no limits.
pub fn joint_limit_index(geom: &SerialGeometry, theta1: f64, theta2: f64, margin: f64) -> f64 {
    [theta1, theta2]
        .into_iter()
        .zip(geom.joint_limits.iter())
        .filter_map(|(theta, lim)| lim.map(|l| l.proximity(theta, margin)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle_distance;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    fn unit() -> SerialGeometry {
        SerialGeometry::default()
    }

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        a.distance(b) < tol
    }

    #[test]
    fn fk_examples() {
        assert!(close(serial_fk(&unit(), 0.0, 0.0), Vec2::new(2.0, 0.0), 1e-15));
        assert!(close(serial_fk(&unit(), 0.0, FRAC_PI_2), Vec2::new(1.0, 1.0), 1e-15));
        let g = SerialGeometry::new(2.0, 1.0).unwrap();
        assert!(close(serial_fk(&g, PI, 0.0), Vec2::new(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn ik_branches_of_unit_square_corner() {
        let plus = serial_ik(&unit(), Vec2::new(1.0, 1.0), Posture::ElbowPlus).unwrap();
        assert!(plus.theta1.abs() < 1e-15);
        assert!((plus.theta2 - FRAC_PI_2).abs() < 1e-15);
        let minus = serial_ik(&unit(), Vec2::new(1.0, 1.0), Posture::ElbowMinus).unwrap();
        assert!((minus.theta1 - FRAC_PI_2).abs() < 1e-15);
        assert!(minus.theta2.abs() < 1e-15);
    }

    #[test]
    fn ik_on_outer_rim_is_unique() {
        for posture in [Posture::ElbowPlus, Posture::ElbowMinus] {
            let s = serial_ik(&unit(), Vec2::new(2.0, 0.0), posture).unwrap();
            assert_eq!((s.theta1, s.theta2), (0.0, 0.0));
            assert!(s.singular);
        }
    }

    // Frozen from the sweep-and-bisect oracle in `ik_matches_sweep_oracle`.
    const ORACLE_MINUS_HALF_HALF: (f64, f64) = (1.994827366285637, -0.4240310394907404);

    #[test]
    fn ik_elbow_minus_at_half_half() {
        let s = serial_ik(&unit(), Vec2::new(0.5, 0.5), Posture::ElbowMinus).unwrap();
        assert!((s.theta1 - ORACLE_MINUS_HALF_HALF.0).abs() < 1e-9);
        assert!((s.theta2 - ORACLE_MINUS_HALF_HALF.1).abs() < 1e-9);
        assert!(close(
            serial_fk(&unit(), s.theta1, s.theta2),
            Vec2::new(0.5, 0.5),
            1e-12
        ));
    }

    /// Dense 4000 x 4000 sweep of joint space for |FK - p|, then bisection on
    /// theta1 for the elbow-circle condition |p - l1 u(theta1)| = l2.
    fn sweep_oracle(geom: &SerialGeometry, p: Vec2) -> Vec<(f64, f64)> {
        const N: usize = 4000;
        let step = 2.0 * PI / N as f64;
        let angles: Vec<f64> = (0..N).map(|k| -PI + k as f64 * step).collect();
        let links1: Vec<Vec2> = angles.iter().map(|&a| Vec2::from_angle(a) * geom.l1).collect();
        let links2: Vec<Vec2> = angles.iter().map(|&a| Vec2::from_angle(a) * geom.l2).collect();
        // best theta2 index for every theta1 index
        let residual: Vec<f64> = links1
            .iter()
            .map(|e| {
                links2
                    .iter()
                    .map(|f| (*e + *f).distance(p))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut minima = Vec::new();
        for k in 0..N {
            let prev = residual[(k + N - 1) % N];
            let next = residual[(k + 1) % N];
            if residual[k] <= prev && residual[k] < next {
                minima.push(angles[k]);
            }
        }
        let g = |t: f64| (p - Vec2::from_angle(t) * geom.l1).norm() - geom.l2;
        minima
            .into_iter()
            .map(|t0| {
                // the elbow-circle residual changes sign within two cells of the minimum
                let (mut lo, mut hi) = (t0 - 2.0 * step, t0 + 2.0 * step);
                let mut best = t0;
                for k in 0..40 {
                    let a = t0 - 2.0 * step + k as f64 * step / 10.0;
                    let b = a + step / 10.0;
                    if g(a) * g(b) <= 0.0 {
                        lo = a;
                        hi = b;
                        break;
                    }
                    if g(a).abs() < g(best).abs() {
                        best = a;
                    }
                }
                if g(lo) * g(hi) <= 0.0 {
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if g(lo) * g(mid) <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    best = 0.5 * (lo + hi);
                }
                let theta2 = (p - Vec2::from_angle(best) * geom.l1).angle();
                (best, theta2)
            })
            .collect()
    }

    #[test]
    fn ik_matches_sweep_oracle() {
        let p = Vec2::new(0.5, 0.5);
        let sols = sweep_oracle(&unit(), p);
        assert_eq!(sols.len(), 2);
        let minus = sols.iter().find(|(a, b)| sin_diff(*b, *a) < 0.0).copied().unwrap();
        let ik = serial_ik(&unit(), p, Posture::ElbowMinus).unwrap();
        assert!(angle_distance(ik.theta1, minus.0) < 1e-9, "{minus:?} vs {ik:?}");
        assert!(angle_distance(ik.theta2, minus.1) < 1e-9, "{minus:?} vs {ik:?}");
        assert!(angle_distance(ORACLE_MINUS_HALF_HALF.0, minus.0) < 1e-9);
        assert!(angle_distance(ORACLE_MINUS_HALF_HALF.1, minus.1) < 1e-9);
    }

    #[test]
    fn ik_errors() {
        let err = serial_ik(&unit(), Vec2::new(2.1, 0.0), Posture::ElbowPlus).unwrap_err();
        assert!(
            matches!(err, KinematicsError::OutOfWorkspace { leg: None, distance } if (distance - 0.1).abs() < 1e-12)
        );
        let g = SerialGeometry::new(1.0, 0.4).unwrap();
        assert!(serial_ik(&g, Vec2::new(0.3, 0.0), Posture::ElbowPlus).is_err());

        let limited = unit()
            .with_limits(Some(Interval::new(-0.5, 0.5).unwrap()), None)
            .unwrap();
        // (1,1): ElbowMinus needs theta1 = pi/2
        let err = serial_ik(&limited, Vec2::new(1.0, 1.0), Posture::ElbowMinus).unwrap_err();
        assert!(matches!(err, KinematicsError::JointLimitViolation { joint: 1, .. }));
        assert!(serial_ik(&limited, Vec2::new(1.0, 1.0), Posture::ElbowPlus).is_ok());
    }

    #[test]
    fn det_examples() {
        assert!((serial_det_j(&unit(), 0.0, FRAC_PI_2) + 1.0).abs() < 1e-15);
        for phi in [-3.0, 0.0, 0.4, 2.9] {
            assert_eq!(serial_det_j(&unit(), phi, phi), 0.0);
        }
        let g = SerialGeometry::new(2.0, 3.0).unwrap();
        assert!((serial_det_j(&g, FRAC_PI_6, 0.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn joint_limit_index_examples() {
        assert_eq!(joint_limit_index(&unit(), 0.3, 0.1, 0.1), 0.0);
        let g = unit()
            .with_limits(
                Some(Interval::new(-1.0, 1.0).unwrap()),
                Some(Interval::new(-2.0, 2.0).unwrap()),
            )
            .unwrap();
        assert_eq!(joint_limit_index(&g, 0.0, 0.0, 0.1), 0.0);
        assert_eq!(joint_limit_index(&g, 1.0, 0.0, 0.1), 1.0);
        assert!((joint_limit_index(&g, 0.0, 2.0 - 0.05, 0.1) - 0.5).abs() < 1e-12);
        assert!((joint_limit_index(&g, -0.97, 1.95, 0.1) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn state_classification() {
        let s = SerialState::from_angles(&unit(), 0.2, 0.2, Posture::ElbowMinus);
        assert!(s.singular);
        assert_eq!(s.posture, Posture::ElbowMinus);
        let s = SerialState::from_angles(&unit(), 0.0, 1.0, Posture::ElbowMinus);
        assert_eq!(s.posture, Posture::ElbowPlus);
        assert!(!s.singular);
    }
}
