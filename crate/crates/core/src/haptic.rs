//! Friction feedback: boundary definer, the piecewise friction law, coulomb
//! friction and a stick-slip proxy standing in for the haptic device.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::field::{fivebar_raw, serial_raw};
use crate::atlas::FieldKind;
use crate::geometry::Vec2;
use crate::kinematics::{FiveBarGeometry, FiveBarState, SerialGeometry, SerialState};

/// Speeds below this count as rest for sgn(v).
pub const VELOCITY_EPS: f64 = 1e-9;
pub const DEFAULT_K_PULL: f64 = 50.0;
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HapticError {
    #[error("no atlas normalization available for {0:?}")]
    NoAtlas(FieldKind),
    #[error("invalid friction settings: {0}")]
    InvalidConfig(String),
}

/// Which singularities produce friction on the five-bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    /// Parallel singularities (det A) inside the workspace.
    Inside,
    /// Serial singularities (det B) along the workspace boundary.
    Outside,
    Composed,
}

impl RenderMode {
    pub fn field_kind(self) -> FieldKind {
        match self {
            RenderMode::Inside => FieldKind::FiveBarDirect,
            RenderMode::Outside => FieldKind::FiveBarInverse,
            RenderMode::Composed => FieldKind::FiveBarComposed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HapticConfig {
    /// Full friction force, N.
    pub c: f64,
    /// Friction starts below this boundary-definer value.
    pub f1: f64,
    /// Friction is at its full value below this one.
    pub f2: f64,
    pub render_mode: RenderMode,
}

impl Default for HapticConfig {
    fn default() -> Self {
        HapticConfig {
            c: 1.0,
            f1: 0.3,
            f2: 0.05,
            render_mode: RenderMode::Composed,
        }
    }
}

impl HapticConfig {
    pub fn new(c: f64, f1: f64, f2: f64, render_mode: RenderMode) -> Result<Self, HapticError> {
        let cfg = HapticConfig { c, f1, f2, render_mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HapticError> {
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(HapticError::InvalidConfig(format!("c = {} must be >= 0", self.c)));
        }
        if !(0.0 <= self.f2 && self.f2 < self.f1 && self.f1 <= 1.0) {
            return Err(HapticError::InvalidConfig(format!(
                "need 0 <= f2 < f1 <= 1, got f1 = {} f2 = {}",
                self.f1, self.f2
            )));
        }
        Ok(())
    }
}

/// Raw-index maxima of the active atlas fields; `d` is a raw index divided
/// by the matching maximum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub serial: Option<f64>,
    pub direct: Option<f64>,
    pub inverse: Option<f64>,
}

/// The pose whose danger level is rendered.
#[derive(Debug, Clone, Copy)]
pub enum Pose<'a> {
    Serial {
        geometry: &'a SerialGeometry,
        state: &'a SerialState,
        limit_margin: f64,
    },
    FiveBar {
        geometry: &'a FiveBarGeometry,
        state: &'a FiveBarState,
    },
}

fn scaled(raw: f64, max: Option<f64>, kind: FieldKind) -> Result<f64, HapticError> {
    match max {
        Some(m) if m > 0.0 => Ok((raw / m).clamp(0.0, 1.0)),
        _ => Err(HapticError::NoAtlas(kind)),
    }
}

/// Boundary definer d in [0, 1]: 1 is safe, 0 singular or at a limit.
///
/// The serial arm ignores `mode`. On the five-bar, `Composed` is the product
/// of the `Inside` and `Outside` values.
pub fn boundary_definer(pose: Pose<'_>, norm: &Normalization, mode: RenderMode) -> Result<f64, HapticError> {
    match pose {
        Pose::Serial {
            geometry,
            state,
            limit_margin,
        } => scaled(
            serial_raw(geometry, state, limit_margin),
            norm.serial,
            FieldKind::SerialCombined,
        ),
        Pose::FiveBar { geometry, state } => {
            let inside = || {
                scaled(
                    fivebar_raw(geometry, state, FieldKind::FiveBarDirect),
                    norm.direct,
                    FieldKind::FiveBarDirect,
                )
            };
            let outside = || {
                scaled(
                    fivebar_raw(geometry, state, FieldKind::FiveBarInverse),
                    norm.inverse,
                    FieldKind::FiveBarInverse,
                )
            };
            match mode {
                RenderMode::Inside => inside(),
                RenderMode::Outside => outside(),
                RenderMode::Composed => Ok(inside()? * outside()?),
            }
        }
    }
}

/// Friction force magnitude as a function of the boundary definer: zero
/// above `f1`, `c` at or below `f2`, linear in between.
pub fn friction_magnitude(cfg: &HapticConfig, d: f64) -> f64 {
    if d > cfg.f1 {
        0.0
    } else if d > cfg.f2 {
        cfg.c / (cfg.f1 - cfg.f2) * (cfg.f1 - d)
    } else {
        cfg.c
    }
}

/// Coulomb friction `-magnitude sgn(v)`, zero at rest.
pub fn coulomb_force(v: Vec2, magnitude: f64) -> Vec2 {
    let speed = v.norm();
    if speed > VELOCITY_EPS {
        v * (-magnitude / speed)
    } else {
        Vec2::ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyState {
    /// Rendered end-effector position.
    pub proxy: Vec2,
    /// Where the user's pointer is pulling.
    pub target: Vec2,
    pub stuck: bool,
    pub v: Vec2,
}

impl ProxyState {
    pub fn at(p: Vec2) -> Self {
        ProxyState {
            proxy: p,
            target: p,
            stuck: false,
            v: Vec2::ZERO,
        }
    }
}

/// One stick-slip step of the proxy towards its target.
///
/// The spring pull `k_pull (target - proxy)` must beat the friction force for
/// the proxy to move; it then advances by the excess over `k_pull`, never past
/// the target. `project(from, to)` maps the candidate back into the admissible
/// region.
pub fn proxy_step(
    state: &ProxyState,
    cfg: &HapticConfig,
    d: f64,
    dt: f64,
    k_pull: f64,
    project: impl FnOnce(Vec2, Vec2) -> Vec2,
) -> ProxyState {
    let offset = state.target - state.proxy;
    let gap = offset.norm();
    let pull = gap * k_pull;
    let friction = friction_magnitude(cfg, d);
    if pull <= friction || gap == 0.0 {
        return ProxyState {
            stuck: true,
            v: Vec2::ZERO,
            ..*state
        };
    }
    let advance = ((pull - friction) / k_pull).min(gap);
    let candidate = state.proxy + offset * (advance / gap);
    let proxy = project(state.proxy, candidate);
    let v = (proxy - state.proxy) * (1.0 / dt);
    ProxyState {
        proxy,
        target: state.target,
        stuck: proxy == state.proxy,
        v: if proxy == state.proxy { Vec2::ZERO } else { v },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSample {
    pub d: f64,
    pub magnitude: f64,
    /// Unit vector the force acts along; zero when no force acts.
    pub direction: Vec2,
}

impl ForceSample {
    pub fn force(&self) -> Vec2 {
        self.direction * self.magnitude
    }
}

/// Friction felt during the step that produced `next`: kinetic coulomb
/// friction while sliding, and while stuck the static reaction balancing the
/// spring pull.
pub fn force_sample(next: &ProxyState, cfg: &HapticConfig, d: f64, k_pull: f64) -> ForceSample {
    let friction = friction_magnitude(cfg, d);
    let (magnitude, direction) = if next.v.norm() > VELOCITY_EPS {
        (friction, coulomb_force(next.v, 1.0))
    } else {
        let pull = (next.target - next.proxy) * k_pull;
        let m = pull.norm().min(friction);
        (m, coulomb_force(pull, 1.0))
    };
    ForceSample {
        d,
        magnitude: if direction == Vec2::ZERO { 0.0 } else { magnitude },
        direction,
    }
}

/// Cursor colour: linear blend from red (d = 0) to green (d = 1).
pub fn cursor_color(d: f64) -> [f64; 3] {
    let d = d.clamp(0.0, 1.0);
    [1.0 - d, d, 0.0]
}

/// Cursor diameter: `min_diameter` when safe, twice that when singular.
pub fn cursor_diameter(d: f64, min_diameter: f64) -> f64 {
    min_diameter * (2.0 - d.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{fivebar_ik, serial_ik, Posture, WorkingMode};
    use proptest::prelude::*;

    fn cfg() -> HapticConfig {
        HapticConfig::default()
    }

    fn free(_: Vec2, to: Vec2) -> Vec2 {
        to
    }

    #[test]
    fn friction_law_examples() {
        let c = cfg();
        assert_eq!(friction_magnitude(&c, 1.0), 0.0);
        assert_eq!(friction_magnitude(&c, c.f2), c.c);
        assert!((friction_magnitude(&c, c.f2 + 1e-15) - c.c).abs() < 1e-12);
        assert!((friction_magnitude(&c, 0.5 * (c.f1 + c.f2)) - 0.5 * c.c).abs() < 1e-15);
        assert_eq!(friction_magnitude(&c, c.f1), 0.0);
        assert_eq!(friction_magnitude(&c, 0.0), c.c);
    }

    #[test]
    fn coulomb_examples() {
        assert_eq!(coulomb_force(Vec2::new(1.0, 0.0), 2.0), Vec2::new(-2.0, 0.0));
        assert_eq!(coulomb_force(Vec2::ZERO, 2.0), Vec2::ZERO);
        let f = coulomb_force(Vec2::new(3.0, 4.0), 5.0);
        assert!((f.x + 3.0).abs() < 1e-15 && (f.y + 4.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(HapticConfig::new(1.0, 0.3, 0.05, RenderMode::Inside).is_ok());
        assert!(HapticConfig::new(1.0, 0.1, 0.5, RenderMode::Inside).is_err());
        assert!(HapticConfig::new(-1.0, 0.3, 0.05, RenderMode::Inside).is_err());
        assert!(HapticConfig::new(1.0, 1.2, 0.05, RenderMode::Inside).is_err());
    }

    #[test]
    fn blocked_when_pull_below_full_friction() {
        let s = ProxyState {
            target: Vec2::new(0.01, 0.0),
            ..ProxyState::at(Vec2::ZERO)
        };
        let next = proxy_step(&s, &cfg(), 0.0, DEFAULT_DT, DEFAULT_K_PULL, free);
        assert!(next.stuck);
        assert_eq!(next.proxy, Vec2::ZERO);
        let f = force_sample(&next, &cfg(), 0.0, DEFAULT_K_PULL);
        assert!((f.magnitude - 0.5).abs() < 1e-12);
        assert!((f.direction.x + 1.0).abs() < 1e-12);
    }

    #[test]
    fn safe_zone_tracks_target_in_one_step() {
        let s = ProxyState {
            target: Vec2::new(0.01, 0.02),
            ..ProxyState::at(Vec2::ZERO)
        };
        let next = proxy_step(&s, &cfg(), 0.9, DEFAULT_DT, DEFAULT_K_PULL, free);
        assert_eq!(next.proxy, s.target);
        assert!(!next.stuck);
        let zero_c = HapticConfig { c: 0.0, ..cfg() };
        let next = proxy_step(&s, &zero_c, 0.0, DEFAULT_DT, DEFAULT_K_PULL, free);
        assert_eq!(next.proxy, s.target);
    }

    #[test]
    fn partial_slip_moves_by_excess() {
        let s = ProxyState {
            target: Vec2::new(0.1, 0.0),
            ..ProxyState::at(Vec2::ZERO)
        };
        // pull 5 N against 1 N of friction: advance (5 - 1) / 50 = 0.08 m
        let next = proxy_step(&s, &cfg(), 0.0, DEFAULT_DT, DEFAULT_K_PULL, free);
        assert!((next.proxy.x - 0.08).abs() < 1e-15);
        assert!((next.v.x - 8.0).abs() < 1e-12);
        let f = force_sample(&next, &cfg(), 0.0, DEFAULT_K_PULL);
        assert!(f.force().dot(next.v) < 0.0);
    }

    #[test]
    fn composed_is_product_of_inside_and_outside() {
        let g = FiveBarGeometry::default();
        let norm = Normalization {
            serial: None,
            direct: Some(2.0),
            inverse: Some(2.0),
        };
        for p in [Vec2::new(1.0, 2.0), Vec2::new(0.4, 0.3), Vec2::new(1.7, -1.1)] {
            let s = fivebar_ik(&g, p, WorkingMode::WM1).unwrap();
            let pose = Pose::FiveBar {
                geometry: &g,
                state: &s,
            };
            let i = boundary_definer(pose, &norm, RenderMode::Inside).unwrap();
            let o = boundary_definer(pose, &norm, RenderMode::Outside).unwrap();
            let c = boundary_definer(pose, &norm, RenderMode::Composed).unwrap();
            assert_eq!(c, i * o);
        }
    }

    #[test]
    fn inside_mode_ignores_boundary_singularity() {
        let g = FiveBarGeometry::default();
        // leg 1 stretched: det B = 0, det A large
        let p = Vec2::from_angle(1.0) * (g.l1 + g.l3);
        let s = fivebar_ik(&g, p, WorkingMode::WM1).unwrap();
        let norm = Normalization {
            serial: None,
            direct: Some(2.0),
            inverse: Some(2.0),
        };
        let pose = Pose::FiveBar {
            geometry: &g,
            state: &s,
        };
        let inside = boundary_definer(pose, &norm, RenderMode::Inside).unwrap();
        let expected = crate::kinematics::fivebar_det_a(&s, &g).abs() / 2.0;
        assert_eq!(inside, expected);
        assert!(inside > 0.3);
        assert_eq!(boundary_definer(pose, &norm, RenderMode::Outside).unwrap(), 0.0);
    }

    #[test]
    fn serial_singularity_gives_zero_and_missing_atlas_errors() {
        let g = SerialGeometry::default();
        let s = serial_ik(&g, Vec2::new(2.0, 0.0), Posture::ElbowPlus).unwrap();
        let pose = Pose::Serial {
            geometry: &g,
            state: &s,
            limit_margin: 0.3,
        };
        let norm = Normalization {
            serial: Some(1.0),
            ..Default::default()
        };
        assert_eq!(boundary_definer(pose, &norm, RenderMode::Composed).unwrap(), 0.0);
        assert_eq!(
            boundary_definer(pose, &Normalization::default(), RenderMode::Composed),
            Err(HapticError::NoAtlas(FieldKind::SerialCombined))
        );
    }

    #[test]
    fn cursor_cues() {
        assert_eq!(cursor_color(1.0), [0.0, 1.0, 0.0]);
        assert_eq!(cursor_color(0.0), [1.0, 0.0, 0.0]);
        assert_eq!(cursor_diameter(0.0, 0.05), 2.0 * cursor_diameter(1.0, 0.05));
        assert!((cursor_diameter(0.5, 1.0) - 1.5).abs() < 1e-15);
    }

    fn any_config() -> impl Strategy<Value = HapticConfig> {
        (0.0..5.0f64, 0.01..1.0f64, 0.0..1.0f64).prop_map(|(c, f1, frac)| HapticConfig {
            c,
            f1,
            f2: f1 * frac * 0.999,
            render_mode: RenderMode::Composed,
        })
    }

    proptest! {
        #[test]
        fn friction_is_non_increasing_and_bounded(cfg in any_config(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (flo, fhi) = (friction_magnitude(&cfg, lo), friction_magnitude(&cfg, hi));
            prop_assert!(flo >= fhi);
            prop_assert!((0.0..=cfg.c).contains(&flo) && (0.0..=cfg.c).contains(&fhi));
        }

        #[test]
        fn lower_d_never_moves_further(
            cfg in any_config(),
            d_hi in 0.0..=1.0f64,
            frac in 0.0..=1.0f64,
            tx in -0.2..0.2f64,
            ty in -0.2..0.2f64,
        ) {
            let s = ProxyState { target: Vec2::new(tx, ty), ..ProxyState::at(Vec2::ZERO) };
            let far = proxy_step(&s, &cfg, d_hi, DEFAULT_DT, DEFAULT_K_PULL, free);
            let near = proxy_step(&s, &cfg, d_hi * frac, DEFAULT_DT, DEFAULT_K_PULL, free);
            prop_assert!(near.proxy.norm() <= far.proxy.norm() + 1e-15);
        }

        #[test]
        fn friction_never_does_positive_work(
            cfg in any_config(),
            ds in proptest::collection::vec(0.0..=1.0f64, 1..60),
            targets in proptest::collection::vec((-0.3..0.3f64, -0.3..0.3f64), 1..60),
        ) {
            let mut s = ProxyState::at(Vec2::ZERO);
            let mut work = 0.0;
            for (d, (tx, ty)) in ds.iter().zip(targets.iter()) {
                s.target = Vec2::new(*tx, *ty);
                let next = proxy_step(&s, &cfg, *d, DEFAULT_DT, DEFAULT_K_PULL, free);
                let f = force_sample(&next, &cfg, *d, DEFAULT_K_PULL);
                if next.v.norm() > VELOCITY_EPS {
                    prop_assert!(f.direction.dot(next.v) <= 0.0);
                }
                work += f.force().dot(next.proxy - s.proxy);
                s = next;
            }
            prop_assert!(work <= 0.0);
        }
    }
}
