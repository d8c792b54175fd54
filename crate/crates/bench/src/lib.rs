//! Fixtures shared by the benchmarks.

use linkfeel_core::engine::{ClientMessage, DragPhase};
use linkfeel_core::{Engine, EngineConfig, Mechanism, Vec2};

/// Deterministic reachable sample points of the default five-bar.
pub fn fivebar_points(n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            Vec2::new(0.2 + 1.6 * t, 0.4 + 0.8 * (7.0 * t).sin().abs())
        })
        .collect()
}

/// Deterministic points inside the default serial annulus.
pub fn serial_points(n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            Vec2::from_angle(6.0 * t) * (0.2 + 1.7 * t)
        })
        .collect()
}

/// Engine with atlases installed and both mechanisms mid-drag.
pub fn dragging_engine(grid: (usize, usize)) -> Engine {
    let mut e = Engine::new(EngineConfig {
        grid,
        ..EngineConfig::default()
    })
    .expect("default config is valid");
    e.compute_atlases_blocking();
    for (mech, p) in [
        (Mechanism::Serial, Vec2::new(1.4, 0.2)),
        (Mechanism::FiveBar, Vec2::new(1.3, 0.4)),
    ] {
        e.apply(ClientMessage::Drag {
            mech,
            phase: DragPhase::Start,
            pointer: p,
        })
        .expect("drag start is valid");
    }
    e
}

/// Pointer position of a looping drag at tick `k`.
pub fn pointer(mech: Mechanism, k: u64) -> Vec2 {
    let t = k as f64 * 0.01;
    match mech {
        Mechanism::Serial => Vec2::from_angle(0.4 * t) * (1.2 + 0.5 * (0.9 * t).sin()),
        Mechanism::FiveBar => Vec2::new(1.0 + 0.4 * (0.7 * t).cos(), 0.9 + 0.6 * (0.5 * t).sin()),
    }
}
