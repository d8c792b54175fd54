use linkfeel_core::atlas::field::{sample_index_field, AtlasMechanism};
use linkfeel_core::atlas::{aspect_of_point, compute_aspects, AspectMap, DEFAULT_SINGULAR_THRESHOLD};
use linkfeel_core::session::{feasibility, load_case};
use linkfeel_core::*;

fn fivebar_map(wm: WorkingMode) -> (IndexField, AspectMap) {
    let mech = AtlasMechanism::FiveBar {
        geometry: FiveBarGeometry::default(),
    };
    let f = sample_index_field(
        &mech,
        mech.default_grid(200, 200).unwrap(),
        FieldKind::FiveBarComposed,
        FieldMode::working(wm),
    )
    .unwrap();
    let a = compute_aspects(&f, DEFAULT_SINGULAR_THRESHOLD).unwrap();
    (f, a)
}

fn serial_map() -> (IndexField, AspectMap) {
    let mech = AtlasMechanism::Serial {
        geometry: SerialGeometry::default(),
        limit_margin: 0.3,
    };
    let f = sample_index_field(
        &mech,
        mech.default_grid(200, 200).unwrap(),
        FieldKind::SerialCombined,
        FieldMode::Posture(Posture::ElbowPlus),
    )
    .unwrap();
    let a = compute_aspects(&f, DEFAULT_SINGULAR_THRESHOLD).unwrap();
    (f, a)
}

#[test]
fn fivebar_cases_in_default_mode() {
    let (field, map) = fivebar_map(WorkingMode::WM1);
    let friction_start = HapticConfig::default().f1;
    let c1 = load_case(Mechanism::FiveBar, 1).unwrap();
    assert!(feasibility(&c1, &map).unwrap());
    assert!(!c1.required_mode_change);

    let c2 = load_case(Mechanism::FiveBar, 2).unwrap();
    assert!(feasibility(&c2, &map).unwrap());
    let d_target = field.value_at(c2.target).unwrap().unwrap();
    assert!(d_target < friction_start, "target d = {d_target}");

    let c3 = load_case(Mechanism::FiveBar, 3).unwrap();
    assert!(c3.required_mode_change);
    assert!(!feasibility(&c3, &map).unwrap());
    assert_ne!(aspect_of_point(&map, c3.origin).unwrap(), 0);
    assert_ne!(aspect_of_point(&map, c3.target).unwrap(), 0);
}

#[test]
fn fivebar_case_three_in_alternate_modes() {
    let c3 = load_case(Mechanism::FiveBar, 3).unwrap();
    for wm in [WorkingMode::WM3, WorkingMode::WM4] {
        assert!(feasibility(&c3, &fivebar_map(wm).1).unwrap(), "{wm:?}");
    }
}

#[test]
fn serial_cases() {
    let (field, map) = serial_map();
    for id in 1..=3 {
        let c = load_case(Mechanism::Serial, id).unwrap();
        assert!(feasibility(&c, &map).unwrap(), "case {id}");
    }
    let c2 = load_case(Mechanism::Serial, 2).unwrap();
    assert!(field.value_at(c2.target).unwrap().unwrap() < HapticConfig::default().f1);
    let c3 = load_case(Mechanism::Serial, 3).unwrap();
    assert_eq!(
        c3.target_branch,
        Some(BranchLabels::Serial {
            posture: Posture::ElbowMinus
        })
    );
}

/// A drag from origin to target through the five-bar engine finishes case 1
/// without touching the singular band.
#[test]
fn fivebar_case_one_through_engine() {
    let mut e = Engine::new(EngineConfig {
        grid: (120, 120),
        ..EngineConfig::default()
    })
    .unwrap();
    e.compute_atlases_blocking();
    e.apply_text(r#"{"type":"select_case","mech":"fivebar","id":1}"#);
    let start = e.fivebar.state.p;
    let case = load_case(Mechanism::FiveBar, 1).unwrap();
    let drag = |e: &mut Engine, phase: &str, p: Vec2| {
        let out = e.apply_text(&format!(
            r#"{{"type":"drag","mech":"fivebar","phase":"{phase}","pointer":[{},{}]}}"#,
            p.x, p.y
        ));
        assert!(out.is_empty(), "{out:?}");
    };
    drag(&mut e, "start", start);
    for w in [case.origin, Vec2::new(1.0, 0.15), case.target] {
        drag(&mut e, "move", w);
        for _ in 0..200 {
            e.tick();
        }
    }
    let snap = e.snapshot().fivebar;
    let m = snap.metrics.expect("case finished");
    assert!(m.d_min > 0.02, "{m:?}");
    assert!(m.duration > 0.0);
}
