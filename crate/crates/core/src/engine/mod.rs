//! Fixed-step simulation of both mechanisms driven by client messages.
//!
//! The engine is a plain single-threaded state machine: the caller applies
//! messages between ticks, runs queued atlas requests wherever it likes and
//! hands the results back through [`Engine::install_atlas`]. Given the same
//! message trace and the same atlas install points, snapshots are
//! bit-identical.

mod protocol;
mod rig;

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use protocol::{
    decode_f32, encode_f32, AtlasPayload, ClientMessage, DragPhase, GeometryEcho, MechSnapshot, ServerMessage,
    Snapshot, TrajectoryAction,
};
pub use rig::{FiveBarRig, ModeChange, Rig, SerialRig};

use crate::atlas::{aspect_of_point, compute_aspects, sample_index_field, AspectMap, AtlasError, AtlasMechanism};
use crate::atlas::{FieldKind, FieldMode, GridSpec, IndexField, DEFAULT_SINGULAR_THRESHOLD};
use crate::geometry::Vec2;
use crate::haptic::{
    cursor_color, cursor_diameter, force_sample, proxy_step, ForceSample, HapticConfig, Normalization, ProxyState,
    DEFAULT_DT, DEFAULT_K_PULL,
};
use crate::kinematics::{FiveBarGeometry, Interval, Mechanism, SerialGeometry};
use crate::session::{load_case, RecordState, TrajectoryRecord, DEFAULT_CAPTURE_RADIUS};

/// Bisection steps used when a proxy move leaves the admissible region.
const BISECTION_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("malformed message: {0}")]
    BadMessage(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("request rejected: {0}")]
    Rejected(String),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::BadMessage(_) => "bad_message",
            EngineError::InvalidValue(_) => "invalid_value",
            EngineError::Rejected(_) => "rejected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Simulation step, seconds.
    pub dt: f64,
    pub k_pull: f64,
    /// Atlas resolution `(nx, ny)`.
    pub grid: (usize, usize),
    pub singular_threshold: f64,
    pub capture_radius: f64,
    /// Cursor diameter at d = 1, metres.
    pub cursor_min_diameter: f64,
    /// Joint-limit ramp width of the serial arm, radians.
    pub limit_margin: f64,
    /// Keep each proxy inside the aspect it started in.
    pub confine_to_aspect: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            dt: DEFAULT_DT,
            k_pull: DEFAULT_K_PULL,
            grid: (400, 400),
            singular_threshold: DEFAULT_SINGULAR_THRESHOLD,
            capture_radius: DEFAULT_CAPTURE_RADIUS,
            cursor_min_diameter: 0.05,
            limit_margin: 0.3,
            confine_to_aspect: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let positive = [
            ("dt", self.dt),
            ("k_pull", self.k_pull),
            ("capture_radius", self.capture_radius),
            ("cursor_min_diameter", self.cursor_min_diameter),
            ("limit_margin", self.limit_margin),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EngineError::InvalidValue(format!("{name} = {v} must be positive")));
            }
        }
        if self.grid.0 < 2 || self.grid.1 < 2 {
            return Err(EngineError::InvalidValue(
                "atlas grid needs at least 2x2 vertices".into(),
            ));
        }
        if !(self.singular_threshold > 0.0 && self.singular_threshold < 1.0) {
            return Err(EngineError::InvalidValue(
                "singular threshold must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtlasKey {
    pub mech: Mechanism,
    pub kind: FieldKind,
    pub mode: FieldMode,
    pub geometry_hash: u64,
}

/// Work order for one atlas field plus its aspect map.
#[derive(Debug, Clone, PartialEq)]
pub struct AtlasRequest {
    pub key: AtlasKey,
    pub mechanism: AtlasMechanism,
    pub grid: GridSpec,
    pub singular_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct AtlasResult {
    pub key: AtlasKey,
    pub outcome: Result<(IndexField, AspectMap), AtlasError>,
}

impl AtlasRequest {
    /// Runs the sampling; this is the expensive part and may run on any thread.
    pub fn compute(self) -> AtlasResult {
        let outcome = sample_index_field(&self.mechanism, self.grid, self.key.kind, self.key.mode)
            .and_then(|field| compute_aspects(&field, self.singular_threshold).map(|aspects| (field, aspects)));
        AtlasResult { key: self.key, outcome }
    }
}

/// One mechanism: its kinematic model plus the interaction state around it.
#[derive(Debug, Clone)]
pub struct Slot<R: Rig> {
    pub rig: R,
    pub state: R::State,
    pub proxy: ProxyState,
    pub dragging: bool,
    pub haptic: HapticConfig,
    pub trajectory: TrajectoryRecord,
    pub force: ForceSample,
    /// Aspect the proxy is confined to, once known.
    pub aspect: Option<u32>,
    pub status: Option<String>,
}

impl<R: Rig> Slot<R> {
    fn new(rig: R, capture_radius: f64) -> Self {
        let state = rig.default_state();
        let p = R::position(&state);
        Slot {
            rig,
            state,
            proxy: ProxyState::at(p),
            dragging: false,
            haptic: HapticConfig::default(),
            trajectory: TrajectoryRecord::new(capture_radius),
            force: ForceSample {
                d: 1.0,
                magnitude: 0.0,
                direction: Vec2::ZERO,
            },
            aspect: None,
            status: None,
        }
    }

    /// Puts the mechanism at rest in `state`.
    fn settle(&mut self, state: R::State) {
        self.state = state;
        self.proxy = ProxyState::at(R::position(&state));
        self.aspect = None;
    }
}

#[derive(Debug, Clone, Default)]
struct AtlasCache {
    entries: HashMap<AtlasKey, (IndexField, AspectMap)>,
    /// Last installed raw maximum per field kind, used while a newer atlas
    /// is computed.
    stale_max: HashMap<(Mechanism, FieldKind), f64>,
    /// Keys queued or computing, plus keys whose computation failed.
    requested: HashSet<AtlasKey>,
    pending: Vec<AtlasRequest>,
}

impl AtlasCache {
    fn purge(&mut self, mech: Mechanism, keep_hash: u64) {
        self.entries
            .retain(|k, _| k.mech != mech || k.geometry_hash == keep_hash);
        self.requested
            .retain(|k| k.mech != mech || k.geometry_hash == keep_hash);
        self.pending
            .retain(|r| r.key.mech != mech || r.key.geometry_hash == keep_hash);
    }

    fn max_raw(&self, key: &AtlasKey) -> Option<f64> {
        match self.entries.get(key) {
            Some((field, _)) => Some(field.max_raw),
            None => self.stale_max.get(&(key.mech, key.kind)).copied(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    tick: u64,
    pub serial: Slot<SerialRig>,
    pub fivebar: Slot<FiveBarRig>,
    atlas: AtlasCache,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let serial = SerialRig {
            geometry: SerialGeometry::default(),
            limit_margin: config.limit_margin,
        };
        let mut engine = Engine {
            config,
            tick: 0,
            serial: Slot::new(serial, config.capture_radius),
            fivebar: Slot::new(
                FiveBarRig {
                    geometry: FiveBarGeometry::default(),
                },
                config.capture_radius,
            ),
            atlas: AtlasCache::default(),
        };
        engine.request_missing_atlases();
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn time_s(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    /// Hands over queued atlas work; each request is issued once.
    pub fn take_atlas_requests(&mut self) -> Vec<AtlasRequest> {
        std::mem::take(&mut self.atlas.pending)
    }

    /// Stores a finished atlas. Results for a geometry that has since changed
    /// are dropped. Returns the message to broadcast, if any.
    pub fn install_atlas(&mut self, result: AtlasResult) -> Option<ServerMessage> {
        let key = result.key;
        let current = match key.mech {
            Mechanism::Serial => self.serial.rig.geometry_hash(),
            Mechanism::FiveBar => self.fivebar.rig.geometry_hash(),
        };
        if key.geometry_hash != current {
            return None;
        }
        match result.outcome {
            Ok((field, aspects)) => {
                let msg = ServerMessage::Atlas(AtlasPayload::new(key.mech, &field));
                self.atlas.stale_max.insert((key.mech, key.kind), field.max_raw);
                self.atlas.entries.insert(key, (field, aspects));
                Some(msg)
            }
            Err(e) => {
                // Keep the key in `requested` so a failing field is not retried.
                let status = format!("atlas {:?} {}: {e}", key.kind, key.mode);
                match key.mech {
                    Mechanism::Serial => self.serial.status = Some(status.clone()),
                    Mechanism::FiveBar => self.fivebar.status = Some(status.clone()),
                }
                Some(ServerMessage::Error {
                    code: "atlas_failed".into(),
                    detail: status,
                })
            }
        }
    }

    /// Computes every queued atlas on the calling thread.
    pub fn compute_atlases_blocking(&mut self) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        loop {
            let batch = self.take_atlas_requests();
            if batch.is_empty() {
                return out;
            }
            for req in batch {
                out.extend(self.install_atlas(req.compute()));
            }
        }
    }

    pub fn atlas(&self, key: &AtlasKey) -> Option<(&IndexField, &AspectMap)> {
        self.atlas.entries.get(key).map(|(f, a)| (f, a))
    }

    /// Cached atlases, for clients that connect late.
    pub fn atlas_messages(&self) -> Vec<ServerMessage> {
        let mut keys: Vec<&AtlasKey> = self.atlas.entries.keys().collect();
        keys.sort_by_key(|k| (k.mech as u8, k.kind as u8, k.mode.to_string()));
        keys.into_iter()
            .map(|k| ServerMessage::Atlas(AtlasPayload::new(k.mech, &self.atlas.entries[k].0)))
            .collect()
    }

    fn request_missing_atlases(&mut self) {
        let grid = self.config.grid;
        let threshold = self.config.singular_threshold;
        let serial_keys = keys_for(&self.serial);
        let fivebar_keys = keys_for(&self.fivebar);
        let jobs = serial_keys
            .into_iter()
            .map(|k| (k, self.serial.rig.atlas_mechanism()))
            .chain(
                fivebar_keys
                    .into_iter()
                    .map(|k| (k, self.fivebar.rig.atlas_mechanism())),
            );
        for (key, mechanism) in jobs {
            if self.atlas.entries.contains_key(&key) || !self.atlas.requested.insert(key) {
                continue;
            }
            match mechanism.default_grid(grid.0, grid.1) {
                Ok(grid) => self.atlas.pending.push(AtlasRequest {
                    key,
                    mechanism,
                    grid,
                    singular_threshold: threshold,
                }),
                Err(e) => {
                    let status = Some(format!("no atlas: {e}"));
                    match key.mech {
                        Mechanism::Serial => self.serial.status = status,
                        Mechanism::FiveBar => self.fivebar.status = status,
                    }
                }
            }
        }
    }

    /// Advances both mechanisms by one step and returns the new snapshot.
    pub fn tick(&mut self) -> Snapshot {
        self.tick += 1;
        let t = self.time_s();
        let cfg = self.config;
        step_slot(&mut self.serial, &self.atlas, &cfg, t);
        step_slot(&mut self.fivebar, &self.atlas, &cfg, t);
        self.snapshot()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            tick: self.tick,
            time_s: self.time_s(),
            serial: mech_snapshot(&self.serial, &self.atlas, &self.config),
            fivebar: mech_snapshot(&self.fivebar, &self.atlas, &self.config),
        }
    }

    /// Applies one client message. On error the state is unchanged. The
    /// returned messages are replies for the sender.
    pub fn apply(&mut self, msg: ClientMessage) -> Result<Vec<ServerMessage>, EngineError> {
        let replies = match msg {
            ClientMessage::Drag { mech, phase, pointer } => {
                if !pointer.is_finite() {
                    return Err(EngineError::InvalidValue("pointer must be finite".into()));
                }
                match mech {
                    Mechanism::Serial => drag(&mut self.serial, phase, pointer),
                    Mechanism::FiveBar => drag(&mut self.fivebar, phase, pointer),
                }
                Vec::new()
            }
            ClientMessage::SetGeometry {
                mech,
                lengths,
                joint_limits,
                limit_margin,
            } => {
                match mech {
                    Mechanism::Serial => {
                        let rig = serial_rig(&self.serial.rig, &lengths, joint_limits, limit_margin)?;
                        set_rig(&mut self.serial, rig);
                        self.atlas.purge(mech, self.serial.rig.geometry_hash());
                    }
                    Mechanism::FiveBar => {
                        if joint_limits.is_some() || limit_margin.is_some() {
                            return Err(EngineError::InvalidValue(
                                "joint limits apply to the serial arm only".into(),
                            ));
                        }
                        let rig = fivebar_rig(&lengths)?;
                        set_rig(&mut self.fivebar, rig);
                        self.atlas.purge(mech, self.fivebar.rig.geometry_hash());
                    }
                }
                Vec::new()
            }
            ClientMessage::SetFriction { mech, c, f1, f2 } => {
                let mode = match mech {
                    Mechanism::Serial => self.serial.haptic.render_mode,
                    Mechanism::FiveBar => self.fivebar.haptic.render_mode,
                };
                let cfg = HapticConfig::new(c, f1, f2, mode).map_err(|e| EngineError::InvalidValue(e.to_string()))?;
                match mech {
                    Mechanism::Serial => self.serial.haptic = cfg,
                    Mechanism::FiveBar => self.fivebar.haptic = cfg,
                }
                Vec::new()
            }
            ClientMessage::SetRenderMode { mech, mode } => {
                match mech {
                    Mechanism::Serial => self.serial.haptic.render_mode = mode,
                    Mechanism::FiveBar => {
                        self.fivebar.haptic.render_mode = mode;
                        self.fivebar.aspect = None;
                    }
                }
                Vec::new()
            }
            ClientMessage::SetMode {
                mech,
                working_mode,
                assembly_mode,
                posture,
            } => {
                let change = rig::ModeChange {
                    working_mode,
                    assembly_mode,
                    posture,
                };
                match mech {
                    Mechanism::Serial => switch_branch(&mut self.serial, change)?,
                    Mechanism::FiveBar => switch_branch(&mut self.fivebar, change)?,
                }
                Vec::new()
            }
            ClientMessage::SelectCase { mech, id } => {
                let case = load_case(mech, id).map_err(|e| EngineError::InvalidValue(e.to_string()))?;
                match mech {
                    Mechanism::Serial => self.serial.trajectory.arm(case),
                    Mechanism::FiveBar => self.fivebar.trajectory.arm(case),
                }
                Vec::new()
            }
            ClientMessage::Trajectory { mech, action } => {
                let record = match mech {
                    Mechanism::Serial => &mut self.serial.trajectory,
                    Mechanism::FiveBar => &mut self.fivebar.trajectory,
                };
                match action {
                    TrajectoryAction::Show => record.show = true,
                    TrajectoryAction::Hide => record.show = false,
                    TrajectoryAction::Clear => record.clear(),
                }
                Vec::new()
            }
            ClientMessage::DumpTrajectory { mech } => {
                let data = match mech {
                    Mechanism::Serial => self.serial.trajectory.to_csv(),
                    Mechanism::FiveBar => self.fivebar.trajectory.to_csv(),
                };
                vec![ServerMessage::TrajectoryCsv { mech, data }]
            }
        };
        self.request_missing_atlases();
        Ok(replies)
    }

    /// Parses and applies a text frame; errors come back as `error` messages.
    pub fn apply_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match ClientMessage::parse(text).and_then(|m| self.apply(m)) {
            Ok(replies) => replies,
            Err(e) => vec![ServerMessage::from(&e)],
        }
    }
}

fn keys_for<R: Rig>(slot: &Slot<R>) -> Vec<AtlasKey> {
    let hash = slot.rig.geometry_hash();
    slot.rig
        .fields(&slot.state)
        .into_iter()
        .map(|(kind, mode)| AtlasKey {
            mech: R::MECH,
            kind,
            mode,
            geometry_hash: hash,
        })
        .collect()
}

fn key<R: Rig>(slot: &Slot<R>, kind: FieldKind, mode: FieldMode) -> AtlasKey {
    AtlasKey {
        mech: R::MECH,
        kind,
        mode,
        geometry_hash: slot.rig.geometry_hash(),
    }
}

/// Raw-index maxima for the slot's current branch: the installed atlas, else
/// the last one of the same kind, else the rig's analytic bound.
fn normalization<R: Rig>(slot: &Slot<R>, atlas: &AtlasCache) -> Normalization {
    let mut norm = slot.rig.analytic_normalization();
    let (mode, kinds) = slot.rig.normalization_fields(&slot.state);
    for kind in kinds {
        if let Some(m) = atlas.max_raw(&key(slot, kind, mode)).filter(|m| *m > 0.0) {
            match kind {
                FieldKind::SerialCombined => norm.serial = Some(m),
                FieldKind::FiveBarDirect => norm.direct = Some(m),
                FieldKind::FiveBarInverse => norm.inverse = Some(m),
                FieldKind::FiveBarComposed => {}
            }
        }
    }
    norm
}

fn atlas_ready<R: Rig>(slot: &Slot<R>, atlas: &AtlasCache) -> bool {
    keys_for(slot).iter().all(|k| atlas.entries.contains_key(k))
}

fn aspects<'a, R: Rig>(slot: &Slot<R>, atlas: &'a AtlasCache) -> Option<&'a AspectMap> {
    let (kind, mode) = slot.rig.aspect_field(&slot.state, slot.haptic.render_mode);
    atlas.entries.get(&key(slot, kind, mode)).map(|(_, a)| a)
}

fn current_d<R: Rig>(slot: &Slot<R>, atlas: &AtlasCache) -> f64 {
    slot.rig
        .boundary_definer(&slot.state, &normalization(slot, atlas), slot.haptic.render_mode)
}

fn step_slot<R: Rig>(slot: &mut Slot<R>, atlas: &AtlasCache, cfg: &EngineConfig, t: f64) {
    if !slot.dragging {
        return;
    }
    let d = current_d(slot, atlas);
    let map = if cfg.confine_to_aspect {
        aspects(slot, atlas)
    } else {
        None
    };
    if let (None, Some(map)) = (slot.aspect, map) {
        slot.aspect = aspect_of_point(map, R::position(&slot.state)).ok().filter(|l| *l != 0);
    }
    let confine = slot.aspect.zip(map);
    let rig = &slot.rig;
    let state = slot.state;
    let admissible = |q: Vec2| {
        rig.solve(q, &state).is_ok()
            && confine.is_none_or(|(label, map)| aspect_of_point(map, q).is_ok_and(|l| l == label))
    };
    let next = proxy_step(&slot.proxy, &slot.haptic, d, cfg.dt, cfg.k_pull, |from, to| {
        admit(from, to, |q| rig.project(q), admissible)
    });
    match slot.rig.solve(next.proxy, &slot.state) {
        Ok(state) => {
            slot.state = state;
            slot.proxy = next;
            slot.status = None;
        }
        Err(e) => {
            slot.proxy = ProxyState {
                stuck: true,
                v: Vec2::ZERO,
                ..slot.proxy
            };
            slot.status = Some(format!("proxy move refused: {e}"));
        }
    }
    slot.force = force_sample(&slot.proxy, &slot.haptic, d, cfg.k_pull);
    if slot.trajectory.state != RecordState::Finished {
        let d_after = current_d(slot, atlas);
        let p = R::position(&slot.state);
        let labels = R::labels(&slot.state);
        if let Err(e) = slot.trajectory.record_step(t, p, d_after, labels) {
            slot.status = Some(e.to_string());
        }
    }
}

/// Maps a candidate proxy position back into the admissible set: the
/// candidate itself, else its projection when that is no farther from the
/// candidate than `from` is, else the last admissible point on the segment.
fn admit(from: Vec2, to: Vec2, project: impl Fn(Vec2) -> Vec2, admissible: impl Fn(Vec2) -> bool) -> Vec2 {
    if admissible(to) {
        return to;
    }
    let q = project(to);
    if q.is_finite() && q.distance(to) <= from.distance(to) && admissible(q) {
        return q;
    }
    if !admissible(from) {
        return from;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if admissible(from + (to - from) * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        from
    } else {
        from + (to - from) * lo
    }
}

fn drag<R: Rig>(slot: &mut Slot<R>, phase: DragPhase, pointer: Vec2) {
    match phase {
        DragPhase::Start => {
            slot.dragging = true;
            slot.proxy.target = pointer;
        }
        DragPhase::Move => {
            if slot.dragging {
                slot.proxy.target = pointer;
            }
        }
        DragPhase::End => {
            slot.dragging = false;
            slot.proxy = ProxyState {
                stuck: false,
                ..ProxyState::at(slot.proxy.proxy)
            };
        }
    }
}

fn switch_branch<R: Rig>(slot: &mut Slot<R>, change: rig::ModeChange) -> Result<(), EngineError> {
    if slot.dragging {
        return Err(EngineError::Rejected("cannot change mode while dragging".into()));
    }
    let state = slot.rig.switch(&slot.state, change)?;
    slot.settle(state);
    Ok(())
}

fn set_rig<R: Rig>(slot: &mut Slot<R>, rig: R) {
    let p = R::position(&slot.state);
    let state = rig.solve(p, &slot.state).unwrap_or_else(|_| rig.default_state());
    slot.rig = rig;
    slot.dragging = false;
    slot.settle(state);
    slot.trajectory.clear();
}

fn serial_rig(
    current: &SerialRig,
    lengths: &[f64],
    joint_limits: Option<[Option<Interval>; 2]>,
    limit_margin: Option<f64>,
) -> Result<SerialRig, EngineError> {
    let [l1, l2] = lengths else {
        return Err(EngineError::InvalidValue(format!(
            "the serial arm takes 2 lengths, got {}",
            lengths.len()
        )));
    };
    let limits = joint_limits.unwrap_or(current.geometry.joint_limits);
    let geometry = SerialGeometry::new(*l1, *l2)
        .and_then(|g| g.with_limits(limits[0], limits[1]))
        .map_err(|e| EngineError::InvalidValue(e.to_string()))?;
    let limit_margin = limit_margin.unwrap_or(current.limit_margin);
    if !(limit_margin > 0.0 && limit_margin.is_finite()) {
        return Err(EngineError::InvalidValue(format!(
            "limit margin {limit_margin} must be positive"
        )));
    }
    Ok(SerialRig { geometry, limit_margin })
}

fn fivebar_rig(lengths: &[f64]) -> Result<FiveBarRig, EngineError> {
    let [l0, l1, l2, l3, l4] = lengths else {
        return Err(EngineError::InvalidValue(format!(
            "the five-bar takes 5 lengths, got {}",
            lengths.len()
        )));
    };
    let geometry =
        FiveBarGeometry::new(*l0, *l1, *l2, *l3, *l4).map_err(|e| EngineError::InvalidValue(e.to_string()))?;
    let rig = FiveBarRig { geometry };
    rig.atlas_mechanism()
        .default_grid(2, 2)
        .map_err(|e| EngineError::InvalidValue(e.to_string()))?;
    Ok(rig)
}

fn mech_snapshot<R: Rig>(slot: &Slot<R>, atlas: &AtlasCache, cfg: &EngineConfig) -> MechSnapshot {
    let d = current_d(slot, atlas);
    let record = &slot.trajectory;
    MechSnapshot {
        angles: R::angles(&slot.state),
        p: R::position(&slot.state),
        proxy: slot.proxy.proxy,
        target: slot.dragging.then_some(slot.proxy.target),
        d,
        color: cursor_color(d),
        cursor_diameter: cursor_diameter(d, cfg.cursor_min_diameter),
        branch_labels: R::labels(&slot.state),
        singular: R::singular(&slot.state),
        stuck: slot.proxy.stuck,
        force: slot.force.force(),
        friction: slot.haptic,
        geometry: slot.rig.echo(),
        trajectory: (record.show && !record.samples.is_empty())
            .then(|| record.samples.iter().map(|s| [s.t, s.p.x, s.p.y, s.d]).collect()),
        record_state: record.state,
        metrics: record.metrics().ok(),
        case: record.case.clone(),
        atlas_ready: atlas_ready(slot, atlas),
        status: slot.status.clone(),
    }
}
