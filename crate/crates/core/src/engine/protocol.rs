//! JSON messages exchanged with UI clients over the socket.

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::atlas::{FieldKind, FieldMode, GridSpec, IndexField};
use crate::geometry::Vec2;
use crate::haptic::{HapticConfig, RenderMode};
use crate::kinematics::{AssemblyMode, BranchLabels, Interval, Mechanism, Posture, WorkingMode};
use crate::session::{RecordState, StudyCase, TrajectoryMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DragPhase {
    Start,
    Move,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryAction {
    Show,
    Hide,
    Clear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Drag {
        mech: Mechanism,
        phase: DragPhase,
        pointer: Vec2,
    },
    SetGeometry {
        mech: Mechanism,
        /// `[l1, l2]` for the serial arm, `[l0, l1, l2, l3, l4]` for the five-bar.
        lengths: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        joint_limits: Option<[Option<Interval>; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit_margin: Option<f64>,
    },
    SetFriction {
        mech: Mechanism,
        c: f64,
        f1: f64,
        f2: f64,
    },
    SetRenderMode {
        mech: Mechanism,
        mode: RenderMode,
    },
    SetMode {
        mech: Mechanism,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        working_mode: Option<WorkingMode>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        assembly_mode: Option<AssemblyMode>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        posture: Option<Posture>,
    },
    SelectCase {
        mech: Mechanism,
        id: u8,
    },
    Trajectory {
        mech: Mechanism,
        action: TrajectoryAction,
    },
    DumpTrajectory {
        mech: Mechanism,
    },
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<Self, EngineError> {
        serde_json::from_str(text).map_err(|e| EngineError::BadMessage(e.to_string()))
    }

    pub fn mech(&self) -> Mechanism {
        match self {
            ClientMessage::Drag { mech, .. }
            | ClientMessage::SetGeometry { mech, .. }
            | ClientMessage::SetFriction { mech, .. }
            | ClientMessage::SetRenderMode { mech, .. }
            | ClientMessage::SetMode { mech, .. }
            | ClientMessage::SelectCase { mech, .. }
            | ClientMessage::Trajectory { mech, .. }
            | ClientMessage::DumpTrajectory { mech } => *mech,
        }
    }
}

/// Geometry echo; `joint_limits` and `limit_margin` only apply to the serial arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryEcho {
    pub lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_limits: Option<[Option<Interval>; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechSnapshot {
    pub angles: Vec<f64>,
    pub p: Vec2,
    pub proxy: Vec2,
    /// Pointer position while a drag is active.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec2>,
    pub d: f64,
    pub color: [f64; 3],
    pub cursor_diameter: f64,
    pub branch_labels: BranchLabels,
    pub singular: bool,
    pub stuck: bool,
    pub force: Vec2,
    pub friction: HapticConfig,
    pub geometry: GeometryEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<[f64; 4]>>,
    pub record_state: RecordState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TrajectoryMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<StudyCase>,
    pub atlas_ready: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub time_s: f64,
    pub serial: MechSnapshot,
    pub fivebar: MechSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasPayload {
    pub mech: Mechanism,
    pub kind: FieldKind,
    pub mode: FieldMode,
    pub grid: GridSpec,
    /// Little-endian f32 samples, row-major from `y_min`, base64 encoded.
    pub values: String,
}

impl AtlasPayload {
    pub fn new(mech: Mechanism, field: &IndexField) -> Self {
        AtlasPayload {
            mech,
            kind: field.kind,
            mode: field.mode,
            grid: field.grid,
            values: encode_f32(&field.values),
        }
    }

    pub fn decode_values(&self) -> Result<Vec<f32>, EngineError> {
        decode_f32(&self.values)
    }
}

pub fn encode_f32(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect();
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub fn decode_f32(text: &str) -> Result<Vec<f32>, EngineError> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(text)
        .map_err(|e| EngineError::BadMessage(e.to_string()))?;
    if bytes.len() % 4 != 0 {
        return Err(EngineError::BadMessage(
            "atlas payload is not a whole number of f32".into(),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)] // built and serialized immediately, never stored in bulk
pub enum ServerMessage {
    Snapshot(Snapshot),
    Atlas(AtlasPayload),
    Error { code: String, detail: String },
    TrajectoryCsv { mech: Mechanism, data: String },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

impl From<&EngineError> for ServerMessage {
    fn from(e: &EngineError) -> Self {
        ServerMessage::Error {
            code: e.code().to_string(),
            detail: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_client_type() {
        let lines = [
            r#"{"type":"drag","mech":"serial","phase":"start","pointer":[1.0,0.5]}"#,
            r#"{"type":"set_geometry","mech":"fivebar","lengths":[2,1,1,1.5,1.5]}"#,
            r#"{"type":"set_geometry","mech":"serial","lengths":[1,1],"joint_limits":[[-1.5,1.5],null],"limit_margin":0.2}"#,
            r#"{"type":"set_friction","mech":"serial","c":1,"f1":0.3,"f2":0.05}"#,
            r#"{"type":"set_render_mode","mech":"fivebar","mode":"inside"}"#,
            r#"{"type":"set_mode","mech":"fivebar","working_mode":"WM2"}"#,
            r#"{"type":"set_mode","mech":"serial","posture":"ElbowMinus"}"#,
            r#"{"type":"select_case","mech":"fivebar","id":3}"#,
            r#"{"type":"trajectory","mech":"serial","action":"clear"}"#,
            r#"{"type":"dump_trajectory","mech":"serial"}"#,
        ];
        for line in lines {
            let msg = ClientMessage::parse(line).unwrap_or_else(|e| panic!("{line}: {e}"));
            let back = ClientMessage::parse(&serde_json::to_string(&msg).unwrap()).unwrap();
            assert_eq!(msg, back);
        }
    }

    #[test]
    fn rejects_unknown_type_and_field() {
        for line in [
            r#"{"type":"teleport","mech":"serial"}"#,
            r#"{"type":"dump_trajectory","mech":"serial","extra":1}"#,
            r#"{"type":"drag","mech":"serial","phase":"hover","pointer":[0,0]}"#,
            r#"not json"#,
        ] {
            assert!(
                matches!(ClientMessage::parse(line), Err(EngineError::BadMessage(_))),
                "{line}"
            );
        }
    }

    #[test]
    fn f32_payload_round_trip() {
        let v = [0.0, 0.5, f64::NAN, 1.0];
        let back = decode_f32(&encode_f32(&v)).unwrap();
        assert_eq!(back[..2], [0.0f32, 0.5]);
        assert!(back[2].is_nan());
        assert_eq!(back[3], 1.0);
        // little-endian 0.5f32 is 00 00 00 3f
        assert_eq!(encode_f32(&[0.5]), "AAAAPw==");
    }

    #[test]
    fn error_message_shape() {
        let m = ServerMessage::from(&EngineError::InvalidValue("f2 >= f1".into()));
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["type"], "error");
        assert_eq!(v["code"], "invalid_value");
    }
}
