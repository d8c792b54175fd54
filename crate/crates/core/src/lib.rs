//! Planar mechanism kinematics with singularity-aware friction feedback.
//!
//! The crate covers a 2R serial arm and a five-bar closed chain: forward and
//! inverse kinematics over every branch, Jacobian determinants, sampled index
//! atlases with aspect decomposition, the friction law that turns an index into
//! a resisting force, study-case bookkeeping, and a fixed-step engine that ties
//! them together behind a JSON wire protocol.

pub mod atlas;
pub mod engine;
pub mod geometry;
pub mod haptic;
pub mod kinematics;
pub mod session;

pub use atlas::{AspectMap, AtlasError, FieldKind, FieldMode, GridSpec, IndexField};
pub use engine::{Engine, EngineConfig, EngineError};
pub use geometry::{wrap_angle, Vec2};
pub use haptic::{ForceSample, HapticConfig, ProxyState, RenderMode};
pub use kinematics::{
    AssemblyMode, BranchLabels, FiveBarGeometry, FiveBarState, Interval, KinematicsError, Mechanism, Posture,
    SerialGeometry, SerialState, WorkingMode,
};
pub use session::{StudyCase, TrajectoryMetrics, TrajectoryRecord};
