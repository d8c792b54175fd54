//! Study cases, trajectory recording and trajectory metrics.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{aspect_of_point, format_g, AspectMap, AtlasError};
use crate::geometry::Vec2;
use crate::kinematics::{BranchLabels, Mechanism, Posture};

pub const DEFAULT_CAPTURE_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("no study case {id} for the {mech} mechanism")]
    UnknownCase { mech: Mechanism, id: u8 },
    #[error("sample time {t} does not follow {last}")]
    NonMonotonicTime { t: f64, last: f64 },
    #[error("the trajectory is already finished")]
    AlreadyFinished,
    #[error("the trajectory has not reached its target")]
    NotFinished,
}

/// A task: bring the end-effector from `origin` to `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCase {
    pub id: u8,
    pub mech: Mechanism,
    pub origin: Vec2,
    pub target: Vec2,
    /// The task cannot be done without switching branch.
    pub required_mode_change: bool,
    /// Branch the target must be reached in, when the task demands one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_branch: Option<BranchLabels>,
}

/// Built-in cases for the default geometries: 1 stays inside one aspect,
/// 2 ends in the friction zone, 3 needs a branch change.
pub fn load_case(mech: Mechanism, id: u8) -> Result<StudyCase, SessionError> {
    let case = |origin: (f64, f64), target: (f64, f64), change: bool, branch: Option<BranchLabels>| StudyCase {
        id,
        mech,
        origin: origin.into_vec(),
        target: target.into_vec(),
        required_mode_change: change,
        target_branch: branch,
    };
    match (mech, id) {
        (Mechanism::Serial, 1) => Ok(case((1.2, 0.6), (0.6, 1.2), false, None)),
        (Mechanism::Serial, 2) => Ok(case((1.2, 0.6), (1.9, -0.59), false, None)),
        (Mechanism::Serial, 3) => Ok(case(
            (1.2, 0.6),
            (0.6, 1.2),
            true,
            Some(BranchLabels::Serial {
                posture: Posture::ElbowMinus,
            }),
        )),
        (Mechanism::FiveBar, 1) => Ok(case((0.7, 0.0), (1.3, 0.0), false, None)),
        (Mechanism::FiveBar, 2) => Ok(case((1.0, 0.5), (1.0, -1.05), false, None)),
        (Mechanism::FiveBar, 3) => Ok(case((1.0, 1.6), (1.0, 0.5), true, None)),
        _ => Err(SessionError::UnknownCase { mech, id }),
    }
}

trait IntoVec {
    fn into_vec(self) -> Vec2;
}

impl IntoVec for (f64, f64) {
    fn into_vec(self) -> Vec2 {
        Vec2::new(self.0, self.1)
    }
}

/// True when origin and target share a non-zero aspect label.
pub fn feasibility(case: &StudyCase, aspects: &AspectMap) -> Result<bool, AtlasError> {
    let from = aspect_of_point(aspects, case.origin)?;
    let to = aspect_of_point(aspects, case.target)?;
    Ok(from != 0 && from == to)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordState {
    Idle,
    Armed,
    Running,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub p: Vec2,
    pub d: f64,
    pub labels: BranchLabels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub duration: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub mode_changes: u32,
}

/// End-effector path with the capture-to-capture timer of a study case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrajectorySample>,
    pub state: RecordState,
    pub show: bool,
    pub case: Option<StudyCase>,
    pub capture_radius: f64,
    /// Index of the sample that caught the origin.
    capture: Option<usize>,
    /// Index of the sample that caught the target.
    finish: Option<usize>,
}

impl Default for TrajectoryRecord {
    fn default() -> Self {
        TrajectoryRecord::new(DEFAULT_CAPTURE_RADIUS)
    }
}

impl TrajectoryRecord {
    pub fn new(capture_radius: f64) -> Self {
        TrajectoryRecord {
            samples: Vec::new(),
            state: RecordState::Idle,
            show: true,
            case: None,
            capture_radius,
            capture: None,
            finish: None,
        }
    }

    /// Starts a fresh attempt at `case`.
    pub fn arm(&mut self, case: StudyCase) {
        self.case = Some(case);
        self.clear();
    }

    /// Drops every sample; an armed case stays armed.
    pub fn clear(&mut self) {
        self.samples.clear();
        self.capture = None;
        self.finish = None;
        self.state = if self.case.is_some() {
            RecordState::Armed
        } else {
            RecordState::Idle
        };
    }

    pub fn record_step(&mut self, t: f64, p: Vec2, d: f64, labels: BranchLabels) -> Result<(), SessionError> {
        if self.state == RecordState::Finished {
            return Err(SessionError::AlreadyFinished);
        }
        if let Some(last) = self.samples.last() {
            if t.partial_cmp(&last.t) != Some(std::cmp::Ordering::Greater) {
                return Err(SessionError::NonMonotonicTime { t, last: last.t });
            }
        }
        self.samples.push(TrajectorySample { t, p, d, labels });
        let idx = self.samples.len() - 1;
        let Some(case) = &self.case else {
            return Ok(());
        };
        if self.state == RecordState::Armed && p.distance(case.origin) <= self.capture_radius {
            self.state = RecordState::Running;
            self.capture = Some(idx);
        }
        if self.state == RecordState::Running
            && p.distance(case.target) <= self.capture_radius
            && case.target_branch.is_none_or(|b| b == labels)
        {
            self.state = RecordState::Finished;
            self.finish = Some(idx);
        }
        Ok(())
    }

    /// Samples from origin capture onwards (through target capture once
    /// finished).
    pub fn running_samples(&self) -> &[TrajectorySample] {
        match (self.capture, self.finish) {
            (Some(a), Some(b)) => &self.samples[a..=b],
            (Some(a), None) => &self.samples[a..],
            _ => &[],
        }
    }

    /// Running `(d_min, d_max)` so far.
    pub fn extremes(&self) -> Option<(f64, f64)> {
        self.running_samples().iter().fold(None, |acc, s| match acc {
            None => Some((s.d, s.d)),
            Some((lo, hi)) => Some((lo.min(s.d), hi.max(s.d))),
        })
    }

    pub fn metrics(&self) -> Result<TrajectoryMetrics, SessionError> {
        if self.state != RecordState::Finished {
            return Err(SessionError::NotFinished);
        }
        let run = self.running_samples();
        let (first, last) = (run[0], run[run.len() - 1]);
        let (d_min, d_max) = self.extremes().expect("finished runs hold samples");
        let mode_changes = run.windows(2).filter(|w| w[0].labels != w[1].labels).count() as u32;
        Ok(TrajectoryMetrics {
            duration: last.t - first.t,
            d_min,
            d_max,
            mode_changes,
        })
    }

    /// `t,x,y,d,labels` rows for every recorded sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,y,d,labels")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{}",
                format_g(s.t, 12),
                format_g(s.p.x, 12),
                format_g(s.p.y, 12),
                format_g(s.d, 12),
                s.labels
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{AssemblyMode, WorkingMode};
    use proptest::prelude::*;

    const PLUS: BranchLabels = BranchLabels::Serial {
        posture: Posture::ElbowPlus,
    };
    const MINUS: BranchLabels = BranchLabels::Serial {
        posture: Posture::ElbowMinus,
    };

    fn armed(case: StudyCase) -> TrajectoryRecord {
        let mut r = TrajectoryRecord::default();
        r.arm(case);
        r
    }

    #[test]
    fn unknown_case() {
        assert_eq!(
            load_case(Mechanism::Serial, 4),
            Err(SessionError::UnknownCase {
                mech: Mechanism::Serial,
                id: 4
            })
        );
        assert!(load_case(Mechanism::FiveBar, 0).is_err());
    }

    #[test]
    fn capture_transitions() {
        let case = load_case(Mechanism::Serial, 1).unwrap();
        let mut r = armed(case.clone());
        assert_eq!(r.state, RecordState::Armed);
        r.record_step(0.01, Vec2::new(0.0, 0.5), 1.0, PLUS).unwrap();
        assert_eq!(r.state, RecordState::Armed);
        r.record_step(0.02, case.origin + Vec2::new(0.03, 0.0), 0.9, PLUS)
            .unwrap();
        assert_eq!(r.state, RecordState::Running);
        r.record_step(0.03, Vec2::new(0.9, 0.9), 0.8, PLUS).unwrap();
        r.record_step(0.05, case.target, 0.7, PLUS).unwrap();
        assert_eq!(r.state, RecordState::Finished);
        let m = r.metrics().unwrap();
        assert!((m.duration - 0.03).abs() < 1e-15);
        assert_eq!((m.d_min, m.d_max, m.mode_changes), (0.7, 0.9, 0));
        assert_eq!(
            r.record_step(0.06, case.target, 0.7, PLUS),
            Err(SessionError::AlreadyFinished)
        );
    }

    #[test]
    fn time_must_increase() {
        let mut r = TrajectoryRecord::default();
        r.record_step(0.5, Vec2::ZERO, 1.0, PLUS).unwrap();
        assert!(matches!(
            r.record_step(0.5, Vec2::ZERO, 1.0, PLUS),
            Err(SessionError::NonMonotonicTime { .. })
        ));
    }

    #[test]
    fn overlapping_capture_gives_zero_duration() {
        let case = StudyCase {
            id: 9,
            mech: Mechanism::Serial,
            origin: Vec2::new(1.0, 0.0),
            target: Vec2::new(1.04, 0.0),
            required_mode_change: false,
            target_branch: None,
        };
        let mut r = armed(case);
        r.record_step(1.0, Vec2::new(1.02, 0.0), 0.4, PLUS).unwrap();
        assert_eq!(r.state, RecordState::Finished);
        let m = r.metrics().unwrap();
        assert_eq!((m.duration, m.d_min, m.d_max), (0.0, 0.4, 0.4));
    }

    #[test]
    fn metrics_need_finish() {
        let r = armed(load_case(Mechanism::FiveBar, 1).unwrap());
        assert_eq!(r.metrics(), Err(SessionError::NotFinished));
    }

    #[test]
    fn target_branch_gates_finish_and_counts_changes() {
        let case = load_case(Mechanism::Serial, 3).unwrap();
        let mut r = armed(case.clone());
        r.record_step(0.01, case.origin, 1.0, PLUS).unwrap();
        r.record_step(0.02, case.target, 1.0, PLUS).unwrap();
        assert_eq!(r.state, RecordState::Running);
        r.record_step(0.03, Vec2::new(1.99, 0.0), 0.01, PLUS).unwrap();
        r.record_step(0.04, Vec2::new(1.99, 0.0), 0.01, MINUS).unwrap();
        r.record_step(0.05, case.target, 1.0, MINUS).unwrap();
        assert_eq!(r.state, RecordState::Finished);
        let m = r.metrics().unwrap();
        assert_eq!(m.mode_changes, 1);
        assert!(m.d_min < 0.02);
    }

    #[test]
    fn csv_dump() {
        let mut r = TrajectoryRecord::default();
        let l = BranchLabels::FiveBar {
            working_mode: WorkingMode::WM1,
            assembly_mode: AssemblyMode::AM2,
        };
        r.record_step(0.01, Vec2::new(1.0, 0.5), 0.25, l).unwrap();
        assert_eq!(r.to_csv(), "t,x,y,d,labels\n0.01,1,0.5,0.25,WM1-AM2\n");
    }

    #[test]
    fn clear_rearms() {
        let case = load_case(Mechanism::Serial, 1).unwrap();
        let mut r = armed(case.clone());
        r.record_step(0.01, case.origin, 1.0, PLUS).unwrap();
        r.clear();
        assert_eq!(r.state, RecordState::Armed);
        assert!(r.samples.is_empty());
    }

    proptest! {
        #[test]
        fn extremes_widen_monotonically(ds in proptest::collection::vec(0.0..=1.0f64, 1..80)) {
            let case = StudyCase {
                id: 1,
                mech: Mechanism::Serial,
                origin: Vec2::ZERO,
                target: Vec2::new(5.0, 5.0),
                required_mode_change: false,
                target_branch: None,
            };
            let mut r = armed(case);
            let mut prev: Option<(f64, f64)> = None;
            for (k, d) in ds.iter().enumerate() {
                r.record_step(k as f64 * 0.01 + 0.01, Vec2::ZERO, *d, PLUS).unwrap();
                let now = r.extremes().unwrap();
                if let Some((lo, hi)) = prev {
                    prop_assert!(now.0 <= lo && now.1 >= hi);
                }
                prev = Some(now);
            }
        }
    }
}
