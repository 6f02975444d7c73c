//! Trial logs: in-memory form, JSON Lines frames and the annotation sidecar.
//!
//! File layout: line 1 is the header object, each further line one frame
//! with unit-suffixed keys and values rounded to six significant digits.
//! Per-choice annotations go to `<stem>.choices.json` next to the log.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{AgentChoiceRecord, AgentKind};
use crate::error::{Error, Result};
use crate::metrics::LeaderRole;
use crate::path::{Color, DecisionType, Direction, PathScript, Phase, Side, Subject};
use crate::sim::{DyadState, Frame};

use super::config::{Condition, TrialConfig};

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format_version: u32,
    /// SHA-256 of the trial configuration, hex.
    pub config_hash: String,
    pub seed: u64,
    pub condition: Condition,
    /// Highlight slot seen by the agent on handle 1.
    pub subject: Subject,
    /// Agent on each handle; `None` on handle 2 means it mirrors handle 1.
    pub agents: [Option<AgentKind>; 2],
    pub pair: Option<usize>,
    pub repetition: Option<usize>,
    pub training: bool,
    /// Set when a live input source went silent during the trial.
    pub degraded: bool,
    pub dt_s: f64,
    /// Frames kept per simulated tick (1 = full rate).
    pub decimation: usize,
    pub ticks: u64,
    pub config: TrialConfig,
    pub script: PathScript,
}

/// Everything recorded about one choice after the trial ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceAnnotation {
    pub index: usize,
    pub t_start_s: f64,
    pub t_fork_s: f64,
    pub t_merge_s: f64,
    pub decision_type: DecisionType,
    pub highlight_1: Option<Side>,
    pub highlight_2: Option<Side>,
    pub direction: Direction,
    /// Cursor RMS error over the two seconds around the fork, mm.
    pub rms_mm: f64,
    /// Per-handle agent records; handle 2 is `None` when mirrored.
    pub agents: [Option<AgentChoiceRecord>; 2],
    pub leader: Option<LeaderRole>,
    pub human_led: Option<bool>,
    pub leader_start_s: Option<f64>,
    pub follower_start_s: Option<f64>,
    /// First time, relative to choice start, at which the cursor reached
    /// 95 % of the branch offset on the side it ended on.
    pub motion_end_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub header: LogHeader,
    pub frames: Vec<Frame>,
    pub choices: Vec<ChoiceAnnotation>,
}

/// Header plus annotations without frames; what the report is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub header: LogHeader,
    pub choices: Vec<ChoiceAnnotation>,
}

pub fn config_hash(cfg: &TrialConfig, script: &PathScript) -> String {
    let bytes = serde_json::to_vec(&(cfg, &script.config)).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl TrialLog {
    /// Time between consecutive stored frames.
    pub fn frame_period(&self) -> f64 {
        self.header.dt_s * self.header.decimation as f64
    }

    fn index_of(&self, t: f64) -> isize {
        (t / self.frame_period()).round() as isize
    }

    /// Frames with `from <= t <= to`, both ends snapped to the frame grid.
    pub fn frames_between(&self, from: f64, to: f64) -> Result<&[Frame]> {
        let (i0, i1) = (self.index_of(from), self.index_of(to));
        if i0 < 0 || i1 < i0 || i1 as usize >= self.frames.len() {
            return Err(Error::IncompleteLog { from, to });
        }
        Ok(&self.frames[i0 as usize..=i1 as usize])
    }

    pub fn cursor_between(&self, from: f64, to: f64) -> Result<Vec<f64>> {
        Ok(self
            .frames_between(from, to)?
            .iter()
            .map(|f| f.cursor_x)
            .collect())
    }

    pub fn summary(&self) -> TrialSummary {
        TrialSummary {
            header: self.header.clone(),
            choices: self.choices.clone(),
        }
    }

    /// Copy keeping every `n`-th frame.
    pub fn decimated(&self, n: usize) -> Result<TrialLog> {
        if n == 0 {
            return Err(Error::InvalidArgument("decimation must be >= 1".into()));
        }
        let mut header = self.header.clone();
        header.decimation *= n;
        Ok(TrialLog {
            header,
            frames: self.frames.iter().step_by(n).copied().collect(),
            choices: self.choices.clone(),
        })
    }

    /// Writes `path` (JSONL) and its annotation sidecar; returns the
    /// sidecar path.
    pub fn write(&self, path: &Path, decimate: usize) -> Result<PathBuf> {
        let log = if decimate > 1 {
            self.decimated(decimate)?
        } else {
            self.clone()
        };
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        serde_json::to_writer(&mut w, &log.header).map_err(|e| Error::json("log header", e))?;
        w.write_all(b"\n").map_err(io)?;
        for f in &log.frames {
            serde_json::to_writer(&mut w, &FrameRecord::from(f))
                .map_err(|e| Error::json("log frame", e))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)?;

        let side = sidecar_path(path);
        let text = serde_json::to_string_pretty(&log.summary())
            .map_err(|e| Error::json("annotations", e))?;
        std::fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
        Ok(side)
    }

    /// Reads a JSONL log and, when present, its sidecar.
    pub fn read(path: &Path) -> Result<TrialLog> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument(format!("{} is empty", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let header: LogHeader = serde_json::from_str(&first)
            .map_err(|e| Error::json(format!("{} header", path.display()), e))?;
        let mut frames = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: FrameRecord = serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("{} line {}", path.display(), i + 2), e))?;
            frames.push(rec.into());
        }
        let side = sidecar_path(path);
        let choices = if side.exists() {
            read_summary(&side)?.choices
        } else {
            Vec::new()
        };
        Ok(TrialLog {
            header,
            frames,
            choices,
        })
    }
}

pub fn sidecar_path(log: &Path) -> PathBuf {
    let stem = log
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    log.with_file_name(format!("{stem}.choices.json"))
}

pub fn read_summary(path: &Path) -> Result<TrialSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = digits - 1 - x.abs().log10().floor() as i32;
    if e >= 0 {
        let s = 10f64.powi(e);
        (x * s).round() / s
    } else {
        let s = 10f64.powi(-e);
        (x / s).round() * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct FrameRecord {
    tick: u64,
    t_s: f64,
    x1_mm: f64,
    x2_mm: f64,
    v1_mm_s: f64,
    v2_mm_s: f64,
    f1_n: f64,
    f2_n: f64,
    f_couple_n: f64,
    cursor_x_mm: f64,
    target_x_mm: f64,
    color: Color,
    phase: Phase,
}

impl From<&Frame> for FrameRecord {
    fn from(f: &Frame) -> Self {
        let r = |x| round_sig(x, 6);
        let s = &f.state;
        Self {
            tick: s.tick,
            t_s: r(s.t),
            x1_mm: r(s.x1),
            x2_mm: r(s.x2),
            v1_mm_s: r(s.v1),
            v2_mm_s: r(s.v2),
            f1_n: r(s.f1),
            f2_n: r(s.f2),
            f_couple_n: r(s.f_couple),
            cursor_x_mm: r(f.cursor_x),
            target_x_mm: r(f.target_x),
            color: f.color,
            phase: f.phase,
        }
    }
}

impl From<FrameRecord> for Frame {
    fn from(r: FrameRecord) -> Self {
        Frame {
            state: DyadState {
                tick: r.tick,
                t: r.t_s,
                x1: r.x1_mm,
                x2: r.x2_mm,
                v1: r.v1_mm_s,
                v2: r.v2_mm_s,
                f1: r.f1_n,
                f2: r.f2_n,
                f_couple: r.f_couple_n,
            },
            cursor_x: r.cursor_x_mm,
            target_x: r.target_x_mm,
            color: r.color,
            phase: r.phase,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(round_sig(1.23456789, 6), 1.23457);
        assert_eq!(round_sig(-0.000123456789, 6), -0.000123457);
        assert_eq!(round_sig(123456789.0, 6), 123457000.0);
        assert_eq!(round_sig(0.0, 6), 0.0);
        assert_eq!(round_sig(25.0, 6), 25.0);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/a/trial_3.jsonl")),
            PathBuf::from("/tmp/a/trial_3.choices.json")
        );
    }
}
