//! Wire messages. Every WebSocket text frame carries one JSON object with a
//! `type` tag and the protocol version.

use dyad_core::harness::Condition;
use dyad_core::{Color, Direction, Phase, Side};
use serde::{Deserialize, Serialize};

pub const PROTO_VERSION: u32 = 1;

/// One look-ahead path sample: offset from the frame time, left branch (or
/// the single path) and the right branch while forked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint(pub f64, pub f64, pub Option<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoicePreview {
    pub index: usize,
    pub t_start_s: f64,
    pub t_fork_s: f64,
    pub t_merge_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptPreview {
    pub duration_s: f64,
    pub seed: u64,
    pub choices: Vec<ChoicePreview>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSummary {
    pub condition: Condition,
    pub choices: usize,
    pub mean_performance: Option<f64>,
    pub degraded: bool,
    pub max_drift_ms: f64,
    pub log_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SessionMessage {
    Hello {
        role: Condition,
        session: String,
    },
    Input {
        seq: u64,
        t_client_ms: f64,
        handle_x_mm: f64,
    },
    Welcome {
        session: String,
        handle: u8,
        script_preview: ScriptPreview,
    },
    Frame {
        t_ms: u64,
        cursor_x_mm: f64,
        own_x_mm: f64,
        color: Color,
        path_window: Vec<PathPoint>,
        phase: Phase,
        highlight: Option<Side>,
    },
    ChoiceResult {
        index: usize,
        direction: Direction,
        performance: f64,
    },
    End {
        report_summary: ReportSummary,
    },
    Error {
        message: String,
    },
}

#[derive(Serialize)]
struct Outgoing<'a> {
    proto_version: u32,
    #[serde(flatten)]
    msg: &'a SessionMessage,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DecodeError {
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("missing field `proto_version`")]
    MissingVersion,
    #[error("unsupported proto_version {0}, expected {PROTO_VERSION}")]
    Version(u64),
    #[error("invalid message: {0}")]
    Shape(String),
}

pub fn encode(msg: &SessionMessage) -> String {
    serde_json::to_string(&Outgoing {
        proto_version: PROTO_VERSION,
        msg,
    })
    .expect("messages always serialize")
}

pub fn decode(text: &str) -> Result<SessionMessage, DecodeError> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DecodeError::Syntax(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| DecodeError::Shape("expected a JSON object".into()))?;
    match obj.remove("proto_version") {
        None => return Err(DecodeError::MissingVersion),
        Some(v) => match v.as_u64() {
            Some(n) if n == PROTO_VERSION as u64 => {}
            Some(n) => return Err(DecodeError::Version(n)),
            None => return Err(DecodeError::Shape("`proto_version` must be an integer".into())),
        },
    }
    serde_json::from_value(value).map_err(|e| DecodeError::Shape(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_layout() {
        let m = SessionMessage::Input {
            seq: 3,
            t_client_ms: 12.5,
            handle_x_mm: -4.0,
        };
        let text = encode(&m);
        assert_eq!(
            text,
            r#"{"proto_version":1,"type":"input","seq":3,"t_client_ms":12.5,"handle_x_mm":-4.0}"#
        );
        assert_eq!(decode(&text).unwrap(), m);
    }

    #[test]
    fn errors_name_the_problem() {
        let e = decode(r#"{"proto_version":1,"type":"input","seq":1,"t_client_ms":0}"#).unwrap_err();
        assert!(e.to_string().contains("handle_x_mm"), "{e}");
        let e = decode(r#"{"proto_version":1,"type":"shout"}"#).unwrap_err();
        assert!(e.to_string().contains("shout"), "{e}");
        assert_eq!(decode(r#"{"type":"input"}"#).unwrap_err(), DecodeError::MissingVersion);
        assert_eq!(
            decode(r#"{"proto_version":2,"type":"input"}"#).unwrap_err(),
            DecodeError::Version(2)
        );
        assert!(matches!(decode(r#"{"proto_version":1,"ty"#), Err(DecodeError::Syntax(_))));
    }
}
