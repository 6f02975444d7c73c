use dyad_core::harness::Condition;
use dyad_core::{Color, Direction, Phase, Side};
use dyad_server::protocol::{
    decode, encode, ChoicePreview, PathPoint, ReportSummary, ScriptPreview, SessionMessage,
};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, Just(0.0), Just(-0.0), -1.0..1.0f64]
}

fn condition() -> impl Strategy<Value = Condition> {
    prop::sample::select(vec![Condition::Hfop, Condition::Hrp, Condition::Alone, Condition::RobotAlone])
}

fn message() -> impl Strategy<Value = SessionMessage> {
    let side = prop::option::of(prop::sample::select(vec![Side::Left, Side::Right]));
    prop_oneof![
        (condition(), ".{0,24}").prop_map(|(role, session)| SessionMessage::Hello { role, session }),
        (any::<u64>(), finite(), finite()).prop_map(|(seq, t_client_ms, handle_x_mm)| {
            SessionMessage::Input { seq, t_client_ms, handle_x_mm }
        }),
        (
            ".{0,12}",
            1u8..=2,
            finite(),
            any::<u64>(),
            prop::collection::vec((any::<usize>(), finite(), finite(), finite()), 0..20),
        )
            .prop_map(|(session, handle, duration_s, seed, cs)| SessionMessage::Welcome {
                session,
                handle,
                script_preview: ScriptPreview {
                    duration_s,
                    seed,
                    choices: cs
                        .into_iter()
                        .map(|(index, a, b, c)| ChoicePreview { index, t_start_s: a, t_fork_s: b, t_merge_s: c })
                        .collect(),
                },
            }),
        (
            any::<u64>(),
            finite(),
            finite(),
            prop::sample::select(vec![Color::Green, Color::Orange, Color::Red]),
            prop::collection::vec((finite(), finite(), prop::option::of(finite())), 0..40),
            prop::sample::select(vec![Phase::Body, Phase::ChoicePre, Phase::ChoicePost, Phase::Merge]),
            side,
        )
            .prop_map(|(t_ms, c, o, color, w, phase, highlight)| SessionMessage::Frame {
                t_ms,
                cursor_x_mm: c,
                own_x_mm: o,
                color,
                path_window: w.into_iter().map(|(a, b, r)| PathPoint(a, b, r)).collect(),
                phase,
                highlight,
            }),
        (
            any::<usize>(),
            prop::sample::select(vec![Direction::Left, Direction::Right, Direction::Undecided]),
            0.0..=1.0f64,
        )
            .prop_map(|(index, direction, performance)| SessionMessage::ChoiceResult {
                index,
                direction,
                performance,
            }),
        (condition(), any::<usize>(), prop::option::of(finite()), any::<bool>(), finite(), prop::option::of(".{0,30}"))
            .prop_map(|(condition, choices, mean_performance, degraded, max_drift_ms, log_path)| {
                SessionMessage::End {
                    report_summary: ReportSummary {
                        condition,
                        choices,
                        mean_performance,
                        degraded,
                        max_drift_ms,
                        log_path,
                    },
                }
            }),
        ".{0,40}".prop_map(|message| SessionMessage::Error { message }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn every_message_round_trips(m in message()) {
        let text = encode(&m);
        prop_assert_eq!(decode(&text).unwrap(), m);
    }

    #[test]
    fn truncation_is_a_decode_error(m in message(), cut in 1usize..20) {
        let text = encode(&m);
        let end = text.len().saturating_sub(cut);
        let mut end = end;
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        prop_assert!(decode(&text[..end]).is_err());
    }
}

#[test]
fn missing_and_unknown_fields_are_named() {
    let e = decode(r#"{"proto_version":1,"type":"hello","role":"HRP"}"#).unwrap_err();
    assert!(e.to_string().contains("session"), "{e}");
    let e = decode(r#"{"proto_version":1,"type":"error","message":"x","extra":1}"#).unwrap_err();
    assert!(e.to_string().contains("extra"), "{e}");
    assert!(decode("[1,2]").is_err());
}
