use dyad_core::predict::{
    first_crossing, predict, reports_to_csv, evaluate, ChoiceWindow, CrossingSource, PredictorKind,
};
use dyad_core::{Direction, Side};
use proptest::prelude::*;

fn walk(steps: Vec<f64>, start: f64) -> Vec<f64> {
    steps
        .iter()
        .scan(start, |x, d| {
            *x += d;
            Some(*x)
        })
        .collect()
}

fn window() -> impl Strategy<Value = ChoiceWindow> {
    (50usize..400, -2.0..2.0f64).prop_flat_map(|(n, x0)| {
        (
            prop::collection::vec(-0.4..0.4f64, n),
            prop::collection::vec(-0.4..0.4f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
        )
            .prop_map(move |(d1, d2, f)| {
                let x1 = walk(d1, x0);
                let x2 = walk(d2, x0);
                let c = x1.iter().zip(&x2).map(|(a, b)| (a + b) / 2.0).collect();
                ChoiceWindow::from_series(0.001, 0.0, c, x1, x2, f, None, Direction::Right).unwrap()
            })
    })
}

fn shifted(w: &ChoiceWindow, dt0: f64) -> ChoiceWindow {
    ChoiceWindow::from_series(
        w.dt,
        w.t_start + dt0,
        w.cursor.clone(),
        w.x1.clone(),
        w.x2.clone(),
        w.force_sum.clone(),
        None,
        w.truth,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn mirrored_window_flips_every_call(w in window()) {
        let m = w.mirrored();
        for kind in PredictorKind::WINDOWED {
            let a = predict(kind, &w).unwrap();
            let b = predict(kind, &m).unwrap();
            prop_assert_eq!(a.statistic, -b.statistic);
            if !a.tie {
                prop_assert_eq!(a.call.side().map(Side::opposite), b.call.side());
            }
        }
        let a = first_crossing(&w, 3.0, CrossingSource::Handles).unwrap();
        let b = first_crossing(&m, 3.0, CrossingSource::Handles).unwrap();
        prop_assert_eq!(a.call.side().map(Side::opposite), b.call.side());
        prop_assert_eq!(a.decision_time, b.decision_time);
    }

    #[test]
    fn time_shift_moves_only_decision_time(w in window(), shift in 0.0..5.0f64) {
        let s = shifted(&w, shift);
        for kind in PredictorKind::WINDOWED {
            let a = predict(kind, &w).unwrap();
            let b = predict(kind, &s).unwrap();
            prop_assert_eq!(a.call, b.call);
            prop_assert_eq!(a.statistic, b.statistic);
            prop_assert!((b.decision_time - a.decision_time - shift).abs() < 1e-9);
        }
        let a = first_crossing(&w, 3.0, CrossingSource::Handles).unwrap();
        let b = first_crossing(&s, 3.0, CrossingSource::Handles).unwrap();
        prop_assert_eq!(a.call, b.call);
    }

    #[test]
    fn positive_scaling_keeps_calls(w in window(), k in 0.1..10.0f64) {
        let sc = |v: &Vec<f64>| v.iter().map(|x| x * k).collect::<Vec<_>>();
        let s = ChoiceWindow::from_series(
            w.dt, w.t_start, sc(&w.cursor), sc(&w.x1), sc(&w.x2), sc(&w.force_sum), None, w.truth,
        ).unwrap();
        for kind in PredictorKind::WINDOWED {
            let a = predict(kind, &w).unwrap();
            let b = predict(kind, &s).unwrap();
            if a.statistic.abs() > 1e-9 {
                prop_assert_eq!(a.call, b.call);
            }
        }
    }

    #[test]
    fn crossing_threshold_is_monotone(w in window(), lo in 0.5..3.0f64, extra in 0.0..3.0f64) {
        let a = first_crossing(&w, lo, CrossingSource::Handles).unwrap();
        let b = first_crossing(&w, lo + extra, CrossingSource::Handles).unwrap();
        if b.call.side().is_some() {
            prop_assert!(a.call.side().is_some());
            prop_assert!(a.decision_time <= b.decision_time);
        }
    }
}

#[test]
fn flat_window_ties_to_right() {
    let z = vec![0.0; 100];
    let w = ChoiceWindow::from_series(0.001, 0.0, z.clone(), z.clone(), z.clone(), z, None, Direction::Left)
        .unwrap();
    for kind in PredictorKind::WINDOWED {
        let p = predict(kind, &w).unwrap();
        assert!(p.tie, "{kind}");
        assert_eq!(p.call.side(), Some(Side::Right));
    }
    assert!(first_crossing(&w, 7.5, CrossingSource::Handles).unwrap().call.side().is_none());
}

#[test]
fn mismatched_series_are_rejected() {
    let r = ChoiceWindow::from_series(0.001, 0.0, vec![0.0; 3], vec![0.0; 2], vec![0.0; 3], vec![0.0; 3], None, Direction::Left);
    assert!(r.is_err());
    let r = ChoiceWindow::from_series(0.001, 0.0, vec![], vec![], vec![], vec![], None, Direction::Left);
    assert!(r.is_err());
}

#[test]
fn evaluation_counts_and_csv() {
    let mk = |x: f64| {
        let v = vec![x; 10];
        ChoiceWindow::from_series(0.001, 0.0, v.clone(), v.clone(), v.clone(), v, None, Direction::Right).unwrap()
    };
    let preds: Vec<_> = [1.0, 2.0, -1.0, 3.0]
        .iter()
        .map(|x| predict(PredictorKind::Xt, &mk(*x)).unwrap())
        .collect();
    let r = evaluate(&preds, &[Side::Right; 4]).unwrap();
    assert_eq!((r.n, r.correct), (4, 3));
    assert_eq!(r.accuracy, 0.75);
    let csv = reports_to_csv(&[r]);
    assert!(csv.starts_with("name,accuracy,mean_decision_time_s,call_rate\n"));
    assert!(csv.contains("XT,0.75"));
    assert!(evaluate(&preds, &[Side::Right; 3]).is_err());
}
