use dyad_core::harness::rng::{split, stream};
use dyad_core::harness::trial::run_simulation;
use dyad_core::harness::{batch, run_trial, Simulation, TrialMeta};
use dyad_core::{
    generate_script, Agent, AgentChoiceRecord, AgentKind, Condition, DecisionType, HumanSurrogate,
    Observation, Phase, RobotPartner, ScriptConfig, Subject, SurrogateConfig, TrialConfig,
};

struct Passive;

impl Agent for Passive {
    fn kind(&self) -> AgentKind {
        AgentKind::Pointer
    }
    fn force(&mut self, _: &Observation) -> dyad_core::Result<f64> {
        Ok(0.0)
    }
    fn choice_records(&self) -> Vec<AgentChoiceRecord> {
        Vec::new()
    }
}

#[test]
fn robot_with_passive_partner_takes_highlighted_side() {
    let cfgs = TrialConfig::default();
    let mut informed = 0;
    for i in 0..4u64 {
        let script = generate_script(split(40, &[i]), &ScriptConfig::default()).unwrap();
        let robot = RobotPartner::new(cfgs.partner, stream(i, &[1]));
        let sim = Simulation::new(script, cfgs.sim, Subject::One, Box::new(robot), Some(Box::new(Passive)))
            .unwrap();
        let log = run_simulation(sim, Condition::Hrp, &cfgs, i, TrialMeta::default()).unwrap();
        for c in &log.choices {
            if let Some(h) = c.highlight_1 {
                informed += 1;
                assert_eq!(c.direction.side(), Some(h), "choice {}", c.index);
                assert_eq!(c.agents[0].unwrap().final_side, Some(h));
            }
        }
    }
    assert!(informed > 30);
}

#[test]
fn solo_surrogate_follows_its_highlight() {
    let per_trial = batch(Condition::Alone, 50, 41, &ScriptConfig::default(), &TrialConfig::default(), |log| {
        Ok(log
            .choices
            .iter()
            .filter_map(|c| c.highlight_1.map(|h| c.direction.side() == Some(h)))
            .collect::<Vec<_>>())
    })
    .unwrap();
    let all: Vec<bool> = per_trial.into_iter().flatten().collect();
    let ok = all.iter().filter(|b| **b).count();
    assert!(all.len() > 500);
    assert_eq!(ok, all.len(), "{ok}/{}", all.len());
}

#[test]
fn stubborner_surrogate_wins_conflicts() {
    let cfgs = TrialConfig::default();
    let stubborn = SurrogateConfig { stubbornness: 5.0, ..cfgs.surrogate };
    let (mut wins, mut n) = (0, 0);
    for i in 0..12u64 {
        let script = generate_script(split(42, &[i]), &ScriptConfig::default()).unwrap();
        let a = HumanSurrogate::new(stubborn, true, stream(i, &[1]));
        let b = HumanSurrogate::new(cfgs.surrogate, true, stream(i, &[2]));
        let sim = Simulation::new(script, cfgs.sim, Subject::One, Box::new(a), Some(Box::new(b))).unwrap();
        let log = run_simulation(sim, Condition::Hfop, &cfgs, i, TrialMeta::default()).unwrap();
        for c in log.choices.iter().filter(|c| c.decision_type == DecisionType::Oppo) {
            n += 1;
            wins += (c.direction.side() == c.highlight_1) as usize;
        }
    }
    assert!(n >= 40);
    let rate = wins as f64 / n as f64;
    assert!(rate > 0.8, "stubborn agent won {wins}/{n}");
}

#[test]
fn noiseless_solo_tracks_body_closely() {
    let cfgs = TrialConfig { surrogate: TrialConfig::default().surrogate.noiseless(), ..TrialConfig::default() };
    let script = generate_script(43, &ScriptConfig::default()).unwrap();
    let log = run_trial(Condition::Alone, &script, &cfgs, 43).unwrap();
    let body: Vec<_> = log.frames.iter().filter(|f| f.phase == Phase::Body).collect();
    let ss: f64 = body.iter().map(|f| (f.cursor_x - f.target_x).powi(2)).sum();
    let rms = (ss / body.len() as f64).sqrt();
    assert!(rms < 2.0, "body rms {rms} mm");
}

#[test]
fn leader_moves_before_follower() {
    let cfgs = TrialConfig::default();
    for c in [Condition::Hfop, Condition::Hrp] {
        let per_trial = batch(c, 6, 44, &ScriptConfig::default(), &cfgs, |log| Ok(log.choices)).unwrap();
        let mut resolved = 0;
        for a in per_trial.iter().flatten() {
            if let (Some(l), Some(f)) = (a.leader_start_s, a.follower_start_s) {
                if c == Condition::Hfop {
                    assert!(l <= f, "{c}: leader {l} follower {f}");
                }
                resolved += (l < f) as usize;
            }
        }
        assert!(resolved > 40, "{c}: {resolved}");
    }
}
