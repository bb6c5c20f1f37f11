use polyloop_core::fixtures;
use polyloop_core::rater::{BiasConfig, RaterConfig, UtilityWeights};
use polyloop_core::sequence::{read_jsonl, write_jsonl, SessionState};
use polyloop_core::session::SessionConfig;
use polyloop_core::simulate::{run_simulated_session, MeshObjective, SimulationOptions, SyntheticObjective};

fn rater(bias: BiasConfig) -> RaterConfig {
    RaterConfig {
        weights: UtilityWeights {
            quality: 1.0,
            reduction: 0.0,
        },
        bias,
        seed: 4,
        ..Default::default()
    }
}

fn options(seed: u64, max_iterations: usize) -> SimulationOptions {
    SimulationOptions {
        session: SessionConfig {
            max_iterations,
            seed,
            ..Default::default()
        },
        stop_on_satisfaction: true,
    }
}

#[test]
fn synthetic_sessions_replay_identically() {
    let noisy = rater(BiasConfig {
        anchoring_weight: 0.3,
        transient_noise_sd: 0.2,
        ..Default::default()
    });
    for seed in 0..3 {
        let objective = SyntheticObjective::random(3, 50 + seed);
        let a = run_simulated_session(&objective, &noisy, options(seed, 11)).unwrap();
        let b = run_simulated_session(&objective, &noisy, options(seed, 11)).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert!(a.state.is_terminal());
        if a.state == SessionState::TerminatedSatisfied {
            assert_eq!(a.satisfied_at, Some(a.len()));
        }
    }
}

#[test]
fn mesh_session_runs_and_round_trips() {
    let mesh = fixtures::by_name("icosphere").unwrap();
    let objective = MeshObjective::with_resolution("icosphere", mesh, 64).unwrap();
    let weights = RaterConfig {
        weights: UtilityWeights {
            quality: 0.5,
            reduction: 0.5,
        },
        ..rater(BiasConfig::default())
    };
    let seq = run_simulated_session(&objective, &weights, options(1, 3)).unwrap();
    seq.validate().unwrap();
    assert!(seq.len() <= 3);
    for it in &seq.iterations {
        for v in &it.variants {
            assert!(v.face_count > 0 && (0.0..=1.0).contains(&v.reduction_ratio));
            assert!(v.quality.mean <= 1.0 + 1e-12);
        }
    }
    let again = run_simulated_session(&objective, &weights, options(1, 3)).unwrap();
    assert_eq!(seq, again);

    let mut buf = Vec::new();
    write_jsonl([&seq], &mut buf).unwrap();
    assert_eq!(read_jsonl(&buf[..]).unwrap(), vec![seq]);
}

#[test]
fn running_to_the_cap_records_when_satisfaction_fired() {
    let objective = SyntheticObjective::random(3, 1000);
    let opts = SimulationOptions {
        stop_on_satisfaction: false,
        ..options(0, 11)
    };
    let seq = run_simulated_session(&objective, &rater(BiasConfig::default()), opts).unwrap();
    assert_eq!(seq.len(), 11);
    assert_eq!(seq.state, SessionState::TerminatedMaxIter);
    if let Some(k) = seq.satisfied_at {
        let top = |i: usize| {
            seq.iterations[i - 1]
                .variants
                .iter()
                .any(|v| v.rating.is_some_and(|r| r.value() == 5))
        };
        assert!(k >= 2 && top(k) && top(k - 1));
    }
}
