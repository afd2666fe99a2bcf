use mixlin::harness::output::{emit_outputs, plot_from_csv};
use mixlin::harness::{
    run_coverage, run_replications, run_verify, DelayMode, ExperimentConfig, PolicyName, ProfileChoice,
};
use mixlin::noise::NoiseSpec;

#[test]
fn every_policy_runs_and_records_consistent_traces() {
    for policy in [
        PolicyName::MixingLinucb,
        PolicyName::IidOful,
        PolicyName::Greedy,
        PolicyName::UniformRandom,
        PolicyName::Oracle,
    ] {
        let cfg = ExperimentConfig {
            policy,
            horizon: 120,
            replications: 2,
            ..ExperimentConfig::default()
        };
        for r in run_replications(&cfg, 1).unwrap() {
            assert_eq!(r.rounds.len(), 120);
            assert!(r.trace.instantaneous.iter().all(|&v| v >= 0.0));
            let total: f64 = r.trace.instantaneous.iter().sum();
            assert!((total - r.total_regret()).abs() < 1e-9);
            for rec in &r.rounds {
                let mean: f64 = r.theta_star.iter().zip(&rec.x).map(|(a, b)| a * b).sum();
                assert_eq!(rec.y - mean, rec.eps);
            }
            if policy == PolicyName::Oracle {
                assert_eq!(r.total_regret(), 0.0);
            }
        }
    }
}

#[test]
fn noise_kinds_and_profiles_run_clean_under_verify() {
    let cases = [
        (NoiseSpec::Zero, ProfileChoice::None),
        (NoiseSpec::IidGaussian, ProfileChoice::None),
        (NoiseSpec::Dyadic { levels: 4, rate: 1.0 }, ProfileChoice::Envelope),
        (
            NoiseSpec::SuperposedChains {
                weights: vec![0.5, 0.5],
                flip_probs: vec![0.1, 0.3],
            },
            ProfileChoice::Certified,
        ),
    ];
    for (noise, profile) in cases {
        let cfg = ExperimentConfig {
            noise,
            profile,
            dim: 3,
            horizon: 200,
            replications: 3,
            delay: DelayMode::Fixed(4),
            verify_spa_rounds: 10,
            ..ExperimentConfig::default()
        };
        let report = run_verify(&cfg, 2).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.traces.iter().all(|t| t.decomposition_residual.is_some()));
    }
}

#[test]
fn zero_noise_coverage_is_total() {
    let cfg = ExperimentConfig {
        noise: NoiseSpec::Zero,
        profile: ProfileChoice::None,
        horizon: 100,
        replications: 100,
        ..ExperimentConfig::default()
    };
    let report = run_coverage(&cfg, 2).unwrap();
    assert_eq!(report.covered, 100);
    assert_eq!(report.frequency, 1.0);
}

#[test]
fn outputs_can_be_replotted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        horizon: 80,
        replications: 3,
        ..ExperimentConfig::default()
    };
    let res = run_replications(&cfg, 1).unwrap();
    let files = emit_outputs(&cfg, &res, dir.path()).unwrap();
    let before = std::fs::read(&files.regret_svg).unwrap();
    let replot = dir.path().join("replot");
    plot_from_csv(&files.rounds_csv, &replot, Some(cfg.delta)).unwrap();
    let after = std::fs::read(replot.join("regret.svg")).unwrap();
    assert_eq!(before, after);
    assert!(replot.join("coverage.svg").is_file());
}
