use qdopt::diagnostics::{
    export_run, file_stem, replay_best, sweep_transmission_maxima, transmission_trace, wave_modulus,
    TrajectoryLog,
};
use qdopt::harness::run_trial;
use qdopt::optimizer::seeded_rng;
use qdopt::{
    double_well, make_benchmark, paraboloid, Algorithm, AlgorithmConfig, BipConfig, DoubleWellParams, Event,
    EventKind, Observer, RunSettings,
};
use rand::Rng;

fn protocol_log(seed: u64, max_fes: u64) -> (TrajectoryLog, qdopt::TrialOutcome) {
    let spec = double_well(DoubleWellParams::default()).unwrap();
    let config = AlgorithmConfig::Bip(BipConfig {
        k: 5,
        init: Some(vec![2.0, 2.0]),
        settings: RunSettings { seed, ..RunSettings::default() },
        ..BipConfig::default()
    });
    let mut log = TrajectoryLog::new(&spec);
    let out = run_trial(&config, &spec, max_fes, &mut log).unwrap();
    (log, out)
}

#[test]
fn replay_reproduces_best_so_far() {
    for alg in Algorithm::ALL {
        let spec = make_benchmark(3, 4).unwrap();
        let mut log = TrajectoryLog::new(&spec);
        let out = run_trial(&AlgorithmConfig::default_for(alg).with_seed(9), &spec, 5_000, &mut log).unwrap();
        let replayed: Vec<(u64, f64)> =
            replay_best(&log).into_iter().map(|(i, f)| (i, spec.error_of(f))).collect();
        let trace = &out.error_trace;
        // the stored trace carries one closing point at the last evaluation
        assert_eq!(&trace[..trace.len() - 1], &replayed[..], "{alg}");
    }
}

#[test]
fn evaluation_records_are_ordered_and_bounded() {
    let (log, out) = protocol_log(1, 200);
    let evals: Vec<u64> = log
        .records()
        .iter()
        .filter(|r| r.kind.is_evaluation())
        .map(|r| r.evaluation_index)
        .collect();
    assert!(evals.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(evals.len() as u64, out.evals_used);
    assert!(evals.len() <= 200);
    for r in log.records().iter().filter(|r| r.kind == EventKind::AcceptTunnel) {
        let p = r.probability.unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }
    let init: Vec<_> = log.records().iter().filter(|r| r.kind == EventKind::Init).collect();
    assert_eq!(init.len(), 5);
    assert!(init.iter().all(|r| r.position == [2.0, 2.0]));
}

#[test]
fn transmission_jumps_at_scale_changes() {
    let spec = make_benchmark(7, 10).unwrap();
    let mut log = TrajectoryLog::new(&spec);
    run_trial(&AlgorithmConfig::default_for(Algorithm::Bip).with_seed(2), &spec, 20_000, &mut log).unwrap();
    assert!(log.count(EventKind::ScaleHalve) >= 3);
    let maxima = sweep_transmission_maxima(&log);
    let rises = maxima
        .windows(2)
        .filter(|w| w[0].scale_index != w[1].scale_index && w[1].max_probability > w[0].max_probability)
        .count();
    assert!(rises >= 1);
    assert_eq!(
        transmission_trace(&log).len(),
        log.records().iter().filter(|r| r.probability.is_some()).count()
    );
}

#[test]
fn uniform_positions_give_flat_histogram() {
    let spec = paraboloid(2).unwrap();
    let mut log = TrajectoryLog::new(&spec);
    let mut rng = seeded_rng(17);
    for i in 0..10_000u64 {
        let x = [rng.random_range(-5.12..5.12), rng.random_range(-5.12..5.12)];
        log.on_event(&Event::evaluation(i + 1, i, 0, EventKind::AcceptBetter, &x, 0.0));
    }
    let h = wave_modulus(&log, 10).unwrap();
    let max = h.density.iter().cloned().fold(f64::MIN, f64::max);
    let min = h.density.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min < 2.0, "{max} / {min}");
    assert!((h.integrals()[0] - 1.0).abs() <= 1e-12);
    assert_eq!(h.total, 10_000);
}

#[test]
fn high_dimensional_logs_use_marginals() {
    let spec = make_benchmark(7, 5).unwrap();
    let mut log = TrajectoryLog::new(&spec);
    run_trial(&AlgorithmConfig::default_for(Algorithm::Bip).with_seed(3), &spec, 2_000, &mut log).unwrap();
    let h = wave_modulus(&log, 20).unwrap();
    assert!(h.marginal);
    assert_eq!(h.integrals().len(), 5);
    assert!(h.integrals().iter().all(|v| (v - 1.0).abs() <= 1e-12));
}

#[test]
fn export_writes_named_files() {
    let dir = tempfile::tempdir().unwrap();
    let (log, out) = protocol_log(4, 200);
    let files = export_run(dir.path(), "bip", "double_well", 4, &log, 50).unwrap();
    let stem = file_stem("bip", "double_well", 2, 4);
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(
        names,
        [format!("{stem}_events.csv"), format!("{stem}_histogram.json"), format!("{stem}_transmission.json")]
    );
    let csv = std::fs::read_to_string(&files[0]).unwrap();
    assert!(csv.starts_with("evaluation_index,generation,particle_index,event,"));
    assert_eq!(csv.lines().count(), log.len() + 1);
    let hist: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[1]).unwrap()).unwrap();
    assert_eq!(hist["schema_version"], 1);
    assert!(out.evals_used == 200);
}
