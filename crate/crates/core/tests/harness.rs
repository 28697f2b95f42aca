//! Experiment-level behaviour: shipped configuration, determinism, histogram
//! bookkeeping and the noiseless decisions.

use std::path::Path;
use std::sync::OnceLock;

use sparsedyn::cqgle::ScheduleRun;
use sparsedyn::harness::{
    build_all, monte_carlo_on, simulate_switching, switching_on, write_accuracy_csv, write_switching_csv,
    ExperimentConfig, ScheduleSegment,
};
use sparsedyn::library::ModalLibrary;
use sparsedyn::RegimeId;

struct Fixture {
    cfg: ExperimentConfig,
    lib: ModalLibrary,
    run: ScheduleRun,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let cfg = ExperimentConfig::default();
        let lib = build_all(&cfg).unwrap();
        let run = simulate_switching(&cfg).unwrap();
        Fixture { cfg, lib, run }
    })
}

#[test]
fn shipped_config_is_the_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/table1.toml");
    assert_eq!(ExperimentConfig::load(&path).unwrap(), ExperimentConfig::default());
}

#[test]
fn noiseless_switching_names_each_segment() {
    let f = fixture();
    let out = switching_on(&f.cfg, &f.lib, &f.run).unwrap();
    let predicted: Vec<_> = out.iter().map(|o| o.predicted()).collect();
    assert_eq!(predicted, vec![Some(RegimeId(1)), Some(RegimeId(3)), Some(RegimeId(5))]);
    assert!(out.iter().all(|o| o.classification.as_ref().unwrap().margin > 0.0));
    assert!(out.iter().all(|o| o.recon_rel_l2.is_some()));
}

#[test]
fn noiseless_monte_carlo_is_perfect() {
    let f = fixture();
    let mut cfg = f.cfg.clone();
    cfg.noise.trials = 3;
    let stats = monte_carlo_on(&cfg, &f.lib, &f.run).unwrap();
    for k in 0..stats.cells.len() {
        assert_eq!(stats.accuracy(k), 100.0);
    }
}

#[test]
fn histograms_conserve_trials() {
    let f = fixture();
    let mut cfg = f.cfg.clone();
    cfg.noise.sigma = 0.5;
    cfg.noise.trials = 40;
    let stats = monte_carlo_on(&cfg, &f.lib, &f.run).unwrap();
    for cell in &stats.cells {
        assert_eq!(cell.trials(), 40);
        assert_eq!(cell.counts.len(), 6);
    }
    cfg.noise.aggregate_window = 5;
    let voted = monte_carlo_on(&cfg, &f.lib, &f.run).unwrap();
    assert!(voted.cells.iter().all(|c| c.trials() == 40));
    assert_eq!(voted.solves, 40 * 3 * 5);
}

#[test]
fn reports_are_deterministic() {
    let f = fixture();
    let mut cfg = f.cfg.clone();
    cfg.noise.sigma = 0.2;
    cfg.noise.trials = 60;
    let dir = tempfile::tempdir().unwrap();
    let emit = |name: &str| {
        let stats = monte_carlo_on(&cfg, &f.lib, &f.run).unwrap();
        let p = dir.path().join(name);
        write_accuracy_csv(&stats, &p).unwrap();
        std::fs::read(p).unwrap()
    };
    assert_eq!(emit("a.csv"), emit("b.csv"));

    let sw = |name: &str| {
        let out = switching_on(&cfg, &f.lib, &f.run).unwrap();
        let p = dir.path().join(name);
        write_switching_csv(&out, &p).unwrap();
        std::fs::read_to_string(p).unwrap()
    };
    let text = sw("s1.csv");
    assert_eq!(text, sw("s2.csv"));
    assert!(text.starts_with("segment,true_regime,predicted_regime,margin,recon_rel_l2\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn single_segment_schedule_is_classified_as_that_regime() {
    let f = fixture();
    let mut cfg = f.cfg.clone();
    cfg.schedule.segments = vec![ScheduleSegment { start: 0.0, regime: RegimeId(6) }];
    cfg.schedule.t_end = 60.0;
    cfg.schedule.measurement_times = vec![50.0];
    cfg.validate().unwrap();
    let run = simulate_switching(&cfg).unwrap();
    let out = switching_on(&cfg, &f.lib, &run).unwrap();
    assert_eq!(out[0].predicted(), Some(RegimeId(6)));
}
