//! End-to-end experiments: library construction from a configuration, the
//! regime-switching run and the noisy Monte-Carlo sweep, plus their CSV
//! outputs.

mod config;
mod experiment;
mod report;

pub use config::{
    table_regimes, ExperimentConfig, InitialCondition, NoiseConfig, RegimeSpec, RomConfig, ScheduleConfig,
    ScheduleSegment, SensorConfig, SnapshotWindow,
};
pub use experiment::{
    build_all, manifest_for, run_monte_carlo, run_switching_experiment, save_with_manifest, simulate_regime,
    simulate_switching, monte_carlo_on, switching_on, Identifier, MonteCarloStats, SegmentOutcome, TimeCell,
};
pub use report::{
    read_measurements_csv, write_accuracy_csv, write_coefficients_csv, write_measurement_csv, write_switching_csv,
    MeasurementGroup, MeasurementRow,
};
