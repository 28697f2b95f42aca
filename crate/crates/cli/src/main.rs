use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparsedyn::cqgle::{initial_condition, simulate, GridSpec};
use sparsedyn::harness::{
    build_all, monte_carlo_on, read_measurements_csv, save_with_manifest, simulate_switching, switching_on,
    write_accuracy_csv, write_coefficients_csv, write_measurement_csv, write_switching_csv, ExperimentConfig,
    Identifier,
};
use sparsedyn::library::{load_library, load_manifest, manifest_path};
use sparsedyn::sensing::{place_sensors, Measurement, FIVE_SENSORS, THREE_SENSORS};
use sparsedyn::sparse::{SolverConfig, SolverKind};
use sparsedyn::{CVector, Error, RegimeId};

#[derive(Parser)]
#[command(name = "sparsedyn", version, about = "Sparse regime identification for the cubic-quintic Ginzburg-Landau equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one regime and write its snapshot window as CSV.
    Simulate {
        #[arg(long)]
        regime: u32,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the modal library for every configured regime.
    BuildLibrary {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify each time group of a measurement CSV against a library.
    Classify {
        #[arg(long)]
        lib: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long, default_value = "l1")]
        solver: SolverKind,
    },
    /// Run the switching or Monte-Carlo experiment.
    Experiment {
        kind: ExperimentKind,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        lib: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_parser = ["3", "5"])]
        sensors: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        solver: Option<SolverKind>,
        /// Majority vote over this many unit-spaced samples per measurement time.
        #[arg(long)]
        aggregate_window: Option<usize>,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// TOML experiment configuration; the built-in six-regime setup if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        match &self.config {
            Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("{}: {io}", p.display())),
                other => other,
            }),
            None => Ok(ExperimentConfig::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Switching,
    Montecarlo,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonFiniteField { .. } | Error::EigenFailure | Error::DegenerateData(_) => 3,
        Error::Io(_) | Error::Csv(_) | Error::Format(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate { regime, config, out } => {
            let cfg = config.load()?;
            let params = cfg.params(RegimeId(regime))?;
            let ic = initial_condition(&cfg.grid, cfg.initial_condition.amplitude, cfg.initial_condition.width)?;
            let traj = simulate(&params, &ic, cfg.snapshots.end, &cfg.integration, &cfg.snapshots.times())?;
            let mut w = csv::Writer::from_path(&out).map_err(csv_io)?;
            w.write_record(["time", "x", "real", "imag"]).map_err(csv_io)?;
            for (j, t) in traj.times.iter().enumerate() {
                for (i, z) in traj.data.column(j).iter().enumerate() {
                    w.write_record([t.to_string(), cfg.grid.x(i).to_string(), z.re.to_string(), z.im.to_string()])
                        .map_err(csv_io)?;
                }
            }
            w.flush()?;
            println!("wrote {} snapshots of regime {regime} to {}", traj.times.len(), out.display());
        }
        Command::BuildLibrary { config, out } => {
            let cfg = config.load()?;
            let lib = build_all(&cfg)?;
            save_with_manifest(&cfg, &lib, &out)?;
            let ranks: Vec<String> = lib.blocks().iter().map(|b| format!("{}:{}", b.regime, b.rank())).collect();
            println!("library p = {} (regime:rank {}) written to {}", lib.p(), ranks.join(" "), out.display());
        }
        Command::Classify { lib, measurements, solver } => classify(&lib, &measurements, solver)?,
        Command::Experiment { kind, config, lib, out_dir, sensors, sigma, trials, seed, solver, aggregate_window } => {
            let mut cfg = config.load()?;
            match sensors.as_deref() {
                Some("3") => cfg.sensors.positions = THREE_SENSORS.to_vec(),
                Some("5") => cfg.sensors.positions = FIVE_SENSORS.to_vec(),
                _ => {}
            }
            if let Some(s) = sigma {
                cfg.noise.sigma = s;
            }
            if let Some(n) = trials {
                cfg.noise.trials = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(k) = solver {
                cfg.solver = SolverConfig { kind: k, ..cfg.solver };
            }
            if let Some(w) = aggregate_window {
                cfg.noise.aggregate_window = w;
            }
            cfg.validate()?;
            let lib = load_library(&lib)?;
            fs::create_dir_all(&out_dir)?;
            let run = simulate_switching(&cfg)?;
            match kind {
                ExperimentKind::Switching => {
                    let outcomes = switching_on(&cfg, &lib, &run)?;
                    write_switching_csv(&outcomes, &out_dir.join("switching.csv"))?;
                    write_coefficients_csv(&outcomes, &out_dir.join("coefficients.csv"))?;
                    let sensors = place_sensors(&cfg.grid, &cfg.sensors.positions)?;
                    let ms: Vec<Measurement> = outcomes.iter().map(|o| o.measurement.clone()).collect();
                    write_measurement_csv(&sensors, &ms, &out_dir.join("measurements.csv"))?;
                    for o in &outcomes {
                        let pred = o.predicted().map_or("none".into(), |r| r.to_string());
                        let err = o.recon_rel_l2.map_or("n/a".into(), |e| format!("{e:.4}"));
                        println!(
                            "segment {} t = {}: true {} predicted {} recon_rel_l2 {}",
                            o.segment, o.measurement.time, o.true_regime, pred, err
                        );
                    }
                }
                ExperimentKind::Montecarlo => {
                    let stats = monte_carlo_on(&cfg, &lib, &run)?;
                    write_accuracy_csv(&stats, &out_dir.join("accuracy.csv"))?;
                    for (k, cell) in stats.cells.iter().enumerate() {
                        println!(
                            "{} (t = {}, true {}): {:.1}% correct",
                            cell.label,
                            cell.time,
                            cell.true_regime,
                            stats.accuracy(k)
                        );
                    }
                    if stats.non_converged > 0 {
                        println!("{} of {} sparse solves hit the iteration cap", stats.non_converged, stats.solves);
                    }
                }
            }
        }
    }
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Csv(e)
}

fn classify(lib_path: &Path, measurements: &Path, solver: SolverKind) -> Result<(), Error> {
    let lib = load_library(lib_path)?;
    let mpath = manifest_path(lib_path);
    let grid = if mpath.exists() {
        load_manifest(&mpath)?.grid
    } else {
        GridSpec::new(lib.n(), -20.0, 20.0)?
    };
    if grid.n() != lib.n() {
        return Err(Error::DimensionMismatch { expected: lib.n(), found: grid.n() });
    }
    println!("time,predicted_regime,margin");
    for group in read_measurements_csv(measurements)? {
        let time = group.time;
        let sensors = place_sensors(&grid, &group.positions)?;
        // place_sensors sorts by node; carry the values along
        let mut pairs: Vec<_> = group.positions.iter().zip(&group.values).collect();
        pairs.sort_by_key(|(x, _)| grid.nearest_index(**x));
        let values = CVector::from_iterator(pairs.len(), pairs.iter().map(|p| *p.1));
        let y = Measurement { values, time, sigma: 0.0 };
        let id = Identifier::new(&lib, sensors, SolverConfig::new(solver))?;
        match id.identify(&y) {
            Ok(c) => println!("{time},{},{}", c.regime, c.margin),
            Err(Error::AllZero) => println!("{time},none,0"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
