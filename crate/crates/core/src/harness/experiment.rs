use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::classify::{classify_with, project_onto_block, BlockScore, Classification};
use crate::cqgle::{initial_condition, simulate, ScheduleRun, simulate_schedule};
use crate::library::{build_library, manifest_path, save_library, save_manifest, Manifest, ManifestRegime, ModalLibrary};
use crate::pod::{pod_basis, SnapshotMatrix};
use crate::rom::{build_galerkin, integrate_rom, reconstruct_field};
use crate::sensing::{compressed_dictionary, measure_with, place_sensors, Measurement, SensorSet};
use crate::sparse::SolverConfig;
use crate::{CMatrix, CVector, Error, RegimeId, Result};

/// Snapshots of one regime over the configured window, started from the
/// configured initial condition at `t = 0`.
pub fn simulate_regime(cfg: &ExperimentConfig, regime: RegimeId) -> Result<SnapshotMatrix> {
    let params = cfg.params(regime)?;
    let ic = initial_condition(&cfg.grid, cfg.initial_condition.amplitude, cfg.initial_condition.width)?;
    let times = cfg.snapshots.times();
    let traj = simulate(&params, &ic, cfg.snapshots.end, &cfg.integration, &times)?;
    SnapshotMatrix::from_trajectory(traj, regime)
}

/// Simulate and compress every configured regime (in parallel) and stack
/// the bases in configuration order.
pub fn build_all(cfg: &ExperimentConfig) -> Result<ModalLibrary> {
    let bases = cfg
        .regimes
        .par_iter()
        .map(|r| pod_basis(&simulate_regime(cfg, r.id)?, cfg.energy_threshold))
        .collect::<Result<Vec<_>>>()?;
    build_library(bases)
}

pub fn manifest_for(cfg: &ExperimentConfig, lib: &ModalLibrary) -> Result<Manifest> {
    Ok(Manifest {
        grid: cfg.grid,
        energy_threshold: cfg.energy_threshold,
        snapshot_start: cfg.snapshots.start,
        snapshot_end: cfg.snapshots.end,
        snapshot_stride: cfg.snapshots.stride,
        dt: cfg.integration.dt,
        regimes: lib
            .blocks()
            .iter()
            .map(|b| {
                let spec = cfg.regime(b.regime).ok_or(Error::UnknownRegime(b.regime))?;
                Ok(ManifestRegime {
                    id: b.regime,
                    rank: b.rank(),
                    params: spec.params,
                    description: spec.description.clone(),
                })
            })
            .collect::<Result<_>>()?,
    })
}

/// Write the binary library and its manifest next to it.
pub fn save_with_manifest(cfg: &ExperimentConfig, lib: &ModalLibrary, path: &Path) -> Result<()> {
    save_library(lib, path)?;
    save_manifest(&manifest_for(cfg, lib)?, &manifest_path(path))
}

/// The full-order reference run through the configured schedule, recorded
/// every `rom.output_stride` time units.
pub fn simulate_switching(cfg: &ExperimentConfig) -> Result<ScheduleRun> {
    let ic = initial_condition(&cfg.grid, cfg.initial_condition.amplitude, cfg.initial_condition.width)?;
    simulate_schedule(&cfg.beta_schedule()?, &ic, cfg.schedule.t_end, &cfg.integration, cfg.rom.output_stride)
}

/// Sensors, their dictionary and the solver, bundled for repeated use.
#[derive(Debug, Clone)]
pub struct Identifier<'a> {
    pub lib: &'a ModalLibrary,
    pub sensors: SensorSet,
    pub dictionary: CMatrix,
    pub solver: SolverConfig,
    pub rule: BlockScore,
}

impl<'a> Identifier<'a> {
    pub fn new(lib: &'a ModalLibrary, sensors: SensorSet, solver: SolverConfig) -> Result<Self> {
        let dictionary = compressed_dictionary(lib, &sensors)?;
        Ok(Identifier { lib, sensors, dictionary, solver, rule: BlockScore::L1 })
    }

    pub fn from_config(lib: &'a ModalLibrary, cfg: &ExperimentConfig) -> Result<Self> {
        let sensors = place_sensors(&cfg.grid, &cfg.sensors.positions)?;
        Self::new(lib, sensors, cfg.solver)
    }

    pub fn identify(&self, y: &Measurement) -> Result<Classification> {
        let sol = self.solver.solve(&self.dictionary, &y.values)?;
        classify_with(self.lib, sol, self.rule)
    }
}

/// What happened at one measurement time of the switching run.
#[derive(Debug, Clone)]
pub struct SegmentOutcome {
    pub segment: usize,
    pub true_regime: RegimeId,
    pub measurement: Measurement,
    /// `None` when the solver returned the zero vector.
    pub classification: Option<Classification>,
    /// Amplitudes re-estimated on the winning block.
    pub amplitudes: Option<CVector>,
    /// Mean relative L2 error of the reduced-model forecast against the
    /// full run over the final `rom.error_window` of the segment; infinite if
    /// the reduced model diverged.
    pub recon_rel_l2: Option<f64>,
}

impl SegmentOutcome {
    pub fn predicted(&self) -> Option<RegimeId> {
        self.classification.as_ref().map(|c| c.regime)
    }
}

pub fn run_switching_experiment(cfg: &ExperimentConfig, lib: &ModalLibrary) -> Result<Vec<SegmentOutcome>> {
    let run = simulate_switching(cfg)?;
    switching_on(cfg, lib, &run)
}

/// Switching experiment against an existing reference run. Measurement `k`
/// draws its noise from seed `cfg.seed + k`.
pub fn switching_on(cfg: &ExperimentConfig, lib: &ModalLibrary, run: &ScheduleRun) -> Result<Vec<SegmentOutcome>> {
    let id = Identifier::from_config(lib, cfg)?;
    let traj = &run.trajectory;
    let mut out = Vec::with_capacity(cfg.schedule.measurement_times.len());
    for (k, &t) in cfg.schedule.measurement_times.iter().enumerate() {
        let col = column_at(run, t)?;
        let segment = run.segment_of_column[col];
        let true_regime = run.schedule.segments()[segment].regime;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
        let y = measure_with(&traj.column_state(col), &id.sensors, cfg.noise.sigma, &mut rng)?;
        let classification = match id.identify(&y) {
            Ok(c) => Some(c),
            Err(Error::AllZero) => None,
            Err(e) => return Err(e),
        };
        let (mut amplitudes, mut recon_rel_l2) = (None, None);
        if let Some(c) = &classification {
            let proj = project_onto_block(lib, &id.sensors, &y, c.regime)?;
            let seg_end = run.schedule.segment_end(segment, cfg.schedule.t_end);
            recon_rel_l2 = forecast_error(cfg, lib, run, c.regime, &proj.amplitudes, t, seg_end)?;
            amplitudes = Some(proj.amplitudes);
        }
        out.push(SegmentOutcome { segment, true_regime, measurement: y, classification, amplitudes, recon_rel_l2 });
    }
    Ok(out)
}

fn column_at(run: &ScheduleRun, t: f64) -> Result<usize> {
    run.trajectory
        .index_of_time(t)
        .ok_or_else(|| Error::Config(format!("no reference snapshot at t = {t}; check rom.output_stride")))
}

fn forecast_error(
    cfg: &ExperimentConfig,
    lib: &ModalLibrary,
    run: &ScheduleRun,
    regime: RegimeId,
    a0: &CVector,
    t_start: f64,
    t_end: f64,
) -> Result<Option<f64>> {
    let model = build_galerkin(lib, regime, &cfg.params(regime)?, &cfg.grid)?;
    let coeffs = match integrate_rom(&model, a0, t_start, t_end, cfg.rom.dt, cfg.rom.output_stride) {
        Ok(c) => c,
        // a reduced model of the wrong regime can blow up; that is a result, not a failure
        Err(Error::NonFiniteField { .. }) => return Ok(Some(f64::INFINITY)),
        Err(e) => return Err(e),
    };
    let from = t_end - cfg.rom.error_window;
    let mut errors = Vec::new();
    for (t, a) in coeffs.times.iter().zip(&coeffs.amplitudes) {
        if *t < from - 1e-9 {
            continue;
        }
        let Some(col) = run.trajectory.index_of_time(*t) else { continue };
        let truth = run.trajectory.data.column(col);
        let norm = truth.norm();
        if norm == 0.0 {
            continue;
        }
        let approx = reconstruct_field(&model, a, *t)?;
        let diff: f64 = approx.values.iter().zip(truth.iter()).map(|(u, v)| (u - v).norm_sqr()).sum();
        errors.push(diff.sqrt() / norm);
    }
    Ok((!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64))
}

/// Classification counts for one measurement time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCell {
    pub label: String,
    pub time: f64,
    pub true_regime: RegimeId,
    /// Trials assigned to each library block, in library order.
    pub counts: Vec<usize>,
    /// Trials where every coefficient came back zero.
    pub unclassified: usize,
}

impl TimeCell {
    pub fn trials(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.unclassified
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloStats {
    pub regimes: Vec<RegimeId>,
    pub cells: Vec<TimeCell>,
    pub trials: usize,
    pub sigma: f64,
    pub sensors: usize,
    /// Sparse solves that hit their iteration cap before settling.
    pub non_converged: usize,
    pub solves: usize,
}

impl MonteCarloStats {
    /// Percentage of trials at `cell` assigned to the true regime.
    pub fn accuracy(&self, cell: usize) -> f64 {
        let c = &self.cells[cell];
        let idx = self.regimes.iter().position(|&r| r == c.true_regime);
        let hits = idx.map_or(0, |i| c.counts[i]);
        100.0 * hits as f64 / c.trials().max(1) as f64
    }

    pub fn percent(&self, cell: usize, block: usize) -> f64 {
        let c = &self.cells[cell];
        100.0 * c.counts[block] as f64 / c.trials().max(1) as f64
    }
}

pub fn run_monte_carlo(cfg: &ExperimentConfig, lib: &ModalLibrary) -> Result<MonteCarloStats> {
    let run = simulate_switching(cfg)?;
    monte_carlo_on(cfg, lib, &run)
}

/// Repeat the noisy identification `noise.trials` times. Trial `i` draws all
/// of its noise, one fresh draw per sample, from seed `cfg.seed + i`, so the
/// result does not depend on thread scheduling.
pub fn monte_carlo_on(cfg: &ExperimentConfig, lib: &ModalLibrary, run: &ScheduleRun) -> Result<MonteCarloStats> {
    let id = Identifier::from_config(lib, cfg)?;
    let window = cfg.noise.aggregate_window.max(1);
    let mut samples = Vec::new();
    for &t in &cfg.schedule.measurement_times {
        let cols = (0..window)
            .map(|w| column_at(run, t + w as f64 * cfg.rom.output_stride))
            .collect::<Result<Vec<_>>>()?;
        let states = cols.iter().map(|&c| run.trajectory.column_state(c)).collect::<Vec<_>>();
        samples.push((cols[0], states));
    }

    let per_trial = (0..cfg.noise.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            let mut votes = Vec::with_capacity(samples.len());
            let mut unsettled = 0;
            for (_, states) in &samples {
                let mut tally = vec![0usize; lib.blocks().len()];
                for state in states {
                    let y = measure_with(state, &id.sensors, cfg.noise.sigma, &mut rng)?;
                    match id.identify(&y) {
                        Ok(c) => {
                            unsettled += usize::from(!c.solution.converged);
                            tally[lib.block_index(c.regime)?] += 1;
                        }
                        Err(Error::AllZero) => {}
                        Err(e) => return Err(e),
                    }
                }
                votes.push(majority(&tally));
            }
            Ok((votes, unsettled))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells: Vec<TimeCell> = cfg
        .schedule
        .measurement_times
        .iter()
        .zip(&samples)
        .enumerate()
        .map(|(k, (&time, (col, _)))| TimeCell {
            label: format!("t{}", k + 1),
            time,
            true_regime: run.schedule.segments()[run.segment_of_column[*col]].regime,
            counts: vec![0; lib.blocks().len()],
            unclassified: 0,
        })
        .collect();
    let mut non_converged = 0;
    for (votes, unsettled) in &per_trial {
        non_converged += unsettled;
        for (cell, vote) in cells.iter_mut().zip(votes) {
            match vote {
                Some(b) => cell.counts[*b] += 1,
                None => cell.unclassified += 1,
            }
        }
    }
    Ok(MonteCarloStats {
        regimes: lib.regimes(),
        cells,
        trials: cfg.noise.trials,
        sigma: cfg.noise.sigma,
        sensors: id.sensors.m(),
        non_converged,
        solves: cfg.noise.trials * samples.len() * window,
    })
}

/// Most-voted block, lowest index on ties; `None` if nothing was voted for.
fn majority(tally: &[usize]) -> Option<usize> {
    let mut best = None;
    for (i, &v) in tally.iter().enumerate() {
        if v > 0 && best.is_none_or(|b: usize| v > tally[b]) {
            best = Some(i);
        }
    }
    best
}
