use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cqgle::{BetaSchedule, CqgleParams, GridSpec, Integrator, Segment};
use crate::sensing::THREE_SENSORS;
use crate::sparse::SolverConfig;
use crate::{Error, RegimeId, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub id: RegimeId,
    #[serde(flatten)]
    pub params: CqgleParams,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotWindow {
    pub start: f64,
    pub end: f64,
    pub stride: f64,
}

impl SnapshotWindow {
    pub fn times(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.stride + 1e-9).floor() as usize;
        (0..=count).map(|j| self.start + j as f64 * self.stride).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub trials: usize,
    /// Majority vote over this many consecutive unit-spaced samples per
    /// measurement time; 0 or 1 means a single sample.
    #[serde(default)]
    pub aggregate_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RomConfig {
    pub dt: f64,
    pub output_stride: f64,
    /// Reconstruction error is averaged over this many final time units of
    /// each segment.
    pub error_window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub start: f64,
    pub regime: RegimeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub t_end: f64,
    pub measurement_times: Vec<f64>,
    #[serde(rename = "segment")]
    pub segments: Vec<ScheduleSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub energy_threshold: f64,
    pub seed: u64,
    pub grid: GridSpec,
    pub integration: Integrator,
    pub initial_condition: InitialCondition,
    pub snapshots: SnapshotWindow,
    pub sensors: SensorConfig,
    pub noise: NoiseConfig,
    pub solver: SolverConfig,
    pub rom: RomConfig,
    pub schedule: ScheduleConfig,
    #[serde(rename = "regime")]
    pub regimes: Vec<RegimeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub positions: Vec<f64>,
}

/// The six parameter regimes of the cubic-quintic model.
pub fn table_regimes() -> Vec<RegimeSpec> {
    let r = |id, params, description: &str| RegimeSpec {
        id: RegimeId(id),
        params,
        description: description.to_string(),
    };
    vec![
        r(1, CqgleParams::new(-0.3, -0.05, 1.45, 0.0, -0.1, -0.5), "3-hump, localized"),
        r(2, CqgleParams::new(-0.3, -0.05, 1.4, 0.0, -0.1, -0.5), "localized, side lobes"),
        r(3, CqgleParams::new(0.08, 0.0, 0.66, -0.1, -0.1, -0.1), "breather"),
        r(4, CqgleParams::new(0.125, 0.0, 1.0, -0.6, -0.1, -0.1), "exploding soliton"),
        r(5, CqgleParams::new(0.08, -0.05, 0.6, -0.1, -0.1, -0.1), "fat soliton"),
        r(6, CqgleParams::new(0.08, -0.05, 0.5, -0.1, -0.1, -0.1), "dissipative soliton"),
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            energy_threshold: 0.99,
            seed: 1,
            grid: GridSpec::standard(),
            integration: Integrator::default(),
            initial_condition: InitialCondition { amplitude: 1.0, width: 1.0 },
            snapshots: SnapshotWindow { start: 40.0, end: 80.0, stride: 1.0 },
            sensors: SensorConfig { positions: THREE_SENSORS.to_vec() },
            noise: NoiseConfig { sigma: 0.0, trials: 400, aggregate_window: 0 },
            solver: SolverConfig::default(),
            rom: RomConfig { dt: 0.01, output_stride: 1.0, error_window: 50.0 },
            schedule: ScheduleConfig {
                t_end: 300.0,
                measurement_times: vec![25.0, 125.0, 225.0],
                segments: vec![
                    ScheduleSegment { start: 0.0, regime: RegimeId(1) },
                    ScheduleSegment { start: 100.0, regime: RegimeId(3) },
                    ScheduleSegment { start: 200.0, regime: RegimeId(5) },
                ],
            },
            regimes: table_regimes(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.energy_threshold > 0.0 && self.energy_threshold <= 1.0) {
            return fail(format!("energy_threshold {} not in (0, 1]", self.energy_threshold));
        }
        if self.regimes.is_empty() {
            return fail("no regimes configured".into());
        }
        for (i, r) in self.regimes.iter().enumerate() {
            if self.regimes[..i].iter().any(|o| o.id == r.id) {
                return fail(format!("regime {} listed twice", r.id));
            }
            if !r.params.is_finite() {
                return fail(format!("regime {} has non-finite parameters", r.id));
            }
        }
        if !(self.integration.dt > 0.0) || !(self.rom.dt > 0.0) {
            return fail("time steps must be positive".into());
        }
        let w = &self.snapshots;
        if !(w.stride > 0.0 && w.start >= 0.0 && w.end >= w.start) {
            return fail(format!("bad snapshot window {w:?}"));
        }
        if self.noise.trials == 0 {
            return fail("trial count must be at least 1".into());
        }
        if !(self.noise.sigma >= 0.0) {
            return fail("noise sigma must be non-negative".into());
        }
        if self.sensors.positions.is_empty() {
            return fail("no sensor positions".into());
        }
        let s = &self.schedule;
        if s.segments.first().map(|seg| seg.start) != Some(0.0) {
            return fail("schedule must start at t = 0".into());
        }
        if s.segments.windows(2).any(|p| !(p[1].start > p[0].start)) {
            return fail("schedule segment starts must increase".into());
        }
        if s.segments.last().is_some_and(|seg| seg.start > s.t_end) {
            return fail("last segment starts after t_end".into());
        }
        for seg in &s.segments {
            if self.regime(seg.regime).is_none() {
                return fail(format!("schedule uses unknown regime {}", seg.regime));
            }
        }
        for &t in &s.measurement_times {
            if !(t >= 0.0 && t <= s.t_end) {
                return fail(format!("measurement time {t} outside [0, {}]", s.t_end));
            }
        }
        Ok(())
    }

    pub fn regime(&self, id: RegimeId) -> Option<&RegimeSpec> {
        self.regimes.iter().find(|r| r.id == id)
    }

    pub fn params(&self, id: RegimeId) -> Result<CqgleParams> {
        self.regime(id).map(|r| r.params).ok_or(Error::UnknownRegime(id))
    }

    pub fn beta_schedule(&self) -> Result<BetaSchedule> {
        let segments = self
            .schedule
            .segments
            .iter()
            .map(|s| Ok(Segment { start: s.start, regime: s.regime, params: self.params(s.regime)? }))
            .collect::<Result<Vec<_>>>()?;
        BetaSchedule::new(segments)
    }
}
