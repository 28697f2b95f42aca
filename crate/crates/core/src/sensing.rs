//! Point sensors, the measurement noise model and the compressed dictionary
//! `G = ΦΨ`. `Φ` selects grid rows; there is no interpolation between nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cqgle::{FieldState, GridSpec};
use crate::library::ModalLibrary;
use crate::{CMatrix, CVector, Complex64, Error, Result};

pub const THREE_SENSORS: [f64; 3] = [0.0, 0.7, 1.4];
pub const FIVE_SENSORS: [f64; 5] = [0.0, 0.7, 1.4, 1.8, 2.2];

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSet {
    /// Requested coordinates, ordered like `indices`.
    pub positions: Vec<f64>,
    /// Nearest grid node of each sensor, strictly increasing.
    pub indices: Vec<usize>,
    pub grid: GridSpec,
}

impl SensorSet {
    pub fn m(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub values: CVector,
    pub time: f64,
    pub sigma: f64,
}

pub fn place_sensors(grid: &GridSpec, positions: &[f64]) -> Result<SensorSet> {
    if positions.is_empty() {
        return Err(Error::invalid("at least one sensor is required"));
    }
    let mut placed = Vec::with_capacity(positions.len());
    for &x in positions {
        if !(x >= grid.x_min() && x < grid.x_max()) {
            return Err(Error::OutOfDomain { position: x, x_min: grid.x_min(), x_max: grid.x_max() });
        }
        placed.push((grid.nearest_index(x), x));
    }
    placed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if let Some(w) = placed.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateSensor { first: w[0].1, second: w[1].1 });
    }
    Ok(SensorSet {
        positions: placed.iter().map(|p| p.1).collect(),
        indices: placed.iter().map(|p| p.0).collect(),
        grid: *grid,
    })
}

fn check_grid(field: &FieldState, sensors: &SensorSet) -> Result<()> {
    if field.values.len() != sensors.grid.n() {
        return Err(Error::DimensionMismatch { expected: sensors.grid.n(), found: field.values.len() });
    }
    Ok(())
}

/// Noiseless samples `ΦU`.
pub fn sample(field: &FieldState, sensors: &SensorSet) -> Result<CVector> {
    check_grid(field, sensors)?;
    Ok(CVector::from_iterator(sensors.m(), sensors.indices.iter().map(|&i| field.values[i])))
}

/// `ΦU + η` with circularly-symmetric complex Gaussian `η` of total variance
/// `σ²`, drawn from a ChaCha stream seeded with `rng_seed`.
pub fn measure(field: &FieldState, sensors: &SensorSet, sigma: f64, rng_seed: u64) -> Result<Measurement> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    measure_with(field, sensors, sigma, &mut rng)
}

/// [`measure`] drawing from a caller-owned generator, for several
/// measurements along one random stream.
pub fn measure_with<R: Rng + ?Sized>(
    field: &FieldState,
    sensors: &SensorSet,
    sigma: f64,
    rng: &mut R,
) -> Result<Measurement> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("noise level must be >= 0, got {sigma}")));
    }
    let mut values = sample(field, sensors)?;
    if sigma > 0.0 {
        add_noise(&mut values, sigma, rng);
    }
    Ok(Measurement { values, time: field.time, sigma })
}

pub fn add_noise<R: Rng + ?Sized>(values: &mut CVector, sigma: f64, rng: &mut R) {
    let scale = sigma / std::f64::consts::SQRT_2;
    for v in values.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re * scale, im * scale);
    }
}

/// Rows of the library matrix at the sensor nodes (`m × p`).
pub fn compressed_dictionary(lib: &ModalLibrary, sensors: &SensorSet) -> Result<CMatrix> {
    rows(lib.matrix(), sensors)
}

/// Sensor rows of any `n × k` matrix.
pub fn rows(matrix: &CMatrix, sensors: &SensorSet) -> Result<CMatrix> {
    if matrix.nrows() != sensors.grid.n() {
        return Err(Error::DimensionMismatch { expected: sensors.grid.n(), found: matrix.nrows() });
    }
    Ok(matrix.select_rows(sensors.indices.iter()))
}
