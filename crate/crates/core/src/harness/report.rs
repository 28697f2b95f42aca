use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use super::experiment::{MonteCarloStats, SegmentOutcome};
use crate::sensing::{Measurement, SensorSet};
use crate::{Complex64, Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// One row per (measurement time, library regime), plus a `none` row for
/// any trials that produced no classification. Empty statistics give a
/// header-only file.
pub fn write_accuracy_csv(stats: &MonteCarloStats, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["true_regime", "predicted_regime", "time_label", "count", "percent"])?;
    for (k, cell) in stats.cells.iter().enumerate() {
        for (b, regime) in stats.regimes.iter().enumerate() {
            w.write_record([
                cell.true_regime.to_string(),
                regime.to_string(),
                cell.label.clone(),
                cell.counts[b].to_string(),
                stats.percent(k, b).to_string(),
            ])?;
        }
        if cell.unclassified > 0 {
            let pct = 100.0 * cell.unclassified as f64 / cell.trials() as f64;
            w.write_record([
                cell.true_regime.to_string(),
                "none".to_string(),
                cell.label.clone(),
                cell.unclassified.to_string(),
                pct.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_switching_csv(outcomes: &[SegmentOutcome], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["segment", "true_regime", "predicted_regime", "margin", "recon_rel_l2"])?;
    for o in outcomes {
        w.write_record([
            o.segment.to_string(),
            o.true_regime.to_string(),
            opt(o.predicted()),
            opt(o.classification.as_ref().map(|c| c.margin)),
            opt(o.recon_rel_l2),
        ])?;
    }
    finish(w)
}

/// Sparse coefficient vectors of the switching run, one row per entry.
pub fn write_coefficients_csv(outcomes: &[SegmentOutcome], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["segment", "time", "column", "real", "imag"])?;
    for o in outcomes {
        let Some(c) = &o.classification else { continue };
        for (j, z) in c.solution.coeffs.iter().enumerate() {
            w.write_record([
                o.segment.to_string(),
                o.measurement.time.to_string(),
                j.to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_measurement_csv(sensors: &SensorSet, measurements: &[Measurement], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sensor_x", "real", "imag", "time"])?;
    for y in measurements {
        if y.values.len() != sensors.m() {
            return Err(Error::DimensionMismatch { expected: sensors.m(), found: y.values.len() });
        }
        for (x, v) in sensors.positions.iter().zip(y.values.iter()) {
            w.write_record([x.to_string(), v.re.to_string(), v.im.to_string(), y.time.to_string()])?;
        }
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MeasurementRow {
    pub sensor_x: f64,
    pub real: f64,
    pub imag: f64,
    pub time: f64,
}

/// All rows of a measurement file sharing one time.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    pub time: f64,
    pub positions: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Read a measurement file and group it by time (ascending). Within a time
/// the rows keep their file order.
pub fn read_measurements_csv(path: &Path) -> Result<Vec<MeasurementGroup>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut groups: BTreeMap<u64, MeasurementGroup> = BTreeMap::new();
    for row in rdr.deserialize() {
        let r: MeasurementRow = row?;
        if !(r.sensor_x.is_finite() && r.real.is_finite() && r.imag.is_finite() && r.time.is_finite()) {
            return Err(Error::invalid("non-finite value in measurement file"));
        }
        // order-preserving key for finite floats
        let bits = r.time.to_bits();
        let key = if r.time.is_sign_negative() { !bits } else { bits | (1 << 63) };
        let g = groups
            .entry(key)
            .or_insert_with(|| MeasurementGroup { time: r.time, positions: Vec::new(), values: Vec::new() });
        g.positions.push(r.sensor_x);
        g.values.push(Complex64::new(r.real, r.imag));
    }
    Ok(groups.into_values().collect())
}
