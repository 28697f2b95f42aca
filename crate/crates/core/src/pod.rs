//! Proper orthogonal decomposition by the method of snapshots.
//!
//! For an `n × q` snapshot matrix `A` with `n ≫ q`, the right singular vectors
//! come from the small Hermitian eigenproblem `AᴴA W = W Σ²` and the modes from
//! `Ψ = A W Σ⁻¹`. Inner products are the plain discrete ℓ2 product, so the
//! modes satisfy `ΨᴴΨ = I` as a matrix identity.

use crate::cqgle::Trajectory;
use crate::linalg::hermitian_eigen_desc;
use crate::{CMatrix, Complex64, Error, RegimeId, Result};

/// Eigenvalues of `AᴴA` below this fraction of the largest are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

pub const DEFAULT_ENERGY_THRESHOLD: f64 = 0.99;

/// Snapshots of one regime, column `j` taken at `times[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: CMatrix,
    times: Vec<f64>,
    regime: RegimeId,
}

impl SnapshotMatrix {
    pub fn new(data: CMatrix, times: Vec<f64>, regime: RegimeId) -> Result<Self> {
        if times.len() != data.ncols() {
            return Err(Error::DimensionMismatch { expected: data.ncols(), found: times.len() });
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::DegenerateData("snapshot matrix has non-finite entries".into()));
        }
        Ok(SnapshotMatrix { data, times, regime })
    }

    /// Snapshots labelled with consecutive integer times.
    pub fn from_matrix(data: CMatrix, regime: RegimeId) -> Result<Self> {
        let times = (0..data.ncols()).map(|j| j as f64).collect();
        Self::new(data, times, regime)
    }

    pub fn from_trajectory(traj: Trajectory, regime: RegimeId) -> Result<Self> {
        Self::new(traj.data, traj.times, regime)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn q(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn regime(&self) -> RegimeId {
        self.regime
    }
}

/// Truncated POD basis of one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub regime: RegimeId,
    /// `n × r`, orthonormal columns.
    pub modes: CMatrix,
    /// Descending, length `r`.
    pub singular_values: Vec<f64>,
    /// `σ_i² / Σ σ²` over all snapshots, length `r`.
    pub energy_fractions: Vec<f64>,
}

impl PodBasis {
    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    pub fn n(&self) -> usize {
        self.modes.nrows()
    }
}

/// Right singular vectors `W` (`q × q`) and singular values of `A`, descending.
pub fn method_of_snapshots(a: &SnapshotMatrix) -> Result<(CMatrix, Vec<f64>)> {
    if a.q() == 0 {
        return Err(Error::DegenerateData("no snapshots".into()));
    }
    let gram = a.data.adjoint() * &a.data;
    let (lambda, w) = hermitian_eigen_desc(gram)?;
    let top = lambda[0].max(0.0);
    let sigma = lambda
        .into_iter()
        .map(|l| if l < EIGEN_CLAMP * top || l <= 0.0 { 0.0 } else { l.sqrt() })
        .collect();
    Ok((w, sigma))
}

/// Every mode with a nonzero singular value, before truncation.
#[derive(Debug, Clone)]
pub struct PodDecomposition {
    /// `n × k` orthonormal modes.
    pub modes: CMatrix,
    pub singular_values: Vec<f64>,
    /// `q × k`, so that `A ≈ modes · diag(σ) · right_vectorsᴴ`.
    pub right_vectors: CMatrix,
    /// `Σ σ²` over all snapshots, including the clamped ones.
    pub total_energy: f64,
}

pub fn decompose(a: &SnapshotMatrix) -> Result<PodDecomposition> {
    let (mut w, sigma) = method_of_snapshots(a)?;
    let k = sigma.iter().take_while(|&&s| s > 0.0).count();
    if k == 0 {
        return Err(Error::DegenerateData("all singular values are zero".into()));
    }
    let total_energy = sigma.iter().map(|s| s * s).sum();

    let mut modes = &a.data * w.columns(0, k);
    for (j, &s) in sigma.iter().take(k).enumerate() {
        modes.column_mut(j).scale_mut(1.0 / s);
    }
    // A second Gram-Schmidt pass removes the loss of orthogonality that
    // Σ⁻¹ amplifies for the weaker modes.
    reorthonormalize(&mut modes);

    // Fix the unit-phase freedom: the largest entry of every mode is real and
    // positive. W is rotated with it so that A W = Ψ Σ still holds.
    for j in 0..k {
        let pivot = largest_entry(modes.column(j).iter());
        let z = modes[(pivot, j)];
        let phase = z.conj() / z.norm();
        let mut mode = modes.column_mut(j);
        mode *= phase;
        let mut right = w.column_mut(j);
        right *= phase;
    }

    Ok(PodDecomposition {
        modes,
        singular_values: sigma[..k].to_vec(),
        right_vectors: w.columns(0, k).into_owned(),
        total_energy,
    })
}

/// Index of the entry with the largest modulus, first one on ties.
fn largest_entry<'a>(values: impl Iterator<Item = &'a Complex64>) -> usize {
    values
        .enumerate()
        .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best })
        .0
}

fn reorthonormalize(m: &mut CMatrix) {
    for j in 0..m.ncols() {
        for i in 0..j {
            let proj = m.column(i).dotc(&m.column(j));
            let qi = m.column(i).clone_owned();
            m.column_mut(j).axpy(-proj, &qi, Complex64::new(1.0, 0.0));
        }
        let norm = m.column(j).norm();
        m.column_mut(j).scale_mut(1.0 / norm);
    }
}

/// Smallest `r` whose leading `σ²` capture at least `threshold` of the total.
pub fn truncation_rank(sigma: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!("energy threshold {threshold} not in (0, 1]")));
    }
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::DegenerateData("all singular values are zero".into()));
    }
    let mut acc = 0.0;
    for (i, s) in sigma.iter().enumerate() {
        acc += s * s;
        if acc / total >= threshold {
            return Ok(i + 1);
        }
    }
    // rounding can leave the full sum a hair under threshold = 1
    Ok(sigma.iter().rposition(|&s| s > 0.0).map_or(sigma.len(), |i| i + 1))
}

/// POD basis of `a` truncated to the leading modes holding `energy_threshold`
/// of the snapshot energy.
pub fn pod_basis(a: &SnapshotMatrix, energy_threshold: f64) -> Result<PodBasis> {
    if !(energy_threshold > 0.0 && energy_threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "energy threshold {energy_threshold} not in (0, 1]"
        )));
    }
    let dec = decompose(a)?;
    let r = truncation_rank(&dec.singular_values, energy_threshold)?;
    let singular_values = dec.singular_values[..r].to_vec();
    let energy_fractions = singular_values
        .iter()
        .map(|s| s * s / dec.total_energy)
        .collect();
    Ok(PodBasis {
        regime: a.regime(),
        modes: dec.modes.columns(0, r).into_owned(),
        singular_values,
        energy_fractions,
    })
}
