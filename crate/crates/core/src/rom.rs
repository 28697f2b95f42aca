//! POD-Galerkin reduced model on one library block.
//!
//! With `U ≈ Ψ a`, the amplitudes evolve by
//! `da/dt = (ΨᴴLΨ) a + Ψᴴ N(Ψ a)`. The linear part is projected once through
//! the Fourier multiplier; the nonlinearity is evaluated on the grid every
//! call, which for r ≲ 15 modes is far cheaper than storing cubic and quintic
//! interaction tensors.

use crate::cqgle::{apply_nonlinear, linear_symbol, CqgleParams, FieldState, GridSpec, Spectral};
use crate::library::ModalLibrary;
use crate::{CMatrix, CVector, Complex64, Error, RegimeId, Result};

#[derive(Debug, Clone)]
pub struct GalerkinModel {
    pub regime: RegimeId,
    /// `n × r` block `Ψ_j`.
    pub modes: CMatrix,
    /// `r × r` projection `Ψᴴ L Ψ`.
    pub linear_matrix: CMatrix,
    pub params: CqgleParams,
    pub grid: GridSpec,
}

/// `L ψ` for every column of `modes`, applied spectrally.
pub fn apply_linear(grid: &GridSpec, params: &CqgleParams, modes: &CMatrix) -> CMatrix {
    let symbols: Vec<Complex64> = grid.wavenumbers().iter().map(|&k| linear_symbol(params, k)).collect();
    let mut fft = Spectral::new(grid.n());
    let mut out = modes.clone();
    for mut col in out.column_iter_mut() {
        let buf = col.as_mut_slice();
        fft.forward(buf);
        for (v, s) in buf.iter_mut().zip(&symbols) {
            *v *= s;
        }
        fft.inverse(buf);
    }
    out
}

pub fn build_galerkin(
    lib: &ModalLibrary,
    regime: RegimeId,
    params: &CqgleParams,
    grid: &GridSpec,
) -> Result<GalerkinModel> {
    if lib.n() != grid.n() {
        return Err(Error::DimensionMismatch { expected: grid.n(), found: lib.n() });
    }
    let modes = lib.block(regime)?.modes.clone();
    GalerkinModel::from_modes(regime, modes, params, grid)
}

impl GalerkinModel {
    /// Model on an arbitrary orthonormal set of modes.
    pub fn from_modes(regime: RegimeId, modes: CMatrix, params: &CqgleParams, grid: &GridSpec) -> Result<Self> {
        if modes.ncols() == 0 {
            return Err(Error::invalid("Galerkin model needs at least one mode"));
        }
        if modes.nrows() != grid.n() {
            return Err(Error::DimensionMismatch { expected: grid.n(), found: modes.nrows() });
        }
        if !params.is_finite() {
            return Err(Error::invalid("non-finite parameters"));
        }
        let linear_matrix = modes.adjoint() * apply_linear(grid, params, &modes);
        Ok(GalerkinModel { regime, modes, linear_matrix, params: *params, grid: *grid })
    }

    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    /// `Ψᴴ U`, the Galerkin (orthogonal) projection of a field.
    pub fn project(&self, field: &FieldState) -> Result<CVector> {
        if field.values.len() != self.grid.n() {
            return Err(Error::DimensionMismatch { expected: self.grid.n(), found: field.values.len() });
        }
        Ok(self.modes.adjoint() * CVector::from_column_slice(&field.values))
    }

    fn check_len(&self, a: &CVector) -> Result<()> {
        if a.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), found: a.len() });
        }
        Ok(())
    }

    fn rhs_unchecked(&self, a: &CVector, grid_buf: &mut CVector, nl_buf: &mut CVector) -> CVector {
        grid_buf.gemv(Complex64::new(1.0, 0.0), &self.modes, a, Complex64::new(0.0, 0.0));
        apply_nonlinear(grid_buf.as_slice(), &self.params, nl_buf.as_mut_slice());
        &self.linear_matrix * a + self.modes.adjoint() * &*nl_buf
    }
}

pub fn rom_rhs(model: &GalerkinModel, a: &CVector) -> Result<CVector> {
    model.check_len(a)?;
    let n = model.grid.n();
    let (mut g, mut nl) = (CVector::zeros(n), CVector::zeros(n));
    Ok(model.rhs_unchecked(a, &mut g, &mut nl))
}

/// Sampled modal amplitudes `a(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTrajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<CVector>,
}

/// Classical RK4 on [`rom_rhs`] from `t_start` to `t_end`, recording every
/// `dt_out` (which must be a multiple of `dt`) and at both ends.
pub fn integrate_rom(
    model: &GalerkinModel,
    a0: &CVector,
    t_start: f64,
    t_end: f64,
    dt: f64,
    dt_out: f64,
) -> Result<CoefficientTrajectory> {
    model.check_len(a0)?;
    if !(dt > 0.0 && dt_out > 0.0) {
        return Err(Error::invalid("ROM step and output spacing must be positive"));
    }
    if t_end < t_start {
        return Err(Error::invalid("ROM end time precedes start"));
    }
    let steps = ((t_end - t_start) / dt).round() as usize;
    if ((steps as f64) * dt - (t_end - t_start)).abs() > 1e-9 * (t_end - t_start).max(1.0) {
        return Err(Error::invalid("ROM interval is not a multiple of dt"));
    }
    let per = (dt_out / dt).round().max(1.0) as usize;
    if ((per as f64) * dt - dt_out).abs() > 1e-9 * dt_out.max(1.0) {
        return Err(Error::invalid("ROM output spacing is not a multiple of dt"));
    }

    let n = model.grid.n();
    let (mut g, mut nl) = (CVector::zeros(n), CVector::zeros(n));
    let h = Complex64::new(dt, 0.0);
    let half = Complex64::new(0.5 * dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);

    let mut a = a0.clone();
    let mut out = CoefficientTrajectory { times: vec![t_start], amplitudes: vec![a.clone()] };
    for s in 1..=steps {
        let k1 = model.rhs_unchecked(&a, &mut g, &mut nl);
        let k2 = model.rhs_unchecked(&(&a + &k1 * half), &mut g, &mut nl);
        let k3 = model.rhs_unchecked(&(&a + &k2 * half), &mut g, &mut nl);
        let k4 = model.rhs_unchecked(&(&a + &k3 * h), &mut g, &mut nl);
        a += (k1 + k2 * two + k3 * two + k4) * sixth;
        let t = t_start + s as f64 * dt;
        if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFiniteField { time: t });
        }
        if s % per == 0 || s == steps {
            out.times.push(t);
            out.amplitudes.push(a.clone());
        }
    }
    Ok(out)
}

/// `U = Ψ a` on the model grid.
pub fn reconstruct_field(model: &GalerkinModel, a: &CVector, time: f64) -> Result<FieldState> {
    model.check_len(a)?;
    let u = &model.modes * a;
    Ok(FieldState { grid: model.grid, values: u.iter().copied().collect(), time })
}
