//! Solvers for the underdetermined system `G a = y`.
//!
//! The main route is basis pursuit denoising,
//! `min_a λ‖a‖₁ + ½‖G a − y‖²`, with the ℓ1 norm taken over complex moduli,
//! solved by FISTA and driven towards the equality-constrained problem by
//! λ-continuation. Orthogonal matching pursuit and the minimum-norm
//! least-squares solution are provided for comparison.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::{gram_spectral_norm, pinv_solve};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Relative singular-value cutoff for every pseudo-inverse in this crate.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    L1,
    Omp,
    LeastSquares,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::L1 => "l1",
            SolverKind::Omp => "omp",
            SolverKind::LeastSquares => "ls",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(SolverKind::L1),
            "omp" => Ok(SolverKind::Omp),
            "ls" | "least_squares" => Ok(SolverKind::LeastSquares),
            other => Err(Error::invalid(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    pub coeffs: CVector,
    /// `‖G â − y‖₂`
    pub residual_norm: f64,
    pub iterations: usize,
    pub solver: SolverKind,
    /// Final regularization weight; zero for OMP and least squares.
    pub lambda: f64,
    /// False when FISTA hit its iteration cap with the objective still moving
    /// by more than `100 · tol`.
    pub converged: bool,
}

/// Proximal map of `t|z|`: shrink the modulus by `t`, keep the phase.
pub fn soft_threshold_complex(z: Complex64, t: f64) -> Complex64 {
    let r = z.norm();
    if r <= t {
        Complex64::new(0.0, 0.0)
    } else {
        z * ((r - t) / r)
    }
}

/// Unit-norm copy of `g`. Zero columns stay zero and get scale 1.
struct Normalized {
    g: CMatrix,
    scale: Vec<f64>,
}

impl Normalized {
    fn new(g: &CMatrix) -> Self {
        let mut out = g.clone();
        let mut scale = Vec::with_capacity(g.ncols());
        for mut col in out.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col.scale_mut(1.0 / norm);
                scale.push(norm);
            } else {
                scale.push(1.0);
            }
        }
        Normalized { g: out, scale }
    }

    fn unscale(&self, mut a: CVector) -> CVector {
        for (v, s) in a.iter_mut().zip(&self.scale) {
            *v /= *s;
        }
        a
    }
}

fn check_system(g: &CMatrix, y: &CVector) -> Result<()> {
    if g.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: g.nrows(), found: y.len() });
    }
    if g.ncols() == 0 {
        return Err(Error::invalid("dictionary has no columns"));
    }
    Ok(())
}

fn residual(g: &CMatrix, a: &CVector, y: &CVector) -> f64 {
    (g * a - y).norm()
}

fn objective(g: &CMatrix, a: &CVector, y: &CVector, lambda: f64) -> f64 {
    lambda * a.iter().map(|z| z.norm()).sum::<f64>() + 0.5 * (g * a - y).norm_squared()
}

struct FistaRun {
    a: CVector,
    iterations: usize,
    converged: bool,
}

/// FISTA with function-value restart: whenever a step would raise the
/// objective the step is rejected and momentum reset, so the returned iterate
/// never scores worse than the warm start.
fn fista(
    g: &CMatrix,
    y: &CVector,
    lambda: f64,
    lipschitz: f64,
    tol: f64,
    max_iter: usize,
    warm: CVector,
) -> FistaRun {
    let step = 1.0 / lipschitz;
    let thresh = lambda * step;
    let gh = g.adjoint();
    let mut a = warm;
    let mut z = a.clone();
    let mut t = 1.0f64;
    let mut f_prev = objective(g, &a, y, lambda);
    let mut last_change = f64::INFINITY;

    for it in 1..=max_iter {
        let grad = &gh * (g * &z - y);
        let a_new = (&z - grad * Complex64::new(step, 0.0)).map(|v| soft_threshold_complex(v, thresh));
        let f_new = objective(g, &a_new, y, lambda);
        if f_new > f_prev {
            if z == a {
                // a plain proximal step from `a` cannot increase the objective
                // beyond round-off; treat it as stationary
                return FistaRun { a, iterations: it, converged: true };
            }
            z = a.clone();
            t = 1.0;
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = Complex64::new((t - 1.0) / t_new, 0.0);
        z = &a_new + (&a_new - &a) * momentum;
        a = a_new;
        t = t_new;
        last_change = (f_prev - f_new).abs() / f_prev.max(f64::MIN_POSITIVE);
        f_prev = f_new;
        if last_change < tol {
            return FistaRun { a, iterations: it, converged: true };
        }
    }
    FistaRun { a, iterations: max_iter, converged: last_change <= 100.0 * tol }
}

/// BPDN at a single `lambda` (in unit-column units). Columns of `g` are
/// normalized internally and coefficients returned in the original scaling.
pub fn solve_l1(g: &CMatrix, y: &CVector, lambda: f64, tol: f64, max_iter: usize) -> Result<SparseSolution> {
    check_system(g, y)?;
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    let norm = Normalized::new(g);
    let lip = gram_spectral_norm(&norm.g);
    if lip == 0.0 {
        return Err(Error::invalid("dictionary is identically zero"));
    }
    let run = fista(&norm.g, y, lambda, lip, tol, max_iter, CVector::zeros(g.ncols()));
    let coeffs = norm.unscale(run.a);
    Ok(SparseSolution {
        residual_norm: residual(g, &coeffs, y),
        coeffs,
        iterations: run.iterations,
        solver: SolverKind::L1,
        lambda,
        converged: run.converged,
    })
}

/// λ-continuation schedule and FISTA limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Options {
    /// First λ as a fraction of `‖Gᴴy‖∞` (unit columns).
    pub start_fraction: f64,
    /// Last λ as a fraction of `‖Gᴴy‖∞`.
    pub end_fraction: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for L1Options {
    fn default() -> Self {
        L1Options { start_fraction: 0.1, end_fraction: 1e-4, tol: 1e-8, max_iter: 5000 }
    }
}

/// BPDN with λ halved stage by stage from `start_fraction · ‖Gᴴy‖∞` down to
/// `end_fraction · ‖Gᴴy‖∞`, each stage warm-started from the previous one.
pub fn solve_l1_path(g: &CMatrix, y: &CVector, opts: &L1Options) -> Result<SparseSolution> {
    check_system(g, y)?;
    if !(opts.start_fraction >= opts.end_fraction && opts.end_fraction > 0.0) {
        return Err(Error::invalid("continuation needs start >= end > 0"));
    }
    let norm = Normalized::new(g);
    let lip = gram_spectral_norm(&norm.g);
    if lip == 0.0 {
        return Err(Error::invalid("dictionary is identically zero"));
    }
    let corr = (norm.g.adjoint() * y).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut a = CVector::zeros(g.ncols());
    if corr == 0.0 {
        return Ok(SparseSolution {
            residual_norm: y.norm(),
            coeffs: a,
            iterations: 0,
            solver: SolverKind::L1,
            lambda: 0.0,
            converged: true,
        });
    }
    let floor = opts.end_fraction * corr;
    let mut lambda = opts.start_fraction * corr;
    let mut iterations = 0;
    let mut converged = true;
    loop {
        let lam = lambda.max(floor);
        let run = fista(&norm.g, y, lam, lip, opts.tol, opts.max_iter, a);
        a = run.a;
        iterations += run.iterations;
        converged &= run.converged;
        if lam <= floor {
            lambda = lam;
            break;
        }
        lambda *= 0.5;
    }
    let coeffs = norm.unscale(a);
    Ok(SparseSolution {
        residual_norm: residual(g, &coeffs, y),
        coeffs,
        iterations,
        solver: SolverKind::L1,
        lambda,
        converged,
    })
}

/// Greedy OMP: pick the column most correlated with the residual, refit on
/// the active set by least squares, stop after `k_max` atoms or once the
/// residual norm falls below `tol`.
pub fn solve_omp(g: &CMatrix, y: &CVector, k_max: usize, tol: f64) -> Result<SparseSolution> {
    check_system(g, y)?;
    if k_max == 0 || k_max > g.nrows().min(g.ncols()) {
        return Err(Error::invalid(format!(
            "k_max = {k_max} outside [1, {}]",
            g.nrows().min(g.ncols())
        )));
    }
    let norms: Vec<f64> = g.column_iter().map(|c| c.norm()).collect();
    let mut active: Vec<usize> = Vec::new();
    let mut coeffs = CVector::zeros(g.ncols());
    let mut r = y.clone();
    while active.len() < k_max && r.norm() >= tol {
        let corr = g.adjoint() * &r;
        let pick = (0..g.ncols())
            .filter(|j| norms[*j] > 0.0 && !active.contains(j))
            .map(|j| (j, corr[j].norm() / norms[j]))
            .fold(None, |best: Option<(usize, f64)>, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            });
        let Some((j, score)) = pick else { break };
        if score == 0.0 {
            break;
        }
        active.push(j);
        let sub = g.select_columns(active.iter());
        let (x, _) = pinv_solve(&sub, y, PINV_CUTOFF)?;
        coeffs.fill(Complex64::new(0.0, 0.0));
        for (&col, &v) in active.iter().zip(x.iter()) {
            coeffs[col] = v;
        }
        r = y - &sub * x;
    }
    Ok(SparseSolution {
        residual_norm: residual(g, &coeffs, y),
        coeffs,
        iterations: active.len(),
        solver: SolverKind::Omp,
        lambda: 0.0,
        converged: true,
    })
}

/// Minimum-norm least squares `ã = G⁺ y`.
pub fn solve_least_squares(g: &CMatrix, y: &CVector) -> Result<SparseSolution> {
    check_system(g, y)?;
    let (coeffs, _) = pinv_solve(g, y, PINV_CUTOFF)?;
    Ok(SparseSolution {
        residual_norm: residual(g, &coeffs, y),
        coeffs,
        iterations: 1,
        solver: SolverKind::LeastSquares,
        lambda: 0.0,
        converged: true,
    })
}

/// Solver choice plus its knobs, so callers can switch routes by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default)]
    pub l1: L1Options,
    /// Defaults to `min(m, p)`.
    #[serde(default)]
    pub omp_k_max: Option<usize>,
    #[serde(default = "default_omp_tol")]
    pub omp_tol: f64,
}

fn default_omp_tol() -> f64 {
    1e-10
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::new(SolverKind::L1)
    }
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        SolverConfig { kind, l1: L1Options::default(), omp_k_max: None, omp_tol: default_omp_tol() }
    }

    pub fn solve(&self, g: &CMatrix, y: &CVector) -> Result<SparseSolution> {
        match self.kind {
            SolverKind::L1 => solve_l1_path(g, y, &self.l1),
            SolverKind::Omp => {
                let k = self.omp_k_max.unwrap_or(g.nrows().min(g.ncols()));
                solve_omp(g, y, k, self.omp_tol)
            }
            SolverKind::LeastSquares => solve_least_squares(g, y),
        }
    }
}
