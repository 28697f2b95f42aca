//! Regime decision from a sparse coefficient vector, and re-estimation of
//! modal amplitudes on the winning block alone.

use serde::{Deserialize, Serialize};

use crate::library::ModalLibrary;
use crate::linalg::pinv_solve;
use crate::sensing::{self, Measurement, SensorSet};
use crate::sparse::{SparseSolution, PINV_CUTOFF};
use crate::{CVector, Error, RegimeId, Result};

/// How a block's coefficients are collapsed into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockScore {
    /// `Σ |â_i|` over the block.
    #[default]
    L1,
    /// `(Σ |â_i|²)^½` over the block.
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub regime: RegimeId,
    /// One score per library block, in library order.
    pub block_scores: Vec<(RegimeId, f64)>,
    /// Winning score minus the runner-up (the winning score itself when the
    /// library has a single block).
    pub margin: f64,
    pub solution: SparseSolution,
}

pub fn classify(lib: &ModalLibrary, sol: SparseSolution) -> Result<Classification> {
    classify_with(lib, sol, BlockScore::L1)
}

pub fn classify_with(lib: &ModalLibrary, sol: SparseSolution, rule: BlockScore) -> Result<Classification> {
    if sol.coeffs.len() != lib.p() {
        return Err(Error::DimensionMismatch { expected: lib.p(), found: sol.coeffs.len() });
    }
    let scores: Vec<(RegimeId, f64)> = lib
        .blocks()
        .iter()
        .enumerate()
        .map(|(idx, b)| {
            let block = sol.coeffs.rows_range(lib.block_range(idx));
            let score = match rule {
                BlockScore::L1 => block.iter().map(|z| z.norm()).sum(),
                BlockScore::L2 => block.norm(),
            };
            (b.regime, score)
        })
        .collect();
    if scores.iter().all(|s| s.1 == 0.0) {
        return Err(Error::AllZero);
    }
    // strict comparison keeps the lowest block index on ties
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.1 > scores[best].1 {
            best = i;
        }
    }
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, s)| s.1)
        .fold(0.0, f64::max);
    Ok(Classification {
        regime: scores[best].0,
        margin: scores[best].1 - runner_up,
        block_scores: scores,
        solution: sol,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub regime: RegimeId,
    pub amplitudes: CVector,
    /// Fewer sensors than modes: the amplitudes are the minimum-norm solution.
    pub underdetermined: bool,
}

/// `a₀ = (ΦΨ_j)⁺ y` for the block of `regime`.
pub fn project_onto_block(
    lib: &ModalLibrary,
    sensors: &SensorSet,
    y: &Measurement,
    regime: RegimeId,
) -> Result<Projection> {
    let block = lib.block(regime)?;
    let g = sensing::rows(&block.modes, sensors)?;
    if y.values.len() != g.nrows() {
        return Err(Error::DimensionMismatch { expected: g.nrows(), found: y.values.len() });
    }
    let (amplitudes, _) = pinv_solve(&g, &y.values, PINV_CUTOFF)?;
    Ok(Projection { regime, amplitudes, underdetermined: sensors.m() < block.rank() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cqgle::GridSpec;
    use crate::library::build_library;
    use crate::pod::PodBasis;
    use crate::sensing::place_sensors;
    use crate::sparse::SolverKind;
    use crate::{CMatrix, Complex64};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lib(ranks: &[usize], n: usize) -> ModalLibrary {
        let bases = ranks
            .iter()
            .enumerate()
            .map(|(k, &r)| PodBasis {
                regime: RegimeId(k as u32 + 1),
                modes: CMatrix::from_fn(n, r, |i, j| {
                    c(((i + 1) as f64 * (j + k + 1) as f64 * 0.37).sin(), ((i * (k + 2)) as f64 * 0.11 + j as f64).cos())
                }),
                singular_values: vec![1.0; r],
                energy_fractions: vec![0.1; r],
            })
            .collect();
        build_library(bases).unwrap()
    }

    fn solution(coeffs: Vec<Complex64>) -> SparseSolution {
        SparseSolution {
            coeffs: CVector::from_vec(coeffs),
            residual_norm: 0.0,
            iterations: 0,
            solver: SolverKind::L1,
            lambda: 0.0,
            converged: true,
        }
    }

    #[test]
    fn single_nonzero_names_its_block() {
        let l = lib(&[2, 2, 1], 8);
        let mut a = vec![c(0.0, 0.0); 5];
        a[3] = c(0.0, -0.4);
        let cl = classify(&l, solution(a)).unwrap();
        assert_eq!(cl.regime, RegimeId(2));
        assert!((cl.margin - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let l = lib(&[2, 2], 8);
        assert!(matches!(classify(&l, solution(vec![c(0.0, 0.0); 4])), Err(Error::AllZero)));
        assert!(matches!(classify(&l, solution(vec![c(1.0, 0.0); 3])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn block_sums_and_margin() {
        let l = lib(&[1, 1, 1, 1, 1, 1], 8);
        let cl = classify(&l, solution(vec![
            c(0.1, 0.0),
            c(0.0, 0.7),
            c(-0.2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ]))
        .unwrap();
        assert_eq!(cl.regime, RegimeId(2));
        assert!((cl.margin - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_block() {
        let l = lib(&[1, 1], 4);
        let cl = classify(&l, solution(vec![c(0.5, 0.0), c(0.0, 0.5)])).unwrap();
        assert_eq!(cl.regime, RegimeId(1));
        assert_eq!(cl.margin, 0.0);
    }

    #[test]
    fn l2_rule_differs_from_l1() {
        let l = lib(&[2, 1], 4);
        let a = vec![c(0.4, 0.0), c(0.4, 0.0), c(0.7, 0.0)];
        assert_eq!(classify_with(&l, solution(a.clone()), BlockScore::L1).unwrap().regime, RegimeId(1));
        assert_eq!(classify_with(&l, solution(a), BlockScore::L2).unwrap().regime, RegimeId(2));
    }

    #[test]
    fn scale_and_permutation_invariance() {
        let l = lib(&[2, 3, 1], 8);
        let a: Vec<_> = (0..6).map(|i| c((i as f64 * 1.3).sin(), (i as f64).cos() * 0.2)).collect();
        let base = classify(&l, solution(a.clone())).unwrap();
        for s in [1e-6, 0.5, 3.0, 1e5] {
            let scaled = a.iter().map(|z| z * s).collect();
            assert_eq!(classify(&l, solution(scaled)).unwrap().regime, base.regime);
        }
        // reverse the block order and the coefficient blocks with it
        let rev_blocks: Vec<PodBasis> = l.blocks().iter().rev().cloned().collect();
        let rev = build_library(rev_blocks).unwrap();
        let mut rev_a = Vec::new();
        for idx in (0..3).rev() {
            rev_a.extend_from_slice(&a[l.block_range(idx)]);
        }
        let cl = classify(&rev, solution(rev_a)).unwrap();
        assert_eq!(cl.regime, base.regime);
        let mut expected = base.block_scores.clone();
        expected.reverse();
        for (x, y) in cl.block_scores.iter().zip(&expected) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_recovers_exact_amplitudes() {
        let g = GridSpec::new(32, -20.0, 20.0).unwrap();
        let l = lib(&[3, 2], 32);
        let sensors = place_sensors(&g, &[0.0, 2.5, 5.0]).unwrap();
        let a_true = CVector::from_vec(vec![c(1.0, -0.5), c(0.25, 0.0), c(-0.7, 0.3)]);
        let field = &l.blocks()[0].modes * &a_true;
        let values = CVector::from_iterator(3, sensors.indices.iter().map(|&i| field[i]));
        let y = Measurement { values, time: 0.0, sigma: 0.0 };
        let p = project_onto_block(&l, &sensors, &y, RegimeId(1)).unwrap();
        assert!(!p.underdetermined);
        assert!((p.amplitudes - a_true).norm() < 1e-8);

        let zero = Measurement { values: CVector::zeros(3), time: 0.0, sigma: 0.0 };
        let p = project_onto_block(&l, &sensors, &zero, RegimeId(2)).unwrap();
        assert!(p.amplitudes.iter().all(|z| z.norm() == 0.0));
        assert!(project_onto_block(&l, &sensors, &zero, RegimeId(9)).is_err());
    }

    #[test]
    fn projection_underdetermined_and_least_squares_optimal() {
        let g = GridSpec::new(32, -20.0, 20.0).unwrap();
        let l = lib(&[4, 2], 32);
        let few = place_sensors(&g, &[0.0, 5.0]).unwrap();
        let y = Measurement { values: CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]), time: 0.0, sigma: 0.0 };
        let p = project_onto_block(&l, &few, &y, RegimeId(1)).unwrap();
        assert!(p.underdetermined);
        let gm = sensing::rows(&l.blocks()[0].modes, &few).unwrap();
        assert!((&gm * &p.amplitudes - &y.values).norm() < 1e-10);

        let many = place_sensors(&g, &[-10.0, -2.5, 0.0, 5.0, 12.5]).unwrap();
        let y = Measurement {
            values: CVector::from_fn(5, |i, _| c(i as f64 - 1.0, 0.3 * i as f64)),
            time: 0.0,
            sigma: 0.0,
        };
        let p = project_onto_block(&l, &many, &y, RegimeId(2)).unwrap();
        let gm = sensing::rows(&l.blocks()[1].modes, &many).unwrap();
        let best = (&gm * &p.amplitudes - &y.values).norm();
        for k in 0..20 {
            let perturb = CVector::from_fn(2, |i, _| c(((k * 3 + i) as f64).sin(), ((k + i) as f64).cos()) * 0.1);
            let other = &p.amplitudes + perturb;
            assert!(best <= (&gm * other - &y.values).norm() + 1e-12);
        }
    }
}
