//! Small dense helpers on top of nalgebra.

use nalgebra::linalg::{SymmetricEigen, SVD};

use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Minimum-norm least-squares solution of `g x = y` through the SVD, treating
/// singular values below `rel_cutoff · σ_max` as zero. Returns the solution
/// and the numerical rank.
pub fn pinv_solve(g: &CMatrix, y: &CVector, rel_cutoff: f64) -> Result<(CVector, usize)> {
    if g.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: g.nrows(), found: y.len() });
    }
    let zero = CVector::zeros(g.ncols());
    if g.is_empty() {
        return Ok((zero, 0));
    }
    let svd = SVD::try_new(g.clone(), true, true, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let (u, v_t) = match (&svd.u, &svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::EigenFailure),
    };
    let s_max = svd.singular_values.max();
    if s_max == 0.0 {
        return Ok((zero, 0));
    }
    let cutoff = rel_cutoff * s_max;
    let mut x = zero;
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        rank += 1;
        let coef = u.column(i).dotc(y) / s;
        x += v_t.row(i).adjoint() * coef;
    }
    Ok((x, rank))
}

/// `‖gᴴ g‖₂ = σ_max(g)²` by power iteration from a fixed start vector.
pub fn gram_spectral_norm(g: &CMatrix) -> f64 {
    let p = g.ncols();
    if p == 0 || g.nrows() == 0 {
        return 0.0;
    }
    let mut v = CVector::from_element(p, Complex64::new(1.0 / (p as f64).sqrt(), 0.0));
    let mut estimate = 0.0;
    for _ in 0..1000 {
        let w = g.adjoint() * (g * &v);
        let norm = w.norm();
        if norm == 0.0 {
            // start vector in the null space; fall back to the largest column
            return g.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max);
        }
        let converged = (norm - estimate).abs() <= 1e-13 * norm;
        estimate = norm;
        v = w / Complex64::new(norm, 0.0);
        if converged {
            break;
        }
    }
    estimate
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order
/// (stable with respect to the solver's order on ties).
pub fn hermitian_eigen_desc(m: CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pinv_of_square_system() {
        let g = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(3.0, 0.0)]);
        let x_true = CVector::from_vec(vec![c(1.0, -1.0), c(0.5, 2.0)]);
        let y = &g * &x_true;
        let (x, rank) = pinv_solve(&g, &y, 1e-10).unwrap();
        assert_eq!(rank, 2);
        assert!((x - x_true).norm() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let g = CMatrix::from_fn(3, 5, |i, j| c((i + 2 * j) as f64 * 0.3 - 1.0, (i * j) as f64 * 0.1));
        let s = g.clone().svd(false, false).singular_values.max();
        assert!((gram_spectral_norm(&g) - s * s).abs() < 1e-9 * s * s);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen_desc(m).unwrap();
        assert_eq!(vals, vec![3.0, 1.0]);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }
}
