//! Planted 2-sparse recovery instances. Each instance is checked by brute
//! force before use: the planted support must be the only pair of columns
//! that explains the data exactly, so a correct solver has a unique target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparsedyn::linalg::pinv_solve;
use sparsedyn::{CMatrix, CVector, Complex64};

const M: usize = 10;
const P: usize = 24;

pub struct Instance {
    pub g: CMatrix,
    pub x: CVector,
    pub y: CVector,
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn support_is_unique(g: &CMatrix, y: &CVector, support: (usize, usize)) -> bool {
    for i in 0..P {
        for j in i + 1..P {
            if (i, j) == support {
                continue;
            }
            let sub = g.select_columns([i, j].iter());
            let (c, _) = pinv_solve(&sub, y, 1e-12).unwrap();
            if (&sub * c - y).norm() < 1e-6 * y.norm() {
                return false;
            }
        }
    }
    true
}

pub fn instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let mut out = Vec::new();
    while out.len() < 50 {
        let mut g = CMatrix::from_fn(M, P, |_, _| gaussian(&mut rng));
        for mut col in g.column_iter_mut() {
            let n = col.norm();
            col /= Complex64::new(n, 0.0);
        }
        let i = rng.random_range(0..P);
        let mut j = rng.random_range(0..P - 1);
        if j >= i {
            j += 1;
        }
        let mut x = CVector::zeros(P);
        for k in [i, j] {
            let mag = rng.random_range(0.5..1.5);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            x[k] = Complex64::from_polar(mag, phase);
        }
        let y = &g * &x;
        if support_is_unique(&g, &y, (i.min(j), i.max(j))) {
            out.push(Instance { g, x, y });
        }
    }
    out
}

pub fn recovered(est: &CVector, truth: &CVector) -> bool {
    (est - truth).norm() <= 1e-2 * truth.norm()
}
