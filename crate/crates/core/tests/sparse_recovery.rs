//! Recovery of planted 2-sparse vectors by both sparse solvers.

mod common;

use common::{instances, recovered};
use sparsedyn::sparse::{solve_l1_path, solve_omp, L1Options};

#[test]
fn l1_recovers_planted_two_sparse_vectors() {
    let insts = instances();
    let hits = insts
        .iter()
        .filter(|inst| recovered(&solve_l1_path(&inst.g, &inst.y, &L1Options::default()).unwrap().coeffs, &inst.x))
        .count();
    assert!(hits >= 45, "recovered {hits}/50");
}

#[test]
fn omp_recovers_planted_two_sparse_vectors() {
    let insts = instances();
    let hits = insts
        .iter()
        .filter(|inst| recovered(&solve_omp(&inst.g, &inst.y, 2, 1e-10).unwrap().coeffs, &inst.x))
        .count();
    assert!(hits >= 45, "recovered {hits}/50");
}
