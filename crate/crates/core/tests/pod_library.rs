//! POD and library properties on the real six-regime snapshot data.

use std::sync::OnceLock;

use sparsedyn::harness::{build_all, simulate_regime, ExperimentConfig};
use sparsedyn::library::{decode, encode, load_library, load_manifest, manifest_path, ModalLibrary};
use sparsedyn::pod::pod_basis;
use sparsedyn::{CMatrix, RegimeId};

fn library() -> &'static ModalLibrary {
    static LIB: OnceLock<ModalLibrary> = OnceLock::new();
    LIB.get_or_init(|| build_all(&ExperimentConfig::default()).unwrap())
}

fn orthonormality_error(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    (g - CMatrix::identity(m.ncols(), m.ncols())).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn every_block_is_orthonormal_and_energy_ordered() {
    for b in library().blocks() {
        assert!(orthonormality_error(&b.modes) <= 1e-10, "regime {}", b.regime);
        assert!(b.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let captured: f64 = b.energy_fractions.iter().sum();
        assert!(captured >= 0.99 - 1e-12, "regime {} captures {captured}", b.regime);
    }
}

#[test]
fn exploding_soliton_needs_the_most_modes() {
    let lib = library();
    let r4 = lib.block(RegimeId(4)).unwrap().rank();
    for b in lib.blocks() {
        assert!(b.rank() <= r4);
    }
    assert!(lib.block(RegimeId(3)).unwrap().rank() > 1);
    assert_eq!(lib.p(), lib.blocks().iter().map(|b| b.rank()).sum::<usize>());
}

#[test]
fn truncated_basis_reconstructs_its_snapshots() {
    let cfg = ExperimentConfig::default();
    let snaps = simulate_regime(&cfg, RegimeId(1)).unwrap();
    let basis = pod_basis(&snaps, cfg.energy_threshold).unwrap();
    let a = snaps.data();
    let residual = a - &basis.modes * (basis.modes.adjoint() * a);
    let rel = residual.norm() / a.norm();
    assert!(rel <= 0.1, "{rel}");
}

#[test]
fn rebuild_is_bit_identical_and_survives_disk() {
    let cfg = ExperimentConfig::default();
    let again = build_all(&cfg).unwrap();
    let bytes = encode(library());
    assert_eq!(bytes, encode(&again));
    assert_eq!(&decode(&bytes).unwrap(), library());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lib.podl");
    sparsedyn::harness::save_with_manifest(&cfg, library(), &path).unwrap();
    assert_eq!(&load_library(&path).unwrap(), library());
    let manifest = load_manifest(&manifest_path(&path)).unwrap();
    let ranks: Vec<usize> = manifest.regimes.iter().map(|r| r.rank).collect();
    let expected: Vec<usize> = library().blocks().iter().map(|b| b.rank()).collect();
    assert_eq!(ranks, expected);
    assert_eq!(manifest.grid, cfg.grid);
}
