//! Overcomplete modal library: per-regime POD bases side by side.
//!
//! Blocks are stored as given and never re-orthogonalized against each other,
//! so each regime's basis can be pulled back out intact for reconstruction.
//!
//! On disk a library is a little-endian binary container:
//!
//! ```text
//! "PODL"  u16 version (= 1)  u32 block_count  u64 n
//! per block:
//!     u32 regime_id  u32 rank
//!     rank × f64 singular values
//!     rank × f64 energy fractions
//!     n × rank × (f64 re, f64 im), column-major
//! ```
//!
//! next to a key-value manifest describing how it was built.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cqgle::{CqgleParams, GridSpec};
use crate::pod::PodBasis;
use crate::{CMatrix, Complex64, Error, RegimeId, Result};

pub const MAGIC: &[u8; 4] = b"PODL";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModalLibrary {
    blocks: Vec<PodBasis>,
    n: usize,
    offsets: Vec<usize>,
    matrix: CMatrix,
}

impl ModalLibrary {
    pub fn new(bases: Vec<PodBasis>) -> Result<Self> {
        let n = bases
            .first()
            .ok_or_else(|| Error::invalid("library needs at least one basis"))?
            .n();
        let mut offsets = Vec::with_capacity(bases.len());
        let mut p = 0;
        for (i, b) in bases.iter().enumerate() {
            if b.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.n() });
            }
            if bases[..i].iter().any(|other| other.regime == b.regime) {
                return Err(Error::DuplicateRegime(b.regime));
            }
            if b.rank() == 0 {
                return Err(Error::invalid(format!("regime {} has an empty basis", b.regime)));
            }
            offsets.push(p);
            p += b.rank();
        }
        let mut matrix = CMatrix::zeros(n, p);
        for (b, &off) in bases.iter().zip(&offsets) {
            matrix.columns_mut(off, b.rank()).copy_from(&b.modes);
        }
        Ok(ModalLibrary { blocks: bases, n, offsets, matrix })
    }

    pub fn blocks(&self) -> &[PodBasis] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total column count `Σ r_j`.
    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// The `n × p` concatenation `[Ψ_1 … Ψ_J]`.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn regimes(&self) -> Vec<RegimeId> {
        self.blocks.iter().map(|b| b.regime).collect()
    }

    pub fn block_index(&self, regime: RegimeId) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.regime == regime)
            .ok_or(Error::UnknownRegime(regime))
    }

    pub fn block(&self, regime: RegimeId) -> Result<&PodBasis> {
        Ok(&self.blocks[self.block_index(regime)?])
    }

    /// Column range `[start, end)` owned by block `idx`.
    pub fn block_range(&self, idx: usize) -> std::ops::Range<usize> {
        let start = self.offsets[idx];
        start..start + self.blocks[idx].rank()
    }

    pub fn block_of_column(&self, col: usize) -> Result<RegimeId> {
        if col >= self.p() {
            return Err(Error::OutOfRange { index: col, len: self.p() });
        }
        let idx = self.offsets.partition_point(|&off| off <= col) - 1;
        Ok(self.blocks[idx].regime)
    }
}

pub fn build_library(bases: Vec<PodBasis>) -> Result<ModalLibrary> {
    ModalLibrary::new(bases)
}

pub fn save_library(lib: &ModalLibrary, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(&encode(lib))?;
    out.flush()?;
    Ok(())
}

pub fn load_library(path: &Path) -> Result<ModalLibrary> {
    decode(&fs::read(path)?)
}

pub fn encode(lib: &ModalLibrary) -> Vec<u8> {
    let mut buf = Vec::with_capacity(18 + 16 * lib.n * lib.p() + 24 * lib.p());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(lib.blocks.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(lib.n as u64).to_le_bytes());
    for b in &lib.blocks {
        buf.extend_from_slice(&b.regime.0.to_le_bytes());
        buf.extend_from_slice(&(b.rank() as u32).to_le_bytes());
        for v in b.singular_values.iter().chain(&b.energy_fractions) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        // nalgebra storage is column-major already
        for z in b.modes.iter() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated file: need {len} bytes at offset {}, have {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn decode(bytes: &[u8]) -> Result<ModalLibrary> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    let n = usize::try_from(r.u64()?).map_err(|_| Error::Format("n overflows".into()))?;
    if count == 0 || n == 0 {
        return Err(Error::Format("empty library".into()));
    }
    let mut blocks = Vec::new();
    for _ in 0..count {
        let regime = RegimeId(r.u32()?);
        let rank = r.u32()? as usize;
        // reject declared sizes the payload cannot hold before allocating
        let need = rank
            .checked_mul(n)
            .and_then(|v| v.checked_mul(16))
            .and_then(|v| v.checked_add(16 * rank))
            .ok_or_else(|| Error::Format("declared block size overflows".into()))?;
        if need > r.remaining() {
            return Err(Error::Format(format!(
                "block {regime} declares {need} bytes but only {} remain",
                r.remaining()
            )));
        }
        let singular_values = (0..rank).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let energy_fractions = (0..rank).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(n * rank);
        for _ in 0..n * rank {
            let re = r.f64()?;
            let im = r.f64()?;
            data.push(Complex64::new(re, im));
        }
        blocks.push(PodBasis {
            regime,
            modes: CMatrix::from_vec(n, rank, data),
            singular_values,
            energy_fractions,
        });
    }
    if r.remaining() != 0 {
        return Err(Error::Format(format!("{} trailing bytes after payload", r.remaining())));
    }
    ModalLibrary::new(blocks).map_err(|e| Error::Format(e.to_string()))
}

/// Human-readable record of how a library was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub grid: GridSpec,
    pub energy_threshold: f64,
    pub snapshot_start: f64,
    pub snapshot_end: f64,
    pub snapshot_stride: f64,
    pub dt: f64,
    #[serde(rename = "regime")]
    pub regimes: Vec<ManifestRegime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRegime {
    pub id: RegimeId,
    pub rank: usize,
    #[serde(flatten)]
    pub params: CqgleParams,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

/// `lib.podl` → `lib.podl.manifest`.
pub fn manifest_path(library_path: &Path) -> PathBuf {
    let mut s = library_path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

pub fn save_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let text = toml::to_string(manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(regime: u32, n: usize, rank: usize) -> PodBasis {
        let modes = CMatrix::from_fn(n, rank, |i, j| {
            Complex64::new((i * 7 + j * 3 + regime as usize) as f64 * 0.1, -(i as f64) * 0.01 * j as f64)
        });
        PodBasis {
            regime: RegimeId(regime),
            modes,
            singular_values: (0..rank).map(|j| 10.0 / (j + 1) as f64).collect(),
            energy_fractions: (0..rank).map(|j| 0.5 / (j + 1) as f64).collect(),
        }
    }

    #[test]
    fn bookkeeping() {
        let lib = build_library(vec![basis(1, 6, 3)]).unwrap();
        assert_eq!(lib.p(), 3);
        assert_eq!(lib.offsets(), &[0]);

        let lib = build_library(vec![basis(1, 6, 2), basis(2, 6, 2)]).unwrap();
        assert_eq!(lib.p(), 4);
        assert_eq!(lib.offsets(), &[0, 2]);
        assert_eq!(lib.block_of_column(3).unwrap(), RegimeId(2));

        let lib = build_library(vec![basis(1, 6, 3), basis(2, 6, 2), basis(3, 6, 1)]).unwrap();
        assert_eq!(lib.block_of_column(0).unwrap(), RegimeId(1));
        assert_eq!(lib.block_of_column(3).unwrap(), RegimeId(2));
        assert_eq!(lib.block_of_column(4).unwrap(), RegimeId(2));
        assert_eq!(lib.block_of_column(5).unwrap(), RegimeId(3));
        assert!(matches!(lib.block_of_column(6), Err(Error::OutOfRange { .. })));

        for (idx, b) in lib.blocks().iter().enumerate() {
            assert_eq!(lib.matrix().columns(lib.offsets()[idx], b.rank()), b.modes);
        }
    }

    #[test]
    fn construction_errors() {
        assert!(build_library(vec![]).is_err());
        assert!(matches!(
            build_library(vec![basis(1, 6, 2), basis(2, 5, 2)]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            build_library(vec![basis(1, 6, 2), basis(1, 6, 2)]),
            Err(Error::DuplicateRegime(RegimeId(1)))
        ));
    }

    #[test]
    fn file_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lib.podl");
        let mut b = basis(4, 9, 3);
        b.modes[(2, 1)] = Complex64::new(f64::MIN_POSITIVE, -0.0);
        let lib = build_library(vec![basis(1, 9, 2), b]).unwrap();
        save_library(&lib, &path).unwrap();
        let back = load_library(&path).unwrap();
        assert_eq!(back, lib);
        assert_eq!(encode(&back), encode(&lib));
    }

    #[test]
    fn corrupt_files_are_format_errors() {
        let lib = build_library(vec![basis(1, 5, 2), basis(2, 5, 1)]).unwrap();
        let bytes = encode(&lib);

        for cut in [0, 3, 10, 17, 30, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(Error::Format(_))), "cut at {cut}");
        }

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode(&bad_magic), Err(Error::Format(_))));

        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(matches!(decode(&bad_version), Err(Error::Format(_))));

        // declare a larger rank for the first block than the payload holds
        let mut inflated = bytes.clone();
        inflated[22..26].copy_from_slice(&1000u32.to_le_bytes());
        assert!(matches!(decode(&inflated), Err(Error::Format(_))));

        // declare a smaller n than was written: leftover bytes
        let mut shrunk = bytes.clone();
        shrunk[10..18].copy_from_slice(&4u64.to_le_bytes());
        assert!(matches!(decode(&shrunk), Err(Error::Format(_))));

        let mut trailing = bytes;
        trailing.push(0);
        assert!(matches!(decode(&trailing), Err(Error::Format(_))));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            grid: GridSpec::standard(),
            energy_threshold: 0.99,
            snapshot_start: 40.0,
            snapshot_end: 80.0,
            snapshot_stride: 1.0,
            dt: 0.01,
            regimes: vec![ManifestRegime {
                id: RegimeId(1),
                rank: 2,
                params: CqgleParams::new(-0.3, -0.05, 1.45, 0.0, -0.1, -0.5),
                description: "3-hump, localized".into(),
            }],
        };
        let path = manifest_path(&dir.path().join("lib.podl"));
        assert!(path.to_string_lossy().ends_with("lib.podl.manifest"));
        save_manifest(&m, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("energy_threshold = 0.99"));
        assert_eq!(load_manifest(&path).unwrap(), m);
    }
}
