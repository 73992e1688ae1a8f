//! Binary field checkpoints.
//!
//! All numbers are little-endian.
//!
//! | bytes | content |
//! |-------|---------|
//! | 6 | magic `QSHYP1` |
//! | 2 | `u16` format version |
//! | 4 | `u32` n |
//! | 1 | `u8` dims |
//! | 8 | `f64` t |
//! | 48 | `f64` a, b, c, Λ, q, C̄ |
//! | 4 | `u32` tensor basis id |
//! | 13·n^dims·8 | `v` (3 components), `Q` (5), `P` (5), each x-fastest |

use std::io::Write;
use std::path::Path;

use crate::dynamics::SpectralState;
use crate::error::{Error, Result};
use crate::potential::PotentialParams;
use crate::spectral::{Field, Grid};
use crate::tensor::BASIS_ID;

pub const MAGIC: &[u8; 6] = b"QSHYP1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 6 + 2 + 4 + 1 + 8 + 48 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub version: u16,
    pub n: u32,
    pub dims: u8,
    pub t: f64,
    pub params: PotentialParams,
    pub basis_id: u32,
}

impl CheckpointHeader {
    pub fn payload_len(&self) -> usize {
        13 * (self.n as usize).pow(self.dims as u32) * 8
    }
}

pub fn encode(state: &SpectralState) -> Vec<u8> {
    let g = state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 13 * g.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.push(g.dims() as u8);
    out.extend_from_slice(&state.t.to_le_bytes());
    let p = &state.params;
    for x in [p.a, p.b, p.c, p.lambda, p.q, p.c_bar] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&BASIS_ID.to_le_bytes());
    let comps = state
        .v
        .components()
        .iter()
        .chain(state.q.components())
        .chain(state.p.components());
    for c in comps {
        for x in c {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn f64_at(bytes: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"))
}

pub fn decode_header(bytes: &[u8]) -> std::result::Result<CheckpointHeader, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!(
            "truncated header: expected {HEADER_LEN} bytes, found {}",
            bytes.len()
        ));
    }
    if &bytes[..6] != MAGIC {
        return Err(format!("bad magic {:?}, expected {:?}", &bytes[..6], MAGIC));
    }
    let version = u16::from_le_bytes([bytes[6], bytes[7]]);
    if version != VERSION {
        return Err(format!("unsupported format version {version}, expected {VERSION}"));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let dims = bytes[12];
    let t = f64_at(bytes, 13);
    let v: Vec<f64> = (0..6).map(|i| f64_at(bytes, 21 + 8 * i)).collect();
    let basis_id = u32::from_le_bytes(bytes[69..73].try_into().expect("4 bytes"));
    if basis_id != BASIS_ID {
        return Err(format!("tensor basis id {basis_id} does not match {BASIS_ID}"));
    }
    if Grid::new(n as usize, dims as usize).is_err() {
        return Err(format!("invalid grid n = {n}, dims = {dims}"));
    }
    Ok(CheckpointHeader {
        version,
        n,
        dims,
        t,
        params: PotentialParams {
            a: v[0],
            b: v[1],
            c: v[2],
            lambda: v[3],
            q: v[4],
            c_bar: v[5],
        },
        basis_id,
    })
}

pub fn decode(bytes: &[u8]) -> std::result::Result<SpectralState, String> {
    let h = decode_header(bytes)?;
    let expected = HEADER_LEN + h.payload_len();
    if bytes.len() != expected {
        return Err(format!(
            "expected {expected} bytes ({HEADER_LEN} header + {} payload), found {}",
            h.payload_len(),
            bytes.len()
        ));
    }
    let grid = Grid::new(h.n as usize, h.dims as usize).map_err(|e| e.to_string())?;
    let len = grid.len();
    let comp = |k: usize| -> Vec<f64> {
        (0..len)
            .map(|i| f64_at(bytes, HEADER_LEN + 8 * (k * len + i)))
            .collect()
    };
    Ok(SpectralState {
        t: h.t,
        v: Field::from_components(grid, std::array::from_fn(comp)).map_err(|e| e.to_string())?,
        q: Field::from_components(grid, std::array::from_fn(|c| comp(3 + c))).map_err(|e| e.to_string())?,
        p: Field::from_components(grid, std::array::from_fn(|c| comp(8 + c))).map_err(|e| e.to_string())?,
        params: h.params,
    })
}

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn checkpoint_save(state: &SpectralState, path: &Path) -> Result<()> {
    write_atomic(path, &encode(state))
}

pub fn checkpoint_load(path: &Path) -> Result<SpectralState> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn checkpoint_header(path: &Path) -> Result<CheckpointHeader> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |reason| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let h = decode_header(&bytes).map_err(fail)?;
    let expected = HEADER_LEN + h.payload_len();
    if bytes.len() != expected {
        return Err(fail(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    Ok(h)
}
