//! Binary kernel dumps.
//!
//! Layout: the 4-byte magic `MKRN`, a little-endian `u32` header length, the
//! JSON header, then little-endian doubles: the dense `n x n` matrix (row
//! major, atom on the diagonal), the atom vector and the truncation vector.

use serde::{Deserialize, Serialize};

use super::{GridRule, KernelMatrix, OracleError};
use crate::dynamics::Kernel;

pub const DUMP_FORMAT: &str = "mala-kernel-v1";
const MAGIC: &[u8; 4] = b"MKRN";
const MAX_HEADER: usize = 1 << 20;
const MAX_NODES: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub format: String,
    pub kind: Kernel,
    pub n: usize,
    pub bounds: (f64, f64),
    pub rule: GridRule,
    pub h: f64,
    pub beta: f64,
    pub e_star: f64,
    pub e_h: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelDump {
    pub header: DumpHeader,
    pub matrix: Vec<f64>,
    pub atom: Vec<f64>,
    pub truncation_mass: Vec<f64>,
}

pub(crate) fn encode(k: &KernelMatrix, config_hash: &str) -> Vec<u8> {
    let header = DumpHeader {
        format: DUMP_FORMAT.into(),
        kind: k.kind,
        n: k.len(),
        bounds: k.grid.bounds,
        rule: k.grid.rule,
        h: k.cfg.h,
        beta: k.cfg.beta,
        e_star: k.cfg.e_star,
        e_h: k.cfg.e_h(),
        config_hash: config_hash.into(),
    };
    let json = serde_json::to_vec(&header).expect("header serialises");
    let n = k.len();
    let mut out = Vec::with_capacity(8 + json.len() + 8 * (n * n + 2 * n));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in k.dense().iter().chain(&k.atom).chain(&k.truncation_mass) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn bad(msg: impl Into<String>) -> OracleError {
    OracleError::Decode(msg.into())
}

/// Parses a dump produced by [`KernelMatrix::to_dump`].
pub fn decode_kernel_dump(bytes: &[u8]) -> Result<KernelDump, OracleError> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(bad("missing magic"));
    }
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    if hlen > MAX_HEADER || 8 + hlen > bytes.len() {
        return Err(bad(format!("header length {hlen} out of range")));
    }
    let header: DumpHeader = serde_json::from_slice(&bytes[8..8 + hlen]).map_err(|e| bad(format!("header: {e}")))?;
    if header.format != DUMP_FORMAT {
        return Err(bad(format!("unsupported format `{}`", header.format)));
    }
    let n = header.n;
    if n == 0 || n > MAX_NODES {
        return Err(bad(format!("node count {n} out of range")));
    }
    let count = n
        .checked_mul(n)
        .and_then(|v| v.checked_add(2 * n))
        .ok_or_else(|| bad("size overflow"))?;
    let body = &bytes[8 + hlen..];
    if Some(body.len()) != count.checked_mul(8) {
        return Err(bad(format!(
            "expected {} payload bytes, found {}",
            count * 8,
            body.len()
        )));
    }
    let mut vals = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let matrix: Vec<f64> = vals.by_ref().take(n * n).collect();
    let atom: Vec<f64> = vals.by_ref().take(n).collect();
    let truncation_mass: Vec<f64> = vals.collect();
    Ok(KernelDump {
        header,
        matrix,
        atom,
        truncation_mass,
    })
}
