//! Versioned binary checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "ASKNAV01"                 8 bytes
//! version                    u32
//! payload length             u64
//! payload                    see below
//! sha256(payload)            32 bytes
//! ```
//!
//! Payload: input_dim, hidden layer count, hidden widths, action_dim (u64
//! each), action_dim again (u64), parameter count (u64) and parameters (f64),
//! Adam t (u64), β1, β2, eps (f64), m count + values, v count + values,
//! training iteration (u64), config snapshot length (u64) + UTF-8 text.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{parse_config, RunConfig};
use crate::error::{Error, Result};
use crate::net::{Architecture, PolicyParams};
use crate::ppo::AdamState;

pub const MAGIC: &[u8; 8] = b"ASKNAV01";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub adam: AdamState,
    pub iteration: u64,
    pub config: RunConfig,
}

impl Checkpoint {
    pub fn arch(&self) -> &Architecture {
        self.params.arch()
    }

    pub fn action_dim(&self) -> usize {
        self.params.arch().action_dim
    }
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    put_u64(out, vs.len() as u64);
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let mut payload = Vec::new();
    let arch = ck.arch();
    put_u64(&mut payload, arch.input_dim as u64);
    put_u64(&mut payload, arch.hidden.len() as u64);
    for &h in &arch.hidden {
        put_u64(&mut payload, h as u64);
    }
    put_u64(&mut payload, arch.action_dim as u64);
    put_u64(&mut payload, arch.action_dim as u64);
    put_f64s(&mut payload, &ck.params.data);
    put_u64(&mut payload, ck.adam.t);
    for v in [ck.adam.beta1, ck.adam.beta2, ck.adam.eps] {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    put_f64s(&mut payload, &ck.adam.m);
    put_f64s(&mut payload, &ck.adam.v);
    put_u64(&mut payload, ck.iteration);
    let doc = ck.config.to_document();
    put_u64(&mut payload, doc.len() as u64);
    payload.extend_from_slice(doc.as_bytes());

    let mut out = Vec::with_capacity(payload.len() + 52);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u64(&mut out, payload.len() as u64);
    out.extend_from_slice(&payload);
    out.extend_from_slice(&Sha256::digest(&payload));
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corrupt("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > (self.buf.len() - self.pos) as u64 {
            return Err(Error::Corrupt("length field exceeds data".into()));
        }
        Ok(n as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let mut r = Reader { buf: bytes, pos: 12 };
    let payload_len = r.len()?;
    let payload = r.take(payload_len)?;
    let digest = r.take(32)?;
    if r.pos != bytes.len() {
        return Err(Error::Corrupt("trailing bytes".into()));
    }
    if Sha256::digest(payload).as_slice() != digest {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }

    let mut p = Reader { buf: payload, pos: 0 };
    let input_dim = p.u64()? as usize;
    let n_hidden = p.len()?;
    let hidden = (0..n_hidden).map(|_| p.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let action_dim = p.u64()? as usize;
    if p.u64()? as usize != action_dim {
        return Err(Error::Corrupt("action_dim fields disagree".into()));
    }
    let arch = Architecture::new(input_dim, hidden, action_dim).map_err(|e| Error::Corrupt(e.to_string()))?;
    let params = PolicyParams::from_data(arch, p.f64s()?).map_err(|e| Error::Corrupt(e.to_string()))?;
    let t = p.u64()?;
    let (beta1, beta2, eps) = (p.f64()?, p.f64()?, p.f64()?);
    let m = p.f64s()?;
    let v = p.f64s()?;
    if m.len() != params.data.len() || v.len() != params.data.len() {
        return Err(Error::Corrupt("optimizer state does not match parameters".into()));
    }
    let iteration = p.u64()?;
    let doc_len = p.len()?;
    let doc = std::str::from_utf8(p.take(doc_len)?).map_err(|_| Error::Corrupt("config snapshot is not UTF-8".into()))?;
    if p.pos != payload.len() {
        return Err(Error::Corrupt("trailing payload bytes".into()));
    }
    let config = parse_config(doc).map_err(|e| Error::Corrupt(format!("config snapshot: {e}")))?;
    Ok(Checkpoint {
        params,
        adam: AdamState {
            m,
            v,
            t,
            beta1,
            beta2,
            eps,
        },
        iteration,
        config,
    })
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    write_atomic(path, &encode(ck))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[derive(Serialize)]
struct WeightsExport<'a> {
    input_dim: usize,
    hidden: &'a [usize],
    action_dim: usize,
    iteration: u64,
    layers: Vec<LayerExport>,
}

#[derive(Serialize)]
struct LayerExport {
    fan_in: usize,
    fan_out: usize,
    /// Input-major: `weights[i][j]` connects input `i` to output `j`.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

/// Human-readable JSON dump of the network weights.
pub fn export_json(ck: &Checkpoint) -> String {
    let arch = ck.arch();
    let layers = ck
        .params
        .layout()
        .iter()
        .map(|s| LayerExport {
            fan_in: s.fan_in,
            fan_out: s.fan_out,
            weights: ck.params.data[s.w..s.b].chunks(s.fan_out).map(<[f64]>::to_vec).collect(),
            bias: ck.params.data[s.b..s.b + s.fan_out].to_vec(),
        })
        .collect();
    serde_json::to_string_pretty(&WeightsExport {
        input_dim: arch.input_dim,
        hidden: &arch.hidden,
        action_dim: arch.action_dim,
        iteration: ck.iteration,
        layers,
    })
    .expect("weights serialize")
}
