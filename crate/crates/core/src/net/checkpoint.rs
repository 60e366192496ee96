//! Versioned binary checkpoint.
//!
//! ```text
//! magic "EVCCKPT\0" | version u32 | input, hidden1, embedding, hidden3, classes: u64
//! | epoch u64 | seed u64 | adam step u64 | beta1, beta2, epsilon: f64
//! | config-hash length u32 | config-hash bytes
//! | parameters f64 | Adam first moments f64 | Adam second moments f64
//! ```
//!
//! All integers and floats are little-endian; tensors are row-major in the
//! order W1, b1, W2, b2, W3, b3, W4, b4.

use std::fs;
use std::path::Path;

use super::adam::{AdamConfig, AdamState};
use super::params::{LayerSizes, NetParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"EVCCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub params: NetParams<T>,
    pub adam: AdamState<T>,
    pub epoch: u64,
    pub seed: u64,
    pub config_hash: String,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn fill<T: Real>(&mut self, p: &mut NetParams<T>) -> Result<()> {
        for s in p.slices_mut() {
            for x in s.iter_mut() {
                *x = T::from_f64_lossy(self.f64()?);
            }
        }
        Ok(())
    }
}

impl<T: Real> Checkpoint<T> {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let s = self.params.sizes();
        for d in [s.input, s.hidden1, s.embedding, s.hidden3, s.classes] {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in [self.epoch, self.seed, self.adam.step] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let c = self.adam.config;
        for v in [c.beta1, c.beta2, c.epsilon] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.config_hash.len() as u32).to_le_bytes());
        out.extend_from_slice(self.config_hash.as_bytes());
        for p in [&self.params, &self.adam.first, &self.adam.second] {
            for s in p.slices() {
                for x in s {
                    out.extend_from_slice(&x.to_f64_lossy().to_le_bytes());
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut d = [0usize; 5];
        for x in &mut d {
            *x = r.u64()? as usize;
        }
        let sizes = LayerSizes {
            input: d[0],
            hidden1: d[1],
            embedding: d[2],
            hidden3: d[3],
            classes: d[4],
        };
        // refuse absurd headers before allocating
        let needed = sizes.parameter_count().saturating_mul(24);
        if needed > bytes.len() {
            return Err(Error::Format("checkpoint truncated".into()));
        }
        let epoch = r.u64()?;
        let seed = r.u64()?;
        let step = r.u64()?;
        let config = AdamConfig {
            beta1: r.f64()?,
            beta2: r.f64()?,
            epsilon: r.f64()?,
        };
        let hash_len = r.u32()? as usize;
        let config_hash = String::from_utf8(r.take(hash_len)?.to_vec())
            .map_err(|_| Error::Format("config hash is not UTF-8".into()))?;
        let mut params = NetParams::zeros(sizes);
        let mut first = NetParams::zeros(sizes);
        let mut second = NetParams::zeros(sizes);
        r.fill(&mut params)?;
        r.fill(&mut first)?;
        r.fill(&mut second)?;
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Checkpoint {
            params,
            adam: AdamState {
                first,
                second,
                step,
                config,
            },
            epoch,
            seed,
            config_hash,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
