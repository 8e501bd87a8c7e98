//! Binary container for channels, dictionaries and observations.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic    b"XLRS"
//! version  u32
//! meta     u64 length + UTF-8 JSON
//! count    u32
//! count x { name: u32 length + UTF-8, rows: u64, cols: u64,
//!           rows * cols complex entries, column-major, each as re f64, im f64 }
//! ```

use std::fs;
use std::path::Path;

use faer::{Mat, MatRef};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::config::SystemConfig;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"XLRS";
pub const VERSION: u32 = 1;

/// Matrix names used by observation dumps.
pub const CHANNEL: &str = "h";
pub const SENSING: &str = "c";
pub const EQUIVALENT: &str = "omega";
pub const OBSERVATIONS: &str = "y";
pub const DICTIONARY: &str = "e_mu";

/// Metadata of a dumped channel realization and its observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationMeta {
    pub system: SystemConfig,
    pub seed: u64,
    pub trial: u64,
    pub pilot_length: usize,
    /// `None` for noise-free observations.
    pub snr_db: Option<f64>,
    pub noise_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub meta: serde_json::Value,
    pub matrices: Vec<(String, Mat<c64>)>,
}

impl Container {
    pub fn new<M: Serialize>(meta: &M) -> Result<Self> {
        Ok(Container {
            meta: serde_json::to_value(meta)?,
            matrices: Vec::new(),
        })
    }

    pub fn push(&mut self, name: &str, m: MatRef<'_, c64>) {
        self.matrices.push((name.to_string(), m.to_owned()));
    }

    pub fn get(&self, name: &str) -> Option<&Mat<c64>> {
        self.matrices.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn require(&self, name: &str) -> Result<&Mat<c64>> {
        self.get(name)
            .ok_or_else(|| Error::Container(format!("missing matrix '{name}'")))
    }

    pub fn meta_as<M: DeserializeOwned>(&self) -> Result<M> {
        Ok(serde_json::from_value(self.meta.clone())?)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta)?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.matrices.len() as u32).to_le_bytes());
        for (name, m) in &self.matrices {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                    out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Container("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Container(format!("unsupported version {version}")));
        }
        let meta_len = r.len_u64()?;
        let meta = serde_json::from_slice(r.take(meta_len)?)?;
        let count = r.u32()? as usize;
        let mut matrices = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::Container("matrix name is not UTF-8".into()))?;
            let rows = r.len_u64()?;
            let cols = r.len_u64()?;
            let entries = rows
                .checked_mul(cols)
                .filter(|e| e.checked_mul(16).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| Error::Container(format!("matrix '{name}' exceeds the input")))?;
            let mut vals = Vec::with_capacity(entries);
            for _ in 0..entries {
                vals.push(c64::new(r.f64()?, r.f64()?));
            }
            matrices.push((name, Mat::from_fn(rows, cols, |i, j| vals[j * rows + i])));
        }
        if r.remaining() != 0 {
            return Err(Error::Container(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Container { meta, matrices })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Container("unexpected end of input".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn len_u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Container(format!("length {v} too large")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
