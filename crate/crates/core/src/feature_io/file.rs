//! Binary feature files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FVDF"
//! 4       4     format_version: u32 (= 1)
//! 8       1     dtype: u8 (4 = f32, 8 = f64)
//! 9       8     rows: u64
//! 17      4     dim: u32
//! 21      1     has_ids: u8 (0 or 1)
//! 22      ...   if has_ids: count u64, then `count` × (len u32, UTF-8 bytes)
//! ...     ...   extractor_tag: len u32, UTF-8 bytes
//! ...     ...   payload: rows × dim values, row-major
//! ```

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::{check_ids, FeatureMatrix};

pub const MAGIC: [u8; 4] = *b"FVDF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn size(self) -> usize {
        self.code() as usize
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            4 => Ok(Dtype::F32),
            8 => Ok(Dtype::F64),
            other => Err(Error::UnsupportedDtype(other)),
        }
    }
}

pub fn encode_features(features: &FeatureMatrix, dtype: Dtype) -> Result<Vec<u8>> {
    let (rows, dim) = (features.rows(), features.dim());
    let dim32 = u32::try_from(dim).map_err(|_| Error::InvalidInput(format!("dim {dim} exceeds u32")))?;
    let mut out = Vec::with_capacity(64 + rows * dim * dtype.size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(dtype.code());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&dim32.to_le_bytes());
    match features.ids() {
        Some(ids) => {
            out.push(1);
            out.extend_from_slice(&(ids.len() as u64).to_le_bytes());
            for id in ids {
                put_str(&mut out, id)?;
            }
        }
        None => out.push(0),
    }
    put_str(&mut out, features.extractor_tag())?;
    let data = features.data();
    for i in 0..rows {
        for j in 0..dim {
            let v = data[(i, j)];
            match dtype {
                Dtype::F32 => {
                    let narrow = v as f32;
                    if narrow.is_infinite() {
                        return Err(Error::InvalidInput(format!(
                            "value {v:e} at row {i}, column {j} overflows f32"
                        )));
                    }
                    out.extend_from_slice(&narrow.to_le_bytes())
                }
                Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    Ok(out)
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u32::try_from(s.len()).map_err(|_| Error::InvalidInput("string longer than u32".into()))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(Error::TruncatedPayload {
                offset: self.pos,
                needed: n,
                available,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &'static str) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::InvalidUtf8(what))
    }
}

/// Decodes a feature file. `f32` payloads are promoted to `f64`.
pub fn decode_features(bytes: &[u8]) -> Result<(FeatureMatrix, Dtype)> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = match r.take(4) {
        Ok(m) => m.try_into().unwrap(),
        Err(_) => {
            let mut found = [0u8; 4];
            found[..bytes.len()].copy_from_slice(bytes);
            return Err(Error::BadMagic { found });
        }
    };
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = Dtype::from_code(r.u8()?)?;
    let rows = usize::try_from(r.u64()?).map_err(|_| Error::InvalidInput("row count overflows usize".into()))?;
    let dim = r.u32()? as usize;
    let ids = match r.u8()? {
        0 => None,
        1 => {
            let count = r.u64()? as usize;
            if count != rows {
                return Err(Error::IdCountMismatch { ids: count, rows });
            }
            let ids = (0..count).map(|_| r.string("row id")).collect::<Result<Vec<_>>>()?;
            check_ids(&ids, rows)?;
            Some(ids)
        }
        other => return Err(Error::InvalidInput(format!("bad id flag {other}"))),
    };
    let tag = r.string("extractor tag")?;
    let count = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(dtype.size()))
        .ok_or_else(|| Error::InvalidInput("payload size overflows".into()))?;
    let payload = r.take(count)?;
    if r.pos != bytes.len() {
        return Err(Error::TrailingBytes(bytes.len() - r.pos));
    }
    let values: Vec<f64> = match dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    let data = DMatrix::from_row_slice(rows, dim, &values);
    Ok((FeatureMatrix::new(data, ids, tag)?, dtype))
}

/// Writes `features` as `f64`. The file is written to a temporary sibling and renamed.
pub fn write_features(features: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_features_as(features, path, Dtype::F64)
}

pub fn write_features_as(features: &FeatureMatrix, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_features(features, dtype)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    Ok(decode_features(&fs::read(path)?)?.0)
}
