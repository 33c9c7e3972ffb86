//! Binary container for offline artifacts.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `EYEHEAT\0` |
//! | 4     | format version (`u32`, currently 1) |
//! | 8     | header length `H` (`u64`) |
//! | H     | UTF-8 JSON header `{kind, meta, sections: [{name, dtype, len, offset}]}` |
//! | ...   | payload; each section is `len` values of `dtype` (`f64` or `u64`) starting `offset` bytes after the header |

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"EYEHEAT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    U64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SectionInfo {
    name: String,
    dtype: Dtype,
    len: u64,
    offset: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: Value,
    sections: Vec<SectionInfo>,
}

#[derive(Debug, Clone, PartialEq)]
enum Data {
    F64(Vec<f64>),
    U64(Vec<u64>),
}

/// In-memory container: a kind tag, JSON metadata and named arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub meta: Value,
    sections: BTreeMap<String, Data>,
    order: Vec<String>,
}

impl Container {
    pub fn new(kind: &str, meta: Value) -> Self {
        Self {
            kind: kind.to_string(),
            meta,
            sections: BTreeMap::new(),
            order: Vec::new(),
        }
    }

    fn insert(&mut self, name: &str, d: Data) {
        if self.sections.insert(name.to_string(), d).is_none() {
            self.order.push(name.to_string());
        }
    }

    pub fn put_f64(&mut self, name: &str, v: &[f64]) {
        self.insert(name, Data::F64(v.to_vec()));
    }

    pub fn put_u64(&mut self, name: &str, v: &[u64]) {
        self.insert(name, Data::U64(v.to_vec()));
    }

    pub fn put_usize(&mut self, name: &str, v: &[usize]) {
        self.insert(name, Data::U64(v.iter().map(|&x| x as u64).collect()));
    }

    pub fn f64s(&self, name: &str) -> Result<&[f64]> {
        match self.sections.get(name) {
            Some(Data::F64(v)) => Ok(v),
            Some(_) => Err(Error::Container(format!("section `{name}` is not f64"))),
            None => Err(Error::Container(format!("missing section `{name}`"))),
        }
    }

    pub fn u64s(&self, name: &str) -> Result<&[u64]> {
        match self.sections.get(name) {
            Some(Data::U64(v)) => Ok(v),
            Some(_) => Err(Error::Container(format!("section `{name}` is not u64"))),
            None => Err(Error::Container(format!("missing section `{name}`"))),
        }
    }

    pub fn usizes(&self, name: &str) -> Result<Vec<usize>> {
        Ok(self.u64s(name)?.iter().map(|&x| x as usize).collect())
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Container(format!(
                "expected a `{kind}` container, found `{}`",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut sections = Vec::new();
        let mut offset = 0u64;
        for name in &self.order {
            let (dtype, len) = match &self.sections[name] {
                Data::F64(v) => (Dtype::F64, v.len()),
                Data::U64(v) => (Dtype::U64, v.len()),
            };
            sections.push(SectionInfo {
                name: name.clone(),
                dtype,
                len: len as u64,
                offset,
            });
            offset += 8 * len as u64;
        }
        let header = serde_json::to_vec(&Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            sections,
        })?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(offset as usize);
        for name in &self.order {
            match &self.sections[name] {
                Data::F64(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
                Data::U64(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Container("bad magic, not an eyeheat container".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(Error::Container(format!("unsupported container version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let hlen = u64::from_le_bytes(b8) as usize;
        let mut hbuf = vec![0u8; hlen];
        r.read_exact(&mut hbuf)?;
        let header: Header = serde_json::from_slice(&hbuf)?;
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        let mut c = Container::new(&header.kind, header.meta);
        for s in header.sections {
            let start = s.offset as usize;
            let end = start + 8 * s.len as usize;
            let bytes = payload
                .get(start..end)
                .ok_or_else(|| Error::Container(format!("section `{}` is truncated", s.name)))?;
            let words = bytes.chunks_exact(8).map(|b| b.try_into().unwrap());
            let data = match s.dtype {
                Dtype::F64 => Data::F64(words.map(f64::from_le_bytes).collect()),
                Dtype::U64 => Data::U64(words.map(u64::from_le_bytes).collect()),
            };
            c.insert(&s.name, data);
        }
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut c = Container::new("test", serde_json::json!({"n": 3}));
        c.put_f64("x", &[1.0, -0.1, f64::MIN_POSITIVE]);
        c.put_u64("i", &[0, u64::MAX]);
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        let back = Container::read_from(&buf[..]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.f64s("x").unwrap()[1].to_bits(), (-0.1f64).to_bits());
        assert!(back.f64s("i").is_err());
        assert!(back.expect_kind("other").is_err());
    }

    #[test]
    fn truncation_is_detected() {
        let mut c = Container::new("t", Value::Null);
        c.put_f64("x", &[1.0; 4]);
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(Container::read_from(&buf[..]).is_err());
        assert!(Container::read_from(&b"NOTEYE\0\0"[..]).is_err());
    }
}
