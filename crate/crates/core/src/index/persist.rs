//! On-disk index directory.
//!
//! ```text
//! <dir>/meta.json   format version, mode, N, mean length, tokenizer, sha256 of index.bin
//! <dir>/index.bin   "DRIX" u32:version | doc table | sorted unit dictionary with postings
//! ```
//!
//! All integers are little-endian u32; strings are u32 byte length + UTF-8.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DocEntry, Index, Segment, UnitPosting};
use crate::corpus::{Mode, TokenizerConfig};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"DRIX";
const META_FILE: &str = "meta.json";
const DATA_FILE: &str = "index.bin";

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    mode: Mode,
    n_docs: u32,
    avg_len: f64,
    total_len: u64,
    tokenizer: TokenizerConfig,
    checksum: String,
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> io::Result<String> {
    let n = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn write_u32s<W: Write>(w: &mut W, v: &[u32]) -> io::Result<()> {
    w.write_u32::<LittleEndian>(v.len() as u32)?;
    v.iter().try_for_each(|x| w.write_u32::<LittleEndian>(*x))
}

fn read_u32s<R: Read>(r: &mut R) -> io::Result<Vec<u32>> {
    let n = r.read_u32::<LittleEndian>()? as usize;
    (0..n).map(|_| r.read_u32::<LittleEndian>()).collect()
}

fn encode(index: &Index) -> io::Result<Vec<u8>> {
    let mut w = Vec::new();
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(index.docs.len() as u32)?;
    for d in &index.docs {
        write_str(&mut w, &d.doc_id)?;
        match &d.category {
            Some(c) => {
                w.write_u8(1)?;
                write_str(&mut w, c)?;
            }
            None => w.write_u8(0)?,
        }
        for seg in [&d.title, &d.body] {
            w.write_u32::<LittleEndian>(seg.runs.len() as u32)?;
            seg.runs.iter().try_for_each(|r| write_str(&mut w, r))?;
        }
    }
    let mut keys: Vec<&String> = index.units.keys().collect();
    keys.sort();
    w.write_u32::<LittleEndian>(keys.len() as u32)?;
    for key in keys {
        write_str(&mut w, key)?;
        let list = &index.units[key];
        w.write_u32::<LittleEndian>(list.len() as u32)?;
        for p in list {
            w.write_u32::<LittleEndian>(p.doc)?;
            write_u32s(&mut w, &p.title)?;
            write_u32s(&mut w, &p.body)?;
        }
    }
    Ok(w)
}

fn decode(bytes: &[u8], mode: Mode) -> io::Result<(Vec<DocEntry>, HashMap<String, Vec<UnitPosting>>)> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported format version {version}"),
        ));
    }
    let n_docs = r.read_u32::<LittleEndian>()?;
    let mut docs = Vec::with_capacity(n_docs as usize);
    for _ in 0..n_docs {
        let doc_id = read_str(&mut r)?;
        let category = match r.read_u8()? {
            0 => None,
            _ => Some(read_str(&mut r)?),
        };
        let mut segs = Vec::with_capacity(2);
        for _ in 0..2 {
            let n = r.read_u32::<LittleEndian>()?;
            let runs = (0..n).map(|_| read_str(&mut r)).collect::<io::Result<Vec<_>>>()?;
            segs.push(Segment::from_stored(runs, mode));
        }
        let body = segs.pop().unwrap();
        let title = segs.pop().unwrap();
        docs.push(DocEntry {
            doc_id,
            category,
            title,
            body,
        });
    }
    let n_units = r.read_u32::<LittleEndian>()?;
    let mut units = HashMap::with_capacity(n_units as usize);
    for _ in 0..n_units {
        let key = read_str(&mut r)?;
        let n = r.read_u32::<LittleEndian>()?;
        let mut list = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let doc = r.read_u32::<LittleEndian>()?;
            if doc >= n_docs {
                return Err(io::Error::new(io::ErrorKind::InvalidData, "posting references unknown document"));
            }
            let title = read_u32s(&mut r)?;
            let body = read_u32s(&mut r)?;
            list.push(UnitPosting { doc, title, body });
        }
        units.insert(key, list);
    }
    if (r.position() as usize) != bytes.len() {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "trailing bytes"));
    }
    Ok((docs, units))
}

fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Index {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let data = encode(self).map_err(|e| Error::io(dir, e))?;
        let meta = Meta {
            format_version: FORMAT_VERSION,
            mode: self.mode(),
            n_docs: self.n_docs(),
            avg_len: self.avg_len(),
            total_len: self.total_len(),
            tokenizer: self.config.clone(),
            checksum: checksum(&data),
        };
        let data_path = dir.join(DATA_FILE);
        fs::write(&data_path, &data).map_err(|e| Error::io(&data_path, e))?;
        let meta_path = dir.join(META_FILE);
        let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: Meta = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "version mismatch: file has {}, reader supports {FORMAT_VERSION}",
                meta.format_version
            )));
        }
        let data_path = dir.join(DATA_FILE);
        let data = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
        let found = checksum(&data);
        if found != meta.checksum {
            return Err(Error::Checksum {
                expected: meta.checksum,
                found,
            });
        }
        let (docs, units) = decode(&data, meta.mode).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Format("truncated index data".into()),
            _ => Error::Format(e.to_string()),
        })?;
        if docs.len() as u32 != meta.n_docs {
            return Err(Error::Format("document count disagrees with metadata".into()));
        }
        if meta.tokenizer.mode != meta.mode {
            return Err(Error::Format("tokenizer mode disagrees with metadata".into()));
        }
        Index::assemble(meta.tokenizer, docs, units)
    }

    /// Loads an index and checks that it was built in `mode`.
    pub fn load_expect(dir: impl AsRef<Path>, mode: Mode) -> Result<Self> {
        let index = Self::load(dir)?;
        if index.mode() != mode {
            return Err(Error::ModeMismatch {
                expected: mode,
                found: index.mode(),
            });
        }
        Ok(index)
    }
}
