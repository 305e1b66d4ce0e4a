//! Sorted count tables on disk.
//!
//! A table named `name` is two files:
//!
//! * `name.tsv` : `key<TAB>count\n` lines sorted by the UTF-8 bytes of `key`;
//! * `name.idx` : one little-endian `u64` per line giving the byte offset of
//!   that line in `name.tsv`.
//!
//! Both are memory-mapped on load and queried by binary search over the
//! index, so tables far larger than memory can be opened instantly.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use memmap2::Mmap;

/// Read-only phrase → count map.
#[derive(Debug)]
pub struct CountTable {
    backend: Backend,
}

#[derive(Debug)]
enum Backend {
    Memory(HashMap<String, u64>),
    Mapped { data: Mmap, index: Mmap, len: usize },
}

impl Default for CountTable {
    fn default() -> Self {
        CountTable::from_map(HashMap::new())
    }
}

impl CountTable {
    pub fn from_map(map: HashMap<String, u64>) -> Self {
        CountTable {
            backend: Backend::Memory(map),
        }
    }

    pub fn len(&self) -> usize {
        match &self.backend {
            Backend::Memory(m) => m.len(),
            Backend::Mapped { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<u64> {
        match &self.backend {
            Backend::Memory(m) => m.get(key).copied(),
            Backend::Mapped { data, index, len } => {
                let (mut lo, mut hi) = (0usize, *len);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    let (k, count) = mapped_entry(data, index, mid)?;
                    match k.cmp(key.as_bytes()) {
                        std::cmp::Ordering::Less => lo = mid + 1,
                        std::cmp::Ordering::Greater => hi = mid,
                        std::cmp::Ordering::Equal => return Some(count),
                    }
                }
                None
            }
        }
    }

    /// All entries in key order.
    pub fn sorted_entries(&self) -> Vec<(String, u64)> {
        match &self.backend {
            Backend::Memory(m) => {
                let mut v: Vec<(String, u64)> = m.iter().map(|(k, &c)| (k.clone(), c)).collect();
                v.sort_unstable_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
                v
            }
            Backend::Mapped { data, index, len } => (0..*len)
                .filter_map(|i| mapped_entry(data, index, i))
                .map(|(k, c)| (String::from_utf8_lossy(k).into_owned(), c))
                .collect(),
        }
    }

    pub fn write(&self, dir: &Path, name: &str) -> io::Result<()> {
        let mut tsv = BufWriter::new(File::create(dir.join(format!("{name}.tsv")))?);
        let mut idx = BufWriter::new(File::create(dir.join(format!("{name}.idx")))?);
        let mut offset = 0u64;
        for (key, count) in self.sorted_entries() {
            if key.contains(['\t', '\n']) {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("key {key:?} contains a tab or newline"),
                ));
            }
            let line = format!("{key}\t{count}\n");
            idx.write_all(&offset.to_le_bytes())?;
            tsv.write_all(line.as_bytes())?;
            offset += line.len() as u64;
        }
        tsv.flush()?;
        idx.flush()
    }

    pub fn open(dir: &Path, name: &str) -> io::Result<Self> {
        let data_file = File::open(dir.join(format!("{name}.tsv")))?;
        let index_file = File::open(dir.join(format!("{name}.idx")))?;
        let index_len = index_file.metadata()?.len();
        if index_len % 8 != 0 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{name}.idx length {index_len} is not a multiple of 8"),
            ));
        }
        if index_len == 0 {
            return Ok(CountTable::default());
        }
        // SAFETY: the files are opened read-only and model directories are
        // never rewritten in place (builds go through a temporary directory).
        let data = unsafe { Mmap::map(&data_file)? };
        let index = unsafe { Mmap::map(&index_file)? };
        let len = (index_len / 8) as usize;
        let table = CountTable {
            backend: Backend::Mapped { data, index, len },
        };
        if let Backend::Mapped { data, index, len } = &table.backend {
            if mapped_entry(data, index, len - 1).is_none() {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{name}.tsv does not match its index"),
                ));
            }
        }
        Ok(table)
    }
}

fn mapped_entry<'a>(data: &'a [u8], index: &[u8], i: usize) -> Option<(&'a [u8], u64)> {
    let raw: [u8; 8] = index.get(i * 8..i * 8 + 8)?.try_into().ok()?;
    let start = u64::from_le_bytes(raw) as usize;
    let rest = data.get(start..)?;
    let end = rest.iter().position(|&b| b == b'\n')?;
    let line = &rest[..end];
    let tab = line.iter().position(|&b| b == b'\t')?;
    let count = std::str::from_utf8(&line[tab + 1..]).ok()?.parse().ok()?;
    Some((&line[..tab], count))
}
