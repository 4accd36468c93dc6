//! `.psell` container: a fixed little-endian layout for [`PackSellMatrix`].
//!
//! ```text
//! magic      8 bytes  "PSELL\0v1"
//! W, D, codec_id, mode      u8 each
//! C, sigma                  u32 each
//! n_rows, n_cols, k_left, nnz_real, n_dummy, n_padding, n_slices   u64 each
//! offset     (n_slices + 1) × u64
//! perm       n_rows × (u8 if sigma <= 256 else u16), implicit mode only
//! pack       offset[n_slices] × (u32 or u64)
//! ```

use crate::codec::{Codec, PackFormat};
use crate::error::{Error, Result};
use crate::packsell::{ElementCounts, PackSellMatrix, Words};
use crate::sell::{Perm, PermMode};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 8] = *b"PSELL\0v1";
pub const HEADER_BYTES: usize = 8 + 4 + 8 + 7 * 8;

pub fn write<W: Write>(m: &PackSellMatrix, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let fmt = m.format();
    let counts = m.counts();
    w.write_all(&MAGIC)?;
    w.write_all(&[
        fmt.word_bits() as u8,
        fmt.delta_bits() as u8,
        fmt.codec().id(),
        m.mode().id(),
    ])?;
    w.write_all(&(m.slice_size() as u32).to_le_bytes())?;
    w.write_all(&(m.sigma() as u32).to_le_bytes())?;
    for v in [
        m.n_rows(),
        m.n_cols(),
        m.k_left(),
        counts.nnz_real,
        counts.n_dummy,
        counts.n_padding,
        m.n_slices(),
    ] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for &o in m.offset() {
        w.write_all(&(o as u64).to_le_bytes())?;
    }
    match m.perm() {
        Some(Perm::U8(p)) => w.write_all(p)?,
        Some(Perm::U16(p)) => {
            for v in p {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        None => {}
    }
    match m.words() {
        Words::W32(words) => {
            for v in words {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Words::W64(words) => {
            for v in words {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_path(m: &PackSellMatrix, path: impl AsRef<Path>) -> Result<()> {
    write(m, File::create(path)?)
}

pub fn to_bytes(m: &PackSellMatrix) -> Vec<u8> {
    let mut buf = Vec::new();
    write(m, &mut buf).expect("writing to memory cannot fail");
    buf
}

struct Input<R> {
    inner: R,
}

impl<R: Read> Input<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Container(format!("truncated while reading {what}"))
            } else {
                Error::Io(e)
            }
        })?;
        Ok(b)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?)
            .map_err(|_| Error::Container(format!("{what} does not fit in memory")))
    }
}

/// Reads and validates a container.
pub fn read<R: Read>(src: R) -> Result<PackSellMatrix> {
    let mut r = Input {
        inner: BufReader::new(src),
    };
    if r.bytes::<8>("magic")? != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let w = r.u8("W")? as u32;
    let d = r.u8("D")? as u32;
    let codec = Codec::from_id(r.u8("codec")?)
        .ok_or_else(|| Error::Container("unknown codec id".into()))?;
    let mode = PermMode::from_id(r.u8("mode")?)
        .ok_or_else(|| Error::Container("unknown mode id".into()))?;
    let fmt = PackFormat::new(w, d, codec).map_err(|e| Error::Container(e.to_string()))?;
    let c = r.u32("C")? as usize;
    let sigma = r.u32("sigma")? as usize;
    let n_rows = r.usize("n_rows")?;
    let n_cols = r.usize("n_cols")?;
    let k_left = r.usize("k_left")?;
    let counts = ElementCounts {
        nnz_real: r.usize("nnz_real")?,
        n_dummy: r.usize("n_dummy")?,
        n_padding: r.usize("n_padding")?,
    };
    let n_slices = r.usize("n_slices")?;
    if c == 0 || n_slices != n_rows.div_ceil(c) {
        return Err(Error::Container("slice count disagrees with n_rows and C".into()));
    }
    let mut offset = Vec::with_capacity(n_slices + 1);
    for _ in 0..=n_slices {
        offset.push(r.usize("offset")?);
    }
    let total = *offset.last().unwrap();
    let declared = counts
        .nnz_real
        .checked_add(counts.n_dummy)
        .and_then(|s| s.checked_add(counts.n_padding));
    if declared != Some(total) {
        return Err(Error::Container("header counts disagree with offset array".into()));
    }
    let perm = if mode == PermMode::Implicit {
        Some(if sigma <= 256 {
            let mut p = vec![0u8; n_rows];
            r.inner.read_exact(&mut p).map_err(|_| Error::Container("truncated perm".into()))?;
            Perm::U8(p)
        } else {
            Perm::U16((0..n_rows).map(|_| r.u16("perm")).collect::<Result<_>>()?)
        })
    } else {
        None
    };
    let pack = if w == 32 {
        Words::W32((0..total).map(|_| r.u32("pack")).collect::<Result<_>>()?)
    } else {
        Words::W64((0..total).map(|_| r.u64("pack")).collect::<Result<_>>()?)
    };
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest)? != 0 {
        return Err(Error::Container("trailing bytes after pack array".into()));
    }
    PackSellMatrix::from_parts(
        n_rows, n_cols, c, sigma, mode, fmt, pack, offset, perm, k_left, counts,
    )
    .map_err(|e| Error::Container(e.to_string()))
}

pub fn read_path(path: impl AsRef<Path>) -> Result<PackSellMatrix> {
    read(File::open(path)?)
}
