//! Matrix Market (`coordinate`, `real`/`integer`, `general`/`symmetric`)
//! reader and a `general` writer.

use crate::error::{Error, Result};
use crate::matrix::{CooMatrix, CsrMatrix};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

/// Header information of a parsed file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub symmetry: Symmetry,
    pub integer: bool,
}

pub fn read_path(path: impl AsRef<Path>) -> Result<(CooMatrix, Header)> {
    read(File::open(path)?)
}

/// Parses a Matrix Market stream into a canonical [`CooMatrix`].
///
/// Symmetric files are expanded to full storage, indices become 0-based and
/// duplicate coordinates are summed.
pub fn read<R: Read>(source: R) -> Result<(CooMatrix, Header)> {
    let mut lines = BufReader::new(source).lines().enumerate();

    let (lineno, banner) = match lines.next() {
        Some((i, l)) => (i + 1, l?),
        None => return Err(Error::parse(1, "empty input")),
    };
    let header = parse_banner(&banner, lineno)?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut coo = CooMatrix::new(0, 0);
    let mut seen = 0usize;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut fields = t.split_whitespace();
        match size {
            None => {
                let nr = parse_field::<usize>(fields.next(), lineno, "row count")?;
                let nc = parse_field::<usize>(fields.next(), lineno, "column count")?;
                let nz = parse_field::<usize>(fields.next(), lineno, "entry count")?;
                if header.symmetry == Symmetry::Symmetric && nr != nc {
                    return Err(Error::parse(lineno, "symmetric matrix must be square"));
                }
                let cap = if header.symmetry == Symmetry::Symmetric { 2 * nz } else { nz };
                coo = CooMatrix::with_capacity(nr, nc, cap);
                size = Some((nr, nc, nz));
            }
            Some((nr, nc, nz)) => {
                if seen == nz {
                    return Err(Error::parse(lineno, format!("more than the declared {nz} entries")));
                }
                let r = parse_field::<usize>(fields.next(), lineno, "row index")?;
                let c = parse_field::<usize>(fields.next(), lineno, "column index")?;
                let v = if header.integer {
                    parse_field::<i64>(fields.next(), lineno, "integer value")? as f64
                } else {
                    parse_field::<f64>(fields.next(), lineno, "value")?
                };
                if r == 0 || c == 0 || r > nr || c > nc {
                    return Err(Error::parse(
                        lineno,
                        format!("index ({r}, {c}) outside declared {nr}x{nc} bounds"),
                    ));
                }
                coo.push(r - 1, c - 1, v)?;
                if header.symmetry == Symmetry::Symmetric && r != c {
                    coo.push(c - 1, r - 1, v)?;
                }
                seen += 1;
            }
        }
    }
    match size {
        None => Err(Error::parse(lineno, "missing size line")),
        Some((_, _, nz)) if seen != nz => Err(Error::parse(
            lineno,
            format!("declared {nz} entries but found {seen}"),
        )),
        Some(_) => {
            coo.canonicalize();
            Ok((coo, header))
        }
    }
}

fn parse_banner(banner: &str, lineno: usize) -> Result<Header> {
    let toks: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(Error::parse(lineno, "malformed %%MatrixMarket banner"));
    }
    if toks[2] != "coordinate" {
        return Err(Error::parse(lineno, format!("unsupported format '{}'", toks[2])));
    }
    let integer = match toks[3].as_str() {
        "real" | "double" => false,
        "integer" => true,
        other => return Err(Error::parse(lineno, format!("unsupported field '{other}'"))),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::parse(lineno, format!("unsupported symmetry '{other}'"))),
    };
    Ok(Header { symmetry, integer })
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, lineno: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(lineno, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(lineno, format!("invalid {what} '{tok}'")))
}

/// Writes every stored entry in `general` form with 1-based indices.
pub fn write<W: Write>(a: &CsrMatrix, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            // `{:?}` prints the shortest string that round-trips the f64.
            writeln!(w, "{} {} {:?}", i + 1, c + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_path(a: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    write(a, File::create(path)?)
}
