//! SVMlight / LIBSVM text format: one row per line, `label idx:value ...`,
//! 1-based feature indices, `#` starts a comment. `qid:` tokens are ignored.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use spcdm_core::ProblemData;

use crate::error::{Error, Result};

/// Parses a dataset. `n_cols` widens the matrix beyond the largest index seen.
pub fn read<R: Read>(reader: R, n_cols: Option<usize>) -> Result<ProblemData> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut width = 0usize;
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        let label: f64 = label
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(lineno, format!("bad label {label:?}")))?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, format!("expected index:value, got {tok:?}")))?;
            if idx == "qid" {
                continue;
            }
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(Error::parse(lineno, "feature index 0 (indices are 1-based)".into()));
            }
            if idx <= last {
                return Err(Error::parse(lineno, format!("feature index {idx} not increasing")));
            }
            last = idx;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(lineno, format!("bad value {val:?}")))?;
            width = width.max(idx);
            if val != 0.0 {
                row.push((idx - 1, val));
            }
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::Usage("dataset has no rows".into()));
    }
    let n = match n_cols {
        Some(n) if n < width => {
            return Err(Error::Usage(format!(
                "--n-cols {n} is smaller than the largest feature index {width}"
            )))
        }
        Some(n) => n,
        None => width,
    };
    Ok(ProblemData::from_rows(n, &rows, labels)?)
}

pub fn load(path: &Path, n_cols: Option<usize>) -> Result<ProblemData> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Usage(format!("cannot open {}: {e}", path.display())))?;
    read(file, n_cols)
}

/// Writes every row; values use the shortest representation that parses back
/// to the same `f64`.
pub fn write<W: Write>(pd: &ProblemData, mut out: W) -> Result<()> {
    let mut line = String::new();
    for j in 0..pd.m() {
        line.clear();
        write!(line, "{}", pd.b()[j]).unwrap();
        for (i, v) in pd.row(j).iter() {
            write!(line, " {}:{}", i + 1, v).unwrap();
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save(pd: &ProblemData, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write(pd, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows_and_comments() {
        let text = "# header\n1 1:0.5 3:-2\n\n-1 qid:4 2:1e-3 # trailing\n0\n";
        let pd = read(text.as_bytes(), None).unwrap();
        assert_eq!((pd.m(), pd.n()), (3, 3));
        assert_eq!(pd.b(), &[1.0, -1.0, 0.0]);
        assert_eq!(pd.row(0).iter().collect::<Vec<_>>(), vec![(0, 0.5), (2, -2.0)]);
        assert_eq!(pd.row(2).nnz(), 0);
    }

    #[test]
    fn drops_explicit_zeros_and_widens() {
        let pd = read("1 1:0 2:3\n".as_bytes(), Some(10)).unwrap();
        assert_eq!(pd.n(), 10);
        assert_eq!(pd.nnz(), 1);
        assert!(read("1 5:1\n".as_bytes(), Some(3)).is_err());
    }

    #[test]
    fn reports_line_numbers() {
        let err = read("1 1:2\n1 2:x\n".as_bytes(), None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = read("1 0:2\n".as_bytes(), None).unwrap_err();
        assert!(err.to_string().contains("1-based"), "{err}");
        let err = read("1 3:2 2:1\n".as_bytes(), None).unwrap_err();
        assert!(err.to_string().contains("increasing"), "{err}");
    }

    #[test]
    fn empty_input_is_rejected() {
        let err = read("# nothing\n\n".as_bytes(), None).unwrap_err();
        assert!(err.to_string().contains("no rows"));
    }

    #[test]
    fn round_trip() {
        let pd = ProblemData::synthetic(40, 30, 4, 8).unwrap();
        let mut buf = Vec::new();
        write(&pd, &mut buf).unwrap();
        let back = read(buf.as_slice(), Some(30)).unwrap();
        assert_eq!(back.triplets(), pd.triplets());
        assert_eq!(back.b(), pd.b());
    }
}
