//! Text serialization of parity-check matrices.
//!
//! Native format, version 1:
//!
//! ```text
//! teq-ldpc 1
//! n <n> k <k> seed <seed>
//! var <d>:<fraction> ...      (or "var -" when unknown)
//! chk <d>:<fraction> ...
//! <row 0 column indices>
//! ...
//! ```
//!
//! The alist export follows MacKay's layout with 1-based indices and zero
//! padding.

use super::{DegreeDistribution, SparseParityCheck};
use crate::error::{Error, Result};
use std::fmt::Write as _;

const MAGIC: &str = "teq-ldpc";
const VERSION: u32 = 1;

fn fmt_degrees(list: &[(usize, f64)]) -> String {
    list.iter()
        .map(|(d, f)| format!("{d}:{f:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_degrees(s: &str) -> Result<Vec<(usize, f64)>> {
    s.split_whitespace()
        .map(|tok| {
            let (d, f) = tok
                .split_once(':')
                .ok_or_else(|| Error::Format(format!("bad degree entry {tok:?}")))?;
            let d = d.parse().map_err(|_| Error::Format(format!("bad degree {d:?}")))?;
            let f = f.parse().map_err(|_| Error::Format(format!("bad fraction {f:?}")))?;
            Ok((d, f))
        })
        .collect()
}

pub fn write_code(code: &SparseParityCheck) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC} {VERSION}").unwrap();
    writeln!(s, "n {} k {} seed {}", code.n(), code.k(), code.seed).unwrap();
    match &code.dist {
        Some(d) => {
            writeln!(s, "var {}", fmt_degrees(&d.var_degrees)).unwrap();
            writeln!(s, "chk {}", fmt_degrees(&d.chk_degrees)).unwrap();
        }
        None => s.push_str("var -\nchk -\n"),
    }
    for row in code.rows() {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_code(text: &str) -> Result<SparseParityCheck> {
    let mut lines = text.lines();
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing {what} line")))
    };
    let head = next("header")?;
    let mut parts = head.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(Error::Format("not an LDPC code file".into()));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format("missing version".into()))?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dims: Vec<&str> = next("dimension")?.split_whitespace().collect();
    if dims.len() != 6 || dims[0] != "n" || dims[2] != "k" || dims[4] != "seed" {
        return Err(Error::Format("bad dimension line".into()));
    }
    let num = |s: &str| -> Result<u64> {
        s.parse().map_err(|_| Error::Format(format!("bad number {s:?}")))
    };
    let n = num(dims[1])? as usize;
    let k = num(dims[3])? as usize;
    let seed = num(dims[5])?;
    let var = next("var")?;
    let chk = next("chk")?;
    let var = var
        .strip_prefix("var")
        .ok_or_else(|| Error::Format("expected var line".into()))?
        .trim();
    let chk = chk
        .strip_prefix("chk")
        .ok_or_else(|| Error::Format("expected chk line".into()))?
        .trim();
    let dist = if var == "-" {
        None
    } else {
        Some(DegreeDistribution::new(parse_degrees(var)?, parse_degrees(chk)?)?)
    };
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<u32>> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Format(format!("bad column {t:?}"))))
            .collect();
        rows.push(row?);
    }
    let mut code = SparseParityCheck::from_rows(n, k, rows, seed)?;
    code.dist = dist;
    Ok(code)
}

pub fn write_alist(code: &SparseParityCheck) -> String {
    let mut s = String::new();
    let cols = code.cols();
    let rows = code.rows();
    let max_c = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_r = rows.iter().map(Vec::len).max().unwrap_or(0);
    writeln!(s, "{} {}", code.n(), code.m()).unwrap();
    writeln!(s, "{max_c} {max_r}").unwrap();
    let join = |v: Vec<String>| v.join(" ");
    writeln!(s, "{}", join(cols.iter().map(|c| c.len().to_string()).collect())).unwrap();
    writeln!(s, "{}", join(rows.iter().map(|r| r.len().to_string()).collect())).unwrap();
    for (list, width) in [(cols, max_c), (rows, max_r)] {
        for entry in list {
            let mut v: Vec<String> = entry.iter().map(|x| (x + 1).to_string()).collect();
            v.resize(width, "0".into());
            writeln!(s, "{}", join(v)).unwrap();
        }
    }
    s
}

/// Reads an alist file. The column order is taken as given, so `k = n − m`
/// assumes a full-rank matrix with parity bits last.
pub fn read_alist(text: &str) -> Result<SparseParityCheck> {
    let mut tokens = text.split_whitespace().map(|t| {
        t.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad alist token {t:?}")))
    });
    let mut take = || tokens.next().unwrap_or_else(|| Err(Error::Format("truncated alist".into())));
    let n = take()?;
    let m = take()?;
    if m == 0 || m >= n {
        return Err(Error::Format(format!("alist dimensions {n} x {m}")));
    }
    let max_c = take()?;
    let max_r = take()?;
    let mut col_deg = Vec::with_capacity(n);
    for _ in 0..n {
        col_deg.push(take()?);
    }
    let mut row_deg = Vec::with_capacity(m);
    for _ in 0..m {
        row_deg.push(take()?);
    }
    for _ in 0..n * max_c {
        take()?;
    }
    let mut rows = Vec::with_capacity(m);
    for &d in &row_deg {
        let mut row = Vec::with_capacity(d);
        for j in 0..max_r {
            let x = take()?;
            if j < d {
                if x == 0 {
                    return Err(Error::Format("zero index inside row list".into()));
                }
                row.push((x - 1) as u32);
            }
        }
        rows.push(row);
    }
    let code = SparseParityCheck::from_rows(n, n - m, rows, 0)?;
    if code.cols().iter().map(Vec::len).ne(col_deg.iter().copied()) {
        return Err(Error::Format("column degrees disagree with row lists".into()));
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::construct_code;

    fn sample() -> SparseParityCheck {
        let dist = DegreeDistribution::new(vec![(2, 0.5), (3, 0.5)], vec![(5, 1.0)]).unwrap();
        construct_code(&dist, 100, 11).unwrap()
    }

    #[test]
    fn native_round_trip() {
        let code = sample();
        let back = read_code(&write_code(&code)).unwrap();
        assert_eq!(code, back);
    }

    #[test]
    fn alist_round_trip() {
        let code = sample();
        let back = read_alist(&write_alist(&code)).unwrap();
        assert_eq!(code.rows(), back.rows());
        assert_eq!(code.k(), back.k());
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_code("hello").is_err());
        assert!(read_code("teq-ldpc 2\n").is_err());
        assert!(read_alist("7 3 4").is_err());
        let mut text = write_code(&sample());
        text.push_str("100000\n");
        assert!(read_code(&text).is_err());
    }
}
