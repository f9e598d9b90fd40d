//! `HMAT v1` text format: a header line `HMAT <N>` followed by
//! `<i> <j> <re> <im>` entries (0-based, upper triangle, `j >= i`).
//! Missing entries are zero; the lower triangle is implied by conjugation.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_hmat(text: &str) -> Result<HermitianMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing HMAT header"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("HMAT") {
        return Err(parse_err(hline, "expected `HMAT <N>`"));
    }
    let n: usize = fields
        .next()
        .and_then(|s| s.parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| parse_err(hline, "dimension must be a positive integer"))?;
    if fields.next().is_some() {
        return Err(parse_err(hline, "trailing fields after dimension"));
    }

    let mut upper = vec![Complex64::new(0.0, 0.0); n * n];
    let mut seen = vec![false; n * n];
    for (lineno, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(lineno, format!("expected 4 fields, found {}", f.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| parse_err(lineno, format!("bad index `{s}`")));
        let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(lineno, format!("bad number `{s}`")));
        let (i, j, re, im) = (idx(f[0])?, idx(f[1])?, num(f[2])?, num(f[3])?);
        if i >= n || j >= n {
            return Err(parse_err(lineno, format!("index ({i}, {j}) out of range for N = {n}")));
        }
        if j < i {
            return Err(parse_err(lineno, format!("entry ({i}, {j}) is below the diagonal")));
        }
        if i == j && im != 0.0 {
            return Err(parse_err(lineno, "diagonal entries must be real"));
        }
        if !re.is_finite() || !im.is_finite() {
            return Err(parse_err(lineno, "non-finite value"));
        }
        if std::mem::replace(&mut seen[i * n + j], true) {
            return Err(parse_err(lineno, format!("duplicate entry ({i}, {j})")));
        }
        upper[i * n + j] = Complex64::new(re, im);
    }
    HermitianMatrix::from_upper(n, |i, j| upper[i * n + j])
}

/// Writes every nonzero upper-triangle entry with round-trip float formatting.
pub fn format_hmat(h: &HermitianMatrix) -> String {
    let n = h.dim();
    let mut out = format!("HMAT {n}\n");
    for i in 0..n {
        for j in i..n {
            let z = h.get(i, j);
            if z.re != 0.0 || z.im != 0.0 {
                let _ = writeln!(out, "{i} {j} {:?} {:?}", z.re, z.im);
            }
        }
    }
    out
}

pub fn read_hmat(path: impl AsRef<Path>) -> Result<HermitianMatrix> {
    parse_hmat(&std::fs::read_to_string(path)?)
}

pub fn write_hmat(path: impl AsRef<Path>, h: &HermitianMatrix) -> Result<()> {
    std::fs::write(path, format_hmat(h))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::random_hermitian_with_norm;
    use crate::rng::Stream;

    #[test]
    fn parses_diagonal_fixture() {
        let h = parse_hmat("HMAT 3\n0 0 0.4 0\n1 1 0.1 0\n2 2 -0.3 0\n").unwrap();
        assert_eq!(h, HermitianMatrix::diag(&[0.4, 0.1, -0.3]).unwrap());
    }

    #[test]
    fn lower_triangle_is_conjugate() {
        let h = parse_hmat("HMAT 2\n0 1 0.1 0.2\n").unwrap();
        assert_eq!(h.get(1, 0), Complex64::new(0.1, -0.2));
        assert_eq!(h.get(0, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn round_trip_is_exact() {
        let h = random_hermitian_with_norm(6, 0.5, Stream::new(3));
        assert_eq!(parse_hmat(&format_hmat(&h)).unwrap(), h);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "HMAT 0", "MAT 2", "HMAT 2\n1 0 1 0", "HMAT 2\n0 2 1 0", "HMAT 2\n0 0 1 1", "HMAT 2\n0 1 x 0", "HMAT 2\n0 1 1", "HMAT 2\n0 1 1 0\n0 1 2 0"] {
            assert!(parse_hmat(bad).is_err(), "{bad:?}");
        }
        match parse_hmat("HMAT 2\n0 0 1 0\n0 1 nan 0") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
