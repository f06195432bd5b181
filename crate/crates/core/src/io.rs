//! Text formats for fields and kernels.
//!
//! A field file is
//!
//! ```text
//! dim,n,h
//! <d>,<N>,<h>
//! re,im
//! <N^d rows of re,im in row-major site order>
//! ```
//!
//! Numbers are written with 17 significant digits so a write/read cycle is exact.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::KernelCoefficients;
use crate::lattice::{Field, LatticeSpec};

/// Round-trip formatting used in every artifact.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn write_field_csv(f: &Field) -> String {
    let spec = f.spec();
    let mut out = String::with_capacity(48 * f.len() + 32);
    let _ = writeln!(out, "dim,n,h");
    let _ = writeln!(out, "{},{},{}", spec.dim(), spec.n(), spec.h());
    let _ = writeln!(out, "re,im");
    for z in f.values() {
        let _ = writeln!(out, "{},{}", fmt_f64(z.re), fmt_f64(z.im));
    }
    out
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse {:?}", s.trim())))
}

pub fn read_field_csv(text: &str) -> Result<Field> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))
    };
    let (ln, header) = next("header")?;
    if header.trim() != "dim,n,h" {
        return Err(Error::Parse(format!("line {}: expected 'dim,n,h'", ln + 1)));
    }
    let (ln, dims) = next("lattice line")?;
    let parts: Vec<&str> = dims.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("line {}: expected d,N,h", ln + 1)));
    }
    let spec = LatticeSpec::new(
        parse_num(parts[0], ln + 1)?,
        parse_num(parts[1], ln + 1)?,
        parse_num(parts[2], ln + 1)?,
    )?;
    let (ln, cols) = next("column header")?;
    if cols.trim() != "re,im" {
        return Err(Error::Parse(format!("line {}: expected 're,im'", ln + 1)));
    }
    let mut values = Vec::with_capacity(spec.sites());
    for (ln, row) in lines {
        let (re, im) = row
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected re,im", ln + 1)))?;
        values.push(Complex64::new(parse_num(re, ln + 1)?, parse_num(im, ln + 1)?));
    }
    Field::from_values(spec, values)
}

/// Columns `n_1, …, n_d, re_b, im_b`.
pub fn write_kernel_csv(b: &KernelCoefficients) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=b.dim())
        .map(|j| format!("n_{j}"))
        .chain(["re_b".to_string(), "im_b".to_string()])
        .collect();
    let _ = writeln!(out, "{}", header.join(","));
    for (offset, value) in b.iter() {
        let idx: Vec<String> = offset.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(out, "{},{},{}", idx.join(","), fmt_f64(value.re), fmt_f64(value.im));
    }
    out
}
