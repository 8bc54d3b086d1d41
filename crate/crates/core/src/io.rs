//! Text formats for matrices, 3D arrays and sampling masks.
//!
//! ```text
//! #complex d n            #complex3 n s d          #mask d n p seed
//! a+bi,a-bi,...           #slice 1                 1,1
//! ...                     a+bi,...                 2,5
//!                         #slice 2 ...             ...
//! ```
//!
//! Entries carry 17 significant digits so `f64` values round-trip exactly.
//! Mask indices are 1-based; a mask over an `n × s × d` array has three
//! dimensions in its header and three indices per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::fourier::Array3;
use crate::sampling::SamplingMask;
use crate::scalar::{CMatrix, Real};

/// `a+bi` or `a-bi` with 17 significant digits in each part.
pub fn format_complex(z: Complex<f64>) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
}

/// Parses `a+bi`, `a-bi`, `bi` or a bare real `a`.
pub fn parse_complex(s: &str) -> Option<Complex<f64>> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| Complex::new(re, 0.0));
    };
    // the split is the last sign that is neither leading nor an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re = body[..i].parse().ok()?;
            let im = body[i..].parse().ok()?;
            Some(Complex::new(re, im))
        }
        None => body.parse().ok().map(|im| Complex::new(0.0, im)),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with their 1-based numbers.
fn content_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            out.push((i + 1, t.to_string()));
        }
    }
    Ok(out)
}

fn header_fields<'a>(lines: &'a [(usize, String)], tag: &str) -> Result<(usize, Vec<&'a str>)> {
    let (no, first) = lines.first().ok_or_else(|| parse_err(1, format!("empty input, expected `{tag}` header")))?;
    let mut fields = first.split_whitespace();
    if fields.next() != Some(tag) {
        return Err(parse_err(*no, format!("expected `{tag}` header, found `{first}`")));
    }
    Ok((*no, fields.collect()))
}

fn parse_field<F: std::str::FromStr>(line: usize, name: &str, raw: Option<&&str>) -> Result<F> {
    let raw = raw.ok_or_else(|| parse_err(line, format!("header is missing field `{name}`")))?;
    raw.parse()
        .map_err(|_| parse_err(line, format!("field `{name}`: cannot parse `{raw}`")))
}

fn parse_row<T: Real>(line: usize, text: &str, width: usize) -> Result<Vec<Complex<T>>> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != width {
        return Err(parse_err(line, format!("expected {width} entries, found {}", fields.len())));
    }
    fields
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let z = parse_complex(f)
                .ok_or_else(|| parse_err(line, format!("field {}: cannot parse complex number `{}`", k + 1, f.trim())))?;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(parse_err(line, format!("field {}: non-finite entry", k + 1)));
            }
            Ok(Complex::new(T::lit(z.re), T::lit(z.im)))
        })
        .collect()
}

fn write_rows<T: Real, W: Write>(out: &mut W, m: &CMatrix<T>) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = m
            .row(i)
            .iter()
            .map(|z| format_complex(Complex::new(z.re.as_f64(), z.im.as_f64())))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_matrix<T: Real, W: Write>(mut out: W, m: &CMatrix<T>) -> Result<()> {
    writeln!(out, "#complex {} {}", m.nrows(), m.ncols())?;
    write_rows(&mut out, m)?;
    out.flush()?;
    Ok(())
}

pub fn read_matrix<T: Real, R: BufRead>(reader: R) -> Result<CMatrix<T>> {
    let lines = content_lines(reader)?;
    let (no, fields) = header_fields(&lines, "#complex")?;
    let d: usize = parse_field(no, "d", fields.first())?;
    let n: usize = parse_field(no, "n", fields.get(1))?;
    let body = &lines[1..];
    if body.len() != d {
        let at = body.get(d).map_or(lines.last().map_or(1, |l| l.0), |l| l.0);
        return Err(parse_err(at, format!("expected {d} rows, found {}", body.len())));
    }
    let mut m = CMatrix::zeros(d, n);
    for (i, (line, text)) in body.iter().enumerate() {
        for (k, z) in parse_row::<T>(*line, text, n)?.into_iter().enumerate() {
            m[(i, k)] = z;
        }
    }
    Ok(m)
}

pub fn write_array3<T: Real, W: Write>(mut out: W, x: &Array3<T>) -> Result<()> {
    let (n, s, d) = x.dims();
    writeln!(out, "#complex3 {n} {s} {d}")?;
    for (l, slice) in x.slices().iter().enumerate() {
        writeln!(out, "#slice {}", l + 1)?;
        write_rows(&mut out, slice)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_array3<T: Real, R: BufRead>(reader: R) -> Result<Array3<T>> {
    let lines = content_lines(reader)?;
    let (no, fields) = header_fields(&lines, "#complex3")?;
    let n: usize = parse_field(no, "n", fields.first())?;
    let s: usize = parse_field(no, "s", fields.get(1))?;
    let d: usize = parse_field(no, "d", fields.get(2))?;
    let mut slices: Vec<CMatrix<T>> = Vec::with_capacity(d);
    let mut rows: Vec<Vec<Complex<T>>> = Vec::new();
    let flush = |rows: &mut Vec<Vec<Complex<T>>>, line: usize, slices: &mut Vec<CMatrix<T>>| -> Result<()> {
        if rows.len() != n {
            return Err(parse_err(line, format!("slice {} has {} rows, expected {n}", slices.len() + 1, rows.len())));
        }
        slices.push(CMatrix::from_fn(n, s, |j, k| rows[j][k]));
        rows.clear();
        Ok(())
    };
    let mut in_slice = false;
    for (line, text) in &lines[1..] {
        if text.starts_with('#') {
            if in_slice {
                flush(&mut rows, *line, &mut slices)?;
            }
            in_slice = true;
            continue;
        }
        if !in_slice {
            return Err(parse_err(*line, "data before the first `#slice` marker"));
        }
        if rows.len() == n {
            return Err(parse_err(*line, format!("slice {} has more than {n} rows", slices.len() + 1)));
        }
        rows.push(parse_row(*line, text, s)?);
    }
    let last = lines.last().map_or(1, |l| l.0);
    if in_slice {
        flush(&mut rows, last, &mut slices)?;
    }
    if slices.len() != d {
        return Err(parse_err(last, format!("expected {d} slices, found {}", slices.len())));
    }
    if d == 0 {
        return Ok(Array3::zeros(n, s, 0));
    }
    Array3::from_slices(slices)
}

pub fn write_mask<W: Write>(mut out: W, mask: &SamplingMask) -> Result<()> {
    let dims: Vec<String> = mask.dims().iter().map(usize::to_string).collect();
    writeln!(out, "#mask {} {} {}", dims.join(" "), mask.p(), mask.seed())?;
    for idx in mask.indices() {
        let one_based: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
        writeln!(out, "{}", one_based.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_mask<R: BufRead>(reader: R) -> Result<SamplingMask> {
    let lines = content_lines(reader)?;
    let (no, fields) = header_fields(&lines, "#mask")?;
    if fields.len() < 4 {
        return Err(parse_err(no, "mask header needs at least two dimensions, p and seed"));
    }
    let rank = fields.len() - 2;
    let dims = (0..rank)
        .map(|a| parse_field::<usize>(no, &format!("dim {}", a + 1), fields.get(a)))
        .collect::<Result<Vec<_>>>()?;
    let p: f64 = parse_field(no, "p", fields.get(rank))?;
    let seed: u64 = parse_field(no, "seed", fields.get(rank + 1))?;
    let mut indices = Vec::with_capacity(lines.len() - 1);
    for (line, text) in &lines[1..] {
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != rank {
            return Err(parse_err(*line, format!("expected {rank} indices, found {}", parts.len())));
        }
        let mut idx = Vec::with_capacity(rank);
        for (a, part) in parts.iter().enumerate() {
            let v: usize = part
                .trim()
                .parse()
                .map_err(|_| parse_err(*line, format!("field {}: cannot parse index `{}`", a + 1, part.trim())))?;
            if v == 0 || v > dims[a] {
                return Err(parse_err(*line, format!("field {}: index {v} outside 1..={}", a + 1, dims[a])));
            }
            idx.push(v - 1);
        }
        indices.push(idx);
    }
    SamplingMask::from_indices(&dims, &indices, p, seed).map_err(|e| parse_err(no, e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_matrix<T: Real>(path: impl AsRef<Path>, m: &CMatrix<T>) -> Result<()> {
    write_matrix(create(path.as_ref())?, m)
}

pub fn load_matrix<T: Real>(path: impl AsRef<Path>) -> Result<CMatrix<T>> {
    read_matrix(open(path.as_ref())?)
}

pub fn save_array3<T: Real>(path: impl AsRef<Path>, x: &Array3<T>) -> Result<()> {
    write_array3(create(path.as_ref())?, x)
}

pub fn load_array3<T: Real>(path: impl AsRef<Path>) -> Result<Array3<T>> {
    read_array3(open(path.as_ref())?)
}

pub fn save_mask(path: impl AsRef<Path>, mask: &SamplingMask) -> Result<()> {
    write_mask(create(path.as_ref())?, mask)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<SamplingMask> {
    read_mask(open(path.as_ref())?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn save_json<S: serde::Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let mut out = create(path.as_ref())?;
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
