//! Plain-text field files and coefficient CSV export.
//!
//! Torus field file: header `d n_per_dim L`, then one `re im` line per grid
//! point in row-major order. Sphere field file: header `n_phi n_theta l_max`,
//! then θ-row-major `re im` lines. Coefficient CSV: `k1[,k2],re,im` on the
//! torus and `l,m,re,im` on the sphere.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::grid::{CoeffMap, Field, Grid};
use crate::sphere::{SphCoeffMap, SphereField, SphereGrid};
use crate::{Error, GridFunction, Result, C64};

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {line}: {msg}"))
}

fn read_values(lines: impl Iterator<Item = std::io::Result<String>>, expected: usize) -> Result<Vec<C64>> {
    let mut values = Vec::with_capacity(expected);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut parts = t.split_whitespace();
        let mut next = || -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| parse_err(i + 2, "expected `re im`"))?
                .parse::<f64>()
                .map_err(|e| parse_err(i + 2, e))
        };
        let (re, im) = (next()?, next()?);
        if parts.next().is_some() {
            return Err(parse_err(i + 2, "trailing tokens"));
        }
        values.push(C64::new(re, im));
    }
    if values.len() != expected {
        return Err(Error::Format(format!("expected {expected} values, found {}", values.len())));
    }
    Ok(values)
}

fn header_tokens(line: Option<std::io::Result<String>>) -> Result<Vec<String>> {
    let line = line.ok_or_else(|| Error::Format("empty file".into()))??;
    Ok(line.split_whitespace().map(str::to_string).collect())
}

fn write_values(mut w: impl Write, header: &str, values: &[C64]) -> Result<()> {
    writeln!(w, "{header}")?;
    for v in values {
        // `{:e}` keeps full precision and roundtrips exactly.
        writeln!(w, "{:e} {:e}", v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field(f: &Field, w: impl Write) -> Result<()> {
    let g = f.grid();
    write_values(w, &format!("{} {} {:e}", g.dim(), g.n_per_dim(), g.length()), f.values())
}

pub fn read_field(r: impl BufRead) -> Result<Field> {
    let mut lines = r.lines();
    let h = header_tokens(lines.next())?;
    if h.len() != 3 {
        return Err(parse_err(1, "header must be `d n_per_dim L`"));
    }
    let d: usize = h[0].parse().map_err(|e| parse_err(1, e))?;
    let n: usize = h[1].parse().map_err(|e| parse_err(1, e))?;
    let l: f64 = h[2].parse().map_err(|e| parse_err(1, e))?;
    let grid = Grid::new(d, n, l)?;
    Field::from_values(&grid, read_values(lines, grid.len())?)
}

pub fn write_sphere_field(f: &SphereField, w: impl Write) -> Result<()> {
    let g = f.grid();
    write_values(w, &format!("{} {} {}", g.n_phi(), g.n_theta(), g.l_max()), f.values())
}

pub fn read_sphere_field(r: impl BufRead) -> Result<SphereField> {
    let mut lines = r.lines();
    let h = header_tokens(lines.next())?;
    if h.len() != 3 {
        return Err(parse_err(1, "header must be `n_phi n_theta l_max`"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|e| parse_err(1, e));
    let grid = SphereGrid::new(parse(&h[0])?, parse(&h[1])?, parse(&h[2])?)?;
    SphereField::from_values(&grid, read_values(lines, grid.len())?)
}

/// A field file of either kind, told apart by the header: torus headers have
/// a real-valued length as their third token and `d ∈ {1, 2}` first.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyField {
    Torus(Field),
    Sphere(SphereField),
}

pub fn read_any_field(path: impl AsRef<Path>) -> Result<AnyField> {
    let text = std::fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or_default();
    let tokens: Vec<&str> = first.split_whitespace().collect();
    let is_torus = tokens.len() == 3 && matches!(tokens[0], "1" | "2") && tokens[2].parse::<usize>().is_err();
    if is_torus {
        Ok(AnyField::Torus(read_field(text.as_bytes())?))
    } else {
        Ok(AnyField::Sphere(read_sphere_field(text.as_bytes())?))
    }
}

pub fn save_field(f: &Field, path: impl AsRef<Path>) -> Result<()> {
    write_field(f, BufWriter::new(std::fs::File::create(path)?))
}

pub fn save_sphere_field(f: &SphereField, path: impl AsRef<Path>) -> Result<()> {
    write_sphere_field(f, BufWriter::new(std::fs::File::create(path)?))
}

pub fn save_any_field(f: &AnyField, path: impl AsRef<Path>) -> Result<()> {
    match f {
        AnyField::Torus(f) => save_field(f, path),
        AnyField::Sphere(f) => save_sphere_field(f, path),
    }
}

/// Writes the nonzero-indexed coefficient table in FFT order.
pub fn write_coeffs_csv(c: &CoeffMap, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let d = c.grid().dim();
    if d == 2 {
        out.write_record(["k1", "k2", "re", "im"])?;
    } else {
        out.write_record(["k1", "re", "im"])?;
    }
    for (k, v) in c.iter() {
        let (re, im) = (format!("{:e}", v.re), format!("{:e}", v.im));
        if d == 2 {
            out.write_record([k[0].to_string(), k[1].to_string(), re, im])?;
        } else {
            out.write_record([k[0].to_string(), re, im])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a coefficient table; indices absent from the file are zero.
pub fn read_coeffs_csv(grid: &Grid, r: impl std::io::Read) -> Result<CoeffMap> {
    let mut reader = csv::Reader::from_reader(r);
    let d = grid.dim();
    let mut pairs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != d + 2 {
            return Err(parse_err(i + 2, format!("expected {} columns", d + 2)));
        }
        let num = |j: usize| rec[j].trim().parse::<f64>().map_err(|e| parse_err(i + 2, e));
        let k1 = rec[0].trim().parse::<i64>().map_err(|e| parse_err(i + 2, e))?;
        let k2 = if d == 2 {
            rec[1].trim().parse::<i64>().map_err(|e| parse_err(i + 2, e))?
        } else {
            0
        };
        pairs.push(([k1, k2], C64::new(num(d)?, num(d + 1)?)));
    }
    CoeffMap::from_pairs(grid, pairs)
}

pub fn write_sph_coeffs_csv(c: &SphCoeffMap, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["l", "m", "re", "im"])?;
    for l in 0..=c.l_max() {
        for m in -(l as i64)..=(l as i64) {
            let v = c.get(l, m)?;
            out.write_record([l.to_string(), m.to_string(), format!("{:e}", v.re), format!("{:e}", v.im)])?;
        }
    }
    out.flush()?;
    Ok(())
}
