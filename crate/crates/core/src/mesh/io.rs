//! Plain-text mesh files.
//!
//! ```text
//! nv nt
//! x y                                    (nv lines)
//! i j k region kappa_flag control_flag   (nt lines, 0-based indices)
//! ```
//!
//! `region` is 0 for OMEGA and 1 for EXTERIOR. Lines starting with `#` and
//! blank lines are ignored.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Region, TriMesh};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &TriMesh, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_triangles())?;
    for p in mesh.vertices() {
        writeln!(out, "{} {}", p[0], p[1])?;
    }
    for (e, t) in mesh.triangles().iter().enumerate() {
        writeln!(
            out,
            "{} {} {} {} {} {}",
            t[0],
            t[1],
            t[2],
            mesh.region(e).code(),
            u8::from(mesh.kappa_mask()[e]),
            u8::from(mesh.control_mask()[e])
        )?;
    }
    Ok(())
}

pub fn save_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mesh(mesh, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    read_mesh(std::fs::File::open(path)?)
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("invalid {what} '{tok}'") })
}

fn flag(tok: Option<&str>, line: usize, what: &str) -> Result<bool> {
    match parse::<u8>(tok, line, what)? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(Error::Parse { line, msg: format!("{what} must be 0 or 1, got {v}") }),
    }
}

pub fn read_mesh(input: impl Read) -> Result<TriMesh> {
    let mut lines = BufReader::new(input)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#')));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(s))) => Ok((n, s)),
            Some((_, Err(e))) => Err(Error::Io(e)),
            None => Err(Error::Parse { line: 0, msg: format!("unexpected end of file while reading {what}") }),
        }
    };
    let (ln, header) = next("header")?;
    let mut tok = header.split_whitespace();
    let nv: usize = parse(tok.next(), ln, "vertex count")?;
    let nt: usize = parse(tok.next(), ln, "triangle count")?;
    if tok.next().is_some() {
        return Err(Error::Parse { line: ln, msg: "header must be 'nv nt'".into() });
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, s) = next("vertices")?;
        let mut tok = s.split_whitespace();
        let x: f64 = parse(tok.next(), ln, "x coordinate")?;
        let y: f64 = parse(tok.next(), ln, "y coordinate")?;
        if tok.next().is_some() || !x.is_finite() || !y.is_finite() {
            return Err(Error::Parse { line: ln, msg: "vertex line must be two finite numbers".into() });
        }
        vertices.push([x, y]);
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    let mut kappa = Vec::with_capacity(nt);
    let mut control = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, s) = next("triangles")?;
        let mut tok = s.split_whitespace();
        let mut t = [0usize; 3];
        for v in &mut t {
            *v = parse(tok.next(), ln, "vertex index")?;
            if *v >= nv {
                return Err(Error::Parse { line: ln, msg: format!("vertex index {v} out of range (nv = {nv})") });
            }
        }
        let code: u8 = parse(tok.next(), ln, "region")?;
        let region = Region::from_code(code)
            .ok_or_else(|| Error::Parse { line: ln, msg: format!("region must be 0 or 1, got {code}") })?;
        kappa.push(flag(tok.next(), ln, "kappa flag")?);
        control.push(flag(tok.next(), ln, "control flag")?);
        if tok.next().is_some() {
            return Err(Error::Parse { line: ln, msg: "trailing tokens on triangle line".into() });
        }
        triangles.push(t);
        regions.push(region);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse { line: ln, msg: "unexpected content after the last triangle".into() });
    }
    TriMesh::new(vertices, triangles, regions, kappa, control)
}
