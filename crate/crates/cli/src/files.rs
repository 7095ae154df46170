//! Footprint and BS files, and atomic output writes.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use stochcell::{BaseStation, Error, Point2D, Polygon};

use crate::error::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
    .into()
}

/// One polygon per line as `x1 y1 x2 y2 ...`; `#` starts a comment.
pub fn parse_footprints(text: &str, path: &Path) -> Result<Vec<Polygon>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_error(path, i + 1, format!("`{t}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if nums.len() % 2 != 0 || nums.len() < 6 {
            return Err(parse_error(
                path,
                i + 1,
                "a footprint needs at least 3 x y pairs",
            ));
        }
        let vertices = nums.chunks(2).map(|c| Point2D::new(c[0], c[1])).collect();
        out.push(Polygon::new(vertices).map_err(|e| parse_error(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_footprints(path: &Path) -> Result<Vec<Polygon>, CliError> {
    parse_footprints(&read(path)?, path)
}

pub fn format_footprints(polys: &[Polygon]) -> String {
    let mut s = String::from("# building footprints: x1 y1 x2 y2 ... (m)\n");
    for p in polys {
        let coords: Vec<String> = p
            .vertices()
            .iter()
            .map(|v| format!("{} {}", v.x, v.y))
            .collect();
        writeln!(s, "{}", coords.join(" ")).unwrap();
    }
    s
}

/// CSV `id,x,y` with unique ids.
pub fn parse_bs_file(text: &str, path: &Path) -> Result<Vec<BaseStation>, CliError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "id,x,y" => {}
        Some((i, _)) => return Err(parse_error(path, i + 1, "expected header `id,x,y`")),
        None => return Err(parse_error(path, 1, "empty BS file")),
    }
    let mut ids = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_error(path, i + 1, "expected 3 fields"));
        }
        let id: u32 = fields[0]
            .parse()
            .map_err(|_| parse_error(path, i + 1, format!("bad id `{}`", fields[0])))?;
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(path, i + 1, format!("bad coordinate `{s}`")))
        };
        let pos = Point2D::new(coord(fields[1])?, coord(fields[2])?);
        if !ids.insert(id) {
            return Err(parse_error(path, i + 1, format!("duplicate id {id}")));
        }
        out.push(BaseStation {
            id,
            pos,
            rooftop: false,
        });
    }
    Ok(out)
}

pub fn read_bs_file(path: &Path) -> Result<Vec<BaseStation>, CliError> {
    parse_bs_file(&read(path)?, path)
}

#[cfg(test)]
pub fn format_bs_file(bss: &[BaseStation]) -> String {
    let mut s = String::from("id,x,y\n");
    for b in bss {
        writeln!(s, "{},{},{}", b.id, b.pos.x, b.pos.y).unwrap();
    }
    s
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::from(Error::io(path, e));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
