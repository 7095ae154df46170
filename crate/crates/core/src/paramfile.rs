//! Plain-text `key=value` files holding fitted multi-ball and multi-lobe
//! parameters, optionally followed by fit metadata.
//!
//! ```text
//! n_balls=3
//! d_1=47.7989
//! ...
//! q_los_1=0.9446
//! ...
//! q_los_4=0.0021
//! objective=0.1234
//! ```
//!
//! Multi-lobe files use `k_lobes`, `g_1..g_K` and `theta_deg_1..theta_deg_{K-1}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::blockage::MultiBallParams;
use crate::channel::MultiLobeParams;
use crate::error::{Error, Result};
use crate::intensity::FitReport;

/// Fit metadata carried alongside the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitMeta {
    pub objective: Option<f64>,
    pub restarts: Option<usize>,
    pub converged: Option<bool>,
}

impl<P> From<&FitReport<P>> for FitMeta {
    fn from(r: &FitReport<P>) -> Self {
        FitMeta {
            objective: Some(r.objective),
            restarts: Some(r.restarts),
            converged: Some(r.converged),
        }
    }
}

fn push_meta(out: &mut String, meta: &FitMeta) {
    if let Some(v) = meta.objective {
        writeln!(out, "objective={v:e}").unwrap();
    }
    if let Some(v) = meta.restarts {
        writeln!(out, "restarts={v}").unwrap();
    }
    if let Some(v) = meta.converged {
        writeln!(out, "converged={v}").unwrap();
    }
}

pub fn format_multiball(mb: &MultiBallParams, meta: &FitMeta) -> String {
    let mut s = String::new();
    writeln!(s, "n_balls={}", mb.n_balls()).unwrap();
    for (i, d) in mb.radii().iter().enumerate() {
        writeln!(s, "d_{}={d}", i + 1).unwrap();
    }
    for (i, q) in mb.q_los().iter().enumerate() {
        writeln!(s, "q_los_{}={q}", i + 1).unwrap();
    }
    push_meta(&mut s, meta);
    s
}

pub fn format_multilobe(ml: &MultiLobeParams, meta: &FitMeta) -> String {
    let mut s = String::new();
    writeln!(s, "k_lobes={}", ml.k_lobes()).unwrap();
    for (i, g) in ml.gains().iter().enumerate() {
        writeln!(s, "g_{}={g}", i + 1).unwrap();
    }
    for (i, b) in ml.breakpoints().iter().enumerate() {
        writeln!(s, "theta_deg_{}={}", i + 1, b.to_degrees()).unwrap();
    }
    push_meta(&mut s, meta);
    s
}

struct Entries<'a> {
    path: &'a Path,
    map: BTreeMap<String, (usize, String)>,
}

impl<'a> Entries<'a> {
    fn parse(text: &str, path: &'a Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected key=value, got `{line}`"),
                });
            };
            let k = k.trim().to_string();
            if map
                .insert(k.clone(), (i + 1, v.trim().to_string()))
                .is_some()
            {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(Entries { path, map })
    }

    fn err(&self, line: usize, msg: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg,
        }
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(line, format!("bad value `{v}` for `{key}`"))),
        }
    }

    fn need<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| self.err(0, format!("missing key `{key}`")))
    }

    fn meta(&mut self) -> Result<FitMeta> {
        Ok(FitMeta {
            objective: self.take("objective")?,
            restarts: self.take("restarts")?,
            converged: self.take("converged")?,
        })
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(Error::Parse {
                path: self.path.to_path_buf(),
                line,
                msg: format!("unknown key `{k}`"),
            }),
        }
    }
}

pub fn parse_multiball(text: &str, path: &Path) -> Result<(MultiBallParams, FitMeta)> {
    let mut e = Entries::parse(text, path)?;
    let n: usize = e.need("n_balls")?;
    let radii = (1..=n)
        .map(|i| e.need(&format!("d_{i}")))
        .collect::<Result<Vec<f64>>>()?;
    let q = (1..=n + 1)
        .map(|i| e.need(&format!("q_los_{i}")))
        .collect::<Result<Vec<f64>>>()?;
    let meta = e.meta()?;
    e.finish()?;
    let mb = MultiBallParams::new(radii, q).map_err(|err| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: err.to_string(),
    })?;
    Ok((mb, meta))
}

pub fn parse_multilobe(text: &str, path: &Path) -> Result<(MultiLobeParams, FitMeta)> {
    let mut e = Entries::parse(text, path)?;
    let k: usize = e.need("k_lobes")?;
    let gains = (1..=k)
        .map(|i| e.need(&format!("g_{i}")))
        .collect::<Result<Vec<f64>>>()?;
    let breaks = (1..k)
        .map(|i| e.need(&format!("theta_deg_{i}")))
        .collect::<Result<Vec<f64>>>()?;
    let meta = e.meta()?;
    e.finish()?;
    let ml = MultiLobeParams::from_degrees(gains, breaks).map_err(|err| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: err.to_string(),
    })?;
    Ok((ml, meta))
}
