//! `key = value` run configuration with built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Every accepted key with its default value.
const DEFAULTS: &[(&str, &str)] = &[
    ("region.x_min", "0"),
    ("region.x_max", "2000"),
    ("region.y_min", "0"),
    ("region.y_max", "2000"),
    ("bs.placement", "ppp"),
    ("bs.density_per_km2", "79.75"),
    ("bs.file", ""),
    ("buildings.file", ""),
    ("mt.placement", "uniform"),
    ("mt.x", "0"),
    ("mt.y", "0"),
    ("blockage.model", "3gpp"),
    ("blockage.params", "3gpp-fit"),
    ("antenna.model", "omni"),
    ("antenna.theta_3db_deg", "35"),
    ("antenna.g_min_db", "23"),
    ("antenna.params", "3gpp-fit"),
    ("channel.frequency_hz", "2.1e9"),
    ("channel.r0", "1"),
    ("channel.alpha_los", "2.5"),
    ("channel.alpha_nlos", "3.5"),
    ("channel.mu_los_db", "0"),
    ("channel.mu_nlos_db", "0"),
    ("channel.sigma_los_db", "5.8"),
    ("channel.sigma_nlos_db", "8.7"),
    ("channel.fading_los", "nakagami"),
    ("channel.fading_nlos", "rayleigh"),
    ("channel.nakagami_m_los", "2"),
    ("channel.nakagami_m_nlos", "2"),
    ("channel.tx_power_dbm", "30"),
    ("channel.bandwidth_hz", "20e6"),
    ("channel.noise_figure_db", "10"),
    ("channel.noise", "true"),
    ("sim.iterations", "100000"),
    ("sim.seed", "1"),
    ("sim.workers", "0"),
    ("thresholds.start_db", "-10"),
    ("thresholds.stop_db", "30"),
    ("thresholds.step_db", "1"),
    ("los.trials", "10000"),
    ("los.delta_r", "1"),
    ("los.m_t", "2000"),
    ("fit.source", "3gpp"),
    ("fit.histogram", ""),
    ("fit.n_balls", "3"),
    ("fit.restarts", "20"),
    ("fit.range_m", "2000"),
    ("fit.points", "200"),
    ("fit.k_lobes", "4"),
    ("fit.theta_step_deg", "0.1"),
    ("city.built_fraction", "0.559"),
    ("city.min_size", "10"),
    ("city.max_size", "60"),
    ("suite.blockage", "nlos,empirical"),
    ("suite.antenna", "omni"),
];

/// Fully resolved configuration: defaults, then the file, then overrides.
#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<&'static str, String>,
    /// Relative paths in the file resolve against this directory.
    base: PathBuf,
}

fn known(key: &str) -> Option<&'static str> {
    DEFAULTS.iter().find(|(k, _)| *k == key).map(|(k, _)| *k)
}

impl Config {
    pub fn defaults() -> Self {
        Config {
            values: DEFAULTS.iter().map(|(k, v)| (*k, v.to_string())).collect(),
            base: PathBuf::from("."),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Config::defaults();
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let here =
                |msg: String| CliError::Config(format!("{}:{}: {msg}", path.display(), i + 1));
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| here(format!("expected `key = value`, got `{line}`")))?;
            let k = k.trim();
            let key = known(k).ok_or_else(|| here(format!("unknown key `{k}`")))?;
            if let Some(prev) = seen.insert(key, i + 1) {
                return Err(here(format!("`{key}` already set on line {prev}")));
            }
            cfg.values.insert(key, v.trim().to_string());
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
        let key = known(k.trim())
            .ok_or_else(|| CliError::Config(format!("unknown key `{}`", k.trim())))?;
        self.values.insert(key, v.trim().to_string());
        Ok(())
    }

    pub fn str(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .expect("key listed in DEFAULTS")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T, CliError> {
        let v = self.str(key);
        v.parse()
            .map_err(|_| CliError::Config(format!("`{key}` must be {what}, got `{v}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.parse(key, "a number")?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Config(format!("`{key}` must be finite")))
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.parse(key, "a non-negative integer")
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.parse(key, "a non-negative integer")
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        self.parse(key, "true or false")
    }

    /// Path value resolved against the config directory; `None` if empty.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.str(key);
        if v.is_empty() {
            None
        } else {
            Some(self.base.join(v))
        }
    }

    /// Comma-separated list.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.str(key)
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    }

    /// One `key = value` line per setting, sorted by key.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    /// SHA-256 of [`Config::render`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}
