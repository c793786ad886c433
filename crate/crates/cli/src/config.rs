//! Run configuration: defaults, an optional `key = value` file, then flags.

use std::path::{Path, PathBuf};

use chi2norm::QuadratureSpec;

use crate::error::CliError;
use crate::output::Format;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "CHI2NORM_CONFIG";

pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Fixed Hermite truncation order; `None` selects the adaptive profile.
    pub order: Option<usize>,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// Highest `verify` tier to run.
    pub tier: u8,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        RunConfig {
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_subdivisions: q.max_subdivisions,
            order: None,
            format: Format::Table,
            output: None,
            tier: 3,
            seed: DEFAULT_SEED,
        }
    }
}

/// Values that may come from a file or from flags; `None` means unset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub order: Option<usize>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub tier: Option<u8>,
    pub seed: Option<u64>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}: invalid value '{value}' for {key}")))
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Overrides, CliError> {
    let mut o = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {line}: expected key = value")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "abs_tol" => o.abs_tol = Some(parse_value(key, value, line)?),
            "rel_tol" => o.rel_tol = Some(parse_value(key, value, line)?),
            "max_subdivisions" => o.max_subdivisions = Some(parse_value(key, value, line)?),
            "order" => {
                o.order = if value == "auto" {
                    None
                } else {
                    Some(parse_value(key, value, line)?)
                }
            }
            "format" => o.format = Some(value.parse().map_err(|e| CliError::Config(format!("line {line}: {e}")))?),
            "output" => o.output = Some(PathBuf::from(value)),
            "tier" => o.tier = Some(parse_value(key, value, line)?),
            "seed" => o.seed = Some(parse_value(key, value, line)?),
            _ => return Err(CliError::Config(format!("line {line}: unknown key '{key}'"))),
        }
    }
    Ok(o)
}

pub fn load_config(path: &Path) -> Result<Overrides, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    /// Defaults, then `file`, then `flags`.
    pub fn resolve(file: Option<Overrides>, flags: Overrides) -> Result<Self, CliError> {
        let mut c = RunConfig::default();
        for o in file.into_iter().chain([flags]) {
            c.abs_tol = o.abs_tol.unwrap_or(c.abs_tol);
            c.rel_tol = o.rel_tol.unwrap_or(c.rel_tol);
            c.max_subdivisions = o.max_subdivisions.unwrap_or(c.max_subdivisions);
            c.order = o.order.or(c.order);
            c.format = o.format.unwrap_or(c.format);
            c.output = o.output.or(c.output);
            c.tier = o.tier.unwrap_or(c.tier);
            c.seed = o.seed.unwrap_or(c.seed);
        }
        if !(1..=3).contains(&c.tier) {
            return Err(CliError::Config(format!("tier must be 1, 2 or 3, got {}", c.tier)));
        }
        c.quadrature().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, CliError> {
        Ok(QuadratureSpec::new(self.abs_tol, self.rel_tol)?.with_max_subdivisions(self.max_subdivisions)?)
    }
}
