use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a JSON config file may set. Flags win over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub g: Option<f64>,
    pub c: Option<f64>,
    pub c2: Option<f64>,
    pub eps: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub horizon: Option<f64>,
    pub delta: Option<f64>,
    pub z_guard: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub c2_grid: Option<Vec<f64>>,
    pub eps_grid: Option<Vec<f64>>,
    pub y2_grid: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON config file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: logical cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true)]
    pub atol: Option<f64>,
}

/// Model parameters; `c` and `c2` are mutually exclusive.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamFlags {
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<f64>,
    #[arg(long, conflicts_with = "c2", allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Saddle-node offset, c = v_s + sqrt(eps) c2
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
}

/// Grid given as `start:stop:step` or as a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, h] = parts.as_slice() else {
            return Err(format!("range {s:?} must be start:stop:step"));
        };
        let (a, b, h) = (num(a)?, num(b)?, num(h)?);
        if !(h > 0.0) || b < a {
            return Err(format!("range {s:?} needs start <= stop and step > 0"));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| ((a + h * k as f64) * 1e12).round() / 1e12).collect())
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
    }
}

pub fn check_grid(name: &str, grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Config(format!("{name} is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

/// Fully resolved settings, echoed into every output header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub g: f64,
    pub c: Option<f64>,
    pub c2: Option<f64>,
    pub eps: f64,
    pub rtol: f64,
    pub atol: f64,
    pub out: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl RunConfig {
    pub fn resolve(command: &str, common: &Common, params: &ParamFlags, file: &FileConfig, default_c: Option<f64>) -> Result<Self, CliError> {
        let c = params.c.or(if params.c2.is_some() { None } else { file.c });
        let c2 = params.c2.or(if params.c.is_some() { None } else { file.c2 });
        if c.is_some() && c2.is_some() {
            return Err(CliError::Config("c and c2 are mutually exclusive".into()));
        }
        let c = if c2.is_none() { c.or(default_c) } else { None };
        let cfg = RunConfig {
            command: command.into(),
            g: params.g.or(file.g).unwrap_or(-1.0),
            c,
            c2,
            eps: params.eps.or(file.eps).unwrap_or(0.01),
            rtol: common.rtol.or(file.rtol).unwrap_or(1e-9),
            atol: common.atol.or(file.atol).unwrap_or(1e-12),
            out: common.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
            format: common.format.or(file.format).unwrap_or(Format::Csv),
            seed: common.seed.or(file.seed).unwrap_or(0),
            threads: common.threads.or(file.threads),
            extra: serde_json::Map::new(),
        };
        if !(cfg.g < 0.0) {
            return Err(CliError::Config(format!("g = {} must be negative", cfg.g)));
        }
        if !(cfg.eps >= 0.0) {
            return Err(CliError::Config(format!("eps = {} must be non-negative", cfg.eps)));
        }
        if !(cfg.rtol > 0.0 && cfg.atol > 0.0) {
            return Err(CliError::Config("rtol and atol must be positive".into()));
        }
        if cfg.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.extra.insert(key.into(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn params(&self) -> fhn_cusp::vfields::Params {
        use fhn_cusp::vfields::Params;
        match (self.c, self.c2) {
            (_, Some(c2)) => Params::saddle_node(self.g, c2, self.eps),
            (c, None) => Params::new(self.g, c.unwrap_or(1.24), self.eps),
        }
    }

    pub fn header(&self) -> Vec<String> {
        vec![
            format!("fhn-cusp {} {}", env!("CARGO_PKG_VERSION"), self.command),
            format!("config {}", serde_json::to_string(self).expect("serializable")),
        ]
    }
}
