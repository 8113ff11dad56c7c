//! Run configuration shared by the command line and JSON config files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kingman_core::processes::{BesselScaling, JumpAtom};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Kernel,
    Sample,
    Convolve,
    Radchf,
    Simulate,
    Whf,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Rayleigh,
    Rayleighian,
    /// The marginal `μ_t` of a Kingman–Lévy process.
    Levy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Brownian,
    Bessel,
    Kl,
    Levy1d,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every setting a run can take. Fields left out fall back to the
/// command's defaults; command-line flags override a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    pub s: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub x: Option<Vec<f64>>,
    pub law: Option<Law>,
    pub lambda: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
    pub time: Option<f64>,
    pub pair: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub sigma: Option<f64>,
    pub jumps: Option<Vec<JumpAtom>>,
    pub process: Option<Process>,
    pub d: Option<usize>,
    pub variance: Option<f64>,
    pub scaling: Option<BesselScaling>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub p: Option<f64>,
    pub n_paths: Option<usize>,
    pub nu: Option<f64>,
    pub theta: Option<f64>,
    pub input: Option<PathBuf>,
    pub other: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub quick: Option<bool>,
    pub emit_plot_data: Option<PathBuf>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($f:ident),* $(,)?) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Reads a config file, reporting the line and column of syntax or
    /// field errors.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| {
            anyhow::anyhow!(
                "config file {}: line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            )
        })
    }

    /// Values set in `self` win over those in `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay!(
            self, base, command, s, k, seed, n, x, law, lambda, t, time, pair, spec, sigma, jumps,
            process, d, variance, scaling, horizon, dt, p, n_paths, nu, theta, input, other, out,
            out_dir, format, quick, emit_plot_data,
        )
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(kingman_core::verify::DEFAULT_SEED)
    }

    /// Artifact path: relative paths are placed in the output directory.
    pub fn resolve_out(&self, path: &Path) -> Result<PathBuf> {
        let full = match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        };
        if let Some(parent) = full.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create output directory {}", parent.display()))?;
        }
        Ok(full)
    }
}

/// Fetches a required field or fails naming it.
pub fn need<T: Clone>(value: &Option<T>, field: &str, command: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v.clone()),
        None => bail!("`{command}` needs the field `{field}` (flag --{})", field.replace('_', "-")),
    }
}

pub fn positive(value: f64, field: &str) -> Result<f64> {
    if !(value.is_finite() && value > 0.0) {
        bail!("field `{field}` must be a positive number, got {value}");
    }
    Ok(value)
}

pub fn at_least_one(value: usize, field: &str) -> Result<usize> {
    if value == 0 {
        bail!("field `{field}` must be at least 1");
    }
    Ok(value)
}

/// Parses `v:rate`.
pub fn parse_jump(text: &str) -> std::result::Result<JumpAtom, String> {
    let (v, rate) = text
        .split_once(':')
        .ok_or_else(|| format!("expected V:RATE, got {text:?}"))?;
    let v = v.trim().parse().map_err(|_| format!("bad jump size {v:?}"))?;
    let rate = rate.trim().parse().map_err(|_| format!("bad jump rate {rate:?}"))?;
    Ok(JumpAtom { v, rate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file = RunConfig {
            s: Some(1.0),
            n: Some(10),
            ..Default::default()
        };
        let cli = RunConfig {
            s: Some(0.5),
            ..Default::default()
        };
        let merged = cli.over(file);
        assert_eq!(merged.s, Some(0.5));
        assert_eq!(merged.n, Some(10));
    }

    #[test]
    fn config_errors_name_their_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, "{\n  \"s\": 0.5,\n  \"bogus\": 1\n}").unwrap();
        let e = RunConfig::from_file(&p).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        assert!(e.contains("bogus"), "{e}");
        std::fs::write(&p, r#"{"command": "kernel", "s": 0.5, "x": [1.0]}"#).unwrap();
        let c = RunConfig::from_file(&p).unwrap();
        assert_eq!(c.command, Some(CommandKind::Kernel));
    }

    #[test]
    fn jump_parsing() {
        assert_eq!(parse_jump("1:2.5").unwrap(), JumpAtom { v: 1.0, rate: 2.5 });
        assert!(parse_jump("1").is_err());
        assert!(parse_jump("a:1").is_err());
    }

    #[test]
    fn missing_fields_are_named() {
        let e = need::<f64>(&None, "n_paths", "whf").unwrap_err().to_string();
        assert!(e.contains("--n-paths"));
    }
}
