//! Run configuration shared by every subcommand.
//!
//! Read from a TOML file whose keys match the command-line flags
//! (`top-k = 3`, `kappa = -3.0`, ...). Unset keys take the defaults below.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::candidates::CandidateParams;
use crate::clues::MiningParams;
use crate::error::{Error, Result};
use crate::ilp::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Hard,
    Soft,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Mode::Hard),
            "soft" => Ok(Mode::Soft),
            other => Err(Error::Parameter(format!(
                "unknown mode {other:?} (hard|soft)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub kappa: f64,
    pub uniq_threshold: f64,
    pub conf_threshold: f64,
    pub top_k: usize,
    pub alpha: f64,
    pub mode: Mode,
    /// 0 = no pruning.
    pub max_relations: usize,
    pub time_budget_ms: u64,
    pub seed: u64,
    pub triples: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub clues: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kappa: -3.0,
            uniq_threshold: 0.8,
            conf_threshold: 0.1,
            top_k: 3,
            alpha: 1.0,
            mode: Mode::Hard,
            max_relations: 0,
            time_budget_ms: 60_000,
            seed: 0,
            triples: None,
            predictions: None,
            gold: None,
            clues: None,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| Error::Parameter(format!("config: {}", e.message())))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.kappa >= 0.0 || self.kappa.is_nan() {
            return bad(format!("kappa must be negative, got {}", self.kappa));
        }
        if !(self.uniq_threshold > 0.0 && self.uniq_threshold <= 1.0) {
            return bad(format!(
                "uniq-threshold must be in (0, 1], got {}",
                self.uniq_threshold
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!(
                "alpha must be finite and non-negative, got {}",
                self.alpha
            ));
        }
        if self.time_budget_ms == 0 {
            return bad("time-budget-ms must be positive".into());
        }
        self.candidate_params().validate()
    }

    pub fn candidate_params(&self) -> CandidateParams {
        CandidateParams {
            top_k: self.top_k,
            min_conf: self.conf_threshold,
        }
    }

    pub fn mining_params(&self) -> MiningParams {
        MiningParams {
            kappa: self.kappa,
            theta: self.uniq_threshold,
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            time_budget: Duration::from_millis(self.time_budget_ms),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::from_toml("top-k = 2\nmode = \"soft\"\nalpha = 0.5\n").unwrap();
        assert_eq!(cfg.top_k, 2);
        assert_eq!(cfg.mode, Mode::Soft);
        assert_eq!(cfg.kappa, -3.0);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("kapa = -2.0\n").is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        for cfg in [
            RunConfig {
                kappa: 0.5,
                ..Default::default()
            },
            RunConfig {
                uniq_threshold: 0.0,
                ..Default::default()
            },
            RunConfig {
                conf_threshold: 1.5,
                ..Default::default()
            },
            RunConfig {
                top_k: 0,
                ..Default::default()
            },
            RunConfig {
                alpha: -1.0,
                ..Default::default()
            },
            RunConfig {
                time_budget_ms: 0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("soft".parse::<Mode>().unwrap(), Mode::Soft);
        assert!("medium".parse::<Mode>().is_err());
    }
}
