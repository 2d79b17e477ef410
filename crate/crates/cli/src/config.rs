//! Run configuration: defaults, then an optional JSON file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use fairaudit::models::Preset;
use serde::{Deserialize, Serialize};

/// Options shared by every command. Each one may also be set in the JSON
/// file passed with `--config`, under the same name with underscores.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigArgs {
    /// JSON configuration file; flags take precedence over its fields.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Input data: the whitespace-separated German credit file, or a CSV when `--schema` is given.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,

    /// JSON schema describing the columns of a CSV input.
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,

    /// Saved model document to audit instead of training a preset.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,

    /// Model preset: lr, ridge, tree or tree-prime.
    #[arg(long, global = true)]
    pub preset: Option<String>,

    /// Override the L2 penalty of the logistic presets.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    /// Train with the protected attribute among the inputs.
    #[arg(long, global = true)]
    pub with_protected: Option<bool>,

    /// Classification threshold: ŷ = 1 iff score > delta.
    #[arg(long, global = true)]
    pub delta: Option<f64>,

    /// Significance level of the fairness tests.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,

    /// Significance level for candidate variables and fair mitigation rows.
    #[arg(long, global = true)]
    pub fpdp_alpha: Option<f64>,

    /// Number of risk classes for conditional parity.
    #[arg(long, global = true)]
    pub classes: Option<usize>,

    /// Categorical weight of the k-prototypes distance.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,

    /// Restarts of the k-prototypes search.
    #[arg(long, global = true)]
    pub n_init: Option<usize>,

    /// Root seed for clustering, tree column sampling and search.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Fully resolved configuration, recorded in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub data: PathBuf,
    pub schema: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub preset: Preset,
    pub lambda: Option<f64>,
    pub with_protected: bool,
    pub delta: f64,
    pub alpha: f64,
    pub fpdp_alpha: f64,
    pub classes: usize,
    pub gamma: Option<f64>,
    pub n_init: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl ConfigArgs {
    fn overlay(self, file: ConfigArgs) -> ConfigArgs {
        ConfigArgs {
            config: self.config,
            data: self.data.or(file.data),
            schema: self.schema.or(file.schema),
            model: self.model.or(file.model),
            preset: self.preset.or(file.preset),
            lambda: self.lambda.or(file.lambda),
            with_protected: self.with_protected.or(file.with_protected),
            delta: self.delta.or(file.delta),
            alpha: self.alpha.or(file.alpha),
            fpdp_alpha: self.fpdp_alpha.or(file.fpdp_alpha),
            classes: self.classes.or(file.classes),
            gamma: self.gamma.or(file.gamma),
            n_init: self.n_init.or(file.n_init),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let merged = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
                let file: ConfigArgs =
                    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
                self.overlay(file)
            }
            None => self,
        };
        let preset: Preset = merged.preset.as_deref().unwrap_or("tree-prime").parse()?;
        let cfg = RunConfig {
            data: merged.data.context("no input data: pass --data or set `data` in the config file")?,
            schema: merged.schema,
            model: merged.model,
            preset,
            lambda: merged.lambda,
            with_protected: merged.with_protected.unwrap_or(false),
            delta: merged.delta.unwrap_or(0.5),
            alpha: merged.alpha.unwrap_or(0.05),
            fpdp_alpha: merged.fpdp_alpha.unwrap_or(0.10),
            classes: merged.classes.unwrap_or(2),
            gamma: merged.gamma,
            n_init: merged.n_init.unwrap_or(10),
            seed: merged.seed.unwrap_or(42),
            out: merged.out.unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!("delta must lie in (0, 1), got {}", self.delta);
        }
        for (name, a) in [("alpha", self.alpha), ("fpdp-alpha", self.fpdp_alpha)] {
            if !(a > 0.0 && a < 0.5) {
                bail!("{name} must lie in (0, 0.5), got {a}");
            }
        }
        if self.classes == 0 {
            bail!("classes must be at least 1");
        }
        if self.n_init == 0 {
            bail!("n-init must be at least 1");
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                bail!("gamma must be a finite non-negative number, got {g}");
            }
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                bail!("lambda must be a finite non-negative number, got {l}");
            }
        }
        check_exists(&self.data)?;
        if let Some(p) = &self.schema {
            check_exists(p)?;
        }
        if let Some(p) = &self.model {
            check_exists(p)?;
        }
        Ok(())
    }
}

fn check_exists(p: &Path) -> Result<()> {
    if !p.exists() {
        bail!("{} does not exist", p.display());
    }
    Ok(())
}
