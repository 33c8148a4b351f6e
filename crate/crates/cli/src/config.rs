//! JSON config file schema and command-line overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use uncollapse_core::protocol::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    #[serde(alias = "montecarlo")]
    #[value(alias = "montecarlo")]
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub p_grid: Vec<f64>,
    pub mode: Mode,
    /// Shots per tomography setting in Monte Carlo mode.
    pub shots: u64,
    pub seed: u64,
    /// Strengths for which `qpt` writes the full χ matrix.
    pub chi_p: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            p_grid: (0..20).map(|k| k as f64 / 20.0).collect(),
            mode: Mode::Exact,
            shots: 100_000,
            seed: 0,
            chi_p: vec![0.47],
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() {
            bail!("p_grid is empty");
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(0.0..1.0).contains(*p)) {
            bail!("p_grid value {p} outside [0, 1)");
        }
        if self.p_grid.windows(2).any(|w| w[1] <= w[0]) {
            bail!("p_grid must be strictly increasing");
        }
        if let Some(p) = self.chi_p.iter().find(|p| !(0.0..1.0).contains(*p)) {
            bail!("chi_p value {p} outside [0, 1)");
        }
        if self.shots == 0 {
            bail!("shots must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub experiment: ExperimentConfig,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub pi_fraction: Option<f64>,
    pub no_decoherence: bool,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.mode {
            self.sweep.mode = m;
        }
        if let Some(n) = o.shots {
            self.sweep.shots = n;
        }
        if let Some(s) = o.seed {
            self.sweep.seed = s;
        }
        if let Some(f) = o.pi_fraction {
            self.experiment.pi_fraction = f;
        }
        if o.no_decoherence {
            self.experiment.decoherence_enabled = false;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        // p is swept; validate the rest at a representative strength.
        self.experiment.with_p(0.0).validate().context("invalid experiment")?;
        Ok(())
    }
}
