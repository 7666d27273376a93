//! Run configuration: JSON file values, then command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use ness_core::analysis::{GammaOptOptions, SolverOptions, SweepConfig, SCHEMA_VERSION};
use ness_core::{ChainParameters, ToyParameters};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Chain fields as they may appear in a file or on the command line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hopping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub staggered: Option<f64>,
}

impl ChainBlock {
    /// Fields set in `over` replace ours.
    pub fn merge(&mut self, over: &ChainBlock) {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(n_sites, hopping, interaction, coupling, bias, dephasing, staggered);
    }

    /// Complete, validated parameters; `defaults` fills fields the command does not need.
    pub fn resolve(&self, defaults: &ChainBlock) -> Result<ChainParameters, CliError> {
        let mut b = defaults.clone();
        b.merge(self);
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::Config(format!("missing chain parameter `{name}`")))
        };
        let n = b.n_sites.ok_or_else(|| CliError::Config("missing chain parameter `n_sites`".into()))?;
        let p = ChainParameters::new(n, need(b.interaction, "interaction")?, need(b.bias, "bias")?, b.dephasing.unwrap_or(0.0))
            .with_hopping(b.hopping.unwrap_or(1.0))
            .with_coupling(b.coupling.unwrap_or(1.0))
            .with_staggered(b.staggered.unwrap_or(0.0));
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<f64>,
}

impl ToyBlock {
    pub fn merge(&mut self, over: &ToyBlock) {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(n_levels, interaction, coupling, bias, dephasing);
    }

    pub fn resolve(&self) -> Result<ToyParameters, CliError> {
        let k = self.n_levels.ok_or_else(|| CliError::Config("missing toy parameter `n_levels`".into()))?;
        let d = self.interaction.ok_or_else(|| CliError::Config("missing toy parameter `interaction`".into()))?;
        let p = ToyParameters::new(
            k,
            d,
            self.coupling.unwrap_or(1.0),
            self.bias.unwrap_or(1.0),
            self.dephasing.unwrap_or(0.0),
        );
        p.validate()?;
        Ok(p)
    }
}

/// Bias and dephasing axes of the toy-model surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyGrid {
    pub bias: Vec<f64>,
    pub dephasing: Vec<f64>,
}

impl Default for ToyGrid {
    fn default() -> Self {
        Self {
            bias: (0..=20).map(|k| k as f64 / 20.0).collect(),
            dephasing: std::iter::once(0.0).chain((0..=16).map(|k| 10f64.powf(-4.0 + k as f64 / 4.0))).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// Directory for result files; the NESS_OUT_DIR variable and `--out-dir` override it.
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the subcommand name.
    pub name: Option<String>,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}

fn default_sizes() -> Vec<usize> {
    vec![8, 12, 16, 20]
}

/// Everything a run reads. Every block is optional in the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    /// When present, must name the subcommand being run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(default)]
    pub chain: ChainBlock,
    #[serde(default)]
    pub toy: ToyBlock,
    #[serde(default)]
    pub toy_grid: ToyGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub gamma_opt: GammaOptOptions,
    #[serde(default = "default_sizes")]
    pub diffusion_sizes: Vec<usize>,
    #[serde(default)]
    pub output: OutputBlock,
    /// Seeds the random initial state of MPO runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }
}

impl RunConfig {
    /// Parses a config document; errors carry line and column.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn check_subcommand(&self, name: &str) -> Result<(), CliError> {
        match &self.subcommand {
            Some(s) if s != name => Err(CliError::Config(format!(
                "config is for `{s}` but `{name}` was run"
            ))),
            _ => Ok(()),
        }
    }

    pub fn stem(&self, subcommand: &str) -> PathBuf {
        let dir = self.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
        dir.join(self.output.name.as_deref().unwrap_or(subcommand))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_used_verbatim() {
        let cfg = RunConfig::parse(r#"{"chain": {"n_sites": 5, "interaction": 1.5, "bias": 0.5, "dephasing": 0.1, "coupling": 2}}"#).unwrap();
        let p = cfg.chain.resolve(&ChainBlock::default()).unwrap();
        assert_eq!(p, ChainParameters::new(5, 1.5, 0.5, 0.1).with_coupling(2.0));
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = RunConfig::parse(r#"{"chain": {"n_sites": 5, "interaction": 1.5, "bias": 0.5}}"#).unwrap();
        cfg.chain.merge(&ChainBlock { dephasing: Some(0.3), ..Default::default() });
        assert_eq!(cfg.chain.resolve(&ChainBlock::default()).unwrap().dephasing, 0.3);
        let echoed = serde_json::to_value(&cfg).unwrap();
        assert_eq!(echoed["chain"]["dephasing"], 0.3);
    }

    #[test]
    fn rejects_unknown_keys_with_position() {
        let err = RunConfig::parse("{\n  \"chain\": {\"n_sites\": 5,\n \"gama\": 0.1}}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gama") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn rejects_out_of_range_bias() {
        let cfg = RunConfig::parse(r#"{"chain": {"n_sites": 5, "interaction": 0, "bias": 1.5}}"#).unwrap();
        let err = cfg.chain.resolve(&ChainBlock::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("bias"), "{err}");
    }
}
