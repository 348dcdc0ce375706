//! Run configuration: CLI flags over a TOML file over built-in defaults.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use gegraph::pipeline::{CommunityMode, PipelineConfig};

/// Pipeline settings accepted on the command line; unset flags fall back to
/// the config file, then to the defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct PipelineArgs {
    /// Dataset file, or a name looked up in GEGRAPH_DATA_DIR and the bundled data.
    #[arg(long)]
    pub dataset: Option<String>,
    /// TOML file with pipeline settings.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub walk_length: Option<usize>,
    #[arg(long)]
    pub walks_per_node: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// auto, labels or kmeans.
    #[arg(long)]
    pub communities: Option<String>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub t_ein: Option<f64>,
    #[arg(long)]
    pub t_eout: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub initial_temperature: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_bins: Option<usize>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub occlusion_threshold: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
}

/// A resolved run: where the graph comes from and how to process it.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: String,
    pub pipeline: PipelineConfig,
}

pub const DEFAULT_DATASET: &str = "lesmis";

/// Parses a TOML config; `dataset` is the only key outside the pipeline settings.
pub fn parse_config_file(text: &str) -> Result<(Option<String>, PipelineConfig)> {
    let mut table: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
    let dataset = match table.remove("dataset") {
        None => None,
        Some(toml::Value::String(s)) => Some(s),
        Some(other) => bail!("dataset must be a string, got {other}"),
    };
    let pipeline: PipelineConfig = toml::Value::Table(table).try_into().context("invalid pipeline settings")?;
    Ok((dataset, pipeline))
}

fn parse_mode(s: &str) -> Result<CommunityMode> {
    Ok(match s {
        "auto" => CommunityMode::Auto,
        "labels" => CommunityMode::Labels,
        "kmeans" => CommunityMode::Kmeans,
        other => bail!("unknown community mode {other:?} (expected auto, labels or kmeans)"),
    })
}

impl PipelineArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let (file_dataset, mut c) = match &self.config {
            Some(path) => load_config_file(path)?,
            None => (None, PipelineConfig::default()),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        set!(p, q, r, walk_length, walks_per_node, dim, window, negatives, epochs, learning_rate, k);
        set!(w, t_ein, t_eout, iterations, initial_temperature, seed, max_bins, confidence);
        if let Some(mode) = &self.communities {
            c.communities = parse_mode(mode)?;
        }
        if let Some(v) = self.occlusion_threshold {
            c.metrics.occlusion_threshold = v;
        }
        if let Some(v) = self.grid_size {
            c.metrics.grid_size = v;
        }
        if let Some(v) = self.radius {
            c.metrics.radius = v;
        }
        Ok(RunConfig {
            dataset: self
                .dataset
                .clone()
                .or(file_dataset)
                .unwrap_or_else(|| DEFAULT_DATASET.to_string()),
            pipeline: c,
        })
    }
}

fn load_config_file(path: &Path) -> Result<(Option<String>, PipelineConfig)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config_file(&text).with_context(|| format!("in config {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "dataset = \"mine.json\"\nw = 0.7\nseed = 3\n[metrics]\nradius = 0.2\n").unwrap();
        let args = PipelineArgs {
            config: Some(path),
            seed: Some(9),
            ..Default::default()
        };
        let run = args.resolve().unwrap();
        assert_eq!(run.dataset, "mine.json");
        assert_eq!(run.pipeline.w, 0.7);
        assert_eq!(run.pipeline.seed, 9);
        assert_eq!(run.pipeline.metrics.radius, 0.2);
        assert_eq!(run.pipeline.t_ein, 0.4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config_file("walk_lenght = 10").is_err());
        assert!(parse_config_file("dataset = 3").is_err());
    }

    #[test]
    fn defaults_without_file() {
        let run = PipelineArgs::default().resolve().unwrap();
        assert_eq!(run.dataset, DEFAULT_DATASET);
        assert_eq!(run.pipeline, PipelineConfig::default());
    }
}
