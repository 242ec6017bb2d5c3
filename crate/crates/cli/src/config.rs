use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use traceforge_core::eval::ConfigGrid;
use traceforge_core::synth::HttpClientConfig;
use traceforge_core::XesKeys;

use crate::error::CliError;

/// Pipeline settings shared by the subcommands. Relative paths resolve
/// against the directory holding the config file; command-line flags take
/// precedence over every field.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_path: Option<PathBuf>,
    /// Named dataset files, e.g. `{"human": "human.xes"}`.
    pub datasets: BTreeMap<String, PathBuf>,
    pub llm: HttpClientConfig,
    pub prompt_template_path: Option<PathBuf>,
    pub instructions: Option<String>,
    pub format_note: Option<String>,
    pub shots: usize,
    pub gate_threshold: f64,
    pub retries_on_reject: u32,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub grid: ConfigGrid,
    pub k_folds: usize,
    pub neighbors: usize,
    pub q: usize,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub xes_keys: XesKeys,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_path: None,
            datasets: BTreeMap::new(),
            llm: HttpClientConfig::default(),
            prompt_template_path: None,
            instructions: None,
            format_note: None,
            shots: 2,
            gate_threshold: 0.99,
            retries_on_reject: 0,
            concurrency: 1,
            timeout_secs: 120,
            max_retries: 3,
            grid: ConfigGrid::default(),
            k_folds: 5,
            neighbors: 5,
            q: 2,
            seed: None,
            output_dir: None,
            xes_keys: XesKeys::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::input("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        config.check_paths()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.schema_path.as_mut() {
            join(p);
        }
        if let Some(p) = self.prompt_template_path.as_mut() {
            join(p);
        }
        if let Some(p) = self.output_dir.as_mut() {
            join(p);
        }
        self.datasets.values_mut().for_each(join);
    }

    fn check_paths(&self) -> Result<(), CliError> {
        let inputs = self
            .schema_path
            .iter()
            .chain(self.prompt_template_path.iter())
            .chain(self.datasets.values());
        for path in inputs {
            if !path.exists() {
                return Err(CliError::input("config", format!("referenced path {} does not exist", path.display())));
            }
        }
        if !(self.gate_threshold > 0.0 && self.gate_threshold <= 1.0) {
            return Err(CliError::input("config", format!("gate_threshold {} outside (0, 1]", self.gate_threshold)));
        }
        self.grid.validate().map_err(|e| CliError::input("config", e.to_string()))?;
        Ok(())
    }

    /// The seed from the flag or the config; stochastic steps refuse to run
    /// without one.
    pub fn require_seed(&self, flag: Option<u64>, step: &str) -> Result<u64, CliError> {
        flag.or(self.seed)
            .ok_or_else(|| CliError::input("config", format!("{step} needs a seed (--seed or config `seed`)")))
    }

    pub fn schema_path(&self, flag: Option<&Path>) -> Result<PathBuf, CliError> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.schema_path.clone())
            .ok_or_else(|| CliError::input("config", "a metamodel schema is required (--schema or config `schema_path`)"))
    }
}
