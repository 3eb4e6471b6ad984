//! Run configuration: TOML file values, command-line overrides and the run
//! manifest that records what was resolved.
//!
//! Every value is resolved as flag, then config file, then built-in default.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use lexpost::neuralnet::{Activation, Hyperparams};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 1997;
pub const DEFAULT_TRAIN_WORDS: usize = 3550;
pub const DEFAULT_TEST_WORDS: usize = 405;

/// Training overrides for one model family.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub window: Option<usize>,
    pub learning_rate: Option<f64>,
    pub decay: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub activation: Option<Activation>,
    pub l2: Option<f64>,
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub inventory: Option<PathBuf>,
    pub letters: Option<PathBuf>,
    pub allophones: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub g2p_model: Option<PathBuf>,
    pub probes: Option<PathBuf>,
    pub train_words: Option<usize>,
    pub test_words: Option<usize>,
    pub postlex: ModelSection,
    pub g2p: ModelSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        toml::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.message().to_string() })
    }
}

/// Hyperparameter flags shared by the training subcommands.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct TrainFlags {
    /// Context window width in slots (odd)
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Hidden layer widths, comma-separated
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_activation)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub l2: Option<f64>,
}

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    match s {
        "sigmoid" => Ok(Activation::Sigmoid),
        "relu" => Ok(Activation::Relu),
        other => Err(format!("unknown hidden activation `{other}` (sigmoid or relu)")),
    }
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Sigmoid => "sigmoid",
        Activation::Relu => "relu",
        Activation::Softmax => "softmax",
    }
}

/// Ordered `key=value` record of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn record(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    #[cfg(test)]
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Resolves values against the config file and records them.
pub struct Resolver {
    pub file: FileConfig,
    pub manifest: Manifest,
}

impl Resolver {
    pub fn new(file: FileConfig, command: &str) -> Self {
        let mut manifest = Manifest::default();
        manifest.record("command", command);
        Resolver { file, manifest }
    }

    pub fn value<T: Display + Clone>(&mut self, key: &str, flag: Option<T>, file: Option<T>, default: T) -> T {
        let v = flag.or(file).unwrap_or(default);
        self.manifest.record(key, &v);
        v
    }

    /// Optional path; `None` means the bundled resource. The path must exist.
    pub fn path(&mut self, key: &str, flag: Option<PathBuf>, file: Option<PathBuf>) -> Result<Option<PathBuf>> {
        self.resolve_path(key, flag, file, "bundled")
    }

    /// Optional path with no bundled fallback.
    pub fn optional_path(&mut self, key: &str, flag: Option<PathBuf>, file: Option<PathBuf>) -> Result<Option<PathBuf>> {
        self.resolve_path(key, flag, file, "none")
    }

    fn resolve_path(&mut self, key: &str, flag: Option<PathBuf>, file: Option<PathBuf>, absent: &str) -> Result<Option<PathBuf>> {
        let p = flag.or(file);
        match &p {
            Some(path) => {
                if !path.exists() {
                    return Err(CliError::MissingFile { key: key.to_string(), path: path.clone() });
                }
                self.manifest.record(key, path.display());
            }
            None => self.manifest.record(key, absent),
        }
        Ok(p)
    }

    /// Path that has no bundled fallback.
    pub fn required_path(&mut self, key: &str, flag: Option<PathBuf>, file: Option<PathBuf>) -> Result<PathBuf> {
        match self.optional_path(key, flag, file)? {
            Some(p) => Ok(p),
            None => Err(CliError::Usage(format!("--{key} is required (flag or config file)"))),
        }
    }

    /// Output path; recorded but not required to exist.
    pub fn output(&mut self, key: &str, path: &Path) {
        self.manifest.record(key, path.display());
    }

    pub fn seed(&mut self, flag: Option<u64>) -> u64 {
        let file = self.file.seed;
        self.value("seed", flag, file, DEFAULT_SEED)
    }

    /// Hyperparameters for the `postlex` or `g2p` family.
    pub fn hyperparams(&mut self, family: &str, flags: &TrainFlags, defaults: Hyperparams, seed: u64) -> Hyperparams {
        let sec = if family == "postlex" { self.file.postlex.clone() } else { self.file.g2p.clone() };
        let k = |name: &str| format!("{family}.{name}");
        let hidden_default = defaults.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let hidden = flags.hidden.clone().or(sec.hidden).map(|h| h.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
        let hidden = self.value(&k("hidden"), hidden, None, hidden_default);
        let activation = flags.activation.or(sec.activation).unwrap_or(defaults.activation);
        self.manifest.record(&k("activation"), activation_name(activation));
        Hyperparams {
            learning_rate: self.value(&k("learning_rate"), flags.learning_rate, sec.learning_rate, defaults.learning_rate),
            decay: self.value(&k("decay"), flags.decay, sec.decay, defaults.decay),
            epochs: self.value(&k("epochs"), flags.epochs, sec.epochs, defaults.epochs),
            batch_size: self.value(&k("batch_size"), flags.batch_size, sec.batch_size, defaults.batch_size),
            hidden: hidden.split(',').filter(|s| !s.is_empty()).map(|s| s.parse().expect("widths were rendered from usize")).collect(),
            activation,
            l2: self.value(&k("l2"), flags.l2, sec.l2, defaults.l2),
            seed,
        }
    }

    pub fn window(&mut self, family: &str, flag: Option<usize>, default: usize) -> usize {
        let file = if family == "postlex" { self.file.postlex.window } else { self.file.g2p.window };
        self.value(&format!("{family}.window"), flag, file, default)
    }
}
