use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassifierSpec, TrainConfig};
use crate::signals::{SignalSource, DEFAULT_TEMPLATE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub schema: PathBuf,
    pub train_corpus: PathBuf,
    pub test_corpus: PathBuf,
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
    #[serde(default = "default_mlm_cache")]
    pub mlm_cache: PathBuf,
    #[serde(default = "default_embed_cache")]
    pub embed_cache: PathBuf,
    #[serde(default = "default_pos_cache")]
    pub pos_cache: PathBuf,
}

fn default_work_dir() -> PathBuf {
    "work".into()
}

fn default_mlm_cache() -> PathBuf {
    "cache/mlm.jsonl".into()
}

fn default_embed_cache() -> PathBuf {
    "cache/embed.jsonl".into()
}

fn default_pos_cache() -> PathBuf {
    "cache/pos.jsonl".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub endpoint: String,
    /// Model identifier; part of every cache key.
    pub model: String,
    /// Embedding dimension. Queried from the service when absent.
    pub dim: Option<usize>,
    pub max_input_tokens: usize,
    pub parallelism: usize,
    pub template: String,
    pub layer: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            endpoint: "http://127.0.0.1:8000".into(),
            model: "bert-base-uncased".into(),
            dim: None,
            max_input_tokens: 512,
            parallelism: 4,
            template: DEFAULT_TEMPLATE.into(),
            layer: "last".into(),
        }
    }
}

/// Classifier architecture; input dimension and class count come from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum ClassifierChoice {
    #[default]
    MeanpoolSoftmax,
    Conv {
        #[serde(default = "default_windows")]
        windows: Vec<usize>,
        #[serde(default = "default_filters")]
        filters: usize,
    },
}

fn default_windows() -> Vec<usize> {
    vec![2, 3, 4, 5]
}

fn default_filters() -> usize {
    100
}


impl ClassifierChoice {
    pub fn spec(&self, input_dim: usize, classes: usize) -> ClassifierSpec {
        match self {
            ClassifierChoice::MeanpoolSoftmax => ClassifierSpec::meanpool(input_dim, classes),
            ClassifierChoice::Conv { windows, filters } => ClassifierSpec::Conv {
                input_dim,
                windows: windows.clone(),
                filters: *filters,
                classes,
            },
        }
    }
}

fn default_source() -> SignalSource {
    SignalSource::Mlm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_source")]
    pub source: SignalSource,
    pub paths: PathsConfig,
    #[serde(default)]
    pub service: ServiceConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub classifier: ClassifierChoice,
}

impl PipelineConfig {
    pub fn new(paths: PathsConfig) -> Self {
        PipelineConfig {
            source: SignalSource::Mlm,
            paths,
            service: ServiceConfig::default(),
            train: TrainConfig::default(),
            classifier: ClassifierChoice::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::validation(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        for path in [
            &mut p.schema,
            &mut p.train_corpus,
            &mut p.test_corpus,
            &mut p.work_dir,
            &mut p.mlm_cache,
            &mut p.embed_cache,
            &mut p.pos_cache,
        ] {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.service.parallelism == 0 {
            return Err(Error::validation("service.parallelism must be positive"));
        }
        if self.service.max_input_tokens == 0 {
            return Err(Error::validation("service.max_input_tokens must be positive"));
        }
        if let ClassifierChoice::Conv { windows, filters } = &self.classifier {
            if windows.is_empty() || windows.contains(&0) || *filters == 0 {
                return Err(Error::validation("conv classifier needs positive windows and filters"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[paths]
schema = "labels.txt"
train_corpus = "train.jsonl"
test_corpus = "test.jsonl"
"#;

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.source, SignalSource::Mlm);
        assert_eq!(c.train, TrainConfig::default());
        assert_eq!(c.classifier, ClassifierChoice::MeanpoolSoftmax);
        assert_eq!(c.service.template, DEFAULT_TEMPLATE);
        assert_eq!(c.paths.work_dir, PathBuf::from("work"));
    }

    #[test]
    fn round_trip_and_paths() {
        let mut c = PipelineConfig::from_toml(&format!(
            "source = \"doc\"\n{MINIMAL}\n[train]\nk = 10\n\n[classifier]\nkind = \"conv\"\nfilters = 8\n"
        ))
        .unwrap();
        assert_eq!(c.train.k, 10);
        assert_eq!(
            c.classifier,
            ClassifierChoice::Conv {
                windows: vec![2, 3, 4, 5],
                filters: 8
            }
        );
        let back = PipelineConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        c.resolve_paths(Path::new("/data"));
        assert_eq!(c.paths.schema, PathBuf::from("/data/labels.txt"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(PipelineConfig::from_toml(&format!("{MINIMAL}\n[train]\nlearning_rte = 1.0\n")).is_err());
        assert!(PipelineConfig::from_toml(&format!("{MINIMAL}\n[train]\nt = 0.5\n")).is_err());
    }
}
