//! Flat key=value run configuration. Precedence: command-line flag over
//! file over built-in default.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::ranker::{FeatureSubset, LambdaMartConfig};
use crate::seq2ast::DecodeLimits;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads for parallel stages; 0 picks the library default.
    pub workers: usize,
    /// Recurrent and semantic widths, and convolution filter count.
    pub hidden: usize,
    /// Embedding width.
    pub embed: usize,
    /// Convolution window.
    pub window: usize,
    pub hash_buckets: usize,
    pub margin: f64,
    pub epochs: usize,
    /// Matcher optimizer: "sgd" or "adadelta".
    pub optimizer: String,
    pub sgd_lr: f64,
    pub em_iters: usize,
    pub phrase_len: usize,
    pub trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_per_leaf: usize,
    pub features: String,
    pub max_src_len: usize,
    pub max_fields: usize,
    pub max_words: usize,
    pub qa_table: Option<PathBuf>,
    pub para_table: Option<PathBuf>,
    pub phrase_table: Option<PathBuf>,
    pub cnn_model: Option<PathBuf>,
    pub rnn_model: Option<PathBuf>,
    pub ranker_model: Option<PathBuf>,
    pub gen_model: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 13,
            workers: 0,
            hidden: 64,
            embed: 32,
            window: 3,
            hash_buckets: 2048,
            margin: 0.5,
            epochs: 10,
            optimizer: "adadelta".into(),
            sgd_lr: 0.1,
            em_iters: 5,
            phrase_len: 3,
            trees: 100,
            learning_rate: 0.1,
            max_leaves: 8,
            min_per_leaf: 5,
            features: "all".into(),
            max_src_len: 200,
            max_fields: 8,
            max_words: 12,
            qa_table: None,
            para_table: None,
            phrase_table: None,
            cnn_model: None,
            rnn_model: None,
            ranker_model: None,
            gen_model: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key}={value}")))
}

fn parse_path(value: &str) -> Option<PathBuf> {
    if value.is_empty() {
        None
    } else {
        Some(PathBuf::from(value))
    }
}

impl RunConfig {
    /// Applies one key. Unknown keys are rejected so typos surface early.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "hidden" => self.hidden = parse_num(key, value)?,
            "embed" => self.embed = parse_num(key, value)?,
            "window" => self.window = parse_num(key, value)?,
            "hash_buckets" => self.hash_buckets = parse_num(key, value)?,
            "margin" => self.margin = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "optimizer" => self.optimizer = value.to_string(),
            "sgd_lr" => self.sgd_lr = parse_num(key, value)?,
            "em_iters" => self.em_iters = parse_num(key, value)?,
            "phrase_len" => self.phrase_len = parse_num(key, value)?,
            "trees" => self.trees = parse_num(key, value)?,
            "learning_rate" => self.learning_rate = parse_num(key, value)?,
            "max_leaves" => self.max_leaves = parse_num(key, value)?,
            "min_per_leaf" => self.min_per_leaf = parse_num(key, value)?,
            "features" => self.features = value.to_string(),
            "max_src_len" => self.max_src_len = parse_num(key, value)?,
            "max_fields" => self.max_fields = parse_num(key, value)?,
            "max_words" => self.max_words = parse_num(key, value)?,
            "qa_table" => self.qa_table = parse_path(value),
            "para_table" => self.para_table = parse_path(value),
            "phrase_table" => self.phrase_table = parse_path(value),
            "cnn_model" => self.cnn_model = parse_path(value),
            "rnn_model" => self.rnn_model = parse_path(value),
            "ranker_model" => self.ranker_model = parse_path(value),
            "gen_model" => self.gen_model = parse_path(value),
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key=value", i + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<()> {
        for pair in pairs {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::Config(format!("override {pair:?}: expected key=value"))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("hidden", self.hidden),
            ("embed", self.embed),
            ("window", self.window),
            ("hash_buckets", self.hash_buckets),
            ("epochs", self.epochs),
            ("em_iters", self.em_iters),
            ("phrase_len", self.phrase_len),
            ("trees", self.trees),
            ("max_leaves", self.max_leaves),
            ("min_per_leaf", self.min_per_leaf),
            ("max_src_len", self.max_src_len),
            ("max_fields", self.max_fields),
            ("max_words", self.max_words),
        ];
        for (name, value) in positives {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, value) in [
            ("margin", self.margin),
            ("sgd_lr", self.sgd_lr),
            ("learning_rate", self.learning_rate),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.optimizer != "sgd" && self.optimizer != "adadelta" {
            return Err(Error::Config(format!(
                "optimizer must be sgd or adadelta, got {:?}",
                self.optimizer
            )));
        }
        self.subset()?;
        Ok(())
    }

    pub fn subset(&self) -> Result<FeatureSubset> {
        FeatureSubset::parse(&self.features)
    }

    pub fn lambdamart(&self) -> LambdaMartConfig {
        LambdaMartConfig {
            trees: self.trees,
            learning_rate: self.learning_rate,
            max_leaves: self.max_leaves,
            min_per_leaf: self.min_per_leaf,
        }
    }

    pub fn limits(&self) -> DecodeLimits {
        DecodeLimits {
            max_fields: self.max_fields,
            max_words_per_field: self.max_words,
        }
    }

    /// Hyperparameters as sorted `key=value` lines. Path keys are
    /// excluded so a run's configuration hash does not depend on where
    /// its files live.
    pub fn hyper_lines(&self) -> String {
        let mut out = String::new();
        let mut pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("hidden", self.hidden.to_string()),
            ("embed", self.embed.to_string()),
            ("window", self.window.to_string()),
            ("hash_buckets", self.hash_buckets.to_string()),
            ("margin", self.margin.to_string()),
            ("epochs", self.epochs.to_string()),
            ("optimizer", self.optimizer.clone()),
            ("sgd_lr", self.sgd_lr.to_string()),
            ("em_iters", self.em_iters.to_string()),
            ("phrase_len", self.phrase_len.to_string()),
            ("trees", self.trees.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("max_leaves", self.max_leaves.to_string()),
            ("min_per_leaf", self.min_per_leaf.to_string()),
            ("features", self.features.clone()),
            ("max_src_len", self.max_src_len.to_string()),
            ("max_fields", self.max_fields.to_string()),
            ("max_words", self.max_words.to_string()),
        ];
        pairs.sort_by_key(|(k, _)| *k);
        for (key, value) in pairs {
            let _ = writeln!(out, "{key}={value}");
        }
        out
    }
}
