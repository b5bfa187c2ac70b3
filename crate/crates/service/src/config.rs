//! `key = value` training configuration files.

use std::path::Path;

use qsearch_core::embedding::TrainingConfig;
use qsearch_core::textnorm::NormalizationConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub training: TrainingConfig,
    pub normalization: NormalizationConfig,
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, found {v:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| format!("{v:?}: {e}"))
}

impl Settings {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let t = &mut self.training;
        let n = &mut self.normalization;
        match key {
            "dim" => t.dim = parse_num(value)?,
            "window" => t.window = parse_num(value)?,
            "negatives" => t.negatives = parse_num(value)?,
            "epochs" => t.epochs = parse_num(value)?,
            "initial_lr" => t.initial_lr = parse_num(value)?,
            "min_lr" => t.min_lr = parse_num(value)?,
            "subsample_t" => t.subsample_t = parse_num(value)?,
            "seed" => t.seed = parse_num(value)?,
            "min_count" => t.min_count = parse_num(value)?,
            "strip_diacritics" => n.strip_diacritics = parse_bool(value)?,
            "normalize_alef" => n.normalize_alef = parse_bool(value)?,
            "normalize_yaa" => n.normalize_yaa = parse_bool(value)?,
            "normalize_taa_marbuta" => n.normalize_taa_marbuta = parse_bool(value)?,
            "remove_tatweel" => n.remove_tatweel = parse_bool(value)?,
            "strip_punct" => n.strip_punct = parse_bool(value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults. `#` starts a comment.
    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        let mut settings = Settings::default();
        for (i, raw) in source.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Parse { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, found {line:?}")))?;
            settings.set(key.trim(), value.trim()).map_err(err)?;
        }
        Ok(settings)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&source)
    }
}
