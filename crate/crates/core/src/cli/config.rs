//! Layered run configuration.
//!
//! Values resolve from, lowest to highest precedence: built-in defaults,
//! the TOML file given by `--config`, environment variables named
//! `MUFASA_<SECTION>__<KEY>`, dedicated flags such as `--seed`, and
//! `section.key=value` overrides on the command line. Unknown sections and
//! keys are errors at every layer.

use crate::data::DatasetSpec;
use crate::error::{Error, Result};
use crate::evolution::SearchConfig;
use crate::space::Vocabulary;
use crate::train::{ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use toml::{Table, Value};

pub const ENV_PREFIX: &str = "MUFASA_";
pub const SNAPSHOT_FILE: &str = "config.resolved.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VocabConfig {
    pub relative_dims: Vec<f64>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig { relative_dims: Vocabulary::default().relative_dims }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub search: SearchConfig,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub data: DatasetSpec,
    pub vocab: VocabConfig,
}

impl RunConfig {
    pub fn vocabulary(&self) -> Result<Vocabulary> {
        let v = Vocabulary::with_relative_dims(self.vocab.relative_dims.clone());
        v.check().map_err(Error::Config)?;
        Ok(v)
    }

    pub fn check(&self) -> Result<()> {
        self.search.check()?;
        self.train.check().map_err(as_config)?;
        self.data.check().map_err(as_config)?;
        self.vocabulary()?;
        if self.model.widths.contains(&0) {
            return Err(Error::Config("embedding widths must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}

/// Parses an override value as a TOML literal, falling back to a string.
fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn set_path(root: &mut Table, key: &str, value: Value) -> Result<()> {
    let (section, field) = key
        .split_once('.')
        .ok_or_else(|| Error::Config(format!("override key {key:?} must look like section.key")))?;
    let table = root
        .get_mut(section)
        .and_then(Value::as_table_mut)
        .ok_or_else(|| Error::Config(format!("unknown section {section:?}")))?;
    if !table.contains_key(field) {
        return Err(Error::Config(format!("unknown key {key:?}")));
    }
    table.insert(field.to_string(), value);
    Ok(())
}

/// Builds the resolved configuration.
pub fn resolve(
    file: Option<&Path>,
    env: impl IntoIterator<Item = (String, String)>,
    overrides: &[(String, String)],
) -> Result<RunConfig> {
    let base = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("reading {}: {e}", p.display())))?;
            toml::from_str::<RunConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    let mut root: Table = Table::try_from(&base).map_err(|e| Error::Internal(e.to_string()))?;
    let mut env: Vec<(String, String)> = env
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|rest| (rest.to_lowercase().replacen("__", ".", 1), v)))
        .collect();
    env.sort();
    for (key, raw) in env.iter().chain(overrides) {
        set_path(&mut root, key, parse_value(raw))?;
    }
    let cfg: RunConfig = Value::Table(root).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

/// Splits `key=value` arguments.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    args.iter()
        .map(|a| {
            a.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("override {a:?} is not key=value")))
        })
        .collect()
}
