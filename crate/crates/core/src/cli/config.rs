//! Run configuration: defaults, then a flat file of dotted keys
//! (`model.lstm_hidden = 64`), then `--set key=value`, then explicit flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::lexfeat::SchemaConfig;
use crate::model::ModelConfig;
use crate::seed;
use crate::selftrain::SelfTrainConfig;

/// Optional prefix for relative data paths.
pub const DATA_ROOT_ENV: &str = "SUGMINE_DATA_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub labeled: Option<PathBuf>,
    pub unlabeled: Option<PathBuf>,
    pub unlabeled_limit: Option<usize>,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: usize,
    /// Fixture file of parses, used instead of a live parser.
    pub annotations: Option<PathBuf>,
    /// External parser command speaking the fixture record format.
    pub parser_cmd: Option<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            labeled: None,
            unlabeled: None,
            unlabeled_limit: None,
            embeddings: None,
            embedding_dim: crate::embed::DEFAULT_DIM,
            annotations: None,
            parser_cmd: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfTrainSettings {
    pub per_class_add: usize,
    pub max_iterations: usize,
    pub patience: usize,
}

impl Default for SelfTrainSettings {
    fn default() -> Self {
        let d = SelfTrainConfig::default();
        SelfTrainSettings {
            per_class_add: d.per_class_add,
            max_iterations: d.max_iterations,
            patience: d.patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub folds: usize,
    /// Fold-level worker threads.
    pub jobs: usize,
    pub validation_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            jobs: 1,
            validation_fraction: crate::corpus::DEFAULT_VALIDATION_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    F32,
    F64,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub scalar: ScalarKind,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub selftrain: SelfTrainSettings,
    pub features: SchemaConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("sugmine-out"),
            scalar: ScalarKind::F32,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            selftrain: SelfTrainSettings::default(),
            features: SchemaConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    /// The model seed is not set directly; it derives from the run seed.
    pub fn model_seed(&self) -> u64 {
        seed::sub_seed(self.seed, &["model"])
    }

    pub fn fold_seed(&self) -> u64 {
        seed::sub_seed(self.seed, &["folds"])
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            seed: self.model_seed(),
            ..self.model.clone()
        }
    }

    pub fn selftrain_config(&self) -> SelfTrainConfig {
        SelfTrainConfig {
            per_class_add: self.selftrain.per_class_add,
            max_iterations: self.selftrain.max_iterations,
            patience: self.selftrain.patience,
            base_model_config: self.model_config(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Set a dotted key inside nested tables.
fn set_dotted(root: &mut Table, key: &str, value: Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.trim().is_empty()) {
        return Err(bad(format!("malformed key {key:?}")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| bad(format!("{key}: {part} is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn merge(base: &mut Table, layer: Table) {
    for (k, v) in layer {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(l)) => merge(b, l),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parse the right-hand side of `--set key=value`: a TOML value, or a bare
/// string when it does not parse as one.
pub fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// One layer of overrides: `(dotted key, value)` pairs applied in order.
pub type Overrides = Vec<(String, Value)>;

pub fn parse_assignment(raw: &str) -> Result<(String, Value), ConfigError> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| bad(format!("expected key=value, got {raw:?}")))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

/// Layer defaults, the config file, `--set` assignments and flag values.
pub fn resolve(
    file: Option<&Path>,
    assignments: &[String],
    flags: Overrides,
) -> Result<RunConfig, ConfigError> {
    let mut table = match Value::try_from(RunConfig::default()) {
        Ok(Value::Table(t)) => t,
        _ => unreachable!("defaults serialise to a table"),
    };
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        let layer: Table = text
            .parse()
            .map_err(|e| bad(format!("config {}: {e}", path.display())))?;
        if layer
            .get("model")
            .and_then(Value::as_table)
            .is_some_and(|m| m.contains_key("seed"))
        {
            return Err(bad("model.seed is derived from the top-level `seed`; set that instead"));
        }
        merge(&mut table, layer);
    }
    let mut layers = Vec::new();
    for a in assignments {
        layers.push(parse_assignment(a)?);
    }
    layers.extend(flags);
    for (key, value) in layers {
        if key == "model.seed" {
            return Err(bad("model.seed is derived from the top-level `seed`; set that instead"));
        }
        set_dotted(&mut table, &key, value)?;
    }
    let mut config: RunConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| bad(format!("invalid configuration: {}", e.message())))?;
    config.model.seed = config.model_seed();
    config
        .model
        .validate()
        .map_err(|e| bad(format!("invalid configuration: {e}")))?;
    config
        .selftrain_config()
        .validate()
        .map_err(|e| bad(format!("invalid configuration: {e}")))?;
    if config.eval.folds < 2 {
        return Err(bad("eval.folds must be at least 2"));
    }
    Ok(config)
}

/// Resolve `path` against the data-root variable when it is relative.
pub fn data_path(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_ROOT_ENV) {
        Some(root) if path.is_relative() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn layers_apply_in_order() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "seed = 3\nmodel.lstm_hidden = 32\neval.folds = 10").unwrap();
        let c = resolve(
            Some(f.path()),
            &["model.lstm_hidden=16".into(), "model.variant=cnn_only".into()],
            vec![("eval.folds".into(), Value::Integer(4))],
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.model.lstm_hidden, 16);
        assert_eq!(c.model.variant, crate::model::Variant::CnnOnly);
        assert_eq!(c.eval.folds, 4);
        assert_eq!(c.model.cnn_filters, 250);
        assert_eq!(c.model.seed, c.model_seed());
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(resolve(None, &["model.lstm_hiden=3".into()], vec![]).is_err());
        assert!(resolve(None, &["model.cnn_dropout=1.5".into()], vec![]).is_err());
        assert!(resolve(None, &["model.seed=1".into()], vec![]).is_err());
        assert!(resolve(None, &["nonsense".into()], vec![]).is_err());
    }

    #[test]
    fn bare_strings_accepted() {
        let c = resolve(None, &["data.labeled=data/hotel.tsv".into()], vec![]).unwrap();
        assert_eq!(c.data.labeled.unwrap(), PathBuf::from("data/hotel.tsv"));
    }
}
