use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};

use noniid_core::eval::{ModelSpec, SplitSpec};
use noniid_core::store::{
    discretize, load_movielens_100k, parse_generic_csv, parse_generic_ratings_csv, parse_movielens_items_with,
    parse_schema, read_canonical, AttributeTable, Dataset, DiscretizationSpec, ItemAttributeMode, RatingScale,
    Side, Strategy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[value(name = "movielens100k")]
    Movielens100k,
    Csv,
    Canonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ItemAttributes {
    #[default]
    Derived,
    RawFlags,
}

fn default_scale() -> [f64; 2] {
    [1.0, 5.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub format: Format,
    /// Dataset directory; relative paths are taken from the config file.
    pub path: PathBuf,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub item_attributes: ItemAttributes,
    /// For csv: `name:kind,...` headers of users.csv and items.csv.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_schema: Option<String>,
    #[serde(default = "default_scale")]
    pub scale: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeConfig {
    pub side: Side,
    pub attribute: String,
    pub strategy: Strategy,
}

impl std::str::FromStr for DiscretizeConfig {
    type Err = String;

    /// `side:attribute=strategy`, e.g. `user:age=cuts:18,25,35`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (target, strategy) = s.split_once('=').ok_or("expected side:attribute=strategy")?;
        let (side, attribute) = target.split_once(':').ok_or("expected side:attribute=strategy")?;
        let side = match side {
            "user" => Side::User,
            "item" => Side::Item,
            other => return Err(format!("unknown side `{other}`")),
        };
        Ok(DiscretizeConfig {
            side,
            attribute: attribute.to_owned(),
            strategy: strategy.parse().map_err(|e| format!("{e}"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("runs/default"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: DatasetConfig,
    #[serde(default)]
    discretize: Vec<DiscretizeConfig>,
    #[serde(default)]
    split: SplitSpec,
    #[serde(default)]
    output: OutputConfig,
    models: BTreeMap<String, toml::Table>,
}

/// A run configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub discretize: Vec<DiscretizeConfig>,
    pub split: SplitSpec,
    pub output: OutputConfig,
    pub models: BTreeMap<String, ModelSpec>,
}

/// Marks errors in the configuration itself, as opposed to its data.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    /// Parses TOML. Relative dataset and output paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        if raw.models.is_empty() {
            return Err(ConfigError("the config lists no models".into()).into());
        }
        let mut models = BTreeMap::new();
        for (label, mut table) in raw.models {
            let kind = match table.remove("kind") {
                Some(toml::Value::String(k)) => k,
                Some(other) => bail!(ConfigError(format!("model `{label}`: kind must be a string, got {other}"))),
                None => label.clone(),
            };
            let spec = ModelSpec::from_parts(&kind, toml::Value::Table(table))
                .map_err(|e| ConfigError(format!("model `{label}`: {e}")))??;
            spec.size()?;
            models.insert(label, spec);
        }
        let mut dataset = raw.dataset;
        dataset.path = base.join(&dataset.path);
        let output = OutputConfig {
            dir: base.join(&raw.output.dir),
        };
        Ok(ExperimentConfig {
            dataset,
            discretize: raw.discretize,
            split: raw.split,
            output,
            models,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::parse(&text, base).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn model_list(&self) -> Vec<(String, ModelSpec)> {
        self.models.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}

fn optional_table(dir: &Path, file: &str, schema: Option<&str>) -> Result<Option<AttributeTable>> {
    let path = dir.join(file);
    match schema {
        Some(schema) => Ok(Some(parse_generic_csv(&path, &parse_schema(schema)?)?)),
        None => Ok(None),
    }
}

/// Loads a dataset and applies the discretisations.
pub fn load_dataset(config: &DatasetConfig, discretizations: &[DiscretizeConfig]) -> Result<Dataset> {
    let dir = &config.path;
    let mut ds = match config.format {
        Format::Movielens100k => {
            let mut ds = load_movielens_100k(dir, config.strict)?;
            if config.item_attributes == ItemAttributes::RawFlags {
                let items = parse_movielens_items_with(dir.join("u.item"), ItemAttributeMode::RawFlags)?;
                ds = Dataset::assemble(ds.ratings, ds.users, items, ds.environment, config.strict)?;
                ds.environment.insert("item_attributes".into(), "raw-flags".into());
            }
            ds
        }
        Format::Csv => {
            let scale = RatingScale::new(config.scale[0], config.scale[1])?;
            let ratings = parse_generic_ratings_csv(dir.join("ratings.csv"), scale)?;
            let users = optional_table(dir, "users.csv", config.user_schema.as_deref())?;
            let items = optional_table(dir, "items.csv", config.item_schema.as_deref())?;
            let bare = Dataset::from_ratings(ratings);
            let mut env = BTreeMap::new();
            env.insert("source".to_owned(), "csv".to_owned());
            Dataset::assemble(
                bare.ratings,
                users.unwrap_or(bare.users),
                items.unwrap_or(bare.items),
                env,
                config.strict,
            )?
        }
        Format::Canonical => read_canonical(dir)?,
    };
    for d in discretizations {
        let spec = DiscretizationSpec::new(&d.attribute, d.strategy.clone());
        let result = discretize(ds.table(d.side), &spec)?;
        for w in &result.warnings {
            log::warn!("{} {}: {w}", d.side, d.attribute);
        }
        let cuts: Vec<String> = result.cut_points.iter().map(f64::to_string).collect();
        ds.environment
            .insert(format!("discretize.{}.{}", d.side, d.attribute), format!("{} -> {}", d.strategy, cuts.join(",")));
        match d.side {
            Side::User => ds.users = result.table,
            Side::Item => ds.items = result.table,
        }
    }
    Ok(ds)
}
