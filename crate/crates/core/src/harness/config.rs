//! Experiment configuration: a sectioned `key = value` TOML file whose keys
//! can each be overridden from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{Aggr, ModelSpec, TrainConfig};
use crate::sampling::{PprConfig, SamplerSpec, SetSampler, StructureEncoder, WalkConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Sbm,
    Ring,
    Ba,
}

/// Input data: an edge list on disk, or a synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub edges: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub standardize_attributes: bool,
    /// Positive queries of arbitrary arity (header `arity=<k>`); when set,
    /// these are split instead of graph edges.
    pub queries: Option<PathBuf>,
    pub generator: GeneratorKind,
    pub nodes: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Neighbours on each side for the ring lattice.
    pub ring_neighbors: usize,
    /// Edges attached per new node for preferential attachment.
    pub ba_edges: usize,
    pub generator_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            edges: None,
            attributes: None,
            standardize_attributes: false,
            queries: None,
            generator: GeneratorKind::Sbm,
            nodes: 2000,
            blocks: 4,
            p_in: 0.05,
            p_out: 0.005,
            ring_neighbors: 1,
            ba_edges: 3,
            generator_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    /// Negatives per training positive.
    pub k_neg: usize,
    /// Negatives per validation/test positive.
    pub eval_negatives: usize,
    pub rng_seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.05,
            valid_fraction: 0.01,
            test_fraction: 0.01,
            k_neg: 10,
            eval_negatives: 100,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Walk,
    Ppr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Lp,
    Spd,
    Ppr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub sampler: SamplerKind,
    pub encoder: EncoderKind,
    #[serde(rename = "M")]
    pub num_walks: u32,
    #[serde(rename = "m")]
    pub num_steps: u32,
    #[serde(rename = "K")]
    pub top_k: usize,
    pub alpha: f64,
    pub epsilon: f64,
    /// SPD cap; defaults to `m`.
    pub d_max: Option<u32>,
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let ppr = PprConfig::default();
        Self {
            sampler: SamplerKind::Walk,
            encoder: EncoderKind::Lp,
            num_walks: 100,
            num_steps: 3,
            top_k: ppr.top_k,
            alpha: ppr.alpha,
            epsilon: ppr.epsilon,
            d_max: None,
            rng_seed: 0,
        }
    }
}

impl SamplerConfig {
    /// Sampler spec with the walk seed replaced by `rng_seed`.
    pub fn spec(&self, rng_seed: u64) -> SamplerSpec {
        let sampler = match self.sampler {
            SamplerKind::Walk => SetSampler::Walk(WalkConfig {
                num_walks: self.num_walks,
                num_steps: self.num_steps,
                rng_seed,
            }),
            SamplerKind::Ppr => SetSampler::Ppr(PprConfig {
                alpha: self.alpha,
                epsilon: self.epsilon,
                top_k: self.top_k,
            }),
        };
        let encoder = match self.encoder {
            EncoderKind::Lp => StructureEncoder::Lp,
            EncoderKind::Ppr => StructureEncoder::Ppr,
            EncoderKind::Spd => StructureEncoder::Spd {
                d_max: self.d_max.unwrap_or(self.num_steps),
            },
        };
        SamplerSpec { sampler, encoder }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub threads: usize,
    /// Master seed mixed into every component seed.
    pub seed: u64,
    pub repeats: usize,
    /// Metric used for early stopping and headline reporting:
    /// `auc`, `mrr` or `hits@<P>`.
    pub metric: String,
    /// P values reported as Hits@P.
    pub hits: Vec<usize>,
    pub out_dir: Option<PathBuf>,
    /// Thread counts measured by `join-bench`.
    pub bench_threads: Vec<usize>,
    pub bench_queries: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            threads: 1,
            seed: 0,
            repeats: 1,
            metric: "auc".into(),
            hits: vec![10, 50, 100],
            out_dir: None,
            bench_threads: vec![1, 2, 4, 8],
            bench_queries: 10_000,
        }
    }
}

/// Provenance block written into run manifests; ignored as input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestInfo {
    pub config_hash: String,
    pub version: String,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub sampler: SamplerConfig,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub run: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

const SECTIONS: [&str; 6] = ["data", "split", "sampler", "model", "train", "run"];

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes relative data paths relative to the config file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.data.edges,
            &mut self.data.attributes,
            &mut self.data.queries,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialization, manifest block excluded.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.manifest = None;
        let digest = Sha256::digest(c.to_toml_string()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Applies `key=value` overrides. A key is either `section.key` or a
    /// bare key that occurs in exactly one section. Values are parsed as
    /// TOML literals and fall back to plain strings.
    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<()> {
        if overrides.is_empty() {
            return Ok(());
        }
        let mut table: toml::Table =
            toml::from_str(&self.to_toml_string()?).map_err(|e| Error::Config(e.to_string()))?;
        let defaults: toml::Table = toml::from_str(&ExperimentConfig::default().to_toml_string()?)
            .map_err(|e| Error::Config(e.to_string()))?;
        for (key, raw) in overrides {
            let (section, field) = match key.split_once('.') {
                Some((s, f)) => (s.to_string(), f.to_string()),
                None => {
                    let owners: Vec<&str> = SECTIONS
                        .iter()
                        .copied()
                        .filter(|s| {
                            known_key(&defaults, s, key)
                                || known_key(&table, s, key)
                                || optional_key(s, key)
                        })
                        .collect();
                    match owners.as_slice() {
                        [one] => (one.to_string(), key.clone()),
                        [] => return Err(Error::Config(format!("unknown key `{key}`"))),
                        many => {
                            return Err(Error::Config(format!(
                                "key `{key}` is ambiguous; qualify it as one of {}",
                                many.iter()
                                    .map(|s| format!("{s}.{key}"))
                                    .collect::<Vec<_>>()
                                    .join(", ")
                            )))
                        }
                    }
                }
            };
            if !SECTIONS.contains(&section.as_str()) {
                return Err(Error::Config(format!("unknown section `{section}`")));
            }
            let value = parse_value(raw);
            table
                .entry(section)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config("section is not a table".into()))?
                .insert(field, value);
        }
        let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        *self = Self::from_toml_str(&text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.split;
        for f in [s.train_fraction, s.valid_fraction, s.test_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!("split fraction {f} outside [0, 1]")));
            }
        }
        if s.train_fraction + s.valid_fraction + s.test_fraction > 1.0 + 1e-12 {
            return Err(Error::Config("split fractions sum above 1".into()));
        }
        for p in [&self.data.edges, &self.data.attributes, &self.data.queries]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.model.hidden == 0 {
            return Err(Error::Config("model.hidden must be positive".into()));
        }
        if self.run.threads == 0 || self.run.repeats == 0 {
            return Err(Error::Config(
                "run.threads and run.repeats must be positive".into(),
            ));
        }
        parse_metric(&self.run.metric)?;
        self.sampler.spec(0).validate()?;
        self.train.validate()?;
        Ok(())
    }
}

fn known_key(table: &toml::Table, section: &str, key: &str) -> bool {
    table
        .get(section)
        .and_then(toml::Value::as_table)
        .is_some_and(|t| t.contains_key(key))
}

/// Optional keys that serialize to nothing while unset.
fn optional_key(section: &str, key: &str) -> bool {
    matches!(
        (section, key),
        ("data", "edges" | "attributes" | "queries") | ("sampler", "d_max") | ("run", "out_dir")
    )
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Headline metric selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricChoice {
    Auc,
    Mrr,
    Hits(usize),
}

pub fn parse_metric(name: &str) -> Result<MetricChoice> {
    match name {
        "auc" => Ok(MetricChoice::Auc),
        "mrr" => Ok(MetricChoice::Mrr),
        other => other
            .strip_prefix("hits@")
            .and_then(|p| p.parse().ok())
            .filter(|&p| p > 0)
            .map(MetricChoice::Hits)
            .ok_or_else(|| Error::Config(format!("unknown metric `{other}`"))),
    }
}

/// Mixes a master seed and a component seed into one stream seed.
pub fn derive_seed(master: u64, component: u64, salt: u64) -> u64 {
    let mut z = master
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(component.rotate_left(17))
        .wrapping_add(salt.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Aggr {
    pub fn name(self) -> &'static str {
        match self {
            Aggr::Mean => "mean",
            Aggr::Attention => "attention",
        }
    }
}
