//! End-to-end runs: split, sample, store, train, evaluate.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{derive_seed, parse_metric, ExperimentConfig, ManifestInfo, MetricChoice};
use super::split::{split_inductive, split_queries, DataSplit, SplitFractions, SplitSet};
use super::Dataset;
use crate::error::StageExt;
use crate::metrics::{self, MetricRecord, RankedQueryScores};
use crate::model::{train, EpochRecord, ModelParams, TrainConfig, TrainContext};
use crate::sampling::sample_all;
use crate::spg::{build_spg, SpG, SpgStats};
use crate::{Error, Graph, Result};

pub const MODEL: &str = "sgrl";
pub const BASELINE: &str = "degree_product";

/// Seeds used by one repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RepeatSeeds {
    pub master: u64,
    pub split: u64,
    pub sampler: u64,
    pub train: u64,
}

impl RepeatSeeds {
    pub fn new(cfg: &ExperimentConfig, repeat: usize) -> Self {
        let master = cfg.run.seed.wrapping_add(repeat as u64);
        Self {
            master,
            split: derive_seed(master, cfg.split.rng_seed, 1),
            sampler: derive_seed(master, cfg.sampler.rng_seed, 2),
            train: derive_seed(master, cfg.train.rng_seed, 3),
        }
    }
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Split {
        repeat: usize,
        train: usize,
        valid: usize,
        test: usize,
        masked_arcs: usize,
    },
    Spg {
        repeat: usize,
        #[serde(flatten)]
        stats: SpgStats,
    },
    Training {
        repeat: usize,
        epochs_run: usize,
        best_epoch: usize,
        final_loss: f64,
    },
    Metric {
        repeat: usize,
        model: String,
        split: String,
        #[serde(flatten)]
        record: MetricRecord,
    },
    Summary {
        model: String,
        metric: String,
        mean: f64,
        std: f64,
        repeats: usize,
    },
}

/// Everything a run reports. `records` holds no timing data, so equal
/// configs give byte-identical [`ExperimentReport::to_jsonl`] output.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub seeds: Vec<RepeatSeeds>,
    pub records: Vec<Record>,
    /// Per-repeat epoch history (includes wall-clock times).
    pub history: Vec<Vec<EpochRecord>>,
}

impl ExperimentReport {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).map_err(|e| Error::Internal(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Test values of `metric` for `model`, one per repeat.
    pub fn values(&self, model: &str, metric: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| match r {
                Record::Metric {
                    model: m,
                    split,
                    record,
                    ..
                } if m == model && split == "test" && record.metric == metric => Some(record.value),
                _ => None,
            })
            .collect()
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn fractions(cfg: &ExperimentConfig) -> SplitFractions {
    SplitFractions {
        train: cfg.split.train_fraction,
        valid: cfg.split.valid_fraction,
        test: cfg.split.test_fraction,
    }
}

/// The split of one repeat; deterministic in the config and repeat index.
pub fn make_split(
    cfg: &ExperimentConfig,
    data: &Dataset,
    seeds: &RepeatSeeds,
) -> Result<DataSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.split);
    let s = &cfg.split;
    match &data.queries {
        Some(q) => split_queries(
            &data.graph,
            q,
            fractions(cfg),
            s.k_neg,
            s.eval_negatives,
            &mut rng,
        ),
        None => split_inductive(
            &data.graph,
            fractions(cfg),
            s.k_neg,
            s.eval_negatives,
            &mut rng,
        ),
    }
}

/// Samples every node of `graph` and consolidates the result.
pub fn build_store(cfg: &ExperimentConfig, graph: &Graph, sampler_seed: u64) -> Result<SpG> {
    let spec = cfg.sampler.spec(sampler_seed);
    let samples = sample_all(graph, &spec, cfg.run.threads).stage("sample")?;
    build_spg(&samples).stage("spg")
}

/// Product of node degrees in `g`.
pub fn degree_product(g: &Graph, q: &crate::Query) -> f64 {
    q.nodes().iter().map(|&u| g.degree(u) as f64).product()
}

/// Metrics of one scored split. `pos` and `neg` follow [`SplitSet`] order.
pub fn split_metrics(
    set: &SplitSet,
    pos: &[f64],
    neg: &[f64],
    hits: &[usize],
) -> Result<Vec<MetricRecord>> {
    let mut out = Vec::new();
    if set.is_empty() || set.negatives_per_positive == 0 {
        return Ok(out);
    }
    let scores: Vec<f64> = pos.iter().chain(neg).copied().collect();
    let labels: Vec<bool> = (0..scores.len()).map(|i| i < pos.len()).collect();
    out.push(MetricRecord {
        metric: "auc".into(),
        value: metrics::auc(&scores, &labels)?,
        n_queries: scores.len(),
        ties: metrics::count_score_ties(&scores),
    });
    let k = set.negatives_per_positive;
    let ranked: Vec<RankedQueryScores> = pos
        .iter()
        .enumerate()
        .map(|(i, &p)| RankedQueryScores::new(p, neg[i * k..(i + 1) * k].to_vec()))
        .collect();
    let ties = metrics::count_rank_ties(&ranked);
    out.push(MetricRecord {
        metric: "mrr".into(),
        value: metrics::mrr(&ranked)?,
        n_queries: ranked.len(),
        ties,
    });
    for &p in hits {
        out.push(MetricRecord {
            metric: format!("hits@{p}"),
            value: metrics::hits_at(&ranked, p)?,
            n_queries: ranked.len(),
            ties,
        });
    }
    Ok(out)
}

fn model_metrics(
    ctx: &TrainContext,
    params: &ModelParams,
    set: &SplitSet,
    hits: &[usize],
) -> Result<Vec<MetricRecord>> {
    let pos = ctx.score(params, &set.positives)?;
    let neg = ctx.score(params, &set.negatives)?;
    split_metrics(set, &pos, &neg, hits)
}

fn baseline_metrics(g: &Graph, set: &SplitSet, hits: &[usize]) -> Result<Vec<MetricRecord>> {
    let pos: Vec<f64> = set.positives.iter().map(|q| degree_product(g, q)).collect();
    let neg: Vec<f64> = set.negatives.iter().map(|q| degree_product(g, q)).collect();
    split_metrics(set, &pos, &neg, hits)
}

fn metric_records(
    repeat: usize,
    model: &str,
    split: &str,
    recs: Vec<MetricRecord>,
) -> impl Iterator<Item = Record> {
    let model = model.to_string();
    let split = split.to_string();
    recs.into_iter().map(move |record| Record::Metric {
        repeat,
        model: model.clone(),
        split: split.clone(),
        record,
    })
}

fn summaries(records: &[Record], repeats: usize) -> Vec<Record> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        if let Record::Metric {
            model,
            split,
            record,
            ..
        } = r
        {
            let key = (model.clone(), record.metric.clone());
            if split == "test" && !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    let report = ExperimentReport {
        config_hash: String::new(),
        seeds: Vec::new(),
        records: records.to_vec(),
        history: Vec::new(),
    };
    keys.into_iter()
        .map(|(model, metric)| {
            let (mean, std) = mean_std(&report.values(&model, &metric));
            Record::Summary {
                model,
                metric,
                mean,
                std,
                repeats,
            }
        })
        .collect()
}

fn repeat_dir(out: &Path, repeat: usize) -> PathBuf {
    out.join(format!("repeat-{repeat}"))
}

pub const SPG_FILE: &str = "spg.bin";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.jsonl";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const MANIFEST_FILE: &str = "manifest.toml";

fn write_artifacts(
    dir: &Path,
    spg: &SpG,
    params: &ModelParams,
    history: &[EpochRecord],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join(SPG_FILE))?);
    spg.write_snapshot(&mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join(CHECKPOINT_FILE))?);
    params.write_checkpoint(&mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join(HISTORY_FILE))?);
    for e in history {
        writeln!(
            w,
            "{}",
            serde_json::to_string(e).map_err(|e| Error::Internal(e.to_string()))?
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the config, with its hash, seeds and crate version, as TOML.
pub fn write_manifest(cfg: &ExperimentConfig, seeds: &[RepeatSeeds], path: &Path) -> Result<()> {
    let mut m = cfg.clone();
    m.manifest = Some(ManifestInfo {
        config_hash: cfg.hash()?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds: seeds.iter().map(|s| s.master).collect(),
    });
    fs::write(path, m.to_toml_string()?)?;
    Ok(())
}

fn train_config(cfg: &ExperimentConfig, seeds: &RepeatSeeds) -> TrainConfig {
    TrainConfig {
        rng_seed: seeds.train,
        ..cfg.train.clone()
    }
}

/// Runs every repeat of `cfg`. With `out_dir`, writes the manifest, the
/// metric report and per-repeat SpG snapshot, checkpoint and history.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = Dataset::load(&cfg.data).stage("load")?;
    let mut records = Vec::new();
    let mut history = Vec::new();
    let mut seeds = Vec::new();
    for repeat in 0..cfg.run.repeats {
        let s = RepeatSeeds::new(cfg, repeat);
        seeds.push(s);
        let split = make_split(cfg, &data, &s).stage("split")?;
        records.push(Record::Split {
            repeat,
            train: split.train.len(),
            valid: split.valid.len(),
            test: split.test.len(),
            masked_arcs: data.graph.arc_count() - split.graph.arc_count(),
        });
        let spg = build_store(cfg, &split.graph, s.sampler)?;
        records.push(Record::Spg {
            repeat,
            stats: spg.stats(),
        });
        let ctx = TrainContext {
            graph: &split.graph,
            spg: &spg,
            feature_scale: cfg.sampler.spec(s.sampler).feature_scale(),
            threads: cfg.run.threads,
        };
        let valid = split.valid.labeled();
        let outcome = train(
            &ctx,
            &split.train.labeled(),
            Some(&valid),
            cfg.model,
            &train_config(cfg, &s),
        )
        .stage("train")?;
        records.push(Record::Training {
            repeat,
            epochs_run: outcome.history.len(),
            best_epoch: outcome.best_epoch,
            final_loss: outcome.history.last().map_or(f64::NAN, |e| e.loss),
        });
        let hits = &cfg.run.hits;
        let eval = model_metrics(&ctx, &outcome.params, &split.test, hits).stage("eval")?;
        records.extend(metric_records(repeat, MODEL, "test", eval));
        let base = baseline_metrics(&split.graph, &split.test, hits).stage("eval")?;
        records.extend(metric_records(repeat, BASELINE, "test", base));
        if let Some(out) = out_dir {
            write_artifacts(
                &repeat_dir(out, repeat),
                &spg,
                &outcome.params,
                &outcome.history,
            )
            .stage("artifacts")?;
        }
        history.push(outcome.history);
    }
    records.extend(summaries(&records, cfg.run.repeats));
    let report = ExperimentReport {
        config_hash: cfg.hash()?,
        seeds,
        records,
        history,
    };
    if let Some(out) = out_dir {
        fs::create_dir_all(out)?;
        write_manifest(cfg, &report.seeds, &out.join(MANIFEST_FILE))?;
        fs::write(out.join(METRICS_FILE), report.to_jsonl()?)?;
    }
    Ok(report)
}

/// Re-scores the test split of every repeat from the snapshot and
/// checkpoint a previous [`run_experiment`] left in `out_dir`.
pub fn evaluate_saved(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = Dataset::load(&cfg.data).stage("load")?;
    let mut records = Vec::new();
    let mut seeds = Vec::new();
    for repeat in 0..cfg.run.repeats {
        let s = RepeatSeeds::new(cfg, repeat);
        seeds.push(s);
        let split = make_split(cfg, &data, &s).stage("split")?;
        let dir = repeat_dir(out_dir, repeat);
        let spg =
            SpG::read_snapshot(BufReader::new(File::open(dir.join(SPG_FILE))?)).stage("load")?;
        let params =
            ModelParams::read_checkpoint(BufReader::new(File::open(dir.join(CHECKPOINT_FILE))?))
                .stage("load")?;
        let ctx = TrainContext {
            graph: &split.graph,
            spg: &spg,
            feature_scale: cfg.sampler.spec(s.sampler).feature_scale(),
            threads: cfg.run.threads,
        };
        let hits = &cfg.run.hits;
        let eval = model_metrics(&ctx, &params, &split.test, hits).stage("eval")?;
        records.extend(metric_records(repeat, MODEL, "test", eval));
        let base = baseline_metrics(&split.graph, &split.test, hits).stage("eval")?;
        records.extend(metric_records(repeat, BASELINE, "test", base));
    }
    records.extend(summaries(&records, cfg.run.repeats));
    Ok(ExperimentReport {
        config_hash: cfg.hash()?,
        seeds,
        records,
        history: Vec::new(),
    })
}

/// The configured headline metric's name as it appears in records.
pub fn headline_metric(cfg: &ExperimentConfig) -> Result<String> {
    Ok(match parse_metric(&cfg.run.metric)? {
        MetricChoice::Auc => "auc".into(),
        MetricChoice::Mrr => "mrr".into(),
        MetricChoice::Hits(p) => format!("hits@{p}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dir: &Path) -> ExperimentConfig {
        let edges = dir.join("edges.txt");
        fs::write(&edges, "0 1\n1 2\n2 3\n3 0\n").unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.data.edges = Some(edges);
        cfg.split.train_fraction = 0.5;
        cfg.split.valid_fraction = 0.25;
        cfg.split.test_fraction = 0.25;
        cfg.split.k_neg = 1;
        cfg.split.eval_negatives = 2;
        cfg.train.epochs = 1;
        cfg.sampler.num_walks = 4;
        cfg.model.hidden = 4;
        cfg
    }

    #[test]
    fn degenerate_graph_completes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let out = dir.path().join("out");
        let report = run_experiment(&cfg, Some(&out)).unwrap();
        let kinds: Vec<&str> = report
            .records
            .iter()
            .map(|r| match r {
                Record::Split { .. } => "split",
                Record::Spg { .. } => "spg",
                Record::Training { .. } => "training",
                Record::Metric { .. } => "metric",
                Record::Summary { .. } => "summary",
            })
            .collect();
        for k in ["split", "spg", "training", "metric", "summary"] {
            assert!(kinds.contains(&k), "missing {k}");
        }
        for f in [MANIFEST_FILE, METRICS_FILE] {
            assert!(out.join(f).exists());
        }
        for f in [SPG_FILE, CHECKPOINT_FILE, HISTORY_FILE] {
            assert!(out.join("repeat-0").join(f).exists());
        }
        let again = evaluate_saved(&cfg, &out).unwrap();
        assert_eq!(again.values(MODEL, "auc"), report.values(MODEL, "auc"));
        assert_eq!(again.values(MODEL, "mrr"), report.values(MODEL, "mrr"));
    }

    #[test]
    fn repeats_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.run.repeats = 2;
        let a = run_experiment(&cfg, None).unwrap();
        let b = run_experiment(&cfg, None).unwrap();
        assert_eq!(a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
        assert_eq!(a.values(MODEL, "auc").len(), 2);
        assert_ne!(a.seeds[0], a.seeds[1]);
    }

    #[test]
    fn stage_labels() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.split.train_fraction = 0.01;
        let err = run_experiment(&cfg, None).unwrap_err();
        assert!(err.to_string().starts_with("split:"), "{err}");
    }

    #[test]
    fn statistics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
