use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::forward::{loss_and_grad, Scorer, SetInput};
use super::negative::NegativeSampler;
use super::params::{Aggr, ModelParams, ModelShape};
use crate::graph::{Graph, LabeledQuery, Query};
use crate::metrics;
use crate::spg::SpG;
use crate::spjoin::join_batch;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// `B`, queries per optimizer step (positives and negatives together).
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Negatives drawn per positive when the training set carries none.
    pub neg_per_pos: usize,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub dropout: f64,
    pub rng_seed: u64,
    /// Join and encode fixed training queries once instead of every epoch.
    pub cache_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 1e-3,
            neg_per_pos: 10,
            epochs: 20,
            patience: 5,
            dropout: 0.1,
            rng_seed: 0,
            cache_inputs: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.patience == 0 {
            return Err(Error::validation(
                "batch_size, epochs and patience must be positive",
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation(
                "learning_rate must be finite and non-negative",
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::validation("dropout must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Width and pooling of the network; arity, `k` and `d` come from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden: usize,
    pub aggr: Aggr,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hidden: 96,
            aggr: Aggr::Mean,
        }
    }
}

/// What a training or scoring run reads: the graph features are built on,
/// its frozen store, the feature scaling and the join thread count.
#[derive(Debug, Clone, Copy)]
pub struct TrainContext<'a> {
    pub graph: &'a Graph,
    pub spg: &'a SpG,
    pub feature_scale: f64,
    pub threads: usize,
}

impl TrainContext<'_> {
    pub fn shape(&self, arity: usize, spec: ModelSpec) -> ModelShape {
        ModelShape {
            arity,
            k: self.spg.feature_dim(),
            attr_dim: self.graph.attr_dim(),
            hidden: spec.hidden,
            aggr: spec.aggr,
        }
    }

    /// Joins `queries` and converts every result to model input.
    pub fn inputs(&self, queries: &[Query]) -> Result<Vec<SetInput>> {
        let joined = join_batch(self.spg, queries, self.threads)?;
        joined
            .iter()
            .map(|jq| SetInput::from_joined(jq, self.feature_scale, self.graph.attributes()))
            .collect()
    }

    /// Evaluation-mode logits of `queries`.
    pub fn score(&self, params: &ModelParams, queries: &[Query]) -> Result<Vec<f64>> {
        let mut scorer = Scorer::new(params);
        let mut out = Vec::with_capacity(queries.len());
        for chunk in queries.chunks(512) {
            for input in self.inputs(chunk)? {
                out.push(scorer.logit(&input)?);
            }
        }
        Ok(out)
    }
}

/// One line of training history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_metric: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch (the last epoch without
    /// validation data).
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

fn common_arity(queries: &[LabeledQuery]) -> Result<usize> {
    let arity = queries
        .first()
        .map(|q| q.query.arity())
        .ok_or_else(|| Error::validation("no training queries"))?;
    if queries.iter().any(|q| q.query.arity() != arity) {
        return Err(Error::validation("training queries mix arities"));
    }
    Ok(arity)
}

/// Validation AUC, or negative mean loss when only one class is present.
fn validation_metric(
    ctx: &TrainContext,
    params: &ModelParams,
    valid: &[LabeledQuery],
) -> Result<f64> {
    let queries: Vec<Query> = valid.iter().map(|q| q.query.clone()).collect();
    let logits = ctx.score(params, &queries)?;
    let labels: Vec<bool> = valid.iter().map(|q| q.label).collect();
    if labels.iter().any(|&y| y) && labels.iter().any(|&y| !y) {
        metrics::auc(&logits, &labels)
    } else {
        let targets: Vec<f64> = valid.iter().map(LabeledQuery::target).collect();
        Ok(-super::forward::bce_loss(&logits, &targets)?)
    }
}

/// Mini-batch training: (optional) negative generation, batched join,
/// encoding, BCE loss, backward pass and Adam step per batch, with early
/// stopping on the validation metric.
pub fn train(
    ctx: &TrainContext,
    train: &[LabeledQuery],
    valid: Option<&[LabeledQuery]>,
    spec: ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let arity = common_arity(train)?;
    if let Some(v) = valid {
        if v.iter().any(|q| q.query.arity() != arity) {
            return Err(Error::validation(
                "validation queries differ in arity from training",
            ));
        }
    }
    let shape = ctx.shape(arity, spec);
    let mut params = ModelParams::init(&shape, cfg.rng_seed)?;
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x5E_ED0F_7EA1);

    let online_negatives = cfg.neg_per_pos > 0 && train.iter().all(|q| q.label);
    let positives: Vec<Query> = train
        .iter()
        .filter(|q| q.label)
        .map(|q| q.query.clone())
        .collect();
    let sampler = NegativeSampler::new(ctx.graph, &positives);
    let cached = if cfg.cache_inputs && !online_negatives {
        let queries: Vec<Query> = train.iter().map(|q| q.query.clone()).collect();
        Some(ctx.inputs(&queries)?)
    } else {
        None
    };

    let mut history = Vec::new();
    let mut best = (f64::NEG_INFINITY, params.clone(), 0usize);
    let mut since_best = 0usize;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch_index = 0usize;
    let start = Instant::now();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut loss_n = 0usize;
        let per_batch = if online_negatives {
            (cfg.batch_size / (1 + cfg.neg_per_pos)).max(1)
        } else {
            cfg.batch_size
        };
        for chunk in order.chunks(per_batch) {
            let mut queries: Vec<Query> = chunk.iter().map(|&i| train[i].query.clone()).collect();
            let mut targets: Vec<f64> = chunk.iter().map(|&i| train[i].target()).collect();
            let fresh;
            let inputs: Vec<&SetInput> = match &cached {
                Some(all) => chunk.iter().map(|&i| &all[i]).collect(),
                None => {
                    if online_negatives {
                        let neg = sampler.sample(&queries, cfg.neg_per_pos, &mut rng)?;
                        targets.extend(std::iter::repeat_n(0.0, neg.len()));
                        queries.extend(neg);
                    }
                    fresh = ctx.inputs(&queries)?;
                    fresh.iter().collect()
                }
            };
            let batch: Vec<(&SetInput, f64)> = inputs.into_iter().zip(targets).collect();
            let dropout = (cfg.dropout > 0.0).then_some((cfg.dropout, &mut rng));
            let (loss, grads) = loss_and_grad(&params, &batch, dropout)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Training {
                    batch: batch_index,
                    msg: "non-finite loss or gradient".into(),
                });
            }
            adam_step(&mut params, &grads, &mut adam, cfg.learning_rate);
            loss_sum += loss * batch.len() as f64;
            loss_n += batch.len();
            batch_index += 1;
        }
        let val_metric = valid
            .filter(|v| !v.is_empty())
            .map(|v| validation_metric(ctx, &params, v))
            .transpose()?;
        history.push(EpochRecord {
            epoch,
            loss: loss_sum / loss_n as f64,
            val_metric,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        match val_metric {
            Some(m) if m > best.0 => {
                best = (m, params.clone(), epoch);
                since_best = 0;
            }
            Some(_) => {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
            None => best = (f64::NEG_INFINITY, params.clone(), epoch),
        }
    }
    Ok(TrainOutcome {
        params: best.1,
        history,
        best_epoch: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_all, SamplerSpec, SetSampler, StructureEncoder, WalkConfig};
    use crate::spg::build_spg;

    /// Two disjoint 6-cliques; pairs inside a clique are positives.
    fn setup() -> (Graph, SpG, Vec<LabeledQuery>) {
        let mut edges = Vec::new();
        for base in [0u32, 6] {
            for u in base..base + 6 {
                for v in u + 1..base + 6 {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(12, edges).unwrap();
        let spec = SamplerSpec {
            sampler: SetSampler::Walk(WalkConfig {
                num_walks: 20,
                num_steps: 2,
                rng_seed: 1,
            }),
            encoder: StructureEncoder::Lp,
        };
        let spg = build_spg(&sample_all(&g, &spec, 1).unwrap()).unwrap();
        let mut data = Vec::new();
        for u in 0..12u32 {
            for v in u + 1..12 {
                data.push(LabeledQuery::new(
                    Query::pair(u, v).unwrap(),
                    (u < 6) == (v < 6),
                ));
            }
        }
        (g, spg, data)
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            batch_size: 16,
            learning_rate: 0.01,
            epochs: 30,
            patience: 30,
            dropout: 0.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_clique_membership() {
        let (g, spg, data) = setup();
        let ctx = TrainContext {
            graph: &g,
            spg: &spg,
            feature_scale: 1.0 / 20.0,
            threads: 1,
        };
        let spec = ModelSpec {
            hidden: 16,
            aggr: Aggr::Mean,
        };
        let out = train(&ctx, &data, Some(&data), spec, &cfg()).unwrap();
        let first = out.history[0].loss;
        let last = out.history.last().unwrap().loss;
        assert!(last < first, "{first} -> {last}");
        let best = out.history[out.best_epoch - 1].val_metric.unwrap();
        assert!(best > 0.9, "validation AUC {best}");

        let again = train(&ctx, &data, Some(&data), spec, &cfg()).unwrap();
        assert_eq!(again.params, out.params);
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let (g, spg, data) = setup();
        let ctx = TrainContext {
            graph: &g,
            spg: &spg,
            feature_scale: 0.05,
            threads: 1,
        };
        let spec = ModelSpec::default();
        let c = TrainConfig {
            learning_rate: 0.0,
            epochs: 2,
            ..cfg()
        };
        let out = train(&ctx, &data, None, spec, &c).unwrap();
        let init = ModelParams::init(&ctx.shape(2, spec), c.rng_seed).unwrap();
        assert_eq!(out.params, init);
        assert_eq!(out.best_epoch, 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (g, spg, mut data) = setup();
        let ctx = TrainContext {
            graph: &g,
            spg: &spg,
            feature_scale: 0.05,
            threads: 1,
        };
        assert!(train(&ctx, &[], None, ModelSpec::default(), &cfg()).is_err());
        data.push(LabeledQuery::new(Query::new(vec![0, 1, 2]).unwrap(), true));
        assert!(train(&ctx, &data, None, ModelSpec::default(), &cfg()).is_err());
        let bad = TrainConfig {
            dropout: 1.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }
}
