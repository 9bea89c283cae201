//! Forward and backward passes of the set encoder.
//!
//! `h_Q = AGGR({enc(z_x) : x ∈ S_Q})` with `enc` a two-layer ReLU
//! perceptron, AGGR either the mean or a softmax-weighted mean whose scores
//! are a linear map of `enc(z_x)`, and a two-layer classifier producing the
//! logit. The encoder sees one row at a time, so identical rows (within a
//! query, a batch, or a scoring pass) are encoded once and weighted by
//! their multiplicity without changing any pooled value.

use std::collections::HashMap;

use rand::Rng;

use super::params::{axpy, dot, Aggr, ModelParams};
use crate::graph::Attributes;
use crate::spjoin::JoinedQuery;
use crate::{Error, Result};

/// Model input for one query: distinct member rows with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct SetInput {
    dim: usize,
    rows: Vec<f64>,
    counts: Vec<f64>,
    members: usize,
}

impl SetInput {
    /// One row per member, no compaction.
    pub fn from_rows(dim: usize, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 || rows.is_empty() || !rows.len().is_multiple_of(dim) {
            return Err(Error::validation(format!(
                "{} input values do not form non-empty rows of width {dim}",
                rows.len()
            )));
        }
        let members = rows.len() / dim;
        Ok(Self {
            dim,
            rows,
            counts: vec![1.0; members],
            members,
        })
    }

    /// Builds the input of a joined query: each member's feature row scaled
    /// by `feature_scale`, followed by the member's attribute row when
    /// attributes are given. Identical rows are merged.
    pub fn from_joined(
        jq: &JoinedQuery,
        feature_scale: f64,
        attrs: Option<&Attributes>,
    ) -> Result<Self> {
        if jq.is_empty() {
            return Err(Error::validation("joined query has no members"));
        }
        let width = jq.width();
        let dim = width + attrs.map_or(0, Attributes::dim);
        if dim == 0 {
            return Err(Error::validation("joined query has zero-width rows"));
        }
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut rows = Vec::new();
        let mut counts = Vec::new();
        let mut row = vec![0.0; dim];
        for i in 0..jq.len() {
            for (dst, &src) in row.iter_mut().zip(jq.row(i)) {
                *dst = src as f64 * feature_scale;
            }
            if let Some(a) = attrs {
                row[width..].copy_from_slice(a.row(jq.members[i]));
            }
            let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
            match index.get(&key) {
                Some(&r) => counts[r] += 1.0,
                None => {
                    index.insert(key, counts.len());
                    rows.extend_from_slice(&row);
                    counts.push(1.0);
                }
            }
        }
        Ok(Self {
            dim,
            rows,
            counts,
            members: jq.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of members `|S_Q|`.
    pub fn members(&self) -> usize {
        self.members
    }

    /// Number of distinct rows actually encoded.
    pub fn distinct_rows(&self) -> usize {
        self.counts.len()
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.dim..(r + 1) * self.dim]
    }
}

/// Inverted dropout masks; all ones when `dropout` is `None`.
fn dropout_mask<R: Rng>(len: usize, dropout: Option<(f64, &mut R)>) -> Vec<f64> {
    match dropout {
        Some((p, rng)) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            (0..len)
                .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                .collect()
        }
        _ => vec![1.0; len],
    }
}

fn row_key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|v| v.to_bits()).collect()
}

/// Encoder activations of a matrix of rows.
#[derive(Debug, Clone, Default)]
struct Encoded {
    pre1: Vec<f64>,
    hid1: Vec<f64>,
    enc: Vec<f64>,
}

/// Distinct rows of several inputs, each encoded once. `ids[q][r]` is the
/// table row of distinct row `r` of input `q`.
#[derive(Debug, Clone)]
struct RowTable {
    dim: usize,
    rows: Vec<f64>,
    ids: Vec<Vec<usize>>,
}

impl RowTable {
    fn build(inputs: &[&SetInput]) -> Self {
        let dim = inputs.first().map_or(0, |i| i.dim);
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut rows = Vec::new();
        let ids = inputs
            .iter()
            .map(|input| {
                (0..input.distinct_rows())
                    .map(|r| {
                        let row = input.row(r);
                        *index.entry(row_key(row)).or_insert_with(|| {
                            rows.extend_from_slice(row);
                            rows.len() / dim - 1
                        })
                    })
                    .collect()
            })
            .collect();
        Self { dim, rows, ids }
    }

    fn row(&self, g: usize) -> &[f64] {
        &self.rows[g * self.dim..(g + 1) * self.dim]
    }

    fn len(&self) -> usize {
        self.rows.len() / self.dim.max(1)
    }
}

/// Intermediate values of one query's head given shared row encodings.
#[derive(Debug, Clone)]
struct Trace {
    /// Pooling weight per distinct row; sums to 1.
    weights: Vec<f64>,
    hq: Vec<f64>,
    mask_q: Vec<f64>,
    hq_drop: Vec<f64>,
    pre2: Vec<f64>,
    mask_g: Vec<f64>,
    g_drop: Vec<f64>,
    logit: f64,
}

impl ModelParams {
    fn check_input(&self, input: &SetInput) -> Result<()> {
        if input.dim != self.input_dim() {
            return Err(Error::validation(format!(
                "input width {} does not match model input width {}",
                input.dim,
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn encode_into(&self, row: &[f64], pre1: &mut [f64], hid1: &mut [f64], enc: &mut [f64]) {
        self.enc1.forward_into(row, pre1);
        for (a, &p) in hid1.iter_mut().zip(pre1.iter()) {
            *a = p.max(0.0);
        }
        self.enc2.forward_into(hid1, enc);
    }

    /// Encodes every `dim`-wide row of `rows`.
    fn encode_matrix(&self, rows: &[f64], dim: usize) -> Encoded {
        let h = self.hidden();
        let n = rows.len() / dim;
        let mut e = Encoded {
            pre1: vec![0.0; n * h],
            hid1: vec![0.0; n * h],
            enc: vec![0.0; n * h],
        };
        for r in 0..n {
            let span = r * h..(r + 1) * h;
            self.encode_into(
                &rows[r * dim..(r + 1) * dim],
                &mut e.pre1[span.clone()],
                &mut e.hid1[span.clone()],
                &mut e.enc[span],
            );
        }
        e
    }

    /// Pooling weights of distinct rows whose encodings are `enc(r)`.
    fn pool_weights<'e>(
        &self,
        n: usize,
        enc: impl Fn(usize) -> &'e [f64],
        counts: &[f64],
        members: usize,
    ) -> Vec<f64> {
        match self.aggr {
            Aggr::Mean => counts.iter().map(|c| c / members as f64).collect(),
            Aggr::Attention => {
                let scores: Vec<f64> = (0..n).map(|r| dot(&self.attn, enc(r))).collect();
                let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = scores
                    .iter()
                    .zip(counts)
                    .map(|(s, c)| c * (s - top).exp())
                    .collect();
                let z: f64 = e.iter().sum();
                e.into_iter().map(|v| v / z).collect()
            }
        }
    }

    fn pool<'e>(&self, enc: impl Fn(usize) -> &'e [f64], weights: &[f64]) -> Vec<f64> {
        let mut hq = vec![0.0; self.hidden()];
        for (r, &w) in weights.iter().enumerate() {
            axpy(w, enc(r), &mut hq);
        }
        hq
    }

    fn pooled<'e>(
        &self,
        input: &SetInput,
        enc: impl Fn(usize) -> &'e [f64] + Copy,
    ) -> (Vec<f64>, Vec<f64>) {
        let weights = self.pool_weights(input.distinct_rows(), enc, &input.counts, input.members);
        let hq = self.pool(enc, &weights);
        (weights, hq)
    }

    /// Pooled representation `h_Q`.
    pub fn encode(&self, input: &SetInput) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let h = self.hidden();
        let e = self.encode_matrix(&input.rows, input.dim);
        Ok(self.pooled(input, |r| &e.enc[r * h..(r + 1) * h]).1)
    }

    /// Pooling weight of every member, in member order of `input`'s
    /// distinct rows expanded by multiplicity.
    pub fn member_weights(&self, input: &SetInput) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let h = self.hidden();
        let e = self.encode_matrix(&input.rows, input.dim);
        let (weights, _) = self.pooled(input, |r| &e.enc[r * h..(r + 1) * h]);
        Ok(weights
            .iter()
            .zip(&input.counts)
            .flat_map(|(&w, &c)| std::iter::repeat_n(w / c, c as usize))
            .collect())
    }

    /// Classifier logit for a pooled representation.
    pub fn predict(&self, hq: &[f64]) -> f64 {
        let h = self.hidden();
        let mut g = vec![0.0; h];
        self.head1.forward_into(hq, &mut g);
        g.iter_mut().for_each(|v| *v = v.max(0.0));
        let mut out = [0.0];
        self.head2.forward_into(&g, &mut out);
        out[0]
    }

    /// Evaluation-mode logit of one query.
    pub fn logit(&self, input: &SetInput) -> Result<f64> {
        Ok(self.predict(&self.encode(input)?))
    }

    fn head_trace<R: Rng>(
        &self,
        weights: Vec<f64>,
        hq: Vec<f64>,
        dropout: Option<(f64, &mut R)>,
    ) -> Trace {
        let h = self.hidden();
        let (mask_q, mask_g) = match dropout {
            Some((p, rng)) => {
                let a = dropout_mask(h, Some((p, &mut *rng)));
                (a, dropout_mask(h, Some((p, rng))))
            }
            None => (vec![1.0; h], vec![1.0; h]),
        };
        let hq_drop: Vec<f64> = hq.iter().zip(&mask_q).map(|(a, m)| a * m).collect();
        let mut pre2 = vec![0.0; h];
        self.head1.forward_into(&hq_drop, &mut pre2);
        let g_drop: Vec<f64> = pre2
            .iter()
            .zip(&mask_g)
            .map(|(p, m)| p.max(0.0) * m)
            .collect();
        let mut out = [0.0];
        self.head2.forward_into(&g_drop, &mut out);
        Trace {
            weights,
            hq,
            mask_q,
            hq_drop,
            pre2,
            mask_g,
            g_drop,
            logit: out[0],
        }
    }

    /// Back-propagates `dlogit` through the head and pooling of one query,
    /// adding the gradient of each table row's encoding into `denc`.
    fn backward_head(
        &self,
        t: &Trace,
        ids: &[usize],
        enc: &[f64],
        dlogit: f64,
        grad: &mut ModelParams,
        denc: &mut [f64],
    ) {
        let h = self.hidden();
        let mut dg = vec![0.0; h];
        self.head2
            .backward_into(&t.g_drop, &[dlogit], &mut grad.head2, Some(&mut dg));
        let dpre2: Vec<f64> = (0..h)
            .map(|i| {
                if t.pre2[i] > 0.0 {
                    dg[i] * t.mask_g[i]
                } else {
                    0.0
                }
            })
            .collect();
        let mut dhq = vec![0.0; h];
        self.head1
            .backward_into(&t.hq_drop, &dpre2, &mut grad.head1, Some(&mut dhq));
        dhq.iter_mut().zip(&t.mask_q).for_each(|(d, m)| *d *= m);

        let base = match self.aggr {
            Aggr::Mean => 0.0,
            Aggr::Attention => dot(&t.hq, &dhq),
        };
        for (r, &g) in ids.iter().enumerate() {
            let e = &enc[g * h..(g + 1) * h];
            let de = &mut denc[g * h..(g + 1) * h];
            axpy(t.weights[r], &dhq, de);
            if self.aggr == Aggr::Attention {
                // dL/dscore_r of the softmax
                let ds = t.weights[r] * (dot(e, &dhq) - base);
                axpy(ds, &self.attn, de);
                axpy(ds, e, &mut grad.attn);
            }
        }
    }

    /// Back-propagates row-encoding gradients through the encoder.
    fn backward_encoder(
        &self,
        table: &RowTable,
        e: &Encoded,
        denc: &[f64],
        grad: &mut ModelParams,
    ) {
        let h = self.hidden();
        let mut dhid = vec![0.0; h];
        for g in 0..table.len() {
            let span = g * h..(g + 1) * h;
            let de = &denc[span.clone()];
            if de.iter().all(|&v| v == 0.0) {
                continue;
            }
            self.enc2
                .backward_into(&e.hid1[span.clone()], de, &mut grad.enc2, Some(&mut dhid));
            dhid.iter_mut().zip(&e.pre1[span]).for_each(|(d, &p)| {
                if p <= 0.0 {
                    *d = 0.0
                }
            });
            self.enc1
                .backward_into(table.row(g), &dhid, &mut grad.enc1, None);
        }
    }
}

/// Evaluation-mode scorer that memoizes row encodings across queries.
/// Scores equal [`ModelParams::logit`] bit for bit.
#[derive(Debug)]
pub struct Scorer<'a> {
    params: &'a ModelParams,
    index: HashMap<Vec<u64>, usize>,
    enc: Vec<f64>,
}

/// Cached encodings kept before the cache is reset.
const SCORER_CACHE_ROWS: usize = 1 << 20;

impl<'a> Scorer<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        Self {
            params,
            index: HashMap::new(),
            enc: Vec::new(),
        }
    }

    pub fn logit(&mut self, input: &SetInput) -> Result<f64> {
        let p = self.params;
        p.check_input(input)?;
        let h = p.hidden();
        if self.index.len() + input.distinct_rows() > SCORER_CACHE_ROWS {
            self.index.clear();
            self.enc.clear();
        }
        let mut pre1 = vec![0.0; h];
        let mut hid1 = vec![0.0; h];
        let mut out = vec![0.0; h];
        let ids: Vec<usize> = (0..input.distinct_rows())
            .map(|r| {
                let row = input.row(r);
                *self.index.entry(row_key(row)).or_insert_with(|| {
                    p.encode_into(row, &mut pre1, &mut hid1, &mut out);
                    self.enc.extend_from_slice(&out);
                    self.enc.len() / h - 1
                })
            })
            .collect();
        let enc = &self.enc;
        let (_, hq) = p.pooled(input, |r| &enc[ids[r] * h..(ids[r] + 1) * h]);
        Ok(p.predict(&hq))
    }
}

/// Binary cross-entropy of one logit, `max(z,0) − z·y + ln(1 + e^{−|z|})`.
pub fn bce(logit: f64, target: f64) -> f64 {
    logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy over a batch of logits.
pub fn bce_loss(logits: &[f64], targets: &[f64]) -> Result<f64> {
    if logits.len() != targets.len() || logits.is_empty() {
        return Err(Error::validation(
            "logits and labels must be non-empty and aligned",
        ));
    }
    Ok(logits
        .iter()
        .zip(targets)
        .map(|(&z, &y)| bce(z, y))
        .sum::<f64>()
        / logits.len() as f64)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean BCE over `batch` and its gradient with respect to every parameter.
/// Rows shared between queries of the batch are encoded once.
pub fn loss_and_grad<R: Rng>(
    params: &ModelParams,
    batch: &[(&SetInput, f64)],
    mut dropout: Option<(f64, &mut R)>,
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::validation("empty batch"));
    }
    for (input, _) in batch {
        params.check_input(input)?;
    }
    let inputs: Vec<&SetInput> = batch.iter().map(|(i, _)| *i).collect();
    let table = RowTable::build(&inputs);
    let e = params.encode_matrix(&table.rows, table.dim);
    let h = params.hidden();
    let mut denc = vec![0.0; e.enc.len()];
    let mut grad = params.zeros_like();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for (q, &(input, y)) in batch.iter().enumerate() {
        let ids = &table.ids[q];
        let (weights, hq) = params.pooled(input, |r| &e.enc[ids[r] * h..(ids[r] + 1) * h]);
        let d = dropout.as_mut().map(|(p, rng)| (*p, &mut **rng));
        let t = params.head_trace(weights, hq, d);
        loss += bce(t.logit, y);
        params.backward_head(
            &t,
            ids,
            &e.enc,
            (sigmoid(t.logit) - y) * scale,
            &mut grad,
            &mut denc,
        );
    }
    params.backward_encoder(&table, &e, &denc, &mut grad);
    Ok((loss * scale, grad))
}

/// Mean BCE over `batch` in evaluation mode.
pub fn batch_loss(params: &ModelParams, batch: &[(&SetInput, f64)]) -> Result<f64> {
    let mut logits = Vec::with_capacity(batch.len());
    let mut targets = Vec::with_capacity(batch.len());
    for &(input, y) in batch {
        logits.push(params.logit(input)?);
        targets.push(y);
    }
    bce_loss(&logits, &targets)
}
