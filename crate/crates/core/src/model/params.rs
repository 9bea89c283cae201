use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Set pooling used to combine the encoded members of a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggr {
    Mean,
    Attention,
}

impl Aggr {
    fn code(self) -> u8 {
        match self {
            Aggr::Mean => 0,
            Aggr::Attention => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Aggr::Mean),
            1 => Ok(Aggr::Attention),
            _ => Err(Error::validation(format!("unknown pooling code {c}"))),
        }
    }
}

/// Dense layer `y = W x + b` with `W` stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Uniform in `±1/sqrt(fan_in)` for weights and biases.
    fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (in_dim.max(1) as f64).sqrt();
        let mut draw = |len: usize| (0..len).map(|_| rng.random_range(-bound..=bound)).collect();
        Self {
            in_dim,
            out_dim,
            weight: draw(in_dim * out_dim),
            bias: draw(out_dim),
        }
    }

    #[inline]
    pub fn forward_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        for (o, yo) in y.iter_mut().enumerate() {
            let w = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
            *yo = self.bias[o] + dot(w, x);
        }
    }

    /// Accumulates `dW += dy ⊗ x`, `db += dy`, and (if given) `dx = Wᵀ dy`.
    #[inline]
    pub fn backward_into(&self, x: &[f64], dy: &[f64], grad: &mut Linear, dx: Option<&mut [f64]>) {
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias[o] += g;
            axpy(
                g,
                x,
                &mut grad.weight[o * self.in_dim..(o + 1) * self.in_dim],
            );
        }
        if let Some(dx) = dx {
            dx.iter_mut().for_each(|v| *v = 0.0);
            for (o, &g) in dy.iter().enumerate() {
                if g != 0.0 {
                    axpy(g, &self.weight[o * self.in_dim..(o + 1) * self.in_dim], dx);
                }
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Shape of a model: input width is `arity · k + attr_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    pub arity: usize,
    pub k: usize,
    pub attr_dim: usize,
    pub hidden: usize,
    pub aggr: Aggr,
}

impl ModelShape {
    pub fn input_dim(&self) -> usize {
        self.arity * self.k + self.attr_dim
    }
}

/// Weights of the member encoder, the optional attention scorer and the
/// classifier head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub aggr: Aggr,
    /// Member encoder, input → hidden → hidden.
    pub enc1: Linear,
    pub enc2: Linear,
    /// Attention scoring vector over encoder outputs; empty for mean pooling.
    pub attn: Vec<f64>,
    /// Classifier, hidden → hidden → 1.
    pub head1: Linear,
    pub head2: Linear,
}

impl ModelParams {
    pub fn init(shape: &ModelShape, rng_seed: u64) -> Result<Self> {
        if shape.hidden == 0 || shape.input_dim() == 0 {
            return Err(Error::validation(
                "model input and hidden widths must be positive",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let h = shape.hidden;
        let enc1 = Linear::init(shape.input_dim(), h, &mut rng);
        let enc2 = Linear::init(h, h, &mut rng);
        let attn = match shape.aggr {
            Aggr::Mean => Vec::new(),
            Aggr::Attention => Linear::init(h, 1, &mut rng).weight,
        };
        let head1 = Linear::init(h, h, &mut rng);
        let head2 = Linear::init(h, 1, &mut rng);
        Ok(Self {
            aggr: shape.aggr,
            enc1,
            enc2,
            attn,
            head1,
            head2,
        })
    }

    /// All-zero parameters with the same shapes (gradient accumulator).
    pub fn zeros_like(&self) -> Self {
        Self {
            aggr: self.aggr,
            enc1: Linear::zeros(self.enc1.in_dim, self.enc1.out_dim),
            enc2: Linear::zeros(self.enc2.in_dim, self.enc2.out_dim),
            attn: vec![0.0; self.attn.len()],
            head1: Linear::zeros(self.head1.in_dim, self.head1.out_dim),
            head2: Linear::zeros(self.head2.in_dim, self.head2.out_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.enc1.in_dim
    }

    pub fn hidden(&self) -> usize {
        self.enc1.out_dim
    }

    /// Tensors in checkpoint order, with their `(rows, cols)` shapes.
    pub fn tensors(&self) -> Vec<(&[f64], (usize, usize))> {
        let h = self.hidden();
        vec![
            (&self.enc1.weight, (h, self.input_dim())),
            (&self.enc1.bias, (h, 1)),
            (&self.enc2.weight, (h, h)),
            (&self.enc2.bias, (h, 1)),
            (&self.attn, (self.attn.len(), 1)),
            (&self.head1.weight, (h, h)),
            (&self.head1.bias, (h, 1)),
            (&self.head2.weight, (1, h)),
            (&self.head2.bias, (1, 1)),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        vec![
            &mut self.enc1.weight,
            &mut self.enc1.bias,
            &mut self.enc2.weight,
            &mut self.enc2.bias,
            &mut self.attn,
            &mut self.head1.weight,
            &mut self.head1.bias,
            &mut self.head2.weight,
            &mut self.head2.bias,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(t, _)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(t, _)| t.iter().all(|v| v.is_finite()))
    }

    /// Binary checkpoint: magic, version, pooling code, input and hidden
    /// widths, then every tensor as `(rows, cols)` followed by its values,
    /// all little-endian.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CKPT_MAGIC);
        buf.extend_from_slice(&CKPT_VERSION.to_le_bytes());
        buf.extend_from_slice(&[self.aggr.code(), 0, 0, 0]);
        buf.extend_from_slice(&(self.input_dim() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.hidden() as u64).to_le_bytes());
        for (t, (r, c)) in self.tensors() {
            buf.extend_from_slice(&(r as u64).to_le_bytes());
            buf.extend_from_slice(&(c as u64).to_le_bytes());
            for v in t {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor {
            bytes: &bytes,
            at: 0,
        };
        if cur.take(8)? != CKPT_MAGIC {
            return Err(Error::validation("not a model checkpoint"));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
        if version != CKPT_VERSION {
            return Err(Error::validation(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let aggr = Aggr::from_code(cur.take(4)?[0])?;
        let input_dim = cur.u64()? as usize;
        let hidden = cur.u64()? as usize;
        let shape = ModelShape {
            arity: 1,
            k: input_dim,
            attr_dim: 0,
            hidden,
            aggr,
        };
        let mut params = ModelParams::init(&shape, 0)?;
        let expected: Vec<(usize, usize)> = params.tensors().iter().map(|(_, s)| *s).collect();
        for (t, want) in params.tensors_mut().into_iter().zip(expected) {
            let got = (cur.u64()? as usize, cur.u64()? as usize);
            if got != want {
                return Err(Error::validation(format!(
                    "tensor shape {got:?}, expected {want:?}"
                )));
            }
            for v in t.iter_mut() {
                *v = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
            }
        }
        if cur.at != bytes.len() {
            return Err(Error::validation("trailing bytes after checkpoint"));
        }
        if !params.is_finite() {
            return Err(Error::validation("checkpoint holds non-finite parameters"));
        }
        Ok(params)
    }
}

const CKPT_MAGIC: &[u8; 8] = b"SGRLCKPT";
const CKPT_VERSION: u32 = 1;

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::validation("truncated checkpoint"))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
