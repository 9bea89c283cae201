//! Compressed sparse store for all sampled node sets.
//!
//! Row `u` holds the members of `S_u` in `indices[indptr[u]..indptr[u+1]]`
//! (ascending) and, aligned with them, pointers into a bank of unique
//! feature rows. Identical feature rows are stored once.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::Serialize;

use crate::graph::NodeId;
use crate::sampling::NodeSetSample;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SPGSNAP\0";
const VERSION: u32 = 1;
const INT_WIDTH: usize = std::mem::size_of::<u32>();
const SCALAR_WIDTH: usize = std::mem::size_of::<f32>();
const HEADER_LEN: usize = 8 + 4 + 8 * 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SpG {
    n: usize,
    k: usize,
    indptr: Vec<u32>,
    indices: Vec<NodeId>,
    sfptr: Vec<u32>,
    bank: Vec<f32>,
}

/// Size accounting of an [`SpG`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpgStats {
    pub n: usize,
    pub k: usize,
    /// `indptr[n]`, the summed set sizes.
    pub total_entries: usize,
    /// `c`, rows in the feature bank.
    pub unique_features: usize,
    /// `indptr`, `indices` and `sfptr`.
    pub bytes_structure: usize,
    /// The feature bank.
    pub bytes_features: usize,
    /// `total_entries / unique_features`.
    pub dedup_ratio: f64,
}

fn row_key(row: &[f32]) -> Box<[u32]> {
    row.iter().map(|x| x.to_bits()).collect()
}

/// Lays out `samples` (indexed by seed) row by row and interns every feature
/// row; bank order is first occurrence.
pub fn build_spg(samples: &[NodeSetSample]) -> Result<SpG> {
    let n = samples.len();
    let k = samples.first().map_or(0, |s| s.k);
    let total: usize = samples.iter().map(NodeSetSample::len).sum();
    if total >= 1usize << 31 {
        return Err(Error::validation(format!(
            "{total} stored entries exceed 32-bit indexing"
        )));
    }
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(total);
    let mut sfptr = Vec::with_capacity(total);
    let mut bank = Vec::new();
    let mut interned: HashMap<Box<[u32]>, u32> = HashMap::new();
    indptr.push(0u32);
    for (u, s) in samples.iter().enumerate() {
        if s.seed as usize != u {
            return Err(Error::validation(format!(
                "sample at position {u} has seed {}",
                s.seed
            )));
        }
        if s.k != k {
            return Err(Error::validation(format!(
                "seed {u} has feature width {}, expected {k}",
                s.k
            )));
        }
        s.validate()?;
        if let Some(&x) = s.members.iter().find(|&&x| x as usize >= n) {
            return Err(Error::validation(format!(
                "seed {u} has out-of-range member {x}"
            )));
        }
        if s.features.iter().any(|f| !f.is_finite()) {
            return Err(Error::validation(format!(
                "seed {u} has non-finite features"
            )));
        }
        for (i, &x) in s.members.iter().enumerate() {
            let row = s.feature_row(i);
            let next = interned.len() as u32;
            let ptr = *interned.entry(row_key(row)).or_insert_with(|| {
                bank.extend_from_slice(row);
                next
            });
            indices.push(x);
            sfptr.push(ptr);
        }
        indptr.push(indices.len() as u32);
    }
    Ok(SpG {
        n,
        k,
        indptr,
        indices,
        sfptr,
        bank,
    })
}

impl SpG {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Feature width `k`.
    pub fn feature_dim(&self) -> usize {
        self.k
    }

    pub fn indptr(&self) -> &[u32] {
        &self.indptr
    }

    pub fn indices(&self) -> &[NodeId] {
        &self.indices
    }

    pub fn sfptr(&self) -> &[u32] {
        &self.sfptr
    }

    pub fn bank(&self) -> &[f32] {
        &self.bank
    }

    /// Number of unique feature rows `c`.
    #[allow(clippy::manual_checked_ops)]
    pub fn unique_features(&self) -> usize {
        if self.k == 0 {
            usize::from(!self.indices.is_empty())
        } else {
            self.bank.len() / self.k
        }
    }

    /// Members of `S_u` and their aligned bank pointers.
    pub fn row(&self, u: NodeId) -> Result<(&[NodeId], &[u32])> {
        if u as usize >= self.n {
            return Err(Error::validation(format!(
                "node {u} out of range for {} rows",
                self.n
            )));
        }
        Ok(self.row_unchecked(u))
    }

    #[inline]
    pub(crate) fn row_unchecked(&self, u: NodeId) -> (&[NodeId], &[u32]) {
        let (a, b) = (
            self.indptr[u as usize] as usize,
            self.indptr[u as usize + 1] as usize,
        );
        (&self.indices[a..b], &self.sfptr[a..b])
    }

    /// Bank row behind a feature pointer.
    #[inline]
    pub fn feature(&self, ptr: u32) -> &[f32] {
        let a = ptr as usize * self.k;
        &self.bank[a..a + self.k]
    }

    /// Rebuilds the sample of seed `u`.
    pub fn sample(&self, u: NodeId) -> Result<NodeSetSample> {
        let (members, ptrs) = self.row(u)?;
        Ok(NodeSetSample {
            seed: u,
            members: members.to_vec(),
            features: ptrs
                .iter()
                .flat_map(|&p| self.feature(p).iter().copied())
                .collect(),
            k: self.k,
        })
    }

    pub fn stats(&self) -> SpgStats {
        let total = self.indices.len();
        let c = self.unique_features();
        let bytes_structure =
            (self.indptr.len() + self.indices.len() + self.sfptr.len()) * INT_WIDTH;
        let bytes_features = self.bank.len() * SCALAR_WIDTH;
        SpgStats {
            n: self.n,
            k: self.k,
            total_entries: total,
            unique_features: c,
            bytes_structure,
            bytes_features,
            dedup_ratio: if c == 0 { 0.0 } else { total as f64 / c as f64 },
        }
    }

    /// Checks every layout invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.indptr.len() != n + 1 || self.indptr[0] != 0 {
            return Err(Error::validation(
                "indptr must have n+1 entries starting at 0",
            ));
        }
        if self.indptr[n] as usize != self.indices.len() || self.sfptr.len() != self.indices.len() {
            return Err(Error::validation(
                "indptr[n] does not match indices/sfptr length",
            ));
        }
        if self.k > 0 && !self.bank.len().is_multiple_of(self.k) {
            return Err(Error::validation("bank length is not a multiple of k"));
        }
        let c = self.unique_features();
        if c > self.indices.len() {
            return Err(Error::validation("more bank rows than stored entries"));
        }
        for u in 0..n {
            if self.indptr[u] > self.indptr[u + 1] {
                return Err(Error::validation(format!("indptr decreases at row {u}")));
            }
            let (members, ptrs) = self.row_unchecked(u as NodeId);
            if members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::validation(format!(
                    "row {u} is not strictly ascending"
                )));
            }
            if members.binary_search(&(u as NodeId)).is_err() {
                return Err(Error::validation(format!(
                    "row {u} does not contain its seed"
                )));
            }
            if let Some(&x) = members.iter().find(|&&x| x as usize >= n) {
                return Err(Error::validation(format!(
                    "row {u} holds out-of-range id {x}"
                )));
            }
            if let Some(&p) = ptrs.iter().find(|&&p| p as usize >= c) {
                return Err(Error::validation(format!(
                    "row {u} holds bank pointer {p} >= {c}"
                )));
            }
        }
        if self.k > 0 {
            let mut seen = HashSet::with_capacity(c);
            for row in self.bank.chunks_exact(self.k) {
                if !seen.insert(row_key(row)) {
                    return Err(Error::validation("feature bank holds duplicate rows"));
                }
            }
        }
        Ok(())
    }

    /// Writes the little-endian binary snapshot: a fixed header followed by
    /// `indptr`, `indices`, `sfptr` and the bank.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        for v in [self.n, self.k, self.unique_features(), self.indices.len()] {
            header.extend_from_slice(&(v as u64).to_le_bytes());
        }
        header.extend_from_slice(&[INT_WIDTH as u8, SCALAR_WIDTH as u8, 0, 0]);
        w.write_all(&header)?;
        let mut buf =
            Vec::with_capacity((self.indptr.len() + 2 * self.indices.len() + self.bank.len()) * 4);
        for arr in [&self.indptr, &self.indices, &self.sfptr] {
            for v in arr.iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        for v in &self.bank {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a snapshot written by [`SpG::write_snapshot`] and validates it.
    pub fn read_snapshot<R: Read>(mut r: R) -> Result<SpG> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|e| Error::validation(format!("truncated snapshot header: {e}")))?;
        if &header[..8] != MAGIC {
            return Err(Error::validation("not an SpG snapshot"));
        }
        let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::validation(format!(
                "unsupported snapshot version {version}"
            )));
        }
        let word = |i: usize| {
            let a = 12 + 8 * i;
            u64::from_le_bytes(header[a..a + 8].try_into().unwrap()) as usize
        };
        let (n, k, c, nnz) = (word(0), word(1), word(2), word(3));
        if header[44] as usize != INT_WIDTH || header[45] as usize != SCALAR_WIDTH {
            return Err(Error::validation("unsupported integer or scalar width"));
        }
        if nnz >= 1 << 31 || n >= 1 << 32 || c > nnz.max(1) {
            return Err(Error::validation("snapshot header sizes out of range"));
        }
        let bank_len = c
            .checked_mul(k)
            .filter(|&b| b < 1 << 34)
            .ok_or_else(|| Error::validation("snapshot bank size out of range"))?;
        let mut read_words = |len: usize| -> Result<Vec<[u8; 4]>> {
            let mut bytes = vec![0u8; len * 4];
            r.read_exact(&mut bytes)
                .map_err(|e| Error::validation(format!("truncated snapshot body: {e}")))?;
            Ok(bytes
                .chunks_exact(4)
                .map(|c| c.try_into().unwrap())
                .collect())
        };
        let to_u32 = |v: Vec<[u8; 4]>| v.into_iter().map(u32::from_le_bytes).collect::<Vec<_>>();
        let indptr = to_u32(read_words(n + 1)?);
        let indices = to_u32(read_words(nnz)?);
        let sfptr = to_u32(read_words(nnz)?);
        let bank = read_words(bank_len)?
            .into_iter()
            .map(f32::from_le_bytes)
            .collect();
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::validation("trailing bytes after snapshot"));
        }
        let spg = SpG {
            n,
            k,
            indptr,
            indices,
            sfptr,
            bank,
        };
        if spg.unique_features() != c {
            return Err(Error::validation("bank row count disagrees with header"));
        }
        spg.validate()?;
        Ok(spg)
    }
}
