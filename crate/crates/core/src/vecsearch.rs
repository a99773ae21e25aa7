//! Set-to-set similarity search reduced to dot products of long vectors.
//!
//! A candidate set `V` is stored as `L_V^n`: each normalized member repeated
//! `n` times. A target set `A` searched against candidates of cardinality `k`
//! becomes `|A|·k` vectors `τ_{i,j}` whose dot product with `L_V^{|A|}` is
//! `(w_max·cos(a_i, v_j) + w_avg·avg(ps)) / (w_max + w_avg)`, so the best
//! `τ` recovers the set similarity exactly.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::cv::{cv_similarity, ColumnLineageMap};
use crate::embedding::ColumnWeights;
use crate::linalg::{self, Vector};
use crate::tv::{rank_scores, set_similarity, LineageError, LineageVectorSet, SimilarityParams};

/// Grid scores this close to the best are re-scored exactly before picking.
const RESCORE_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("no candidates")]
    NoCandidates,
    #[error("set cardinality {len} outside [1, {max}]")]
    CardinalityOutOfRange { len: usize, max: usize },
    #[error("zero-norm vector cannot be placed in a long vector")]
    ZeroVector,
    #[error("vector dimension {got} does not match index dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target and candidate payloads are of different kinds")]
    PayloadMismatch,
    #[error("candidate id already indexed")]
    DuplicateId,
    #[error(transparent)]
    Lineage(#[from] LineageError),
}

/// Concatenation of unit vectors; `n` and `k` record the construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LongVector {
    pub data: Vector,
    pub n: usize,
    pub k: usize,
}

impl LongVector {
    pub fn dot(&self, other: &LongVector) -> f64 {
        linalg::dot(&self.data, &other.data)
    }
}

fn unit_members(v: &LineageVectorSet) -> Result<Vec<Vector>, SearchError> {
    v.vectors().iter().map(|x| linalg::normalized(x).ok_or(SearchError::ZeroVector)).collect()
}

/// `L_V^n`: every normalized member of `V`, in order, repeated `n` times.
pub fn long_candidate(v: &LineageVectorSet, n: usize) -> Result<LongVector, SearchError> {
    let members = unit_members(v)?;
    let mut data = Vec::with_capacity(n * members.len() * v.dim());
    for m in &members {
        for _ in 0..n {
            data.extend_from_slice(m);
        }
    }
    Ok(LongVector { data, n, k: members.len() })
}

/// Block index of the ones-block of selector `σ_{i,j}` (1-based `i`, `j`).
pub fn selector_block(a_len: usize, i: usize, j: usize) -> usize {
    (j - 1) * a_len + (i - 1)
}

/// The `|A|·k` target vectors for candidates of cardinality `k`, ordered by
/// `j` then `i`.
pub fn long_targets(a: &LineageVectorSet, k: usize, params: &SimilarityParams) -> Result<Vec<LongVector>, SearchError> {
    let members = unit_members(a)?;
    let (a_len, dim) = (members.len(), a.dim());
    // L_A^k: a_1..a_|A| concatenated, the block repeated k times
    let mut l_a = Vec::with_capacity(a_len * k * dim);
    for _ in 0..k {
        for m in &members {
            l_a.extend_from_slice(m);
        }
    }
    let total = params.w_max() + params.w_avg();
    let avg_coeff = params.w_avg() / (a_len * k) as f64 / total;
    let max_coeff = params.w_max() / total;
    let base: Vector = l_a.iter().map(|x| avg_coeff * x).collect();
    let mut out = Vec::with_capacity(a_len * k);
    for j in 1..=k {
        for i in 1..=a_len {
            let mut data = base.clone();
            let start = selector_block(a_len, i, j) * dim;
            for (d, x) in data[start..start + dim].iter_mut().zip(&l_a[start..start + dim]) {
                *d += max_coeff * x;
            }
            out.push(LongVector { data, n: a_len, k });
        }
    }
    Ok(out)
}

/// Exact search structures `S_{n,k}` for cardinalities up to `M`.
#[derive(Debug, Clone)]
pub struct IndexGrid<I> {
    m: usize,
    dim: usize,
    structures: HashMap<(usize, usize), Vec<(I, LongVector)>>,
    originals: BTreeMap<I, LineageVectorSet>,
    // sets with a zero member, scored exhaustively
    fallback: Vec<I>,
}

impl<I: Ord + Copy> IndexGrid<I> {
    pub fn new(m: usize, dim: usize) -> Self {
        Self { m, dim, structures: HashMap::new(), originals: BTreeMap::new(), fallback: Vec::new() }
    }

    pub fn max_cardinality(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.originals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.originals.is_empty()
    }

    /// Entries of `S_{n,k}`.
    pub fn structure(&self, n: usize, k: usize) -> &[(I, LongVector)] {
        self.structures.get(&(n, k)).map_or(&[], Vec::as_slice)
    }

    fn check(&self, v: &LineageVectorSet) -> Result<(), SearchError> {
        if v.len() > self.m {
            return Err(SearchError::CardinalityOutOfRange { len: v.len(), max: self.m });
        }
        if v.dim() != self.dim {
            return Err(SearchError::DimensionMismatch { expected: self.dim, got: v.dim() });
        }
        Ok(())
    }

    /// Adds `L_V^n` to `S_{n,|V|}` for every `n` in `1..=M`.
    pub fn insert(&mut self, id: I, v: LineageVectorSet) -> Result<(), SearchError> {
        self.check(&v)?;
        if self.originals.contains_key(&id) {
            return Err(SearchError::DuplicateId);
        }
        if v.has_zero_vector() {
            self.fallback.push(id);
        } else {
            let longs = (1..=self.m).map(|n| long_candidate(&v, n)).collect::<Result<Vec<_>, _>>()?;
            for (n, lv) in (1..=self.m).zip(longs) {
                self.structures.entry((n, v.len())).or_default().push((id, lv));
            }
        }
        self.originals.insert(id, v);
        Ok(())
    }

    /// Best dot-product score of every candidate against `a`.
    fn grid_scores(&self, a: &LineageVectorSet, params: &SimilarityParams) -> Result<Vec<(I, f64)>, SearchError> {
        self.check(a)?;
        if a.has_zero_vector() {
            return self.originals.iter().map(|(id, v)| Ok((*id, set_similarity(a, v, params)?))).collect();
        }
        let mut scores = Vec::with_capacity(self.originals.len());
        for k in 1..=self.m {
            let entries = self.structure(a.len(), k);
            if entries.is_empty() {
                continue;
            }
            let targets = long_targets(a, k, params)?;
            for (id, lv) in entries {
                let best = targets.iter().map(|t| t.dot(lv)).fold(f64::NEG_INFINITY, f64::max);
                scores.push((*id, best));
            }
        }
        for id in &self.fallback {
            scores.push((*id, set_similarity(a, &self.originals[id], params)?));
        }
        Ok(scores)
    }

    fn rescore(&self, a: &LineageVectorSet, id: I, params: &SimilarityParams) -> Result<f64, SearchError> {
        Ok(set_similarity(a, &self.originals[&id], params)?)
    }

    /// Highest-scoring candidate (ties to the smallest id), with its score
    /// recomputed by `set_similarity`.
    pub fn search(&self, a: &LineageVectorSet, params: &SimilarityParams) -> Result<(I, f64), SearchError> {
        let scores = self.grid_scores(a, params)?;
        let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        if scores.is_empty() {
            return Err(SearchError::NoCandidates);
        }
        let mut shortlist = scores
            .into_iter()
            .filter(|(_, s)| *s >= best - RESCORE_EPSILON)
            .map(|(id, _)| Ok((id, self.rescore(a, id, params)?)))
            .collect::<Result<Vec<_>, SearchError>>()?;
        rank_scores(&mut shortlist);
        Ok(shortlist[0])
    }

    /// Top `k` candidates; the grid score selects, the exact score orders.
    pub fn search_top_k(
        &self,
        a: &LineageVectorSet,
        k: usize,
        params: &SimilarityParams,
    ) -> Result<Vec<(I, f64)>, SearchError> {
        let mut scores = self.grid_scores(a, params)?;
        if scores.is_empty() {
            return Err(SearchError::NoCandidates);
        }
        rank_scores(&mut scores);
        let cutoff = scores.get(k.saturating_sub(1)).map_or(f64::NEG_INFINITY, |s| s.1) - RESCORE_EPSILON;
        let mut kept = scores
            .into_iter()
            .enumerate()
            .take_while(|(rank, (_, s))| *rank < k || *s >= cutoff)
            .map(|(_, (id, _))| Ok((id, self.rescore(a, id, params)?)))
            .collect::<Result<Vec<_>, SearchError>>()?;
        rank_scores(&mut kept);
        kept.truncate(k);
        Ok(kept)
    }
}

/// Lineage representation compared by the exhaustive baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Tuple(LineageVectorSet),
    Columns(ColumnLineageMap),
}

/// Options that only apply to column payloads.
#[derive(Debug, Clone)]
pub struct ColumnScoring<'a> {
    pub weights: &'a ColumnWeights,
    pub containment_threshold: f64,
}

/// Scores every candidate against `target` and returns the best `k`.
/// Column candidates filtered by containment are left out.
pub fn exhaustive_topk<I: Ord + Copy>(
    target: &Payload,
    candidates: &[(I, &Payload)],
    k: usize,
    params: &SimilarityParams,
    columns: &ColumnScoring<'_>,
) -> Result<Vec<(I, f64)>, SearchError> {
    let mut scored = Vec::with_capacity(candidates.len());
    for (id, cand) in candidates {
        let score = match (target, cand) {
            (Payload::Tuple(a), Payload::Tuple(b)) => Some(set_similarity(a, b, params)?),
            (Payload::Columns(a), Payload::Columns(b)) => {
                cv_similarity(a, b, params, columns.weights, columns.containment_threshold)?
            }
            _ => return Err(SearchError::PayloadMismatch),
        };
        if let Some(s) = score {
            scored.push((*id, s));
        }
    }
    rank_scores(&mut scored);
    scored.truncate(k);
    Ok(scored)
}
