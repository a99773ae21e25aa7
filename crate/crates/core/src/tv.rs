//! Per-tuple lineage vector sets and their `+` / `·` combinators.
//!
//! A tuple's lineage is summarized by at most `max_vectors` vectors. The `+`
//! operation (alternative use of data) takes the union of two sets, the `·`
//! operation (joint use) takes all pairwise averages. Either result is
//! reduced back to `max_vectors` cluster centers with a seeded k-means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Vector};

pub const KMEANS_MAX_ITERS: usize = 100;
pub const KMEANS_TOLERANCE: f64 = 1e-6;
/// Independent k-means++ restarts; the lowest within-cluster SSE wins.
pub const KMEANS_RESTARTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LineageError {
    #[error("a lineage vector set needs at least one vector")]
    Empty,
    #[error("max_vectors must be positive")]
    ZeroCapacity,
    #[error("{len} vectors exceed max_vectors = {max}")]
    OverCapacity { len: usize, max: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("max_vectors mismatch: {0} vs {1}")]
    CapacityMismatch(usize, usize),
    #[error("lineage vectors must have finite components")]
    NonFinite,
    #[error("w_max and w_avg must be nonnegative with a positive sum")]
    BadWeights,
    #[error("column {0} is not present in the lineage map")]
    MissingColumn(String),
}

/// A nonempty set of at most `max_vectors` equal-dimension vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageVectorSet {
    vectors: Vec<Vector>,
    max_vectors: usize,
}

impl LineageVectorSet {
    pub fn new(vectors: Vec<Vector>, max_vectors: usize) -> Result<Self, LineageError> {
        if max_vectors == 0 {
            return Err(LineageError::ZeroCapacity);
        }
        let first = vectors.first().ok_or(LineageError::Empty)?;
        if vectors.len() > max_vectors {
            return Err(LineageError::OverCapacity { len: vectors.len(), max: max_vectors });
        }
        let dim = first.len();
        for v in &vectors {
            if v.len() != dim {
                return Err(LineageError::DimensionMismatch(dim, v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(LineageError::NonFinite);
            }
        }
        Ok(Self { vectors, max_vectors })
    }

    pub fn singleton(vector: Vector, max_vectors: usize) -> Result<Self, LineageError> {
        Self::new(vec![vector], max_vectors)
    }

    /// Builds a set from any number of vectors, clustering down to
    /// `max_vectors` when needed.
    pub fn capped(vectors: Vec<Vector>, max_vectors: usize, seed: u64) -> Result<Self, LineageError> {
        if vectors.is_empty() {
            return Err(LineageError::Empty);
        }
        if max_vectors == 0 {
            return Err(LineageError::ZeroCapacity);
        }
        Self::new(kmeans_cap(vectors, max_vectors, seed), max_vectors)
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vector> {
        self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn max_vectors(&self) -> usize {
        self.max_vectors
    }

    pub fn has_zero_vector(&self) -> bool {
        self.vectors.iter().any(|v| linalg::is_zero(v))
    }

    fn check_compatible(&self, other: &Self) -> Result<(), LineageError> {
        if self.dim() != other.dim() {
            return Err(LineageError::DimensionMismatch(self.dim(), other.dim()));
        }
        if self.max_vectors != other.max_vectors {
            return Err(LineageError::CapacityMismatch(self.max_vectors, other.max_vectors));
        }
        Ok(())
    }
}

/// Weights of the best-pair and average-pair terms of the set similarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    w_max: f64,
    w_avg: f64,
}

impl SimilarityParams {
    pub fn new(w_max: f64, w_avg: f64) -> Result<Self, LineageError> {
        let ok = w_max.is_finite() && w_avg.is_finite() && w_max >= 0.0 && w_avg >= 0.0;
        if !ok || w_max + w_avg <= 0.0 {
            return Err(LineageError::BadWeights);
        }
        Ok(Self { w_max, w_avg })
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn w_avg(&self) -> f64 {
        self.w_avg
    }
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self { w_max: 1.0, w_avg: 1.0 }
    }
}

fn nearest(point: &[f64], centers: &[Vector]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = linalg::squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn kmeans_plus_plus_init(points: &[Vector], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())].clone());
    let mut dist: Vec<f64> = points.iter().map(|p| linalg::squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, d) in dist.iter().enumerate() {
                if target < *d {
                    chosen = Some(i);
                    break;
                }
                target -= d;
            }
            // rounding can run past the last positive weight
            chosen.unwrap_or_else(|| dist.iter().rposition(|d| *d > 0.0).unwrap())
        } else {
            rng.random_range(0..points.len())
        };
        let center = points[pick].clone();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(linalg::squared_distance(p, &center));
        }
        centers.push(center);
    }
    centers
}

fn lloyd(points: &[Vector], mut centers: Vec<Vector>) -> (Vec<Vector>, f64) {
    let dim = points[0].len();
    for _ in 0..KMEANS_MAX_ITERS {
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for p in points {
            let (c, _) = nearest(p, &centers);
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for (i, center) in centers.iter_mut().enumerate() {
            if counts[i] == 0 {
                continue;
            }
            let n = counts[i] as f64;
            let updated: Vector = sums[i].iter().map(|s| s / n).collect();
            shift = shift.max(linalg::squared_distance(center, &updated).sqrt());
            *center = updated;
        }
        if shift <= KMEANS_TOLERANCE {
            break;
        }
    }
    let sse = points.iter().map(|p| nearest(p, &centers).1).sum();
    (centers, sse)
}

/// Reduces `vectors` to at most `k` representatives.
///
/// Inputs with at most `k` vectors are returned unchanged. Otherwise the
/// result is exactly `k` k-means centers (k-means++ seeding, Lloyd
/// iterations), deterministic in the input order and `seed`.
pub fn kmeans_cap(vectors: Vec<Vector>, k: usize, seed: u64) -> Vec<Vector> {
    assert!(k >= 1, "k must be positive");
    if vectors.len() <= k {
        return vectors;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<Vector>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let init = kmeans_plus_plus_init(&vectors, k, &mut rng);
        let (centers, sse) = lloyd(&vectors, init);
        if best.as_ref().is_none_or(|(_, b)| sse < *b) {
            best = Some((centers, sse));
        }
    }
    best.unwrap().0
}

/// `A + B`: union, then clustering down to `max_vectors`.
pub fn tv_add(a: &LineageVectorSet, b: &LineageVectorSet, seed: u64) -> Result<LineageVectorSet, LineageError> {
    a.check_compatible(b)?;
    let union: Vec<Vector> = a.vectors.iter().chain(&b.vectors).cloned().collect();
    LineageVectorSet::capped(union, a.max_vectors, seed)
}

/// `A · B`: every pairwise average, then clustering down to `max_vectors`.
pub fn tv_mul(a: &LineageVectorSet, b: &LineageVectorSet, seed: u64) -> Result<LineageVectorSet, LineageError> {
    a.check_compatible(b)?;
    let products: Vec<Vector> =
        a.vectors.iter().flat_map(|u| b.vectors.iter().map(move |v| linalg::midpoint(u, v))).collect();
    LineageVectorSet::capped(products, a.max_vectors, seed)
}

/// Weighted blend of the best pairwise cosine and the mean pairwise cosine.
pub fn set_similarity(
    a: &LineageVectorSet,
    b: &LineageVectorSet,
    params: &SimilarityParams,
) -> Result<f64, LineageError> {
    if a.dim() != b.dim() {
        return Err(LineageError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(set_similarity_unchecked(a.vectors(), b.vectors(), params))
}

pub(crate) fn set_similarity_unchecked(a: &[Vector], b: &[Vector], params: &SimilarityParams) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for u in a {
        for v in b {
            let c = linalg::cosine(u, v);
            best = best.max(c);
            sum += c;
        }
    }
    let avg = sum / (a.len() * b.len()) as f64;
    let s = (params.w_max * best + params.w_avg * avg) / (params.w_max + params.w_avg);
    s.clamp(-1.0, 1.0)
}

/// Sorts scored ids by descending score, ties by ascending id.
pub fn rank_scores<I: Ord + Copy>(scores: &mut [(I, f64)]) {
    scores.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
}

/// Top `k` candidates by set similarity to `target`.
pub fn top_k_similar<I: Ord + Copy>(
    target: &LineageVectorSet,
    candidates: &[(I, LineageVectorSet)],
    k: usize,
    params: &SimilarityParams,
) -> Result<Vec<(I, f64)>, LineageError> {
    let mut scored = candidates
        .iter()
        .map(|(id, set)| set_similarity(target, set, params).map(|s| (*id, s)))
        .collect::<Result<Vec<_>, _>>()?;
    rank_scores(&mut scored);
    scored.truncate(k);
    Ok(scored)
}
