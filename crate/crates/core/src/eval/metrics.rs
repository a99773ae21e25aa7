//! Ranking quality against the exact lineage.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::engine::TupleId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("k must be positive")]
    ZeroK,
    #[error("candidate count must be positive")]
    NoCandidates,
}

/// Share of the top `k` of `approx` that lies in `exact`. A ranking shorter
/// than `k` is judged on what it has; an empty ranking scores 0.
pub fn precision(approx: &[TupleId], k: usize, exact: &BTreeSet<TupleId>) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    let prefix = &approx[..k.min(approx.len())];
    if prefix.is_empty() {
        return Ok(0.0);
    }
    let hits = prefix.iter().filter(|id| exact.contains(id)).count();
    Ok(hits as f64 / prefix.len() as f64)
}

/// `D(t, i)`: size of the union of levels `1..=i`.
pub fn depth_prefix(levels: &[BTreeSet<TupleId>], i: usize) -> usize {
    levels.iter().skip(1).take(i).flatten().collect::<BTreeSet<_>>().len()
}

/// Share of level `i` found among the top `D(t, i)` of `approx`; `None` when
/// the level is missing or empty.
pub fn recall_level(levels: &[BTreeSet<TupleId>], i: usize, approx: &[TupleId]) -> Option<f64> {
    let level = levels.get(i).filter(|l| i >= 1 && !l.is_empty())?;
    let d = depth_prefix(levels, i);
    let hits = approx[..d.min(approx.len())].iter().filter(|id| level.contains(id)).count();
    Some(hits as f64 / level.len() as f64)
}

/// Expected precision of a uniformly random ranking.
pub fn random_baseline(lineage_size: usize, candidates: usize) -> Result<f64, MetricError> {
    if candidates == 0 {
        return Err(MetricError::NoCandidates);
    }
    Ok(lineage_size as f64 / candidates as f64)
}

/// Prefix length for a fraction of the total lineage size, at least 1.
pub fn fraction_k(total: usize, fraction: f64) -> usize {
    ((fraction * total as f64).round() as usize).max(1)
}
