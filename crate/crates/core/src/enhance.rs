//! Ranking refinements: creation-timestamp filtering, query-dependent column
//! weighting, and a bounded query-dependency DAG.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cv::{cv_similarity, ColumnLineageMap};
use crate::embedding::ColumnWeights;
use crate::tv::{rank_scores, LineageError, SimilarityParams};

pub const DEFAULT_BOOST: f64 = 2.0;
pub const DEFAULT_W_OUTSIDER: f64 = 0.25;
pub const DEFAULT_MAX_NODES: usize = 1024;
pub const DEFAULT_MAX_HEIGHT: usize = 10;

/// Identifier of a query that inserted tuples.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryId(pub String);

impl QueryId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for QueryId {
    fn from(s: &str) -> Self {
        QueryId(s.to_string())
    }
}

impl From<String> for QueryId {
    fn from(s: String) -> Self {
        QueryId(s)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnhanceError {
    #[error("unknown query `{0}`")]
    UnknownQuery(QueryId),
    #[error("query `{0}` is already registered")]
    DuplicateQuery(QueryId),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// `w_d = max(1/2, 1 - (d-1)/10)`; distance 0 (the query itself) weighs 1.
pub fn distance_weight(d: usize) -> f64 {
    if d == 0 {
        return 1.0;
    }
    (1.0 - (d as f64 - 1.0) / 10.0).max(0.5)
}

/// Which queries depend on which, bounded in size and traversal height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryDependencyDag {
    nodes: VecDeque<QueryId>,
    edges: BTreeMap<QueryId, BTreeSet<QueryId>>,
    max_nodes: usize,
    max_height: usize,
    w_outsider: f64,
}

impl Default for QueryDependencyDag {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_NODES, DEFAULT_MAX_HEIGHT, DEFAULT_W_OUTSIDER).unwrap()
    }
}

impl QueryDependencyDag {
    /// `w_outsider` must lie strictly between 0 and the weight at distance `max_height`.
    pub fn new(max_nodes: usize, max_height: usize, w_outsider: f64) -> Result<Self, EnhanceError> {
        if max_nodes == 0 {
            return Err(EnhanceError::BadParameter("max node count must be positive".into()));
        }
        if max_height == 0 {
            return Err(EnhanceError::BadParameter("max height must be positive".into()));
        }
        let floor = distance_weight(max_height);
        if !(w_outsider > 0.0 && w_outsider < floor) {
            return Err(EnhanceError::BadParameter(format!("w_outsider must be in (0, {floor}), got {w_outsider}")));
        }
        Ok(Self { nodes: VecDeque::new(), edges: BTreeMap::new(), max_nodes, max_height, w_outsider })
    }

    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    pub fn max_height(&self) -> usize {
        self.max_height
    }

    pub fn w_outsider(&self) -> f64 {
        self.w_outsider
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, q: &QueryId) -> bool {
        self.edges.contains_key(q)
    }

    /// Nodes in insertion order, oldest first.
    pub fn nodes(&self) -> impl Iterator<Item = &QueryId> {
        self.nodes.iter()
    }

    pub fn dependencies(&self, q: &QueryId) -> Option<&BTreeSet<QueryId>> {
        self.edges.get(q)
    }

    /// Adds `q` with edges to those of `deps` still present, then evicts the
    /// oldest nodes while over capacity.
    pub fn register(&mut self, q: QueryId, deps: impl IntoIterator<Item = QueryId>) -> Result<(), EnhanceError> {
        if self.contains(&q) {
            return Err(EnhanceError::DuplicateQuery(q));
        }
        let deps: BTreeSet<QueryId> = deps.into_iter().filter(|d| *d != q && self.contains(d)).collect();
        self.nodes.push_back(q.clone());
        self.edges.insert(q, deps);
        while self.nodes.len() > self.max_nodes {
            let old = self.nodes.pop_front().unwrap();
            self.edges.remove(&old);
            for targets in self.edges.values_mut() {
                targets.remove(&old);
            }
        }
        Ok(())
    }

    /// Shortest path length from `q` to `p`, not looking further than the
    /// maximum height.
    pub fn distance(&self, q: &QueryId, p: &QueryId) -> Option<usize> {
        if !self.contains(q) {
            return None;
        }
        if q == p {
            return Some(0);
        }
        let mut seen = BTreeSet::from([q]);
        let mut frontier = vec![q];
        for d in 1..=self.max_height {
            let mut next = Vec::new();
            for node in frontier {
                for dep in &self.edges[node] {
                    if dep == p {
                        return Some(d);
                    }
                    if seen.insert(dep) {
                        next.push(dep);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        None
    }

    /// Weight for a candidate created by `p` when explaining a tuple created by `q`.
    pub fn weight(&self, q: &QueryId, p: &QueryId) -> Result<f64, EnhanceError> {
        if !self.contains(q) {
            return Err(EnhanceError::UnknownQuery(q.clone()));
        }
        Ok(match self.distance(q, p) {
            Some(d) => distance_weight(d),
            None => self.w_outsider,
        })
    }
}

/// `cw` with the weight of every column of interest multiplied by `boost`.
pub fn boosted_weights(cw: &ColumnWeights, columns_of_interest: &BTreeSet<String>, boost: f64) -> ColumnWeights {
    cw.scaled(columns_of_interest, boost)
}

/// Column similarity emphasising the columns the creating query mentions.
pub fn weighted_column_similarity(
    target: &ColumnLineageMap,
    candidate: &ColumnLineageMap,
    columns_of_interest: &BTreeSet<String>,
    boost: f64,
    params: &SimilarityParams,
    cw: &ColumnWeights,
    containment_threshold: f64,
) -> Result<Option<f64>, LineageError> {
    let weights = boosted_weights(cw, columns_of_interest, boost);
    cv_similarity(target, candidate, params, &weights, containment_threshold)
}

/// The facts about a tuple that the refinements look at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance<'a> {
    pub created_at: u64,
    pub creating_query: Option<&'a QueryId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnhanceOptions {
    pub timestamp_filter: bool,
    pub dag_weighting: bool,
}

impl EnhanceOptions {
    pub const ALL: Self = Self { timestamp_filter: true, dag_weighting: true };
    pub const NONE: Self = Self { timestamp_filter: false, dag_weighting: false };
}

/// Drops candidates not older than the target, multiplies computed
/// candidates' scores by their DAG weight and re-ranks.
///
/// A target whose creating query is unknown to the DAG (a base tuple, or an
/// evicted query) gets no DAG weighting.
pub fn apply_enhancements<'a, I: Ord + Copy>(
    target: Provenance<'_>,
    scored: impl IntoIterator<Item = (I, Provenance<'a>, f64)>,
    dag: &QueryDependencyDag,
    opts: EnhanceOptions,
) -> Vec<(I, f64)> {
    let weighting_query = target.creating_query.filter(|q| opts.dag_weighting && dag.contains(q));
    let mut out: Vec<(I, f64)> = scored
        .into_iter()
        .filter(|(_, p, _)| !opts.timestamp_filter || p.created_at < target.created_at)
        .map(|(id, p, score)| {
            let w = match (weighting_query, p.creating_query) {
                (Some(q), Some(cq)) => dag.weight(q, cq).unwrap(),
                _ => 1.0,
            };
            (id, score * w)
        })
        .collect();
    rank_scores(&mut out);
    out
}
