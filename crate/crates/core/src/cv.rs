//! Per-column ("gene") lineage: a map from full column names to lineage
//! vector sets, with native/inherited bookkeeping.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embedding::{column_vector, ColumnWeights, WordModel};
use crate::tv::{self, LineageError, LineageVectorSet, SimilarityParams};
use crate::value::Value;

/// One column's lineage vectors and the logical time it was last updated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnEntry {
    pub set: LineageVectorSet,
    pub touched: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnLineageMap {
    entries: BTreeMap<String, ColumnEntry>,
    native: BTreeSet<String>,
    inherited: BTreeSet<String>,
}

/// Where a native column of a computed tuple takes its value from.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSource {
    /// An existing column, by full name.
    Column(String),
    Constant(Value),
}

/// Assignment of one native column (full name) of a result tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct NativeAssignment {
    pub target: String,
    pub source: ColumnSource,
}

impl ColumnLineageMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Map for an explicitly inserted tuple: every column is native.
    pub fn from_native(columns: impl IntoIterator<Item = (String, LineageVectorSet)>, touched: u64) -> Self {
        let mut map = Self::new();
        for (name, set) in columns {
            map.insert_native(name, set, touched);
        }
        map
    }

    pub fn insert_native(&mut self, column: String, set: LineageVectorSet, touched: u64) {
        self.inherited.remove(&column);
        self.native.insert(column.clone());
        self.entries.insert(column, ColumnEntry { set, touched });
    }

    pub fn insert_inherited(&mut self, column: String, set: LineageVectorSet, touched: u64) {
        self.native.remove(&column);
        self.inherited.insert(column.clone());
        self.entries.insert(column, ColumnEntry { set, touched });
    }

    pub fn get(&self, column: &str) -> Option<&LineageVectorSet> {
        self.entries.get(column).map(|e| &e.set)
    }

    pub fn entry(&self, column: &str) -> Option<&ColumnEntry> {
        self.entries.get(column)
    }

    pub fn contains(&self, column: &str) -> bool {
        self.entries.contains_key(column)
    }

    /// All lineage columns, in name order.
    pub fn columns(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &ColumnEntry)> {
        self.entries.iter()
    }

    pub fn native_columns(&self) -> &BTreeSet<String> {
        &self.native
    }

    pub fn inherited_columns(&self) -> &BTreeSet<String> {
        &self.inherited
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_native(&self, column: &str) -> bool {
        self.native.contains(column)
    }
}

fn combine<F>(a: &ColumnLineageMap, b: &ColumnLineageMap, op: F) -> Result<ColumnLineageMap, LineageError>
where
    F: Fn(&LineageVectorSet, &LineageVectorSet) -> Result<LineageVectorSet, LineageError>,
{
    let mut out = ColumnLineageMap::new();
    for column in a.entries.keys().chain(b.entries.keys()) {
        if out.entries.contains_key(column) {
            continue;
        }
        let entry = match (a.entries.get(column), b.entries.get(column)) {
            (Some(x), Some(y)) => ColumnEntry { set: op(&x.set, &y.set)?, touched: x.touched.max(y.touched) },
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => unreachable!(),
        };
        out.entries.insert(column.clone(), entry);
    }
    // Either side's classification carries over; a column may transiently be
    // both native and inherited until the result is finalized.
    out.native = a.native.union(&b.native).cloned().collect();
    out.inherited = a.inherited.union(&b.inherited).cloned().collect();
    Ok(out)
}

/// Columnwise `+`: shared columns are added, the rest are copied.
pub fn cv_add(a: &ColumnLineageMap, b: &ColumnLineageMap, seed: u64) -> Result<ColumnLineageMap, LineageError> {
    combine(a, b, |x, y| tv::tv_add(x, y, seed))
}

/// Columnwise `·`: shared columns are multiplied, the rest are copied.
pub fn cv_mul(a: &ColumnLineageMap, b: &ColumnLineageMap, seed: u64) -> Result<ColumnLineageMap, LineageError> {
    combine(a, b, |x, y| tv::tv_mul(x, y, seed))
}

/// Settles the lineage of a result tuple's native columns.
///
/// Every key present before the call counts as inherited. For each target
/// column `A`:
///
/// * `A` not inherited, copied from `A'`: `CV[A] = CV[A']`
/// * `A` inherited, copied from `A' != A`: `CV[A] = CV[A] · CV[A']`
/// * `A` not inherited, constant: `CV[A] = {initial_vector(const)}`
/// * `A` inherited, constant: `CV[A] = CV[A] · {initial_vector(const)}`
///
/// Sources are read from the map as it was before any assignment. Afterwards
/// the targets are the native columns and every other key is inherited.
/// `now` stamps the rewritten columns.
pub fn finalize_native(
    cv: &ColumnLineageMap,
    assignments: &[NativeAssignment],
    model: &WordModel,
    max_vectors: usize,
    seed: u64,
    now: u64,
) -> Result<ColumnLineageMap, LineageError> {
    let mut out = cv.clone();
    let mut targets = BTreeSet::new();
    for NativeAssignment { target, source } in assignments {
        let inherited = cv.entries.get(target);
        let entry = match source {
            ColumnSource::Column(src) => {
                let src_entry = cv.entries.get(src).ok_or_else(|| LineageError::MissingColumn(src.clone()))?;
                match inherited {
                    None => src_entry.clone(),
                    Some(own) if src == target => own.clone(),
                    Some(own) => ColumnEntry { set: tv::tv_mul(&own.set, &src_entry.set, seed)?, touched: now },
                }
            }
            ColumnSource::Constant(value) => {
                let initial = LineageVectorSet::singleton(column_vector(target, value, model), max_vectors)?;
                match inherited {
                    None => ColumnEntry { set: initial, touched: now },
                    Some(own) => ColumnEntry { set: tv::tv_mul(&own.set, &initial, seed)?, touched: now },
                }
            }
        };
        out.entries.insert(target.clone(), entry);
        targets.insert(target.clone());
    }
    out.inherited = out.entries.keys().filter(|k| !targets.contains(*k)).cloned().collect();
    out.native = targets;
    Ok(out)
}

/// Bounds the number of lineage columns to `bound`, preferring native columns,
/// then inherited ones by most recent update (ties by name).
pub fn drop_columns(cv: &ColumnLineageMap, bound: usize) -> ColumnLineageMap {
    if cv.len() <= bound {
        return cv.clone();
    }
    let mut keep: Vec<&String> = cv.native.iter().take(bound).collect();
    let mut inherited: Vec<(&String, u64)> =
        cv.inherited.iter().filter(|c| !cv.native.contains(*c)).map(|c| (c, cv.entries[c].touched)).collect();
    inherited.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(y.0)));
    let room = bound.saturating_sub(keep.len());
    keep.extend(inherited.into_iter().take(room).map(|(c, _)| c));

    let mut out = ColumnLineageMap::new();
    for c in keep {
        let entry = cv.entries[c].clone();
        if cv.native.contains(c) {
            out.native.insert(c.clone());
        } else {
            out.inherited.insert(c.clone());
        }
        out.entries.insert(c.clone(), entry);
    }
    out
}

/// Fraction of the candidate's lineage columns that the target also has.
pub fn containment_rate(target: &ColumnLineageMap, candidate: &ColumnLineageMap) -> f64 {
    if candidate.is_empty() {
        return 1.0;
    }
    let shared = candidate.columns().filter(|c| target.contains(c)).count();
    shared as f64 / candidate.len() as f64
}

/// Similarity over mutual columns, or `None` when the candidate is filtered
/// out because too few of its columns appear in the target.
pub fn cv_similarity(
    target: &ColumnLineageMap,
    candidate: &ColumnLineageMap,
    params: &SimilarityParams,
    weights: &ColumnWeights,
    containment_threshold: f64,
) -> Result<Option<f64>, LineageError> {
    if containment_rate(target, candidate) < containment_threshold {
        return Ok(None);
    }
    let mut weighted = 0.0;
    let mut total_weight = 0.0;
    let mut plain = 0.0;
    let mut mutual = 0usize;
    for (column, entry) in &candidate.entries {
        let Some(own) = target.entries.get(column) else {
            continue;
        };
        let s = tv::set_similarity(&own.set, &entry.set, params)?;
        let w = weights.weight(column);
        weighted += w * s;
        total_weight += w;
        plain += s;
        mutual += 1;
    }
    if mutual == 0 {
        return Ok(Some(0.0));
    }
    if total_weight > 0.0 {
        Ok(Some(weighted / total_weight))
    } else {
        Ok(Some(plain / mutual as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;

    fn lv(v: &[f64]) -> LineageVectorSet {
        LineageVectorSet::singleton(v.to_vec(), 4).unwrap()
    }

    fn lvs(vs: &[&[f64]]) -> LineageVectorSet {
        LineageVectorSet::new(vs.iter().map(|v| v.to_vec()).collect(), 4).unwrap()
    }

    fn map(native: &[(&str, LineageVectorSet)], inherited: &[(&str, LineageVectorSet)]) -> ColumnLineageMap {
        let mut m = ColumnLineageMap::new();
        for (c, s) in native {
            m.insert_native(c.to_string(), s.clone(), 1);
        }
        for (c, s) in inherited {
            m.insert_inherited(c.to_string(), s.clone(), 1);
        }
        m
    }

    fn running_example() -> (ColumnLineageMap, ColumnLineageMap) {
        let cv1 = map(&[("A", lv(&[1.0, 0.0])), ("B", lv(&[0.0, 1.0]))], &[]);
        let cv2 = map(&[("B", lv(&[1.0, 1.0])), ("C", lv(&[2.0, 0.0]))], &[]);
        (cv1, cv2)
    }

    fn keys(m: &ColumnLineageMap) -> Vec<&str> {
        m.columns().map(String::as_str).collect()
    }

    #[test]
    fn add_follows_running_example() {
        let (cv1, cv2) = running_example();
        let cv3 = cv_add(&cv1, &cv2, 0).unwrap();
        assert_eq!(keys(&cv3), ["A", "B", "C"]);
        assert_eq!(cv3.get("A"), cv1.get("A"));
        assert_eq!(cv3.get("C"), cv2.get("C"));
        let b = tv::tv_add(cv1.get("B").unwrap(), cv2.get("B").unwrap(), 0).unwrap();
        assert_eq!(cv3.get("B"), Some(&b));
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn mul_follows_running_example() {
        let (cv1, cv2) = running_example();
        let cv3 = cv_mul(&cv1, &cv2, 0).unwrap();
        assert_eq!(keys(&cv3), ["A", "B", "C"]);
        assert_eq!(cv3.get("A"), cv1.get("A"));
        assert_eq!(cv3.get("C"), cv2.get("C"));
        assert_eq!(cv3.get("B").unwrap().vectors(), &[vec![0.5, 1.0]]);
    }

    #[test]
    fn degenerate_combinations() {
        let (cv1, cv2) = running_example();
        let empty = ColumnLineageMap::new();
        assert_eq!(cv_add(&cv1, &empty, 0).unwrap(), cv1);
        assert_eq!(cv_mul(&empty, &cv2, 0).unwrap(), cv2);
        let only_a = map(&[("A", lv(&[1.0, 0.0]))], &[]);
        let only_c = map(&[("C", lv(&[0.0, 1.0]))], &[]);
        let u = cv_add(&only_a, &only_c, 0).unwrap();
        assert_eq!(keys(&u), ["A", "C"]);
        let same = map(&[("A", lv(&[0.2, 0.4]))], &[]);
        assert_eq!(cv_mul(&same, &same, 0).unwrap().get("A").unwrap().vectors(), &[vec![0.2, 0.4]]);
    }

    #[test]
    fn drop_columns_native_priority() {
        let (cv1, cv2) = running_example();
        let cv3 = cv_add(&cv1, &cv2, 0).unwrap();
        let model = WordModel::new(2, 0).unwrap();
        let assigns = vec![
            NativeAssignment { target: "A".into(), source: ColumnSource::Column("A".into()) },
            NativeAssignment { target: "B".into(), source: ColumnSource::Column("B".into()) },
        ];
        let t3 = finalize_native(&cv3, &assigns, &model, 4, 0, 5).unwrap();
        assert_eq!(t3.native_columns().iter().collect::<Vec<_>>(), ["A", "B"]);
        assert_eq!(t3.inherited_columns().iter().collect::<Vec<_>>(), ["C"]);
        let dropped = drop_columns(&t3, 2);
        assert_eq!(keys(&dropped), ["A", "B"]);
        assert_eq!(dropped.get("B"), cv3.get("B"));
        assert_eq!(drop_columns(&t3, 3), t3);
    }

    #[test]
    fn drop_columns_when_natives_exceed_bound() {
        let m = map(&[("Z", lv(&[1.0])), ("A", lv(&[1.0])), ("M", lv(&[1.0]))], &[("B", lv(&[1.0]))]);
        let d = drop_columns(&m, 2);
        assert_eq!(d.len(), 2);
        assert_eq!(keys(&d), ["A", "M"]);
        assert!(d.inherited_columns().is_empty());
    }

    #[test]
    fn drop_columns_prefers_recent_inherited() {
        let mut m = ColumnLineageMap::new();
        m.insert_native("N".into(), lv(&[1.0]), 9);
        m.insert_inherited("old".into(), lv(&[1.0]), 1);
        m.insert_inherited("new".into(), lv(&[1.0]), 7);
        m.insert_inherited("also_new".into(), lv(&[1.0]), 7);
        assert_eq!(keys(&drop_columns(&m, 3)), ["N", "also_new", "new"]);
    }

    #[test]
    fn finalize_rule_copy_from_other_column() {
        let cv = map(&[], &[("T.a_src", lv(&[0.3, 0.1]))]);
        let model = WordModel::new(2, 0).unwrap();
        let assign = [NativeAssignment { target: "R.a".into(), source: ColumnSource::Column("T.a_src".into()) }];
        let out = finalize_native(&cv, &assign, &model, 4, 0, 2).unwrap();
        assert_eq!(out.get("R.a"), cv.get("T.a_src"));
        assert!(out.inherited_columns().contains("T.a_src"));
        assert!(out.is_native("R.a"));
    }

    #[test]
    fn finalize_rule_inherited_times_other_column() {
        let cv = map(&[], &[("R.a", lv(&[1.0, 0.0])), ("T.b", lv(&[0.0, 1.0]))]);
        let model = WordModel::new(2, 0).unwrap();
        let assign = [NativeAssignment { target: "R.a".into(), source: ColumnSource::Column("T.b".into()) }];
        let out = finalize_native(&cv, &assign, &model, 4, 0, 2).unwrap();
        assert_eq!(out.get("R.a").unwrap().vectors(), &[vec![0.5, 0.5]]);
    }

    #[test]
    fn finalize_rules_with_constants() {
        let mut model = WordModel::new(2, 0).unwrap();
        model.insert("x", vec![0.0, 4.0]).unwrap();
        let fresh = finalize_native(
            &ColumnLineageMap::new(),
            &[NativeAssignment { target: "R.a".into(), source: ColumnSource::Constant("x".into()) }],
            &model,
            4,
            0,
            3,
        )
        .unwrap();
        assert_eq!(fresh.get("R.a").unwrap().vectors(), &[vec![0.0, 4.0]]);

        let u: Vector = vec![2.0, 0.0];
        let cv = map(&[], &[("R.a", lv(&u))]);
        let out = finalize_native(
            &cv,
            &[NativeAssignment { target: "R.a".into(), source: ColumnSource::Constant("x".into()) }],
            &model,
            4,
            0,
            3,
        )
        .unwrap();
        // oracle: tv_mul of singletons is the midpoint (u + v) / 2
        assert_eq!(out.get("R.a").unwrap().vectors(), &[vec![1.0, 2.0]]);
    }

    #[test]
    fn finalize_missing_source_is_error() {
        let model = WordModel::new(2, 0).unwrap();
        let err = finalize_native(
            &ColumnLineageMap::new(),
            &[NativeAssignment { target: "R.a".into(), source: ColumnSource::Column("T.z".into()) }],
            &model,
            4,
            0,
            1,
        )
        .unwrap_err();
        assert_eq!(err, LineageError::MissingColumn("T.z".into()));
    }

    #[test]
    fn similarity_over_mutual_genes() {
        let p = SimilarityParams::default();
        let cw = ColumnWeights::uniform();
        let t = map(&[("A", lv(&[1.0, 0.0])), ("B", lv(&[1.0, 0.0])), ("C", lv(&[0.0, 1.0]))], &[]);
        let cand = map(&[("B", lv(&[1.0, 1.0])), ("C", lv(&[0.0, 1.0])), ("D", lv(&[1.0, 0.0]))], &[]);
        let sb = tv::set_similarity(t.get("B").unwrap(), cand.get("B").unwrap(), &p).unwrap();
        let sc = tv::set_similarity(t.get("C").unwrap(), cand.get("C").unwrap(), &p).unwrap();
        let got = cv_similarity(&t, &cand, &p, &cw, 0.5).unwrap().unwrap();
        assert!((got - (sb + sc) / 2.0).abs() < 1e-12);
        // 2 of 3 candidate columns are mutual
        assert_eq!(cv_similarity(&t, &cand, &p, &cw, 0.7).unwrap(), None);

        let subset = map(&[("A", lvs(&[&[1.0, 0.0]]))], &[]);
        assert!(cv_similarity(&t, &subset, &p, &cw, 1.0).unwrap().is_some());
        let disjoint = map(&[("Q", lv(&[1.0, 0.0]))], &[]);
        assert_eq!(cv_similarity(&t, &disjoint, &p, &cw, 0.5).unwrap(), None);
        assert_eq!(cv_similarity(&t, &disjoint, &p, &cw, 0.0).unwrap(), Some(0.0));
    }

    #[test]
    fn similarity_uses_column_weights() {
        let p = SimilarityParams::default();
        let t = map(&[("A", lv(&[1.0, 0.0])), ("B", lv(&[1.0, 0.0]))], &[]);
        let c = map(&[("A", lv(&[0.0, 1.0])), ("B", lv(&[1.0, 0.0]))], &[]);
        let cw = ColumnWeights::new([("B".to_string(), 2.0)], 1.0).unwrap();
        let got = cv_similarity(&t, &c, &p, &cw, 1.0).unwrap().unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-12);
    }
}
