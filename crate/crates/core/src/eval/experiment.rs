//! Precision and recall of lineage rankings over a set of targets.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::metrics::{fraction_k, precision, random_baseline, recall_level};
use crate::engine::{Database, EngineError, TupleId};
use crate::explain::{Group, Method, RankRequest};

pub const FRACTIONS: [f64; 4] = [1.0, 0.75, 0.5, 0.25];
pub const LEVELS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub target: TupleId,
    pub table: String,
    pub method: Method,
    pub group: Group,
    pub enhanced: bool,
    /// Exact lineage size within the candidate group.
    pub total: usize,
    pub level_sizes: [usize; LEVELS],
    /// Precision at `FRACTIONS` of `total`; `None` when `total` is 0.
    pub precision: [Option<f64>; 4],
    pub recall: [Option<f64>; LEVELS],
    pub random_baseline: Option<f64>,
    pub flags: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

fn restrict(levels: &[BTreeSet<TupleId>], group: &BTreeSet<TupleId>) -> Vec<BTreeSet<TupleId>> {
    levels
        .iter()
        .enumerate()
        .map(|(i, l)| if i == 0 { l.clone() } else { l.intersection(group).copied().collect() })
        .collect()
}

fn evaluate_one(
    db: &Database,
    t: TupleId,
    req: &RankRequest,
    group: &BTreeSet<TupleId>,
) -> Result<ReportRow, EngineError> {
    let levels = restrict(&db.distant_lineage(t)?.levels, group);
    let exact: BTreeSet<TupleId> = levels.iter().skip(1).flatten().copied().collect();
    let ranked: Vec<TupleId> = db.rank(t, req)?.into_iter().map(|(id, _)| id).collect();
    let total = exact.len();
    let mut flags = Vec::new();
    if ranked.is_empty() {
        flags.push("empty_ranking");
    }
    if total == 0 {
        flags.push("no_lineage_in_group");
    }
    let precision = FRACTIONS
        .map(|f| (total > 0).then(|| precision(&ranked, fraction_k(total, f), &exact).expect("k is at least 1")));
    let candidates = group.len() - usize::from(group.contains(&t));
    Ok(ReportRow {
        target: t,
        table: db.tuple(t)?.table.clone(),
        method: req.method,
        group: req.group,
        enhanced: req.enhance.timestamp_filter || req.enhance.dag_weighting,
        total,
        level_sizes: std::array::from_fn(|i| levels.get(i + 1).map_or(0, BTreeSet::len)),
        precision,
        recall: std::array::from_fn(|i| recall_level(&levels, i + 1, &ranked)),
        random_baseline: random_baseline(total, candidates).ok(),
        flags,
    })
}

/// Ranks every target against `group` and scores the ranking. Rows come out
/// in the order of `targets` whatever the thread count.
pub fn run_experiment(
    db: &Database,
    targets: &[TupleId],
    method: Method,
    group: Group,
    enhance: bool,
) -> Result<EvalReport, EngineError> {
    let mut req = RankRequest::distant(method, group);
    if !enhance {
        req = req.without_enhancements();
    }
    let members: BTreeSet<TupleId> = group.members(db).into_iter().collect();
    let rows = targets.par_iter().map(|&t| evaluate_one(db, t, &req, &members)).collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport { rows })
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = xs.flatten().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

const HEADER: [&str; 20] = [
    "target",
    "table",
    "method",
    "group",
    "enhanced",
    "total",
    "len_l1",
    "len_l2",
    "len_l3",
    "len_l4",
    "p100",
    "p075",
    "p050",
    "p025",
    "recall_l1",
    "recall_l2",
    "recall_l3",
    "recall_l4",
    "random_baseline",
    "flags",
];

impl ReportRow {
    fn cells(&self) -> Vec<String> {
        let mut out = vec![
            self.target.0.to_string(),
            self.table.clone(),
            self.method.to_string(),
            self.group.to_string(),
            self.enhanced.to_string(),
            self.total.to_string(),
        ];
        out.extend(self.level_sizes.iter().map(usize::to_string));
        out.extend(self.precision.iter().map(|p| cell(*p)));
        out.extend(self.recall.iter().map(|r| cell(*r)));
        out.push(cell(self.random_baseline));
        out.push(self.flags.join(";"));
        out
    }
}

impl EvalReport {
    /// Mean precision at k = total over targets with lineage in the group.
    pub fn mean_total_precision(&self) -> Option<f64> {
        mean(self.rows.iter().map(|r| r.precision[0]))
    }

    pub fn mean_precision(&self, fraction: usize) -> Option<f64> {
        mean(self.rows.iter().map(|r| r.precision[fraction]))
    }

    pub fn mean_recall(&self, level: usize) -> Option<f64> {
        mean(self.rows.iter().map(|r| r.recall[level]))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.cells()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    /// Column-aligned table followed by per-column means.
    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self.rows.iter().map(ReportRow::cells).collect();
        let widths: Vec<usize> = (0..HEADER.len())
            .map(|c| rows.iter().map(|r| r[c].len()).chain([HEADER[c].len()]).max().unwrap())
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        line(&mut out, &HEADER);
        for r in &rows {
            line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let _ = writeln!(out, "\ntargets: {}", self.rows.len());
        for (i, name) in ["p100", "p075", "p050", "p025"].iter().enumerate() {
            let _ = writeln!(out, "mean {name}: {}", cell(self.mean_precision(i)));
        }
        for l in 0..LEVELS {
            let _ = writeln!(out, "mean recall_l{}: {}", l + 1, cell(self.mean_recall(l)));
        }
        let _ = writeln!(out, "mean random_baseline: {}", cell(mean(self.rows.iter().map(|r| r.random_baseline))));
        out
    }
}
