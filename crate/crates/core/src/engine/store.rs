//! Line-delimited JSON persistence of a [`Database`].
//!
//! The first line is a header, followed by one line per table, per query,
//! one line for the dependency DAG, then one line per tuple in id order:
//!
//! ```text
//! {"lineage_store":1,"dim":64,"max_vectors":4,"clock":12}
//! {"@table":{"name":"products","columns":["ndb_no","name"],"kind":"base"}}
//! {"@query":{"id":"q1","target":"v","plan":"scan(products)","cols_of_interest":[],"ts":11}}
//! {"@dag":{...}}
//! {"id":1,"table":"products","values":[1,"x"],"ts":1,"query":null,"tv":["..."],"cv":{...},"direct":[]}
//! ```
//!
//! Tuple fields always appear in the order `id, table, values, ts, query, tv,
//! cv, direct`. Each vector is one string of space-separated components in
//! `{:.16e}` notation, which round-trips every `f64` exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::cv::ColumnLineageMap;
use crate::embedding::WordModel;
use crate::enhance::{QueryDependencyDag, QueryId};
use crate::linalg::Vector;
use crate::tv::LineageVectorSet;
use crate::value::Value;

use super::plan::parse_plan;
use super::{Database, EngineError, QueryDef, TableDef, TableKind, TupleId, TupleRecord};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    lineage_store: u32,
    dim: usize,
    max_vectors: usize,
    clock: u64,
}

#[derive(Serialize, Deserialize)]
struct TableLine {
    name: String,
    columns: Vec<String>,
    kind: TableKind,
}

#[derive(Serialize, Deserialize)]
struct QueryLine {
    id: QueryId,
    target: String,
    plan: String,
    cols_of_interest: BTreeSet<String>,
    ts: u64,
}

#[derive(Serialize, Deserialize)]
enum MetaLine {
    #[serde(rename = "@table")]
    Table(TableLine),
    #[serde(rename = "@query")]
    Query(QueryLine),
    #[serde(rename = "@dag")]
    Dag(QueryDependencyDag),
}

#[derive(Serialize, Deserialize)]
struct ColumnLine {
    native: bool,
    touched: u64,
    vectors: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TupleLine {
    id: TupleId,
    table: String,
    values: Vec<Value>,
    ts: u64,
    query: Option<QueryId>,
    tv: Option<Vec<String>>,
    cv: Option<BTreeMap<String, ColumnLine>>,
    direct: Vec<TupleId>,
}

pub fn format_vector(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn parse_vector(s: &str) -> Result<Vector, String> {
    s.split_ascii_whitespace().map(|x| x.parse::<f64>().map_err(|_| format!("bad vector component `{x}`"))).collect()
}

fn format_set(set: &LineageVectorSet) -> Vec<String> {
    set.vectors().iter().map(|v| format_vector(v)).collect()
}

fn parse_set(lines: &[String], max_vectors: usize) -> Result<LineageVectorSet, String> {
    let vectors = lines.iter().map(|l| parse_vector(l)).collect::<Result<Vec<_>, _>>()?;
    LineageVectorSet::new(vectors, max_vectors).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("store lines are always serializable")
}

impl Database {
    pub fn write_store<W: Write>(&self, mut out: W) -> Result<(), EngineError> {
        let header = Header {
            lineage_store: FORMAT_VERSION,
            dim: self.config.dim,
            max_vectors: self.config.max_vectors,
            clock: self.clock,
        };
        writeln!(out, "{}", to_json(&header))?;
        for t in self.tables.values() {
            let line = MetaLine::Table(TableLine { name: t.name.clone(), columns: t.columns.clone(), kind: t.kind });
            writeln!(out, "{}", to_json(&line))?;
        }
        for q in &self.queries {
            let line = MetaLine::Query(QueryLine {
                id: q.id.clone(),
                target: q.target.clone(),
                plan: q.plan.to_string(),
                cols_of_interest: q.cols_of_interest.clone(),
                ts: q.created_at,
            });
            writeln!(out, "{}", to_json(&line))?;
        }
        writeln!(out, "{}", to_json(&MetaLine::Dag(self.dag.clone())))?;
        for t in &self.tuples {
            let cv = t.cv.as_ref().map(|cv| {
                cv.entries()
                    .map(|(name, e)| {
                        let line =
                            ColumnLine { native: cv.is_native(name), touched: e.touched, vectors: format_set(&e.set) };
                        (name.clone(), line)
                    })
                    .collect()
            });
            let line = TupleLine {
                id: t.id,
                table: t.table.clone(),
                values: t.values.clone(),
                ts: t.created_at,
                query: t.creating_query.clone(),
                tv: t.tv.as_ref().map(format_set),
                cv,
                direct: t.exact_direct.iter().copied().collect(),
            };
            writeln!(out, "{}", to_json(&line))?;
        }
        Ok(())
    }

    /// Writes the store to `path` via a temporary file and a rename.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EngineError> {
        let path = path.as_ref();
        let tmp = path.with_extension("jsonl.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            self.write_store(&mut w)?;
            w.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_store<R: BufRead>(reader: R, config: Config, model: WordModel) -> Result<Self, EngineError> {
        let mut db = Database::new(config, model)?;
        let mut lines = reader.lines().enumerate();
        let bad = |line: usize, message: String| EngineError::Store { line: line + 1, message };
        let (_, first) = lines.next().ok_or_else(|| bad(0, "empty store".into()))?;
        let header: Header = serde_json::from_str(&first?).map_err(|e| bad(0, format!("bad header: {e}")))?;
        if header.lineage_store != FORMAT_VERSION {
            return Err(bad(0, format!("unsupported format version {}", header.lineage_store)));
        }
        if header.dim != db.config.dim || header.max_vectors != db.config.max_vectors {
            return Err(bad(
                0,
                format!(
                    "store has dim {} and max_vectors {}, config has {} and {}",
                    header.dim, header.max_vectors, db.config.dim, db.config.max_vectors
                ),
            ));
        }
        let max = db.config.max_vectors;
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if line.starts_with("{\"@") {
                let meta: MetaLine = serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?;
                match meta {
                    MetaLine::Table(t) => {
                        db.create_table(&t.name, &t.columns, t.kind).map_err(|e| bad(n, e.to_string()))?
                    }
                    MetaLine::Query(q) => {
                        let plan = parse_plan(&q.plan).map_err(|e| bad(n, e.to_string()))?;
                        db.query_index.insert(q.id.clone(), db.queries.len());
                        db.queries.push(QueryDef {
                            id: q.id,
                            target: q.target,
                            plan,
                            cols_of_interest: q.cols_of_interest,
                            created_at: q.ts,
                        });
                    }
                    MetaLine::Dag(dag) => db.dag = dag,
                }
                continue;
            }
            let t: TupleLine = serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?;
            if t.id.0 != db.tuples.len() as u64 + 1 {
                return Err(bad(n, format!("tuple id {} out of sequence", t.id)));
            }
            let def: &mut TableDef =
                db.tables.get_mut(&t.table).ok_or_else(|| bad(n, format!("unknown table `{}`", t.table)))?;
            if def.columns.len() != t.values.len() {
                return Err(bad(n, "value count does not match table".into()));
            }
            def.rows.push(t.id);
            let tv = t.tv.map(|v| parse_set(&v, max)).transpose().map_err(|e| bad(n, e))?;
            let cv = match t.cv {
                None => None,
                Some(cols) => {
                    let mut cv = ColumnLineageMap::new();
                    for (name, c) in cols {
                        let set = parse_set(&c.vectors, max).map_err(|e| bad(n, e))?;
                        if c.native {
                            cv.insert_native(name, set, c.touched);
                        } else {
                            cv.insert_inherited(name, set, c.touched);
                        }
                    }
                    Some(cv)
                }
            };
            let cols_of_interest = match &t.query {
                Some(q) => Some(db.query(q).map_err(|e| bad(n, e.to_string()))?.cols_of_interest.clone()),
                None => None,
            };
            if t.direct.iter().any(|d| d.0 == 0 || d.0 >= t.id.0) {
                return Err(bad(n, "direct lineage must reference earlier tuples".into()));
            }
            db.tuples.push(TupleRecord {
                id: t.id,
                table: t.table,
                values: t.values,
                created_at: t.ts,
                creating_query: t.query,
                cols_of_interest,
                tv,
                cv,
                exact_direct: t.direct.into_iter().collect(),
            });
        }
        db.clock = header.clock;
        Ok(db)
    }

    pub fn load(path: impl AsRef<Path>, config: Config, model: WordModel) -> Result<Self, EngineError> {
        Self::read_store(BufReader::new(File::open(path)?), config, model)
    }
}
