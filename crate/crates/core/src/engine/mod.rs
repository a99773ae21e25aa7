//! In-memory relational store with lineage propagation.
//!
//! Every stored tuple carries its approximate lineage (a tuple vector set and
//! a column lineage map) and the exact ids of the tuples it was directly
//! derived from, which serve as the oracle.

mod exec;
pub mod plan;
pub mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::cv::{drop_columns, ColumnLineageMap};
use crate::embedding::{column_vector, tuple_vector, ColumnWeights, CorpusTable, EmbeddingError, WordModel};
use crate::enhance::{EnhanceError, QueryDependencyDag, QueryId};
use crate::tv::{LineageError, LineageVectorSet};
use crate::value::Value;

pub use exec::{QueryResult, ResultRow};
pub use plan::{parse_plan, ParseError, Plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TupleId(pub u64);

impl fmt::Display for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("table `{0}` already exists")]
    TableExists(String),
    #[error("table `{table}` expects {expected} values, got {got}")]
    Arity { table: String, expected: usize, got: usize },
    #[error("plan output {got:?} does not match columns {expected:?} of `{table}`")]
    SchemaMismatch { table: String, expected: Vec<String>, got: Vec<String> },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("cannot insert query results into base table `{0}`")]
    BaseTarget(String),
    #[error("unknown tuple {0}")]
    UnknownTuple(TupleId),
    #[error("tuple {0} is a base tuple")]
    NotComputed(TupleId),
    #[error("unresolvable column `{0}`")]
    UnknownColumn(String),
    #[error("ambiguous column `{0}`")]
    AmbiguousColumn(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("query `{0}` already exists")]
    DuplicateQuery(QueryId),
    #[error("unknown query `{0}`")]
    UnknownQuery(QueryId),
    #[error("tuple {0} has no stored lineage vectors")]
    MissingLineage(TupleId),
    #[error("model dimension {model} does not match configured dim {config}")]
    ModelDimension { config: usize, model: usize },
    #[error("no candidates to rank")]
    NoCandidates,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Lineage(#[from] LineageError),
    #[error(transparent)]
    Enhance(#[from] EnhanceError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("store line {line}: {message}")]
    Store { line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Base,
    View,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<String>,
    pub kind: TableKind,
    pub rows: Vec<TupleId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleRecord {
    pub id: TupleId,
    pub table: String,
    pub values: Vec<Value>,
    pub created_at: u64,
    pub creating_query: Option<QueryId>,
    pub cols_of_interest: Option<BTreeSet<String>>,
    pub tv: Option<LineageVectorSet>,
    pub cv: Option<ColumnLineageMap>,
    pub exact_direct: BTreeSet<TupleId>,
}

impl TupleRecord {
    pub fn is_computed(&self) -> bool {
        self.creating_query.is_some()
    }
}

/// A materializing query as registered in the store.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryDef {
    pub id: QueryId,
    pub target: String,
    pub plan: Plan,
    pub cols_of_interest: BTreeSet<String>,
    pub created_at: u64,
}

/// Derivation-depth levels of a tuple's lineage, `levels[0] = {t}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchicalLineage {
    pub levels: Vec<BTreeSet<TupleId>>,
}

impl HierarchicalLineage {
    /// Union of all levels below the tuple itself.
    pub fn exact(&self) -> BTreeSet<TupleId> {
        self.levels.iter().skip(1).flatten().copied().collect()
    }

    /// 1-based levels at which `id` occurs.
    pub fn levels_of(&self, id: TupleId) -> Vec<usize> {
        (1..self.levels.len()).filter(|&i| self.levels[i].contains(&id)).collect()
    }
}

/// Expands `direct` level by level from `t` until a level comes out empty.
pub fn hierarchical_lineage<F>(t: TupleId, mut direct: F) -> HierarchicalLineage
where
    F: FnMut(TupleId) -> BTreeSet<TupleId>,
{
    let mut levels = vec![BTreeSet::from([t])];
    loop {
        let next: BTreeSet<TupleId> = levels.last().unwrap().iter().flat_map(|id| direct(*id)).collect();
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    HierarchicalLineage { levels }
}

#[derive(Debug, Clone)]
pub struct Database {
    config: Config,
    model: WordModel,
    weights: ColumnWeights,
    tables: BTreeMap<String, TableDef>,
    tuples: Vec<TupleRecord>,
    queries: Vec<QueryDef>,
    query_index: BTreeMap<QueryId, usize>,
    dag: QueryDependencyDag,
    clock: u64,
}

impl Database {
    /// Empty database; `model` must have dimension `config.dim`.
    pub fn new(config: Config, model: WordModel) -> Result<Self, EngineError> {
        if model.dim() != config.dim {
            return Err(EngineError::ModelDimension { config: config.dim, model: model.dim() });
        }
        let dag = config.dag()?;
        Ok(Self {
            config,
            model,
            weights: ColumnWeights::uniform(),
            tables: BTreeMap::new(),
            tuples: Vec::new(),
            queries: Vec::new(),
            query_index: BTreeMap::new(),
            dag,
            clock: 0,
        })
    }

    /// Empty database whose tokens all use hash embeddings.
    pub fn with_hash_model(config: Config) -> Result<Self, EngineError> {
        let model = WordModel::new(config.dim, config.seed)?;
        Self::new(config, model)
    }

    /// Empty database using the model file named by the config, or hash
    /// embeddings when there is none.
    pub fn from_config(config: Config) -> Result<Self, EngineError> {
        match &config.model_path {
            Some(path) => {
                let model = WordModel::load(path)?.with_fallback_seed(config.seed);
                Self::new(config, model)
            }
            None => Self::with_hash_model(config),
        }
    }

    pub fn set_column_weights(&mut self, weights: ColumnWeights) {
        self.weights = weights;
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn model(&self) -> &WordModel {
        &self.model
    }

    pub fn column_weights(&self) -> &ColumnWeights {
        &self.weights
    }

    pub fn dag(&self) -> &QueryDependencyDag {
        &self.dag
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableDef> {
        self.tables.values()
    }

    pub fn table(&self, name: &str) -> Result<&TableDef, EngineError> {
        self.tables.get(name).ok_or_else(|| EngineError::UnknownTable(name.to_string()))
    }

    pub fn tuples(&self) -> &[TupleRecord] {
        &self.tuples
    }

    pub fn tuple(&self, id: TupleId) -> Result<&TupleRecord, EngineError> {
        id.0.checked_sub(1).and_then(|i| self.tuples.get(i as usize)).ok_or(EngineError::UnknownTuple(id))
    }

    pub fn queries(&self) -> &[QueryDef] {
        &self.queries
    }

    pub fn query(&self, id: &QueryId) -> Result<&QueryDef, EngineError> {
        self.query_index.get(id).map(|&i| &self.queries[i]).ok_or_else(|| EngineError::UnknownQuery(id.clone()))
    }

    /// Ids of the tuples stored in tables of the given kind.
    pub fn group(&self, kind: TableKind) -> Vec<TupleId> {
        let mut ids: Vec<TupleId> =
            self.tables.values().filter(|t| t.kind == kind).flat_map(|t| t.rows.iter().copied()).collect();
        ids.sort();
        ids
    }

    /// Name of the lineage column for `attr` of `table`.
    pub fn lineage_name(&self, table: &str, attr: &str) -> String {
        if self.config.prefix_stripping {
            attr.to_string()
        } else {
            format!("{table}.{attr}")
        }
    }

    pub fn create_table(&mut self, name: &str, columns: &[String], kind: TableKind) -> Result<(), EngineError> {
        if self.tables.contains_key(name) {
            return Err(EngineError::TableExists(name.to_string()));
        }
        let mut seen = BTreeSet::new();
        for c in columns {
            if !seen.insert(c) {
                return Err(EngineError::DuplicateColumn(c.clone()));
            }
        }
        self.tables.insert(
            name.to_string(),
            TableDef { name: name.to_string(), columns: columns.to_vec(), kind, rows: Vec::new() },
        );
        Ok(())
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Inserts an explicit (base) tuple with freshly computed lineage vectors.
    pub fn insert_base(&mut self, table: &str, values: Vec<Value>) -> Result<TupleId, EngineError> {
        let def = self.table(table)?;
        if def.columns.len() != values.len() {
            return Err(EngineError::Arity {
                table: table.to_string(),
                expected: def.columns.len(),
                got: values.len(),
            });
        }
        let names: Vec<String> = def.columns.iter().map(|c| self.lineage_name(table, c)).collect();
        let max = self.config.max_vectors;
        let tv = tuple_vector(names.iter().map(String::as_str).zip(values.iter()), &self.model, &self.weights);
        let tv = LineageVectorSet::singleton(tv, max)?;
        let now = self.tick();
        let mut columns = Vec::with_capacity(names.len());
        for (name, value) in names.into_iter().zip(&values) {
            let v = column_vector(&name, value, &self.model);
            columns.push((name, LineageVectorSet::singleton(v, max)?));
        }
        let cv = ColumnLineageMap::from_native(columns, now);
        let id = TupleId(self.tuples.len() as u64 + 1);
        self.tuples.push(TupleRecord {
            id,
            table: table.to_string(),
            values,
            created_at: now,
            creating_query: None,
            cols_of_interest: None,
            tv: Some(tv),
            cv: Some(cv),
            exact_direct: BTreeSet::new(),
        });
        self.tables.get_mut(table).unwrap().rows.push(id);
        Ok(id)
    }

    /// Loads a CSV file with a header row into a new base table.
    pub fn ingest_csv<R: std::io::Read>(&mut self, table: &str, reader: R) -> Result<Vec<TupleId>, EngineError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let columns: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if !self.tables.contains_key(table) {
            self.create_table(table, &columns, TableKind::Base)?;
        } else if self.table(table)?.columns != columns {
            return Err(EngineError::SchemaMismatch {
                table: table.to_string(),
                expected: self.table(table)?.columns.clone(),
                got: columns,
            });
        }
        let mut ids = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let values = record.iter().map(Value::parse_cell).collect();
            ids.push(self.insert_base(table, values)?);
        }
        Ok(ids)
    }

    /// Runs `plan` without storing anything; lineage is computed as if the
    /// results were rows of `target`.
    pub fn execute(&self, plan: &Plan, target: &str) -> Result<QueryResult, EngineError> {
        exec::execute(self, plan, target, &exec::ExecOptions::tracking(self.clock + 1))
    }

    /// Materializes the results of `plan` as computed tuples of `target`,
    /// creating the table as a view when it does not exist.
    pub fn insert_select(&mut self, plan: &Plan, target: &str, query_id: QueryId) -> Result<Vec<TupleId>, EngineError> {
        if self.query_index.contains_key(&query_id) || self.dag.contains(&query_id) {
            return Err(EngineError::DuplicateQuery(query_id));
        }
        let result = self.execute(plan, target)?;
        match self.tables.get(target) {
            Some(def) if def.kind == TableKind::Base => return Err(EngineError::BaseTarget(target.to_string())),
            Some(def) if def.columns != result.columns => {
                return Err(EngineError::SchemaMismatch {
                    table: target.to_string(),
                    expected: def.columns.clone(),
                    got: result.columns,
                })
            }
            Some(_) => {}
            None => self.create_table(target, &result.columns, TableKind::View)?,
        }

        let deps = self.creating_queries_below(result.rows.iter().flat_map(|r| r.direct.iter().copied()));
        let created_at = self.clock + 1;
        let coi = result.columns_of_interest.clone();
        let mut ids = Vec::with_capacity(result.rows.len());
        for row in result.rows {
            let now = self.tick();
            let cv = match (row.cv, self.config.bound()) {
                (Some(cv), Some(b)) => Some(drop_columns(&cv, b)),
                (cv, _) => cv,
            };
            let id = TupleId(self.tuples.len() as u64 + 1);
            self.tuples.push(TupleRecord {
                id,
                table: target.to_string(),
                values: row.values,
                created_at: now,
                creating_query: Some(query_id.clone()),
                cols_of_interest: Some(coi.clone()),
                tv: row.tv,
                cv,
                exact_direct: row.direct,
            });
            ids.push(id);
        }
        self.tables.get_mut(target).unwrap().rows.extend(&ids);
        self.query_index.insert(query_id.clone(), self.queries.len());
        self.queries.push(QueryDef {
            id: query_id.clone(),
            target: target.to_string(),
            plan: plan.clone(),
            cols_of_interest: coi,
            created_at,
        });
        self.dag.register(query_id, deps)?;
        Ok(ids)
    }

    /// Creating queries of every tuple reachable from `roots` through exact
    /// derivation, the roots included.
    fn creating_queries_below(&self, roots: impl IntoIterator<Item = TupleId>) -> BTreeSet<QueryId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<TupleId> = roots.into_iter().collect();
        let mut queries = BTreeSet::new();
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            let rec = &self.tuples[id.0 as usize - 1];
            if let Some(q) = &rec.creating_query {
                queries.insert(q.clone());
            }
            stack.extend(rec.exact_direct.iter().copied());
        }
        queries
    }

    /// Exact lineage of `t` by derivation depth.
    pub fn distant_lineage(&self, t: TupleId) -> Result<HierarchicalLineage, EngineError> {
        self.tuple(t)?;
        Ok(hierarchical_lineage(t, |id| self.tuples[id.0 as usize - 1].exact_direct.clone()))
    }

    /// Re-runs the query that created `t` over only the `candidates` and
    /// reports whether `t`'s values come out.
    pub fn verify_lineage(&self, t: TupleId, candidates: &BTreeSet<TupleId>) -> Result<bool, EngineError> {
        let rec = self.tuple(t)?;
        let q = rec.creating_query.as_ref().ok_or(EngineError::NotComputed(t))?;
        let def = self.query(q)?;
        let opts = exec::ExecOptions { track_lineage: false, restrict: Some(candidates), now: self.clock + 1 };
        let result = exec::execute(self, &def.plan, &def.target, &opts)?;
        Ok(result.rows.iter().any(|r| r.values == rec.values))
    }

    /// Emits the word-vector training corpora over all tables.
    pub fn corpora(&self) -> crate::embedding::Corpora {
        let tables = self.tables.values().map(|t| CorpusTable {
            name: &t.name,
            columns: &t.columns,
            rows: t.rows.iter().map(|id| self.tuples[id.0 as usize - 1].values.as_slice()).collect(),
        });
        crate::embedding::extract_corpora(tables, self.config.key_every_columns, self.config.key_every_tuples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tv;

    fn db() -> Database {
        let config = Config { dim: 8, ..Config::default() };
        Database::with_hash_model(config).unwrap()
    }

    fn cols(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn plan(s: &str) -> Plan {
        parse_plan(s).unwrap()
    }

    #[test]
    fn insert_base_initial_lineage() {
        let mut db = db();
        db.create_table("t", &cols(&["a", "b"]), TableKind::Base).unwrap();
        let id = db.insert_base("t", vec!["red gold".into(), Value::Int(3)]).unwrap();
        let id2 = db.insert_base("t", vec![Value::Null, Value::Int(4)]).unwrap();
        let rec = db.tuple(id).unwrap();
        assert_eq!(rec.tv.as_ref().unwrap().len(), 1);
        let keys: Vec<_> = rec.cv.as_ref().unwrap().columns().cloned().collect();
        assert_eq!(keys, ["t.a", "t.b"]);
        assert!(rec.exact_direct.is_empty());
        assert!(db.tuple(id2).unwrap().created_at > rec.created_at);
        assert!(matches!(db.insert_base("t", vec![Value::Null]), Err(EngineError::Arity { .. })));
        assert!(matches!(db.insert_base("u", vec![]), Err(EngineError::UnknownTable(_))));
    }

    #[test]
    fn scan_is_identity() {
        let mut db = db();
        db.create_table("t", &cols(&["a"]), TableKind::Base).unwrap();
        let id = db.insert_base("t", vec!["x".into()]).unwrap();
        let r = db.execute(&plan("scan(t)"), "result").unwrap();
        assert_eq!(r.rows.len(), 1);
        let rec = db.tuple(id).unwrap();
        assert_eq!(r.rows[0].tv, rec.tv);
        assert_eq!(r.rows[0].direct, BTreeSet::from([id]));
        // implicit projection renames the single native column
        assert_eq!(r.rows[0].cv.as_ref().unwrap().get("result.a"), rec.cv.as_ref().unwrap().get("t.a"));
    }

    #[test]
    fn join_multiplies_and_distinct_adds() {
        let mut db = db();
        db.create_table("l", &cols(&["k", "x"]), TableKind::Base).unwrap();
        db.create_table("r", &cols(&["k", "y"]), TableKind::Base).unwrap();
        let a = db.insert_base("l", vec![Value::Int(1), "apple".into()]).unwrap();
        let b = db.insert_base("r", vec![Value::Int(1), "pear".into()]).unwrap();
        let c = db.insert_base("r", vec![Value::Int(1), "plum".into()]).unwrap();
        let joined = db.execute(&plan("project(join(scan(l), scan(r), l.k = r.k), x <- x)"), "v").unwrap();
        assert_eq!(joined.rows.len(), 2);
        let tv_a = db.tuple(a).unwrap().tv.clone().unwrap();
        let tv_b = db.tuple(b).unwrap().tv.clone().unwrap();
        let expect = tv::tv_mul(&tv_a, &tv_b, db.config().seed).unwrap();
        let row = joined.rows.iter().find(|r| r.direct == BTreeSet::from([a, b])).unwrap();
        assert_eq!(row.tv.as_ref().unwrap(), &expect);
        assert_eq!(
            row.tv.as_ref().unwrap().vectors()[0],
            crate::linalg::midpoint(&tv_a.vectors()[0], &tv_b.vectors()[0])
        );

        let d = db.execute(&plan("distinct(scan(r), k)"), "v").unwrap();
        assert_eq!(d.rows.len(), 1);
        let tv_c = db.tuple(c).unwrap().tv.clone().unwrap();
        let expect = tv::tv_add(&tv_b, &tv_c, db.config().seed).unwrap();
        assert_eq!(d.rows[0].tv.as_ref().unwrap(), &expect);
        assert_eq!(expect.len(), 2);
        assert_eq!(d.rows[0].direct, BTreeSet::from([b, c]));
    }

    #[test]
    fn project_finalizes_native_columns() {
        let mut db = db();
        db.create_table("t", &cols(&["a", "b"]), TableKind::Base).unwrap();
        let id = db.insert_base("t", vec!["x".into(), "y".into()]).unwrap();
        let r = db.execute(&plan("project(scan(t), p <- b, q <- 'const')"), "v").unwrap();
        let cv = r.rows[0].cv.as_ref().unwrap();
        let base = db.tuple(id).unwrap().cv.clone().unwrap();
        assert_eq!(cv.get("v.p"), base.get("t.b"));
        assert_eq!(cv.get("v.q").unwrap().vectors()[0], column_vector("v.q", &"const".into(), db.model()));
        let natives: Vec<_> = cv.native_columns().iter().cloned().collect();
        assert_eq!(natives, ["v.p", "v.q"]);
        let inherited: Vec<_> = cv.inherited_columns().iter().cloned().collect();
        assert_eq!(inherited, ["t.a", "t.b"]);
    }

    #[test]
    fn insert_select_records_dependencies() {
        let mut db = db();
        db.create_table("t", &cols(&["a"]), TableKind::Base).unwrap();
        let base: Vec<_> = (0..3).map(|i| db.insert_base("t", vec![Value::Int(i)]).unwrap()).collect();
        let v1 = db.insert_select(&plan("filter(scan(t), a >= 1)"), "v1", "q1".into()).unwrap();
        assert_eq!(v1.len(), 2);
        for id in &v1 {
            let rec = db.tuple(*id).unwrap();
            assert!(rec.exact_direct.iter().all(|d| base.contains(d)));
            assert_eq!(rec.creating_query, Some("q1".into()));
        }
        let v2 = db.insert_select(&plan("scan(v1)"), "v2", "q2".into()).unwrap();
        assert!(db.dag().dependencies(&"q2".into()).unwrap().contains(&QueryId::from("q1")));
        let lin = db.distant_lineage(v2[0]).unwrap();
        assert_eq!(lin.levels.len(), 3);
        for t in lin.exact() {
            assert!(db.tuple(t).unwrap().created_at < db.tuple(v2[0]).unwrap().created_at);
        }
        let again = db.insert_select(&plan("filter(scan(t), a >= 1)"), "v1", "q3".into()).unwrap();
        assert!(again.iter().all(|id| !v1.contains(id)));
        let vals = |ids: &[TupleId]| ids.iter().map(|i| db.tuple(*i).unwrap().values.clone()).collect::<Vec<_>>();
        assert_eq!(vals(&again), vals(&v1));
        assert!(matches!(db.insert_select(&plan("scan(t)"), "v2", "q1".into()), Err(EngineError::DuplicateQuery(_))));
        assert!(matches!(db.insert_select(&plan("scan(v1)"), "t", "q9".into()), Err(EngineError::BaseTarget(_))));
    }

    #[test]
    fn lineage_levels_follow_example() {
        let direct = |id: TupleId| -> BTreeSet<TupleId> {
            let ids = |xs: &[u64]| xs.iter().map(|x| TupleId(*x)).collect();
            match id.0 {
                4 => ids(&[1, 2, 3]),
                5 => ids(&[1]),
                6 => ids(&[3, 4, 5]),
                _ => BTreeSet::new(),
            }
        };
        let lin = hierarchical_lineage(TupleId(6), direct);
        let set = |xs: &[u64]| xs.iter().map(|x| TupleId(*x)).collect::<BTreeSet<_>>();
        assert_eq!(lin.levels, vec![set(&[6]), set(&[3, 4, 5]), set(&[1, 2, 3])]);
        assert_eq!(lin.exact(), set(&[1, 2, 3, 4, 5]));
        assert_eq!(lin.levels_of(TupleId(3)), [1, 2]);
        let base = hierarchical_lineage(TupleId(1), direct);
        assert_eq!(base.levels, vec![set(&[1])]);
        assert!(base.exact().is_empty());
    }

    #[test]
    fn verify_needs_every_contributor() {
        let mut db = db();
        db.create_table("l", &cols(&["k", "x"]), TableKind::Base).unwrap();
        db.create_table("r", &cols(&["k", "y"]), TableKind::Base).unwrap();
        let a = db.insert_base("l", vec![Value::Int(1), "a".into()]).unwrap();
        let b = db.insert_base("r", vec![Value::Int(1), "b".into()]).unwrap();
        db.insert_base("r", vec![Value::Int(2), "c".into()]).unwrap();
        let ids = db
            .insert_select(&plan("project(join(scan(l), scan(r), l.k = r.k), x <- x, y <- y)"), "v", "q".into())
            .unwrap();
        let t = ids[0];
        let exact = db.distant_lineage(t).unwrap().exact();
        assert_eq!(exact, BTreeSet::from([a, b]));
        assert!(db.verify_lineage(t, &exact).unwrap());
        assert!(!db.verify_lineage(t, &BTreeSet::new()).unwrap());
        assert!(!db.verify_lineage(t, &BTreeSet::from([a])).unwrap());
        assert!(matches!(db.verify_lineage(a, &exact), Err(EngineError::NotComputed(_))));
    }

    #[test]
    fn csv_ingestion() {
        let mut db = db();
        let ids = db.ingest_csv("p", "id,name,price\n1,Red Gold,2.5\n2,,3\n".as_bytes()).unwrap();
        assert_eq!(ids.len(), 2);
        assert_eq!(db.tuple(ids[1]).unwrap().values, vec![Value::Int(2), Value::Null, Value::Int(3)]);
        assert!(db.ingest_csv("p", "id,other\n1,2\n".as_bytes()).is_err());
    }
}
