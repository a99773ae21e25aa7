//! Plan binding and evaluation with lineage propagation.
//!
//! Join multiplies lineage, distinct adds it, filter passes it through and
//! project re-derives the native columns of the column lineage map.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::cv::{cv_add, cv_mul, finalize_native, ColumnLineageMap, ColumnSource, NativeAssignment};
use crate::tv::{tv_add, tv_mul, LineageVectorSet};
use crate::value::Value;

use super::plan::{CmpOp, ColumnRef, Expr, Operand, Plan};
use super::{Database, EngineError, TupleId};

pub(crate) struct ExecOptions<'a> {
    pub track_lineage: bool,
    /// Only these tuples are visible to scans.
    pub restrict: Option<&'a BTreeSet<TupleId>>,
    /// Timestamp for columns rewritten by projections.
    pub now: u64,
}

impl ExecOptions<'_> {
    pub fn tracking(now: u64) -> Self {
        Self { track_lineage: true, restrict: None, now }
    }
}

/// One output row with its lineage.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub values: Vec<Value>,
    pub tv: Option<LineageVectorSet>,
    pub cv: Option<ColumnLineageMap>,
    /// Ids of the scanned tuples the row was derived from.
    pub direct: BTreeSet<TupleId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
    /// Lineage columns mentioned by projections and predicates.
    pub columns_of_interest: BTreeSet<String>,
}

#[derive(Debug, Clone)]
struct Col {
    qualifier: Option<String>,
    name: String,
    lineage: String,
}

#[derive(Debug, Clone)]
enum BOp {
    Col(usize),
    Lit(Value),
}

#[derive(Debug, Clone)]
enum BExpr {
    Or(Box<BExpr>, Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Not(Box<BExpr>),
    Cmp(BOp, CmpOp, BOp),
    Contains(BOp, String),
}

#[derive(Debug)]
enum Node {
    Scan { table: String },
    Filter { input: Box<Bound>, pred: BExpr },
    Project { input: Box<Bound>, items: Vec<(String, BOp)> },
    Join { left: Box<Bound>, right: Box<Bound>, keys: Vec<(usize, usize)>, residual: Option<BExpr> },
    Distinct { input: Box<Bound>, keys: Vec<usize> },
}

#[derive(Debug)]
struct Bound {
    node: Node,
    schema: Vec<Col>,
}

struct Binder<'a> {
    db: &'a Database,
    target: &'a str,
    interest: BTreeSet<String>,
}

fn resolve(schema: &[Col], c: &ColumnRef) -> Result<usize, EngineError> {
    let hits: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, col)| col.name == c.name && (c.qualifier.is_none() || col.qualifier == c.qualifier))
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [i] => Ok(*i),
        [] => Err(EngineError::UnknownColumn(c.to_string())),
        _ => Err(EngineError::AmbiguousColumn(c.to_string())),
    }
}

impl Binder<'_> {
    fn operand(&mut self, schema: &[Col], o: &Operand) -> Result<BOp, EngineError> {
        Ok(match o {
            Operand::Column(c) => {
                let i = resolve(schema, c)?;
                self.interest.insert(schema[i].lineage.clone());
                BOp::Col(i)
            }
            Operand::Literal(v) => BOp::Lit(v.clone()),
        })
    }

    fn expr(&mut self, schema: &[Col], e: &Expr) -> Result<BExpr, EngineError> {
        Ok(match e {
            Expr::Or(a, b) => BExpr::Or(Box::new(self.expr(schema, a)?), Box::new(self.expr(schema, b)?)),
            Expr::And(a, b) => BExpr::And(Box::new(self.expr(schema, a)?), Box::new(self.expr(schema, b)?)),
            Expr::Not(a) => BExpr::Not(Box::new(self.expr(schema, a)?)),
            Expr::Compare(l, op, r) => BExpr::Cmp(self.operand(schema, l)?, *op, self.operand(schema, r)?),
            Expr::Contains(o, s) => BExpr::Contains(self.operand(schema, o)?, s.clone()),
        })
    }

    fn bind(&mut self, plan: &Plan) -> Result<Bound, EngineError> {
        match plan {
            Plan::Scan { table, alias } => {
                let def = self.db.table(table)?;
                let qualifier = alias.clone().unwrap_or_else(|| table.clone());
                let schema = def
                    .columns
                    .iter()
                    .map(|c| Col {
                        qualifier: Some(qualifier.clone()),
                        name: c.clone(),
                        lineage: self.db.lineage_name(table, c),
                    })
                    .collect();
                Ok(Bound { node: Node::Scan { table: table.clone() }, schema })
            }
            Plan::Filter { input, predicate } => {
                let input = self.bind(input)?;
                let pred = self.expr(&input.schema, predicate)?;
                let schema = input.schema.clone();
                Ok(Bound { node: Node::Filter { input: Box::new(input), pred }, schema })
            }
            Plan::Project { input, assignments } => {
                let input = self.bind(input)?;
                let mut seen = BTreeSet::new();
                let mut items = Vec::new();
                let mut schema = Vec::new();
                for a in assignments {
                    if !seen.insert(&a.name) {
                        return Err(EngineError::DuplicateColumn(a.name.clone()));
                    }
                    let lineage = self.db.lineage_name(self.target, &a.name);
                    items.push((lineage.clone(), self.operand(&input.schema, &a.source)?));
                    schema.push(Col { qualifier: None, name: a.name.clone(), lineage });
                }
                Ok(Bound { node: Node::Project { input: Box::new(input), items }, schema })
            }
            Plan::Join { left, right, predicate } => {
                let left = self.bind(left)?;
                let right = self.bind(right)?;
                let split = left.schema.len();
                let schema: Vec<Col> = left.schema.iter().chain(&right.schema).cloned().collect();
                let mut keys = Vec::new();
                let mut residual: Option<BExpr> = None;
                if let Some(p) = predicate {
                    let bound = self.expr(&schema, p)?;
                    let mut conjuncts = Vec::new();
                    flatten_and(bound, &mut conjuncts);
                    for c in conjuncts {
                        match c {
                            BExpr::Cmp(BOp::Col(a), CmpOp::Eq, BOp::Col(b)) if (a < split) != (b < split) => {
                                keys.push(if a < split { (a, b - split) } else { (b, a - split) });
                            }
                            other => {
                                residual = Some(match residual {
                                    None => other,
                                    Some(r) => BExpr::And(Box::new(r), Box::new(other)),
                                })
                            }
                        }
                    }
                }
                Ok(Bound { node: Node::Join { left: Box::new(left), right: Box::new(right), keys, residual }, schema })
            }
            Plan::Distinct { input, columns } => {
                let input = self.bind(input)?;
                let mut keys = Vec::new();
                for c in columns {
                    let i = resolve(&input.schema, c)?;
                    self.interest.insert(input.schema[i].lineage.clone());
                    keys.push(i);
                }
                let schema = keys.iter().map(|&i| input.schema[i].clone()).collect();
                Ok(Bound { node: Node::Distinct { input: Box::new(input), keys }, schema })
            }
        }
    }
}

fn flatten_and(e: BExpr, out: &mut Vec<BExpr>) {
    match e {
        BExpr::And(a, b) => {
            flatten_and(*a, out);
            flatten_and(*b, out);
        }
        other => out.push(other),
    }
}

fn operand_value<'a>(row: &'a [Value], o: &'a BOp) -> &'a Value {
    match o {
        BOp::Col(i) => &row[*i],
        BOp::Lit(v) => v,
    }
}

/// Three-valued evaluation: `None` is SQL's unknown.
fn eval(e: &BExpr, row: &[Value]) -> Result<Option<bool>, EngineError> {
    Ok(match e {
        BExpr::Or(a, b) => match (eval(a, row)?, eval(b, row)?) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        BExpr::And(a, b) => match (eval(a, row)?, eval(b, row)?) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        BExpr::Not(a) => eval(a, row)?.map(|x| !x),
        BExpr::Cmp(l, op, r) => compare(operand_value(row, l), *op, operand_value(row, r))?,
        BExpr::Contains(o, needle) => match operand_value(row, o) {
            Value::Null => None,
            Value::Text(s) => Some(s.contains(needle.as_str())),
            other => return Err(EngineError::Type(format!("contains() on non-text value {other}"))),
        },
    })
}

fn compare(l: &Value, op: CmpOp, r: &Value) -> Result<Option<bool>, EngineError> {
    if l.is_null() || r.is_null() {
        return Ok(None);
    }
    let ord = match (l, r) {
        (Value::Text(a), Value::Text(b)) => a.cmp(b),
        _ => match (l.as_f64(), r.as_f64()) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            _ => {
                return match op {
                    CmpOp::Eq => Ok(Some(false)),
                    CmpOp::Ne => Ok(Some(true)),
                    _ => Err(EngineError::Type(format!("cannot order {l} against {r}"))),
                }
            }
        },
    };
    Ok(Some(match op {
        CmpOp::Eq => ord.is_eq(),
        CmpOp::Ne => ord.is_ne(),
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Ge => ord.is_ge(),
    }))
}

#[derive(PartialEq, Eq, Hash)]
enum KeyPart {
    Num(u64),
    Text(String),
}

/// Hash key consistent with `Value::sql_eq`; `None` when a part is null.
fn join_key(row: &[Value], cols: impl Iterator<Item = usize>) -> Option<Vec<KeyPart>> {
    cols.map(|i| match &row[i] {
        Value::Null => None,
        Value::Text(s) => Some(KeyPart::Text(s.clone())),
        v => {
            let x = v.as_f64().unwrap();
            Some(KeyPart::Num(if x == 0.0 { 0 } else { x.to_bits() }))
        }
    })
    .collect()
}

struct Runner<'a> {
    db: &'a Database,
    opts: &'a ExecOptions<'a>,
}

impl Runner<'_> {
    fn seed(&self) -> u64 {
        self.db.config().seed
    }

    fn mul(&self, a: ResultRow, b: ResultRow) -> Result<ResultRow, EngineError> {
        let mut values = a.values;
        values.extend(b.values);
        let tv = match (a.tv, b.tv) {
            (Some(x), Some(y)) => Some(tv_mul(&x, &y, self.seed())?),
            _ => None,
        };
        let cv = match (a.cv, b.cv) {
            (Some(x), Some(y)) => Some(cv_mul(&x, &y, self.seed())?),
            _ => None,
        };
        let mut direct = a.direct;
        direct.extend(b.direct);
        Ok(ResultRow { values, tv, cv, direct })
    }

    fn add_into(&self, acc: &mut ResultRow, b: ResultRow) -> Result<(), EngineError> {
        if let (Some(x), Some(y)) = (&acc.tv, &b.tv) {
            acc.tv = Some(tv_add(x, y, self.seed())?);
        }
        if let (Some(x), Some(y)) = (&acc.cv, &b.cv) {
            acc.cv = Some(cv_add(x, y, self.seed())?);
        }
        acc.direct.extend(b.direct);
        Ok(())
    }

    fn project_lineage(&self, row: &mut ResultRow, items: &[(String, BOp)], schema: &[Col]) -> Result<(), EngineError> {
        let Some(cv) = &row.cv else {
            return Ok(());
        };
        let assignments: Vec<NativeAssignment> = items
            .iter()
            .map(|(target, op)| {
                let source = match op {
                    BOp::Col(i) if cv.contains(&schema[*i].lineage) => ColumnSource::Column(schema[*i].lineage.clone()),
                    // the source column was dropped upstream; fall back to its value
                    BOp::Col(i) => ColumnSource::Constant(row.values[*i].clone()),
                    BOp::Lit(v) => ColumnSource::Constant(v.clone()),
                };
                NativeAssignment { target: target.clone(), source }
            })
            .collect();
        let config = self.db.config();
        row.cv =
            Some(finalize_native(cv, &assignments, self.db.model(), config.max_vectors, config.seed, self.opts.now)?);
        Ok(())
    }

    fn run(&self, b: &Bound) -> Result<Vec<ResultRow>, EngineError> {
        match &b.node {
            Node::Scan { table } => {
                let def = self.db.table(table)?;
                let mut rows = Vec::with_capacity(def.rows.len());
                for id in &def.rows {
                    if self.opts.restrict.is_some_and(|r| !r.contains(id)) {
                        continue;
                    }
                    let rec = self.db.tuple(*id)?;
                    let track = self.opts.track_lineage;
                    rows.push(ResultRow {
                        values: rec.values.clone(),
                        tv: rec.tv.clone().filter(|_| track),
                        cv: rec.cv.clone().filter(|_| track),
                        direct: BTreeSet::from([*id]),
                    });
                }
                Ok(rows)
            }
            Node::Filter { input, pred } => {
                let mut out = Vec::new();
                for row in self.run(input)? {
                    if eval(pred, &row.values)? == Some(true) {
                        out.push(row);
                    }
                }
                Ok(out)
            }
            Node::Project { input, items } => {
                let mut out = Vec::new();
                for mut row in self.run(input)? {
                    self.project_lineage(&mut row, items, &input.schema)?;
                    row.values = items.iter().map(|(_, op)| operand_value(&row.values, op).clone()).collect();
                    out.push(row);
                }
                Ok(out)
            }
            Node::Join { left, right, keys, residual } => {
                let lrows = self.run(left)?;
                let rrows = self.run(right)?;
                let mut out = Vec::new();
                let mut emit = |l: &ResultRow, r: &ResultRow| -> Result<(), EngineError> {
                    if let Some(res) = residual {
                        let values: Vec<Value> = l.values.iter().chain(&r.values).cloned().collect();
                        if eval(res, &values)? != Some(true) {
                            return Ok(());
                        }
                    }
                    out.push(self.mul(l.clone(), r.clone())?);
                    Ok(())
                };
                if keys.is_empty() {
                    for l in &lrows {
                        for r in &rrows {
                            emit(l, r)?;
                        }
                    }
                } else {
                    let mut index: HashMap<Vec<KeyPart>, Vec<usize>> = HashMap::new();
                    for (i, r) in rrows.iter().enumerate() {
                        if let Some(k) = join_key(&r.values, keys.iter().map(|k| k.1)) {
                            index.entry(k).or_default().push(i);
                        }
                    }
                    for l in &lrows {
                        let Some(k) = join_key(&l.values, keys.iter().map(|k| k.0)) else {
                            continue;
                        };
                        for &i in index.get(&k).map_or(&[][..], Vec::as_slice) {
                            emit(l, &rrows[i])?;
                        }
                    }
                }
                Ok(out)
            }
            Node::Distinct { input, keys } => {
                let mut groups: Vec<ResultRow> = Vec::new();
                let mut index: BTreeMap<Vec<Value>, usize> = BTreeMap::new();
                for row in self.run(input)? {
                    let key: Vec<Value> = keys.iter().map(|&i| row.values[i].clone()).collect();
                    match index.get(&key) {
                        Some(&g) => self.add_into(&mut groups[g], row)?,
                        None => {
                            index.insert(key.clone(), groups.len());
                            groups.push(ResultRow { values: key, ..row });
                        }
                    }
                }
                Ok(groups)
            }
        }
    }
}

pub(crate) fn execute(
    db: &Database,
    plan: &Plan,
    target: &str,
    opts: &ExecOptions<'_>,
) -> Result<QueryResult, EngineError> {
    let mut binder = Binder { db, target, interest: BTreeSet::new() };
    let bound = binder.bind(plan)?;
    let runner = Runner { db, opts };
    let mut rows = runner.run(&bound)?;
    if !plan.has_project() {
        // no projection anywhere: the output columns become the target's natives
        let items: Vec<(String, BOp)> =
            bound.schema.iter().enumerate().map(|(i, c)| (db.lineage_name(target, &c.name), BOp::Col(i))).collect();
        for row in &mut rows {
            runner.project_lineage(row, &items, &bound.schema)?;
        }
    }
    rows.sort_by(|a, b| a.values.cmp(&b.values).then_with(|| a.direct.cmp(&b.direct)));
    Ok(QueryResult {
        columns: bound.schema.iter().map(|c| c.name.clone()).collect(),
        rows,
        columns_of_interest: binder.interest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::engine::{parse_plan, TableKind};

    fn db() -> Database {
        let mut db = Database::with_hash_model(Config { dim: 4, ..Config::default() }).unwrap();
        let cols = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        db.create_table("p", &cols(&["k", "name", "price"]), TableKind::Base).unwrap();
        db.create_table("q", &cols(&["k", "tag"]), TableKind::Base).unwrap();
        db.insert_base("p", vec![Value::Int(1), "red apple".into(), Value::Real(2.5)]).unwrap();
        db.insert_base("p", vec![Value::Int(2), "green pear".into(), Value::Null]).unwrap();
        db.insert_base("p", vec![Value::Int(3), Value::Null, Value::Int(7)]).unwrap();
        db.insert_base("q", vec![Value::Real(1.0), "fruit".into()]).unwrap();
        db.insert_base("q", vec![Value::Int(2), "fruit".into()]).unwrap();
        db.insert_base("q", vec![Value::Null, "none".into()]).unwrap();
        db
    }

    fn run(db: &Database, src: &str) -> Result<QueryResult, EngineError> {
        db.execute(&parse_plan(src).unwrap(), "result")
    }

    fn values(r: &QueryResult) -> Vec<Vec<Value>> {
        r.rows.iter().map(|x| x.values.clone()).collect()
    }

    #[test]
    fn null_comparisons_are_unknown() {
        let db = db();
        assert_eq!(run(&db, "filter(scan(p), price > 1)").unwrap().rows.len(), 2);
        assert_eq!(run(&db, "filter(scan(p), not price > 1)").unwrap().rows.len(), 0);
        assert_eq!(run(&db, "filter(scan(p), price > 1 or k = 2)").unwrap().rows.len(), 3);
        assert_eq!(run(&db, "filter(scan(p), contains(name, 'apple'))").unwrap().rows.len(), 1);
    }

    #[test]
    fn join_equality_crosses_numeric_kinds() {
        let db = db();
        let r = run(&db, "project(join(scan(p), scan(q), p.k = q.k), name <- name, tag <- tag)").unwrap();
        assert_eq!(
            values(&r),
            vec![
                vec![Value::from("green pear"), Value::from("fruit")],
                vec![Value::from("red apple"), Value::from("fruit")],
            ]
        );
        let cross = run(&db, "join(scan(p), scan(q))").unwrap();
        assert_eq!(cross.rows.len(), 9);
        let theta = run(&db, "join(scan(p), scan(q), p.k = q.k and p.price > 2)").unwrap();
        assert_eq!(theta.rows.len(), 1);
    }

    #[test]
    fn binding_errors() {
        let db = db();
        assert!(matches!(run(&db, "filter(scan(p), nope = 1)"), Err(EngineError::UnknownColumn(_))));
        assert!(matches!(run(&db, "filter(join(scan(p), scan(q)), k = 1)"), Err(EngineError::AmbiguousColumn(_))));
        assert!(matches!(run(&db, "scan(zzz)"), Err(EngineError::UnknownTable(_))));
        assert!(matches!(run(&db, "filter(scan(p), name < 3)"), Err(EngineError::Type(_))));
        assert!(matches!(run(&db, "filter(join(scan(p as a), scan(p as b)), a.k = b.k)").map(|r| r.rows.len()), Ok(3)));
    }

    #[test]
    fn distinct_groups_and_interest() {
        let db = db();
        let r = run(&db, "distinct(filter(scan(q), k != 5 or tag = 'none'), tag)").unwrap();
        assert_eq!(values(&r), vec![vec![Value::from("fruit")], vec![Value::from("none")]]);
        assert_eq!(r.rows[0].direct.len(), 2);
        let interest: Vec<_> = r.columns_of_interest.iter().cloned().collect();
        assert_eq!(interest, ["q.k", "q.tag"]);
    }

    #[test]
    fn untracked_execution_has_no_vectors() {
        let db = db();
        let opts = ExecOptions { track_lineage: false, restrict: None, now: 1 };
        let r = execute(&db, &parse_plan("scan(p)").unwrap(), "x", &opts).unwrap();
        assert!(r.rows.iter().all(|row| row.tv.is_none() && row.cv.is_none()));
    }
}
