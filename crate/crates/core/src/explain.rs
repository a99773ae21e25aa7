//! Ranking candidate lineage tuples for a target tuple.

use std::fmt;
use std::str::FromStr;

use crate::cv::cv_similarity;
use crate::engine::{Database, EngineError, TableKind, TupleId, TupleRecord};
use crate::enhance::{apply_enhancements, boosted_weights, EnhanceOptions, Provenance};
use crate::tv::{rank_scores, set_similarity};

/// Which lineage representation is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Tv,
    Cv,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tv => "tv",
            Method::Cv => "cv",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tv" => Ok(Method::Tv),
            "cv" => Ok(Method::Cv),
            _ => Err(format!("unknown method `{s}` (expected tv or cv)")),
        }
    }
}

/// The candidate group a target is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    Base,
    Views,
    All,
}

impl Group {
    /// Tuples of the group in id order.
    pub fn members(self, db: &Database) -> Vec<TupleId> {
        match self {
            Group::Base => db.group(TableKind::Base),
            Group::Views => db.group(TableKind::View),
            Group::All => db.tuples().iter().map(|t| t.id).collect(),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Base => "base",
            Group::Views => "views",
            Group::All => "all",
        })
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Group::Base),
            "views" | "view" => Ok(Group::Views),
            "all" => Ok(Group::All),
            _ => Err(format!("unknown group `{s}` (expected base, views or all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankRequest {
    pub method: Method,
    pub group: Group,
    pub enhance: EnhanceOptions,
    /// Boost the creating query's columns of interest (CV only).
    pub column_boost: bool,
}

impl RankRequest {
    /// Distant-lineage request: all enhancements, no column boost.
    pub fn distant(method: Method, group: Group) -> Self {
        Self { method, group, enhance: EnhanceOptions::ALL, column_boost: false }
    }

    /// Direct-lineage request: all enhancements and the column boost.
    pub fn direct(method: Method, group: Group) -> Self {
        Self { column_boost: true, ..Self::distant(method, group) }
    }

    pub fn without_enhancements(self) -> Self {
        Self { enhance: EnhanceOptions::NONE, ..self }
    }
}

/// One row of an explanation table.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub id: TupleId,
    pub table: String,
    pub score: f64,
    /// Levels of the exact lineage the candidate occurs at (empty: not lineage).
    pub levels: Vec<usize>,
}

impl Explanation {
    pub fn in_lineage(&self) -> bool {
        !self.levels.is_empty()
    }
}

fn provenance(rec: &TupleRecord) -> Provenance<'_> {
    Provenance { created_at: rec.created_at, creating_query: rec.creating_query.as_ref() }
}

impl Database {
    /// Similarity of every candidate in the group before any enhancement;
    /// CV candidates failing the containment test are left out.
    pub fn base_scores(&self, t: TupleId, req: &RankRequest) -> Result<Vec<(TupleId, f64)>, EngineError> {
        let target = self.tuple(t)?;
        let params = self.config().similarity();
        let mut out = Vec::new();
        match req.method {
            Method::Tv => {
                let tv = target.tv.as_ref().ok_or(EngineError::MissingLineage(t))?;
                for id in req.group.members(self) {
                    if id == t {
                        continue;
                    }
                    let cand = self.tuple(id)?;
                    let ctv = cand.tv.as_ref().ok_or(EngineError::MissingLineage(id))?;
                    out.push((id, set_similarity(tv, ctv, &params)?));
                }
            }
            Method::Cv => {
                let cv = target.cv.as_ref().ok_or(EngineError::MissingLineage(t))?;
                let weights = match (&target.cols_of_interest, req.column_boost) {
                    (Some(coi), true) => boosted_weights(self.column_weights(), coi, self.config().boost),
                    _ => self.column_weights().clone(),
                };
                let threshold = self.config().containment_threshold();
                for id in req.group.members(self) {
                    if id == t {
                        continue;
                    }
                    let cand = self.tuple(id)?;
                    let ccv = cand.cv.as_ref().ok_or(EngineError::MissingLineage(id))?;
                    if let Some(s) = cv_similarity(cv, ccv, &params, &weights, threshold)? {
                        out.push((id, s));
                    }
                }
            }
        }
        rank_scores(&mut out);
        Ok(out)
    }

    /// Candidates ranked by (enhanced) similarity, best first.
    pub fn rank(&self, t: TupleId, req: &RankRequest) -> Result<Vec<(TupleId, f64)>, EngineError> {
        let target = self.tuple(t)?;
        let scored = self.base_scores(t, req)?;
        let with_provenance = scored.into_iter().map(|(id, s)| (id, provenance(&self.tuples()[id.0 as usize - 1]), s));
        Ok(apply_enhancements(provenance(target), with_provenance, self.dag(), req.enhance))
    }

    /// The top `k` of [`Database::rank`] annotated with exact lineage levels.
    pub fn explain(&self, t: TupleId, req: &RankRequest, k: usize) -> Result<Vec<Explanation>, EngineError> {
        let lineage = self.distant_lineage(t)?;
        let ranked = self.rank(t, req)?;
        ranked
            .into_iter()
            .take(k)
            .map(|(id, score)| {
                Ok(Explanation { id, table: self.tuple(id)?.table.clone(), score, levels: lineage.levels_of(id) })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::engine::parse_plan;
    use crate::value::Value;

    fn db() -> (Database, Vec<TupleId>) {
        let mut db = Database::with_hash_model(Config { dim: 16, ..Config::default() }).unwrap();
        let cols = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        db.create_table("p", &cols(&["k", "name"]), TableKind::Base).unwrap();
        let names = ["red apple", "green pear", "blue plum", "red cherry"];
        for (i, n) in names.iter().enumerate() {
            db.insert_base("p", vec![Value::Int(i as i64), (*n).into()]).unwrap();
        }
        let v =
            db.insert_select(&parse_plan("filter(scan(p), contains(name, 'red'))").unwrap(), "v", "q1".into()).unwrap();
        db.insert_base("p", vec![Value::Int(9), "red apple".into()]).unwrap();
        (db, v)
    }

    #[test]
    fn ranks_true_lineage_first() {
        let (db, v) = db();
        for method in [Method::Tv, Method::Cv] {
            let req = RankRequest::distant(method, Group::Base);
            let ranked = db.rank(v[0], &req).unwrap();
            let exact = db.distant_lineage(v[0]).unwrap().exact();
            assert!(exact.contains(&ranked[0].0), "{method}");
            // the later duplicate is removed by the timestamp filter
            assert!(ranked.iter().all(|(id, _)| id.0 != 7));
            let raw = db.rank(v[0], &req.without_enhancements()).unwrap();
            assert!(raw.iter().any(|(id, _)| id.0 == 7));
        }
    }

    #[test]
    fn explanation_marks_levels() {
        let (db, v) = db();
        let rows = db.explain(v[0], &RankRequest::distant(Method::Cv, Group::Base), 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].in_lineage());
        assert_eq!(rows[0].levels, [1]);
        assert_eq!(rows[0].table, "p");
    }

    #[test]
    fn parse_method_and_group() {
        assert_eq!("CV".parse::<Method>().unwrap(), Method::Cv);
        assert_eq!("views".parse::<Group>().unwrap(), Group::Views);
        assert!("x".parse::<Method>().is_err());
    }
}
