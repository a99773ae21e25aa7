use std::collections::BTreeSet;

use distant_lineage::config::Config;
use distant_lineage::engine::{parse_plan, Database, TableKind, TupleId};
use distant_lineage::eval::{build_scenario, default_targets, ScenarioSpec};
use distant_lineage::explain::{Group, Method, RankRequest};

fn small(config: Config) -> Database {
    let spec = ScenarioSpec { products: 150, nutrients: 200, manufacturers: 8, ..ScenarioSpec::default() };
    build_scenario(&spec, 21, config).unwrap()
}

fn config() -> Config {
    Config { dim: 16, ..Config::default() }
}

#[test]
fn lineage_columns_of_ancestors_are_contained() {
    let db = small(config());
    for t in db.group(TableKind::View) {
        let cols: BTreeSet<&String> = db.tuple(t).unwrap().cv.as_ref().unwrap().columns().collect();
        for a in db.distant_lineage(t).unwrap().exact() {
            let acols: BTreeSet<&String> = db.tuple(a).unwrap().cv.as_ref().unwrap().columns().collect();
            assert!(acols.is_subset(&cols), "{a} in lineage of {t}");
        }
    }
}

#[test]
fn bounded_columns_respect_budget() {
    let db = small(Config { b: 5, ..config() });
    for t in db.group(TableKind::View) {
        let cv = db.tuple(t).unwrap().cv.as_ref().unwrap();
        assert!(cv.len() <= 5.max(cv.native_columns().len()));
    }
    let t = default_targets(&db)[0];
    assert!(db.verify_lineage(t, &db.distant_lineage(t).unwrap().exact()).unwrap());
}

#[test]
fn scenario_plans_round_trip_through_text() {
    for v in ScenarioSpec::default().views {
        let plan = parse_plan(&v.plan).unwrap();
        assert_eq!(parse_plan(&plan.to_string()).unwrap(), plan, "{}", v.name);
    }
}

#[test]
fn store_round_trip_preserves_rankings() {
    let db = small(config());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    db.save(&path).unwrap();
    let back = Database::load(&path, db.config().clone(), db.model().clone()).unwrap();
    assert_eq!(back.tuples(), db.tuples());
    assert_eq!(back.clock(), db.clock());
    let t = *default_targets(&db).last().unwrap();
    for method in [Method::Tv, Method::Cv] {
        let req = RankRequest::distant(method, Group::Base);
        assert_eq!(back.rank(t, &req).unwrap(), db.rank(t, &req).unwrap());
    }
    let mut again = Vec::new();
    back.write_store(&mut again).unwrap();
    assert_eq!(again, std::fs::read(&path).unwrap());
}

#[test]
fn verification_fails_without_full_lineage() {
    let db = small(config());
    let mut failures = 0;
    for t in default_targets(&db) {
        let lin = db.distant_lineage(t).unwrap();
        let mut partial = lin.levels[1].clone();
        let first = *partial.iter().next().unwrap();
        partial.remove(&first);
        if !db.verify_lineage(t, &partial).unwrap() {
            failures += 1;
        }
    }
    assert!(failures > 0);
}

#[test]
fn executing_does_not_change_the_store() {
    let db = small(config());
    let before = db.tuples().len();
    let plan = parse_plan("filter(scan(products), contains(name, 'salsa'))").unwrap();
    let result = db.execute(&plan, "tmp").unwrap();
    assert!(!result.rows.is_empty());
    assert!(result.rows.iter().all(|r| r.values[2].to_string().contains("salsa")));
    assert_eq!(db.tuples().len(), before);
}

#[test]
fn dag_links_views_to_their_sources() {
    let db = small(config());
    let deps = |q: &str| db.dag().dependencies(&q.into()).unwrap().iter().map(|q| q.0.clone()).collect::<Vec<_>>();
    assert!(deps("q_prepared").is_empty());
    assert_eq!(deps("q_exp2"), ["q_prepared", "q_protein"]);
    assert!(deps("q_exp4").contains(&"q_exp3".to_string()));
    let w = db.dag().weight(&"q_exp4".into(), &"q_prepared".into()).unwrap();
    assert_eq!(w, 1.0);
    assert_eq!(db.tuple(TupleId(1)).unwrap().creating_query, None);
}
