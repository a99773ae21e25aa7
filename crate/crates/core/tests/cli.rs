use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lineage(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lineage")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("lineage.toml"), "dim = 16\nstore_path = \"db.jsonl\"\n").unwrap();
    fs::write(
        dir.path().join("products.csv"),
        "ndb_no,maker,name\n1,valley foods,honey granola\n2,valley foods,oat crackers\n3,summit farms,spicy salsa\n4,summit farms,mild salsa\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("makers.plan"),
        "# one row per maker\ndistinct(project(scan(products), maker <- maker), maker)\n",
    )
    .unwrap();
    dir
}

#[test]
fn analyst_workflow() {
    let dir = setup();
    let d = dir.path();
    let c = ["--config", "lineage.toml"];
    let run = |args: &[&str]| lineage(d, &[&c[..], args].concat());

    let o = run(&["ingest", "products.csv", "--table", "products"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o), "ingested 4 tuples into products\n");

    let o = run(&["exec", "makers.plan"]);
    assert!(stdout(&o).contains("summit farms") && stdout(&o).contains("(2 rows)"));

    let o = run(&["insert-select", "makers.plan", "--into", "makers", "--query-id", "q1"]);
    assert_eq!(stdout(&o), "inserted 2 tuples into makers\n");
    let o = run(&["insert-select", "makers.plan", "--into", "makers", "--query-id", "q1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["lineage", "6", "--method", "cv", "--top", "3"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[0].starts_with("tuple-id"));
    let yes = lines[1..].iter().filter(|l| l.ends_with("Yes")).count();
    assert_eq!(yes, 2, "{text}");

    assert_eq!(stdout(&run(&["verify", "6", "--top", "10"])), "verified\n");

    let o = run(&["corpus", "--out", "corpus"]);
    assert!(o.status.success());
    let tuples = fs::read_to_string(d.join("corpus/tuples.txt")).unwrap();
    assert!(tuples.contains("honey granola"));
    assert!(d.join("corpus/columns.txt").exists());

    let o = run(&["evaluate", "--targets", "makers", "--method", "tv"]);
    assert!(stdout(&o).contains("targets: 2"), "{o:?}");
}

#[test]
fn diagnostics_and_exit_codes() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("bad.plan"), "filter(scan(products), )\n").unwrap();
    lineage(d, &["--config", "lineage.toml", "ingest", "products.csv", "--table", "products"]);

    let o = lineage(d, &["--config", "lineage.toml", "exec", "bad.plan"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("bad.plan"));

    assert_eq!(lineage(d, &["lineage"]).status.code(), Some(1));
    assert_eq!(lineage(d, &["lineage", "1", "--method", "xx"]).status.code(), Some(1));
    assert_eq!(lineage(d, &["--config", "missing.toml", "lineage", "1"]).status.code(), Some(1));
    assert_eq!(lineage(d, &["--config", "lineage.toml", "lineage", "99"]).status.code(), Some(2));
    assert_eq!(lineage(d, &["--config", "lineage.toml", "verify", "1", "--top", "2"]).status.code(), Some(2));
}
