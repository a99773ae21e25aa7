//! Command-line front end. The `lineage` binary only forwards to [`run`].
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Failures print one
//! diagnostic line to stderr.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::engine::{parse_plan, Database, TupleId};
use crate::enhance::QueryId;
use crate::eval::{build_scenario, default_targets, run_experiment, ScenarioSpec};
use crate::explain::{Group, Method, RankRequest};

#[derive(Debug, Parser)]
#[command(name = "lineage", version, about = "Approximate distant lineage over a relational store")]
pub struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Store file; overrides `store_path` from the config.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a CSV file (header row required) into a base table.
    Ingest {
        csv: PathBuf,
        #[arg(long)]
        table: String,
    },
    /// Write the columns and tuples training corpora.
    Corpus {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a plan and print its results without changing the store.
    Exec {
        planfile: PathBuf,
        /// Table name the results are lineage-named after.
        #[arg(long = "as", default_value = "result")]
        target: String,
    },
    /// Run a plan and store its results as tuples of a view.
    InsertSelect {
        planfile: PathBuf,
        #[arg(long)]
        into: String,
        #[arg(long)]
        query_id: String,
    },
    /// Rank lineage candidates for a tuple.
    Lineage {
        tuple_id: u64,
        #[arg(long, default_value = "cv")]
        method: Method,
        #[arg(long, default_value_t = 20)]
        top: usize,
        #[arg(long, default_value = "base")]
        group: Group,
        #[arg(long)]
        no_enhance: bool,
        /// Boost the creating query's columns of interest.
        #[arg(long)]
        direct: bool,
    },
    /// Re-run a tuple's creating query over its top-k candidates.
    Verify {
        tuple_id: u64,
        #[arg(long)]
        top: usize,
        #[arg(long, default_value = "cv")]
        method: Method,
        #[arg(long, default_value = "all")]
        group: Group,
    },
    /// Score rankings against the exact lineage.
    Evaluate {
        /// Tuple ids or table names; defaults to the scenario's target views.
        #[arg(long, value_delimiter = ',')]
        targets: Vec<String>,
        #[arg(long, default_value = "cv")]
        method: Method,
        #[arg(long, default_value = "base")]
        group: Group,
        #[arg(long)]
        no_enhance: bool,
        /// Write report.csv and report.txt here instead of printing.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Replace the store with the synthetic food-products scenario.
    Scenario {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

fn data<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Advisory lock on `<store>.lock`, held until dropped.
struct StoreLock {
    _file: File,
}

impl StoreLock {
    fn acquire(store: &Path, exclusive: bool) -> Result<Self, Failure> {
        let mut name = store.as_os_str().to_owned();
        name.push(".lock");
        let file =
            OpenOptions::new().create(true).truncate(false).write(true).open(PathBuf::from(name)).map_err(data)?;
        if exclusive { file.lock() } else { file.lock_shared() }.map_err(data)?;
        Ok(Self { _file: file })
    }
}

fn open_store(config: &Config, must_exist: bool) -> Result<Database, Failure> {
    let path = &config.store_path;
    if path.exists() {
        let model_db = Database::from_config(config.clone()).map_err(data)?;
        Database::load(path, config.clone(), model_db.model().clone()).map_err(data)
    } else if must_exist {
        Err(Failure::Data(format!("store {} does not exist", path.display())))
    } else {
        Database::from_config(config.clone()).map_err(data)
    }
}

fn tuple_arg(db: &Database, id: u64) -> Result<TupleId, Failure> {
    let id = TupleId(id);
    db.tuple(id).map_err(data)?;
    Ok(id)
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> =
        (0..header.len()).map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap()).collect();
    let mut out = String::new();
    for cells in std::iter::once(header.iter().map(|s| s.to_string()).collect()).chain(rows.iter().cloned()) {
        let cells: Vec<String> = cells;
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn resolve_targets(db: &Database, specs: &[String]) -> Result<Vec<TupleId>, Failure> {
    if specs.is_empty() {
        return Ok(default_targets(db));
    }
    let mut out = BTreeSet::new();
    for s in specs.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match s.parse::<u64>() {
            Ok(id) => {
                out.insert(tuple_arg(db, id)?);
            }
            Err(_) => out.extend(db.table(s).map_err(data)?.rows.iter().copied()),
        }
    }
    Ok(out.into_iter().collect())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => Config::default(),
    };
    if let Some(store) = cli.store {
        config.store_path = store;
    }
    let store = config.store_path.clone();
    let w = |out: &mut dyn Write, s: &str| out.write_all(s.as_bytes()).map_err(data);

    match cli.command {
        Command::Ingest { csv, table } => {
            let _lock = StoreLock::acquire(&store, true)?;
            let mut db = open_store(&config, false)?;
            let file = File::open(&csv).map_err(|e| Failure::Data(format!("{}: {e}", csv.display())))?;
            let ids = db.ingest_csv(&table, file).map_err(data)?;
            db.save(&store).map_err(data)?;
            w(out, &format!("ingested {} tuples into {table}\n", ids.len()))
        }
        Command::Corpus { out: dir } => {
            let _lock = StoreLock::acquire(&store, false)?;
            let db = open_store(&config, true)?;
            let corpora = db.corpora();
            fs::create_dir_all(&dir).map_err(data)?;
            fs::write(dir.join("columns.txt"), &corpora.columns).map_err(data)?;
            fs::write(dir.join("tuples.txt"), &corpora.tuples).map_err(data)?;
            w(out, &format!("wrote {}\n", dir.display()))
        }
        Command::Exec { planfile, target } => {
            let plan = parse_plan(&read_file(&planfile)?)
                .map_err(|e| Failure::Data(format!("{}: {e}", planfile.display())))?;
            let _lock = StoreLock::acquire(&store, false)?;
            let db = open_store(&config, true)?;
            let result = db.execute(&plan, &target).map_err(data)?;
            let header: Vec<&str> = result.columns.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> =
                result.rows.iter().map(|r| r.values.iter().map(|v| v.to_string()).collect()).collect();
            w(out, &aligned(&header, &rows))?;
            w(out, &format!("({} rows)\n", rows.len()))
        }
        Command::InsertSelect { planfile, into, query_id } => {
            let plan = parse_plan(&read_file(&planfile)?)
                .map_err(|e| Failure::Data(format!("{}: {e}", planfile.display())))?;
            let _lock = StoreLock::acquire(&store, true)?;
            let mut db = open_store(&config, true)?;
            let ids = db.insert_select(&plan, &into, QueryId(query_id)).map_err(data)?;
            db.save(&store).map_err(data)?;
            w(out, &format!("inserted {} tuples into {into}\n", ids.len()))
        }
        Command::Lineage { tuple_id, method, top, group, no_enhance, direct } => {
            let _lock = StoreLock::acquire(&store, false)?;
            let db = open_store(&config, true)?;
            let t = tuple_arg(&db, tuple_id)?;
            let mut req = if direct { RankRequest::direct(method, group) } else { RankRequest::distant(method, group) };
            if no_enhance {
                req = req.without_enhancements();
            }
            let rows: Vec<Vec<String>> = db
                .explain(t, &req, top)
                .map_err(data)?
                .into_iter()
                .map(|e| {
                    let levels = e.levels.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
                    vec![
                        e.id.0.to_string(),
                        e.table.clone(),
                        format!("{:.6}", e.score),
                        if levels.is_empty() { "-".into() } else { levels },
                        if e.in_lineage() { "Yes" } else { "No" }.into(),
                    ]
                })
                .collect();
            w(out, &aligned(&["tuple-id", "table", "similarity", "lineage-level", "lineage"], &rows))
        }
        Command::Verify { tuple_id, top, method, group } => {
            let _lock = StoreLock::acquire(&store, false)?;
            let db = open_store(&config, true)?;
            let t = tuple_arg(&db, tuple_id)?;
            let ranked = db.rank(t, &RankRequest::distant(method, group)).map_err(data)?;
            let candidates: BTreeSet<TupleId> = ranked.into_iter().take(top).map(|(id, _)| id).collect();
            let ok = db.verify_lineage(t, &candidates).map_err(data)?;
            w(out, if ok { "verified\n" } else { "not verified\n" })
        }
        Command::Evaluate { targets, method, group, no_enhance, out_dir } => {
            let _lock = StoreLock::acquire(&store, false)?;
            let db = open_store(&config, true)?;
            let targets = resolve_targets(&db, &targets)?;
            let report = run_experiment(&db, &targets, method, group, !no_enhance).map_err(data)?;
            match out_dir {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(data)?;
                    fs::write(dir.join("report.csv"), report.to_csv()).map_err(data)?;
                    fs::write(dir.join("report.txt"), report.to_text()).map_err(data)?;
                    w(out, &format!("wrote {} rows to {}\n", report.rows.len(), dir.display()))
                }
                None => w(out, &report.to_text()),
            }
        }
        Command::Scenario { seed } => {
            let _lock = StoreLock::acquire(&store, true)?;
            let db = build_scenario(&ScenarioSpec::default(), seed, config).map_err(data)?;
            db.save(&store).map_err(data)?;
            w(
                out,
                &format!(
                    "wrote {} tuples in {} tables to {}\n",
                    db.tuples().len(),
                    db.tables().count(),
                    store.display()
                ),
            )
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            let _ = writeln!(err, "{}", first.trim());
            return 1;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {}", m.lines().next().unwrap_or(""));
            1
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(err, "error: {}", m.replace('\n', " "));
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("lineage").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_1() {
        let (code, _, err) = call(&["lineage", "x"]);
        assert_eq!(code, 1);
        assert_eq!(err.lines().count(), 1);
        assert_eq!(call(&["frobnicate"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn missing_store_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("s.jsonl");
        let (code, _, err) = call(&["--store", store.to_str().unwrap(), "lineage", "1"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error: store"));
    }

    #[test]
    fn ingest_then_exec() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("s.jsonl");
        let csv = dir.path().join("p.csv");
        fs::write(&csv, "k,name\n1,red apple\n2,green pear\n").unwrap();
        let plan = dir.path().join("q.plan");
        fs::write(&plan, "filter(scan(p), k > 1)\n").unwrap();
        let s = store.to_str().unwrap();
        assert_eq!(call(&["--store", s, "ingest", csv.to_str().unwrap(), "--table", "p"]).0, 0);
        let (code, out, _) = call(&["--store", s, "exec", plan.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.contains("green pear") && out.contains("(1 rows)"));
        fs::write(&plan, "filter(scan(p), k >)\n").unwrap();
        let (code, _, err) = call(&["--store", s, "exec", plan.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert_eq!(err.lines().count(), 1);
    }
}
