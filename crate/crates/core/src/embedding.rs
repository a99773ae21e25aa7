//! Word vectors, textification of database values, and the initial lineage
//! vectors of explicitly inserted tuples.
//!
//! A [`WordModel`] is usually loaded from a word2vec text file trained on the
//! corpora produced by [`extract_corpora`]. Tokens missing from the model are
//! embedded with [`hash_embedding`], so the engine runs without any trained
//! model at all.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{self, Vector};
use crate::value::Value;

/// Token treated as a stop word: missing data often surfaces as `None`.
pub const NULL_MARKER: &str = "none";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("vector for {token:?} has {got} components, expected {expected}")]
    DimensionMismatch { token: String, expected: usize, got: usize },
    #[error("vector for {0:?} has a non-finite component")]
    NonFinite(String),
    #[error("negative or non-finite weight {weight} for column {column}")]
    BadWeight { column: String, weight: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Token to vector lookup with a deterministic fallback for unknown tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct WordModel {
    dim: usize,
    entries: HashMap<String, Vector>,
    fallback_seed: u64,
}

impl WordModel {
    /// An empty model: every lookup goes through the fallback embedder.
    pub fn new(dim: usize, fallback_seed: u64) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        Ok(Self { dim, entries: HashMap::new(), fallback_seed })
    }

    pub fn with_fallback_seed(mut self, seed: u64) -> Self {
        self.fallback_seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fallback_seed(&self) -> u64 {
        self.fallback_seed
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vector) -> Result<(), EmbeddingError> {
        let token = token.into();
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch { token, expected: self.dim, got: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite(token));
        }
        self.entries.insert(token, vector);
        Ok(())
    }

    /// Stored vector for `token`, or its fallback embedding.
    pub fn vector(&self, token: &str) -> Vector {
        match self.entries.get(token) {
            Some(v) => v.clone(),
            None => hash_embedding(token, self.dim, self.fallback_seed),
        }
    }

    /// Loads a word2vec text file (`count dim` header, then `token v1 .. vD`).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let file = File::open(path)?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(EmbeddingError::MalformedHeader("empty file".into())),
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (count, dim) = match fields.as_slice() {
            [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
                (Ok(c), Ok(d)) if d > 0 => (c, d),
                _ => return Err(EmbeddingError::MalformedHeader(header.clone())),
            },
            _ => return Err(EmbeddingError::MalformedHeader(header.clone())),
        };

        let mut model = WordModel::new(dim, 0)?;
        let mut seen = 0usize;
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap_or_default().to_string();
            let mut vector = Vec::with_capacity(dim);
            for raw in parts {
                let x: f64 = raw.parse().map_err(|_| EmbeddingError::BadLine {
                    line: lineno,
                    message: format!("unparseable component {raw:?}"),
                })?;
                if !x.is_finite() {
                    return Err(EmbeddingError::BadLine {
                        line: lineno,
                        message: format!("non-finite component {raw:?}"),
                    });
                }
                vector.push(x);
            }
            if vector.len() != dim {
                return Err(EmbeddingError::BadLine {
                    line: lineno,
                    message: format!("expected {dim} components, found {}", vector.len()),
                });
            }
            model.entries.insert(token, vector);
            seen += 1;
        }
        if seen != count {
            return Err(EmbeddingError::MalformedHeader(format!(
                "header announces {count} vectors, file holds {seen}"
            )));
        }
        Ok(model)
    }

    /// Canonical text serialization: tokens sorted, shortest round-trip floats.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.entries.len(), self.dim)?;
        let mut tokens: Vec<&String> = self.entries.keys().collect();
        tokens.sort();
        let mut line = String::new();
        for token in tokens {
            line.clear();
            line.push_str(token);
            for x in &self.entries[token] {
                let _ = write!(line, " {x}");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut file = io::BufWriter::new(File::create(path)?);
        self.write_to(&mut file)?;
        file.flush()
    }
}

/// Per-column weights for the inter-column average of a tuple vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnWeights {
    weights: HashMap<String, f64>,
    default_weight: f64,
}

impl Default for ColumnWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl ColumnWeights {
    pub fn uniform() -> Self {
        Self { weights: HashMap::new(), default_weight: 1.0 }
    }

    pub fn new(weights: impl IntoIterator<Item = (String, f64)>, default_weight: f64) -> Result<Self, EmbeddingError> {
        let weights: HashMap<String, f64> = weights.into_iter().collect();
        for (column, w) in weights.iter().chain([(&"<default>".to_string(), &default_weight)]) {
            if !w.is_finite() || *w < 0.0 {
                return Err(EmbeddingError::BadWeight { column: column.clone(), weight: *w });
            }
        }
        Ok(Self { weights, default_weight })
    }

    pub fn weight(&self, column: &str) -> f64 {
        self.weights.get(column).copied().unwrap_or(self.default_weight)
    }

    pub fn default_weight(&self) -> f64 {
        self.default_weight
    }

    /// Copy with every column in `columns` scaled by `factor`.
    pub fn scaled<'a>(&self, columns: impl IntoIterator<Item = &'a String>, factor: f64) -> Self {
        let mut out = self.clone();
        for c in columns {
            let w = self.weight(c) * factor;
            out.weights.insert(c.clone(), w);
        }
        out
    }
}

fn attribute_part(column_name: &str) -> &str {
    column_name.rsplit('.').next().unwrap_or(column_name)
}

/// Splits a value into lowercase tokens.
///
/// Numbers become a single `<column>_<number>` token so that the same number
/// in different columns maps to different words. The table qualifier of a
/// full column name is dropped. Nulls and `None` yield nothing.
pub fn textify_value(column_name: &str, value: &Value) -> Vec<String> {
    match value {
        Value::Null => Vec::new(),
        Value::Int(_) | Value::Real(_) => {
            let column: String =
                attribute_part(column_name).trim().to_lowercase().split_whitespace().collect::<Vec<_>>().join("_");
            vec![format!("{column}_{}", value.canonical_number().unwrap())]
        }
        Value::Text(text) => text
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty() && *t != NULL_MARKER)
            .map(str::to_string)
            .collect(),
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic unit-norm embedding of a token (Gaussian direction seeded by
/// the token hash and `seed`).
pub fn hash_embedding(token: &str, dim: usize, seed: u64) -> Vector {
    assert!(dim >= 1, "embedding dimension must be positive");
    let mix = fnv1a64(token.as_bytes()) ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    loop {
        let v: Vector = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Some(unit) = linalg::normalized(&v) {
            return unit;
        }
    }
}

fn mean_of_tokens(tokens: &[String], model: &WordModel) -> Option<Vector> {
    if tokens.is_empty() {
        return None;
    }
    let vectors: Vec<Vector> = tokens.iter().map(|t| model.vector(t)).collect();
    linalg::mean(vectors.iter().map(Vec::as_slice), model.dim())
}

/// Unweighted mean of the token vectors of one cell; zero when it has none.
pub fn column_vector(column: &str, value: &Value, model: &WordModel) -> Vector {
    mean_of_tokens(&textify_value(column, value), model).unwrap_or_else(|| vec![0.0; model.dim()])
}

/// Weighted average of the nonempty column vectors of a tuple.
///
/// Returns the zero vector when every column is empty. When every applicable
/// weight is zero the columns are averaged uniformly.
pub fn tuple_vector<'a, I>(columns: I, model: &WordModel, weights: &ColumnWeights) -> Vector
where
    I: IntoIterator<Item = (&'a str, &'a Value)>,
{
    let dim = model.dim();
    let mut parts: Vec<(f64, Vector)> = Vec::new();
    for (column, value) in columns {
        if let Some(v) = mean_of_tokens(&textify_value(column, value), model) {
            parts.push((weights.weight(column), v));
        }
    }
    if parts.is_empty() {
        return vec![0.0; dim];
    }
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    if total <= 0.0 {
        return linalg::mean(parts.iter().map(|(_, v)| v.as_slice()), dim).unwrap();
    }
    let mut acc = vec![0.0; dim];
    for (w, v) in &parts {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    acc
}

/// One table's contents as seen by corpus extraction.
pub struct CorpusTable<'a> {
    pub name: &'a str,
    pub columns: &'a [String],
    pub rows: Vec<&'a [Value]>,
}

/// The two training corpora: one sentence per cell and one per tuple.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpora {
    pub columns: String,
    pub tuples: String,
}

/// Key token of the `ordinal`-th (1-based) row of `table`.
pub fn key_token(table: &str, ordinal: usize) -> String {
    format!("{}_key_{ordinal}", table.to_lowercase())
}

/// Inserts `key` after every `every` words.
pub fn inject_key(words: &[String], key: &str, every: usize) -> String {
    let every = every.max(1);
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(w);
        if (i + 1) % every == 0 {
            out.push(' ');
            out.push_str(key);
        }
    }
    out
}

/// Emits the columns corpus and the tuples corpus for word-vector training.
///
/// Each row gets a generated key token which is injected after every
/// `key_every_columns` words of a cell sentence and after every
/// `key_every_tuples` words of a tuple sentence. Cells and tuples with no
/// tokens emit nothing.
pub fn extract_corpora<'a>(
    tables: impl IntoIterator<Item = CorpusTable<'a>>,
    key_every_columns: usize,
    key_every_tuples: usize,
) -> Corpora {
    let mut corpora = Corpora::default();
    for table in tables {
        for (ordinal, row) in table.rows.iter().enumerate() {
            let key = key_token(table.name, ordinal + 1);
            let mut tuple_words = Vec::new();
            for (column, value) in table.columns.iter().zip(row.iter()) {
                let words = textify_value(column, value);
                if words.is_empty() {
                    continue;
                }
                corpora.columns.push_str(&inject_key(&words, &key, key_every_columns));
                corpora.columns.push('\n');
                tuple_words.extend(words);
            }
            if !tuple_words.is_empty() {
                corpora.tuples.push_str(&inject_key(&tuple_words, &key, key_every_tuples));
                corpora.tuples.push('\n');
            }
        }
    }
    corpora
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textify_examples() {
        assert_eq!(textify_value("price", &Value::Int(12)), vec!["price_12"]);
        assert!(textify_value("name", &Value::Null).is_empty());
        assert_eq!(textify_value("name", &Value::from("Red Gold")), vec!["red", "gold"]);
        assert!(textify_value("name", &Value::from("None")).is_empty());
        assert_eq!(textify_value("products.Price", &Value::Real(2.5)), vec!["price_2.5"]);
        assert_eq!(textify_value("ingredients", &Value::from("WATER, sugar (cane)")), vec!["water", "sugar", "cane"]);
    }

    #[test]
    fn hash_embedding_is_deterministic_unit_and_distinct() {
        let a = hash_embedding("salt", 8, 7);
        assert_eq!(a, hash_embedding("salt", 8, 7));
        assert!((linalg::norm(&a) - 1.0).abs() < 1e-9);
        let b = hash_embedding("sugar", 8, 7);
        assert!(linalg::cosine(&a, &b) < 1.0);
        assert_ne!(a, hash_embedding("salt", 8, 8));
    }

    #[test]
    fn load_small_model() {
        let text = "2 3\nfoo 1 2 3\nbar 0.5 -1 0\n";
        let model = WordModel::from_reader(text.as_bytes()).unwrap();
        assert_eq!(model.len(), 2);
        assert_eq!(model.dim(), 3);
        assert_eq!(model.vector("bar"), vec![0.5, -1.0, 0.0]);
    }

    #[test]
    fn load_rejects_short_line() {
        let text = "2 3\nfoo 1 2 3\nbar 0.5 -1\n";
        let err = WordModel::from_reader(text.as_bytes()).unwrap_err();
        assert!(matches!(err, EmbeddingError::BadLine { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn load_rejects_empty_and_bad_header() {
        let err = WordModel::from_reader("".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("malformed header"));
        assert!(WordModel::from_reader("abc\n".as_bytes()).is_err());
        assert!(WordModel::from_reader("1 2\nx 1 inf\n".as_bytes()).is_err());
        assert!(WordModel::from_reader("2 2\nx 1 1\n".as_bytes()).is_err());
    }

    #[test]
    fn unknown_tokens_fall_back() {
        let model = WordModel::new(4, 3).unwrap();
        assert_eq!(model.vector("zzz"), hash_embedding("zzz", 4, 3));
    }

    #[test]
    fn column_vector_examples() {
        let mut model = WordModel::new(2, 0).unwrap();
        model.insert("red", vec![1.0, 0.0]).unwrap();
        model.insert("gold", vec![0.0, 1.0]).unwrap();
        assert_eq!(column_vector("name", &Value::from("red"), &model), vec![1.0, 0.0]);
        assert_eq!(column_vector("name", &Value::from("red gold"), &model), vec![0.5, 0.5]);
        assert_eq!(column_vector("name", &Value::Null, &model), vec![0.0, 0.0]);
    }

    #[test]
    fn tuple_vector_weighted_average() {
        let mut model = WordModel::new(2, 0).unwrap();
        model.insert("u", vec![3.0, 0.0]).unwrap();
        model.insert("v", vec![0.0, 3.0]).unwrap();
        let (a, b) = (Value::from("u"), Value::from("v"));
        let uniform = ColumnWeights::uniform();
        let single = tuple_vector([("A", &a), ("B", &Value::Null)], &model, &uniform);
        assert_eq!(single, vec![3.0, 0.0]);
        let even = tuple_vector([("A", &a), ("B", &b)], &model, &uniform);
        assert_eq!(even, vec![1.5, 1.5]);
        let cw = ColumnWeights::new([("A".to_string(), 2.0), ("B".to_string(), 1.0)], 1.0).unwrap();
        let weighted = tuple_vector([("A", &a), ("B", &b)], &model, &cw);
        // oracle: (2u + v) / 3
        let expect = [(2.0 * 3.0 + 0.0) / 3.0, (0.0 + 3.0) / 3.0];
        assert!((weighted[0] - expect[0]).abs() < 1e-12);
        assert!((weighted[1] - expect[1]).abs() < 1e-12);
        let empty = tuple_vector([("A", &Value::Null)], &model, &uniform);
        assert!(linalg::is_zero(&empty));
    }

    #[test]
    fn zero_weights_fall_back_to_uniform() {
        let model = WordModel::new(3, 1).unwrap();
        let cw = ColumnWeights::new([], 0.0).unwrap();
        let (a, b) = (Value::from("x"), Value::from("y"));
        let v = tuple_vector([("A", &a), ("B", &b)], &model, &cw);
        let u = tuple_vector([("A", &a), ("B", &b)], &model, &ColumnWeights::uniform());
        assert_eq!(v, u);
        assert!(ColumnWeights::new([("A".to_string(), -1.0)], 1.0).is_err());
    }

    #[test]
    fn key_injection() {
        let words: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        assert_eq!(inject_key(&words, "K1", 2), "a b K1 c d K1");
        assert_eq!(inject_key(&words[..3], "K1", 2), "a b K1 c");
    }

    #[test]
    fn corpora_extraction() {
        let columns = vec!["name".to_string(), "price".to_string()];
        let r1 = vec![Value::from("a b c d"), Value::Null];
        let r2 = vec![Value::Null, Value::Null];
        let r3 = vec![Value::from("x"), Value::Int(3)];
        let table = CorpusTable { name: "T", columns: &columns, rows: vec![&r1, &r2, &r3] };
        let corpora = extract_corpora([table], 3, 2);
        assert_eq!(corpora.tuples, "a b t_key_1 c d t_key_1\nx price_3 t_key_3\n");
        assert_eq!(corpora.columns, "a b c t_key_1 d\nx\nprice_3\n");

        let empty = CorpusTable { name: "E", columns: &columns, rows: vec![] };
        assert_eq!(extract_corpora([empty], 1, 1), Corpora::default());
    }

    proptest! {
        #[test]
        fn textify_tokens_are_clean(s in "\\PC{0,40}", col in "[a-zA-Z]{1,8}") {
            for tok in textify_value(&col, &Value::Text(s.clone())) {
                prop_assert!(!tok.is_empty());
                prop_assert_eq!(tok.to_lowercase(), tok.clone());
                prop_assert_ne!(tok.as_str(), NULL_MARKER);
            }
        }

        #[test]
        fn model_text_round_trip(
            entries in proptest::collection::btree_map("[a-z_0-9]{1,6}", proptest::collection::vec(-1e6f64..1e6, 3), 0..6)
        ) {
            let mut model = WordModel::new(3, 0).unwrap();
            for (t, v) in &entries {
                model.insert(t.clone(), v.clone()).unwrap();
            }
            let mut first = Vec::new();
            model.write_to(&mut first).unwrap();
            let reloaded = WordModel::from_reader(first.as_slice()).unwrap();
            let mut second = Vec::new();
            reloaded.write_to(&mut second).unwrap();
            prop_assert_eq!(&first, &second);
            prop_assert_eq!(reloaded, model);
        }

        #[test]
        fn uniform_tuple_vector_is_mean_of_columns(words in proptest::collection::vec(proptest::option::of("[a-z]{1,5}( [a-z]{1,5})?"), 1..5)) {
            let model = WordModel::new(5, 11).unwrap();
            let names: Vec<String> = (0..words.len()).map(|i| format!("c{i}")).collect();
            let values: Vec<Value> = words.iter().map(|w| w.clone().map(Value::Text).unwrap_or(Value::Null)).collect();
            let tv = tuple_vector(names.iter().map(String::as_str).zip(values.iter()), &model, &ColumnWeights::uniform());
            let cols: Vec<Vector> = names.iter().zip(&values)
                .filter(|(c, v)| !textify_value(c, v).is_empty())
                .map(|(c, v)| column_vector(c, v, &model)).collect();
            let expect = linalg::mean(cols.iter().map(Vec::as_slice), 5).unwrap_or(vec![0.0; 5]);
            for (a, b) in tv.iter().zip(&expect) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
