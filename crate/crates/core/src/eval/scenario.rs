//! Synthetic food-products database with a hierarchy of materialized views.
//!
//! Three base tables share the `ndb_no` key:
//!
//! * `products(ndb_no, manufacturer, name, ingredients)`
//! * `nutrients(ndb_no, nutrient_name, output_value, output_uom)`, each row
//!   attached to a uniformly chosen product
//! * `serving_size(ndb_no, serving_size, serving_size_uom, preparation_state)`,
//!   one row per product
//!
//! Text is drawn from small fixed vocabularies, so the same manufacturer and
//! product words recur across rows. The default views build four derivation
//! generations: `prepared`, `unprepared`, `readytodrink` and `protein` over
//! the base tables, `exp2` over two of those, `exp3` over `exp2`, and `exp4`
//! over `exp3`.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::Config;
use crate::engine::{parse_plan, Database, EngineError, ParseError, TableKind, TupleId};
use crate::enhance::QueryId;
use crate::value::Value;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("view dependencies form a cycle through {0:?}")]
    Cyclic(Vec<String>),
    #[error("duplicate view `{0}`")]
    DuplicateView(String),
    #[error("view `{view}`: {source}")]
    Plan { view: String, source: ParseError },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSpec {
    pub name: String,
    pub query: QueryId,
    /// Plan text in the engine's grammar.
    pub plan: String,
}

impl ViewSpec {
    pub fn new(name: &str, query: &str, plan: &str) -> Self {
        Self { name: name.to_string(), query: QueryId::from(query), plan: plan.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub products: usize,
    pub nutrients: usize,
    pub manufacturers: usize,
    /// Materialized in dependency order, ties in listed order.
    pub views: Vec<ViewSpec>,
}

const MAKER_HEADS: [&str; 20] = [
    "kroger", "meijer", "wegmans", "publix", "safeway", "giant", "heb", "aldi", "harvest", "sunrise", "valley",
    "prairie", "coastal", "summit", "golden", "orchard", "maple", "river", "northern", "lakeside",
];
const MAKER_TAILS: [&str; 4] = ["foods", "farms", "brands", "kitchens"];
const ADJECTIVES: [&str; 16] = [
    "organic", "classic", "spicy", "sweet", "crunchy", "creamy", "smoked", "roasted", "honey", "zesty", "original",
    "lite", "chunky", "mild", "golden", "wild",
];
const FOODS: [&str; 30] = [
    "granola",
    "salsa",
    "yogurt",
    "crackers",
    "cereal",
    "almonds",
    "peanut butter",
    "pasta sauce",
    "soup",
    "chips",
    "cookies",
    "juice",
    "tea",
    "coffee",
    "oatmeal",
    "rice",
    "beans",
    "hummus",
    "pretzels",
    "popcorn",
    "jam",
    "ketchup",
    "mustard",
    "bread",
    "muffins",
    "bagels",
    "cheese",
    "milk",
    "lemonade",
    "smoothie",
];
const INGREDIENTS: [&str; 32] = [
    "water",
    "sugar",
    "salt",
    "wheat flour",
    "corn syrup",
    "soybean oil",
    "milk",
    "whey",
    "cocoa",
    "vanilla",
    "cinnamon",
    "garlic",
    "onion",
    "tomato paste",
    "vinegar",
    "lemon juice",
    "honey",
    "oats",
    "rice flour",
    "almonds",
    "peanuts",
    "citric acid",
    "pectin",
    "yeast",
    "butter",
    "eggs",
    "paprika",
    "black pepper",
    "cane sugar",
    "sea salt",
    "natural flavor",
    "green tea",
];
const NUTRIENTS: [(&str, &str, f64); 6] = [
    ("Protein", "g", 40.0),
    ("Sugars, total", "g", 60.0),
    ("Sodium, Na", "mg", 900.0),
    ("Energy", "kcal", 600.0),
    ("Total lipid (fat)", "g", 50.0),
    ("Carbohydrate, by difference", "g", 90.0),
];
const SERVING_SIZES: [i64; 8] = [15, 28, 30, 40, 55, 100, 240, 355];
const SERVING_UOMS: [&str; 4] = ["g", "ml", "oz", "cup"];
const PREPARATION: [(&str, f64); 4] =
    [("prepared", 0.30), ("unprepared", 0.40), ("ready to drink", 0.15), ("none", 0.15)];

fn products_join(state: &str) -> String {
    format!(
        "project(join(scan(products), filter(scan(serving_size), preparation_state = '{state}'), \
         products.ndb_no = serving_size.ndb_no), \
         ndb_no <- products.ndb_no, manufacturer <- manufacturer, name <- name, \
         serving_size <- serving_size, serving_size_uom <- serving_size_uom)"
    )
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            products: 1000,
            nutrients: 1000,
            manufacturers: 40,
            views: vec![
                ViewSpec::new("prepared", "q_prepared", &products_join("prepared")),
                ViewSpec::new("unprepared", "q_unprepared", &products_join("unprepared")),
                ViewSpec::new("readytodrink", "q_readytodrink", &products_join("ready to drink")),
                ViewSpec::new(
                    "protein",
                    "q_protein",
                    "project(join(scan(products), filter(scan(nutrients), nutrient_name = 'Protein'), \
                     products.ndb_no = nutrients.ndb_no), \
                     ndb_no <- products.ndb_no, manufacturer <- manufacturer, name <- name, \
                     protein <- output_value, protein_uom <- output_uom)",
                ),
                ViewSpec::new(
                    "exp2",
                    "q_exp2",
                    "project(join(scan(prepared), scan(protein), prepared.ndb_no = protein.ndb_no), \
                     ndb_no <- prepared.ndb_no, manufacturer <- prepared.manufacturer, \
                     name <- prepared.name, protein <- protein)",
                ),
                ViewSpec::new(
                    "exp3",
                    "q_exp3",
                    "distinct(project(join(scan(exp2), scan(unprepared), \
                     exp2.manufacturer = unprepared.manufacturer), \
                     manufacturer <- exp2.manufacturer, uom <- unprepared.serving_size_uom), \
                     manufacturer, uom)",
                ),
                ViewSpec::new(
                    "exp4",
                    "q_exp4",
                    "distinct(project(join(scan(exp3), scan(readytodrink), \
                     exp3.manufacturer = readytodrink.manufacturer), \
                     manufacturer <- exp3.manufacturer), manufacturer)",
                ),
            ],
        }
    }
}

/// Names of the views whose tuples are explained in the default experiments.
pub const TARGET_VIEWS: [&str; 3] = ["exp2", "exp3", "exp4"];

fn manufacturer_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let head = MAKER_HEADS[i % MAKER_HEADS.len()];
            let tail = MAKER_TAILS[(i / MAKER_HEADS.len()) % MAKER_TAILS.len()];
            let round = i / (MAKER_HEADS.len() * MAKER_TAILS.len());
            if round == 0 {
                format!("{head} {tail}")
            } else {
                format!("{head} {tail} {round}")
            }
        })
        .collect()
}

fn pick_weighted<'a>(rng: &mut ChaCha8Rng, options: &[(&'a str, f64)]) -> &'a str {
    let mut x = rng.random::<f64>() * options.iter().map(|o| o.1).sum::<f64>();
    for (name, w) in options {
        if x < *w {
            return name;
        }
        x -= w;
    }
    options.last().unwrap().0
}

/// Views in an order where every view comes after the views it scans.
pub fn view_order(views: &[ViewSpec]) -> Result<Vec<usize>, ScenarioError> {
    let mut names = BTreeSet::new();
    for v in views {
        if !names.insert(v.name.as_str()) {
            return Err(ScenarioError::DuplicateView(v.name.clone()));
        }
    }
    let deps: Vec<BTreeSet<usize>> = views
        .iter()
        .map(|v| {
            let plan = parse_plan(&v.plan).map_err(|source| ScenarioError::Plan { view: v.name.clone(), source })?;
            Ok(plan.tables().into_iter().filter_map(|t| views.iter().position(|w| w.name == t)).collect())
        })
        .collect::<Result<_, ScenarioError>>()?;
    let mut done = vec![false; views.len()];
    let mut order = Vec::with_capacity(views.len());
    while order.len() < views.len() {
        let next = (0..views.len()).find(|&i| !done[i] && deps[i].iter().all(|&d| done[d]));
        match next {
            Some(i) => {
                done[i] = true;
                order.push(i);
            }
            None => {
                let stuck = (0..views.len()).filter(|&i| !done[i]).map(|i| views[i].name.clone()).collect();
                return Err(ScenarioError::Cyclic(stuck));
            }
        }
    }
    Ok(order)
}

/// Populates a fresh database: base rows from `seed`, then every view.
pub fn build_scenario(spec: &ScenarioSpec, seed: u64, config: Config) -> Result<Database, ScenarioError> {
    let order = view_order(&spec.views)?;
    let mut db = Database::from_config(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    db.create_table("products", &cols(&["ndb_no", "manufacturer", "name", "ingredients"]), TableKind::Base)?;
    db.create_table("nutrients", &cols(&["ndb_no", "nutrient_name", "output_value", "output_uom"]), TableKind::Base)?;
    db.create_table(
        "serving_size",
        &cols(&["ndb_no", "serving_size", "serving_size_uom", "preparation_state"]),
        TableKind::Base,
    )?;

    let makers = manufacturer_names(spec.manufacturers.max(1));
    let key = |i: usize| Value::Int(45_001_000 + i as i64);
    for i in 0..spec.products {
        let maker = makers.choose(&mut rng).unwrap();
        let name = format!("{} {}", ADJECTIVES.choose(&mut rng).unwrap(), FOODS.choose(&mut rng).unwrap());
        let n_ingredients = rng.random_range(3..=6);
        let ingredients: Vec<&str> = INGREDIENTS.choose_multiple(&mut rng, n_ingredients).copied().collect();
        db.insert_base("products", vec![key(i), maker.as_str().into(), name.into(), ingredients.join(", ").into()])?;
    }
    for i in 0..spec.products {
        let state = pick_weighted(&mut rng, &PREPARATION);
        let size = *SERVING_SIZES.choose(&mut rng).unwrap();
        let uom = *SERVING_UOMS.choose(&mut rng).unwrap();
        db.insert_base("serving_size", vec![key(i), Value::Int(size), uom.into(), state.into()])?;
    }
    if spec.products > 0 {
        for _ in 0..spec.nutrients {
            let product = rng.random_range(0..spec.products);
            let (name, uom, max) = *NUTRIENTS.choose(&mut rng).unwrap();
            let value = (rng.random::<f64>() * max * 10.0).round() / 10.0;
            db.insert_base("nutrients", vec![key(product), name.into(), Value::Real(value), uom.into()])?;
        }
    }

    for i in order {
        let v = &spec.views[i];
        let plan = parse_plan(&v.plan).map_err(|source| ScenarioError::Plan { view: v.name.clone(), source })?;
        db.insert_select(&plan, &v.name, v.query.clone())?;
    }
    Ok(db)
}

/// Tuples of the default target views present in `db`, in id order.
pub fn default_targets(db: &Database) -> Vec<TupleId> {
    let mut ids: Vec<TupleId> =
        TARGET_VIEWS.iter().filter_map(|v| db.table(v).ok()).flat_map(|t| t.rows.iter().copied()).collect();
    ids.sort();
    ids
}
