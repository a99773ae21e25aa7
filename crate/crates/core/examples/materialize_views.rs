//! Ingests CSV data, materializes two generations of views from plan text
//! and inspects exact and approximate lineage.

use distant_lineage::config::Config;
use distant_lineage::engine::{parse_plan, Database};
use distant_lineage::explain::{Group, Method, RankRequest};

const PRODUCTS: &str = "\
ndb_no,manufacturer,name
1,valley foods,honey granola
2,valley foods,oat crackers
3,summit farms,spicy salsa
4,summit farms,mild salsa
5,river kitchens,green tea
";

const NUTRIENTS: &str = "\
ndb_no,nutrient,amount
1,protein,8.5
2,protein,3
3,sodium,410
5,protein,0
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut db = Database::with_hash_model(Config { dim: 32, ..Config::default() })?;
    db.ingest_csv("products", PRODUCTS.as_bytes())?;
    db.ingest_csv("nutrients", NUTRIENTS.as_bytes())?;

    let protein = parse_plan(
        "project(
           join(scan(products), filter(scan(nutrients), nutrient = 'protein'),
                products.ndb_no = nutrients.ndb_no),
           manufacturer <- manufacturer, name <- name, grams <- amount)",
    )?;
    println!("plan:\n{protein}");
    db.insert_select(&protein, "protein", "q_protein".into())?;

    let makers =
        parse_plan("distinct(project(filter(scan(protein), grams > 1), manufacturer <- manufacturer), manufacturer)")?;
    let ids = db.insert_select(&makers, "makers", "q_makers".into())?;

    for &t in &ids {
        let rec = db.tuple(t)?;
        let lineage = db.distant_lineage(t)?;
        println!("tuple {t} {:?} created by {:?}", rec.values, rec.creating_query);
        for (depth, level) in lineage.levels.iter().enumerate().skip(1) {
            println!("  level {depth}: {level:?}");
        }
        println!("  verified from exact lineage: {}", db.verify_lineage(t, &lineage.exact())?);
        let ranked = db.rank(t, &RankRequest::distant(Method::Cv, Group::Base))?;
        println!("  top base candidates: {:?}", &ranked[..3.min(ranked.len())]);
    }
    Ok(())
}
