//! Per-column lineage maps: combining, settling native columns after a
//! projection, dropping to a column budget and comparing with containment.

use distant_lineage::cv::{
    cv_mul, cv_similarity, drop_columns, finalize_native, ColumnLineageMap, ColumnSource, NativeAssignment,
};
use distant_lineage::embedding::{column_vector, ColumnWeights, WordModel};
use distant_lineage::tv::{LineageVectorSet, SimilarityParams};
use distant_lineage::value::Value;

fn describe(label: &str, cv: &ColumnLineageMap) {
    println!("{label}:");
    for (col, e) in cv.entries() {
        let kind = if cv.is_native(col) { "native" } else { "inherited" };
        println!("  {col:<22} {kind:<9} {} vectors, touched {}", e.set.len(), e.touched);
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = WordModel::new(16, 3)?;
    let cell = |col: &str, v: Value| LineageVectorSet::singleton(column_vector(col, &v, &model), 4);
    let products = ColumnLineageMap::from_native(
        [
            ("products.ndb_no".to_string(), cell("ndb_no", Value::Int(45001001))?),
            ("products.manufacturer".to_string(), cell("manufacturer", "valley foods".into())?),
        ],
        1,
    );
    let nutrients = ColumnLineageMap::from_native(
        [
            ("nutrients.ndb_no".to_string(), cell("ndb_no", Value::Int(45001001))?),
            ("nutrients.output_value".to_string(), cell("output_value", Value::Real(12.5))?),
        ],
        2,
    );
    let joined = cv_mul(&products, &nutrients, 1)?;
    describe("products · nutrients", &joined);

    let assignments = [
        NativeAssignment {
            target: "protein.manufacturer".into(),
            source: ColumnSource::Column("products.manufacturer".into()),
        },
        NativeAssignment {
            target: "protein.protein".into(),
            source: ColumnSource::Column("nutrients.output_value".into()),
        },
        NativeAssignment { target: "protein.unit".into(), source: ColumnSource::Constant("g".into()) },
    ];
    let settled = finalize_native(&joined, &assignments, &model, 4, 1, 3)?;
    describe("after projection", &settled);
    describe("bounded to 4 columns", &drop_columns(&settled, 4));

    let p = SimilarityParams::default();
    let w = ColumnWeights::uniform();
    println!("sim(protein row, products row) = {:?}", cv_similarity(&settled, &products, &p, &w, 1.0)?);
    println!("sim(products row, protein row) = {:?}", cv_similarity(&products, &settled, &p, &w, 1.0)?);
    Ok(())
}
