//! Turns cell values into tokens, embeds them with a small word model and
//! prints the two training corpora for a toy table.

use distant_lineage::embedding::{
    column_vector, extract_corpora, textify_value, tuple_vector, ColumnWeights, CorpusTable, WordModel,
};
use distant_lineage::linalg::cosine;
use distant_lineage::value::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let columns = vec!["name".to_string(), "sugar".to_string(), "maker".to_string()];
    let rows = [
        vec![Value::from("Honey Oat Granola"), Value::Real(12.5), Value::from("Valley Foods")],
        vec![Value::from("Oat Crackers"), Value::Int(2), Value::from("Valley Foods")],
        vec![Value::from("Spicy Salsa"), Value::Null, Value::from("Summit Farms")],
    ];
    for (c, v) in columns.iter().zip(&rows[0]) {
        println!("{c} = {v:?} -> {:?}", textify_value(c, v));
    }

    // tokens missing from the model fall back to seeded hash vectors
    let model = WordModel::new(16, 42)?;
    let weights = ColumnWeights::uniform();
    let tuple = |r: &[Value]| tuple_vector(columns.iter().map(String::as_str).zip(r), &model, &weights);
    let (a, b, c) = (tuple(&rows[0]), tuple(&rows[1]), tuple(&rows[2]));
    println!("cos(granola, crackers) = {:.3}", cosine(&a, &b));
    println!("cos(granola, salsa)    = {:.3}", cosine(&a, &c));
    let maker = column_vector("maker", &rows[0][2], &model);
    println!("maker vector norm = {:.3}", maker.iter().map(|x| x * x).sum::<f64>().sqrt());

    let corpora = extract_corpora(
        [CorpusTable { name: "products", columns: &columns, rows: rows.iter().map(Vec::as_slice).collect() }],
        4,
        8,
    );
    println!("--- columns corpus\n{}--- tuples corpus\n{}", corpora.columns, corpora.tuples);
    Ok(())
}
