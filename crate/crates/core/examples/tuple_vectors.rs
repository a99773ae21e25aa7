//! The `+` and `·` operations on capped vector sets, and set similarity.

use distant_lineage::tv::{set_similarity, tv_add, tv_mul, LineageVectorSet, SimilarityParams};

fn show(label: &str, s: &LineageVectorSet) {
    println!("{label}: {} vectors", s.len());
    for v in s.vectors() {
        let cells: Vec<String> = v.iter().map(|x| format!("{x:+.2}")).collect();
        println!("  [{}]", cells.join(", "));
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max = 4;
    let a = LineageVectorSet::new(vec![vec![1.0, 0.0, 0.0], vec![0.9, 0.1, 0.0]], max)?;
    let b = LineageVectorSet::new(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.8, 0.2], vec![0.1, 0.9, 0.0]], max)?;
    let c = LineageVectorSet::singleton(vec![0.0, 0.0, 1.0], max)?;

    let either = tv_add(&a, &b, 1)?;
    let both = tv_mul(&a, &b, 1)?;
    show("a + b (clustered to 4)", &either);
    show("a · b", &both);

    let p = SimilarityParams::default();
    println!("sim(a, a + b) = {:.4}", set_similarity(&a, &either, &p)?);
    println!("sim(c, a + b) = {:.4}", set_similarity(&c, &either, &p)?);
    println!("sim(a · b, b) = {:.4}", set_similarity(&both, &b, &p)?);
    let max_only = SimilarityParams::new(1.0, 0.0)?;
    println!("max-only sim(a, a) = {:.4}", set_similarity(&a, &a, &max_only)?);
    println!("blended  sim(a, a) = {:.4}", set_similarity(&a, &a, &p)?);
    Ok(())
}
