//! Query dependency weights and the ranking enhancements built on them.

use distant_lineage::enhance::{
    apply_enhancements, distance_weight, EnhanceOptions, Provenance, QueryDependencyDag, QueryId,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for d in 0..8 {
        println!("w_{d} = {:.2}", distance_weight(d));
    }

    let mut dag = QueryDependencyDag::new(1024, 10, 0.25)?;
    let q = |s: &str| QueryId::from(s);
    dag.register(q("load"), [])?;
    dag.register(q("clean"), [q("load")])?;
    dag.register(q("report"), [q("clean")])?;
    dag.register(q("unrelated"), [])?;
    for p in ["clean", "load", "unrelated"] {
        println!(
            "report -> {p}: distance {:?}, weight {}",
            dag.distance(&q("report"), &q(p)),
            dag.weight(&q("report"), &q(p))?
        );
    }

    let (clean, load, other) = (q("clean"), q("load"), q("unrelated"));
    let target = Provenance { created_at: 10, creating_query: Some(&q("report")) };
    let scored = [
        (1, Provenance { created_at: 2, creating_query: None }, 0.70),
        (2, Provenance { created_at: 5, creating_query: Some(&clean) }, 0.80),
        (3, Provenance { created_at: 3, creating_query: Some(&load) }, 0.80),
        (4, Provenance { created_at: 6, creating_query: Some(&other) }, 0.95),
        (5, Provenance { created_at: 12, creating_query: None }, 0.99),
    ];
    println!("raw:      {:?}", apply_enhancements(target, scored, &dag, EnhanceOptions::NONE));
    println!("enhanced: {:?}", apply_enhancements(target, scored, &dag, EnhanceOptions::ALL));
    Ok(())
}
