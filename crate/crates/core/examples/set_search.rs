//! Nearest vector set by inner products of long vectors, checked against an
//! exhaustive scan.

use distant_lineage::embedding::ColumnWeights;
use distant_lineage::tv::{LineageVectorSet, SimilarityParams};
use distant_lineage::vecsearch::{exhaustive_topk, ColumnScoring, IndexGrid, Payload};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(rng: &mut ChaCha8Rng, dim: usize, max: usize) -> LineageVectorSet {
    let n = rng.random_range(1..=max);
    let vectors = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    LineageVectorSet::new(vectors, max).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (dim, max) = (8, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut grid = IndexGrid::new(max, dim);
    let mut payloads = Vec::new();
    for id in 0..500u32 {
        let s = random_set(&mut rng, dim, max);
        grid.insert(id, s.clone())?;
        payloads.push((id, Payload::Tuple(s)));
    }
    println!("grid cell (2, 3) holds {} long vectors", grid.structure(2, 3).len());

    let p = SimilarityParams::default();
    let weights = ColumnWeights::uniform();
    let scoring = ColumnScoring { weights: &weights, containment_threshold: 1.0 };
    let refs: Vec<(u32, &Payload)> = payloads.iter().map(|(id, p)| (*id, p)).collect();
    for _ in 0..3 {
        let target = random_set(&mut rng, dim, max);
        let (id, score) = grid.search(&target, &p)?;
        let brute = exhaustive_topk(&Payload::Tuple(target.clone()), &refs, 3, &p, &scoring)?;
        println!("|A| = {}: grid best {id} ({score:.6}), exhaustive top 3 {brute:?}", target.len());
        println!("  grid top 3 {:?}", grid.search_top_k(&target, 3, &p)?);
    }
    Ok(())
}
