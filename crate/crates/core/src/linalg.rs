//! Small dense-vector helpers shared by the lineage modules.

/// A D-dimensional real vector.
pub type Vector = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn is_zero(a: &[f64]) -> bool {
    a.iter().all(|x| *x == 0.0)
}

/// Cosine similarity, defined as 0 when either side is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Componentwise average of two vectors.
pub fn midpoint(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn normalized(a: &[f64]) -> Option<Vector> {
    let n = norm(a);
    (n > 0.0).then(|| a.iter().map(|x| x / n).collect())
}

/// Arithmetic mean of a nonempty collection of equal-length vectors.
pub fn mean<'a, I>(vectors: I, dim: usize) -> Option<Vector>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = vec![0.0; dim];
    let mut count = 0usize;
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
        count += 1;
    }
    if count == 0 {
        return None;
    }
    let inv = count as f64;
    acc.iter_mut().for_each(|a| *a /= inv);
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_of_zero_is_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((cosine(&[1.0, 1.0], &[2.0, 2.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_of_two() {
        let m = mean([&[1.0, 2.0][..], &[3.0, 4.0][..]], 2).unwrap();
        assert_eq!(m, vec![2.0, 3.0]);
        assert!(mean(std::iter::empty(), 2).is_none());
    }
}
