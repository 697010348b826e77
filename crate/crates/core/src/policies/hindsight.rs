use crate::error::{Error, Result};
use crate::model::{check_capacity, CacheVector, Catalog};
use crate::traces::Trace;

/// Best static configuration for a trace: whole files in order of
/// `w^n nu^n_T` (ties to the lower index) and the fractional remainder
/// `C - floor(C)` on the next file. Returns it with its total utility.
pub fn hindsight_best_static(
    trace: &Trace,
    catalog: &Catalog,
    capacity: f64,
) -> Result<(CacheVector, f64)> {
    if trace.is_empty() {
        return Err(Error::input("hindsight benchmark needs a non-empty trace"));
    }
    let mut counts = vec![0u64; catalog.n_files()];
    for r in trace.requests() {
        catalog.check_file(r.file)?;
        counts[r.file] += 1;
    }
    best_static_for_counts(&counts, catalog, capacity)
}

/// [`hindsight_best_static`] from per-file request counts.
pub fn best_static_for_counts(
    counts: &[u64],
    catalog: &Catalog,
    capacity: f64,
) -> Result<(CacheVector, f64)> {
    check_capacity(capacity)?;
    let n = catalog.n_files();
    if counts.len() != n {
        return Err(Error::input("count vector and catalog sizes differ"));
    }
    let score = |i: usize| catalog.weight(i) * counts[i] as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score(b).total_cmp(&score(a)));

    let mut y = vec![0.0; n];
    let mut left = capacity.min(n as f64);
    for &i in &order {
        if left <= 0.0 {
            break;
        }
        let take = left.min(1.0);
        y[i] = take;
        left -= take;
    }
    let total = (0..n).map(|i| score(i) * y[i]).sum();
    Ok((CacheVector::from_raw(y, capacity), total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Request;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trace_of(files: &[usize], n: usize) -> Trace {
        let reqs = files
            .iter()
            .enumerate()
            .map(|(t, &f)| Request::new(t as u64, f))
            .collect();
        Trace::new(reqs, n, None, Default::default()).unwrap()
    }

    #[test]
    fn single_file_trace() {
        let cat = Catalog::uniform(4).unwrap();
        let (y, u) = hindsight_best_static(&trace_of(&[0; 50], 4), &cat, 1.0).unwrap();
        assert_eq!(y.get(0), 1.0);
        assert_eq!(u, 50.0);
    }

    #[test]
    fn periodic_trace_caches_two_of_three() {
        let files: Vec<usize> = (0..30).map(|t| t % 3).collect();
        let cat = Catalog::uniform(3).unwrap();
        let (y, u) = hindsight_best_static(&trace_of(&files, 3), &cat, 2.0).unwrap();
        assert_eq!(u, 20.0);
        assert_eq!(y.total(), 2.0);
    }

    #[test]
    fn weights_enter_the_ranking() {
        let cat = Catalog::with_weights(vec![1.0, 1.0, 3.0]).unwrap();
        let (y, u) = best_static_for_counts(&[4, 4, 2], &cat, 1.0).unwrap();
        assert_eq!(y.fractions(), &[0.0, 0.0, 1.0]);
        assert_eq!(u, 6.0);
    }

    #[test]
    fn fractional_remainder_goes_to_next_file() {
        let cat = Catalog::uniform(3).unwrap();
        let (y, u) = best_static_for_counts(&[5, 3, 1], &cat, 1.5).unwrap();
        assert_eq!(y.fractions(), &[1.0, 0.5, 0.0]);
        assert_eq!(u, 6.5);
    }

    #[test]
    fn empty_trace_is_rejected() {
        let cat = Catalog::uniform(3).unwrap();
        let t = Trace::new(vec![], 3, None, Default::default()).unwrap();
        assert!(hindsight_best_static(&t, &cat, 1.0).is_err());
    }

    fn brute_force(counts: &[u64], weights: &[f64], c: usize) -> f64 {
        let n = counts.len();
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == c)
            .map(|m| {
                (0..n)
                    .filter(|i| m & (1 << i) != 0)
                    .map(|i| weights[i] * counts[i] as f64)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn matches_brute_force_over_integral_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..=8);
            let c = rng.random_range(1..=n);
            let t = rng.random_range(1..=20);
            let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
            let files: Vec<usize> = (0..t).map(|_| rng.random_range(0..n)).collect();
            let cat = Catalog::with_weights(weights.clone()).unwrap();
            let trace = trace_of(&files, n);
            let (_, u) = hindsight_best_static(&trace, &cat, c as f64).unwrap();
            let mut counts = vec![0; n];
            files.iter().for_each(|&f| counts[f] += 1);
            assert!((u - brute_force(&counts, &weights, c)).abs() < 1e-9);
        }
    }
}
