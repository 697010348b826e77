//! Best static network placement in hindsight.
//!
//! The aggregate utility `F(y) = sum_t f_t(y)` depends on the trace only
//! through how often each (file, location) pair was requested, so the
//! optimizer works on those counts.

use std::collections::BTreeMap;

use super::network::{network_diameter, BipartiteNetwork, NetworkCacheVector};
use super::routing::{route_at, supergradient_at};
use crate::error::{Error, Result};
use crate::projection::project_capped_simplex;
use crate::traces::Trace;

/// Default number of optimization epochs.
pub const DEFAULT_EPOCHS: usize = 50;

/// Largest `N * J` accepted by [`brute_force_best_integral`].
pub const BRUTE_FORCE_MAX_CELLS: usize = 12;

/// Request counts per (file, location), in key order.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandCounts {
    entries: Vec<(usize, usize, f64)>,
}

impl DemandCounts {
    pub fn from_trace(trace: &Trace, net: &BipartiteNetwork) -> Result<Self> {
        let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for r in trace.requests() {
            let i = net.check_request(r.file, r.location)?;
            *counts.entry((r.file, i)).or_default() += 1;
        }
        Ok(DemandCounts {
            entries: counts
                .into_iter()
                .map(|((n, i), c)| (n, i, c as f64))
                .collect(),
        })
    }

    /// `(file, location, count)` triples.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// `F(y) = sum count * f_{n,i}(y)`.
    pub fn objective(&self, y: &NetworkCacheVector, net: &BipartiteNetwork) -> f64 {
        self.entries
            .iter()
            .map(|&(n, i, c)| c * route_at(y, n, i, net).value)
            .sum()
    }
}

/// Approximately maximizes the aggregate utility of a static placement.
///
/// Starts from the better of the uniform placement and a greedy integral
/// placement, then runs `epochs` passes of incremental projected
/// supergradient ascent over the (file, location) groups with step
/// `diam / (|G_e| sqrt(e))` per epoch, `G_e` being the aggregate supergradient
/// at the start of epoch `e`. Returns the best placement seen and its exact
/// aggregate utility.
pub fn hindsight_best_static_network(
    trace: &Trace,
    net: &BipartiteNetwork,
    epochs: usize,
) -> Result<(NetworkCacheVector, f64)> {
    if epochs < 1 {
        return Err(Error::input("epochs must be at least 1"));
    }
    if trace.is_empty() {
        return Err(Error::input("trace is empty"));
    }
    let demand = DemandCounts::from_trace(trace, net)?;
    optimize(&demand, net, epochs)
}

pub(crate) fn optimize(
    demand: &DemandCounts,
    net: &BipartiteNetwork,
    epochs: usize,
) -> Result<(NetworkCacheVector, f64)> {
    let uniform = NetworkCacheVector::uniform(net);
    let greedy = greedy_integral(demand, net);
    let (fu, fg) = (
        demand.objective(&uniform, net),
        demand.objective(&greedy, net),
    );
    let (mut y, value) = if fg >= fu {
        (greedy, fg)
    } else {
        (uniform, fu)
    };
    let mut best = (y.clone(), value);
    let diam = network_diameter(net);

    for e in 1..=epochs {
        let norm = aggregate_gradient_norm(demand, &y, net);
        if norm == 0.0 || diam == 0.0 {
            break;
        }
        let eta = diam / (norm * (e as f64).sqrt());
        for &(n, i, c) in demand.entries() {
            let g = supergradient_at(&y, n, i, net);
            for (j, &gj) in g.per_cache.iter().enumerate() {
                if gj > 0.0 {
                    let col = y.column_mut(j);
                    col[n] += eta * c * gj;
                    *col = project_capped_simplex(col, net.capacity(j))?.into_fractions();
                }
            }
        }
        let value = demand.objective(&y, net);
        if value > best.1 {
            best = (y.clone(), value);
        }
    }
    Ok(best)
}

fn aggregate_gradient_norm(
    demand: &DemandCounts,
    y: &NetworkCacheVector,
    net: &BipartiteNetwork,
) -> f64 {
    let mut total: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(n, i, c) in demand.entries() {
        let g = supergradient_at(y, n, i, net);
        for (j, &gj) in g.per_cache.iter().enumerate() {
            if gj > 0.0 {
                *total.entry((n, j)).or_default() += c * gj;
            }
        }
    }
    total.values().map(|v| v * v).sum::<f64>().sqrt()
}

/// Greedy integral placement: repeatedly caches the (file, cache) pair with
/// the largest gain in aggregate utility until no slot adds value.
fn greedy_integral(demand: &DemandCounts, net: &BipartiteNetwork) -> NetworkCacheVector {
    let mut y = NetworkCacheVector::zeros(net);
    let mut free: Vec<usize> = net
        .capacities()
        .iter()
        .map(|c| c.floor() as usize)
        .collect();
    let mut by_file: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for &(n, i, c) in demand.entries() {
        by_file.entry(n).or_default().push((i, c));
    }
    let file_value = |y: &NetworkCacheVector, n: usize, groups: &[(usize, f64)]| -> f64 {
        groups
            .iter()
            .map(|&(i, c)| c * route_at(y, n, i, net).value)
            .sum()
    };
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (&n, groups) in &by_file {
            let base = file_value(&y, n, groups);
            for (j, &room) in free.iter().enumerate() {
                if room == 0 || y.get(n, j) > 0.0 {
                    continue;
                }
                y.set(n, j, 1.0);
                let gain = file_value(&y, n, groups) - base;
                y.set(n, j, 0.0);
                if gain > 0.0 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, n, j));
                }
            }
        }
        match best {
            Some((_, n, j)) => {
                y.set(n, j, 1.0);
                free[j] -= 1;
            }
            None => return y,
        }
    }
}

/// Exact best integral placement by enumeration, for `N * J <= 12`.
pub fn brute_force_best_integral(
    trace: &Trace,
    net: &BipartiteNetwork,
) -> Result<(NetworkCacheVector, f64)> {
    let (n, j) = (net.n_files(), net.n_caches());
    if n * j > BRUTE_FORCE_MAX_CELLS {
        return Err(Error::input(format!(
            "brute force limited to N*J <= {BRUTE_FORCE_MAX_CELLS}, got {}",
            n * j
        )));
    }
    let demand = DemandCounts::from_trace(trace, net)?;
    let mut best: Option<(NetworkCacheVector, f64)> = None;
    for mask in 0u32..(1 << (n * j)) {
        let columns: Vec<Vec<f64>> = (0..j)
            .map(|c| {
                (0..n)
                    .map(|f| f64::from((mask >> (c * n + f)) & 1))
                    .collect()
            })
            .collect();
        if columns
            .iter()
            .zip(net.capacities())
            .any(|(col, &cap)| col.iter().sum::<f64>() > cap)
        {
            continue;
        }
        let y = NetworkCacheVector::from_columns_unchecked(columns);
        let v = demand.objective(&y, net);
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((y, v));
        }
    }
    Ok(best.expect("the empty placement is always feasible"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Request;
    use crate::rng::seeded;
    use crate::traces::{assign_uniform_locations, gen_zipf_iid, Provenance};
    use rand::Rng;

    fn located(pairs: &[(usize, usize)], n: usize, i: usize) -> Trace {
        let reqs = pairs
            .iter()
            .enumerate()
            .map(|(t, &(f, l))| Request::at(t as u64, f, l))
            .collect();
        Trace::new(reqs, n, Some(i), Provenance::default()).unwrap()
    }

    #[test]
    fn single_file_single_cache() {
        let net = BipartiteNetwork::complete(2, vec![1.0], vec![3.0], 1).unwrap();
        let trace = located(&[(0, 0); 7], 2, 1);
        let (y, v) = hindsight_best_static_network(&trace, &net, 10).unwrap();
        assert!((y.get(0, 0) - 1.0).abs() < 1e-9);
        assert!((v - 21.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_files_reach_brute_force() {
        let net = BipartiteNetwork::complete(2, vec![1.0], vec![1.0], 1).unwrap();
        let trace = located(&[(0, 0), (1, 0), (0, 0), (1, 0)], 2, 1);
        let (_, v) = hindsight_best_static_network(&trace, &net, DEFAULT_EPOCHS).unwrap();
        let (_, exact) = brute_force_best_integral(&trace, &net).unwrap();
        assert!((v - exact).abs() < 1e-9);
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_zero_epochs_and_large_brute_force() {
        let net = BipartiteNetwork::complete(5, vec![1.0; 3], vec![1.0; 3], 1).unwrap();
        let trace = located(&[(0, 0)], 5, 1);
        assert!(hindsight_best_static_network(&trace, &net, 0).is_err());
        assert!(brute_force_best_integral(&trace, &net).is_err());
    }

    #[test]
    fn close_to_integral_optimum_on_small_networks() {
        let mut rng = seeded(21);
        for case in 0..40 {
            let j = rng.random_range(1..=3usize);
            let n = rng.random_range(2..=12 / j);
            let i = rng.random_range(1..=3usize);
            let conn = (0..i)
                .map(|_| (0..j).map(|_| rng.random_bool(0.7)).collect())
                .collect();
            let weights = (0..i)
                .map(|_| (0..j).map(|_| rng.random_range(1..10) as f64).collect())
                .collect();
            let caps = (0..j).map(|_| rng.random_range(1..=n) as f64).collect();
            let net = BipartiteNetwork::new(n, caps, conn, weights).unwrap();
            let base = gen_zipf_iid(n, 60, 0.8, case).unwrap();
            let trace = assign_uniform_locations(&base, i, case).unwrap();
            let (y, v) = hindsight_best_static_network(&trace, &net, 400).unwrap();
            let (_, exact) = brute_force_best_integral(&trace, &net).unwrap();
            assert!(y.is_feasible(&net));
            assert!(v >= 0.99 * exact, "case {case}: {v} vs {exact}");
        }
    }

    #[test]
    fn beats_top_files_in_heavy_cache() {
        let net = BipartiteNetwork::complete(100, vec![10.0; 3], vec![1.0, 2.0, 100.0], 4).unwrap();
        let base = gen_zipf_iid(100, 20_000, 0.8, 4).unwrap();
        let trace = assign_uniform_locations(&base, 4, 4).unwrap();
        let counts = trace.file_counts();
        let mut order: Vec<usize> = (0..100).collect();
        order.sort_by_key(|&n| std::cmp::Reverse(counts[n]));
        let mut naive = NetworkCacheVector::zeros(&net);
        for &n in &order[..10] {
            naive.set(n, 2, 1.0);
        }
        let demand = DemandCounts::from_trace(&trace, &net).unwrap();
        let (y, v) = hindsight_best_static_network(&trace, &net, DEFAULT_EPOCHS).unwrap();
        assert!(v >= demand.objective(&naive, &net));
        assert!((v - demand.objective(&y, &net)).abs() < 1e-6);
    }
}
