//! Per-slot routing LP and its supergradient.
//!
//! For a request of file `n` at location `i` the slot utility is
//! `f(y) = max sum_j w^j z^j` over `0 <= z^j <= y^{n,j}` at reachable caches
//! and `sum_j z^j <= 1`, the remainder going to the origin at zero utility.
//! Greedy waterfilling in descending weight order solves it.

use super::network::{BipartiteNetwork, NetworkCacheVector};
use crate::error::Result;
use crate::model::Request;

/// Optimal routing of one request.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingSolution {
    /// Fraction served by each cache (zero at unreachable ones).
    pub z: Vec<f64>,
    /// Fraction left to the origin.
    pub origin: f64,
    /// Realized utility `sum_j w^j z^j`.
    pub value: f64,
}

/// Supergradient of the slot utility: nonzero only in the requested file's row.
#[derive(Clone, Debug, PartialEq)]
pub struct Supergradient {
    pub file: usize,
    /// `g^{n,j}` for every cache `j`.
    pub per_cache: Vec<f64>,
    /// Multiplier of the routing budget.
    pub alpha: f64,
}

impl Supergradient {
    pub fn norm(&self) -> f64 {
        self.per_cache.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// `<g, d>` for a direction given as a placement difference.
    pub fn dot(&self, a: &NetworkCacheVector, b: &NetworkCacheVector) -> f64 {
        self.per_cache
            .iter()
            .enumerate()
            .map(|(j, g)| g * (a.get(self.file, j) - b.get(self.file, j)))
            .sum()
    }
}

/// Reachable caches ordered by weight for this (file, location), heaviest
/// first, ties by cache index.
fn scan_order(net: &BipartiteNetwork, file: usize, location: usize) -> Vec<(usize, f64)> {
    let mut order: Vec<(usize, f64)> = net
        .reachable(location)
        .iter()
        .map(|&j| (j, net.weight(file, location, j)))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order
}

/// Optimal routing by greedy waterfilling.
pub fn route(
    y: &NetworkCacheVector,
    request: &Request,
    net: &BipartiteNetwork,
) -> Result<RoutingSolution> {
    let i = net.check_request(request.file, request.location)?;
    Ok(route_at(y, request.file, i, net))
}

pub(crate) fn route_at(
    y: &NetworkCacheVector,
    file: usize,
    location: usize,
    net: &BipartiteNetwork,
) -> RoutingSolution {
    let mut z = vec![0.0; net.n_caches()];
    let mut budget = 1.0f64;
    let mut value = 0.0;
    for (j, w) in scan_order(net, file, location) {
        if budget <= 0.0 {
            break;
        }
        let take = y.get(file, j).clamp(0.0, budget);
        z[j] = take;
        value += w * take;
        budget -= take;
    }
    RoutingSolution {
        z,
        origin: budget.max(0.0),
        value,
    }
}

/// Slot utility `f(y)` for a request.
pub fn slot_value(
    y: &NetworkCacheVector,
    request: &Request,
    net: &BipartiteNetwork,
) -> Result<f64> {
    route(y, request, net).map(|r| r.value)
}

/// Supergradient from the routing duals: `g^{n,j} = max(w^j - alpha, 0)` at
/// reachable caches, where `alpha` is the smallest optimal budget multiplier.
///
/// Scanning caches by descending weight, `alpha` is the weight of the first
/// weight class whose cumulative placement exceeds 1, or 0 if the placements
/// of all reachable caches sum to at most 1.
pub fn supergradient(
    y: &NetworkCacheVector,
    request: &Request,
    net: &BipartiteNetwork,
) -> Result<Supergradient> {
    let i = net.check_request(request.file, request.location)?;
    Ok(supergradient_at(y, request.file, i, net))
}

pub(crate) fn supergradient_at(
    y: &NetworkCacheVector,
    file: usize,
    location: usize,
    net: &BipartiteNetwork,
) -> Supergradient {
    let order = scan_order(net, file, location);
    let mut alpha = 0.0;
    let mut cumulative = 0.0;
    let mut k = 0;
    'classes: while k < order.len() {
        let w = order[k].1;
        while k < order.len() && order[k].1 == w {
            cumulative += y.get(file, order[k].0);
            k += 1;
        }
        if cumulative > 1.0 {
            alpha = w;
            break 'classes;
        }
    }
    let mut per_cache = vec![0.0; net.n_caches()];
    for &(j, w) in &order {
        per_cache[j] = (w - alpha).max(0.0);
    }
    Supergradient {
        file,
        per_cache,
        alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    /// Best vertex of `max w.z, 0 <= z <= cap, sum z <= 1`: every coordinate
    /// at a bound except at most one set by the budget.
    fn lp_oracle(w: &[f64], cap: &[f64]) -> f64 {
        let k = w.len();
        let mut best = 0.0f64;
        for code in 0..3usize.pow(k as u32) {
            let mut c = code;
            let mut z = vec![0.0; k];
            let mut free = None;
            let mut ok = true;
            for idx in 0..k {
                match c % 3 {
                    0 => {}
                    1 => z[idx] = cap[idx],
                    _ => {
                        if free.is_some() {
                            ok = false;
                        }
                        free = Some(idx);
                    }
                }
                c /= 3;
            }
            if !ok {
                continue;
            }
            let used: f64 = z.iter().sum();
            if let Some(f) = free {
                z[f] = 1.0 - used;
                if z[f] < -1e-12 || z[f] > cap[f] + 1e-12 {
                    continue;
                }
            } else if used > 1.0 + 1e-12 {
                continue;
            }
            best = best.max(w.iter().zip(&z).map(|(a, b)| a * b).sum());
        }
        best
    }

    fn three_caches() -> BipartiteNetwork {
        BipartiteNetwork::complete(4, vec![2.0; 3], vec![1.0, 2.0, 100.0], 1).unwrap()
    }

    fn placement(net: &BipartiteNetwork, file: usize, slice: &[f64]) -> NetworkCacheVector {
        let mut y = NetworkCacheVector::zeros(net);
        for (j, &v) in slice.iter().enumerate() {
            y.set(file, j, v);
        }
        y
    }

    #[test]
    fn waterfilling_example() {
        let net = three_caches();
        let y = placement(&net, 0, &[0.5, 0.8, 0.3]);
        let r = route(&y, &Request::at(0, 0, 0), &net).unwrap();
        assert!((r.z[0] - 0.0).abs() < 1e-12);
        assert!((r.z[1] - 0.7).abs() < 1e-12);
        assert!((r.z[2] - 0.3).abs() < 1e-12);
        assert!((r.value - 31.4).abs() < 1e-9);
        let g = supergradient(&y, &Request::at(0, 0, 0), &net).unwrap();
        assert_eq!(g.alpha, 2.0);
        assert_eq!(g.per_cache, vec![0.0, 0.0, 98.0]);
    }

    #[test]
    fn trivial_routes() {
        let net = BipartiteNetwork::complete(3, vec![1.0], vec![5.0], 1).unwrap();
        let y = placement(&net, 1, &[1.0]);
        let r = route(&y, &Request::at(0, 1, 0), &net).unwrap();
        assert_eq!((r.z[0], r.value, r.origin), (1.0, 5.0, 0.0));
        let r = route(
            &NetworkCacheVector::zeros(&net),
            &Request::at(0, 1, 0),
            &net,
        )
        .unwrap();
        assert_eq!((r.value, r.origin), (0.0, 1.0));
        assert!(route(&y, &Request::new(0, 1), &net).is_err());
    }

    #[test]
    fn slack_budget_gives_full_weights() {
        let net = three_caches();
        let y = placement(&net, 2, &[0.2, 0.3, 0.1]);
        let g = supergradient(&y, &Request::at(0, 2, 0), &net).unwrap();
        assert_eq!(g.alpha, 0.0);
        assert_eq!(g.per_cache, vec![1.0, 2.0, 100.0]);
    }

    #[test]
    fn unreachable_caches_get_nothing() {
        let net = BipartiteNetwork::new(
            3,
            vec![1.0, 1.0],
            vec![vec![false, true]],
            vec![vec![50.0, 1.0]],
        )
        .unwrap();
        let y = placement(&net, 0, &[1.0, 0.5]);
        let r = route(&y, &Request::at(0, 0, 0), &net).unwrap();
        assert_eq!(r.z, vec![0.0, 0.5]);
        let g = supergradient(&y, &Request::at(0, 0, 0), &net).unwrap();
        assert_eq!(g.per_cache, vec![0.0, 1.0]);
    }

    #[test]
    fn degenerate_single_cache_both_duals_are_supergradients() {
        let net = BipartiteNetwork::complete(2, vec![1.0], vec![3.0], 1).unwrap();
        let y = placement(&net, 0, &[1.0]);
        let req = Request::at(0, 0, 0);
        let g = supergradient(&y, &req, &net).unwrap();
        assert_eq!(g.per_cache, vec![3.0]);
        let f = slot_value(&y, &req, &net).unwrap();
        let mut rng = seeded(3);
        for _ in 0..200 {
            let v: f64 = rng.random();
            let other = placement(&net, 0, &[v]);
            let fo = slot_value(&other, &req, &net).unwrap();
            // g = w and the minimal-norm alternative g = 0 both bound f from above
            assert!(fo <= f + 3.0 * (v - 1.0) + 1e-12);
            assert!(fo <= f + 1e-12);
        }
    }

    fn random_instance(rng: &mut impl Rng) -> (BipartiteNetwork, NetworkCacheVector, Request) {
        let i = rng.random_range(1..=4);
        let j = rng.random_range(1..=4);
        let n = rng.random_range(2..=5);
        let mut conn: Vec<Vec<bool>> = (0..i)
            .map(|_| (0..j).map(|_| rng.random_bool(0.7)).collect())
            .collect();
        conn[0][0] = true;
        // integer weights make ties between caches common
        let weights = (0..i)
            .map(|_| (0..j).map(|_| rng.random_range(0..6) as f64).collect())
            .collect();
        let caps = (0..j).map(|_| rng.random_range(1..=n) as f64).collect();
        let net = BipartiteNetwork::new(n, caps, conn, weights).unwrap();
        let y = random_placement(&net, rng);
        let req = Request::at(0, rng.random_range(0..n), rng.random_range(0..i));
        (net, y, req)
    }

    fn random_placement(net: &BipartiteNetwork, rng: &mut impl Rng) -> NetworkCacheVector {
        let cols = (0..net.n_caches())
            .map(|j| {
                let raw: Vec<f64> = (0..net.n_files())
                    .map(|_| match rng.random_range(0..4) {
                        0 => 0.0,
                        1 => 1.0,
                        _ => rng.random(),
                    })
                    .collect();
                crate::projection::project_capped_simplex(&raw, net.capacity(j))
                    .unwrap()
                    .into_fractions()
            })
            .collect();
        NetworkCacheVector::from_columns(cols, net).unwrap()
    }

    #[test]
    fn greedy_matches_lp_oracle() {
        let mut rng = seeded(11);
        for _ in 0..500 {
            let (net, y, req) = random_instance(&mut rng);
            let i = req.location.unwrap();
            let reach = net.reachable(i);
            let w: Vec<f64> = reach.iter().map(|&j| net.weight(req.file, i, j)).collect();
            let cap: Vec<f64> = reach.iter().map(|&j| y.get(req.file, j)).collect();
            let r = route(&y, &req, &net).unwrap();
            assert!((r.value - lp_oracle(&w, &cap)).abs() < 1e-9);
            assert!((r.z.iter().sum::<f64>() + r.origin - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn supergradient_inequality_and_norm_bound() {
        let mut rng = seeded(12);
        for _ in 0..500 {
            let (net, y, req) = random_instance(&mut rng);
            let other = random_placement(&net, &mut rng);
            let g = supergradient(&y, &req, &net).unwrap();
            let f = slot_value(&y, &req, &net).unwrap();
            let fo = slot_value(&other, &req, &net).unwrap();
            assert!(fo <= f + g.dot(&other, &y) + 1e-9);
            assert!(g.norm() <= net.max_weight() * (net.max_degree() as f64).sqrt() + 1e-12);
        }
    }

    #[test]
    fn slot_utility_is_concave() {
        let mut rng = seeded(13);
        for _ in 0..500 {
            let (net, a, req) = random_instance(&mut rng);
            let b = random_placement(&net, &mut rng);
            let lambda: f64 = rng.random();
            let mix = NetworkCacheVector::from_columns(
                a.columns()
                    .iter()
                    .zip(b.columns())
                    .map(|(ca, cb)| {
                        ca.iter()
                            .zip(cb)
                            .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
                            .collect()
                    })
                    .collect(),
                &net,
            )
            .unwrap();
            let fm = slot_value(&mix, &req, &net).unwrap();
            let fa = slot_value(&a, &req, &net).unwrap();
            let fb = slot_value(&b, &req, &net).unwrap();
            assert!(fm >= lambda * fa + (1.0 - lambda) * fb - 1e-9);
        }
    }
}
