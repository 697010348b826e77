//! Exact best static placement by linear programming.
//!
//! With the routing variables made explicit the aggregate problem is an LP:
//! maximize `sum c_{n,i} w^{n,i,j} z^{n,i,j}` subject to `z^{n,i,j} <= y^{n,j}`,
//! `sum_j z^{n,i,j} <= 1` and `sum_n y^{n,j} <= C_j`, all variables in [0, 1].

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::hindsight::DemandCounts;
use super::network::{BipartiteNetwork, NetworkCacheVector};
use crate::error::{Error, Result};
use crate::projection::project_capped_simplex;
use crate::traces::Trace;

/// Optimal static placement and its aggregate utility, re-evaluated exactly
/// through the routing of every request.
pub fn hindsight_network_lp(
    trace: &Trace,
    net: &BipartiteNetwork,
) -> Result<(NetworkCacheVector, f64)> {
    if trace.is_empty() {
        return Err(Error::input("trace is empty"));
    }
    let demand = DemandCounts::from_trace(trace, net)?;
    solve(&demand, net)
}

pub(crate) fn solve(
    demand: &DemandCounts,
    net: &BipartiteNetwork,
) -> Result<(NetworkCacheVector, f64)> {
    let (n_files, n_caches) = (net.n_files(), net.n_caches());
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    // y variables only for requested files; the rest stay at zero
    let mut y_var = vec![None; n_files * n_caches];
    let mut per_cache: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); n_caches];
    for &(n, _, _) in demand.entries() {
        for j in 0..n_caches {
            if y_var[n * n_caches + j].is_none() {
                let v = lp.add_var(0.0, (0.0, 1.0));
                y_var[n * n_caches + j] = Some(v);
                per_cache[j].push((v, 1.0));
            }
        }
    }
    for &(n, i, c) in demand.entries() {
        let mut budget = Vec::new();
        for &j in net.reachable(i) {
            let z = lp.add_var(c * net.weight(n, i, j), (0.0, 1.0));
            let y = y_var[n * n_caches + j].expect("created above");
            lp.add_constraint([(z, 1.0), (y, -1.0)], ComparisonOp::Le, 0.0);
            budget.push((z, 1.0));
        }
        if !budget.is_empty() {
            lp.add_constraint(budget.as_slice(), ComparisonOp::Le, 1.0);
        }
    }
    for (j, terms) in per_cache.iter().enumerate() {
        if !terms.is_empty() {
            lp.add_constraint(terms.as_slice(), ComparisonOp::Le, net.capacity(j));
        }
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::Numeric(format!("placement LP: {e}")))?
        .into_solution()
        .map_err(|_| Error::Numeric("placement LP was interrupted".into()))?;

    let mut columns = vec![vec![0.0; n_files]; n_caches];
    for n in 0..n_files {
        for (j, col) in columns.iter_mut().enumerate() {
            if let Some(v) = y_var[n * n_caches + j] {
                col[n] = solution.var_value(v);
            }
        }
    }
    // wipe solver round-off so the placement is feasible to machine precision
    let columns = columns
        .into_iter()
        .enumerate()
        .map(|(j, col)| project_capped_simplex(&col, net.capacity(j)).map(|y| y.into_fractions()))
        .collect::<Result<Vec<_>>>()?;
    let y = NetworkCacheVector::from_columns(columns, net)?;
    let value = demand.objective(&y, net);
    Ok((y, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::{brute_force_best_integral, hindsight_best_static_network};
    use crate::model::Request;
    use crate::rng::seeded;
    use crate::traces::{assign_uniform_locations, gen_zipf_iid, Provenance};
    use rand::Rng;

    #[test]
    fn swap_instance() {
        // greedy integral placement is suboptimal here; the optimum needs a swap
        let net = BipartiteNetwork::from_toml_str(
            "files = 3\ncapacities = [2, 3, 2]\nconnectivity = [[1, 1, 1], [1, 0, 1], [1, 0, 1]]\n\
             weights = [[5, 4, 7], [1, 2, 7], [1, 4, 2]]",
        )
        .unwrap();
        let mut reqs = Vec::new();
        for (n, i, c) in [
            (0, 0, 12),
            (0, 1, 9),
            (0, 2, 16),
            (1, 0, 4),
            (1, 1, 1),
            (1, 2, 6),
            (2, 1, 4),
            (2, 2, 8),
        ] {
            for _ in 0..c {
                reqs.push(Request::at(reqs.len() as u64, n, i));
            }
        }
        let trace = Trace::new(reqs, 3, Some(3), Provenance::default()).unwrap();
        let (y, v) = hindsight_network_lp(&trace, &net).unwrap();
        assert!(y.is_feasible(&net));
        let (_, integral) = brute_force_best_integral(&trace, &net).unwrap();
        assert!(v >= integral - 1e-9);
        let (_, ascent) = hindsight_best_static_network(&trace, &net, 400).unwrap();
        assert!(ascent <= v + 1e-9);
        assert!(ascent >= 0.99 * v);
    }

    #[test]
    fn bounds_ascent_and_integral_optimum() {
        let mut rng = seeded(31);
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
            let (_, exact) = hindsight_network_lp(&trace, &net).unwrap();
            let (_, integral) = brute_force_best_integral(&trace, &net).unwrap();
            let (_, ascent) = hindsight_best_static_network(&trace, &net, 50).unwrap();
            assert!(exact >= integral - 1e-9, "case {case}");
            assert!(ascent <= exact + 1e-9, "case {case}");
            assert!(ascent >= 0.95 * exact, "case {case}: {ascent} vs {exact}");
        }
    }
}
