//! Regret bounds: closed-form upper bounds for OGA and BSA, the linear
//! regret of LRU/LFU on the adversarial periodic sequence, and lower bounds
//! for any policy from Gaussian order statistics.
//!
//! Lower bounds scale with `sqrt(T)`; the functions here return the
//! coefficient and leave the horizon to the caller.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::policies::capped_simplex_diameter;
use crate::rng::{derive_seed, seeded};

/// Exact pairing enumeration is used up to this many files.
pub const PAIRING_EXACT_MAX_FILES: usize = 10;

/// Eigenvalues below this are treated as zero when factoring the covariance.
pub const EIGEN_ZERO_TOL: f64 = 1e-12;

/// Minimum Monte Carlo sample count.
pub const MIN_SAMPLES: usize = 1000;

const BATCH: usize = 1024;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must be positive, got {v}")))
    }
}

/// Regret of LRU and LFU on the periodic sequence of `C + 1` files:
/// `w C (T / (C + 1) - 1)`.
pub fn prop1_bound(w: f64, capacity: u64, horizon: u64) -> Result<f64> {
    check_positive("w", w)?;
    if capacity < 1 || horizon < 1 {
        return Err(Error::input("capacity and horizon must be at least 1"));
    }
    let c = capacity as f64;
    Ok(w * c * (horizon as f64 / (c + 1.0) - 1.0))
}

/// OGA regret bound `diam(Y) w_max sqrt(T)`.
pub fn oga_upper_bound(capacity: f64, n_files: usize, horizon: u64, w_max: f64) -> Result<f64> {
    check_positive("w_max", w_max)?;
    if capacity < 1.0 {
        return Err(Error::input(format!(
            "capacity must be at least 1, got {capacity}"
        )));
    }
    if horizon < 1 {
        return Err(Error::input("horizon must be at least 1"));
    }
    Ok(capped_simplex_diameter(capacity, n_files)? * w_max * (horizon as f64).sqrt())
}

/// BSA regret bound `w_max sqrt(2 deg J C T)`.
pub fn bsa_upper_bound(
    degree: usize,
    n_caches: usize,
    capacity: f64,
    horizon: u64,
    w_max: f64,
) -> Result<f64> {
    check_positive("w_max", w_max)?;
    if degree < 1 || n_caches < 1 || capacity < 1.0 || horizon < 1 {
        return Err(Error::input(
            "degree, caches, capacity and horizon must be at least 1",
        ));
    }
    Ok(w_max * (2.0 * degree as f64 * n_caches as f64 * capacity * horizon as f64).sqrt())
}

/// Lower bound for uniform weights, `w sqrt(gamma / pi) sqrt(C T)`.
pub fn lb_uniform(w: f64, gamma: f64, capacity: f64, horizon: u64) -> Result<f64> {
    check_positive("w", w)?;
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::input(format!(
            "gamma = C/N must lie in (0, 1/2), got {gamma}"
        )));
    }
    check_positive("capacity", capacity)?;
    Ok(w * (gamma / std::f64::consts::PI).sqrt() * (capacity * horizon as f64).sqrt())
}

/// Lower-bound coefficient from a pairing of `2C` files.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingBound {
    /// Coefficient of `sqrt(T)`.
    pub coefficient: f64,
    /// Files paired, as index pairs into the weight vector.
    pub pairs: Vec<(usize, usize)>,
    /// True when the pairing was found by exhaustive enumeration.
    pub exact: bool,
}

/// `max over pairings sum_k sqrt(w_a + w_b) / sqrt(2 pi sum_n 1/w^n)`.
///
/// Exhaustive for `N <= 10`. Larger catalogs pair the `2C` largest weights
/// largest-with-smallest; every pairing gives a valid lower bound.
pub fn lb_pairing(weights: &[f64], capacity: usize) -> Result<PairingBound> {
    check_pairing_input(weights, capacity)?;
    let n = weights.len();
    let scale = pairing_scale(weights);
    let (total, pairs, exact) = if n <= PAIRING_EXACT_MAX_FILES {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        enumerate_pairings(
            weights,
            capacity,
            &mut vec![false; n],
            &mut Vec::new(),
            0.0,
            &mut best,
        );
        (best.0, best.1, true)
    } else {
        let pairs = heuristic_pairs(weights, capacity);
        let total = pairs
            .iter()
            .map(|&(a, b)| (weights[a] + weights[b]).sqrt())
            .sum();
        (total, pairs, false)
    };
    Ok(PairingBound {
        coefficient: total / scale,
        pairs,
        exact,
    })
}

/// The pairing bound from largest-with-smallest pairing of the `2C` largest
/// weights, at any catalog size.
pub fn lb_pairing_heuristic(weights: &[f64], capacity: usize) -> Result<PairingBound> {
    check_pairing_input(weights, capacity)?;
    let pairs = heuristic_pairs(weights, capacity);
    let total: f64 = pairs
        .iter()
        .map(|&(a, b)| (weights[a] + weights[b]).sqrt())
        .sum();
    Ok(PairingBound {
        coefficient: total / pairing_scale(weights),
        pairs,
        exact: false,
    })
}

fn check_pairing_input(weights: &[f64], capacity: usize) -> Result<()> {
    let n = weights.len();
    for &w in weights {
        check_positive("weight", w)?;
    }
    if capacity < 1 || 2 * capacity >= n {
        return Err(Error::input(format!(
            "pairing bound needs 1 <= C < N/2, got C={capacity}, N={n}"
        )));
    }
    Ok(())
}

fn pairing_scale(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().map(|w| 1.0 / w).sum();
    (2.0 * std::f64::consts::PI * s).sqrt()
}

fn heuristic_pairs(weights: &[f64], capacity: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let top = &order[..2 * capacity];
    (0..capacity)
        .map(|k| (top[k], top[2 * capacity - 1 - k]))
        .collect()
}

fn enumerate_pairings(
    w: &[f64],
    remaining: usize,
    used: &mut Vec<bool>,
    pairs: &mut Vec<(usize, usize)>,
    acc: f64,
    best: &mut (f64, Vec<(usize, usize)>),
) {
    if remaining == 0 {
        if acc > best.0 {
            *best = (acc, pairs.clone());
        }
        return;
    }
    // the lowest unused index either opens a pair or is skipped for good
    let start = pairs.last().map_or(0, |p| p.0 + 1);
    for a in start..w.len() {
        if used[a] {
            continue;
        }
        used[a] = true;
        for b in a + 1..w.len() {
            if used[b] {
                continue;
            }
            used[b] = true;
            pairs.push((a, b));
            enumerate_pairings(
                w,
                remaining - 1,
                used,
                pairs,
                acc + (w[a] + w[b]).sqrt(),
                best,
            );
            pairs.pop();
            used[b] = false;
        }
        used[a] = false;
    }
}

/// Limit law of the centered, weighted request counts when file `n` is
/// requested with probability `(1/w^n) / S`, `S = sum_n 1/w^n`.
#[derive(Clone, Debug)]
pub struct GaussianRequestModel {
    weights: Vec<f64>,
    s: f64,
}

impl GaussianRequestModel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::input("model needs at least 2 files"));
        }
        for &w in &weights {
            check_positive("weight", w)?;
        }
        let s = weights.iter().map(|w| 1.0 / w).sum();
        Ok(GaussianRequestModel { weights, s })
    }

    pub fn uniform(n_files: usize) -> Result<Self> {
        Self::new(vec![1.0; n_files])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `S = sum_n 1/w^n`.
    pub fn inverse_weight_sum(&self) -> f64 {
        self.s
    }

    /// Request probability of each file.
    pub fn request_probabilities(&self) -> Vec<f64> {
        self.weights.iter().map(|w| 1.0 / (w * self.s)).collect()
    }

    /// `Sigma_ii = (w_i - 1/S)/S`, `Sigma_ij = -1/S^2`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.weights.len();
        let s = self.s;
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (self.weights[i] - 1.0 / s) / s
            } else {
                -1.0 / (s * s)
            }
        })
    }

    /// `A` with `A A^T = Sigma`, from the eigendecomposition with eigenvalues
    /// below [`EIGEN_ZERO_TOL`] set to zero.
    pub fn factor(&self) -> Result<DMatrix<f64>> {
        let eig = SymmetricEigen::new(self.covariance());
        let scale = eig.eigenvalues.amax().max(1.0);
        let mut roots = DVector::zeros(eig.eigenvalues.len());
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if !l.is_finite() {
                return Err(Error::Numeric("covariance eigenvalue is not finite".into()));
            }
            if l < -1e-9 * scale {
                return Err(Error::Numeric(format!(
                    "covariance has negative eigenvalue {l}"
                )));
            }
            roots[k] = if l < EIGEN_ZERO_TOL { 0.0 } else { l.sqrt() };
        }
        Ok(eig.eigenvectors * DMatrix::from_diagonal(&roots))
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Per-sample order statistics, largest first, for `samples` draws of
/// `N(0, Sigma)`. Batches use seeds derived from `seed`, so the result does
/// not depend on the thread count.
fn sorted_samples(
    model: &GaussianRequestModel,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if samples < MIN_SAMPLES {
        return Err(Error::input(format!(
            "at least {MIN_SAMPLES} samples required, got {samples}"
        )));
    }
    let a = model.factor()?;
    let n = model.weights.len();
    let batches = samples.div_ceil(BATCH);
    let out: Vec<Vec<Vec<f64>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeded(derive_seed(seed, b as u64));
            let count = BATCH.min(samples - b * BATCH);
            (0..count)
                .map(|_| {
                    let xi = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                    let mut z: Vec<f64> = (&a * xi).iter().copied().collect();
                    z.sort_by(|x, y| y.total_cmp(x));
                    z
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// `E[sum of the C largest coordinates of Z]`, `Z ~ N(0, Sigma(w))`: the
/// coefficient of `sqrt(T)` in the regret lower bound.
pub fn lb_monte_carlo(
    model: &GaussianRequestModel,
    capacity: usize,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let n = model.weights.len();
    if capacity < 1 || capacity > n {
        return Err(Error::input(format!(
            "capacity must lie in 1..={n}, got {capacity}"
        )));
    }
    let sums: Vec<f64> = sorted_samples(model, samples, seed)?
        .iter()
        .map(|z| z[..capacity].iter().sum())
        .collect();
    Ok(mean_and_error(&sums))
}

/// Mean of every order statistic `E[Z_(k)]`, `k = 1..N`, from the same draws
/// as [`lb_monte_carlo`] with the same seed.
pub fn order_statistic_means(
    model: &GaussianRequestModel,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let draws = sorted_samples(model, samples, seed)?;
    let n = model.weights.len();
    let mut means = vec![0.0; n];
    for z in &draws {
        for (m, v) in means.iter_mut().zip(z) {
            *m += v;
        }
    }
    Ok(means.into_iter().map(|m| m / draws.len() as f64).collect())
}

fn mean_and_error(xs: &[f64]) -> McEstimate {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    McEstimate {
        estimate: mean,
        std_error: (var / m).sqrt(),
    }
}
