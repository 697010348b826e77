//! Domain types shared by every policy: the file catalog, requests, fractional
//! cache configurations, the per-slot utility and regret accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the capacity inequality `sum(y) <= C` and on the box
/// constraints, since projections are computed in floating point.
pub const FEAS_TOL: f64 = 1e-9;

/// The file catalog: `N` unit-size files, each with a hit utility `w^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    weights: Vec<f64>,
}

impl Catalog {
    /// Catalog of `n_files` files with unit weight (hit-ratio maximization).
    pub fn uniform(n_files: usize) -> Result<Self> {
        Self::with_weights(vec![1.0; n_files])
    }

    pub fn with_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::input(format!(
                "catalog needs at least 2 files, got {}",
                weights.len()
            )));
        }
        if let Some((n, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::input(format!(
                "file {n} has non-positive weight {w}"
            )));
        }
        Ok(Catalog { weights })
    }

    pub fn n_files(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, file: usize) -> f64 {
        self.weights[file]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w^(1)`, the largest file weight.
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn check_file(&self, file: usize) -> Result<()> {
        if file >= self.n_files() {
            return Err(Error::input(format!(
                "file {file} outside catalog of {} files",
                self.n_files()
            )));
        }
        Ok(())
    }
}

/// One request event: file `file` asked for in slot `slot`, optionally from a
/// user location (bipartite networks only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Request {
    pub slot: u64,
    pub file: usize,
    pub location: Option<usize>,
}

impl Request {
    pub fn new(slot: u64, file: usize) -> Self {
        Request {
            slot,
            file,
            location: None,
        }
    }

    pub fn at(slot: u64, file: usize, location: usize) -> Self {
        Request {
            slot,
            file,
            location: Some(location),
        }
    }
}

/// A fractional cache configuration `y` in the capped simplex
/// `{ y in [0,1]^N : sum(y) <= C }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheVector {
    fractions: Vec<f64>,
    capacity: f64,
}

impl CacheVector {
    /// Validates box and capacity constraints (within [`FEAS_TOL`]).
    pub fn new(fractions: Vec<f64>, capacity: f64) -> Result<Self> {
        check_capacity(capacity)?;
        for (n, &y) in fractions.iter().enumerate() {
            if !y.is_finite() || !(-FEAS_TOL..=1.0 + FEAS_TOL).contains(&y) {
                return Err(Error::input(format!("y[{n}] = {y} outside [0,1]")));
            }
        }
        let total: f64 = fractions.iter().sum();
        if total > capacity + FEAS_TOL {
            return Err(Error::input(format!(
                "cached mass {total} exceeds capacity {capacity}"
            )));
        }
        Ok(CacheVector {
            fractions,
            capacity,
        })
    }

    /// The symmetric configuration `(C/N, ..., C/N)`, capped at 1.
    pub fn uniform(n_files: usize, capacity: f64) -> Result<Self> {
        check_capacity(capacity)?;
        if n_files == 0 {
            return Err(Error::input("empty cache vector"));
        }
        let y = (capacity / n_files as f64).min(1.0);
        Ok(CacheVector {
            fractions: vec![y; n_files],
            capacity,
        })
    }

    pub(crate) fn from_raw(fractions: Vec<f64>, capacity: f64) -> Self {
        CacheVector {
            fractions,
            capacity,
        }
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn into_fractions(self) -> Vec<f64> {
        self.fractions
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    pub fn get(&self, file: usize) -> f64 {
        self.fractions[file]
    }

    pub fn total(&self) -> f64 {
        self.fractions.iter().sum()
    }

    pub fn is_feasible(&self) -> bool {
        self.fractions
            .iter()
            .all(|&y| (-FEAS_TOL..=1.0 + FEAS_TOL).contains(&y))
            && self.total() <= self.capacity + FEAS_TOL
    }
}

pub(crate) fn check_capacity(capacity: f64) -> Result<()> {
    if !(capacity.is_finite() && capacity > 0.0) {
        return Err(Error::input(format!(
            "capacity must be positive, got {capacity}"
        )));
    }
    Ok(())
}

/// `f(x_t, y_t) = sum_n w^n x_t^n y_t^n`, which for a one-hot request reduces
/// to `w^n y^n` at the requested file.
pub fn slot_utility(request: &Request, y: &CacheVector, catalog: &Catalog) -> Result<f64> {
    catalog.check_file(request.file)?;
    if y.len() != catalog.n_files() {
        return Err(Error::input(format!(
            "cache vector has {} entries, catalog has {} files",
            y.len(),
            catalog.n_files()
        )));
    }
    Ok(catalog.weight(request.file) * y.get(request.file))
}

/// Per-slot utilities of a policy and of the hindsight benchmark.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    policy_utils: Vec<f64>,
    hindsight_utils: Vec<f64>,
    cum_regret: Vec<f64>,
    cum_policy: Vec<f64>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(slots: usize) -> Self {
        RegretLedger {
            policy_utils: Vec::with_capacity(slots),
            hindsight_utils: Vec::with_capacity(slots),
            cum_regret: Vec::with_capacity(slots),
            cum_policy: Vec::with_capacity(slots),
        }
    }

    pub fn record(&mut self, policy_util: f64, hindsight_util: f64) -> Result<()> {
        if !(policy_util >= 0.0 && hindsight_util >= 0.0) {
            return Err(Error::input(format!(
                "utilities must be non-negative, got policy {policy_util}, hindsight {hindsight_util}"
            )));
        }
        let prev_regret = self.cum_regret.last().copied().unwrap_or(0.0);
        let prev_policy = self.cum_policy.last().copied().unwrap_or(0.0);
        self.policy_utils.push(policy_util);
        self.hindsight_utils.push(hindsight_util);
        self.cum_regret
            .push(prev_regret + (hindsight_util - policy_util));
        self.cum_policy.push(prev_policy + policy_util);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.policy_utils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policy_utils.is_empty()
    }

    pub fn policy_utils(&self) -> &[f64] {
        &self.policy_utils
    }

    pub fn hindsight_utils(&self) -> &[f64] {
        &self.hindsight_utils
    }

    /// `R_t` for every prefix `t = 1..=len`.
    pub fn regret_series(&self) -> &[f64] {
        &self.cum_regret
    }

    /// Cumulative policy utility for every prefix.
    pub fn utility_series(&self) -> &[f64] {
        &self.cum_policy
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }

    pub fn total_policy_utility(&self) -> f64 {
        self.cum_policy.last().copied().unwrap_or(0.0)
    }

    pub fn total_hindsight_utility(&self) -> f64 {
        self.hindsight_utils.iter().sum()
    }
}

/// Value-returning form of [`RegretLedger::record`].
pub fn ledger_record(
    mut ledger: RegretLedger,
    policy_util: f64,
    hindsight_util: f64,
) -> Result<RegretLedger> {
    ledger.record(policy_util, hindsight_util)?;
    Ok(ledger)
}
