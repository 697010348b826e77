//! Online Gradient Ascent for a single cache.
//!
//! Each slot the configuration moves along the gradient of the slot utility
//! (`w^n` at the requested file, zero elsewhere) and is projected back onto
//! the capped simplex.

use std::collections::BTreeSet;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_capacity, CacheVector, Catalog, Request, FEAS_TOL};
use crate::projection::project_capped_simplex;

/// Step-size rule for OGA.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepSchedule {
    /// Constant step `eta`.
    Fixed { eta: f64 },
    /// Constant step `diam / (w_max sqrt(T))`, optimal for a known horizon.
    HorizonOptimal { horizon: u64 },
    /// `eta_t = diam / (w_max sqrt(t))`, for unknown horizons.
    Diminishing,
}

impl StepSchedule {
    /// Step used at 1-based slot `t`.
    pub fn eta(&self, t: u64, capacity: f64, n_files: usize, w_max: f64) -> Result<f64> {
        match *self {
            StepSchedule::Fixed { eta } => {
                if !(eta.is_finite() && eta >= 0.0) {
                    return Err(Error::input(format!(
                        "step size must be non-negative, got {eta}"
                    )));
                }
                Ok(eta)
            }
            StepSchedule::HorizonOptimal { horizon } => {
                horizon_optimal_step(capacity, n_files, horizon, w_max)
            }
            StepSchedule::Diminishing => horizon_optimal_step(capacity, n_files, t.max(1), w_max),
        }
    }

    fn is_constant(&self) -> bool {
        !matches!(self, StepSchedule::Diminishing)
    }
}

/// Diameter of the capped simplex: `sqrt(2C)` for `C <= N/2`, else `sqrt(2(N-C))`.
pub fn capped_simplex_diameter(capacity: f64, n_files: usize) -> Result<f64> {
    check_capacity(capacity)?;
    let n = n_files as f64;
    if capacity > n {
        return Err(Error::input(format!(
            "capacity {capacity} exceeds catalog size {n_files}"
        )));
    }
    Ok(if capacity <= n / 2.0 {
        (2.0 * capacity).sqrt()
    } else {
        (2.0 * (n - capacity)).sqrt()
    })
}

/// `diam(Y) / (w_max sqrt(T))`.
pub fn horizon_optimal_step(
    capacity: f64,
    n_files: usize,
    horizon: u64,
    w_max: f64,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::input("horizon must be at least 1"));
    }
    if !(w_max.is_finite() && w_max > 0.0) {
        return Err(Error::input(format!("w_max must be positive, got {w_max}")));
    }
    Ok(capped_simplex_diameter(capacity, n_files)? / (w_max * (horizon as f64).sqrt()))
}

/// Reference OGA state: the full configuration, projected with
/// [`project_capped_simplex`] after every step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OgaState {
    y: CacheVector,
    schedule: StepSchedule,
    /// Slots served so far.
    t: u64,
}

impl OgaState {
    /// Starts from the symmetric configuration `(C/N, ..., C/N)`.
    pub fn new(catalog: &Catalog, capacity: f64, schedule: StepSchedule) -> Result<Self> {
        let y = CacheVector::uniform(catalog.n_files(), capacity)?;
        Self::from_config(y, schedule, catalog)
    }

    pub fn from_config(y: CacheVector, schedule: StepSchedule, catalog: &Catalog) -> Result<Self> {
        if y.len() != catalog.n_files() {
            return Err(Error::input("cache vector and catalog sizes differ"));
        }
        if !y.is_feasible() {
            return Err(Error::input("initial configuration is infeasible"));
        }
        // surface schedule errors at construction
        schedule.eta(1, y.capacity(), catalog.n_files(), catalog.max_weight())?;
        Ok(OgaState { y, schedule, t: 0 })
    }

    pub fn y(&self) -> &CacheVector {
        &self.y
    }

    pub fn schedule(&self) -> StepSchedule {
        self.schedule
    }

    /// Utility of the current configuration for `request`, then the update.
    pub fn serve(&mut self, request: &Request, catalog: &Catalog) -> Result<f64> {
        catalog.check_file(request.file)?;
        let n = request.file;
        let utility = catalog.weight(n) * self.y.get(n);
        let eta = self.schedule.eta(
            self.t + 1,
            self.y.capacity(),
            catalog.n_files(),
            catalog.max_weight(),
        )?;
        let mut z = self.y.fractions().to_vec();
        z[n] += eta * catalog.weight(n);
        self.y = project_capped_simplex(&z, self.y.capacity())?;
        self.t += 1;
        Ok(utility)
    }
}

/// One OGA update, returning the next state.
pub fn oga_step(state: &OgaState, request: &Request, catalog: &Catalog) -> Result<OgaState> {
    let mut next = state.clone();
    next.serve(request, catalog)?;
    Ok(next)
}

/// OGA with an incremental projection, for large catalogs.
///
/// After a gradient step only the requested coordinate moves up, so the
/// projection lowers every other positive coordinate by a common amount
/// `rho/2` (clipping at zero) and possibly pins the requested one at 1. The
/// common decrease is kept as a global offset, and positive coordinates live
/// in an ordered set so the ones that reach zero are found from the bottom.
/// Amortized `O(log N)` per slot; same KKT solution as the reference path.
#[derive(Clone, Debug)]
pub struct IncrementalOga {
    weights: Vec<f64>,
    w_max: f64,
    capacity: f64,
    schedule: StepSchedule,
    constant_eta: Option<f64>,
    t: u64,
    offset: f64,
    /// `y^n = stored[n] - offset` while `n` is in `positive`.
    stored: Vec<f64>,
    in_set: Vec<bool>,
    positive: BTreeSet<(OrderedFloat<f64>, usize)>,
    mass: f64,
}

impl IncrementalOga {
    pub fn new(catalog: &Catalog, capacity: f64, schedule: StepSchedule) -> Result<Self> {
        let n = catalog.n_files();
        let y0 = CacheVector::uniform(n, capacity)?;
        let first_eta = schedule.eta(1, capacity, n, catalog.max_weight())?;
        let v = y0.get(0);
        let mut positive = BTreeSet::new();
        if v > 0.0 {
            positive.extend((0..n).map(|i| (OrderedFloat(v), i)));
        }
        Ok(IncrementalOga {
            weights: catalog.weights().to_vec(),
            w_max: catalog.max_weight(),
            capacity,
            schedule,
            constant_eta: schedule.is_constant().then_some(first_eta),
            t: 0,
            offset: 0.0,
            stored: vec![v; n],
            in_set: vec![v > 0.0; n],
            positive,
            mass: v * n as f64,
        })
    }

    pub fn n_files(&self) -> usize {
        self.weights.len()
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn get(&self, file: usize) -> f64 {
        if self.in_set[file] {
            (self.stored[file] - self.offset).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn fractions(&self) -> Vec<f64> {
        (0..self.n_files()).map(|n| self.get(n)).collect()
    }

    pub fn to_cache_vector(&self) -> CacheVector {
        CacheVector::from_raw(self.fractions(), self.capacity)
    }

    /// Utility of the current configuration for `file`, then the update.
    pub fn serve(&mut self, file: usize) -> Result<f64> {
        if file >= self.n_files() {
            return Err(Error::input(format!("file {file} outside catalog")));
        }
        let eta = match self.constant_eta {
            Some(eta) => eta,
            None => self
                .schedule
                .eta(self.t + 1, self.capacity, self.n_files(), self.w_max)?,
        };
        self.t += 1;
        let current = self.get(file);
        let utility = self.weights[file] * current;
        let gain = eta * self.weights[file];
        if gain <= 0.0 {
            return Ok(utility);
        }

        let raised = current + gain;
        let others = self.mass - current;
        if self.in_set[file] {
            self.positive
                .remove(&(OrderedFloat(self.stored[file]), file));
            self.in_set[file] = false;
        }

        if others + raised.min(1.0) <= self.capacity {
            // capacity slack: only the box constraint can bind
            let v = raised.min(1.0);
            self.insert(file, v);
            self.mass = others + v;
            return Ok(utility);
        }

        // M1 = {} first; pin the requested file at 1 if it would exceed it.
        let mut level = self.water_level(others + raised, self.capacity, Some(raised));
        let pinned = raised - level.drop > 1.0 + FEAS_TOL;
        if pinned {
            level = self.water_level(others, self.capacity - 1.0, None);
        }

        for _ in 0..level.removed {
            let (_, n) = self.positive.pop_first().expect("counted from the set");
            self.in_set[n] = false;
        }
        self.offset += level.drop;
        if pinned {
            self.insert(file, 1.0);
        } else if !level.extra_removed {
            self.insert(file, raised - level.drop);
        }
        self.mass = self.capacity;
        Ok(utility)
    }

    fn insert(&mut self, file: usize, value: f64) {
        let key = value + self.offset;
        self.stored[file] = key;
        self.in_set[file] = true;
        self.positive.insert((OrderedFloat(key), file));
    }

    /// Common decrease `d` with `sum max(0, v - d) = target` over the positive
    /// set plus the optional extra value, where `sum` is their current total.
    fn water_level(&self, mut sum: f64, target: f64, extra: Option<f64>) -> WaterLevel {
        let mut count = self.positive.len() + usize::from(extra.is_some());
        let mut extra = extra;
        let mut level = WaterLevel::default();
        let mut values = self
            .positive
            .iter()
            .map(|(k, _)| k.0 - self.offset)
            .peekable();
        while count > 0 {
            let drop = (sum - target) / count as f64;
            let (smallest, from_extra) = match (values.peek().copied(), extra) {
                (Some(a), Some(b)) if b < a => (b, true),
                (Some(a), _) => (a, false),
                (None, Some(b)) => (b, true),
                (None, None) => unreachable!("count tracks remaining values"),
            };
            if smallest >= drop {
                level.drop = drop;
                return level;
            }
            if from_extra {
                extra = None;
                level.extra_removed = true;
            } else {
                values.next();
                level.removed += 1;
            }
            sum -= smallest;
            count -= 1;
        }
        // everything reached zero; rho is taken as 0
        level
    }
}

#[derive(Debug, Default)]
struct WaterLevel {
    drop: f64,
    /// Smallest entries of the positive set that reach zero.
    removed: usize,
    extra_removed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_catalog(n: usize) -> Catalog {
        Catalog::uniform(n).unwrap()
    }

    #[test]
    fn step_projects_symmetrically() {
        let cat = unit_catalog(3);
        let y = CacheVector::new(vec![0.5, 0.5, 0.0], 1.0).unwrap();
        let s = OgaState::from_config(y, StepSchedule::Fixed { eta: 0.5 }, &cat).unwrap();
        let next = oga_step(&s, &Request::new(0, 2), &cat).unwrap();
        for v in next.y().fractions() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_update_is_plain_gradient_step() {
        let cat = Catalog::with_weights(vec![1.0, 2.0, 1.0, 1.0]).unwrap();
        let y = CacheVector::new(vec![0.0; 4], 2.0).unwrap();
        let s = OgaState::from_config(y, StepSchedule::Fixed { eta: 0.25 }, &cat).unwrap();
        let next = oga_step(&s, &Request::new(0, 1), &cat).unwrap();
        assert_eq!(next.y().fractions(), &[0.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn horizon_optimal_values() {
        let eta = horizon_optimal_step(1000.0, 10_000, 200_000, 1.0).unwrap();
        assert!((eta - 0.1).abs() < 1e-12);
        assert_eq!(horizon_optimal_step(10.0, 10, 100, 1.0).unwrap(), 0.0);
        let eta = horizon_optimal_step(3.0, 10, 10_000, 1.0).unwrap();
        assert!((eta - 6f64.sqrt() / 100.0).abs() < 1e-15);
        assert!((eta - 0.0244949).abs() < 1e-7);
        assert!(matches!(
            horizon_optimal_step(11.0, 10, 100, 1.0),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn horizon_schedule_for_reported_setting() {
        let cat = unit_catalog(10_000);
        let eta = StepSchedule::HorizonOptimal { horizon: 200_000 }
            .eta(1, 1000.0, cat.n_files(), 1.0)
            .unwrap();
        assert!((eta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn diminishing_schedule_decays() {
        let s = StepSchedule::Diminishing;
        let e1 = s.eta(1, 2.0, 10, 1.0).unwrap();
        let e4 = s.eta(4, 2.0, 10, 1.0).unwrap();
        assert!((e1 / e4 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn iterates_stay_feasible() {
        let cat = Catalog::with_weights((0..20).map(|i| 1.0 + (i % 3) as f64).collect()).unwrap();
        let mut s = OgaState::new(&cat, 5.0, StepSchedule::Fixed { eta: 0.7 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 0..500 {
            let f = rng.random_range(0..20);
            s.serve(&Request::new(t, f), &cat).unwrap();
            assert!(s.y().is_feasible());
        }
    }

    fn compare_engines(cat: &Catalog, capacity: f64, schedule: StepSchedule, files: &[usize]) {
        let mut reference = OgaState::new(cat, capacity, schedule).unwrap();
        let mut fast = IncrementalOga::new(cat, capacity, schedule).unwrap();
        for (t, &f) in files.iter().enumerate() {
            let u1 = reference.serve(&Request::new(t as u64, f), cat).unwrap();
            let u2 = fast.serve(f).unwrap();
            assert!((u1 - u2).abs() < 1e-9, "slot {t}: {u1} vs {u2}");
            let diff = reference
                .y()
                .fractions()
                .iter()
                .zip(fast.fractions())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-9, "slot {t}: max diff {diff}");
        }
        assert!(fast.to_cache_vector().is_feasible());
    }

    #[test]
    fn incremental_engine_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..40 {
            let n = rng.random_range(2..40);
            let cap = rng.random_range(0.5..(n as f64));
            let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
            let cat = Catalog::with_weights(weights).unwrap();
            let eta = rng.random_range(0.01..1.5);
            let files: Vec<usize> = (0..400)
                .map(|_| {
                    // skewed so some coordinates saturate at 1 and others hit 0
                    let u: f64 = rng.random();
                    ((u * u * u) * n as f64) as usize
                })
                .collect();
            let schedule = if case % 4 == 0 {
                StepSchedule::Diminishing
            } else {
                StepSchedule::Fixed { eta }
            };
            compare_engines(&cat, cap, schedule, &files);
        }
    }

    #[test]
    fn incremental_engine_handles_large_steps() {
        let cat = unit_catalog(6);
        let files = [0, 0, 1, 2, 0, 5, 5, 5, 3, 1, 0, 4];
        compare_engines(&cat, 2.0, StepSchedule::Fixed { eta: 5.0 }, &files);
        compare_engines(&cat, 1.0, StepSchedule::Fixed { eta: 0.9 }, &files);
        compare_engines(&cat, 5.5, StepSchedule::Fixed { eta: 0.3 }, &files);
    }
}
