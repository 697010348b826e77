use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Request;

/// Least-recently-used cache holding at most `floor(C)` whole files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LruState {
    capacity: usize,
    clock: u64,
    last_use: HashMap<usize, u64>,
    by_recency: BTreeMap<u64, usize>,
}

impl LruState {
    /// Fractional capacities are floored: LRU caches whole files.
    pub fn new(capacity: f64) -> Result<Self> {
        let slots = integral_capacity(capacity)?;
        Ok(LruState {
            capacity: slots,
            ..Default::default()
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contains(&self, file: usize) -> bool {
        self.last_use.contains_key(&file)
    }

    pub fn len(&self) -> usize {
        self.last_use.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last_use.is_empty()
    }

    /// Cached files, most recently used first.
    pub fn contents(&self) -> Vec<usize> {
        self.by_recency.values().rev().copied().collect()
    }

    /// Serves `file`: hit iff cached before the access; the file moves to the
    /// head and the tail is evicted on overflow.
    pub fn access(&mut self, file: usize) -> bool {
        self.clock += 1;
        let hit = match self.last_use.insert(file, self.clock) {
            Some(prev) => {
                self.by_recency.remove(&prev);
                true
            }
            None => false,
        };
        self.by_recency.insert(self.clock, file);
        if self.last_use.len() > self.capacity {
            let (_, victim) = self.by_recency.pop_first().expect("cache is non-empty");
            self.last_use.remove(&victim);
        }
        hit
    }

    /// Refreshes a cached file without counting a hit; false if absent.
    pub(crate) fn touch(&mut self, file: usize) -> bool {
        if !self.contains(file) {
            return false;
        }
        self.access(file);
        true
    }
}

pub(crate) fn integral_capacity(capacity: f64) -> Result<usize> {
    if !(capacity.is_finite() && capacity >= 1.0) {
        return Err(Error::input(format!(
            "integral policies need capacity >= 1, got {capacity}"
        )));
    }
    Ok(capacity.floor() as usize)
}

/// Value-returning form of [`LruState::access`].
pub fn lru_step(state: &LruState, request: &Request) -> (LruState, bool) {
    let mut next = state.clone();
    let hit = next.access(request.file);
    (next, hit)
}
