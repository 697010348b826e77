use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::Request;
use crate::policies::lru::integral_capacity;

/// Least-frequently-used cache.
///
/// File `n`, first requested at slot `tau^n`, has frequency
/// `h^n_t = nu^n / (t - tau^n)` where `nu^n` counts its requests before `t`.
/// The cache holds the `floor(C)` files of highest frequency (ties: lower file
/// index first); files never requested are never cached.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LfuState {
    capacity: usize,
    /// Slots served so far, i.e. the current `t`.
    clock: u64,
    slot_of: Vec<Option<u32>>,
    files: Vec<usize>,
    counts: Vec<u64>,
    first_seen: Vec<u64>,
}

impl LfuState {
    pub fn new(capacity: f64) -> Result<Self> {
        Ok(LfuState {
            capacity: integral_capacity(capacity)?,
            ..Default::default()
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// `(nu^n, tau^n)` for a file seen at least once.
    pub fn counter(&self, file: usize) -> Option<(u64, u64)> {
        let k = (*self.slot_of.get(file)?)? as usize;
        Some((self.counts[k], self.first_seen[k]))
    }

    /// Would a request for `file` hit right now?
    pub fn is_cached(&self, file: usize) -> bool {
        let Some(me) = self.slot_of.get(file).copied().flatten() else {
            return false;
        };
        let me = me as usize;
        let mut above = 0;
        for k in 0..self.files.len() {
            if k != me && self.ranks_before(k, me) {
                above += 1;
                if above >= self.capacity {
                    return false;
                }
            }
        }
        true
    }

    /// Cached files, highest frequency first.
    pub fn contents(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = (0..self.files.len()).collect();
        ks.sort_by(|&a, &b| {
            if self.ranks_before(a, b) {
                Ordering::Less
            } else if self.ranks_before(b, a) {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        });
        ks.truncate(self.capacity);
        ks.into_iter().map(|k| self.files[k]).collect()
    }

    /// Serves `file`: the hit is decided on the frequencies before this
    /// request is counted.
    pub fn access(&mut self, file: usize) -> bool {
        let hit = self.is_cached(file);
        if file >= self.slot_of.len() {
            self.slot_of.resize(file + 1, None);
        }
        match self.slot_of[file] {
            Some(k) => self.counts[k as usize] += 1,
            None => {
                self.slot_of[file] = Some(self.files.len() as u32);
                self.files.push(file);
                self.counts.push(1);
                self.first_seen.push(self.clock);
            }
        }
        self.clock += 1;
        hit
    }

    /// Exact comparison `h_a > h_b` (ties to lower file index) by
    /// cross-multiplying `nu_a (t - tau_b)` against `nu_b (t - tau_a)`.
    fn ranks_before(&self, a: usize, b: usize) -> bool {
        let t = self.clock;
        let lhs = self.counts[a] as u128 * (t - self.first_seen[b]) as u128;
        let rhs = self.counts[b] as u128 * (t - self.first_seen[a]) as u128;
        lhs > rhs || (lhs == rhs && self.files[a] < self.files[b])
    }
}

/// Value-returning form of [`LfuState::access`].
pub fn lfu_step(state: &LfuState, request: &Request) -> (LfuState, bool) {
    let mut next = state.clone();
    let hit = next.access(request.file);
    (next, hit)
}
