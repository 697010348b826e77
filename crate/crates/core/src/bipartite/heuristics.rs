//! Integral LRU-style baselines for cache networks.
//!
//! Both keep one LRU list per cache and serve a request from the reachable
//! cache with the largest weight that holds the file, refreshing it there.
//! They differ on a miss at every reachable cache:
//!
//! * mLRU inserts the file into one reachable cache chosen uniformly at random;
//! * lazy q-LRU lets each reachable cache insert it independently with
//!   probability `q`. Caches never insert a file some reachable cache
//!   already serves.

use rand::Rng;

use super::network::BipartiteNetwork;
use crate::error::{Error, Result};
use crate::model::Request;
use crate::policies::LruState;
use crate::rng::{seeded, Rng64};

#[derive(Clone, Debug)]
struct LruBank {
    caches: Vec<LruState>,
    rng: Rng64,
}

impl LruBank {
    fn new(net: &BipartiteNetwork, seed: u64) -> Result<Self> {
        let caches = net
            .capacities()
            .iter()
            .map(|&c| LruState::new(c))
            .collect::<Result<_>>()?;
        Ok(LruBank {
            caches,
            rng: seeded(seed),
        })
    }

    /// Serves from the best reachable hit; `None` on a miss everywhere.
    fn serve_hit(&mut self, file: usize, location: usize, net: &BipartiteNetwork) -> Option<f64> {
        let mut best: Option<(usize, f64)> = None;
        for &j in net.reachable(location) {
            if self.caches[j].contains(file) {
                let w = net.weight(file, location, j);
                if best.is_none_or(|(_, bw)| w > bw) {
                    best = Some((j, w));
                }
            }
        }
        let (j, w) = best?;
        self.caches[j].touch(file);
        Some(w)
    }

    fn contents(&self) -> Vec<Vec<usize>> {
        self.caches.iter().map(LruState::contents).collect()
    }
}

/// Multi-cache LRU.
#[derive(Clone, Debug)]
pub struct MultiLru {
    bank: LruBank,
}

impl MultiLru {
    /// Per-cache capacities are floored to whole files.
    pub fn new(net: &BipartiteNetwork, seed: u64) -> Result<Self> {
        Ok(MultiLru {
            bank: LruBank::new(net, seed)?,
        })
    }

    /// Utility of serving `request`, then the cache update.
    pub fn serve(&mut self, request: &Request, net: &BipartiteNetwork) -> Result<f64> {
        let i = net.check_request(request.file, request.location)?;
        if let Some(w) = self.bank.serve_hit(request.file, i, net) {
            return Ok(w);
        }
        let reach = net.reachable(i);
        if !reach.is_empty() {
            let j = reach[self.bank.rng.random_range(0..reach.len())];
            self.bank.caches[j].access(request.file);
        }
        Ok(0.0)
    }

    /// Cached files per cache, most recent first.
    pub fn contents(&self) -> Vec<Vec<usize>> {
        self.bank.contents()
    }
}

/// q-LRU with the lazy insertion rule.
#[derive(Clone, Debug)]
pub struct LazyQLru {
    bank: LruBank,
    q: f64,
}

impl LazyQLru {
    pub fn new(net: &BipartiteNetwork, q: f64, seed: u64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::input(format!("q must lie in (0, 1], got {q}")));
        }
        Ok(LazyQLru {
            bank: LruBank::new(net, seed)?,
            q,
        })
    }

    pub fn serve(&mut self, request: &Request, net: &BipartiteNetwork) -> Result<f64> {
        let i = net.check_request(request.file, request.location)?;
        if let Some(w) = self.bank.serve_hit(request.file, i, net) {
            return Ok(w);
        }
        for &j in net.reachable(i) {
            if self.q >= 1.0 || self.bank.rng.random_bool(self.q) {
                self.bank.caches[j].access(request.file);
            }
        }
        Ok(0.0)
    }

    pub fn contents(&self) -> Vec<Vec<usize>> {
        self.bank.contents()
    }
}
