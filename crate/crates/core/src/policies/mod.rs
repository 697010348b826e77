//! Single-cache policies: OGA, LRU, LFU, and the best static configuration
//! in hindsight used as the regret benchmark.

mod hindsight;
mod lfu;
mod lru;
mod oga;

pub use hindsight::{best_static_for_counts, hindsight_best_static};
pub use lfu::{lfu_step, LfuState};
pub use lru::{lru_step, LruState};
pub use oga::{
    capped_simplex_diameter, horizon_optimal_step, oga_step, IncrementalOga, OgaState, StepSchedule,
};

use crate::error::Result;
use crate::model::Catalog;

/// A running single-cache policy.
#[derive(Clone, Debug)]
pub enum SingleCachePolicy {
    Oga(Box<IncrementalOga>),
    Lru(LruState),
    Lfu(LfuState),
}

impl SingleCachePolicy {
    /// Utility accrued on `file` by the current configuration, followed by the
    /// policy's update. Integral policies earn `w^n` on a hit and 0 otherwise.
    pub fn serve(&mut self, file: usize, catalog: &Catalog) -> Result<f64> {
        match self {
            SingleCachePolicy::Oga(oga) => oga.serve(file),
            SingleCachePolicy::Lru(lru) => Ok(hit_utility(lru.access(file), file, catalog)),
            SingleCachePolicy::Lfu(lfu) => Ok(hit_utility(lfu.access(file), file, catalog)),
        }
    }
}

fn hit_utility(hit: bool, file: usize, catalog: &Catalog) -> f64 {
    if hit {
        catalog.weight(file)
    } else {
        0.0
    }
}
