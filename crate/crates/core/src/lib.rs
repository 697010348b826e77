//! No-regret online caching.
//!
//! Online gradient ascent over the capped simplex for a single cache, its
//! bipartite extension for networks of caches, classical LRU/LFU baselines,
//! request generators, and closed-form and Monte Carlo regret bounds.

pub mod bipartite;
pub mod bounds;
pub mod error;
pub mod experiment;
pub mod model;
pub mod policies;
pub mod projection;
pub mod rng;
pub mod traces;

pub use error::{Error, Result};
pub use model::{slot_utility, CacheVector, Catalog, RegretLedger, Request};
pub use projection::project_capped_simplex;
pub use traces::Trace;
