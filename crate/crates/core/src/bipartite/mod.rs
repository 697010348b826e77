//! Networks of caches: a bipartite graph from user locations to caches, with
//! the origin server behind every location. Requests are routed to the best
//! reachable copies, and BSA adapts the placement by supergradient ascent.

mod bsa;
mod heuristics;
mod hindsight;
mod lp;
mod network;
mod routing;

pub use bsa::{bsa_horizon_step, bsa_step, BsaState};
pub use heuristics::{LazyQLru, MultiLru};
pub use hindsight::{
    brute_force_best_integral, hindsight_best_static_network, DemandCounts, BRUTE_FORCE_MAX_CELLS,
    DEFAULT_EPOCHS,
};
pub use lp::hindsight_network_lp;
pub use network::{network_diameter, BipartiteNetwork, NetworkCacheVector, NetworkSpec};
pub use routing::{route, slot_value, supergradient, RoutingSolution, Supergradient};
