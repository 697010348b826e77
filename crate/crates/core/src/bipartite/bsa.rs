//! Bipartite Supergradient Ascent.

use serde::{Deserialize, Serialize};

use super::network::{network_diameter, BipartiteNetwork, NetworkCacheVector};
use super::routing::{route_at, supergradient_at};
use crate::error::{Error, Result};
use crate::model::Request;
use crate::projection::project_capped_simplex;

/// `diam / (w_max sqrt(deg T))`, with `diam^2 = sum_j 2 min(C_j, N - C_j)`
/// (`2CJ` for uniform capacities `C <= N/2`).
pub fn bsa_horizon_step(net: &BipartiteNetwork, horizon: u64) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::input("horizon must be at least 1"));
    }
    let w = net.max_weight();
    let deg = net.max_degree();
    if w <= 0.0 || deg == 0 {
        return Err(Error::input(
            "network has no reachable cache with positive weight",
        ));
    }
    Ok(network_diameter(net) / (w * ((deg as u64 * horizon) as f64).sqrt()))
}

/// One BSA update: `y + eta g`, each cache column projected onto its own
/// capped simplex. Only columns with a nonzero supergradient move.
pub fn bsa_step(
    y: &NetworkCacheVector,
    request: &Request,
    net: &BipartiteNetwork,
    eta: f64,
) -> Result<NetworkCacheVector> {
    let i = net.check_request(request.file, request.location)?;
    let mut next = y.clone();
    ascend(&mut next, request.file, i, net, eta)?;
    Ok(next)
}

fn ascend(
    y: &mut NetworkCacheVector,
    file: usize,
    location: usize,
    net: &BipartiteNetwork,
    eta: f64,
) -> Result<()> {
    let g = supergradient_at(y, file, location, net);
    for (j, &gj) in g.per_cache.iter().enumerate() {
        if gj > 0.0 {
            let col = y.column_mut(j);
            col[file] += eta * gj;
            *col = project_capped_simplex(col, net.capacity(j))?.into_fractions();
        }
    }
    Ok(())
}

/// A running BSA policy with a constant step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsaState {
    y: NetworkCacheVector,
    eta: f64,
}

impl BsaState {
    /// Starts from `y^{n,j} = C_j / N`.
    pub fn new(net: &BipartiteNetwork, eta: f64) -> Result<Self> {
        Self::from_config(NetworkCacheVector::uniform(net), net, eta)
    }

    pub fn from_config(y: NetworkCacheVector, net: &BipartiteNetwork, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::input(format!(
                "step size must be non-negative, got {eta}"
            )));
        }
        if y.n_caches() != net.n_caches() || !y.is_feasible(net) {
            return Err(Error::input("initial placement does not fit the network"));
        }
        Ok(BsaState { y, eta })
    }

    pub fn y(&self) -> &NetworkCacheVector {
        &self.y
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Routed utility of the current placement, then the update.
    pub fn serve(&mut self, request: &Request, net: &BipartiteNetwork) -> Result<f64> {
        let i = net.check_request(request.file, request.location)?;
        let value = route_at(&self.y, request.file, i, net).value;
        ascend(&mut self.y, request.file, i, net, self.eta)?;
        Ok(value)
    }
}
