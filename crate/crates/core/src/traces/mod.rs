//! Request traces: generators for the stationary, non-stationary and
//! adversarial request models, and the CSV trace format.

mod generators;
mod io;

pub use generators::{
    assign_uniform_locations, gen_periodic_adversarial, gen_random_replacement, gen_snm,
    gen_snm_from_shots, gen_zipf_iid, Shot, ShotDist, SnmParams,
};
pub use io::{load_trace, read_trace, save_trace, write_trace};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Request;

/// Where a trace came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Generator name, or `external` for ingested files.
    pub generator: String,
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
    /// External id of each dense file index, when ids were densified on load.
    pub file_ids: Vec<String>,
    /// External id of each dense location index, when densified on load.
    pub location_ids: Vec<String>,
}

impl Provenance {
    pub fn generated(name: &str, seed: Option<u64>) -> Self {
        Provenance {
            generator: name.to_string(),
            seed,
            ..Default::default()
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// A finite request sequence with one request per slot `0..T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    requests: Vec<Request>,
    catalog_size: usize,
    n_locations: Option<usize>,
    provenance: Provenance,
}

impl Trace {
    /// Checks that slots run `0..T`, file ids are below `catalog_size`, and
    /// every request carries a location below `n_locations` iff one is given.
    pub fn new(
        requests: Vec<Request>,
        catalog_size: usize,
        n_locations: Option<usize>,
        provenance: Provenance,
    ) -> Result<Self> {
        for (t, r) in requests.iter().enumerate() {
            if r.slot != t as u64 {
                return Err(Error::input(format!(
                    "request {t} has slot {}, slots must run 0..T",
                    r.slot
                )));
            }
            if r.file >= catalog_size {
                return Err(Error::input(format!(
                    "slot {t}: file {} outside catalog of {catalog_size}",
                    r.file
                )));
            }
            match (r.location, n_locations) {
                (None, None) => {}
                (Some(i), Some(n)) if i < n => {}
                (Some(i), Some(n)) => {
                    return Err(Error::input(format!(
                        "slot {t}: location {i} outside {n} locations"
                    )))
                }
                (Some(_), None) => {
                    return Err(Error::input(format!(
                        "slot {t}: location given in a single-cache trace"
                    )))
                }
                (None, Some(_)) => return Err(Error::input(format!("slot {t}: missing location"))),
            }
        }
        Ok(Trace {
            requests,
            catalog_size,
            n_locations,
            provenance,
        })
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Horizon `T`.
    pub fn horizon(&self) -> u64 {
        self.requests.len() as u64
    }

    pub fn catalog_size(&self) -> usize {
        self.catalog_size
    }

    pub fn n_locations(&self) -> Option<usize> {
        self.n_locations
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn files(&self) -> impl Iterator<Item = usize> + '_ {
        self.requests.iter().map(|r| r.file)
    }

    /// Requests per file.
    pub fn file_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.catalog_size];
        for r in &self.requests {
            counts[r.file] += 1;
        }
        counts
    }
}
