use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_capacity, FEAS_TOL};

/// A bipartite caching network: `I` user locations, `J` caches, and an
/// implicit origin server reachable from every location at zero utility.
///
/// The utility of serving file `n` at location `i` from cache `j` is
/// `m^n * w_ij`, or an explicit per-file tensor entry when one is given.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteNetwork {
    n_files: usize,
    capacities: Vec<f64>,
    connectivity: Vec<Vec<bool>>,
    base_weights: Vec<Vec<f64>>,
    file_multipliers: Option<Vec<f64>>,
    /// Dense `N x I x J` weights, row-major.
    dense_weights: Option<Vec<f64>>,
    /// Reachable caches per location.
    reachable: Vec<Vec<usize>>,
}

/// The network document, as stored in TOML.
///
/// ```toml
/// files = 100
/// capacities = [10, 10, 10]
/// cache_weights = [1, 2, 100]     # same row for every location
/// connectivity = [[1, 1, 1], [1, 1, 1], [1, 1, 1], [1, 1, 1]]
/// # weights = [[...], ...]        # I x J, instead of cache_weights
/// # file_multipliers = [...]      # N entries
/// # file_weights = [[[...]]]      # N x I x J, overrides the above
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub files: usize,
    pub capacities: Vec<f64>,
    pub connectivity: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_multipliers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_weights: Option<Vec<Vec<Vec<f64>>>>,
}

impl BipartiteNetwork {
    /// Network with `I x J` connectivity and base weights.
    pub fn new(
        n_files: usize,
        capacities: Vec<f64>,
        connectivity: Vec<Vec<bool>>,
        base_weights: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n_files < 2 {
            return Err(Error::input(format!(
                "catalog must hold at least 2 files, got {n_files}"
            )));
        }
        let j = capacities.len();
        if j == 0 {
            return Err(Error::input("network needs at least one cache"));
        }
        for &c in &capacities {
            check_capacity(c)?;
            if c > n_files as f64 {
                return Err(Error::input(format!(
                    "cache capacity {c} exceeds catalog size {n_files}"
                )));
            }
        }
        let i = connectivity.len();
        if i == 0 {
            return Err(Error::input("network needs at least one location"));
        }
        if connectivity.iter().any(|row| row.len() != j) {
            return Err(Error::input(format!("connectivity must be {i} x {j}")));
        }
        if base_weights.len() != i || base_weights.iter().any(|row| row.len() != j) {
            return Err(Error::input(format!("weights must be {i} x {j}")));
        }
        if base_weights
            .iter()
            .flatten()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::input("weights must be finite and non-negative"));
        }
        let reachable = connectivity
            .iter()
            .map(|row| (0..j).filter(|&c| row[c]).collect())
            .collect();
        Ok(BipartiteNetwork {
            n_files,
            capacities,
            connectivity,
            base_weights,
            file_multipliers: None,
            dense_weights: None,
            reachable,
        })
    }

    /// Every location reaches every cache, with per-cache weights.
    pub fn complete(
        n_files: usize,
        capacities: Vec<f64>,
        cache_weights: Vec<f64>,
        n_locations: usize,
    ) -> Result<Self> {
        let j = capacities.len();
        if cache_weights.len() != j {
            return Err(Error::input("one weight per cache required"));
        }
        Self::new(
            n_files,
            capacities,
            vec![vec![true; j]; n_locations],
            vec![cache_weights; n_locations],
        )
    }

    /// Scales every weight of file `n` by `multipliers[n]`.
    pub fn with_file_multipliers(mut self, multipliers: Vec<f64>) -> Result<Self> {
        if multipliers.len() != self.n_files {
            return Err(Error::input(format!(
                "expected {} file multipliers, got {}",
                self.n_files,
                multipliers.len()
            )));
        }
        if multipliers.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::input(
                "file multipliers must be finite and non-negative",
            ));
        }
        self.file_multipliers = Some(multipliers);
        Ok(self)
    }

    /// Replaces the weights by an explicit `N x I x J` tensor.
    pub fn with_file_weights(mut self, tensor: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let (n, i, j) = (self.n_files, self.n_locations(), self.n_caches());
        if tensor.len() != n
            || tensor
                .iter()
                .any(|m| m.len() != i || m.iter().any(|row| row.len() != j))
        {
            return Err(Error::input(format!(
                "file weights must be {n} x {i} x {j}"
            )));
        }
        let flat: Vec<f64> = tensor.into_iter().flatten().flatten().collect();
        if flat.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::input("weights must be finite and non-negative"));
        }
        self.dense_weights = Some(flat);
        Ok(self)
    }

    pub fn from_spec(spec: NetworkSpec) -> Result<Self> {
        let i = spec.connectivity.len();
        let connectivity = spec
            .connectivity
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        v => Err(Error::input(format!(
                            "connectivity entries must be 0 or 1, got {v}"
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let base = match (spec.weights, spec.cache_weights) {
            (Some(w), None) => w,
            (None, Some(row)) => vec![row; i],
            (None, None) if spec.file_weights.is_some() => {
                vec![vec![0.0; spec.capacities.len()]; i]
            }
            (None, None) => {
                return Err(Error::config("network needs `weights` or `cache_weights`"))
            }
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "give only one of `weights` and `cache_weights`",
                ))
            }
        };
        let mut net = Self::new(spec.files, spec.capacities, connectivity, base)?;
        if let Some(m) = spec.file_multipliers {
            net = net.with_file_multipliers(m)?;
        }
        if let Some(t) = spec.file_weights {
            net = net.with_file_weights(t)?;
        }
        Ok(net)
    }

    pub fn to_spec(&self) -> NetworkSpec {
        let (i, j) = (self.n_locations(), self.n_caches());
        NetworkSpec {
            files: self.n_files,
            capacities: self.capacities.clone(),
            connectivity: self
                .connectivity
                .iter()
                .map(|row| row.iter().map(|&b| b as u8).collect())
                .collect(),
            cache_weights: None,
            weights: Some(self.base_weights.clone()),
            file_multipliers: self.file_multipliers.clone(),
            file_weights: self.dense_weights.as_ref().map(|flat| {
                flat.chunks(i * j)
                    .map(|m| m.chunks(j).map(<[f64]>::to_vec).collect())
                    .collect()
            }),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: NetworkSpec =
            toml::from_str(text).map_err(|e| Error::config(format!("network document: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: NetworkSpec = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        Self::from_spec(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_spec()).expect("network spec serializes")
    }

    pub fn n_files(&self) -> usize {
        self.n_files
    }

    pub fn n_locations(&self) -> usize {
        self.connectivity.len()
    }

    pub fn n_caches(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn capacity(&self, cache: usize) -> f64 {
        self.capacities[cache]
    }

    pub fn is_reachable(&self, location: usize, cache: usize) -> bool {
        self.connectivity[location][cache]
    }

    /// Caches reachable from `location`, in index order.
    pub fn reachable(&self, location: usize) -> &[usize] {
        &self.reachable[location]
    }

    /// Maximum number of caches reachable from one location.
    pub fn max_degree(&self) -> usize {
        self.reachable.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `w^{n,i,j}`.
    pub fn weight(&self, file: usize, location: usize, cache: usize) -> f64 {
        if let Some(dense) = &self.dense_weights {
            let (i, j) = (self.n_locations(), self.n_caches());
            return dense[(file * i + location) * j + cache];
        }
        let base = self.base_weights[location][cache];
        match &self.file_multipliers {
            Some(m) => m[file] * base,
            None => base,
        }
    }

    /// Largest weight over reachable (file, location, cache) triples.
    pub fn max_weight(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n_locations() {
            for &j in self.reachable(i) {
                match (&self.dense_weights, &self.file_multipliers) {
                    (None, None) => best = best.max(self.base_weights[i][j]),
                    _ => {
                        for n in 0..self.n_files {
                            best = best.max(self.weight(n, i, j));
                        }
                    }
                }
            }
        }
        best
    }

    /// True when every cache has the same capacity.
    pub fn uniform_capacity(&self) -> Option<f64> {
        let c = self.capacities[0];
        self.capacities.iter().all(|&x| x == c).then_some(c)
    }

    pub(crate) fn check_request(&self, file: usize, location: Option<usize>) -> Result<usize> {
        if file >= self.n_files {
            return Err(Error::input(format!(
                "file {file} outside catalog of {}",
                self.n_files
            )));
        }
        let i = location.ok_or_else(|| Error::input("network request needs a location"))?;
        if i >= self.n_locations() {
            return Err(Error::input(format!(
                "location {i} outside {} locations",
                self.n_locations()
            )));
        }
        Ok(i)
    }
}

/// Fractional placement `y^{n,j}` of every file in every cache, stored per cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkCacheVector {
    columns: Vec<Vec<f64>>,
}

impl NetworkCacheVector {
    /// `y^{n,j} = C_j / N` (capped at 1) for every file and cache.
    pub fn uniform(net: &BipartiteNetwork) -> Self {
        let n = net.n_files();
        let columns = net
            .capacities()
            .iter()
            .map(|&c| vec![(c / n as f64).min(1.0); n])
            .collect();
        NetworkCacheVector { columns }
    }

    pub fn zeros(net: &BipartiteNetwork) -> Self {
        NetworkCacheVector {
            columns: vec![vec![0.0; net.n_files()]; net.n_caches()],
        }
    }

    /// Builds from per-cache columns, checking shape and feasibility.
    pub fn from_columns(columns: Vec<Vec<f64>>, net: &BipartiteNetwork) -> Result<Self> {
        if columns.len() != net.n_caches() || columns.iter().any(|c| c.len() != net.n_files()) {
            return Err(Error::input(format!(
                "placement must be {} columns of {} files",
                net.n_caches(),
                net.n_files()
            )));
        }
        let y = NetworkCacheVector { columns };
        if !y.is_feasible(net) {
            return Err(Error::input("placement is infeasible"));
        }
        Ok(y)
    }

    pub(crate) fn from_columns_unchecked(columns: Vec<Vec<f64>>) -> Self {
        NetworkCacheVector { columns }
    }

    pub fn get(&self, file: usize, cache: usize) -> f64 {
        self.columns[cache][file]
    }

    pub(crate) fn set(&mut self, file: usize, cache: usize, value: f64) {
        self.columns[cache][file] = value;
    }

    /// Placement in cache `j`, one entry per file.
    pub fn column(&self, cache: usize) -> &[f64] {
        &self.columns[cache]
    }

    pub(crate) fn column_mut(&mut self, cache: usize) -> &mut Vec<f64> {
        &mut self.columns[cache]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn n_caches(&self) -> usize {
        self.columns.len()
    }

    pub fn is_feasible(&self, net: &BipartiteNetwork) -> bool {
        self.columns.iter().zip(net.capacities()).all(|(col, &c)| {
            col.iter()
                .all(|&v| (-FEAS_TOL..=1.0 + FEAS_TOL).contains(&v))
                && col.iter().sum::<f64>() <= c + FEAS_TOL
        })
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &NetworkCacheVector) -> f64 {
        self.columns
            .iter()
            .zip(&other.columns)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)))
            .sum::<f64>()
            .sqrt()
    }
}

/// `sqrt(sum_j 2 min(C_j, N - C_j))`; equals `sqrt(2CJ)` for uniform `C <= N/2`.
pub fn network_diameter(net: &BipartiteNetwork) -> f64 {
    let n = net.n_files() as f64;
    net.capacities()
        .iter()
        .map(|&c| 2.0 * c.min(n - c))
        .sum::<f64>()
        .sqrt()
}
