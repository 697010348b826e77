use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{
    resolve, ExperimentConfig, HindsightMethod, Mode, PolicyKind, PolicySpec, StepKind, TraceSource,
};
use crate::bipartite::{
    bsa_horizon_step, hindsight_best_static_network, hindsight_network_lp, slot_value,
    BipartiteNetwork, BsaState, LazyQLru, MultiLru,
};
use crate::error::{Error, Result};
use crate::model::Catalog;
use crate::policies::{
    hindsight_best_static, IncrementalOga, LfuState, LruState, SingleCachePolicy, StepSchedule,
};
use crate::rng::derive_seed;
use crate::traces::{
    assign_uniform_locations, gen_periodic_adversarial, gen_random_replacement, gen_snm,
    gen_zipf_iid, load_trace, SnmParams, Trace,
};

const TRACE_STREAM: u64 = 0;
const LOCATION_STREAM: u64 = 1;
const POLICY_STREAM_BASE: u64 = 100;

/// Cumulative utility of one policy after every slot.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyRun {
    pub label: String,
    pub cum_utility: Vec<f64>,
}

impl PolicyRun {
    pub fn total(&self) -> f64 {
        self.cum_utility.last().copied().unwrap_or(0.0)
    }
}

/// Final state of a policy, for diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PolicyState {
    /// Fractional configuration `y`.
    Oga { label: String, y: Vec<f64> },
    /// Cached files, most recent first.
    Lru { label: String, contents: Vec<usize> },
    /// Cached files, most frequent first.
    Lfu { label: String, contents: Vec<usize> },
    /// Placement per cache.
    Bsa {
        label: String,
        columns: Vec<Vec<f64>>,
    },
    /// Cached files per cache, most recent first.
    Mlru {
        label: String,
        contents: Vec<Vec<usize>>,
    },
    LazyQlru {
        label: String,
        contents: Vec<Vec<usize>>,
    },
}

impl PolicyState {
    pub fn label(&self) -> &str {
        match self {
            PolicyState::Oga { label, .. }
            | PolicyState::Lru { label, .. }
            | PolicyState::Lfu { label, .. }
            | PolicyState::Bsa { label, .. }
            | PolicyState::Mlru { label, .. }
            | PolicyState::LazyQlru { label, .. } => label,
        }
    }
}

/// Final policy states of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub config_hash: String,
    pub seed: u64,
    pub policies: Vec<PolicyState>,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub trace: Trace,
    /// Cumulative utility of the best static configuration in hindsight.
    pub hindsight_cum: Vec<f64>,
    pub runs: Vec<PolicyRun>,
    pub states: Vec<PolicyState>,
}

impl RunOutput {
    pub fn horizon(&self) -> u64 {
        self.hindsight_cum.len() as u64
    }

    pub fn hindsight_total(&self) -> f64 {
        self.hindsight_cum.last().copied().unwrap_or(0.0)
    }

    pub fn run(&self, label: &str) -> Option<&PolicyRun> {
        self.runs.iter().find(|r| r.label == label)
    }

    /// Cumulative regret of `run` after every slot.
    pub fn regret_series(&self, run: &PolicyRun) -> Vec<f64> {
        self.hindsight_cum
            .iter()
            .zip(&run.cum_utility)
            .map(|(h, u)| h - u)
            .collect()
    }

    pub fn state(&self) -> RunState {
        RunState {
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
            policies: self.states.clone(),
        }
    }
}

/// Builds the trace described by `config`, resolving relative paths
/// against `base`.
pub fn build_trace(config: &ExperimentConfig, base: Option<&Path>) -> Result<Trace> {
    let seed = derive_seed(config.seed, TRACE_STREAM);
    let need_horizon = || {
        config
            .horizon
            .ok_or_else(|| Error::config("generated traces need `horizon`"))
    };
    let trace = match &config.trace {
        TraceSource::Zipf { n, exponent } => gen_zipf_iid(*n, need_horizon()?, *exponent, seed)?,
        TraceSource::Uniform { n } => gen_zipf_iid(*n, need_horizon()?, 0.0, seed)?,
        TraceSource::Periodic { capacity, n } => {
            let c = match capacity {
                Some(c) => *c,
                None => config
                    .capacity
                    .map(|c| c.floor() as usize)
                    .ok_or_else(|| Error::config("periodic trace needs a capacity"))?,
            };
            gen_periodic_adversarial(c, need_horizon()?, n.unwrap_or(c + 1))?
        }
        TraceSource::Snm {
            n,
            shot_rate,
            duration,
            volume,
            background,
        } => {
            let mut params = SnmParams::with_rate(*shot_rate);
            if let Some(d) = duration {
                params.duration = *d;
            }
            if let Some(v) = volume {
                params.volume = *v;
            }
            if let Some(b) = background {
                params.background = (*b > 0.0).then_some(*b);
            }
            gen_snm(*n, need_horizon()?, &params, seed)?
        }
        TraceSource::Replacement { n, exponent, churn } => {
            gen_random_replacement(*n, need_horizon()?, *exponent, *churn, seed)?
        }
        TraceSource::File { path } => {
            let trace = load_trace(resolve(base, path))?;
            if let Some(t) = config.horizon {
                if t != trace.horizon() {
                    return Err(Error::config(format!(
                        "config horizon {t} but trace has {} slots",
                        trace.horizon()
                    )));
                }
            }
            trace
        }
    };
    if trace.is_empty() {
        return Err(Error::config("trace is empty"));
    }
    Ok(trace)
}

/// Runs every policy of `config` on one trace.
///
/// Policies run concurrently, each with its own state and RNG stream; the
/// results keep the configuration's policy order.
pub fn run_experiment(config: &ExperimentConfig, base: Option<&Path>) -> Result<RunOutput> {
    config.validate()?;
    let trace = build_trace(config, base)?;
    match config.mode {
        Mode::Single => run_single(config, trace),
        Mode::Bipartite => {
            let net = config.network.as_ref().expect("validated").load(base)?;
            run_bipartite(config, trace, &net)
        }
    }
}

fn finish(
    config: &ExperimentConfig,
    trace: Trace,
    hindsight_slot: Vec<f64>,
    results: Vec<(PolicyRun, PolicyState)>,
) -> RunOutput {
    let (runs, states) = results.into_iter().unzip();
    RunOutput {
        config: config.clone(),
        config_hash: config.hash(),
        trace,
        hindsight_cum: cumulative(hindsight_slot.into_iter()),
        runs,
        states,
    }
}

fn cumulative(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

fn run_single(config: &ExperimentConfig, trace: Trace) -> Result<RunOutput> {
    if trace.n_locations().is_some() {
        return Err(Error::config(
            "trace has request locations; single mode needs an unlocated trace",
        ));
    }
    let capacity = config.capacity.expect("validated");
    let catalog = match &config.weights {
        Some(w) => {
            if w.len() != trace.catalog_size() {
                return Err(Error::config(format!(
                    "{} weights for a catalog of {} files",
                    w.len(),
                    trace.catalog_size()
                )));
            }
            Catalog::with_weights(w.clone())?
        }
        None => Catalog::uniform(trace.catalog_size())?,
    };
    if capacity > catalog.n_files() as f64 {
        return Err(Error::config(format!(
            "capacity {capacity} exceeds catalog of {} files",
            catalog.n_files()
        )));
    }
    let (best, _) = hindsight_best_static(&trace, &catalog, capacity)?;
    let hindsight: Vec<f64> = trace
        .files()
        .map(|f| catalog.weight(f) * best.get(f))
        .collect();
    let horizon = trace.horizon();

    let results = config
        .policies
        .par_iter()
        .map(|spec| {
            let label = spec.label();
            let mut policy = single_policy(spec, &catalog, capacity, horizon)?;
            let mut utils = Vec::with_capacity(trace.len());
            for f in trace.files() {
                utils.push(policy.serve(f, &catalog)?);
            }
            let state = match &policy {
                SingleCachePolicy::Oga(o) => PolicyState::Oga {
                    label: label.clone(),
                    y: o.fractions(),
                },
                SingleCachePolicy::Lru(l) => PolicyState::Lru {
                    label: label.clone(),
                    contents: l.contents(),
                },
                SingleCachePolicy::Lfu(l) => PolicyState::Lfu {
                    label: label.clone(),
                    contents: l.contents(),
                },
            };
            Ok((
                PolicyRun {
                    label,
                    cum_utility: cumulative(utils.into_iter()),
                },
                state,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(config, trace, hindsight, results))
}

fn single_policy(
    spec: &PolicySpec,
    catalog: &Catalog,
    capacity: f64,
    horizon: u64,
) -> Result<SingleCachePolicy> {
    Ok(match spec.kind {
        PolicyKind::Oga => {
            let schedule = match (spec.step, spec.eta) {
                (Some(StepKind::Diminishing), _) => StepSchedule::Diminishing,
                (Some(StepKind::HorizonOptimal), _) => StepSchedule::HorizonOptimal { horizon },
                (_, Some(eta)) => StepSchedule::Fixed { eta },
                (_, None) => StepSchedule::HorizonOptimal { horizon },
            };
            SingleCachePolicy::Oga(Box::new(IncrementalOga::new(catalog, capacity, schedule)?))
        }
        PolicyKind::Lru => SingleCachePolicy::Lru(LruState::new(capacity)?),
        PolicyKind::Lfu => SingleCachePolicy::Lfu(LfuState::new(capacity)?),
        _ => unreachable!("validated against mode"),
    })
}

enum NetworkPolicy {
    Bsa(BsaState),
    Mlru(MultiLru),
    LazyQlru(LazyQLru),
}

fn run_bipartite(
    config: &ExperimentConfig,
    trace: Trace,
    net: &BipartiteNetwork,
) -> Result<RunOutput> {
    if trace.catalog_size() > net.n_files() {
        return Err(Error::config(format!(
            "trace uses {} files but the network has {}",
            trace.catalog_size(),
            net.n_files()
        )));
    }
    let trace = match trace.n_locations() {
        None => assign_uniform_locations(
            &trace,
            net.n_locations(),
            derive_seed(config.seed, LOCATION_STREAM),
        )?,
        Some(i) if i == net.n_locations() => trace,
        Some(i) => {
            return Err(Error::config(format!(
                "trace has {i} locations but the network has {}",
                net.n_locations()
            )))
        }
    };
    let (best, _) = match config.hindsight {
        HindsightMethod::Lp => hindsight_network_lp(&trace, net)?,
        HindsightMethod::Ascent => hindsight_best_static_network(&trace, net, config.epochs)?,
    };
    let hindsight = trace
        .requests()
        .iter()
        .map(|r| slot_value(&best, r, net))
        .collect::<Result<Vec<_>>>()?;
    let horizon = trace.horizon();

    let results = config
        .policies
        .par_iter()
        .enumerate()
        .map(|(k, spec)| {
            let label = spec.label();
            let seed = derive_seed(config.seed, POLICY_STREAM_BASE + k as u64);
            let mut policy = match spec.kind {
                PolicyKind::Bsa => {
                    let eta = match spec.eta {
                        Some(eta) => eta,
                        None => bsa_horizon_step(net, horizon)?,
                    };
                    NetworkPolicy::Bsa(BsaState::new(net, eta)?)
                }
                PolicyKind::Mlru => NetworkPolicy::Mlru(MultiLru::new(net, seed)?),
                PolicyKind::LazyQlru => {
                    NetworkPolicy::LazyQlru(LazyQLru::new(net, spec.q.unwrap_or(1.0), seed)?)
                }
                _ => unreachable!("validated against mode"),
            };
            let mut utils = Vec::with_capacity(trace.len());
            for r in trace.requests() {
                utils.push(match &mut policy {
                    NetworkPolicy::Bsa(p) => p.serve(r, net)?,
                    NetworkPolicy::Mlru(p) => p.serve(r, net)?,
                    NetworkPolicy::LazyQlru(p) => p.serve(r, net)?,
                });
            }
            let state = match policy {
                NetworkPolicy::Bsa(p) => PolicyState::Bsa {
                    label: label.clone(),
                    columns: p.y().columns().to_vec(),
                },
                NetworkPolicy::Mlru(p) => PolicyState::Mlru {
                    label: label.clone(),
                    contents: p.contents(),
                },
                NetworkPolicy::LazyQlru(p) => PolicyState::LazyQlru {
                    label: label.clone(),
                    contents: p.contents(),
                },
            };
            Ok((
                PolicyRun {
                    label,
                    cum_utility: cumulative(utils.into_iter()),
                },
                state,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(config, trace, hindsight, results))
}
