use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto, Uniform, Zipf};
use serde::{Deserialize, Serialize};

use super::{Provenance, Trace};
use crate::error::{Error, Result};
use crate::model::Request;
use crate::rng::{derive_seed, seeded, Rng64};

fn zipf(n: usize, exponent: f64) -> Result<Zipf<f64>> {
    Zipf::new(n as f64, exponent)
        .map_err(|e| Error::input(format!("zipf(n = {n}, s = {exponent}): {e}")))
}

/// Rank sampled from `zipf`, as a 0-based index.
fn draw_rank(dist: &Zipf<f64>, rng: &mut Rng64, n: usize) -> usize {
    (dist.sample(rng) as usize).clamp(1, n) - 1
}

fn check_size(n: usize, t: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::input(format!(
            "catalog needs at least 2 files, got {n}"
        )));
    }
    if t < 1 {
        return Err(Error::input("horizon must be at least 1"));
    }
    Ok(())
}

/// I.i.d. requests with `P(file n) ∝ (n+1)^-exponent`.
pub fn gen_zipf_iid(n: usize, t: u64, exponent: f64, seed: u64) -> Result<Trace> {
    check_size(n, t)?;
    let dist = zipf(n, exponent)?;
    let mut rng = seeded(seed);
    let requests = (0..t)
        .map(|slot| Request::new(slot, draw_rank(&dist, &mut rng, n)))
        .collect();
    let prov = Provenance::generated("zipf", Some(seed))
        .with_param("n", n)
        .with_param("t", t)
        .with_param("exponent", exponent);
    Trace::new(requests, n, None, prov)
}

/// The cyclic sequence `0, 1, ..., C, 0, 1, ...`: every request is for the
/// file used longest ago, which defeats LRU and LFU.
pub fn gen_periodic_adversarial(capacity: usize, t: u64, n: usize) -> Result<Trace> {
    if capacity < 1 {
        return Err(Error::input("periodic sequence needs capacity >= 1"));
    }
    if capacity + 1 > n {
        return Err(Error::input(format!(
            "periodic sequence of cycle {} needs at least that many files, got {n}",
            capacity + 1
        )));
    }
    check_size(n, t)?;
    let cycle = capacity as u64 + 1;
    let requests = (0..t)
        .map(|slot| Request::new(slot, (slot % cycle) as usize))
        .collect();
    let prov = Provenance::generated("periodic", None)
        .with_param("c", capacity)
        .with_param("n", n)
        .with_param("t", t);
    Trace::new(requests, n, None, prov)
}

type Sampler = Box<dyn Fn(&mut Rng64) -> f64>;

/// A positive-valued distribution for shot durations (slots) or volumes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShotDist {
    Constant { value: f64 },
    Pareto { scale: f64, shape: f64 },
    Uniform { low: f64, high: f64 },
    Exponential { mean: f64 },
}

impl ShotDist {
    /// Finite mean, or an input error.
    pub fn mean(&self) -> Result<f64> {
        let m = match *self {
            ShotDist::Constant { value } => value,
            ShotDist::Pareto { scale, shape } if shape > 1.0 => scale * shape / (shape - 1.0),
            ShotDist::Pareto { .. } => {
                return Err(Error::input("pareto shape must exceed 1 for a finite mean"))
            }
            ShotDist::Uniform { low, high } if low <= high => 0.5 * (low + high),
            ShotDist::Uniform { .. } => return Err(Error::input("uniform needs low <= high")),
            ShotDist::Exponential { mean } => mean,
        };
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::input(format!(
                "distribution {self:?} has no positive finite mean"
            )));
        }
        Ok(m)
    }

    fn sampler(&self) -> Result<Sampler> {
        self.mean()?;
        let bad = |e: &dyn std::fmt::Display| Error::input(format!("{self:?}: {e}"));
        Ok(match *self {
            ShotDist::Constant { value } => Box::new(move |_| value),
            ShotDist::Pareto { scale, shape } => {
                let d = Pareto::new(scale, shape).map_err(|e| bad(&e))?;
                Box::new(move |r| d.sample(r))
            }
            ShotDist::Uniform { low, high } => {
                if low == high {
                    Box::new(move |_| low)
                } else {
                    let d = Uniform::new(low, high).map_err(|e| bad(&e))?;
                    Box::new(move |r| d.sample(r))
                }
            }
            ShotDist::Exponential { mean } => {
                let d = Exp::new(1.0 / mean).map_err(|e| bad(&e))?;
                Box::new(move |r| d.sample(r))
            }
        })
    }
}

/// Parameters of the Poisson shot-noise request model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnmParams {
    /// Shot arrivals per slot.
    pub shot_rate: f64,
    pub duration: ShotDist,
    pub volume: ShotDist,
    /// Intensity of an always-active background file (id `N`); `None`
    /// disables it and slots without active shots become an error.
    pub background: Option<f64>,
}

impl SnmParams {
    /// Pareto(shape 2) durations and uniform volumes, with a background file
    /// at 1% of the mean shot intensity.
    pub fn with_rate(shot_rate: f64) -> Self {
        let duration = ShotDist::Pareto {
            scale: 500.0,
            shape: 2.0,
        };
        let volume = ShotDist::Uniform {
            low: 1.0,
            high: 10.0,
        };
        let mean_intensity = 5.5 / 1000.0;
        SnmParams {
            shot_rate,
            duration,
            volume,
            background: Some(0.01 * mean_intensity),
        }
    }
}

/// One content's finite-lifetime request pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shot {
    pub start: u64,
    /// Lifetime in slots, at least 1.
    pub duration: u64,
    pub volume: f64,
}

impl Shot {
    fn intensity(&self) -> f64 {
        self.volume / self.duration as f64
    }
}

/// Shot-noise trace with `n` contents whose shots arrive as a Poisson process.
pub fn gen_snm(n: usize, t: u64, params: &SnmParams, seed: u64) -> Result<Trace> {
    check_size(n, t)?;
    if !(params.shot_rate.is_finite() && params.shot_rate > 0.0) {
        return Err(Error::input("shot rate must be positive"));
    }
    let duration = params.duration.sampler()?;
    let volume = params.volume.sampler()?;
    let gap = Exp::new(params.shot_rate).map_err(|e| Error::input(e.to_string()))?;

    let mut rng = seeded(derive_seed(seed, 0));
    let mut clock = 0.0;
    let shots: Vec<Shot> = (0..n)
        .map(|_| {
            clock += gap.sample(&mut rng);
            Shot {
                start: clock.floor().min(u64::MAX as f64) as u64,
                duration: (duration(&mut rng).ceil() as u64).max(1),
                volume: volume(&mut rng),
            }
        })
        .collect();
    let mut trace = sample_shots(&shots, t, params.background, derive_seed(seed, 1))?;
    let prov = &mut trace.provenance;
    *prov = Provenance::generated("snm", Some(seed))
        .with_param("n", n)
        .with_param("t", t)
        .with_param("shot_rate", params.shot_rate)
        .with_param("duration", format!("{:?}", params.duration))
        .with_param("volume", format!("{:?}", params.volume))
        .with_param(
            "background",
            params
                .background
                .map_or("none".to_string(), |b| b.to_string()),
        );
    Ok(trace)
}

/// Shot-noise trace for explicitly given shots: each slot's request is drawn
/// with probability proportional to the active intensities `v/d`.
pub fn gen_snm_from_shots(
    shots: &[Shot],
    t: u64,
    background: Option<f64>,
    seed: u64,
) -> Result<Trace> {
    if shots.is_empty() || t < 1 {
        return Err(Error::input("need at least one shot and one slot"));
    }
    let mut trace = sample_shots(shots, t, background, seed)?;
    trace.provenance = Provenance::generated("snm_shots", Some(seed))
        .with_param("shots", shots.len())
        .with_param("t", t);
    Ok(trace)
}

fn sample_shots(shots: &[Shot], t: u64, background: Option<f64>, seed: u64) -> Result<Trace> {
    let n = shots.len();
    let bg = background.filter(|b| *b > 0.0);
    let catalog = if bg.is_some() { n + 1 } else { n };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| shots[i].start);

    let mut rng = seeded(seed);
    let mut next = 0;
    let mut active: Vec<(usize, f64, u64)> = Vec::new();
    let mut requests = Vec::with_capacity(t as usize);
    for slot in 0..t {
        while next < n && shots[order[next]].start <= slot {
            let s = &shots[order[next]];
            active.push((
                order[next],
                s.intensity(),
                s.start.saturating_add(s.duration),
            ));
            next += 1;
        }
        active.retain(|&(_, _, end)| end > slot);
        let total: f64 = active.iter().map(|a| a.1).sum::<f64>() + bg.unwrap_or(0.0);
        if total <= 0.0 {
            return Err(Error::Generation(format!(
                "no active content at slot {slot} and no background file"
            )));
        }
        let mut u = rng.random::<f64>() * total;
        let mut file = bg.map(|_| n);
        for &(f, w, _) in &active {
            if u < w {
                file = Some(f);
                break;
            }
            u -= w;
        }
        // rounding can leave u just above the last active weight
        let file = file.or(active.last().map(|a| a.0)).expect("total > 0");
        requests.push(Request::new(slot, file));
    }
    Trace::new(requests, catalog.max(2), None, Provenance::default())
}

/// Zipf requests over a popularity ladder of `n` ranks; each slot, with
/// probability `churn_prob`, a uniformly chosen rank is taken over by a brand
/// new file. The catalog grows from `n` files.
pub fn gen_random_replacement(
    n: usize,
    t: u64,
    popularity_exponent: f64,
    churn_prob: f64,
    seed: u64,
) -> Result<Trace> {
    check_size(n, t)?;
    if !(0.0..=1.0).contains(&churn_prob) {
        return Err(Error::input(format!(
            "churn probability {churn_prob} outside [0,1]"
        )));
    }
    let dist = zipf(n, popularity_exponent)?;
    let mut rng = seeded(seed);
    let mut ladder: Vec<usize> = (0..n).collect();
    let mut next_id = n;
    let mut requests = Vec::with_capacity(t as usize);
    for slot in 0..t {
        if rng.random_bool(churn_prob) {
            let rank = rng.random_range(0..n);
            ladder[rank] = next_id;
            next_id += 1;
        }
        let rank = draw_rank(&dist, &mut rng, n);
        requests.push(Request::new(slot, ladder[rank]));
    }
    let prov = Provenance::generated("replacement", Some(seed))
        .with_param("n", n)
        .with_param("t", t)
        .with_param("exponent", popularity_exponent)
        .with_param("churn", churn_prob);
    Trace::new(requests, next_id, None, prov)
}

/// Attaches a uniformly random user location to every request.
pub fn assign_uniform_locations(trace: &Trace, n_locations: usize, seed: u64) -> Result<Trace> {
    if n_locations == 0 {
        return Err(Error::input("need at least one location"));
    }
    let mut rng = seeded(seed);
    let requests = trace
        .requests()
        .iter()
        .map(|r| Request::at(r.slot, r.file, rng.random_range(0..n_locations)))
        .collect();
    let mut prov = trace.provenance().clone();
    prov.params
        .insert("locations".into(), n_locations.to_string());
    prov.params.insert("location_seed".into(), seed.to_string());
    Trace::new(requests, trace.catalog_size(), Some(n_locations), prov)
}
