use std::io::Write;

use super::run::{PolicyState, RunOutput, RunState};
use crate::bounds::{
    bsa_upper_bound, lb_monte_carlo, lb_pairing, oga_upper_bound, prop1_bound, GaussianRequestModel,
};
use crate::error::{Error, Result};

/// Library version written into every results file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Results header row.
pub const RESULTS_HEADER: &str = "slot,policy,cum_utility,avg_utility,cum_regret";

/// Writes the per-slot results: provenance comments, then one row per
/// (policy, slot) in configuration order, thinned to every
/// `record_every`-th slot plus the last.
pub fn write_results(out: &RunOutput, w: &mut impl Write) -> std::io::Result<()> {
    let prov = out.trace.provenance();
    writeln!(w, "# olcache {VERSION}")?;
    writeln!(w, "# config_sha256: {}", out.config_hash)?;
    writeln!(w, "# seed: {}", out.config.seed)?;
    write!(
        w,
        "# trace: {}",
        if prov.generator.is_empty() {
            "file"
        } else {
            &prov.generator
        }
    )?;
    for (k, v) in &prov.params {
        write!(w, " {k}={v}")?;
    }
    writeln!(w)?;
    writeln!(w, "# horizon: {}", out.horizon())?;
    writeln!(w, "# hindsight_utility: {}", out.hindsight_total())?;
    writeln!(w, "{RESULTS_HEADER}")?;
    let every = out.config.record_every.max(1);
    let horizon = out.horizon();
    for run in &out.runs {
        for (k, (&u, &h)) in run.cum_utility.iter().zip(&out.hindsight_cum).enumerate() {
            let slot = k as u64 + 1;
            if !slot.is_multiple_of(every) && slot != horizon {
                continue;
            }
            writeln!(w, "{slot},{},{u},{},{}", run.label, u / slot as f64, h - u)?;
        }
    }
    Ok(())
}

/// One-line summary per policy.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicySummary {
    pub label: String,
    pub utility: f64,
    pub avg_utility: f64,
    pub regret: f64,
}

pub fn summarize(out: &RunOutput) -> Vec<PolicySummary> {
    let t = out.horizon() as f64;
    out.runs
        .iter()
        .map(|r| PolicySummary {
            label: r.label.clone(),
            utility: r.total(),
            avg_utility: r.total() / t,
            regret: out.hindsight_total() - r.total(),
        })
        .collect()
}

/// Inputs of the bounds table.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsQuery {
    pub n_files: usize,
    pub capacity: usize,
    pub horizon: u64,
    /// Per-file weights; `None` means all equal to `w`.
    pub weights: Option<Vec<f64>>,
    pub w: f64,
    /// Network shape for the BSA bound.
    pub degree: usize,
    pub n_caches: usize,
    pub samples: usize,
    pub seed: u64,
}

impl BoundsQuery {
    pub fn uniform(n_files: usize, capacity: usize, horizon: u64) -> Self {
        BoundsQuery {
            n_files,
            capacity,
            horizon,
            weights: None,
            w: 1.0,
            degree: 1,
            n_caches: 1,
            samples: 100_000,
            seed: 0,
        }
    }
}

/// One row of the bounds table. Lower bounds carry the coefficient of
/// `sqrt(T)`; rows that do not apply carry a note instead of values.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub name: &'static str,
    pub coefficient: Option<f64>,
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub note: String,
}

impl BoundRow {
    fn value(name: &'static str, value: f64) -> Self {
        BoundRow {
            name,
            coefficient: None,
            value: Some(value),
            std_error: None,
            note: String::new(),
        }
    }

    fn lower(name: &'static str, coefficient: f64, horizon: u64) -> Self {
        BoundRow {
            name,
            coefficient: Some(coefficient),
            value: Some(coefficient * (horizon as f64).sqrt()),
            std_error: None,
            note: String::new(),
        }
    }

    fn na(name: &'static str, note: &str) -> Self {
        BoundRow {
            name,
            coefficient: None,
            value: None,
            std_error: None,
            note: note.to_string(),
        }
    }
}

/// Catalogs above this size skip the Monte Carlo row (dense eigendecomposition).
pub const MONTE_CARLO_MAX_FILES: usize = 2000;

pub fn bounds_table(q: &BoundsQuery) -> Result<Vec<BoundRow>> {
    let n = q.n_files;
    let weights = match &q.weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::input(format!("{} weights for {n} files", w.len())));
            }
            w.clone()
        }
        None => vec![q.w; n],
    };
    let uniform = weights.iter().all(|&x| x == weights[0]);
    let w_max = weights.iter().copied().fold(0.0, f64::max);
    let c = q.capacity as f64;
    let mut rows = vec![
        BoundRow::value(
            "prop1_lru_lfu_regret",
            prop1_bound(w_max, q.capacity as u64, q.horizon)?,
        ),
        BoundRow::value("oga_upper", oga_upper_bound(c, n, q.horizon, w_max)?),
        BoundRow::value(
            "bsa_upper",
            bsa_upper_bound(q.degree, q.n_caches, c, q.horizon, w_max)?,
        ),
    ];
    const NEEDS_HALF: &str = "n/a (C<N/2 required)";
    if 2 * q.capacity >= n {
        for name in ["lb_uniform", "lb_pairing", "lb_monte_carlo"] {
            rows.push(BoundRow::na(name, NEEDS_HALF));
        }
        return Ok(rows);
    }
    if uniform {
        let gamma = c / n as f64;
        let coef = weights[0] * (gamma / std::f64::consts::PI).sqrt() * c.sqrt();
        rows.push(BoundRow::lower("lb_uniform", coef, q.horizon));
    } else {
        rows.push(BoundRow::na("lb_uniform", "n/a (heterogeneous weights)"));
    }
    let pairing = lb_pairing(&weights, q.capacity)?;
    let mut row = BoundRow::lower("lb_pairing", pairing.coefficient, q.horizon);
    row.note = if pairing.exact {
        "exact pairing"
    } else {
        "heuristic pairing"
    }
    .into();
    rows.push(row);
    if n > MONTE_CARLO_MAX_FILES {
        rows.push(BoundRow::na(
            "lb_monte_carlo",
            &format!("n/a (N>{MONTE_CARLO_MAX_FILES})"),
        ));
    } else {
        let model = GaussianRequestModel::new(weights)?;
        let e = lb_monte_carlo(&model, q.capacity, q.samples, q.seed)?;
        let mut row = BoundRow::lower("lb_monte_carlo", e.estimate, q.horizon);
        row.std_error = Some(e.std_error);
        row.note = format!("{} samples", q.samples);
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_bounds(rows: &[BoundRow], w: &mut impl Write) -> std::io::Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(w, "bound,coefficient,value,std_error,note")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.name,
            opt(r.coefficient),
            opt(r.value),
            opt(r.std_error),
            r.note
        )?;
    }
    Ok(())
}

/// One LRU-cached file with its OGA fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct InspectRow {
    /// Position in the LRU list, 0 = most recent.
    pub rank: usize,
    pub file: usize,
    pub oga_fraction: f64,
}

/// Joins the final LRU contents with the final OGA configuration.
/// `lru`/`oga` pick policies by label; the first of each kind otherwise.
pub fn inspect(state: &RunState, lru: Option<&str>, oga: Option<&str>) -> Result<Vec<InspectRow>> {
    let pick = |want: Option<&str>, is_kind: fn(&PolicyState) -> bool, kind: &str| {
        state
            .policies
            .iter()
            .find(|p| is_kind(p) && want.is_none_or(|l| p.label() == l))
            .ok_or_else(|| {
                Error::input(format!(
                    "run state has no {kind} policy{}",
                    match want {
                        Some(l) => format!(" labelled `{l}`"),
                        None => String::new(),
                    }
                ))
            })
    };
    let lru = pick(lru, |p| matches!(p, PolicyState::Lru { .. }), "LRU")?;
    let oga = pick(oga, |p| matches!(p, PolicyState::Oga { .. }), "OGA")?;
    let (PolicyState::Lru { contents, .. }, PolicyState::Oga { y, .. }) = (lru, oga) else {
        unreachable!("picked by kind")
    };
    contents
        .iter()
        .enumerate()
        .map(|(rank, &file)| {
            let v = y.get(file).copied().ok_or_else(|| {
                Error::input(format!("file {file} outside the OGA configuration"))
            })?;
            Ok(InspectRow {
                rank,
                file,
                oga_fraction: v,
            })
        })
        .collect()
}

pub fn write_inspect(rows: &[InspectRow], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "lru_rank,file,oga_y")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.rank, r.file, r.oga_fraction)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{
        run_experiment, ExperimentConfig, PolicyKind, PolicySpec, TraceSource,
    };

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bounds_table_uniform() {
        let mut q = BoundsQuery::uniform(100, 30, 10_000);
        q.samples = 2000;
        let rows = bounds_table(&q).unwrap();
        let get = |name: &str| rows.iter().find(|r| r.name == name).unwrap().clone();
        assert!(close(get("oga_upper").value.unwrap(), 774.5967, 1e-3));
        let lbu = get("lb_uniform");
        assert!(close(
            lbu.coefficient.unwrap(),
            (0.3f64 / std::f64::consts::PI).sqrt() * 30f64.sqrt(),
            1e-12
        ));
        assert!(close(
            get("lb_pairing").coefficient.unwrap(),
            lbu.coefficient.unwrap(),
            1e-12
        ));
        assert!(get("lb_monte_carlo").std_error.is_some());
    }

    #[test]
    fn bounds_table_large_capacity_and_heterogeneous() {
        let rows = bounds_table(&BoundsQuery::uniform(10, 5, 100)).unwrap();
        for r in &rows[3..] {
            assert_eq!(r.note, "n/a (C<N/2 required)");
            assert!(r.value.is_none());
        }
        let mut q = BoundsQuery::uniform(6, 2, 100);
        q.weights = Some(vec![1.0, 2.0, 3.0, 1.0, 1.0, 5.0]);
        q.samples = 1000;
        let rows = bounds_table(&q).unwrap();
        let lbu = rows.iter().find(|r| r.name == "lb_uniform").unwrap();
        assert!(lbu.value.is_none());
        let mut buf = Vec::new();
        write_bounds(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            rows.len() + 1
        );
    }

    #[test]
    fn results_and_inspect() {
        let cfg = ExperimentConfig::single(
            TraceSource::Zipf {
                n: 50,
                exponent: 0.8,
            },
            5.0,
            Some(500),
            1,
        )
        .with_policy(PolicySpec::new(PolicyKind::Oga))
        .with_policy(PolicySpec::new(PolicyKind::Lru));
        let mut cfg = cfg;
        cfg.record_every = 100;
        let out = run_experiment(&cfg, None).unwrap();
        let mut buf = Vec::new();
        write_results(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(&format!("# config_sha256: {}", cfg.hash())));
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], RESULTS_HEADER);
        assert_eq!(rows.len(), 1 + 2 * 5);
        assert!(rows[1].starts_with("100,oga,"));

        let state = out.state();
        let json = serde_json::to_string(&state).unwrap();
        let back: RunState = serde_json::from_str(&json).unwrap();
        let rows = inspect(&back, None, None).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.oga_fraction)));
        let no_lru = RunState {
            policies: vec![state.policies[0].clone()],
            ..state
        };
        assert!(matches!(inspect(&no_lru, None, None), Err(Error::Input(_))));
    }
}
