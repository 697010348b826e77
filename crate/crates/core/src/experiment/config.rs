use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bipartite::{BipartiteNetwork, NetworkSpec};
use crate::error::{Error, Result};
use crate::traces::ShotDist;

/// Single cache or bipartite network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Single,
    Bipartite,
}

/// Where the request trace comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "generator")]
pub enum TraceSource {
    /// I.i.d. Zipf requests.
    Zipf { n: usize, exponent: f64 },
    /// I.i.d. uniform requests.
    Uniform { n: usize },
    /// Cyclic sequence over `capacity + 1` files; `capacity` defaults to the
    /// experiment's cache size and `n` to `capacity + 1`.
    Periodic {
        #[serde(default)]
        capacity: Option<usize>,
        #[serde(default)]
        n: Option<usize>,
    },
    /// Poisson shot-noise model.
    Snm {
        n: usize,
        shot_rate: f64,
        #[serde(default)]
        duration: Option<ShotDist>,
        #[serde(default)]
        volume: Option<ShotDist>,
        /// Background file intensity; absent keeps the default, 0 disables it.
        #[serde(default)]
        background: Option<f64>,
    },
    /// Zipf popularity ladder whose ranks are taken over by new files.
    Replacement { n: usize, exponent: f64, churn: f64 },
    /// A trace CSV file.
    File { path: PathBuf },
}

/// Step rule for OGA.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Fixed,
    HorizonOptimal,
    Diminishing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Oga,
    Lru,
    Lfu,
    Bsa,
    Mlru,
    LazyQlru,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Oga => "oga",
            PolicyKind::Lru => "lru",
            PolicyKind::Lfu => "lfu",
            PolicyKind::Bsa => "bsa",
            PolicyKind::Mlru => "mlru",
            PolicyKind::LazyQlru => "lazy_qlru",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "oga" => PolicyKind::Oga,
            "lru" => PolicyKind::Lru,
            "lfu" => PolicyKind::Lfu,
            "bsa" => PolicyKind::Bsa,
            "mlru" => PolicyKind::Mlru,
            "lazy_qlru" | "qlru" => PolicyKind::LazyQlru,
            other => return Err(Error::config(format!("unknown policy `{other}`"))),
        })
    }

    fn mode(self) -> Mode {
        match self {
            PolicyKind::Oga | PolicyKind::Lru | PolicyKind::Lfu => Mode::Single,
            _ => Mode::Bipartite,
        }
    }
}

/// One policy to simulate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Label in the results; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Constant step for OGA or BSA; implies `step = "fixed"` for OGA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepKind>,
    /// Insertion probability of lazy q-LRU.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            name: None,
            eta: None,
            step: None,
            q: None,
        }
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.kind.name().to_string())
    }
}

/// Network given inline or as a path to a TOML document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    Path(PathBuf),
    Inline(NetworkSpec),
}

impl NetworkSource {
    /// Relative paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<BipartiteNetwork> {
        match self {
            NetworkSource::Path(p) => BipartiteNetwork::load(resolve(base, p)),
            NetworkSource::Inline(spec) => BipartiteNetwork::from_spec(spec.clone()),
        }
    }
}

pub(crate) fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

/// Benchmark for network regret.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HindsightMethod {
    /// Exact linear program.
    #[default]
    Lp,
    /// Projected supergradient ascent for `epochs` epochs.
    Ascent,
}

fn default_epochs() -> usize {
    crate::bipartite::DEFAULT_EPOCHS
}

fn default_record_every() -> u64 {
    1
}

/// A complete experiment: trace, cache model, policies, output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Number of slots; required for generated traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Cache size (single mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    /// Per-file utility weights (single mode); uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Cache network (bipartite mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSource>,
    #[serde(default)]
    pub hindsight: HindsightMethod,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Write every k-th slot (and the last) to the results.
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub trace: TraceSource,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
}

impl ExperimentConfig {
    /// A single-cache experiment with no policies yet.
    pub fn single(trace: TraceSource, capacity: f64, horizon: Option<u64>, seed: u64) -> Self {
        ExperimentConfig {
            mode: Mode::Single,
            seed,
            horizon,
            capacity: Some(capacity),
            weights: None,
            network: None,
            hindsight: HindsightMethod::default(),
            epochs: default_epochs(),
            record_every: 1,
            output: None,
            trace,
            policies: Vec::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("experiment config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    pub fn with_policy(mut self, policy: PolicySpec) -> Self {
        self.policies.push(policy);
        self
    }

    /// SHA-256 of the configuration, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Static checks that need no trace or network.
    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::config("no policies given"));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        let mut labels = BTreeSet::new();
        for p in &self.policies {
            if p.kind.mode() != self.mode {
                return Err(Error::config(format!(
                    "policy `{}` needs {} mode",
                    p.kind.name(),
                    match p.kind.mode() {
                        Mode::Single => "single",
                        Mode::Bipartite => "bipartite",
                    }
                )));
            }
            if !labels.insert(p.label()) {
                return Err(Error::config(format!(
                    "duplicate policy label `{}`",
                    p.label()
                )));
            }
            if p.eta.is_some() && !matches!(p.kind, PolicyKind::Oga | PolicyKind::Bsa) {
                return Err(Error::config(format!(
                    "`eta` does not apply to {}",
                    p.kind.name()
                )));
            }
            if p.step.is_some() && p.kind != PolicyKind::Oga {
                return Err(Error::config(format!(
                    "`step` does not apply to {}",
                    p.kind.name()
                )));
            }
            if p.q.is_some() && p.kind != PolicyKind::LazyQlru {
                return Err(Error::config(format!(
                    "`q` does not apply to {}",
                    p.kind.name()
                )));
            }
            if p.step == Some(StepKind::Fixed) && p.eta.is_none() {
                return Err(Error::config("fixed step needs `eta`"));
            }
        }
        match self.mode {
            Mode::Single => {
                if self.capacity.is_none() {
                    return Err(Error::config("single mode needs `capacity`"));
                }
                if self.network.is_some() {
                    return Err(Error::config("`network` only applies to bipartite mode"));
                }
            }
            Mode::Bipartite => {
                if self.network.is_none() {
                    return Err(Error::config("bipartite mode needs `network`"));
                }
                if self.capacity.is_some() || self.weights.is_some() {
                    return Err(Error::config(
                        "bipartite mode takes capacities and weights from the network",
                    ));
                }
            }
        }
        if self.hindsight == HindsightMethod::Ascent && self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG4: &str = r#"
seed = 7
horizon = 1000
capacity = 30

[trace]
generator = "zipf"
n = 100
exponent = 0.8

[[policies]]
kind = "oga"
eta = 0.1

[[policies]]
kind = "lru"
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::from_toml_str(FIG4).unwrap();
        assert_eq!(cfg.mode, Mode::Single);
        assert_eq!(
            cfg.trace,
            TraceSource::Zipf {
                n: 100,
                exponent: 0.8
            }
        );
        assert_eq!(cfg.policies[0].eta, Some(0.1));
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn hash_ignores_output_only() {
        let cfg = ExperimentConfig::from_toml_str(FIG4).unwrap();
        let mut other = cfg.clone();
        other.output = Some("elsewhere.csv".into());
        assert_eq!(cfg.hash(), other.hash());
        other.seed = 8;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn config_errors() {
        let mut cfg = ExperimentConfig::from_toml_str(FIG4).unwrap();
        cfg.policies.clear();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::from_toml_str(FIG4).unwrap();
        cfg.policies.push(PolicySpec::new(PolicyKind::Bsa));
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::from_toml_str(FIG4).unwrap();
        cfg.policies.push(PolicySpec::new(PolicyKind::Lru));
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml_str("[trace]\ngenerator = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml_str(
            "bogus = 1\n[trace]\ngenerator = \"uniform\"\nn = 3"
        )
        .is_err());
        assert!(PolicyKind::parse("arc").is_err());
    }

    #[test]
    fn inline_network() {
        let text = r#"
mode = "bipartite"
horizon = 100
[trace]
generator = "zipf"
n = 20
exponent = 0.8
[network]
files = 20
capacities = [2, 2]
cache_weights = [1, 5]
connectivity = [[1, 1], [0, 1]]
[[policies]]
kind = "bsa"
[[policies]]
kind = "lazy_qlru"
q = 0.5
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        cfg.validate().unwrap();
        let net = cfg.network.as_ref().unwrap().load(None).unwrap();
        assert_eq!(net.n_locations(), 2);
    }
}
