use std::path::Path;
use std::process::{Command, Output};

fn olcache(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_olcache"))
        .current_dir(dir)
        .env_remove("OLCACHE_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

const CONFIG: &str = r#"
seed = 11
horizon = 3000
capacity = 10
output = "results.csv"

[trace]
generator = "zipf"
n = 80
exponent = 0.8

[[policies]]
kind = "oga"
eta = 0.1

[[policies]]
kind = "lru"

[[policies]]
kind = "lfu"
"#;

#[test]
fn generate_then_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&olcache(
        dir.path(),
        &[
            "generate", "zipf", "--n", "50", "--t", "2000", "--seed", "3", "-o", "t.csv",
        ],
    ));
    let stdout = ok(&olcache(
        dir.path(),
        &["run", "--trace", "t.csv", "--capacity", "5", "-o", "r.csv"],
    ));
    for label in ["oga", "lru", "lfu"] {
        assert!(stdout.contains(label), "{stdout}");
    }
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.contains("slot,policy,cum_utility,avg_utility,cum_regret"));
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 3 * 2000);
}

#[test]
fn unknown_generator_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = olcache(dir.path(), &["generate", "pareto", "--t", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "seed = 1\nbogus = 2\n").unwrap();
    let out = olcache(dir.path(), &["run", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(2));

    let out = olcache(
        dir.path(),
        &["run", "--config", "c.toml", "--policies", "fifo"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_trace_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = olcache(
        dir.path(),
        &["run", "--trace", "nope.csv", "--capacity", "3"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    ok(&olcache(
        dir.path(),
        &["run", "--config", "c.toml", "-o", "a.csv"],
    ));
    ok(&olcache(
        dir.path(),
        &["run", "--config", "c.toml", "-o", "b.csv"],
    ));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    ok(&olcache(
        dir.path(),
        &["run", "--config", "c.toml", "--seed", "12", "-o", "c.csv"],
    ));
    let c = std::fs::read(dir.path().join("c.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn config_output_and_env_default() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    ok(&olcache(dir.path(), &["run", "--config", "c.toml"]));
    assert!(dir.path().join("results.csv").exists());

    let out = Command::new(env!("CARGO_BIN_EXE_olcache"))
        .current_dir(dir.path())
        .env("OLCACHE_OUT_DIR", dir.path().join("out"))
        .args(["generate", "uniform", "--n", "10", "--t", "50"])
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("out/trace.csv").exists());
}

#[test]
fn inspect_joins_lru_with_oga() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    ok(&olcache(
        dir.path(),
        &["run", "--config", "c.toml", "--state-out", "s.json"],
    ));
    let csv = ok(&olcache(dir.path(), &["inspect", "s.json"]));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lru_rank,file,oga_y"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0], k as f64);
        assert!((0.0..=1.0).contains(&r[2]));
    }

    let out = olcache(dir.path(), &["inspect", "s.json", "--lru", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_table_marks_inapplicable_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ok(&olcache(
        dir.path(),
        &[
            "bounds",
            "--n",
            "100",
            "--c",
            "70",
            "--t",
            "1000",
            "--samples",
            "1000",
        ],
    ));
    assert!(csv.starts_with("bound,coefficient,value,std_error,note"));
    assert_eq!(csv.matches("n/a (C<N/2 required)").count(), 3);

    let csv = ok(&olcache(
        dir.path(),
        &[
            "bounds",
            "--n",
            "100",
            "--c",
            "30",
            "--t",
            "1000",
            "--samples",
            "1000",
        ],
    ));
    assert!(!csv.contains("n/a"));
    let upper: f64 = csv
        .lines()
        .find(|l| l.starts_with("oga_upper,"))
        .and_then(|l| l.split(',').nth(2))
        .unwrap()
        .parse()
        .unwrap();
    assert!((upper - (2.0f64 * 30.0 * 1000.0).sqrt()).abs() < 1e-9);
}

#[test]
fn periodic_needs_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let out = olcache(dir.path(), &["generate", "periodic", "--t", "100"]);
    assert_eq!(out.status.code(), Some(2));
    ok(&olcache(
        dir.path(),
        &[
            "generate", "periodic", "--c", "4", "--t", "100", "-o", "p.csv",
        ],
    ));
    let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(text.contains("catalog_size: 5"));
}

#[test]
fn shipped_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["single_zipf.toml", "three_caches.toml", "shot_noise.toml"] {
        let cfg = configs.join(name);
        let out = olcache(
            dir.path(),
            &[
                "run",
                "--config",
                cfg.to_str().unwrap(),
                "--horizon",
                "2000",
                "-o",
                "r.csv",
            ],
        );
        ok(&out);
    }
}
