use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdp"))
        .args(args)
        .env_remove("QDP_SEED")
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    format!("{}/configs/{name}.conf", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn budget_prints_both_orders() {
    let one = qdp(&["budget", "--k", "2", "--cq", "1", "--sigma", "1", "--alpha", "1"]);
    assert!(one.status.success());
    let v: f64 = stdout(&one).trim().parse().unwrap();
    assert!((v - 0.228_426_468_352_466_4).abs() < 1e-11);
    let inf = qdp(&["budget", "--k", "2", "--cq", "1", "--sigma", "1", "--alpha", "inf"]);
    let v: f64 = stdout(&inf).trim().parse().unwrap();
    assert!((v - 1.318_868_709_692_48).abs() < 1e-11);
}

#[test]
fn budget_without_k_is_usage_error() {
    let o = qdp(&["budget", "--cq", "1", "--sigma", "1", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn sweep_writes_monotone_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let args = [
        "sweep",
        "--k",
        "64,2,4,8,16,32",
        "--cq",
        "1",
        "--sigma",
        "1",
        "--out",
        out.to_str().unwrap(),
    ];
    assert!(qdp(&args).status.success());
    let first = fs::read(&out).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,eps1,eps_inf,eps_gauss_alpha1"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        [2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
    );
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1]);
        assert!(w[1][2] > w[0][2]);
    }
    assert!(rows.iter().all(|r| r[1] < 0.5 && r[3] == 0.5));

    assert!(qdp(&args).status.success());
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn sweep_single_row_matches_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    assert!(qdp(&[
        "sweep",
        "--k",
        "8",
        "--cq",
        "1",
        "--sigma",
        "1",
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let text = fs::read_to_string(&out).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    let budget: f64 = stdout(&qdp(&[
        "budget", "--k", "8", "--cq", "1", "--sigma", "1", "--alpha", "1",
    ]))
    .trim()
    .parse()
    .unwrap();
    assert!((row[1] - budget).abs() < 1e-11);
}

#[test]
fn calibrate_reports_sigma() {
    let o = qdp(&["calibrate", "--epsilon", "5", "--delta", "1e-5", "--rounds", "150"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let sigma: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("sigma = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((sigma - 12.9167).abs() < 0.01, "{sigma}");
    assert!(text.contains("best_alpha = 6"));
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn fl_train_writes_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = config("fl_smoke");
    assert!(qdp(&["fl-train", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(qdp(&["fl-train", &cfg, "--out", b.to_str().unwrap()]).status.success());
    let csv = fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
    assert_eq!(
        fs::read(a.join("metrics.csv")).unwrap(),
        fs::read(b.join("metrics.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("model.json")).unwrap(),
        fs::read(b.join("model.json")).unwrap()
    );
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fl-train");
    assert_eq!(manifest["seed"], 1);
}

#[test]
fn fl_train_rejects_unknown_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "rounds = 3\nbogus = 1\n").unwrap();
    let o = qdp(&[
        "fl-train",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mia_rejects_single_shadow() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m1.conf");
    let text = fs::read_to_string(config("mia_k16"))
        .unwrap()
        .replace("shadow_models = 16", "shadow_models = 1");
    assert!(text.contains("shadow_models = 1\n"));
    fs::write(&cfg, text).unwrap();
    let o = qdp(&[
        "mia",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mia_is_reproducible_and_honours_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mia_k16");
    let out = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    assert!(qdp(&["mia", &cfg, "--seed", "7", "--out", &out("a")]).status.success());
    assert!(qdp(&["mia", &cfg, "--seed", "7", "--out", &out("b")]).status.success());
    let with_env = Command::new(env!("CARGO_BIN_EXE_qdp"))
        .args(["mia", &cfg, "--out", &out("c")])
        .env("QDP_SEED", "7")
        .output()
        .unwrap();
    assert!(with_env.status.success());
    let a = read_dir(&dir.path().join("a"));
    let c = read_dir(&dir.path().join("c"));
    assert_eq!(
        fs::read(dir.path().join("a/report.json")).unwrap(),
        fs::read(dir.path().join("b/report.json")).unwrap()
    );
    assert_eq!(a[1], c[1]);
    assert_eq!(a[1].0, "report.json");
    let report: serde_json::Value = serde_json::from_slice(&a[1].1).unwrap();
    assert_eq!(report["seeds"][0], 7);
    let acc = report["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
}
