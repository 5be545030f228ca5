use std::path::Path;
use std::process::{Command, Output};

fn gwloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwloc"))
        .current_dir(dir)
        .env_remove("GWLOC_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const GEN: &[&str] = &["gen", "--t", "40", "--q", "16", "--sensors", "4", "--seed", "5"];

fn gen(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = GEN.to_vec();
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", out]);
    gwloc(dir, &args)
}

fn train(dir: &Path, data: &str, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["train", "--data", data, "--hidden", "8,4", "--epochs", "3", "--seed", "2"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", out]);
    gwloc(dir, &args)
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let help = gwloc(dir.path(), &["--help"]);
    assert_eq!(code(&help), 0);
    let text = stdout(&help);
    assert!(text.contains("GWDS0001") && text.contains("GWNN0001"));

    assert_eq!(code(&gwloc(dir.path(), &[])), 2);
    assert_eq!(code(&gwloc(dir.path(), &["gen", "--bogus"])), 2);
    assert_eq!(code(&gwloc(dir.path(), &["gen"])), 2);
    assert_eq!(code(&gen(dir.path(), "a.gwds", &["--sensors", "1"])), 2);
    assert_eq!(code(&gen(dir.path(), "a.gwds", &["--alpha", "wide"])), 2);
    assert_eq!(code(&gen(dir.path(), "no/such/dir/a.gwds", &[])), 2);
    assert_eq!(code(&gwloc(dir.path(), &["train", "--data", "missing.gwds", "--out", "m.gwnn"])), 2);
    assert_eq!(code(&gwloc(dir.path(), &["--threads", "0", "gen", "--out", "x"])), 2);
}

#[test]
fn pipeline_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |tag: &str| {
        let data = format!("d{tag}.gwds");
        let model = format!("m{tag}.gwnn");
        let report = format!("r{tag}.csv");
        let g = gen(d, &data, &[]);
        assert_eq!(code(&g), 0, "{}", String::from_utf8_lossy(&g.stderr));
        assert!(stdout(&g).contains("40 samples"));
        let t = train(d, &data, &model, &[]);
        assert_eq!(code(&t), 0, "{}", String::from_utf8_lossy(&t.stderr));
        assert_eq!(stdout(&t).lines().filter(|l| l.starts_with("epoch ")).count(), 3);
        let e = gwloc(
            d,
            &["eval", "--data", &data, "--dnn", &model, "--physical", "--resolution", "8x8", "--snrs", "5,25", "--out", &report],
        );
        assert_eq!(code(&e), 0, "{}", String::from_utf8_lossy(&e.stderr));
        [data, model, report]
            .map(|f| std::fs::read(d.join(f)).unwrap())
    };
    let first = run("1");
    let second = run("2");
    assert_eq!(first[0], second[0]);
    assert_eq!(first[1], second[1]);
    // Report rows are named after the checkpoint file, which differs here.
    let norm = |b: &[u8]| String::from_utf8_lossy(b).replace("m1,", "m,").replace("m2,", "m,");
    assert_eq!(norm(&first[2]), norm(&second[2]));
    assert_eq!(String::from_utf8_lossy(&first[2]).lines().count(), 5);
    assert!(d.join("d1.gwds.json").is_file());
    assert!(d.join("m1.gwnn.json").is_file());
    assert!(d.join("r1.json").is_file());
}

#[test]
fn eval_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&gen(d, "d.gwds", &[])), 0);
    let eval = || {
        let out = gwloc(d, &["eval", "--data", "d.gwds", "--physical", "--resolution", "6", "--out", "r.csv"]);
        assert_eq!(code(&out), 0);
        (std::fs::read(d.join("r.csv")).unwrap(), std::fs::read(d.join("r.json")).unwrap())
    };
    assert_eq!(eval(), eval());
    assert_eq!(code(&gwloc(d, &["eval", "--data", "d.gwds", "--out", "r.csv"])), 2);
}

#[test]
fn one_epoch_prints_one_loss_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&gen(d, "d.gwds", &[])), 0);
    let out = gwloc(d, &["train", "--data", "d.gwds", "--hidden", "4", "--epochs", "1", "--out", "m.gwnn"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().filter(|l| l.starts_with("epoch ")).count(), 1);
    assert_eq!(code(&train(d, "d.gwds", "m.gwnn", &["--dropout", "1.0"])), 2);
}

#[test]
fn corrupt_files_are_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&gen(d, "d.gwds", &[])), 0);
    let mut bytes = std::fs::read(d.join("d.gwds")).unwrap();
    bytes[..8].copy_from_slice(b"XXXX0001");
    std::fs::write(d.join("bad.gwds"), bytes).unwrap();
    let out = train(d, "bad.gwds", "m.gwnn", &[]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("format"));

    std::fs::write(d.join("bad.gwnn"), b"GWNN0001garbage").unwrap();
    let out = gwloc(d, &["eval", "--data", "d.gwds", "--dnn", "bad.gwnn", "--out", "r.csv"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn heatmap_writes_grid_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&gen(d, "d.gwds", &["--ideal"])), 0);
    let out = gwloc(d, &["heatmap", "--data", "d.gwds", "--index", "3", "--resolution", "10x6", "--out", "h.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("argmax"));
    let csv = std::fs::read_to_string(d.join("h.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("h.json")).unwrap()).unwrap();
    assert_eq!(side["extra"]["index"], 3);
    assert_eq!(side["extra"]["sample_snr_db"], serde_json::Value::Null);
    let bad = gwloc(d, &["heatmap", "--data", "d.gwds", "--index", "40", "--out", "h.csv"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn config_file_fills_in_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("run.toml"),
        "seed = 5\nthreads = 1\n[gen]\nt = 30\nq = 16\nsensors = 3\nsnr = 10.0\n",
    )
    .unwrap();
    let out = gwloc(d, &["--config", "run.toml", "gen", "--t", "20", "--out", "c.gwds"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("c.gwds.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["samples"], 20);
    assert_eq!(side["config"]["bins"], 16);
    assert_eq!(side["config"]["sensors"], 3);
    assert_eq!(side["config"]["snr_db"], 10.0);
    assert_eq!(side["config"]["seed"], 5);

    std::fs::write(d.join("bad.toml"), "[gen]\nunknown = 1\n").unwrap();
    assert_eq!(code(&gwloc(d, &["--config", "bad.toml", "gen", "--out", "x"])), 2);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&gwloc(d, &[&["--threads", "1"], GEN, &["--out", "a.gwds"]].concat())), 0);
    let out = Command::new(env!("CARGO_BIN_EXE_gwloc"))
        .current_dir(d)
        .env("GWLOC_THREADS", "3")
        .args([GEN, &["--out", "b.gwds"]].concat())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(d.join("a.gwds")).unwrap(), std::fs::read(d.join("b.gwds")).unwrap());
}
