use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vqclab"));
    c.env_remove("VQCLAB_OUT");
    c
}

fn iris() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = r#"
[experiment]
seed = 3
repeats = 2
[sweep]
values = [2, 3]
fixed = 1
[train]
epochs = 1
[[strategy]]
init = "normal"
[[strategy]]
init = "uniform"
prior = true
diffusion = true
dr_max = 0.2
"#;

#[test]
fn sweep_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let status = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--data-path")
        .arg(iris())
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("variance.csv")).unwrap();
    assert!(csv.starts_with("dataset,strategy,axis,axis_value,epoch,variance,n_samples\n"));
    // 2 strategies × 2 sizes × epochs {0, 1}
    assert_eq!(csv.lines().count(), 1 + 8);
    let svg = std::fs::read_to_string(out.join("variance.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let runs = std::fs::read_dir(out.join("runs")).unwrap().count();
    assert_eq!(runs, 8);
    assert!(!out.join("failures.csv").exists());

    // the emit subcommand reproduces the chart from the CSV alone
    let svg2 = dir.path().join("again.svg");
    let status = bin()
        .args(["emit", "--csv"])
        .arg(out.join("variance.csv"))
        .arg("--svg")
        .arg(&svg2)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(svg2).unwrap(), svg);
}

#[test]
fn environment_sets_default_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("from-env");
    let status = bin()
        .args(["sweep", "--repeats", "1", "--sweep", "qubits:2", "--config"])
        .arg(&cfg)
        .arg("--data-path")
        .arg(iris())
        .env("VQCLAB_OUT", &out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("variance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[experiment]\nrepeats = 0\n");
    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("repeats"));

    let cfg = write_config(dir.path(), "[nonsense]\n");
    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn partial_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut flat = String::from("a,b,c,d,class\n");
    for i in 0..150 {
        flat.push_str(&format!("1,1,1,1,{}\n", i % 3));
    }
    let data = dir.path().join("flat.csv");
    std::fs::write(&data, flat).unwrap();
    let cfg = write_config(
        dir.path(),
        "[experiment]\nrepeats = 1\n[sweep]\nvalues = [2]\nfixed = 1\n[train]\nepochs = 1\n\
         [[strategy]]\ninit = \"beta\"\nprior = true\n[[strategy]]\ninit = \"normal\"\n",
    );
    let out = dir.path().join("out");
    let status = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--data-path")
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let failures = std::fs::read_to_string(out.join("failures.csv")).unwrap();
    assert!(failures.contains("beta+pr"));
    let csv = std::fs::read_to_string(out.join("variance.csv")).unwrap();
    assert!(csv.contains(",normal,") && !csv.contains("beta"));
}

#[test]
fn train_one_reports_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[experiment]\nrepeats = 1\n[sweep]\nvalues = [4]\nfixed = 2\n[train]\nepochs = 3\n",
    );
    let out = dir.path().join("out");
    let res = bin()
        .arg("train-one")
        .arg("--config")
        .arg(&cfg)
        .arg("--data-path")
        .arg(iris())
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(String::from_utf8_lossy(&res.stdout).contains("test accuracy"));
    let report = std::fs::read_to_string(out.join("normal-qubits4-r0.json")).unwrap();
    assert!(report.contains("\"test_accuracy\""));
}

#[test]
fn select_dr_scores_every_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[experiment]\nrepeats = 1\n[sweep]\nvalues = [2]\nfixed = 1\n[train]\nepochs = 1\n\
         [diffusion]\ncandidates = [0.02, 0.3]\n\
         [[strategy]]\ninit = \"normal\"\ndiffusion = true\n",
    );
    let out = dir.path().join("out");
    let res = bin()
        .arg("select-dr")
        .arg("--config")
        .arg(&cfg)
        .arg("--data-path")
        .arg(iris())
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(String::from_utf8_lossy(&res.stdout).contains("normal+dr: dr_max = "));
    let scores = std::fs::read_to_string(out.join("select_dr.csv")).unwrap();
    assert_eq!(scores.lines().count(), 3);
    assert_eq!(scores.matches(",true").count(), 1);
}
