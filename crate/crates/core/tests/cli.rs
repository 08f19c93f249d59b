use std::path::Path;
use std::process::Command;

use memtutor::experiment::{read_curve_csv, read_events_csv};

fn memtutor(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_memtutor"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

const SMALL: [&str; 6] = [
    "--set", "schedule.days=2",
    "--set", "pretrain.population=12",
    "--set", "pretrain.epochs=20",
];

#[test]
fn unknown_tutor_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = memtutor(&["run", "--tutor", "sarsa", "--seeds", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown tutor"));
}

#[test]
fn rl_without_priors_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = memtutor(&["run", "--tutor", "rl", "--seeds", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pretrain"));
}

#[test]
fn bad_flag_and_bad_key_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(memtutor(&["run", "--bogus"], dir.path()).status.code(), Some(2));
    let out = memtutor(&["run", "--set", "no.such=1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(memtutor(&["run", "--seeds", "3..1"], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = memtutor(&["run", "--config", "absent.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pretrain_writes_five_priors_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["pretrain", "--out", "a"];
    args.extend(SMALL);
    assert!(memtutor(&args, dir.path()).status.success());
    args[2] = "b";
    assert!(memtutor(&args, dir.path()).status.success());
    let a = std::fs::read_to_string(dir.path().join("a/priors.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/priors.csv")).unwrap();
    assert_eq!(a, b);
    let lines: Vec<_> = a.lines().collect();
    assert_eq!(lines[0], "family,mu,sigma");
    assert_eq!(lines.len(), 6);
    for name in ["alpha", "delta", "beta", "theta", "phi"] {
        assert!(lines.iter().any(|l| l.starts_with(&format!("{name},"))));
    }
}

#[test]
fn run_compare_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tutor: &str| {
        let out = memtutor(
            &["run", "--tutor", tutor, "--seeds", "0..4", "--out", "runs", "--set", "schedule.days=3"],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        dir.path().join(String::from_utf8(out.stdout).unwrap().trim())
    };
    let random = run("random");
    let leitner = run("leitner");
    assert_eq!(
        random.file_name().unwrap().to_str().unwrap()[7..],
        leitner.file_name().unwrap().to_str().unwrap()[8..],
        "same config, same hash"
    );
    for s in 0..5 {
        assert!(random.join(format!("seed-{s}/events.csv")).exists());
    }
    assert_eq!(read_events_csv(&random.join("events.csv")).unwrap().len(), 5 * 60);
    assert_eq!(read_curve_csv(&random.join("curve.csv")).unwrap().agg.len(), 6);

    let out = memtutor(
        &["compare", random.to_str().unwrap(), leitner.to_str().unwrap(), "--out", "cmp"],
        dir.path(),
    );
    assert!(out.status.success());
    let table = std::fs::read_to_string(dir.path().join("cmp/compare.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let random_final = read_curve_csv(&random.join("curve.csv")).unwrap().agg.mean[5];
    let row = table.lines().find(|l| l.starts_with("random,")).unwrap();
    let final_in_table: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert_eq!(final_in_table, random_final);
    image::open(dir.path().join("cmp/compare.png")).unwrap();

    // a run compared with itself
    let out = memtutor(
        &["compare", random.to_str().unwrap(), random.to_str().unwrap(), "--out", "self"],
        dir.path(),
    );
    assert!(out.status.success());
    let rows: Vec<_> = std::fs::read_to_string(dir.path().join("self/compare.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(2).map(String::from).collect::<Vec<_>>())
        .collect();
    assert_eq!(rows[0], rows[1]);

    let out = memtutor(&["plot", random.to_str().unwrap(), "--out", "again.png"], dir.path());
    assert!(out.status.success());
    let img = image::open(dir.path().join("again.png")).unwrap();
    assert_eq!((img.width(), img.height()), (800, 500));

    assert_eq!(memtutor(&["compare", random.to_str().unwrap()], dir.path()).status.code(), Some(2));
    let out = memtutor(&["compare", "nope1", "nope2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_configs_load_and_default_matches_builtin() {
    use memtutor::experiment::ExperimentConfig;
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let default = ExperimentConfig::load(Some(&root.join("default.toml")), &[]).unwrap();
    assert_eq!(default.hash(), ExperimentConfig::default().hash());
    let full = ExperimentConfig::load(Some(&root.join("full.toml")), &[]).unwrap();
    assert_eq!(full.hidden, 512);
}
