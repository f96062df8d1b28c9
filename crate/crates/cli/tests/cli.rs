use std::path::PathBuf;
use std::process::Command;

use cpnlab_cli::{parse_record, run_config_text, validate_config, CliError, ConfigError};
use proptest::prelude::*;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(text: &str, workers: usize) -> String {
    let mut out = Vec::new();
    run_config_text(text, workers, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn errors(text: &str) -> Vec<ConfigError> {
    validate_config(text).err().expect("config should be rejected")
}

const NOISE: &str = r#"
[experiment]
kind = "noise-sample"
seed = 3

[model]
box = "[0,4]x[0,4]"
z = 2.0
law = "two-point:1"

[test_function]
center = [2.0, 2.0]
width = 0.5

[frequencies]
t_max = 3.0
t_points = 5

[sampling]
samples = 2500
"#;

const GCE_FREE: &str = r#"
[experiment]
kind = "gce"
seed = 9

[model]
box = "[0,2]x[0,3]"
z = 0.7
lambda = 0.0
law = "two-point:1"
kernel = "indicator"
radius = 0.4
potential = "hard-wall:1.5"

[sampling]
steps = 20000
burn_in = 1000
batch_size = 100
"#;

#[test]
fn documented_configs_validate() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            if let Err(e) = validate_config(&text) {
                panic!("{}: {e:?}", path.display());
            }
            n += 1;
        }
    }
    assert!(n >= 8, "expected one config per experiment kind, found {n}");
}

#[test]
fn missing_seed_is_named() {
    let text = NOISE.replace("seed = 3", "");
    let e = errors(&text);
    assert!(e.iter().any(|e| e.field == "experiment.seed"), "{e:?}");
}

#[test]
fn negative_activity_is_named() {
    let text = NOISE.replace("z = 2.0", "z = -1.0");
    let e = errors(&text);
    let hit = e.iter().find(|e| e.field == "model.z").expect("model.z error");
    assert!(hit.message.contains("positive"), "{hit}");
}

#[test]
fn every_problem_is_reported() {
    let text = NOISE
        .replace("seed = 3", "")
        .replace("z = 2.0", "z = -1.0")
        .replace("width = 0.5", "width = 0.5\nshape = \"box\"");
    let fields: Vec<String> = errors(&text).into_iter().map(|e| e.field).collect();
    for f in ["experiment.seed", "model.z", "test_function.shape"] {
        assert!(fields.iter().any(|x| x == f), "{f} missing from {fields:?}");
    }
}

#[test]
fn keys_of_other_experiments_are_rejected() {
    let text = NOISE.replace("[sampling]", "[sampling]\nsteps = 10");
    let e = errors(&text);
    assert!(e.iter().any(|e| e.field == "sampling.steps"), "{e:?}");
    assert!(errors("[experiment]\nkind = \"plot\"\nseed = 1\n")
        .iter()
        .any(|e| e.field == "experiment.kind"));
    assert!(errors("not = [toml").iter().any(|e| e.field == "<file>"));
}

#[test]
fn sweep_cardinality() {
    let text = r#"
[experiment]
kind = "ecf-sweep"
seed = 4

[model]
box = "[0,2]x[0,2]"
law = "two-point:1"
z_values = [1.0, 10.0, 100.0]
m = 1.0

[test_function]
center = [1.0, 1.0]
width = 0.4

[frequencies]
t_max = 2.0
t_points = 21

[sampling]
samples = 300
"#;
    let out = run(text, 1);
    assert_eq!(out.lines().count(), 63);
}

#[test]
fn same_seed_same_bytes_for_any_worker_count() {
    let a = run(NOISE, 1);
    assert_eq!(a, run(NOISE, 1));
    assert_eq!(a, run(NOISE, 3));
    let g = run(GCE_FREE, 1);
    assert_eq!(g, run(GCE_FREE, 2));
    assert_ne!(a, run(&NOISE.replace("seed = 3", "seed = 4"), 1));
}

#[test]
fn free_gce_reference_is_mean_occupancy() {
    let out = run(GCE_FREE, 1);
    let n = out
        .lines()
        .map(|l| parse_record(l).unwrap())
        .find(|r| r.get("quantity") == Some("N"))
        .unwrap();
    assert_eq!(n.get_real("reference"), Some(0.7 * 6.0));
}

#[test]
fn output_lines_round_trip() {
    for text in [NOISE, GCE_FREE] {
        for line in run(text, 1).lines() {
            let r = parse_record(line).unwrap();
            assert_eq!(r.to_string(), line);
            for key in ["experiment", "estimate", "samples"] {
                assert!(r.get(key).is_some() || r.get("estimate_re").is_some(), "{key} in {line}");
            }
        }
    }
}

#[test]
fn run_errors_surface() {
    // an oracle whose truncation bound cannot meet its tolerance
    let text = GCE_FREE.replace("lambda = 0.0", "lambda = 1.0") + "\n[oracle]\nn_max = 1\ntolerance = 1e-9\n";
    let mut out = Vec::new();
    match run_config_text(&text, 1, &mut out) {
        Err(CliError::Run(msg)) => assert!(msg.contains("truncation"), "{msg}"),
        other => panic!("expected a run error, got {other:?}"),
    }
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_cpnlab");
    let dir = std::env::temp_dir().join(format!("cpnlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.toml");
    let bad = dir.join("bad.toml");
    let out = dir.join("out.tsv");
    std::fs::copy(configs_dir().join("kernel-table.toml"), &good).unwrap();
    std::fs::write(&bad, NOISE.replace("z = 2.0", "z = -1.0")).unwrap();

    let ok = Command::new(exe).args(["-q", "-c"]).arg(&good).arg("-o").arg(&out).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 40);

    let fail = Command::new(exe).arg("-c").arg(&bad).output().unwrap();
    assert_eq!(fail.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&fail.stderr);
    assert!(msg.contains("model.z") && msg.contains("positive"), "{msg}");

    let missing = Command::new(exe).arg("-c").arg(dir.join("nope.toml")).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

proptest! {
    #[test]
    fn records_round_trip(
        fields in proptest::collection::vec(("[a-z_][a-z0-9_]{0,8}", "[ -~&&[^\t]]{0,12}"), 1..6),
        x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO,
    ) {
        let mut r = cpnlab_cli::Record::new("p").real("x", x);
        for (k, v) in &fields {
            r = r.text(k, v);
        }
        let line = r.to_string();
        let back = parse_record(&line).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(back.to_string(), line);
        prop_assert_eq!(back.get_real("x").unwrap().to_bits(), x.to_bits());
    }
}
