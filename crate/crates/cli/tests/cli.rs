use std::process::Command as Process;

use growthlab_cli::{parse_args, run, CliError, Command, ExperimentConfig, Status};
use serde_json::Value;

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_growthlab"))
}

fn invalid(cfg: ExperimentConfig) -> String {
    match run(&cfg) {
        Err(e @ CliError::ConfigInvalid(_)) => {
            assert_eq!(e.exit_code(), 2);
            e.to_string()
        }
        other => panic!("expected ConfigInvalid, got {other:?}"),
    }
}

#[test]
fn non_prime_power_is_rejected() {
    let msg = invalid(ExperimentConfig::new(Command::Field).with_q(&[6]));
    assert!(msg.contains("NotPrimePower(6)"), "{msg}");
}

#[test]
fn reducible_modulus_is_rejected() {
    let mut cfg = ExperimentConfig::new(Command::Field).with_q(&[4]);
    cfg.modulus = Some(vec![1, 0, 1]);
    let msg = invalid(cfg);
    assert!(msg.contains("ReducibleModulus"), "{msg}");
}

#[test]
fn user_modulus_is_reported() {
    let mut cfg = ExperimentConfig::new(Command::Field).with_q(&[8]);
    cfg.modulus = Some(vec![1, 0, 1, 1]);
    let r = run(&cfg).unwrap();
    assert_eq!(r.fields[0].modulus, vec![1, 0, 1, 1]);
    assert_eq!(r.failures(), 0);
}

#[test]
fn zero_threads_is_rejected() {
    invalid(ExperimentConfig::new(Command::Field).with_q(&[5]).with_threads(0));
}

#[test]
fn oversized_group_is_rejected() {
    invalid(ExperimentConfig::new(Command::Growth).with_q(&[32]));
}

#[test]
fn prime_field_has_no_almost_field_experiment() {
    invalid(
        ExperimentConfig::new(Command::Additive {
            experiment: growthlab_cli::Experiment::Almostfield,
        })
        .with_q(&[7]),
    );
}

#[test]
fn args_parse_into_config() {
    let cfg = parse_args(["growthlab", "growth", "--q", "3,5", "--family", "pairs", "--seed", "7", "--threads", "2"]).unwrap();
    assert_eq!(cfg.q, vec![3, 5]);
    assert_eq!(cfg.family.as_deref(), Some("pairs"));
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.threads, Some(2));
    assert_eq!(cfg.command.name(), "growth");
    assert!(parse_args(["growthlab", "bogus"]).is_err());
}

#[test]
fn budget_truncates_and_exits_3() {
    let mut cfg = ExperimentConfig::new(Command::Growth).with_q(&[7]).with_family("pairs");
    cfg.budget = Some(2_000);
    let r = run(&cfg).unwrap();
    assert!(r.truncated);
    assert_eq!(r.failures(), 0);
    assert_eq!(r.exit_code(), 3);

    let full = run(&ExperimentConfig::new(Command::Growth).with_q(&[7]).with_family("pairs")).unwrap();
    assert!(!full.truncated);
    assert!(r.table.rows.len() < full.table.rows.len());
    assert_eq!(r.table.rows[..], full.table.rows[..r.table.rows.len()]);
}

#[test]
fn verdict_counts_reconcile() {
    let r = run(&ExperimentConfig::new(Command::Lemmas { lemma: "all".into() }).with_q(&[3, 5]).with_family("pairs")).unwrap();
    for v in &r.verdicts {
        assert_eq!(v.total, v.passed + v.failed + v.skipped, "{}", v.name);
        let expect = if v.failed > 0 {
            Status::Fail
        } else if v.passed > 0 {
            Status::Pass
        } else {
            Status::Skipped
        };
        assert_eq!(v.status, expect, "{}", v.name);
    }
    let j = r.summary_json();
    let totals = &j["totals"];
    let sum = ["pass", "fail", "skipped"].iter().map(|k| totals[k].as_u64().unwrap()).sum::<u64>();
    assert_eq!(sum as usize, r.verdicts.len());
    assert_eq!(j["rows"].as_u64().unwrap() as usize, r.table.rows.len());
}

#[test]
fn binary_writes_summary_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["growth", "--q", "3,5", "--family", "pairs", "--seed", "11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS growth_exponent_positive q=3"), "{stdout}");

    let csv = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "q,mode,set_id,set_codes,|A|,|A3|,epsilon,diam,diam_plus,saturated");

    let j: Value = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(j["schema_version"], 1);
    assert_eq!(j["command"], "growth");
    assert_eq!(j["seed"], 11);
    assert_eq!(j["truncated"], false);
    assert!(j["rng"].as_str().unwrap().contains("chacha8"));
    assert_eq!(j["fields"].as_array().unwrap().len(), 2);
    assert_eq!(j["rows"].as_u64().unwrap() as usize, csv.lines().count() - 1);
    for v in j["verdicts"].as_array().unwrap() {
        for key in ["name", "status", "total", "passed", "failed", "skipped"] {
            assert!(v.get(key).is_some(), "verdict missing {key}");
        }
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin().args(args).arg("--out").arg(dir.path()).output().unwrap().status.code();
    assert_eq!(code(&["field", "--q", "6"]), Some(2));
    assert_eq!(code(&["field", "--q", "4", "--modulus", "1,0,1"]), Some(2));
    assert_eq!(code(&["nonsense"]), Some(2));
    assert_eq!(code(&["selftest", "--q", "3"]), Some(0));
    assert_eq!(code(&["growth", "--q", "7", "--family", "pairs", "--budget", "2000"]), Some(3));
    // the exhaustive fibre check has counterexamples at q = 4
    assert_eq!(code(&["lemmas", "--q", "4", "--family", "pairs", "--lemma", "fibre_multiplicity"]), Some(1));
}

#[test]
fn threads_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["setops", "--q", "3", "--trials", "20", "--out"])
        .arg(dir.path())
        .env("GROWTHLAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let j: Value = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(j["config"]["threads"], 2);
}

#[test]
fn same_seed_same_rows() {
    let cfg = ExperimentConfig::new(Command::Setops).with_q(&[5]).with_trials(50).with_seed(3);
    let a = run(&cfg).unwrap().table.to_bytes().unwrap();
    let b = run(&cfg).unwrap().table.to_bytes().unwrap();
    let c = run(&cfg.clone().with_seed(4)).unwrap().table.to_bytes().unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
