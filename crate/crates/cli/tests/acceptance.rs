//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! The process fails when a criterion regresses from its recorded state. The
//! fibre multiplicity bound in criterion 3 is violated by exact counterexamples;
//! that line prints FAIL and the harness checks the recorded violation counts
//! instead.

use std::collections::BTreeMap;
use std::time::Instant;

use growthlab_cli::{run, Command, Experiment, ExperimentConfig, Report, SpectralCheck, Status};

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    /// The observed state matches what is recorded for this criterion.
    expected: bool,
    detail: String,
}

impl Outcome {
    fn plain(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            expected: pass,
            detail,
        }
    }
}

fn go(cfg: ExperimentConfig) -> Report {
    run(&cfg.with_seed(SEED)).expect("experiment runs")
}

fn all_pass(r: &Report, names: &[&str]) -> Result<u64, String> {
    let mut cases = 0;
    for v in r.verdicts.iter().filter(|v| names.contains(&v.name.as_str())) {
        if v.status != Status::Pass {
            return Err(format!("{} q={:?}: {:?} ({} failed)", v.name, v.q, v.status, v.failed));
        }
        cases += v.passed;
    }
    Ok(cases)
}

fn prime_powers(max: u64) -> Vec<u64> {
    (2..=max)
        .filter(|&q| {
            let p = (2..=q).find(|d| q % d == 0).unwrap();
            let mut m = q;
            while m % p == 0 {
                m /= p;
            }
            m == 1
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let small = go(ExperimentConfig::new(Command::Group).with_q(&[2, 3, 4, 5, 7]));
    let pairs = match all_pass(&small, &["trace_identity"]) {
        Ok(c) => c,
        Err(e) => return Outcome::plain(false, e),
    };
    let expected_pairs: u64 = [6u64, 24, 60, 120, 336].iter().map(|n| n * n).sum();
    if pairs != expected_pairs || small.verdicts_named("trace_identity").count() != 5 {
        return Outcome::plain(false, format!("trace identity covered {pairs} pairs, expected {expected_pairs}"));
    }
    let qs = prime_powers(64);
    let wide = go(ExperimentConfig::new(Command::Group).with_q(&qs));
    let scalar = all_pass(&wide, &["scalar_trace_identity"]);
    let trg = all_pass(&wide, &["tr_g_identity"]);
    let covered = wide.verdicts_named("tr_g_identity").filter(|v| v.status == Status::Pass).count()
        + wide.verdicts_named("scalar_trace_identity").filter(|v| v.status == Status::Pass).count();
    match (scalar, trg) {
        (Ok(s), Ok(t)) if covered == 2 * qs.len() => Outcome::plain(
            true,
            format!(
                "Tr(g)Tr(h) identity on {pairs} pairs (q<=7); scalar tr identity {s} cases and tr_g formula {t} cases over {} fields q<=64, zero violations",
                qs.len()
            ),
        ),
        (Err(e), _) | (_, Err(e)) => Outcome::plain(false, e),
        _ => Outcome::plain(false, "some field was skipped".into()),
    }
}

fn criterion_2() -> Outcome {
    let r = go(ExperimentConfig::new(Command::Setops).with_q(&[3, 5, 7]).with_trials(1000));
    let names = growthlab::battery::CHECKS;
    if let Err(e) = all_pass(&r, &names) {
        return Outcome::plain(false, e);
    }
    let thin = r.verdicts.iter().find(|v| v.passed < 1000);
    match thin {
        Some(v) => Outcome::plain(false, format!("{} q={:?} has only {} cases", v.name, v.q, v.passed)),
        None => Outcome::plain(
            true,
            format!("{} checks x 3 fields, >= 1000 seeded cases each, zero violations", names.len()),
        ),
    }
}

/// Exhaustive fibre-check violations over all ordered pairs, per `q`.
const FIBRE_VIOLATIONS: [(u64, usize, usize); 4] = [(3, 0, 120), (4, 240, 2340), (5, 480, 7560), (7, 5376, 75600)];

fn criterion_3() -> Outcome {
    let lemmas = Command::Lemmas { lemma: "all".into() };
    let exhaustive = go(ExperimentConfig::new(lemmas.clone()).with_q(&[2, 3, 4, 5, 7]).with_family("pairs"));
    let random = go(
        ExperimentConfig::new(lemmas)
            .with_q(&[8, 9, 11, 13])
            .with_family("random")
            .with_trials(10_000),
    );
    let required = [
        "semisimple_in_A3",
        "nonzero_trace_in_A3",
        "outside_subfield_A9",
        "outside_two_subgroups_A4",
        "diagonal_triple_product",
        "traces_of_quotients",
    ];
    let mut others_ok = true;
    let mut notes = Vec::new();
    for r in [&exhaustive, &random] {
        if let Err(e) = all_pass(r, &required) {
            others_ok = false;
            notes.push(e);
        }
        if let Err(e) = all_pass(r, &["fibre_multiplicity_disjoint_fix"]) {
            others_ok = false;
            notes.push(e);
        }
        for &q in &r.config.q {
            let prime = (2..q).all(|d| q % d != 0);
            let expected = required
                .iter()
                .chain(["fibre_multiplicity_disjoint_fix"].iter())
                .filter(|&&n| !(n == "outside_subfield_A9" && prime) && !(n == "diagonal_triple_product" && q <= 3));
            for name in expected {
                if r.verdict(name, Some(q)).is_none() {
                    others_ok = false;
                    notes.push(format!("no {name} verdict at q={q}"));
                }
            }
        }
    }

    let mut counts: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for row in exhaustive.table.rows.iter() {
        if row[2] == "fibre_all_pairs" && row[5] == "fibre_multiplicity" {
            let e = counts.entry(row[0].parse().unwrap()).or_default();
            e.1 += 1;
            e.0 += (row[7] == "false") as usize;
        }
    }
    let table_ok = FIBRE_VIOLATIONS.iter().all(|&(q, bad, total)| counts.get(&q) == Some(&(bad, total)));
    let fibre_fail: Vec<String> = [&exhaustive, &random]
        .iter()
        .flat_map(|r| r.verdicts_named("fibre_multiplicity"))
        .filter(|v| v.status == Status::Fail)
        .map(|v| format!("q={}: {}/{}", v.q.unwrap(), v.failed, v.total))
        .collect();
    let pass = others_ok && fibre_fail.is_empty();
    let detail = if others_ok {
        format!(
            "six explicit-constant bounds hold with zero violations; mult(F) <= 2 is violated ({}); it holds whenever Fix(g) and Fix(h) are disjoint",
            fibre_fail.join(", ")
        )
    } else {
        notes.join("; ")
    };
    Outcome {
        pass,
        expected: others_ok && table_ok,
        detail,
    }
}

fn criterion_4() -> Outcome {
    let a6 = go(
        ExperimentConfig::new(Command::Lemmas {
            lemma: "trace_generation_A6".into(),
        })
        .with_q(&[4, 8, 9, 16])
        .with_family("pairs"),
    );
    let a3 = go(
        ExperimentConfig::new(Command::Lemmas {
            lemma: "trace_generation_A3_odd".into(),
        })
        .with_q(&[9])
        .with_family("pairs"),
    );
    match (all_pass(&a6, &["trace_generation_A6"]), all_pass(&a3, &["trace_generation_A3_odd"])) {
        (Ok(c6), Ok(c3)) if a6.verdicts.len() == 4 && a3.verdicts.len() == 1 => Outcome::plain(
            true,
            format!("<Tr(A^[6])> = F_q for {c6} pair classes at q in {{4,8,9,16}}; <Tr(A^[3])> = F_9 for {c3}"),
        ),
        (Err(e), _) | (_, Err(e)) => Outcome::plain(false, e),
        _ => Outcome::plain(false, "missing verdicts".into()),
    }
}

fn eps_min(r: &Report) -> Vec<(u64, f64)> {
    r.summary["per_q"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p["q"].as_u64().unwrap(), p["summary"]["epsilon_min"].as_f64().unwrap_or(f64::NAN)))
        .collect()
}

fn criterion_5() -> Outcome {
    let r = go(ExperimentConfig::new(Command::Growth).with_q(&[3, 4, 5, 7]).with_family("pairs"));
    let eps = eps_min(&r);
    let positive = eps.iter().all(|&(_, e)| e > 0.0);
    let shown: Vec<String> = eps.iter().map(|(q, e)| format!("q={q}: {e:.4}")).collect();
    match all_pass(&r, &["growth_exponent_positive"]) {
        Ok(c) if positive && !r.truncated => Outcome::plain(
            true,
            format!("{c} non-saturated pair classes grow; eps_min {}", shown.join(", ")),
        ),
        Ok(_) => Outcome::plain(false, format!("eps_min not positive: {}", shown.join(", "))),
        Err(e) => Outcome::plain(false, e),
    }
}

fn criterion_6() -> Outcome {
    let r = go(ExperimentConfig::new(Command::Growth).with_q(&[2, 3, 4, 5, 7, 8, 9]).with_family("pairs"));
    let oracle = r
        .verdicts_named("diameter_oracle")
        .filter(|v| [2, 3, 5].contains(&v.q.unwrap()))
        .all(|v| v.status == Status::Pass && v.passed == 10);
    let table: Vec<String> = r.summary["diameter_table"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| format!("{}:{}", p[0], p[1]))
        .collect();
    let fit = &r.summary["polylog_fit"];
    Outcome::plain(
        oracle && table.len() == 7,
        format!(
            "BFS = naive closure depth on 10 sets per q in {{2,3,5}}; max pair diameter by |G| {}; fit C={:.3} d={:.3} (reported only)",
            table.join(" "),
            fit["c"].as_f64().unwrap_or(f64::NAN),
            fit["d"].as_f64().unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_7() -> Outcome {
    let mixing = go(
        ExperimentConfig::new(Command::Spectral {
            check: SpectralCheck::Mixing,
        })
        .with_q(&[3, 5, 7])
        .with_trials(1000),
    );
    let lambda = go(
        ExperimentConfig::new(Command::Spectral {
            check: SpectralCheck::Lambda2,
        })
        .with_q(&[3])
        .with_trials(50),
    );
    let bnp = go(
        ExperimentConfig::new(Command::Spectral {
            check: SpectralCheck::Bnp,
        })
        .with_q(&[5, 7])
        .with_trials(1000),
    );
    let checks = [
        all_pass(&mixing, &["mixing_l2", "mixing_linf_triple"]),
        all_pass(&lambda, &["lambda2_converged", "lambda2_dense_match"]),
        all_pass(&bnp, &["bnp_product", "bnp_pair"]),
    ];
    if let Some(Err(e)) = checks.iter().find(|c| c.is_err()) {
        return Outcome::plain(false, e.clone());
    }
    let diff = lambda.summary["per_q"][0]["result"]["max_abs_diff"].as_f64().unwrap();
    let ratio = |r: &Report, key: &str| {
        r.summary["per_q"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p["result"][key].as_f64().unwrap())
            .fold(0.0, f64::max)
    };
    Outcome::plain(
        true,
        format!(
            "L2 and L_inf mixing bounds on 3000 triples (max ratios {:.3}, {:.3}); lambda2 vs dense at N=24 max diff {diff:.1e}; BNP 2000 trials, zero failures",
            ratio(&mixing, "max_l2_ratio"),
            ratio(&mixing, "max_linf_ratio")
        ),
    )
}

fn criterion_8() -> Outcome {
    let r = go(
        ExperimentConfig::new(Command::Additive {
            experiment: Experiment::Almostfield,
        })
        .with_q(&[16, 64, 81])
        .with_trials(100),
    );
    let names = ["planted_subfield", "planted_dilated", "planted_plus_point", "permutation_invariance"];
    match (all_pass(&r, &names[..3]), all_pass(&r, &names[3..])) {
        (Ok(c), Ok(p)) if r.verdicts.len() == 12 => Outcome::plain(
            true,
            format!(
                "{c} planted cases at q in {{16,64,81}} detected with the right kind, {p} relabelled reruns agree"
            ),
        ),
        (Err(e), _) | (_, Err(e)) => Outcome::plain(false, e),
        _ => Outcome::plain(false, "missing verdicts".into()),
    }
}

fn criterion_9() -> Outcome {
    let configs = [
        ExperimentConfig::new(Command::Group).with_q(&[5]),
        ExperimentConfig::new(Command::Setops).with_q(&[5]).with_trials(200),
        ExperimentConfig::new(Command::Growth).with_q(&[5, 7]).with_family("pairs"),
        ExperimentConfig::new(Command::Lemmas { lemma: "all".into() })
            .with_q(&[9])
            .with_family("random")
            .with_trials(200),
        ExperimentConfig::new(Command::Additive {
            experiment: Experiment::Almostfield,
        })
        .with_q(&[64])
        .with_trials(20),
        ExperimentConfig::new(Command::Additive {
            experiment: Experiment::Expansion,
        })
        .with_q(&[27])
        .with_trials(50),
        ExperimentConfig::new(Command::Spectral {
            check: SpectralCheck::Mixing,
        })
        .with_q(&[5])
        .with_trials(100),
        ExperimentConfig::new(Command::Spectral {
            check: SpectralCheck::Lambda2,
        })
        .with_q(&[3])
        .with_trials(10),
        ExperimentConfig::new(Command::Spectral {
            check: SpectralCheck::Bnp,
        })
        .with_q(&[5])
        .with_trials(100),
    ];
    let mut differing = Vec::new();
    for cfg in &configs {
        let bodies: Vec<Vec<u8>> = [1, 2, 4]
            .iter()
            .map(|&k| go(cfg.clone().with_threads(k)).table.body_bytes().unwrap())
            .collect();
        if bodies.iter().any(|b| *b != bodies[0]) || bodies[0].is_empty() {
            differing.push(cfg.command.name());
        }
    }
    Outcome::plain(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} experiments give byte-identical CSV bodies on 1, 2 and 4 threads", configs.len())
        } else {
            format!("CSV bodies differ for {}", differing.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact identities", criterion_1),
        ("set-inequality batteries", criterion_2),
        ("explicit-constant lemmas", criterion_3),
        ("trace generation", criterion_4),
        ("growth scan", criterion_5),
        ("diameter", criterion_6),
        ("spectral", criterion_7),
        ("almost-field detection", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut regressions = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {} ({secs:.1}s)", k + 1, o.detail);
        if !o.expected {
            regressions.push(k + 1);
        }
    }
    if !regressions.is_empty() {
        eprintln!("criteria not in their recorded state: {regressions:?}");
        std::process::exit(1);
    }
}
