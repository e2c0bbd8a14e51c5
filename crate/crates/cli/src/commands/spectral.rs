use std::sync::Arc;

use growthlab::additive_lab::Tally;
use growthlab::growth::random_set;
use growthlab::sl2::GroupTable;
use growthlab::spectral::{
    bnp_generation_check, lambda2_dense, lambda2_estimate, m2_multiplicity_check, mixing_battery, within, GroupProfile,
    ProbVec, SpectralError, DENSE_LIMIT,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{join, opt, rng_for, s};
use crate::config::{ExperimentConfig, SpectralCheck, Target};
use crate::report::{CsvTable, Outcome, Verdict};
use crate::CliError;

/// Largest group order for the spectral checks.
const SPECTRAL_CAP: usize = 10_000;
const DENSE_MATCH: f64 = 1e-8;
const NORM_IDENTITY: f64 = 1e-12;

fn err(e: SpectralError) -> CliError {
    CliError::Experiment(e.to_string())
}

pub(crate) fn run(
    cfg: &ExperimentConfig,
    targets: &[Target],
    check: SpectralCheck,
    out: &mut Outcome,
) -> Result<(), CliError> {
    out.table = match check {
        SpectralCheck::Mixing => CsvTable::new(&["q", "trial", "l2_lhs", "l2_rhs", "l2_ok", "linf_lhs", "linf_rhs", "linf_ok"]),
        SpectralCheck::Lambda2 => CsvTable::new(&[
            "q",
            "trial",
            "support",
            "lambda2",
            "iterations",
            "residual",
            "lambda2_dense",
            "abs_diff",
        ]),
        SpectralCheck::Bnp => CsvTable::new(&["q", "trial", "sizes", "product", "product_ok", "pair", "pair_ok"]),
        SpectralCheck::M2 => CsvTable::new(&["q", "trial", "support", "min_multiplicity", "m", "clusters", "ok"]),
    };
    let mut per_q = Vec::new();
    for t in targets {
        let q = t.q();
        let table = t.table(cfg.mode)?;
        if table.len() > SPECTRAL_CAP {
            return Err(CliError::ConfigInvalid(format!("group order {} above {SPECTRAL_CAP}", table.len())));
        }
        let profile = GroupProfile::from_table(&table);
        let mut rng = rng_for(cfg.seed, q);
        let summary = match check {
            SpectralCheck::Mixing => mixing(cfg, &table, &profile, &mut rng, out)?,
            SpectralCheck::Lambda2 => lambda2(cfg, &table, &profile, &mut rng, out)?,
            SpectralCheck::Bnp => bnp(cfg, &table, &profile, &mut rng, out),
            SpectralCheck::M2 => m2(cfg, &table, &profile, &mut rng, out)?,
        };
        per_q.push(json!({ "q": q, "profile": profile, "result": summary }));
    }
    out.summary.insert("per_q".into(), json!(per_q));
    out.summary.insert("relative_slack".into(), json!(growthlab::spectral::RELATIVE_SLACK));
    Ok(())
}

/// Uniform on a random subset, or random weights on a random support.
fn random_vec(t: &Arc<GroupTable>, rng: &mut ChaCha8Rng, uniform: bool) -> ProbVec {
    let size = rng.gen_range(1..=t.len());
    if uniform {
        ProbVec::uniform_on(&random_set(t, size, rng))
    } else {
        ProbVec::random(t, size, rng)
    }
}

fn mixing(
    cfg: &ExperimentConfig,
    t: &Arc<GroupTable>,
    profile: &GroupProfile,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
) -> Result<Value, CliError> {
    let q = profile.q as u64;
    let (verdicts, s_) = mixing_battery(t, profile, cfg.trials.unwrap_or(1000), rng).map_err(err)?;
    for (k, v) in verdicts.iter().enumerate() {
        out.table.push(vec![
            s(q),
            s(k),
            s(v.l2_lhs),
            s(v.l2_rhs),
            s(v.l2_ok),
            opt(v.linf_lhs),
            opt(v.linf_rhs),
            opt(v.linf_ok),
        ]);
    }
    out.verdicts.push(Verdict::tally("mixing_l2", Some(q), &s_.l2));
    out.verdicts.push(Verdict::tally("mixing_linf_triple", Some(q), &s_.linf));
    Ok(json!({ "max_l2_ratio": s_.max_l2_ratio, "max_linf_ratio": s_.max_linf_ratio, "even_q_flag": profile.even_q }))
}

fn lambda2(
    cfg: &ExperimentConfig,
    t: &Arc<GroupTable>,
    profile: &GroupProfile,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
) -> Result<Value, CliError> {
    let q = profile.q as u64;
    let n = t.len();
    let trials = cfg.trials.unwrap_or(20);
    let names = [
        "lambda2_converged",
        "lambda2_dense_match",
        "lambda_contraction",
        "lambda_gain_bound",
        "norm_identity",
        "young_inf_2_2",
    ];
    let mut tallies = [Tally::default(); 6];
    let (mut max_diff, mut max_iter) = (0.0f64, 0usize);
    for k in 0..trials {
        let x = random_vec(t, rng, k % 2 == 0);
        let y = random_vec(t, rng, k % 2 == 1);
        let (est, iterations, residual, converged) = match lambda2_estimate(&x) {
            Ok(l) => (l.value, l.iterations, l.residual, true),
            Err(SpectralError::NoConvergence {
                estimate,
                residual,
                iterations,
            }) => (estimate, iterations, residual, false),
            Err(e) => return Err(err(e)),
        };
        max_iter = max_iter.max(iterations);
        tallies[0].record(Some(converged));
        let dense = if n <= DENSE_LIMIT { Some(lambda2_dense(&x).map_err(err)?) } else { None };
        let diff = dense.map(|d| (d - est).abs());
        if let Some(d) = diff {
            max_diff = max_diff.max(d);
        }
        tallies[1].record(diff.map(|d| d <= DENSE_MATCH));
        let xy = x.convolve(&y).map_err(err)?;
        tallies[2].record(Some(within(xy.dist_uniform(), est * y.dist_uniform())));
        tallies[3].record(Some(within(est, profile.gain() * x.dist_uniform())));
        let lhs = y.dist_uniform().powi(2);
        let rhs = y.l2().powi(2) - 1.0 / n as f64;
        tallies[4].record(Some((lhs - rhs).abs() <= NORM_IDENTITY));
        tallies[5].record(Some(within(xy.linf(), x.l2() * y.l2())));
        out.table.push(vec![
            s(q),
            s(k),
            s(x.support().len()),
            s(est),
            s(iterations),
            s(residual),
            opt(dense),
            opt(diff),
        ]);
    }
    for (name, tally) in names.iter().zip(&tallies) {
        out.verdicts.push(Verdict::tally(name, Some(q), tally));
    }
    Ok(json!({ "max_abs_diff": max_diff, "max_iterations": max_iter, "dense": n <= DENSE_LIMIT }))
}

fn bnp(
    cfg: &ExperimentConfig,
    t: &Arc<GroupTable>,
    profile: &GroupProfile,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
) -> Value {
    let q = profile.q as u64;
    let (rows, summary) = bnp_generation_check(t, profile, cfg.trials.unwrap_or(1000), rng);
    for r in &rows {
        out.table.push(vec![
            s(q),
            s(r.trial),
            join(&r.sizes),
            s(r.product),
            s(r.product_ok),
            s(r.pair),
            s(r.pair_ok),
        ]);
    }
    out.verdicts.push(Verdict::tally("bnp_product", Some(q), &summary.product));
    out.verdicts.push(Verdict::tally("bnp_pair", Some(q), &summary.pair));
    json!({ "trials": rows.len(), "m": profile.m, "even_q_flag": profile.even_q })
}

fn m2(
    cfg: &ExperimentConfig,
    t: &Arc<GroupTable>,
    profile: &GroupProfile,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
) -> Result<Value, CliError> {
    let q = profile.q as u64;
    if t.len() > DENSE_LIMIT {
        out.verdicts.push(Verdict::skipped("m2_multiplicity", Some(q), "group above the dense limit"));
        return Ok(Value::Null);
    }
    let mut tally = Tally::default();
    let mut least: Option<usize> = None;
    for k in 0..cfg.trials.unwrap_or(20) {
        let x = random_vec(t, rng, k % 2 == 0);
        let r = m2_multiplicity_check(&x, profile).map_err(err)?;
        tally.record(Some(r.ok));
        least = Some(least.map_or(r.min_multiplicity, |l| l.min(r.min_multiplicity)));
        let clusters: Vec<String> = r.clusters.iter().map(|(v, m)| format!("{v:.10}:{m}")).collect();
        out.table.push(vec![
            s(q),
            s(k),
            s(x.support().len()),
            s(r.min_multiplicity),
            s(r.m),
            clusters.join(" "),
            s(r.ok),
        ]);
    }
    out.verdicts.push(Verdict::tally("m2_multiplicity", Some(q), &tally));
    Ok(json!({ "least_multiplicity": least, "m": profile.m }))
}
