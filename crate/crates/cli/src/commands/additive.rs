use std::sync::Arc;

use growthlab::additive_lab::{
    dichotomy_family, expansion_cases, expansion_scan, planted_cases, prod_generation_scan,
    simultaneous_avoidance_scan, stability, sum_product_dichotomy_scan, tg_image_scan, trace_reduction_experiment,
    AlmostFieldDetector, PlantKind, Tally,
};
use growthlab::gf::FieldCtx;
use growthlab::setops::FieldSet;
use growthlab::sl2::Mode;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::growth::{family, family_spec};
use super::{join, opt, rng_for, s};
use crate::config::{Experiment, ExperimentConfig, Target};
use crate::report::{CsvTable, Outcome, Verdict};
use crate::CliError;

pub(crate) const EPS_GRID: [f64; 3] = [0.05, 0.1, 0.2];
/// The `ε` used to label planted almost fields.
const PLANT_EPS: f64 = 0.1;
const QUESTION_KMAX: usize = 12;

fn err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Experiment(e.to_string())
}

fn enum_name<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

pub(crate) fn run(
    cfg: &ExperimentConfig,
    targets: &[Target],
    experiment: Experiment,
    out: &mut Outcome,
) -> Result<(), CliError> {
    out.summary.insert("eps_grid".into(), json!(EPS_GRID));
    let mut per_q = Vec::new();
    for (k, t) in targets.iter().enumerate() {
        let f = t.field()?;
        let q = t.q();
        let mut rng = rng_for(cfg.seed, q);
        let first = k == 0;
        let summary = match experiment {
            Experiment::Stability => stability_run(cfg, &f, &mut rng, out, first)?,
            Experiment::Almostfield => almost_field_run(cfg, &f, &mut rng, out, first)?,
            Experiment::Dichotomy => dichotomy_run(cfg, &f, &mut rng, out, first)?,
            Experiment::Tracered => trace_reduction_run(cfg, &f, &mut rng, out, first)?,
            Experiment::Expansion => expansion_run(cfg, &f, &mut rng, out, first)?,
            Experiment::Questions => questions_run(cfg, t, &f, &mut rng, out, first)?,
        };
        per_q.push(json!({ "q": q, "result": summary }));
    }
    out.summary.insert("per_q".into(), json!(per_q));
    Ok(())
}

fn stability_run(
    cfg: &ExperimentConfig,
    f: &Arc<FieldCtx>,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
    first: bool,
) -> Result<Value, CliError> {
    if first {
        out.table = CsvTable::new(&["q", "set_id", "label", "size", "sum_set", "product_set", "eps_stable_min"]);
    }
    let q = f.q();
    let fam = dichotomy_family(f, cfg.trials.unwrap_or(60), rng);
    let mut least: Option<(f64, String)> = None;
    for (k, (label, a)) in fam.iter().enumerate() {
        let r = stability(a).map_err(err)?;
        if !label.starts_with("subfield") && least.as_ref().is_none_or(|l| r.eps_stable_min < l.0) {
            least = Some((r.eps_stable_min, label.clone()));
        }
        out.table.push(vec![
            s(q),
            s(k),
            label.clone(),
            s(r.size),
            s(r.doubling_sum),
            s(r.doubling_prod),
            s(r.eps_stable_min),
        ]);
    }
    Ok(json!({ "sets": fam.len(), "least_eps_stable_outside_subfields": least }))
}

fn almost_field_run(
    cfg: &ExperimentConfig,
    f: &Arc<FieldCtx>,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
    first: bool,
) -> Result<Value, CliError> {
    if first {
        out.table = CsvTable::new(&[
            "q",
            "kind",
            "case",
            "size",
            "planted_subfield",
            "best_subfield",
            "best_coset",
            "outside",
            "eps_field_min",
            "purity",
            "expected",
            "ok",
            "permutation_ok",
        ]);
    }
    let q = f.q() as u64;
    if f.n() == 1 {
        return Err(CliError::ConfigInvalid(format!("F_{q} has no proper subfield to plant")));
    }
    let det = AlmostFieldDetector::new(f).map_err(err)?;
    let count = cfg.trials.unwrap_or(100);
    let mut perm = Tally::default();
    for kind in PlantKind::ALL {
        let cases = planted_cases(f, kind, count, PLANT_EPS, rng);
        let mut tally = Tally::default();
        for (k, c) in cases.iter().enumerate() {
            let a = FieldSet::from_codes(f, c.codes.iter().copied());
            let r = det.detect(&a, PLANT_EPS).map_err(err)?;
            let mut shuffled = c.codes.clone();
            shuffled.shuffle(rng);
            let r2 = det.detect(&FieldSet::from_codes(f, shuffled), PLANT_EPS).map_err(err)?;
            let same = serde_json::to_string(&r)? == serde_json::to_string(&r2)?;
            let ok = r.purity == kind.expected();
            tally.record(Some(ok));
            perm.record(Some(same));
            out.table.push(vec![
                s(q),
                enum_name(&kind),
                s(k),
                s(r.size),
                s(c.subfield),
                s(r.best_subfield),
                s(r.best_coset),
                s(r.outside),
                s(r.eps_field_min),
                enum_name(&r.purity),
                enum_name(&kind.expected()),
                s(ok),
                s(same),
            ]);
        }
        out.verdicts.push(Verdict::tally(&format!("planted_{}", enum_name(&kind)), Some(q), &tally));
    }
    out.verdicts.push(Verdict::tally("permutation_invariance", Some(q), &perm));
    Ok(json!({ "eps": PLANT_EPS, "cases_per_kind": count }))
}

fn dichotomy_run(
    cfg: &ExperimentConfig,
    f: &Arc<FieldCtx>,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
    first: bool,
) -> Result<Value, CliError> {
    if first {
        out.table = CsvTable::new(&["q", "eps", "set_id", "label", "size", "eps_stable_min", "eps_field_min", "purity"]);
    }
    let q = f.q();
    let det = AlmostFieldDetector::new(f).map_err(err)?;
    let fam = dichotomy_family(f, cfg.trials.unwrap_or(60), rng);
    let mut reports = Vec::new();
    for eps in EPS_GRID {
        let r = sum_product_dichotomy_scan(&det, &fam, eps).map_err(err)?;
        for row in &r.rows {
            out.table.push(vec![
                s(q),
                s(eps),
                s(row.set_id),
                row.label.clone(),
                s(row.size),
                s(row.eps_stable_min),
                s(row.eps_field_min),
                enum_name(&row.purity),
            ]);
        }
        reports.push(json!({
            "eps": eps,
            "growth_margin": r.growth_margin,
            "field_side_max": r.field_side_max,
            "frontier": r.frontier,
        }));
    }
    Ok(json!({ "sets": fam.len(), "by_eps": reports }))
}

fn trace_reduction_run(
    cfg: &ExperimentConfig,
    f: &Arc<FieldCtx>,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
    first: bool,
) -> Result<Value, CliError> {
    if first {
        out.table = CsvTable::new(&[
            "q",
            "case",
            "x_codes",
            "a1",
            "a2",
            "tr_x",
            "twisted_traces",
            "k",
            "tr_z",
            "lhs",
            "exponent",
            "bg_trick",
            "chain",
            "plunnecke",
            "squares_inside",
            "final_bound",
        ]);
    }
    let q = f.q();
    if q < 3 {
        return Err(CliError::ConfigInvalid("trace reduction needs q >= 3".into()));
    }
    let trials = cfg.trials.unwrap_or(200);
    let names = ["bg_trick", "chain", "plunnecke", "squares_inside", "final_bound"];
    let mut tallies = [Tally::default(); 5];
    let mut max_exponent: Option<f64> = None;
    for k in 0..trials {
        let size = rng.gen_range(1..=(q as usize - 1).min(8));
        let x: Vec<u32> = sample(rng, q as usize - 1, size).into_iter().map(|i| i as u32 + 1).collect();
        let (a1, a2) = (rng.gen_range(1..q), rng.gen_range(1..q));
        let xs = FieldSet::from_codes(f, x);
        match trace_reduction_experiment(&xs, a1, a2) {
            Ok(r) => {
                let checks = [r.bg_trick, r.chain, r.plunnecke, r.squares_inside, r.final_bound];
                for (t, c) in tallies.iter_mut().zip(checks) {
                    t.record(Some(c));
                }
                if let Some(e) = r.exponent {
                    max_exponent = Some(max_exponent.map_or(e, |m| m.max(e)));
                }
                out.table.push(vec![
                    s(q),
                    s(k),
                    join(xs.codes()),
                    s(a1),
                    s(a2),
                    s(r.tr_x),
                    s(r.twisted_traces),
                    s(r.k),
                    s(r.tr_z),
                    s(r.lhs),
                    opt(r.exponent),
                    s(r.bg_trick),
                    s(r.chain),
                    s(r.plunnecke),
                    s(r.squares_inside),
                    s(r.final_bound),
                ]);
            }
            Err(_) => tallies.iter_mut().for_each(|t| t.record(None)),
        }
    }
    for (name, t) in names.iter().zip(&tallies) {
        out.verdicts.push(Verdict::tally(&format!("trace_reduction_{name}"), Some(q as u64), t));
    }
    Ok(json!({ "trials": trials, "max_exponent": max_exponent }))
}

fn expansion_run(
    cfg: &ExperimentConfig,
    f: &Arc<FieldCtx>,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
    first: bool,
) -> Result<Value, CliError> {
    if first {
        out.table = CsvTable::new(&[
            "q",
            "case",
            "x_codes",
            "g_code",
            "subfield",
            "prod_g",
            "tr_v",
            "products",
            "products_ok",
            "commutators",
            "commutator_ok",
            "fact_ok",
        ]);
    }
    let q = f.q() as u64;
    let group = growthlab::sl2::Sl2::new(f.clone(), Mode::Sl);
    let cases = expansion_cases(&group, cfg.trials.unwrap_or(300), rng);
    let (reports, summary) = expansion_scan(&group, &cases).map_err(err)?;
    for (k, r) in reports.iter().enumerate() {
        out.table.push(vec![
            s(q),
            s(k),
            join(&r.x_codes),
            s(r.g.code()),
            s(r.subfield),
            s(r.prod_g),
            s(r.tr_v),
            opt(r.products),
            opt(r.products_ok),
            opt(r.commutators),
            opt(r.commutator_ok),
            opt(r.fact_ok),
        ]);
    }
    out.verdicts.push(Verdict::tally("expansion_products", Some(q), &summary.products));
    out.verdicts.push(Verdict::tally("expansion_commutators", Some(q), &summary.commutators));
    out.verdicts.push(Verdict::tally("expansion_fact", Some(q), &summary.fact));
    Ok(json!({
        "worst_products_ratio": summary.worst_products,
        "worst_commutators_ratio": summary.worst_commutators,
    }))
}

fn questions_run(
    cfg: &ExperimentConfig,
    t: &Target,
    f: &Arc<FieldCtx>,
    rng: &mut ChaCha8Rng,
    out: &mut Outcome,
    first: bool,
) -> Result<Value, CliError> {
    if first {
        out.table = CsvTable::new(&["q", "question", "id", "input", "value", "detail"]);
    }
    let q = f.q() as u64;
    let trials = cfg.trials.unwrap_or(100);
    let table = t.table(Mode::Sl)?;
    let default = if table.len() <= 400 { "pairs" } else { "random" };
    let spec = family_spec(cfg.family.as_deref(), default, trials)?;
    let members = family(&table, &spec, rng)?;
    let (prod_rows, prod_summary) = prod_generation_scan(&members, QUESTION_KMAX);
    let (avoid_rows, avoid_summary) = simultaneous_avoidance_scan(&members, QUESTION_KMAX);
    for (name, rows) in [("prod_generation", &prod_rows), ("simultaneous_avoidance", &avoid_rows)] {
        for r in rows {
            out.table.push(vec![s(q), s(name), s(r.set_id), join(&r.codes), opt(r.k), String::new()]);
        }
    }
    let tg = tg_image_scan(f, trials, rng);
    let mut least_exponent: Option<f64> = None;
    for r in &tg {
        if let Some(e) = r.exponent {
            least_exponent = Some(least_exponent.map_or(e, |m| m.min(e)));
        }
        out.table.push(vec![
            s(q),
            s("tg_image"),
            s(r.sample_id),
            format!("t={} x1={} x2={}", r.t, r.x1, r.x2),
            s(r.image),
            format!("n={} max_fibre={} exponent={}", r.n, r.max_fibre, opt(r.exponent)),
        ]);
    }
    Ok(json!({
        "family": spec,
        "kmax": QUESTION_KMAX,
        "prod_generation": prod_summary,
        "simultaneous_avoidance": avoid_summary,
        "tg_image_least_exponent": least_exponent,
    }))
}
