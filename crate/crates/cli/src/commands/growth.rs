use std::sync::Arc;

use growthlab::growth::{
    build_family, cayley_diameter, fit_polylog, growth_scan, naive_diameter, random_generating_set, FamilySpec, Member,
};
use growthlab::sl2::{GroupTable, Mode};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{join, opt, rng_for, s};
use crate::config::{ExperimentConfig, Target};
use crate::report::{CsvTable, Outcome, Verdict};
use crate::CliError;

pub(crate) const RANDOM_SIZES: [usize; 5] = [2, 3, 5, 10, 20];
const ORACLE_SETS: usize = 10;

/// `pairs` (up to conjugacy, weighted), `allpairs` or `random`.
pub(crate) fn family_spec(name: Option<&str>, default: &str, trials: usize) -> Result<FamilySpec, CliError> {
    match name.unwrap_or(default) {
        "pairs" => Ok(FamilySpec::PairsModConjugacy),
        "allpairs" => Ok(FamilySpec::AllPairs),
        "random" => Ok(FamilySpec::Random {
            sizes: RANDOM_SIZES.to_vec(),
            count: trials.div_ceil(RANDOM_SIZES.len()).max(1),
        }),
        other => Err(CliError::ConfigInvalid(format!(
            "unknown family {other:?}, expected pairs, allpairs or random"
        ))),
    }
}

pub(crate) fn family(
    table: &Arc<GroupTable>,
    spec: &FamilySpec,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Member>, CliError> {
    build_family(table, spec, rng).map_err(|e| CliError::Experiment(e.to_string()))
}

pub(crate) fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Sl => "sl",
        Mode::Psl => "psl",
    }
}

pub(crate) fn run(cfg: &ExperimentConfig, targets: &[Target], out: &mut Outcome) -> Result<(), CliError> {
    out.table = CsvTable::new(&[
        "q", "mode", "set_id", "set_codes", "|A|", "|A3|", "epsilon", "diam", "diam_plus", "saturated",
    ]);
    let trials = cfg.trials.unwrap_or(100);
    let mut per_q = Vec::new();
    let mut points = Vec::new();
    for t in targets {
        let q = t.q();
        let qs = Some(q);
        let table = t.table(cfg.mode)?;
        let mut rng = rng_for(cfg.seed, q);
        let spec = family_spec(cfg.family.as_deref(), "pairs", trials)?;
        let members = family(&table, &spec, &mut rng)?;
        let (run, summary) = growth_scan(&members, cfg.budget);
        out.truncated |= run.truncated;
        for r in &run.rows {
            out.table.push(vec![
                s(q),
                s(mode_name(cfg.mode)),
                s(r.set_id),
                join(&r.codes),
                s(r.size_a),
                s(r.size_a3),
                opt(r.epsilon),
                s(r.diam),
                s(r.diam_plus),
                s(r.saturated),
            ]);
        }
        out.verdicts.push(Verdict::outcomes(
            "growth_exponent_positive",
            qs,
            run.rows.iter().map(|r| match (r.saturated, r.epsilon) {
                (false, Some(e)) => Some(e > 0.0),
                _ => None,
            }),
        ));

        let oracle: Vec<Option<bool>> = (0..ORACLE_SETS)
            .map(|_| {
                let size = rng.gen_range(2..=3);
                let set = random_generating_set(&table, size, &mut rng).map_err(|e| CliError::Experiment(e.to_string()))?;
                let fast = cayley_diameter(&set).map_err(|e| CliError::Experiment(e.to_string()))?;
                let slow = naive_diameter(&set).map_err(|e| CliError::Experiment(e.to_string()))?;
                Ok(Some(fast.diam == slow))
            })
            .collect::<Result<_, CliError>>()?;
        out.verdicts.push(Verdict::outcomes("diameter_oracle", qs, oracle));

        let ratio_plus = run
            .rows
            .iter()
            .map(|r| r.diam_plus as f64 / (2 * r.diam + 1) as f64)
            .fold(0.0, f64::max);
        if !run.rows.is_empty() {
            points.push((table.len() as u64, summary.diam_max));
        }
        per_q.push(json!({
            "q": q,
            "group_order": table.len(),
            "family": spec,
            "summary": summary,
            "max_diam_plus_over_2diam_plus_1": ratio_plus,
        }));
    }
    out.summary.insert("per_q".into(), json!(per_q));
    out.summary.insert("diameter_table".into(), json!(points));
    out.summary.insert("polylog_fit".into(), json!(fit_polylog(&points)));
    Ok(())
}
