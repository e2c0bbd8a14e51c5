use growthlab::growth::FamilySpec;
use growthlab::lemma_lab::{
    exhaustive_diagonal_rows, exhaustive_fibre_rows, fold_verdicts, random_diagonal_rows, verify_family, LabOptions,
    LemmaId, LemmaLab, LemmaRow,
};
use serde_json::json;

use super::growth::{family, family_spec, mode_name};
use super::{join, rng_for, s};
use crate::config::{ExperimentConfig, Target};
use crate::report::{CsvTable, Outcome, Verdict};
use crate::CliError;

/// Groups up to this order default to all generating pairs.
const PAIRS_DEFAULT_LIMIT: usize = 400;
/// Exhaustive fibre pairs up to this group order.
const FIBRE_EXHAUSTIVE_LIMIT: usize = 360;
/// Exhaustive diagonal subsets up to this field order.
const DIAGONAL_EXHAUSTIVE_Q: u64 = 9;
const DIAGONAL_RANDOM: usize = 1000;

fn parse_lemma(name: &str) -> Result<Option<Vec<LemmaId>>, CliError> {
    if name == "all" {
        return Ok(None);
    }
    LemmaId::ALL
        .iter()
        .find(|l| l.name() == name)
        .map(|&l| Some(vec![l]))
        .ok_or_else(|| {
            let names: Vec<&str> = LemmaId::ALL.iter().map(|l| l.name()).collect();
            CliError::ConfigInvalid(format!("unknown lemma {name:?}; expected all or one of {}", names.join(", ")))
        })
}

pub(crate) fn run(cfg: &ExperimentConfig, targets: &[Target], lemma: &str, out: &mut Outcome) -> Result<(), CliError> {
    let only = parse_lemma(lemma)?;
    out.table = CsvTable::new(&["q", "mode", "source", "set_id", "set_codes", "lemma", "value", "ok"]);
    let trials = cfg.trials.unwrap_or(10_000);
    let mut per_q = Vec::new();
    for t in targets {
        let q = t.q();
        let table = t.table(cfg.mode)?;
        let mut rng = rng_for(cfg.seed, q);
        let default = if table.len() <= PAIRS_DEFAULT_LIMIT { "pairs" } else { "random" };
        let spec = family_spec(cfg.family.as_deref(), default, trials)?;
        let members = family(&table, &spec, &mut rng)?;
        let mut opts = LabOptions::for_table(&table);
        opts.only = only.clone();
        let lab = LemmaLab::new(table.clone(), opts);

        let (run, _) = verify_family(&lab, &members, cfg.budget);
        out.truncated |= run.truncated;
        let mut sources: Vec<(&str, Vec<LemmaRow>)> = vec![("family", run.rows)];
        let exhaustive = !matches!(spec, FamilySpec::Random { .. });
        let wants_fibre = lab.wants(LemmaId::FibreMultiplicity) || lab.wants(LemmaId::FibreMultiplicityDisjoint);
        if !run.truncated && exhaustive && wants_fibre && table.len() <= FIBRE_EXHAUSTIVE_LIMIT {
            let rows = exhaustive_fibre_rows(&lab)
                .into_iter()
                .map(|mut r| {
                    r.cases.retain(|c| lab.wants(c.lemma));
                    r
                })
                .collect();
            sources.push(("fibre_all_pairs", rows));
        }
        if !run.truncated && lab.wants(LemmaId::DiagonalTriple) && q > 2 {
            if q <= DIAGONAL_EXHAUSTIVE_Q {
                sources.push(("diagonal_all_subsets", exhaustive_diagonal_rows(&lab)));
            } else {
                sources.push(("diagonal_random", random_diagonal_rows(&lab, DIAGONAL_RANDOM, &mut rng)));
            }
        }

        for (source, rows) in &sources {
            for r in rows {
                let codes = join(&r.codes);
                for c in &r.cases {
                    out.table.push(vec![
                        s(q),
                        s(mode_name(cfg.mode)),
                        s(source),
                        s(r.set_id),
                        codes.clone(),
                        s(c.lemma.name()),
                        s(c.value),
                        s(c.ok),
                    ]);
                }
            }
        }
        let all: Vec<LemmaRow> = sources.into_iter().flat_map(|(_, r)| r).collect();
        for v in fold_verdicts(&all) {
            out.verdicts.push(
                Verdict::counts(v.name, Some(q), v.cases - v.violations, v.violations, v.skipped).with_detail(json!({
                    "statement": v.statement,
                    "kind": v.kind,
                    "bound": v.bound,
                    "worst": v.worst,
                    "worst_set": v.worst_set,
                    "worst_codes": v.worst_codes.map(|c| join(&c)),
                })),
            );
        }
        per_q.push(json!({
            "q": q,
            "group_order": table.len(),
            "family": spec,
            "family_size": members.len(),
            "subgroups_tested": lab.subgroups().len(),
        }));
    }
    out.summary.insert("per_q".into(), json!(per_q));
    Ok(())
}
