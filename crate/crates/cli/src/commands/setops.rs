use growthlab::battery::set_battery;
use serde_json::json;

use super::{rng_for, s};
use crate::config::{ExperimentConfig, Target};
use crate::report::{CsvTable, Outcome, Verdict};
use crate::CliError;

const MAX_SET: usize = 12;

pub(crate) fn run(cfg: &ExperimentConfig, targets: &[Target], out: &mut Outcome) -> Result<(), CliError> {
    out.table = CsvTable::new(&["q", "case", "check", "n", "lhs", "rhs", "ok"]);
    let cases = cfg.trials.unwrap_or(1000);
    for t in targets {
        let q = t.q();
        let table = t.table(cfg.mode)?;
        let mut rng = rng_for(cfg.seed, q);
        let (rows, tallies) = set_battery(&table, cases, MAX_SET, &mut rng);
        for r in rows {
            out.table.push(vec![s(q), s(r.case), s(r.check), s(r.n), s(r.lhs), s(r.rhs), s(r.ok)]);
        }
        for (name, tally) in tallies {
            out.verdicts.push(Verdict::tally(name, Some(q), &tally));
        }
    }
    out.summary.insert("cases_per_field".into(), json!(cases));
    out.summary.insert("max_set_size".into(), json!(MAX_SET));
    Ok(())
}
