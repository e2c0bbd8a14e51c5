use std::collections::BTreeMap;

use growthlab::additive_lab::{scalar_trace_identity, tr_g_identity, tr_g_test_elements};
use growthlab::battery::group_trace_identity;
use growthlab::sl2::{GroupTable, Mode, CAYLEY_LIMIT};
use rand::Rng;
use serde_json::json;

use super::{join, opt, rng_for, s};
use crate::config::{ExperimentConfig, Target};
use crate::report::{CsvTable, Outcome, Verdict};
use crate::CliError;

const FIELD_ROWS: u32 = 1024;
const EXHAUSTIVE: u64 = 1 << 16;
const SCALAR_IDENTITY_LIMIT: u64 = 4096;
const TR_G_LIMIT: u64 = 64;

pub(crate) fn field(cfg: &ExperimentConfig, targets: &[Target], out: &mut Outcome) -> Result<(), CliError> {
    out.table = CsvTable::new(&["q", "code", "coefficients", "inverse", "log", "min_degree", "frobenius"]);
    let trials = cfg.trials.unwrap_or(1000);
    for t in targets {
        let f = t.field()?;
        let q = t.q();
        let qs = Some(q);
        let n = f.n() as usize;
        let mut rng = rng_for(cfg.seed, q);
        for x in 0..f.q().min(FIELD_ROWS) {
            out.table.push(vec![
                s(q),
                s(x),
                join(&f.digits(x)[..n]),
                opt(f.inv(x).ok()),
                opt(if f.has_tables() { f.log(x).ok() } else { None }),
                s(f.min_degree(x)),
                s(f.frobenius(x)),
            ]);
        }

        let units: Vec<u32> = if q <= EXHAUSTIVE {
            (1..f.q()).collect()
        } else {
            (0..trials).map(|_| rng.gen_range(1..f.q())).collect()
        };
        out.verdicts.push(Verdict::outcomes(
            "inverse_roundtrip",
            qs,
            units.iter().map(|&x| Some(f.mul(x, f.inv(x).unwrap()) == 1)),
        ));

        let triples: Vec<[u32; 3]> = (0..trials)
            .map(|_| [rng.gen_range(0..f.q()), rng.gen_range(0..f.q()), rng.gen_range(0..f.q())])
            .collect();
        out.verdicts.push(Verdict::outcomes(
            "distributivity",
            qs,
            triples
                .iter()
                .map(|&[a, b, c]| Some(f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)))),
        ));
        let fr = |x| f.frobenius(x);
        out.verdicts.push(Verdict::outcomes(
            "frobenius_homomorphism",
            qs,
            triples
                .iter()
                .map(|&[a, b, _]| Some(fr(f.mul(a, b)) == f.mul(fr(a), fr(b)) && fr(f.add(a, b)) == f.add(fr(a), fr(b)))),
        ));

        if q <= EXHAUSTIVE {
            let p = f.p() as u64;
            out.verdicts.push(Verdict::outcomes(
                "subfield_census",
                qs,
                f.subfield_degrees().into_iter().map(|d| {
                    let count = f.elements().filter(|&x| f.in_subfield(x, d)).count() as u64;
                    Some(count == p.pow(d))
                }),
            ));
        } else {
            out.verdicts.push(Verdict::skipped("subfield_census", qs, "field too large to enumerate"));
        }

        out.verdicts.push(scalar_identity(&f, q));
    }
    out.summary.insert("rows_per_field_cap".into(), json!(FIELD_ROWS));
    Ok(())
}

fn scalar_identity(f: &growthlab::gf::FieldCtx, q: u64) -> Verdict {
    if q > SCALAR_IDENTITY_LIMIT {
        return Verdict::skipped("scalar_trace_identity", Some(q), "field too large for all pairs");
    }
    let r = scalar_trace_identity(f);
    Verdict::counts("scalar_trace_identity", Some(q), r.cases - r.violations, r.violations, 0)
}

fn element_order(t: &GroupTable, g: u32) -> u64 {
    let mut x = g;
    let mut k = 1;
    while x != t.identity() {
        x = t.mul(x, g);
        k += 1;
    }
    k
}

pub(crate) fn group(cfg: &ExperimentConfig, targets: &[Target], out: &mut Outcome) -> Result<(), CliError> {
    out.table = CsvTable::new(&["q", "mode", "class", "rep_code", "size", "trace", "kind", "order"]);
    let mode = cfg.mode;
    let mode_name = match mode {
        Mode::Sl => "sl",
        Mode::Psl => "psl",
    };
    let mut orders = Vec::new();
    for t in targets {
        let q = t.q();
        let qs = Some(q);
        let grp = t.group(mode)?;
        let order = grp.order();
        orders.push(json!({ "q": q, "order": order, "classes": serde_json::Value::Null }));
        if order <= CAYLEY_LIMIT as u64 {
            let tb = t.table(mode)?;
            out.verdicts.push(Verdict::outcomes("order_formula", qs, [Some(tb.len() as u64 == order)]));

            let classes = tb.conjugacy_classes();
            let mut sizes: BTreeMap<u32, (u32, u64)> = BTreeMap::new();
            for (g, &c) in classes.iter().enumerate() {
                sizes.entry(c).or_insert((g as u32, 0)).1 += 1;
            }
            for (c, (rep, size)) in &sizes {
                out.table.push(vec![
                    s(q),
                    s(mode_name),
                    s(c),
                    s(tb.code(*rep)),
                    s(size),
                    s(tb.trace(*rep)),
                    format!("{:?}", tb.classify(*rep)).to_lowercase(),
                    s(element_order(&tb, *rep)),
                ]);
            }
            *orders.last_mut().unwrap() = json!({ "q": q, "order": order, "classes": sizes.len() });

            let (sl, psl) = match mode {
                Mode::Sl => (tb.clone(), t.table(Mode::Psl)?),
                Mode::Psl => (t.table(Mode::Sl)?, tb.clone()),
            };
            let factor = if t.p == 2 { 1 } else { 2 };
            out.verdicts.push(
                Verdict::outcomes("psl_order", qs, [Some(psl.len() * factor == sl.len())])
                    .with_detail(json!({ "sl": sl.len(), "psl": psl.len() })),
            );

            if mode == Mode::Sl {
                let r = group_trace_identity(&tb);
                out.verdicts.push(Verdict::counts("trace_identity", qs, r.cases - r.violations, r.violations, 0));
            } else {
                out.verdicts.push(Verdict::skipped("trace_identity", qs, "traces are defined up to sign in PSL"));
            }
        } else {
            for name in ["order_formula", "psl_order", "trace_identity"] {
                out.verdicts.push(Verdict::skipped(name, qs, "group larger than the table limit"));
            }
        }

        let f = t.field()?;
        out.verdicts.push(scalar_identity(&f, q));
        if q <= TR_G_LIMIT {
            let sl = t.group(Mode::Sl)?;
            let gs = tr_g_test_elements(&sl, 16);
            let r = tr_g_identity(&sl, &gs);
            out.verdicts.push(
                Verdict::counts("tr_g_identity", qs, r.cases - r.violations, r.violations, 0)
                    .with_detail(json!({ "g_count": gs.len(), "all_of_sl2": q <= 16 })),
            );
        } else {
            out.verdicts.push(Verdict::skipped("tr_g_identity", qs, "q above the identity sweep limit"));
        }
    }
    out.summary.insert("orders".into(), json!(orders));
    Ok(())
}
