use growthlab::growth::{cayley_diameter, naive_diameter, random_generating_set, random_set};
use growthlab::sl2::{ElementClass, Mat2, Mode};
use growthlab::spectral::ProbVec;
use rand::Rng;

use super::{rng_for, s};
use crate::config::{ExperimentConfig, Target};
use crate::report::{CsvTable, Outcome, Verdict};
use crate::CliError;

const DIAMETER_SETS: usize = 10;
const PRODUCT_PAIRS: usize = 20;

pub(crate) fn run(cfg: &ExperimentConfig, targets: &[Target], out: &mut Outcome) -> Result<(), CliError> {
    out.table = CsvTable::new(&["q", "check", "cases", "mismatches"]);
    for t in targets {
        let q = t.q();
        let f = t.field()?;
        let table = t.table(Mode::Sl)?;
        let grp = table.group();
        let mut rng = rng_for(cfg.seed, q);
        let mut checks: Vec<(&str, Vec<bool>)> = Vec::new();

        let n = f.n() as usize;
        checks.push(("field_codec", f.elements().map(|x| f.from_digits(&f.digits(x)[..n]) == x).collect()));

        checks.push((
            "group_codec",
            (0..table.len() as u32)
                .map(|i| {
                    let m = table.elem(i);
                    Mat2::from_code(m.code()) == *m && table.index_of(m) == Some(i) && table.code(i) == m.code()
                })
                .collect(),
        ));

        let mut diam = Vec::new();
        for _ in 0..DIAMETER_SETS {
            let size = rng.gen_range(2..=3);
            let set = random_generating_set(&table, size, &mut rng).map_err(|e| CliError::Experiment(e.to_string()))?;
            let fast = cayley_diameter(&set).map(|d| d.diam).ok();
            diam.push(fast.is_some() && fast == naive_diameter(&set).ok());
        }
        checks.push(("bfs_vs_naive_diameter", diam));

        let mut conv = Vec::new();
        for _ in 0..PRODUCT_PAIRS {
            let a = random_set(&table, rng.gen_range(1..=8), &mut rng);
            let b = random_set(&table, rng.gen_range(1..=8), &mut rng);
            let c = ProbVec::uniform_on(&a).convolve(&ProbVec::uniform_on(&b));
            conv.push(c.is_ok_and(|c| c.support() == a.product(&b).unwrap().indices()));
        }
        checks.push(("convolution_vs_product", conv));

        let mut diag = Vec::new();
        for i in 0..table.len() as u32 {
            let g = table.elem(i);
            if grp.classify(g) != ElementClass::Semisimple {
                continue;
            }
            let ok = grp.diagonalize(g).is_ok_and(|d| {
                grp.conj_ext(g, &d.w, &d.w_inv).is_ok_and(|m| m == Mat2::new(d.x, 0, 0, d.x_inv))
            });
            diag.push(ok);
        }
        checks.push(("diagonalization", diag));

        let psl = t.table(Mode::Psl)?;
        let factor = if t.p == 2 { 1 } else { 2 };
        checks.push(("psl_order", vec![psl.len() * factor == table.len()]));

        for (name, results) in checks {
            let bad = results.iter().filter(|&&ok| !ok).count() as u64;
            out.table.push(vec![s(q), s(name), s(results.len()), s(bad)]);
            out.verdicts.push(Verdict::counts(name, Some(q), results.len() as u64 - bad, bad, 0));
        }
    }
    Ok(())
}
