//! Seeded batteries of set inequalities and the group trace identity.
//!
//! Every inequality is checked in integer form, e.g. `|A^[n]| <= K^{n-2}|A|`
//! with `K = |A^[3]|/|A|` becomes `|A^[n]| |A|^{n-3} <= |A^[3]|^{n-2}`.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::additive_lab::{IdentityReport, Tally};
use crate::gf::FieldCtx;
use crate::growth::{random_generating_set, random_set};
use crate::setops::{FieldSet, GroupSet};
use crate::sl2::GroupTable;

pub const CHECKS: [&str; 9] = [
    "ruzsa_triangle",
    "distance_triangle",
    "distance_symmetric",
    "distance_nonnegative",
    "doubling_to_minus",
    "tripling_chain",
    "containment",
    "plunnecke_sum",
    "plunnecke_minus",
];

#[derive(Debug, Clone, Serialize)]
pub struct BatteryRow {
    pub case: u64,
    pub check: &'static str,
    /// Free parameter of the check (`n` for chains), 0 otherwise.
    pub n: usize,
    pub lhs: u128,
    pub rhs: u128,
    pub ok: bool,
}

struct Input {
    a: GroupSet,
    b: GroupSet,
    c: GroupSet,
    gen: GroupSet,
    fa: FieldSet,
    twist: u32,
}

fn row(case: u64, check: &'static str, n: usize, lhs: u128, rhs: u128, ok: bool) -> BatteryRow {
    BatteryRow {
        case,
        check,
        n,
        lhs,
        rhs,
        ok,
    }
}

fn check_case(k: u64, x: &Input) -> Vec<BatteryRow> {
    let len = |s: &GroupSet| s.len() as u128;
    let (a, b, c) = (&x.a, &x.b, &x.c);
    let mut out = Vec::new();

    let ab = a.product(b).unwrap();
    let ac_inv = a.product(&c.inverse()).unwrap();
    let cb = c.product(b).unwrap();
    let (l, r) = (len(&ab) * len(c), len(&ac_inv) * len(&cb));
    out.push(row(k, "ruzsa_triangle", 0, l, r, l <= r));

    // d(A,B) <= d(A,C) + d(C,B) with d(X,Y) = log(|XY^-1| / sqrt(|X||Y|))
    let ab_inv = a.product(&b.inverse()).unwrap();
    let cb_inv = c.product(&b.inverse()).unwrap();
    let (l, r) = (len(&ab_inv) * len(c), len(&ac_inv) * len(&cb_inv));
    out.push(row(k, "distance_triangle", 0, l, r, l <= r));
    let ba_inv = b.product(&a.inverse()).unwrap();
    out.push(row(k, "distance_symmetric", 0, len(&ab_inv), len(&ba_inv), ab_inv.len() == ba_inv.len()));
    let (l, r) = (len(a) * len(b), len(&ab_inv).pow(2));
    out.push(row(k, "distance_nonnegative", 0, l, r, l <= r));

    let aa = a.product(a).unwrap();
    let aa_inv = a.product(&a.inverse()).unwrap();
    let (l, r) = (len(&aa_inv) * len(a), len(&aa).pow(2));
    out.push(row(k, "doubling_to_minus", 0, l, r, l <= r));

    let g = &x.gen;
    let a3 = len(&g.ball(3));
    for n in 4..=8usize {
        let l = len(&g.ball(n)) * len(g).pow(n as u32 - 3);
        let r = a3.pow(n as u32 - 2);
        out.push(row(k, "tripling_chain", n, l, r, l <= r));
    }

    for n in 1..=5usize {
        let pw = a.elementwise_power(n as u64);
        let pp = a.power_product(n);
        let ball = a.ball(n);
        let ok = pw.difference(&pp).unwrap().is_empty() && pp.difference(&ball).unwrap().is_empty();
        out.push(row(k, "containment", n, len(&pp), len(&ball), ok));
    }

    let fa = &x.fa;
    let twisted = fa.sum(&fa.dilate(x.twist)).unwrap().len() as u128;
    let size = fa.len() as u128;
    let sum = fa.sum(fa).unwrap().len() as u128;
    let minus = fa.difference_set(fa).unwrap().len() as u128;
    out.push(row(k, "plunnecke_sum", 0, sum * size, twisted.pow(2), sum * size <= twisted.pow(2)));
    out.push(row(k, "plunnecke_minus", 0, minus * size, twisted.pow(2), minus * size <= twisted.pow(2)));
    out
}

/// `cases` seeded cases on `table` and its base field. Group sets have at
/// most `max_size` elements; the tripling chain uses random generating sets
/// of 2 to 4 elements.
pub fn set_battery<R: Rng>(
    table: &Arc<GroupTable>,
    cases: usize,
    max_size: usize,
    rng: &mut R,
) -> (Vec<BatteryRow>, Vec<(&'static str, Tally)>) {
    let field = table.group().field_arc();
    let q = field.q();
    let max_size = max_size.clamp(1, table.len());
    let inputs: Vec<Input> = (0..cases)
        .map(|_| {
            let pick = |rng: &mut R| {
                let s = rng.gen_range(1..=max_size);
                random_set(table, s, rng)
            };
            let (a, b, c) = (pick(rng), pick(rng), pick(rng));
            let gsize = rng.gen_range(2..=4);
            let gen = random_generating_set(table, gsize, rng).expect("small generating sets exist");
            let fsize = rng.gen_range(1..=q as usize);
            let fa = FieldSet::from_codes(&field, rand::seq::index::sample(rng, q as usize, fsize).into_iter().map(|i| i as u32));
            let twist = rng.gen_range(1..q);
            Input { a, b, c, gen, fa, twist }
        })
        .collect();
    let rows: Vec<BatteryRow> = inputs
        .par_iter()
        .enumerate()
        .map(|(k, x)| check_case(k as u64, x))
        .collect::<Vec<_>>()
        .concat();
    let mut tallies: Vec<(&'static str, Tally)> = CHECKS.iter().map(|&c| (c, Tally::default())).collect();
    for r in &rows {
        let slot = CHECKS.iter().position(|&c| c == r.check).unwrap();
        tallies[slot].1.record(Some(r.ok));
    }
    (rows, tallies)
}

/// `Tr(g)Tr(h) = Tr(gh) + Tr(gh^-1)` over all ordered pairs of the table.
pub fn group_trace_identity(t: &GroupTable) -> IdentityReport {
    let f: &FieldCtx = t.field();
    let n = t.len() as u32;
    (0..n)
        .into_par_iter()
        .map(|g| {
            let mut r = IdentityReport::default();
            let tg = t.trace(g);
            for h in 0..n {
                let lhs = f.mul(tg, t.trace(h));
                let rhs = f.add(t.trace(t.mul(g, h)), t.trace(t.mul(g, t.inv(h))));
                r.cases += 1;
                r.violations += (lhs != rhs) as u64;
            }
            r
        })
        .reduce(IdentityReport::default, |a, b| IdentityReport {
            cases: a.cases + b.cases,
            violations: a.violations + b.violations,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::Mode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn battery_is_clean_on_sl2_f3() {
        let t = GroupTable::build(3, Mode::Sl).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (rows, tallies) = set_battery(&t, 50, 10, &mut rng);
        assert_eq!(rows.len(), 50 * 17);
        for (name, tally) in tallies {
            assert!(tally.cases > 0, "{name}");
            assert_eq!(tally.violations, 0, "{name}");
        }
    }

    #[test]
    fn trace_identity_small() {
        for q in [2, 3, 4] {
            let t = GroupTable::build(q, Mode::Sl).unwrap();
            let r = group_trace_identity(&t);
            assert_eq!(r.cases, (t.len() * t.len()) as u64);
            assert_eq!(r.violations, 0);
        }
    }
}
