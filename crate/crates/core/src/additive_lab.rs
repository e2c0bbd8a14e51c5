//! Field-side experiments: almost stable sets and almost fields, the
//! sum-product dichotomy, the trace-function reduction to sum-product, the
//! expansion lemma for `tr_g`, and scans around the open questions.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gf::{FieldCtx, FieldError};
use crate::growth::Member;
use crate::setops::{Balls, FieldSet, SetError};
use crate::sl2::{Mat2, Sl2};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdditiveError {
    #[error("set has {0} elements, need at least 2")]
    SetTooSmall(usize),
    #[error("coefficients must be nonzero")]
    ZeroCoefficient,
    #[error("precondition failed: {0}")]
    PreconditionUnsatisfied(&'static str),
    #[error("field has no log tables")]
    NoTables,
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Pass/fail/skip counts for one checked statement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub cases: u64,
    pub skipped: u64,
    pub violations: u64,
}

impl Tally {
    pub fn record(&mut self, ok: Option<bool>) {
        match ok {
            None => self.skipped += 1,
            Some(ok) => {
                self.cases += 1;
                if !ok {
                    self.violations += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, o: &Tally) {
        self.cases += o.cases;
        self.skipped += o.skipped;
        self.violations += o.violations;
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn log_base(x: f64, base: usize) -> f64 {
    x.ln() / (base as f64).ln()
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub size: usize,
    pub doubling_sum: usize,
    pub doubling_prod: usize,
    /// `log_|A|(|A·A| + |A+A|) - 1`.
    pub eps_stable_min: f64,
}

pub fn stability(a: &FieldSet) -> Result<StabilityReport, AdditiveError> {
    if a.len() < 2 {
        return Err(AdditiveError::SetTooSmall(a.len()));
    }
    let s = a.sum(a)?.len();
    let p = a.product(a)?.len();
    Ok(StabilityReport {
        size: a.len(),
        doubling_sum: s,
        doubling_prod: p,
        eps_stable_min: log_base((s + p) as f64, a.len()) - 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Purity {
    Pure,
    Impure,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlmostFieldReport {
    pub size: usize,
    pub eps: f64,
    /// Degree `m` of the best subfield `E = F_{p^m}`.
    pub best_subfield: u32,
    pub subfield_order: u64,
    /// Smallest code in the best coset `xE`.
    pub best_coset: u32,
    /// `|A \ xE|`.
    pub outside: usize,
    /// `log_|A| |E| - 1`.
    pub eps_size: f64,
    /// `log_|A| |A \ xE|`, 0 when empty.
    pub eps_excess: f64,
    /// Least `ε` for which `A` is an `ε`-field.
    pub eps_field_min: f64,
    /// Degree of the subfield generated by `A`.
    pub generated_degree: u32,
    pub is_field: bool,
    pub purity: Purity,
}

struct CosetIndex {
    m: u32,
    order: u64,
    /// Number of cosets of `E^×` in `F_q^×`.
    k: u32,
    reps: Vec<u32>,
}

/// Exhaustive search over subfields `E` and cosets `xE`, using discrete logs:
/// `x` and `y` lie in the same coset of `E^×` iff their logs agree modulo
/// `(q - 1) / (|E| - 1)`.
pub struct AlmostFieldDetector {
    field: Arc<FieldCtx>,
    cosets: Vec<CosetIndex>,
}

impl AlmostFieldDetector {
    pub fn new(field: &Arc<FieldCtx>) -> Result<Self, AdditiveError> {
        if !field.has_tables() {
            return Err(AdditiveError::NoTables);
        }
        let q = field.q();
        let cosets = field
            .subfield_degrees()
            .into_par_iter()
            .map(|m| {
                let order = field.subfield_order(m);
                let k = ((q as u64 - 1) / (order - 1)) as u32;
                let mut reps = vec![u32::MAX; k as usize];
                let mut left = k;
                for x in 1..q {
                    let r = &mut reps[(field.log(x).unwrap() % k) as usize];
                    if *r == u32::MAX {
                        *r = x;
                        left -= 1;
                        if left == 0 {
                            break;
                        }
                    }
                }
                CosetIndex { m, order, k, reps }
            })
            .collect();
        Ok(AlmostFieldDetector {
            field: field.clone(),
            cosets,
        })
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn detect(&self, a: &FieldSet, eps: f64) -> Result<AlmostFieldReport, AdditiveError> {
        if **a.field() != *self.field {
            return Err(SetError::ContextMismatch.into());
        }
        let n = a.len();
        if n < 2 {
            return Err(AdditiveError::SetTooSmall(n));
        }
        let f = &self.field;
        let zero = a.contains(0) as usize;
        let logs: Vec<u32> = a.codes().iter().filter(|&&x| x != 0).map(|&x| f.log(x).unwrap()).collect();
        // key = |A| * max(|A|^eps_size, |A|^eps_excess), exact in integers
        let mut best: Option<((u64, usize, u32, u32), &CosetIndex)> = None;
        for c in &self.cosets {
            let mut counts = vec![0usize; c.k as usize];
            for &l in &logs {
                counts[(l % c.k) as usize] += 1;
            }
            let top = *counts.iter().max().unwrap_or(&0);
            let rep = counts
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v == top)
                .map(|(r, _)| c.reps[r])
                .min()
                .unwrap();
            let outside = n - top - zero;
            let key = (c.order.max((n * outside.max(1)) as u64), outside, c.m, rep);
            if best.as_ref().is_none_or(|(b, _)| key < *b) {
                best = Some((key, c));
            }
        }
        let ((_, outside, _, rep), c) = best.unwrap();
        let eps_size = log_base(c.order as f64, n) - 1.0;
        let eps_excess = if outside == 0 { 0.0 } else { log_base(outside as f64, n) };
        let eps_field_min = eps_size.max(eps_excess);
        let is_field = eps_field_min <= eps + 1e-12;
        let generated_degree = a.generated_degree()?;
        let gen_order = f.subfield_order(generated_degree);
        let pure = log_base(gen_order as f64, n) - 1.0 <= eps + 1e-12;
        let purity = if pure {
            Purity::Pure
        } else if is_field {
            Purity::Impure
        } else {
            Purity::None
        };
        Ok(AlmostFieldReport {
            size: n,
            eps,
            best_subfield: c.m,
            subfield_order: c.order,
            best_coset: rep,
            outside,
            eps_size,
            eps_excess,
            eps_field_min,
            generated_degree,
            is_field,
            purity,
        })
    }
}

/// One-shot wrapper around [`AlmostFieldDetector`].
pub fn detect_almost_field(a: &FieldSet, eps: f64) -> Result<AlmostFieldReport, AdditiveError> {
    AlmostFieldDetector::new(a.field())?.detect(a, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    /// A large subset of a proper subfield.
    Subfield,
    /// `xE` with `x` outside `E`.
    Dilated,
    /// `E` together with one point outside it.
    PlusPoint,
}

impl PlantKind {
    pub const ALL: [PlantKind; 3] = [PlantKind::Subfield, PlantKind::Dilated, PlantKind::PlusPoint];

    pub fn expected(self) -> Purity {
        match self {
            PlantKind::Subfield => Purity::Pure,
            PlantKind::Dilated | PlantKind::PlusPoint => Purity::Impure,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlantedCase {
    pub kind: PlantKind,
    pub subfield: u32,
    pub codes: Vec<u32>,
}

/// Random planted almost fields. Subfield plants keep enough of `E` that
/// `|E| <= |A|^{1+eps}`.
pub fn planted_cases<R: Rng>(
    field: &Arc<FieldCtx>,
    kind: PlantKind,
    count: usize,
    eps: f64,
    rng: &mut R,
) -> Vec<PlantedCase> {
    let q = field.q();
    let degrees: Vec<u32> = field.subfield_degrees().into_iter().filter(|&m| m < field.n()).collect();
    assert!(!degrees.is_empty(), "F_{q} has no proper subfield");
    (0..count)
        .map(|_| {
            let m = degrees[rng.gen_range(0..degrees.len())];
            let e = field.subfield_elements(m);
            let outside = |rng: &mut R| loop {
                let x = rng.gen_range(1..q);
                if !field.in_subfield(x, m) {
                    break x;
                }
            };
            let codes = match kind {
                PlantKind::Subfield => {
                    let min = (2..=e.len())
                        .find(|&s| (e.len() as f64).ln() <= (1.0 + eps) * (s as f64).ln())
                        .unwrap();
                    let size = rng.gen_range(min..=e.len());
                    sample(rng, e.len(), size).into_iter().map(|i| e[i]).collect()
                }
                PlantKind::Dilated => {
                    let x = outside(rng);
                    e.iter().map(|&y| field.mul(x, y)).collect()
                }
                PlantKind::PlusPoint => {
                    let mut v = e.clone();
                    v.push(outside(rng));
                    v
                }
            };
            PlantedCase { kind, subfield: m, codes }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyRow {
    pub set_id: u64,
    pub label: String,
    pub size: usize,
    pub eps_stable_min: f64,
    pub eps_field_min: f64,
    pub purity: Purity,
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyReport {
    pub eps: f64,
    pub rows: Vec<DichotomyRow>,
    /// Per size, the least `eps_stable_min` among sets that are not `eps`-fields.
    pub frontier: Vec<(usize, f64)>,
    /// Least `eps_stable_min` over all non-fields.
    pub growth_margin: Option<f64>,
    /// Largest `eps_stable_min` over the `eps`-fields.
    pub field_side_max: Option<f64>,
}

/// Subfields, progressions and random sets of assorted sizes.
pub fn dichotomy_family<R: Rng>(field: &Arc<FieldCtx>, count: usize, rng: &mut R) -> Vec<(String, FieldSet)> {
    let q = field.q();
    let g = field.primitive();
    let mut out = Vec::new();
    for m in field.subfield_degrees() {
        if field.subfield_order(m) >= 2 {
            out.push((format!("subfield_{m}"), FieldSet::from_codes(field, field.subfield_elements(m))));
        }
    }
    let cap = (q as usize - 1).min(64);
    for k in 0..count {
        let size = rng.gen_range(2..=cap.max(2));
        let x = rng.gen_range(1..q);
        let set = match k % 3 {
            0 => {
                let mut y = 0u32;
                let v: Vec<u32> = (0..size)
                    .map(|_| {
                        let r = y;
                        y = field.add(y, x);
                        r
                    })
                    .collect();
                ("arithmetic", v)
            }
            1 => {
                let mut y = x;
                let v: Vec<u32> = (0..size)
                    .map(|_| {
                        let r = y;
                        y = field.mul(y, g);
                        r
                    })
                    .collect();
                ("geometric", v)
            }
            _ => ("random", sample(rng, q as usize, size).into_iter().map(|i| i as u32).collect()),
        };
        let fs = FieldSet::from_codes(field, set.1);
        if fs.len() >= 2 {
            out.push((set.0.to_string(), fs));
        }
    }
    out
}

pub fn sum_product_dichotomy_scan(
    det: &AlmostFieldDetector,
    family: &[(String, FieldSet)],
    eps: f64,
) -> Result<DichotomyReport, AdditiveError> {
    let rows: Vec<DichotomyRow> = family
        .par_iter()
        .enumerate()
        .map(|(k, (label, a))| {
            let s = stability(a)?;
            let f = det.detect(a, eps)?;
            Ok(DichotomyRow {
                set_id: k as u64,
                label: label.clone(),
                size: a.len(),
                eps_stable_min: s.eps_stable_min,
                eps_field_min: f.eps_field_min,
                purity: f.purity,
            })
        })
        .collect::<Result<_, AdditiveError>>()?;
    let mut frontier: Vec<(usize, f64)> = Vec::new();
    let mut growth_margin: Option<f64> = None;
    let mut field_side_max: Option<f64> = None;
    for r in &rows {
        if r.purity == Purity::None {
            growth_margin = Some(growth_margin.map_or(r.eps_stable_min, |m| m.min(r.eps_stable_min)));
            match frontier.iter_mut().find(|(s, _)| *s == r.size) {
                Some(p) => p.1 = p.1.min(r.eps_stable_min),
                None => frontier.push((r.size, r.eps_stable_min)),
            }
        } else {
            field_side_max = Some(field_side_max.map_or(r.eps_stable_min, |m| m.max(r.eps_stable_min)));
        }
    }
    frontier.sort_by_key(|p| p.0);
    Ok(DichotomyReport {
        eps,
        rows,
        frontier,
        growth_margin,
        field_side_max,
    })
}

/// `{(t, s) : t, s ∈ Y²} ⊆ {(xy, x/y) : x, y ∈ Y^[2]}`, by enumeration.
pub fn bg_trick_holds(y: &FieldSet) -> Result<bool, AdditiveError> {
    let f = y.field().clone();
    let ball = y.mul_ball(2)?;
    let mut pairs = HashSet::with_capacity(ball.len() * ball.len());
    for &x in ball.codes() {
        for &z in ball.codes() {
            pairs.insert((f.mul(x, z), f.div(x, z)?));
        }
    }
    let sq = y.squares();
    Ok(sq.codes().iter().all(|&t| sq.codes().iter().all(|&s| pairs.contains(&(t, s)))))
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReductionReport {
    pub x_size: usize,
    /// `N = |tr X|`.
    pub tr_x: usize,
    /// `|{a1 tr(xy) + a2 tr(x/y) : x, y ∈ X^[4]}|`.
    pub twisted_traces: usize,
    /// `twisted_traces / N`.
    pub k: f64,
    /// `|tr Z|` with `Z = (X^[2])²`.
    pub tr_z: usize,
    /// `|tr Z + a tr Z|`, `a = a2 / a1`.
    pub tr_z_twisted_sum: usize,
    pub tr_z_sum: usize,
    pub sq_sum: usize,
    pub sq_prod: usize,
    /// `|tr(X²)tr(X²)| + |tr(X²)+tr(X²)|`.
    pub lhs: usize,
    /// `log(lhs / N) / log K`, when `K > 1`.
    pub exponent: Option<f64>,
    pub bg_trick: bool,
    /// `|tr Z| <= |tr Z + a tr Z| <= K N <= 4K |tr Z|`.
    pub chain: bool,
    /// `|A + aA| <= K'|A|` gives `|A + A| <= K'^2 |A|` for `A = tr Z`.
    pub plunnecke: bool,
    /// `|tr(X²)tr(X²)| <= |tr Z + tr Z|` and `|tr(X²)+tr(X²)| <= |tr Z + tr Z|`.
    pub squares_inside: bool,
    /// `lhs <= 32 K^3 N`.
    pub final_bound: bool,
}

impl TraceReductionReport {
    pub fn passed(&self) -> bool {
        self.bg_trick && self.chain && self.plunnecke && self.squares_inside && self.final_bound
    }
}

pub fn trace_reduction_experiment(x: &FieldSet, a1: u32, a2: u32) -> Result<TraceReductionReport, AdditiveError> {
    if a1 == 0 || a2 == 0 {
        return Err(AdditiveError::ZeroCoefficient);
    }
    if x.is_empty() {
        return Err(SetError::EmptySet.into());
    }
    let f = x.field().clone();
    let tr_x = x.tr_image()?;
    let x4 = x.mul_ball(4)?;
    let mut v = Vec::with_capacity(x4.len() * x4.len());
    for &s in x4.codes() {
        for &t in x4.codes() {
            let p = f.tr(f.mul(s, t))?;
            let r = f.tr(f.div(s, t)?)?;
            v.push(f.add(f.mul(a1, p), f.mul(a2, r)));
        }
    }
    let twisted = FieldSet::from_codes(&f, v);
    let y = x.mul_ball(2)?;
    let z = y.squares();
    let tr_z = z.tr_image()?;
    let a = f.div(a2, a1)?;
    let tz_tw = tr_z.sum(&tr_z.dilate(a))?.len();
    let tz_sum = tr_z.sum(&tr_z)?.len();
    let tr_sq = x.squares().tr_image()?;
    let sq_sum = tr_sq.sum(&tr_sq)?.len();
    let sq_prod = tr_sq.product(&tr_sq)?.len();
    let n = tr_x.len();
    let t = twisted.len();
    let k = t as f64 / n as f64;
    let lhs = sq_sum + sq_prod;
    let (nz, n64, t128) = (tr_z.len() as u128, n as u128, t as u128);
    Ok(TraceReductionReport {
        x_size: x.len(),
        tr_x: n,
        twisted_traces: t,
        k,
        tr_z: tr_z.len(),
        tr_z_twisted_sum: tz_tw,
        tr_z_sum: tz_sum,
        sq_sum,
        sq_prod,
        lhs,
        exponent: (k > 1.0).then(|| (lhs as f64 / n as f64).ln() / k.ln()),
        bg_trick: bg_trick_holds(&y)?,
        chain: tr_z.len() <= tz_tw && tz_tw <= t && n64 <= 4 * nz,
        plunnecke: tz_sum as u128 * nz <= (tz_tw as u128).pow(2),
        squares_inside: sq_prod <= tz_sum && sq_sum <= tz_sum,
        final_bound: lhs as u128 * n64 * n64 <= 32 * t128.pow(3),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub x_codes: Vec<u32>,
    pub g: Mat2,
    pub subfield: u32,
    pub prod_g: u32,
    /// `|Tr V|`.
    pub tr_v: usize,
    /// `|Tr(V^[4] V^[4]g)|` when `Tr(V^[4]) ⊆ E` and `Prod(g) ∉ E`.
    pub products: Option<usize>,
    /// `16 |Tr(V^[4] V^[4]g)| >= |Tr V|^2`.
    pub products_ok: Option<bool>,
    /// `|Tr([V, g])|` when `Prod(g) != 1`.
    pub commutators: Option<usize>,
    /// `4 |Tr([V, g])| >= |Tr V|`.
    pub commutator_ok: Option<bool>,
    /// `Prod(g) ∈ E ⟺ Tr(VV^g) ⊆ E`, when `Tr(V^[2]) ⊆ E` and `V ⊄ {±I}`.
    pub fact_ok: Option<bool>,
}

/// Checks the expansion lemma on `V = D_X` by direct matrix products.
pub fn expansion_lemma_check(group: &Sl2, x: &FieldSet, g: &Mat2, m: u32) -> Result<ExpansionReport, AdditiveError> {
    let f = group.field();
    let central = x.codes().iter().all(|&s| f.mul(s, s) == 1);
    if !f.n().is_multiple_of(m) {
        return Err(AdditiveError::PreconditionUnsatisfied("subfield degree does not divide n"));
    }
    let diag = |xs: &FieldSet| -> Result<Vec<Mat2>, AdditiveError> {
        xs.codes().iter().map(|&s| group.diag(s).map_err(|_| AdditiveError::PreconditionUnsatisfied("zero in X"))).collect()
    };
    let in_e = |t: u32| f.in_subfield(t, m);
    let traces = |ms: &[Mat2]| -> HashSet<u32> { ms.iter().map(|v| v.trace(f)).collect() };
    let v = diag(x)?;
    let v2 = diag(&x.mul_ball(2)?)?;
    let v4 = diag(&x.mul_ball(4)?)?;
    let tr_v = traces(&v).len();
    let prod_g = group.prod(g);
    let g_inv = group.inv(g);
    let conj = |u: &Mat2| group.mul(&g_inv, &group.mul(u, g));

    let (products, products_ok) = if traces(&v4).into_iter().all(in_e) && !in_e(prod_g) {
        let v4g: Vec<Mat2> = v4.iter().map(conj).collect();
        let mut t = HashSet::new();
        for u in &v4 {
            for w in &v4g {
                t.insert(u.mul(f, w).trace(f));
            }
        }
        (Some(t.len()), Some(16 * t.len() as u64 >= (tr_v as u64).pow(2)))
    } else {
        (None, None)
    };

    let (commutators, commutator_ok) = if prod_g != 1 {
        let t: HashSet<u32> = v.iter().map(|u| group.commutator(u, g).trace(f)).collect();
        (Some(t.len()), Some(4 * t.len() >= tr_v))
    } else {
        (None, None)
    };

    let fact_ok = if !central && traces(&v2).into_iter().all(in_e) {
        let vg: Vec<Mat2> = v.iter().map(conj).collect();
        let inside = v.iter().all(|u| vg.iter().all(|w| in_e(u.mul(f, w).trace(f))));
        Some(inside == in_e(prod_g))
    } else {
        None
    };

    Ok(ExpansionReport {
        x_codes: x.codes().to_vec(),
        g: *g,
        subfield: m,
        prod_g,
        tr_v,
        products,
        products_ok,
        commutators,
        commutator_ok,
        fact_ok,
    })
}

/// Uniform-ish random element of `SL_2(F_q)`.
pub fn random_sl2<R: Rng>(group: &Sl2, rng: &mut R) -> Mat2 {
    let f = group.field();
    let q = f.q();
    let a = rng.gen_range(0..q);
    if a == 0 {
        let b = rng.gen_range(1..q);
        let c = f.neg(f.inv(b).unwrap());
        let d = rng.gen_range(0..q);
        Mat2::new(0, b, c, d)
    } else {
        let b = rng.gen_range(0..q);
        let c = rng.gen_range(0..q);
        let d = f.div(f.add(1, f.mul(b, c)), a).unwrap();
        Mat2::new(a, b, c, d)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExpansionSummary {
    pub products: Tally,
    pub commutators: Tally,
    pub fact: Tally,
    pub worst_products: Option<f64>,
    pub worst_commutators: Option<f64>,
}

/// Random `(X, g, E)` with `tr(X^[4]) ⊆ E`: `X` is drawn from `E^×` or from
/// the norm-one elements of the quadratic extension of `E`.
pub fn expansion_cases<R: Rng>(group: &Sl2, count: usize, rng: &mut R) -> Vec<(FieldSet, Mat2, u32)> {
    let f = Arc::new(group.field().clone());
    let n = f.n();
    let q = f.q() as u64;
    let degrees: Vec<u32> = f.subfield_degrees();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let m = degrees[rng.gen_range(0..degrees.len())];
        let e = f.subfield_order(m);
        let pool: Vec<u32> = if n.is_multiple_of(2 * m) && rng.gen_bool(0.5) {
            let h = f.pow(f.primitive(), (q - 1) / (e + 1));
            (0..e + 1).map(|k| f.pow(h, k)).collect()
        } else {
            (1..f.q()).filter(|&s| f.in_subfield(s, m)).collect()
        };
        let size = rng.gen_range(1..=pool.len().min(12));
        let xs: Vec<u32> = sample(rng, pool.len(), size).into_iter().map(|i| pool[i]).collect();
        let x = FieldSet::from_codes(&f, xs);
        if x.codes().iter().all(|&s| f.mul(s, s) == 1) {
            continue;
        }
        out.push((x, random_sl2(group, rng), m));
    }
    out
}

pub fn expansion_scan(group: &Sl2, cases: &[(FieldSet, Mat2, u32)]) -> Result<(Vec<ExpansionReport>, ExpansionSummary), AdditiveError> {
    let reports: Vec<ExpansionReport> = cases
        .par_iter()
        .map(|(x, g, m)| expansion_lemma_check(group, x, g, *m))
        .collect::<Result<_, _>>()?;
    let mut s = ExpansionSummary::default();
    for r in &reports {
        s.products.record(r.products_ok);
        s.commutators.record(r.commutator_ok);
        s.fact.record(r.fact_ok);
        let sq = (r.tr_v * r.tr_v) as f64;
        if let Some(p) = r.products {
            let v = p as f64 / sq;
            s.worst_products = Some(s.worst_products.map_or(v, |w: f64| w.min(v)));
        }
        if let Some(c) = r.commutators {
            let v = c as f64 / r.tr_v as f64;
            s.worst_commutators = Some(s.worst_commutators.map_or(v, |w: f64| w.min(v)));
        }
    }
    Ok((reports, s))
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct IdentityReport {
    pub cases: u64,
    pub violations: u64,
}

/// `tr(x)tr(y) = tr(xy) + tr(x/y)` for all `x, y ∈ F_q^×`.
pub fn scalar_trace_identity(f: &FieldCtx) -> IdentityReport {
    let q = f.q();
    let mut r = IdentityReport::default();
    for x in 1..q {
        for y in 1..q {
            let lhs = f.mul(f.tr(x).unwrap(), f.tr(y).unwrap());
            let rhs = f.add(f.tr(f.mul(x, y)).unwrap(), f.tr(f.div(x, y).unwrap()).unwrap());
            r.cases += 1;
            r.violations += (lhs != rhs) as u64;
        }
    }
    r
}

/// `Tr(D_x (D_y)^g) = ad tr(xy) - bc tr(x/y) = tr_t(x, y)` for all
/// `x, y ∈ F_q^×` and every `g` in `gs`, with the left side computed by
/// matrix products.
pub fn tr_g_identity(group: &Sl2, gs: &[Mat2]) -> IdentityReport {
    let f = group.field();
    let q = f.q();
    let units: Vec<u32> = (1..q).collect();
    let d: Vec<Mat2> = units.iter().map(|&x| group.diag(x).unwrap()).collect();
    let mut pre = Vec::with_capacity(units.len() * units.len());
    for &x in &units {
        for &y in &units {
            pre.push((f.tr(f.mul(x, y)).unwrap(), f.tr(f.div(x, y).unwrap()).unwrap()));
        }
    }
    gs.par_iter()
        .map(|g| {
            let (ad, bc) = (f.mul(g.a, g.d), f.mul(g.b, g.c));
            let gi = group.inv(g);
            let dg: Vec<Mat2> = d.iter().map(|dy| group.mul(&gi, &group.mul(dy, g))).collect();
            let mut r = IdentityReport::default();
            for (i, dx) in d.iter().enumerate() {
                for (j, m) in dg.iter().enumerate() {
                    let lhs = dx.mul(f, m).trace(f);
                    let (p, s) = pre[i * units.len() + j];
                    let rhs = f.sub(f.mul(ad, p), f.mul(bc, s));
                    let tt = f.tr_t(ad, units[i], units[j]).unwrap();
                    r.cases += 1;
                    r.violations += (lhs != rhs || lhs != tt) as u64;
                }
            }
            r
        })
        .reduce(IdentityReport::default, |a, b| IdentityReport {
            cases: a.cases + b.cases,
            violations: a.violations + b.violations,
        })
}

/// The `g` set used for the `tr_g` identity: all of `SL_2(F_q)` when
/// `q <= full_limit`, otherwise every `g` with `a = 1`, which still meets
/// every value of `Prod(g)`.
pub fn tr_g_test_elements(group: &Sl2, full_limit: u32) -> Vec<Mat2> {
    let f = group.field();
    let q = f.q();
    if q <= full_limit {
        return group.enumerate().expect("group is enumerable");
    }
    let mut out = Vec::with_capacity((q * q) as usize);
    for b in 0..q {
        for c in 0..q {
            out.push(Mat2::new(1, b, c, f.add(1, f.mul(b, c))));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct QuestionRow {
    pub set_id: u64,
    pub codes: Vec<u128>,
    /// Least `k >= 1` meeting the condition, if any up to the cap.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuestionSummary {
    pub rows: usize,
    pub reached: usize,
    pub max_k: Option<usize>,
}

fn summarize(rows: &[QuestionRow]) -> QuestionSummary {
    QuestionSummary {
        rows: rows.len(),
        reached: rows.iter().filter(|r| r.k.is_some()).count(),
        max_k: rows.iter().filter_map(|r| r.k).max(),
    }
}

fn first_k<F: Fn(&Balls) -> bool>(m: &Member, kmax: usize, good: F) -> Option<usize> {
    let mut b = Balls::new(&m.set);
    for k in 1..=kmax {
        if !b.grow() && b.radius() < k {
            return good(&b).then_some(k);
        }
        if good(&b) {
            return Some(k);
        }
    }
    None
}

/// Least `k` with `<Prod(A^[k])> = F_q`.
pub fn prod_generation_scan(family: &[Member], kmax: usize) -> (Vec<QuestionRow>, QuestionSummary) {
    let rows: Vec<QuestionRow> = family
        .par_iter()
        .map(|m| {
            let t = m.set.table();
            let f = t.field();
            let k = first_k(m, kmax, |b| f.subfield_generated(b.seen().iter().map(|i| t.prod(i))).unwrap() == f.n());
            QuestionRow {
                set_id: m.id,
                codes: m.set.codes(),
                k,
            }
        })
        .collect();
    let s = summarize(&rows);
    (rows, s)
}

/// Degrees of the maximal proper subfields.
pub fn maximal_subfield_degrees(f: &FieldCtx) -> Vec<u32> {
    let n = f.n();
    crate::gf::prime_factors(n as u64).into_iter().map(|l| n / l as u32).collect()
}

/// Least `k` with `12 |A^[k] ∤ W| >= |A|`, `W` the union of the maximal
/// subfields.
pub fn simultaneous_avoidance_scan(family: &[Member], kmax: usize) -> (Vec<QuestionRow>, QuestionSummary) {
    let rows: Vec<QuestionRow> = family
        .par_iter()
        .map(|m| {
            let t = m.set.table();
            let f = t.field();
            let maxes = maximal_subfield_degrees(f);
            let outside = |i: u32| {
                let tr = t.trace(i);
                !maxes.iter().any(|&d| f.in_subfield(tr, d))
            };
            let k = first_k(m, kmax, |b| 12 * b.seen().iter().filter(|&i| outside(i)).count() >= m.set.len());
            QuestionRow {
                set_id: m.id,
                codes: m.set.codes(),
                k,
            }
        })
        .collect();
    let s = summarize(&rows);
    (rows, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct TgImageRow {
    pub sample_id: u64,
    pub t: u32,
    pub x1: usize,
    pub x2: usize,
    /// `max(|tr X1|, |tr X2|)`.
    pub n: usize,
    pub image: usize,
    /// Largest fibre `N_t(c)`.
    pub max_fibre: usize,
    /// `log_N |Im T|`.
    pub exponent: Option<f64>,
}

/// `|{t tr(x1 x2) + (1-t) tr(x1/x2)}|` over random `X1, X2 ⊆ F_q^×` and
/// `t ∉ {0, 1}`.
pub fn tg_image_scan<R: Rng>(f: &Arc<FieldCtx>, samples: usize, rng: &mut R) -> Vec<TgImageRow> {
    let q = f.q();
    let inputs: Vec<(u32, Vec<u32>, Vec<u32>)> = (0..samples)
        .map(|_| {
            let t = if q > 2 { rng.gen_range(2..q) } else { 1 };
            let cap = (q as usize - 1).min(32);
            let pick = |rng: &mut R| -> Vec<u32> {
                let s = rng.gen_range(1..=cap);
                sample(rng, q as usize - 1, s).into_iter().map(|i| i as u32 + 1).collect()
            };
            let a = pick(rng);
            let b = pick(rng);
            (t, a, b)
        })
        .collect();
    inputs
        .par_iter()
        .enumerate()
        .map(|(k, (t, a, b))| {
            let mut counts = std::collections::HashMap::new();
            for &x in a {
                for &y in b {
                    *counts.entry(f.tr_t(*t, x, y).unwrap()).or_insert(0usize) += 1;
                }
            }
            let fa = FieldSet::from_codes(f, a.iter().copied()).tr_image().unwrap().len();
            let fb = FieldSet::from_codes(f, b.iter().copied()).tr_image().unwrap().len();
            let n = fa.max(fb);
            TgImageRow {
                sample_id: k as u64,
                t: *t,
                x1: a.len(),
                x2: b.len(),
                n,
                image: counts.len(),
                max_fibre: counts.values().copied().max().unwrap_or(0),
                exponent: (n > 1).then(|| (counts.len() as f64).ln() / (n as f64).ln()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::Mode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(q: u64) -> Arc<FieldCtx> {
        Arc::new(FieldCtx::from_order(q).unwrap())
    }

    /// Direct search over every subfield and every `x ∈ F_q^×`.
    fn brute(a: &FieldSet) -> (u64, usize) {
        let f = a.field();
        let n = a.len();
        let mut best = (u64::MAX, usize::MAX);
        for m in f.subfield_degrees() {
            for x in 1..f.q() {
                let out = a.codes().iter().filter(|&&s| !f.in_subfield(f.div(s, x).unwrap(), m)).count();
                let key = (f.subfield_order(m).max((n * out.max(1)) as u64), out);
                best = best.min(key);
            }
        }
        best
    }

    #[test]
    fn detector_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for q in [4u64, 8, 9, 16, 25, 27, 64] {
            let f = field(q);
            let det = AlmostFieldDetector::new(&f).unwrap();
            for _ in 0..40 {
                let size = rng.gen_range(2..=q as usize);
                let a = FieldSet::from_codes(&f, sample(&mut rng, q as usize, size).into_iter().map(|i| i as u32));
                let r = det.detect(&a, 0.1).unwrap();
                let key = (r.subfield_order.max((a.len() * r.outside.max(1)) as u64), r.outside);
                assert_eq!(key, brute(&a), "q={q} A={:?}", a.codes());
                let xe: Vec<u32> = f.subfield_elements(r.best_subfield).iter().map(|&e| f.mul(e, r.best_coset)).collect();
                let out = a.codes().iter().filter(|s| !xe.contains(s)).count();
                assert_eq!(out, r.outside);
            }
        }
    }

    #[test]
    fn subfield_and_dilation_examples() {
        let f = field(9);
        let a = FieldSet::from_codes(&f, [0, 1, 2]);
        let r = detect_almost_field(&a, 0.1).unwrap();
        assert_eq!(r.purity, Purity::Pure);
        assert_eq!((r.best_subfield, r.best_coset, r.outside), (1, 1, 0));

        let f = field(64);
        let e = f.subfield_elements(3);
        let x = (1..64).find(|&x| !f.in_subfield(x, 3)).unwrap();
        let xe = FieldSet::from_codes(&f, e.iter().map(|&s| f.mul(s, x)));
        let r = detect_almost_field(&xe, 0.1).unwrap();
        assert_eq!((r.outside, r.eps_excess, r.purity), (0, 0.0, Purity::Impure));

        let plus = FieldSet::from_codes(&f, e.iter().copied().chain([x]));
        let r = detect_almost_field(&plus, 0.1).unwrap();
        assert_eq!((r.best_subfield, r.outside, r.eps_excess), (3, 1, 0.0));
        assert_eq!(r.purity, Purity::Impure);
    }

    #[test]
    fn small_sets_rejected() {
        let f = field(9);
        let a = FieldSet::from_codes(&f, [3]);
        assert_eq!(stability(&a).unwrap_err(), AdditiveError::SetTooSmall(1));
        assert!(matches!(detect_almost_field(&a, 0.1), Err(AdditiveError::SetTooSmall(1))));
    }

    #[test]
    fn prime_field_is_stable() {
        let f = field(7);
        let a = FieldSet::from_codes(&f, 0..7);
        let s = stability(&a).unwrap();
        assert_eq!((s.doubling_sum, s.doubling_prod), (7, 7));
        assert!(s.eps_stable_min <= (2f64).ln() / (7f64).ln() + 1e-12);
    }

    #[test]
    fn trace_reduction_on_subfield() {
        let f = field(16);
        let e: Vec<u32> = f.subfield_elements(2).into_iter().filter(|&s| s != 0).collect();
        let x = FieldSet::from_codes(&f, e);
        let r = trace_reduction_experiment(&x, 1, 1).unwrap();
        assert!(r.passed());
        assert!(r.k <= 1.0);
        let one = FieldSet::from_codes(&f, [1]);
        let r = trace_reduction_experiment(&one, 1, 1).unwrap();
        assert_eq!((r.tr_x, r.twisted_traces, r.tr_z), (1, 1, 1));
        assert_eq!(trace_reduction_experiment(&x, 0, 1).unwrap_err(), AdditiveError::ZeroCoefficient);
    }

    #[test]
    fn expansion_example_in_f9() {
        let f = field(9);
        let group = Sl2::new(f.clone(), Mode::Sl);
        let x = FieldSet::from_codes(&f, [1, 2]);
        let g = (0..729u32)
            .map(|c| Mat2::new(c / 81, c / 9 % 9, c % 9, 0))
            .filter_map(|m| {
                // complete to determinant one with d = (1 + bc) / a
                (m.a != 0).then(|| Mat2::new(m.a, m.b, m.c, f.div(f.add(1, f.mul(m.b, m.c)), m.a).unwrap()))
            })
            .find(|g| !f.in_subfield(f.mul(g.a, g.d), 1))
            .unwrap();
        let r = expansion_lemma_check(&group, &x, &g, 1).unwrap();
        assert_eq!(r.products_ok, Some(true));
        assert_eq!(r.fact_ok, None);
        let x = FieldSet::from_codes(&f, [f.primitive()]);
        let r = expansion_lemma_check(&group, &x, &g, 2).unwrap();
        assert_eq!(r.fact_ok, Some(true));
        assert_eq!(r.products_ok, None);
    }

    #[test]
    fn tr_g_identity_small() {
        for q in [2u64, 3, 4, 5] {
            let g = Sl2::new(field(q), Mode::Sl);
            let els = tr_g_test_elements(&g, 16);
            let r = tr_g_identity(&g, &els);
            assert_eq!(r.violations, 0);
            assert_eq!(r.cases, g.order() * (q - 1) * (q - 1));
            assert_eq!(scalar_trace_identity(g.field()).violations, 0);
        }
    }

    #[test]
    fn planted_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = field(16);
        let det = AlmostFieldDetector::new(&f).unwrap();
        for kind in PlantKind::ALL {
            for c in planted_cases(&f, kind, 20, 0.1, &mut rng) {
                let a = FieldSet::from_codes(&f, c.codes.clone());
                assert_eq!(det.detect(&a, 0.1).unwrap().purity, kind.expected(), "{c:?}");
            }
        }
    }
}
