//! Probability vectors on `SL_2(F_q)`, convolution, the mixing bounds driven
//! by the minimal degree `M` of a nontrivial real representation, and the
//! bounded-generation consequences for products of large sets.
//!
//! Norms use the counting measure, so `‖U‖² = 1/N`. Inner products are
//! summed over fixed-size blocks in index order, which keeps every float
//! result independent of the number of worker threads.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::additive_lab::Tally;
use crate::setops::GroupSet;
use crate::sl2::GroupTable;

pub const PROB_TOLERANCE: f64 = 1e-12;
pub const RELATIVE_SLACK: f64 = 1e-8;
pub const DENSE_LIMIT: usize = 1000;
const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;
const BLOCK: usize = 1024;
const RITZ_BLOCK: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("not a probability vector: {0}")]
    NotProbability(String),
    #[error("vectors live on different group enumerations")]
    EnumerationMismatch,
    #[error("group of order {0} exceeds the dense limit {1}")]
    GroupTooLarge(usize, usize),
    #[error("power iteration stopped after {iterations} steps at {estimate} with residual {residual}")]
    NoConvergence {
        estimate: f64,
        residual: f64,
        iterations: usize,
    },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(x, y)| x.iter().zip(y).map(|(s, t)| s * t).sum())
        .collect();
    parts.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mean(a: &[f64]) -> f64 {
    let parts: Vec<f64> = a.par_chunks(BLOCK).map(|x| x.iter().sum()).collect();
    parts.iter().sum::<f64>() / a.len() as f64
}

/// `(x·v)(g) = Σ_h x(h) v(h⁻¹g)`, summed over the support of `x`.
pub fn convolve_raw(t: &GroupTable, x: &[f64], v: &[f64]) -> Vec<f64> {
    let support: Vec<(u32, f64)> = x
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(h, &w)| (t.inv(h as u32), w))
        .collect();
    (0..t.len() as u32)
        .into_par_iter()
        .map(|g| support.iter().map(|&(hi, w)| w * v[t.mul(hi, g) as usize]).sum())
        .collect()
}

/// `x^T(g) = x(g⁻¹)`, the adjoint of left convolution by `x`.
pub fn transpose_raw(t: &GroupTable, x: &[f64]) -> Vec<f64> {
    (0..t.len() as u32).map(|g| x[t.inv(g) as usize]).collect()
}

/// A probability vector indexed by the group enumeration.
#[derive(Debug, Clone)]
pub struct ProbVec {
    table: Arc<GroupTable>,
    w: Vec<f64>,
}

impl ProbVec {
    pub fn new(table: &Arc<GroupTable>, w: Vec<f64>) -> Result<Self, SpectralError> {
        if w.len() != table.len() {
            return Err(SpectralError::EnumerationMismatch);
        }
        if let Some(x) = w.iter().find(|&&x| !(x >= 0.0)) {
            return Err(SpectralError::NotProbability(format!("weight {x}")));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > PROB_TOLERANCE {
            return Err(SpectralError::NotProbability(format!("total {s}")));
        }
        Ok(ProbVec {
            table: table.clone(),
            w,
        })
    }

    pub fn uniform(table: &Arc<GroupTable>) -> Self {
        let n = table.len();
        ProbVec {
            table: table.clone(),
            w: vec![1.0 / n as f64; n],
        }
    }

    pub fn delta(table: &Arc<GroupTable>, g: u32) -> Self {
        let mut w = vec![0.0; table.len()];
        w[g as usize] = 1.0;
        ProbVec {
            table: table.clone(),
            w,
        }
    }

    /// `U_A`.
    pub fn uniform_on(a: &GroupSet) -> Self {
        let t = a.table();
        let mut w = vec![0.0; t.len()];
        let p = 1.0 / a.len() as f64;
        for &i in a.indices() {
            w[i as usize] = p;
        }
        ProbVec { table: t.clone(), w }
    }

    /// Random weights on a random support of the given size.
    pub fn random<R: Rng>(table: &Arc<GroupTable>, support: usize, rng: &mut R) -> Self {
        let n = table.len();
        let mut w = vec![0.0; n];
        for i in sample(rng, n, support.clamp(1, n)) {
            w[i] = rng.gen_range(0.01..1.0);
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        ProbVec {
            table: table.clone(),
            w,
        }
    }

    pub fn table(&self) -> &Arc<GroupTable> {
        &self.table
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn support(&self) -> Vec<u32> {
        (0..self.w.len() as u32).filter(|&i| self.w[i as usize] > 0.0).collect()
    }

    pub fn l2(&self) -> f64 {
        norm(&self.w)
    }

    pub fn linf(&self) -> f64 {
        self.w.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// `‖X - U‖`.
    pub fn dist_uniform(&self) -> f64 {
        let u = 1.0 / self.w.len() as f64;
        let d: Vec<f64> = self.w.iter().map(|x| x - u).collect();
        norm(&d)
    }

    /// `‖X - U‖_∞`.
    pub fn dist_uniform_inf(&self) -> f64 {
        let u = 1.0 / self.w.len() as f64;
        self.w.iter().fold(0.0, |m, &x| m.max((x - u).abs()))
    }

    pub fn transpose(&self) -> ProbVec {
        ProbVec {
            table: self.table.clone(),
            w: transpose_raw(&self.table, &self.w),
        }
    }

    /// `(X·Y)(g) = Σ_{xy=g} X(x)Y(y)`.
    pub fn convolve(&self, o: &ProbVec) -> Result<ProbVec, SpectralError> {
        if !Arc::ptr_eq(&self.table, &o.table) && *self.table.group() != *o.table.group() {
            return Err(SpectralError::EnumerationMismatch);
        }
        Ok(ProbVec {
            table: self.table.clone(),
            w: convolve_raw(&self.table, &self.w, &o.w),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MSource {
    Formula,
    Override,
}

/// `N` and the degree `M` used in the mixing bounds.
#[derive(Debug, Clone, Serialize)]
pub struct GroupProfile {
    pub n: usize,
    pub q: u32,
    pub m: f64,
    /// `M` as the fraction `m_num / m_den`.
    pub m_num: u64,
    pub m_den: u64,
    pub source: MSource,
    /// The formula `M = (q-1)/2` is applied to even `q` unchanged.
    pub even_q: bool,
}

impl GroupProfile {
    pub fn from_table(t: &GroupTable) -> Self {
        let q = t.field().q();
        GroupProfile {
            n: t.len(),
            q,
            m: (q as f64 - 1.0) / 2.0,
            m_num: q as u64 - 1,
            m_den: 2,
            source: MSource::Formula,
            even_q: q.is_multiple_of(2),
        }
    }

    pub fn with_override(t: &GroupTable, m: u64) -> Self {
        GroupProfile {
            m: m as f64,
            m_num: m,
            m_den: 1,
            source: MSource::Override,
            ..Self::from_table(t)
        }
    }

    /// `sqrt(N / M)`.
    pub fn gain(&self) -> f64 {
        (self.n as f64 / self.m).sqrt()
    }
}

/// `lhs <= rhs` up to the relative slack and the probability tolerance.
pub fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + RELATIVE_SLACK) + PROB_TOLERANCE
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingVerdict {
    /// `‖X·Y - U‖`.
    pub l2_lhs: f64,
    /// `sqrt(N/M) ‖X - U‖ ‖Y - U‖`.
    pub l2_rhs: f64,
    pub l2_ok: bool,
    /// `‖X·Y·Z - U‖_∞`.
    pub linf_lhs: Option<f64>,
    /// `sqrt(N/M) ‖X‖ ‖Y‖ ‖Z‖`.
    pub linf_rhs: Option<f64>,
    pub linf_ok: Option<bool>,
}

impl MixingVerdict {
    pub fn passed(&self) -> bool {
        self.l2_ok && self.linf_ok.unwrap_or(true)
    }
}

pub fn mixing_check(
    x: &ProbVec,
    y: &ProbVec,
    z: Option<&ProbVec>,
    profile: &GroupProfile,
) -> Result<MixingVerdict, SpectralError> {
    let xy = x.convolve(y)?;
    let l2_lhs = xy.dist_uniform();
    let l2_rhs = profile.gain() * x.dist_uniform() * y.dist_uniform();
    let (linf_lhs, linf_rhs) = match z {
        Some(z) => {
            let xyz = xy.convolve(z)?;
            (Some(xyz.dist_uniform_inf()), Some(profile.gain() * x.l2() * y.l2() * z.l2()))
        }
        None => (None, None),
    };
    Ok(MixingVerdict {
        l2_lhs,
        l2_rhs,
        l2_ok: within(l2_lhs, l2_rhs),
        linf_lhs,
        linf_rhs,
        linf_ok: linf_lhs.zip(linf_rhs).map(|(l, r)| within(l, r)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Lambda2 {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn pseudo_column(n: usize, j: usize) -> Vec<f64> {
    let salt = 2_654_435_761u64.wrapping_add(40_503 * j as u64);
    (0..n as u64)
        .map(|i| (i.wrapping_add(1).wrapping_mul(salt) % 1_000_003) as f64 / 1_000_003.0 - 0.5)
        .collect()
}

/// Modified Gram-Schmidt against the constants and each other, done twice.
/// Columns that collapse are replaced by fresh pseudo-random vectors.
fn orthonormalize(cols: &mut [Vec<f64>], fresh: &mut usize) {
    let n = cols[0].len();
    for j in 0..cols.len() {
        loop {
            let before = norm(&cols[j]);
            for _ in 0..2 {
                let m = mean(&cols[j]);
                cols[j].iter_mut().for_each(|x| *x -= m);
                for k in 0..j {
                    let (done, rest) = cols.split_at_mut(j);
                    let c = dot(&done[k], &rest[0]);
                    rest[0].iter_mut().zip(&done[k]).for_each(|(x, y)| *x -= c * y);
                }
            }
            let after = norm(&cols[j]);
            if after > 1e-10 * before && after > 1e-200 {
                cols[j].iter_mut().for_each(|x| *x /= after);
                break;
            }
            *fresh += 1;
            cols[j] = pseudo_column(n, *fresh);
        }
    }
}

/// `λ(X)`: the largest singular value of `v -> X·v` on the orthogonal
/// complement of the constants. Block power iteration on `v -> X^T·(X·v)`
/// with Rayleigh-Ritz extraction; stops when the Ritz residual is below
/// `1e-10` relative to the Ritz value.
pub fn lambda2_estimate(x: &ProbVec) -> Result<Lambda2, SpectralError> {
    let t = &x.table;
    let n = t.len();
    if n == 1 {
        return Ok(Lambda2 {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let xt = transpose_raw(t, &x.w);
    let apply = |v: &[f64]| {
        let mut w = convolve_raw(t, &xt, &convolve_raw(t, &x.w, v));
        let m = mean(&w);
        w.iter_mut().for_each(|s| *s -= m);
        w
    };
    let b = (n - 1).min(RITZ_BLOCK);
    let mut fresh = b;
    let mut v: Vec<Vec<f64>> = (0..b).map(|j| pseudo_column(n, j)).collect();
    orthonormalize(&mut v, &mut fresh);
    let mut theta = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=POWER_MAX_ITER {
        let mut w: Vec<Vec<f64>> = v.iter().map(|c| apply(c)).collect();
        let h = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&v[i], &w[j]) + dot(&v[j], &w[i])));
        let eig = h.symmetric_eigen();
        let k = (0..b).fold(0, |k, i| if eig.eigenvalues[i] > eig.eigenvalues[k] { i } else { k });
        theta = eig.eigenvalues[k].max(0.0);
        let s = eig.eigenvectors.column(k);
        let mut r = vec![0.0; n];
        for j in 0..b {
            for i in 0..n {
                r[i] += s[j] * (w[j][i] - theta * v[j][i]);
            }
        }
        residual = norm(&r);
        let scale = w.iter().map(|c| norm(c)).fold(0.0, f64::max);
        if scale <= 1e-15 || residual <= POWER_TOLERANCE * theta {
            return Ok(Lambda2 {
                value: theta.sqrt(),
                iterations: it,
                residual,
            });
        }
        orthonormalize(&mut w, &mut fresh);
        v = w;
    }
    Err(SpectralError::NoConvergence {
        estimate: theta.sqrt(),
        residual,
        iterations: POWER_MAX_ITER,
    })
}

/// The matrix of `v -> X·v`: entry `(g, h)` is `X(g h⁻¹)`.
pub fn convolution_matrix(x: &ProbVec) -> Result<DMatrix<f64>, SpectralError> {
    let t = &x.table;
    let n = t.len();
    if n > DENSE_LIMIT {
        return Err(SpectralError::GroupTooLarge(n, DENSE_LIMIT));
    }
    Ok(DMatrix::from_fn(n, n, |g, h| x.w[t.mul(g as u32, t.inv(h as u32)) as usize]))
}

/// All singular values, decreasing.
pub fn singular_values(x: &ProbVec) -> Result<Vec<f64>, SpectralError> {
    let m = convolution_matrix(x)?;
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `λ(X)` from the dense decomposition: the second singular value, since
/// the constants always carry the singular value 1.
pub fn lambda2_dense(x: &ProbVec) -> Result<f64, SpectralError> {
    let s = singular_values(x)?;
    Ok(s.get(1).copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityReport {
    /// `(singular value, multiplicity)` on the complement of the constants.
    pub clusters: Vec<(f64, usize)>,
    pub min_multiplicity: usize,
    pub m: f64,
    pub ok: bool,
}

/// Every nontrivial singular value has multiplicity at least `M`.
pub fn m2_multiplicity_check(x: &ProbVec, profile: &GroupProfile) -> Result<MultiplicityReport, SpectralError> {
    let mut s = singular_values(x)?;
    s.remove(0);
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for v in s {
        match clusters.last_mut() {
            Some((c, k)) if (*c - v).abs() <= RELATIVE_SLACK => *k += 1,
            _ => clusters.push((v, 1)),
        }
    }
    let min_multiplicity = clusters.iter().map(|c| c.1).min().unwrap_or(0);
    Ok(MultiplicityReport {
        ok: clusters.iter().all(|c| c.1 as f64 >= profile.m),
        clusters,
        min_multiplicity,
        m: profile.m,
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MixingSummary {
    pub l2: Tally,
    pub linf: Tally,
    pub max_l2_ratio: f64,
    pub max_linf_ratio: f64,
}

/// Random triples `(X, Y, Z)`: uniform on random subsets or random weights on
/// random supports.
pub fn mixing_battery<R: Rng>(
    t: &Arc<GroupTable>,
    profile: &GroupProfile,
    trials: usize,
    rng: &mut R,
) -> Result<(Vec<MixingVerdict>, MixingSummary), SpectralError> {
    let n = t.len();
    let pick = |rng: &mut R| {
        let size = rng.gen_range(1..=n);
        if rng.gen_bool(0.5) {
            ProbVec::uniform_on(&crate::growth::random_set(t, size, rng))
        } else {
            ProbVec::random(t, size, rng)
        }
    };
    let inputs: Vec<[ProbVec; 3]> = (0..trials).map(|_| [pick(rng), pick(rng), pick(rng)]).collect();
    let verdicts: Vec<MixingVerdict> = inputs
        .iter()
        .map(|[x, y, z]| mixing_check(x, y, Some(z), profile))
        .collect::<Result<_, _>>()?;
    let mut s = MixingSummary::default();
    for v in &verdicts {
        s.l2.record(Some(v.l2_ok));
        s.linf.record(v.linf_ok);
        if v.l2_rhs > 0.0 {
            s.max_l2_ratio = s.max_l2_ratio.max(v.l2_lhs / v.l2_rhs);
        }
        if let (Some(l), Some(r)) = (v.linf_lhs, v.linf_rhs) {
            s.max_linf_ratio = s.max_linf_ratio.max(l / r);
        }
    }
    Ok((verdicts, s))
}

#[derive(Debug, Clone, Serialize)]
pub struct BnpRow {
    pub trial: u64,
    pub sizes: Vec<usize>,
    /// `|A_1 ... A_t|`.
    pub product: usize,
    pub product_ok: bool,
    /// `|A_1 A_2|`.
    pub pair: usize,
    pub pair_ok: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BnpSummary {
    pub product: Tally,
    pub pair: Tally,
}

/// `|A_1||A_2|...|A_t| >= M^{2-t} N^t`, that is `Π K_i >= M²`, exactly.
pub fn bnp_condition(profile: &GroupProfile, sizes: &[usize]) -> bool {
    let t = sizes.len() as u32;
    let (a, b, n) = (profile.m_num as u128, profile.m_den as u128, profile.n as u128);
    // Π|A_i| · a^t · b^2 >= a^2 · b^t · N^t
    let lhs = sizes.iter().map(|&s| s as u128).product::<u128>() * a.pow(t) * b.pow(2);
    let rhs = a.pow(2) * b.pow(t) * n.pow(t);
    lhs >= rhs
}

/// `|A_1 A_2| > ½ min(K_1 K_2 N/M, N)`, exactly.
pub fn bnp_pair_holds(profile: &GroupProfile, s1: usize, s2: usize, pair: usize) -> bool {
    let (a, b, n) = (profile.m_num as u128, profile.m_den as u128, profile.n as u128);
    let p = (s1 * s2) as u128;
    // K_1 K_2 N / M = s1 s2 M / N
    2 * pair as u128 > n || 2 * (pair as u128) * n * b > p * a
}

/// Random size vectors with `Π K_i >= M²`.
fn bnp_sizes<R: Rng>(profile: &GroupProfile, t: usize, rng: &mut R) -> Vec<usize> {
    let n = profile.n;
    loop {
        let mut sizes: Vec<usize> = Vec::with_capacity(t);
        for i in 0..t {
            let rest = t - i - 1;
            // smallest size that still allows the rest to reach the bound with full sets
            let lo = (1..=n)
                .find(|&s| {
                    let mut v = sizes.clone();
                    v.push(s);
                    v.extend(std::iter::repeat_n(n, rest));
                    bnp_condition(profile, &v)
                })
                .unwrap_or(n);
            sizes.push(rng.gen_range(lo..=n));
        }
        if bnp_condition(profile, &sizes) {
            return sizes;
        }
    }
}

pub fn bnp_generation_check<R: Rng>(
    table: &Arc<GroupTable>,
    profile: &GroupProfile,
    trials: usize,
    rng: &mut R,
) -> (Vec<BnpRow>, BnpSummary) {
    let inputs: Vec<Vec<GroupSet>> = (0..trials)
        .map(|_| {
            let t = rng.gen_range(3..=5);
            bnp_sizes(profile, t, rng)
                .into_iter()
                .map(|s| crate::growth::random_set(table, s, rng))
                .collect()
        })
        .collect();
    let rows: Vec<BnpRow> = inputs
        .par_iter()
        .enumerate()
        .map(|(k, sets)| {
            let pair = sets[0].product(&sets[1]).unwrap();
            let mut prod = pair.clone();
            for s in &sets[2..] {
                prod = prod.product(s).unwrap();
            }
            BnpRow {
                trial: k as u64,
                sizes: sets.iter().map(|s| s.len()).collect(),
                product: prod.len(),
                product_ok: prod.is_full(),
                pair: pair.len(),
                pair_ok: bnp_pair_holds(profile, sets[0].len(), sets[1].len(), pair.len()),
            }
        })
        .collect();
    let mut s = BnpSummary::default();
    for r in &rows {
        s.product.record(Some(r.product_ok));
        s.pair.record(Some(r.pair_ok));
    }
    (rows, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::Mode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(q: u64) -> Arc<GroupTable> {
        GroupTable::build(q, Mode::Sl).unwrap()
    }

    #[test]
    fn deltas_multiply() {
        let t = table(3);
        for g in 0..24 {
            for h in 0..24 {
                let c = ProbVec::delta(&t, g).convolve(&ProbVec::delta(&t, h)).unwrap();
                assert_eq!(c.support(), vec![t.mul(g, h)]);
            }
        }
    }

    #[test]
    fn uniform_absorbs() {
        let t = table(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = ProbVec::uniform(&t);
        for _ in 0..20 {
            let x = ProbVec::random(&t, 10, &mut rng);
            for c in [x.convolve(&u).unwrap(), u.convolve(&x).unwrap()] {
                assert!(c.weights().iter().all(|w| (w - 1.0 / 24.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn rejects_bad_vectors() {
        let t = table(2);
        assert!(ProbVec::new(&t, vec![0.5; 6]).is_err());
        assert!(ProbVec::new(&t, vec![1.0, -0.5, 0.5, 0.0, 0.0, 0.0]).is_err());
        assert!(ProbVec::new(&t, vec![1.0]).is_err());
        assert!(ProbVec::new(&t, vec![1.0 / 6.0; 6]).is_ok());
    }

    #[test]
    fn delta_mixing_closed_form() {
        let t = table(5);
        let p = GroupProfile::from_table(&t);
        let g = 7;
        let d = ProbVec::delta(&t, g);
        let v = mixing_check(&d, &d, None, &p).unwrap();
        let n = 120.0f64;
        assert!((v.l2_lhs - (1.0 - 1.0 / n).sqrt()).abs() < 1e-12);
        assert!((v.l2_rhs - p.gain() * (1.0 - 1.0 / n)).abs() < 1e-12);
        assert!(v.l2_lhs < v.l2_rhs);
        let u = ProbVec::uniform(&t);
        let v = mixing_check(&u, &u, Some(&u), &p).unwrap();
        assert!(v.l2_lhs < 1e-15 && v.l2_rhs < 1e-15 && v.passed());
    }

    #[test]
    fn lambda2_trivial_cases() {
        let t = table(3);
        assert!(lambda2_estimate(&ProbVec::uniform(&t)).unwrap().value < 1e-12);
        let l = lambda2_estimate(&ProbVec::delta(&t, 5)).unwrap().value;
        assert!((l - 1.0).abs() < 1e-10);
    }

    #[test]
    fn delta_spectrum_is_flat() {
        let t = table(3);
        let p = GroupProfile::from_table(&t);
        let r = m2_multiplicity_check(&ProbVec::delta(&t, 3), &p).unwrap();
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.clusters[0].1, 23);
        assert!(r.ok);
        let u = m2_multiplicity_check(&ProbVec::uniform(&t), &p).unwrap();
        assert_eq!(u.clusters.len(), 1);
        assert!(u.clusters[0].0.abs() < 1e-12);
    }

    #[test]
    fn bnp_condition_is_exact() {
        let t = table(5);
        let p = GroupProfile::from_table(&t);
        // N/M = 60, so sizes 60·K with K1 K2 K3 = 4 sit exactly on the bound
        assert!(bnp_condition(&p, &[120, 120, 60]));
        assert!(!bnp_condition(&p, &[120, 119, 60]));
        let g = GroupSet::whole(&t);
        assert!(g.product(&g).unwrap().is_full());
    }
}
