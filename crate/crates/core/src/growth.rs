//! Growth exponents, Cayley graph diameters and scans over families of
//! generating sets.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exec::{run_rows, RunOutcome};
use crate::setops::{Balls, GroupSet};
use crate::sl2::GroupTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrowthError {
    #[error("set does not generate the group")]
    NotGenerating,
    #[error("no generating set of size {0} found")]
    NoGeneratingSet(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiameterResult {
    /// Least `k` with `S^[k] = G`.
    pub diam: usize,
    /// Least `k` with `(S ∪ {1})^(k) = G`.
    pub diam_plus: usize,
    /// `|S^[k]|` for `k = 0..=diam`.
    pub profile: Vec<usize>,
}

pub fn cayley_diameter(s: &GroupSet) -> Result<DiameterResult, GrowthError> {
    let mut balls = Balls::new(s);
    let mut profile = vec![1];
    while balls.grow() {
        profile.push(balls.size());
    }
    if !balls.is_full() {
        return Err(GrowthError::NotGenerating);
    }
    let mut directed = Balls::directed(s);
    while directed.grow() {}
    Ok(DiameterResult {
        diam: balls.radius(),
        diam_plus: directed.radius(),
        profile,
    })
}

/// `diam` by repeated full products `S^[k+1] = S^[k] S^[1]`.
pub fn naive_diameter(s: &GroupSet) -> Result<usize, GrowthError> {
    let s1 = s.symmetrize();
    let mut cur = GroupSet::singleton(s.table(), s.table().identity());
    let mut k = 0;
    while !cur.is_full() {
        let next = cur.product(&s1).expect("same table");
        if next.len() == cur.len() {
            return Err(GrowthError::NotGenerating);
        }
        cur = next;
        k += 1;
    }
    Ok(k)
}

/// `log|A^(3)| / log|A| - 1`, undefined for `|A| < 2`.
pub fn epsilon(size_a: usize, size_a3: usize) -> Option<f64> {
    if size_a < 2 {
        return None;
    }
    Some((size_a3 as f64).ln() / (size_a as f64).ln() - 1.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SaturationTrace {
    /// `|A_0|, |A_1|, ...` with `A_0 = A^[1]` and `A_{i+1} = A_i^(3)`.
    pub sizes: Vec<usize>,
    pub triplings: usize,
}

pub fn iterate_to_saturation(a: &GroupSet) -> Result<SaturationTrace, GrowthError> {
    if !a.generates() {
        return Err(GrowthError::NotGenerating);
    }
    let mut cur = a.symmetrize();
    let mut sizes = vec![cur.len()];
    while !cur.is_full() {
        cur = cur.power_product(3);
        sizes.push(cur.len());
    }
    Ok(SaturationTrace {
        triplings: sizes.len() - 1,
        sizes,
    })
}

/// A set in a scan family. `weight` is the number of ordered generating
/// tuples it stands for.
#[derive(Debug, Clone)]
pub struct Member {
    pub id: u64,
    pub set: GroupSet,
    pub weight: u64,
}

/// Representative `(g, h)` of an orbit of ordered pairs under simultaneous
/// conjugation, with the orbit size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairOrbit {
    pub g: u32,
    pub h: u32,
    pub weight: u64,
}

/// One representative per conjugation orbit of ordered pairs. `g` runs over
/// class representatives and `h` over orbits of the centralizer of `g`; each
/// representative is the smallest index in its orbit.
pub fn pair_orbits(t: &GroupTable) -> Vec<PairOrbit> {
    let n = t.len();
    let classes = t.conjugacy_classes();
    let mut class_size = vec![0u64; n];
    for &c in &classes {
        class_size[c as usize] += 1;
    }
    let mut reps = Vec::new();
    let mut seen_class = vec![false; n];
    for g in 0..n as u32 {
        let c = classes[g as usize] as usize;
        if !seen_class[c] {
            seen_class[c] = true;
            reps.push((g, class_size[c]));
        }
    }
    let mut out = Vec::new();
    for (g, csize) in reps {
        let cent = t.centralizer(g);
        let mut visited = vec![false; n];
        for h in 0..n as u32 {
            if visited[h as usize] {
                continue;
            }
            let mut size = 0u64;
            for &c in &cent {
                let x = t.conj(h, c) as usize;
                if !visited[x] {
                    visited[x] = true;
                    size += 1;
                }
            }
            out.push(PairOrbit {
                g,
                h,
                weight: csize * size,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Unordered pairs `{g, h}` that generate.
    AllPairs,
    /// Generating pairs up to simultaneous conjugation.
    PairsModConjugacy,
    /// Uniform random generating sets, `count` per size.
    Random { sizes: Vec<usize>, count: usize },
}

/// Materializes a family of generating sets in a fixed order.
pub fn build_family<R: Rng>(t: &Arc<GroupTable>, spec: &FamilySpec, rng: &mut R) -> Result<Vec<Member>, GrowthError> {
    let n = t.len() as u32;
    let mut out = Vec::new();
    match spec {
        FamilySpec::AllPairs => {
            for g in 0..n {
                for h in g + 1..n {
                    let s = GroupSet::from_indices(t, [g, h]);
                    if s.generates() {
                        out.push(Member {
                            id: out.len() as u64,
                            set: s,
                            weight: 2,
                        });
                    }
                }
            }
        }
        FamilySpec::PairsModConjugacy => {
            for o in pair_orbits(t) {
                let s = GroupSet::from_indices(t, [o.g, o.h]);
                if s.generates() {
                    out.push(Member {
                        id: out.len() as u64,
                        set: s,
                        weight: o.weight,
                    });
                }
            }
        }
        FamilySpec::Random { sizes, count } => {
            for &size in sizes {
                for _ in 0..*count {
                    let s = random_generating_set(t, size, rng)?;
                    out.push(Member {
                        id: out.len() as u64,
                        set: s,
                        weight: 1,
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn random_set<R: Rng>(t: &Arc<GroupTable>, size: usize, rng: &mut R) -> GroupSet {
    let size = size.min(t.len());
    GroupSet::from_indices(t, sample(rng, t.len(), size).into_iter().map(|i| i as u32))
}

/// Rejection-samples a generating set of the given size.
pub fn random_generating_set<R: Rng>(t: &Arc<GroupTable>, size: usize, rng: &mut R) -> Result<GroupSet, GrowthError> {
    for _ in 0..10_000 {
        let s = random_set(t, size, rng);
        if s.generates() {
            return Ok(s);
        }
    }
    Err(GrowthError::NoGeneratingSet(size))
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub set_id: u64,
    pub codes: Vec<u128>,
    pub size_a: usize,
    pub size_a3: usize,
    pub epsilon: Option<f64>,
    pub diam: usize,
    pub diam_plus: usize,
    pub saturated: bool,
    pub weight: u64,
}

pub fn growth_row(m: &Member) -> GrowthRow {
    let a3 = m.set.power_product(3);
    let d = cayley_diameter(&m.set).expect("family members generate");
    GrowthRow {
        set_id: m.id,
        codes: m.set.codes(),
        size_a: m.set.len(),
        size_a3: a3.len(),
        epsilon: epsilon(m.set.len(), a3.len()),
        diam: d.diam,
        diam_plus: d.diam_plus,
        saturated: a3.is_full(),
        weight: m.weight,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthSummary {
    pub rows_scanned: usize,
    pub saturated: usize,
    pub epsilon_min: Option<f64>,
    pub epsilon_min_set: Option<u64>,
    pub diam_max: usize,
    pub diam_plus_max: usize,
    pub diam_mean: f64,
    pub diam_histogram: BTreeMap<usize, u64>,
    pub truncated: bool,
}

pub fn summarize_growth(out: &RunOutcome<GrowthRow>) -> GrowthSummary {
    let mut eps_min: Option<(f64, u64)> = None;
    let mut hist = BTreeMap::new();
    let (mut wsum, mut dsum) = (0u64, 0f64);
    for r in &out.rows {
        if !r.saturated {
            if let Some(e) = r.epsilon {
                if eps_min.is_none_or(|(m, _)| e < m) {
                    eps_min = Some((e, r.set_id));
                }
            }
        }
        *hist.entry(r.diam).or_insert(0) += r.weight;
        wsum += r.weight;
        dsum += r.weight as f64 * r.diam as f64;
    }
    GrowthSummary {
        rows_scanned: out.rows.len(),
        saturated: out.rows.iter().filter(|r| r.saturated).count(),
        epsilon_min: eps_min.map(|e| e.0),
        epsilon_min_set: eps_min.map(|e| e.1),
        diam_max: out.rows.iter().map(|r| r.diam).max().unwrap_or(0),
        diam_plus_max: out.rows.iter().map(|r| r.diam_plus).max().unwrap_or(0),
        diam_mean: if wsum > 0 { dsum / wsum as f64 } else { 0.0 },
        diam_histogram: hist,
        truncated: out.truncated,
    }
}

pub fn growth_scan(family: &[Member], budget: Option<u64>) -> (RunOutcome<GrowthRow>, GrowthSummary) {
    let out = run_rows(family, budget, growth_row);
    let summary = summarize_growth(&out);
    (out, summary)
}

/// Fit of `diam <= C log2^d |G|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolylogFit {
    /// Minimax fit of `log2 diam = log2 C + d log2 log2 |G|`.
    pub c: f64,
    pub d: f64,
    pub max_residual: f64,
    /// Smallest `C` with `diam <= C log2^d |G|` at every point, for the fitted `d`.
    pub c_envelope: f64,
    /// Same with `d = 2`.
    pub c_envelope_d2: f64,
}

/// Chebyshev line fit in log-log coordinates over `(|G|, diam)` points.
pub fn fit_polylog(points: &[(u64, usize)]) -> Option<PolylogFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(g, d)| *g > 2 && *d > 0)
        .map(|&(g, d)| ((g as f64).log2().log2(), (d as f64).log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let spread = |d: f64| {
        let r = pts.iter().map(|(x, y)| y - d * x);
        let (lo, hi) = r.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        (hi - lo, lo, hi)
    };
    let (mut a, mut b) = (-8.0f64, 8.0f64);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if spread(m1).0 <= spread(m2).0 {
            b = m2;
        } else {
            a = m1;
        }
    }
    let d = 0.5 * (a + b);
    let (w, lo, hi) = spread(d);
    let envelope = |d: f64| {
        points
            .iter()
            .filter(|(g, _)| *g > 2)
            .map(|&(g, diam)| diam as f64 / (g as f64).log2().powf(d))
            .fold(0.0f64, f64::max)
    };
    Some(PolylogFit {
        c: 2f64.powf(0.5 * (lo + hi)),
        d,
        max_residual: 0.5 * w,
        c_envelope: envelope(d),
        c_envelope_d2: envelope(2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::{Mat2, Mode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn known_diameters() {
        let t = GroupTable::build(2, Mode::Sl).unwrap();
        // SL_2(F_2) is S_3; two involutions give the 6-cycle Cayley graph
        let s = GroupSet::from_mats(&t, &[Mat2::new(0, 1, 1, 0), Mat2::new(1, 1, 0, 1)]).unwrap();
        let d = cayley_diameter(&s).unwrap();
        assert_eq!(d.diam, 3);
        assert_eq!(d.diam_plus, 3);
        assert_eq!(d.profile, vec![1, 3, 5, 6]);
        let h = GroupSet::from_mats(&t, &[Mat2::new(1, 1, 0, 1)]).unwrap();
        assert_eq!(cayley_diameter(&h), Err(GrowthError::NotGenerating));
    }

    #[test]
    fn whole_group_saturates_immediately() {
        let t = GroupTable::build(3, Mode::Sl).unwrap();
        let tr = iterate_to_saturation(&GroupSet::whole(&t)).unwrap();
        assert_eq!(tr.sizes, vec![24]);
        assert_eq!(tr.triplings, 0);
    }

    #[test]
    fn orbit_weights_cover_all_pairs() {
        for q in [2u64, 3, 4, 5] {
            let t = GroupTable::build(q, Mode::Sl).unwrap();
            let n = t.len() as u64;
            let orbits = pair_orbits(&t);
            assert_eq!(orbits.iter().map(|o| o.weight).sum::<u64>(), n * n);
        }
    }

    #[test]
    fn a5_generating_pairs() {
        // PSL_2(F_5) = A_5 has 2280 ordered generating pairs
        let t = GroupTable::build(5, Mode::Psl).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all = build_family(&t, &FamilySpec::AllPairs, &mut rng).unwrap();
        assert_eq!(all.iter().map(|m| m.weight).sum::<u64>(), 2280);
        let orb = build_family(&t, &FamilySpec::PairsModConjugacy, &mut rng).unwrap();
        assert_eq!(orb.iter().map(|m| m.weight).sum::<u64>(), 2280);
    }

    #[test]
    fn polylog_fit_recovers_exact_power() {
        let pts: Vec<(u64, usize)> = [64u64, 4096, 1 << 20]
            .iter()
            .map(|&g| (g, (3.0 * (g as f64).log2().powi(2)).round() as usize))
            .collect();
        let fit = fit_polylog(&pts).unwrap();
        assert!((fit.d - 2.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.c - 3.0).abs() < 1e-2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn diameter_relations(seed in any::<u64>(), q in prop::sample::select(vec![2u64, 3, 4, 5]), size in 2usize..5) {
                let t = GroupTable::build(q, Mode::Sl).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_generating_set(&t, size, &mut rng).unwrap();
                let d = cayley_diameter(&s).unwrap();
                prop_assert!(d.diam <= d.diam_plus);
                prop_assert!(d.profile.windows(2).all(|w| w[0] < w[1]));
                let tr = iterate_to_saturation(&s).unwrap();
                let expected = (0..).find(|&k| 3usize.pow(k) >= d.diam).unwrap() as usize;
                prop_assert_eq!(tr.triplings, expected);
                let g = rand::Rng::gen_range(&mut rng, 0..t.len() as u32);
                let dc = cayley_diameter(&s.conj(g)).unwrap();
                prop_assert_eq!(dc, d);
            }
        }
    }
}
