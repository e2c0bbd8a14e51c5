//! Empirical checks of the explicit constants in the lemmas on element
//! abundance, traces outside subfields, centralizers, subgroup escape, trace
//! generation and fibre multiplicities in `SL_2(F_q)`.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::exec::{run_rows, RunOutcome};
use crate::growth::Member;
use crate::setops::{Balls, Bits, GroupSet};
use crate::sl2::{ElementClass, GroupTable, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    SemisimpleInA3,
    NonzeroTraceInA3,
    OutsideSubfieldA9,
    OutsideSubfieldA4,
    CentralizerBound,
    OutsideTwoSubgroups,
    TraceGenerationA6,
    TraceGenerationA3,
    Escape,
    FibreMultiplicity,
    FibreMultiplicityDisjoint,
    DiagonalTriple,
    TracesOfQuotients,
}

/// How a case value is compared with the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `value >= bound`.
    AtLeast,
    /// `value > bound`.
    Above,
    /// `value <= bound`.
    AtMost,
    /// `value == bound`.
    Equal,
    /// Recorded only; fails when no value exists.
    Measured,
}

impl LemmaId {
    pub const ALL: [LemmaId; 13] = [
        LemmaId::SemisimpleInA3,
        LemmaId::NonzeroTraceInA3,
        LemmaId::OutsideSubfieldA9,
        LemmaId::OutsideSubfieldA4,
        LemmaId::CentralizerBound,
        LemmaId::OutsideTwoSubgroups,
        LemmaId::TraceGenerationA6,
        LemmaId::TraceGenerationA3,
        LemmaId::Escape,
        LemmaId::FibreMultiplicity,
        LemmaId::FibreMultiplicityDisjoint,
        LemmaId::DiagonalTriple,
        LemmaId::TracesOfQuotients,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::SemisimpleInA3 => "semisimple_in_A3",
            LemmaId::NonzeroTraceInA3 => "nonzero_trace_in_A3",
            LemmaId::OutsideSubfieldA9 => "outside_subfield_A9",
            LemmaId::OutsideSubfieldA4 => "outside_subfield_A4",
            LemmaId::CentralizerBound => "centralizer_bound",
            LemmaId::OutsideTwoSubgroups => "outside_two_subgroups_A4",
            LemmaId::TraceGenerationA6 => "trace_generation_A6",
            LemmaId::TraceGenerationA3 => "trace_generation_A3_odd",
            LemmaId::Escape => "escape_from_zero_entries",
            LemmaId::FibreMultiplicity => "fibre_multiplicity",
            LemmaId::FibreMultiplicityDisjoint => "fibre_multiplicity_disjoint_fix",
            LemmaId::DiagonalTriple => "diagonal_triple_product",
            LemmaId::TracesOfQuotients => "traces_of_quotients",
        }
    }

    /// Statement checked, in terms of the ratio recorded per case.
    pub fn statement(self) -> &'static str {
        match self {
            LemmaId::SemisimpleInA3 => "|A^[3] ∩ G_s| / |A| >= 1/4 when <A> is nonabelian",
            LemmaId::NonzeroTraceInA3 => "|A^[3] ∤ 0| / |A| >= 1/4",
            LemmaId::OutsideSubfieldA9 => "|A^[9] ∤ E| / |A| >= 1/12 for proper subfields E",
            LemmaId::OutsideSubfieldA4 => "|A^[4] ∤ E| / |A| >= 1/12 when |A ∤ E| > 0",
            LemmaId::CentralizerBound => "max_a |C_{AA^-1}(a)| |A^-1AA| / (|Tr A| |A|) >= 1",
            LemmaId::OutsideTwoSubgroups => "min_{H,K} |A^[4] \\ (H ∪ K)| / |A| > 1/4",
            LemmaId::TraceGenerationA6 => "degree of <Tr(A^[6])> equals n",
            LemmaId::TraceGenerationA3 => "degree of <Tr(A^[3])> equals n in odd characteristic",
            LemmaId::Escape => "least k with a in A^[k], a^u without zero entries",
            LemmaId::FibreMultiplicity => "mult(b -> (Tr b, Tr gb, Tr hb)) <= 2 when Fix(h) \\ Fix(g) is nonempty",
            LemmaId::FibreMultiplicityDisjoint => "mult(b -> (Tr b, Tr gb, Tr hb)) <= 2 when Fix(g) ∩ Fix(h) is empty",
            LemmaId::DiagonalTriple => "|V g V g^-1 V| / |V|^3 >= 1/12",
            LemmaId::TracesOfQuotients => "|Tr(UU^-1)| |Diag(U)| / |U| >= 1/2",
        }
    }

    pub fn bound(self) -> (BoundKind, f64) {
        match self {
            LemmaId::SemisimpleInA3 | LemmaId::NonzeroTraceInA3 => (BoundKind::AtLeast, 0.25),
            LemmaId::OutsideSubfieldA9 | LemmaId::OutsideSubfieldA4 | LemmaId::DiagonalTriple => {
                (BoundKind::AtLeast, 1.0 / 12.0)
            }
            LemmaId::CentralizerBound => (BoundKind::AtLeast, 1.0),
            LemmaId::OutsideTwoSubgroups => (BoundKind::Above, 0.25),
            LemmaId::TraceGenerationA6 | LemmaId::TraceGenerationA3 => (BoundKind::Equal, 1.0),
            LemmaId::Escape => (BoundKind::Measured, f64::INFINITY),
            LemmaId::FibreMultiplicity | LemmaId::FibreMultiplicityDisjoint => (BoundKind::AtMost, 2.0),
            LemmaId::TracesOfQuotients => (BoundKind::AtLeast, 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Case {
    pub lemma: LemmaId,
    pub value: f64,
    pub ok: bool,
}

impl Case {
    fn ratio(lemma: LemmaId, num: u64, den: u64, ok: bool) -> Case {
        Case {
            lemma,
            value: num as f64 / den as f64,
            ok,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub set_id: u64,
    pub codes: Vec<u128>,
    pub cases: Vec<Case>,
    pub skipped: Vec<LemmaId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaVerdict {
    pub lemma: LemmaId,
    pub name: &'static str,
    pub statement: &'static str,
    pub kind: BoundKind,
    pub bound: f64,
    pub cases: u64,
    pub skipped: u64,
    pub violations: u64,
    /// Smallest ratio for lower bounds, largest value otherwise.
    pub worst: Option<f64>,
    pub worst_set: Option<u64>,
    pub worst_codes: Option<Vec<u128>>,
}

impl LemmaVerdict {
    pub fn new(lemma: LemmaId) -> Self {
        let (kind, bound) = lemma.bound();
        LemmaVerdict {
            lemma,
            name: lemma.name(),
            statement: lemma.statement(),
            kind,
            bound,
            cases: 0,
            skipped: 0,
            violations: 0,
            worst: None,
            worst_set: None,
            worst_codes: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn absorb(&mut self, case: &Case, set_id: u64, codes: &[u128]) {
        self.cases += 1;
        if !case.ok {
            self.violations += 1;
        }
        let lower_is_worse = matches!(self.kind, BoundKind::AtLeast | BoundKind::Above | BoundKind::Equal);
        let worse = match self.worst {
            None => true,
            Some(w) if lower_is_worse => case.value < w,
            Some(w) => case.value > w,
        };
        if worse {
            self.worst = Some(case.value);
            self.worst_set = Some(set_id);
            self.worst_codes = Some(codes.to_vec());
        }
    }
}

/// Folds rows into one verdict per lemma that occurred, in `LemmaId` order.
pub fn fold_verdicts(rows: &[LemmaRow]) -> Vec<LemmaVerdict> {
    let mut verdicts: Vec<LemmaVerdict> = LemmaId::ALL.iter().map(|&l| LemmaVerdict::new(l)).collect();
    let slot = |l: LemmaId| LemmaId::ALL.iter().position(|&x| x == l).unwrap();
    for r in rows {
        for c in &r.cases {
            verdicts[slot(c.lemma)].absorb(c, r.set_id, &r.codes);
        }
        for &l in &r.skipped {
            verdicts[slot(l)].skipped += 1;
        }
    }
    verdicts.into_iter().filter(|v| v.cases + v.skipped > 0).collect()
}

/// Which proper subgroups to test the two-subgroup escape against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupFamily {
    /// Maximal subgroups among all 2-generated subgroups.
    Exhaustive,
    /// Borel subgroups, torus normalizers and subfield subgroups.
    Natural,
}

#[derive(Debug, Clone)]
pub struct LabOptions {
    pub subgroups: SubgroupFamily,
    /// Ordered pairs `(g, h)` from each set fed to the fibre check.
    pub fibre_pairs_per_set: usize,
    /// Distinct eigenbases per set for the escape check.
    pub escape_bases_per_set: usize,
    /// Restricts `check_member` to these lemmas; all when `None`.
    pub only: Option<Vec<LemmaId>>,
}

impl LabOptions {
    pub fn for_table(t: &GroupTable) -> Self {
        LabOptions {
            subgroups: if t.len() <= 360 {
                SubgroupFamily::Exhaustive
            } else {
                SubgroupFamily::Natural
            },
            fibre_pairs_per_set: 2,
            escape_bases_per_set: 8,
            only: None,
        }
    }
}

pub struct LemmaLab {
    table: Arc<GroupTable>,
    opts: LabOptions,
    /// Proper subfield degrees and membership by code.
    subfields: Vec<(u32, Vec<bool>)>,
    subgroups: Vec<Bits>,
    semisimple: Vec<bool>,
}

impl LemmaLab {
    pub fn new(table: Arc<GroupTable>, opts: LabOptions) -> Self {
        let f = table.field();
        let subfields = f
            .subfield_degrees()
            .into_iter()
            .filter(|&m| m < f.n())
            .map(|m| {
                let mut mask = vec![false; f.q() as usize];
                for x in f.subfield_elements(m) {
                    mask[x as usize] = true;
                }
                (m, mask)
            })
            .collect();
        let subgroups = match opts.subgroups {
            _ if !opts.only.as_ref().is_none_or(|v| v.contains(&LemmaId::OutsideTwoSubgroups)) => Vec::new(),
            SubgroupFamily::Exhaustive => maximal_subgroups(&table),
            SubgroupFamily::Natural => natural_subgroups(&table),
        };
        let semisimple = (0..table.len() as u32)
            .map(|i| table.classify(i) == ElementClass::Semisimple)
            .collect();
        LemmaLab {
            table,
            opts,
            subfields,
            subgroups,
            semisimple,
        }
    }

    pub fn table(&self) -> &Arc<GroupTable> {
        &self.table
    }

    pub fn subgroups(&self) -> &[Bits] {
        &self.subgroups
    }

    pub fn wants(&self, l: LemmaId) -> bool {
        self.opts.only.as_ref().is_none_or(|v| v.contains(&l))
    }

    /// All checks that take a single generating set.
    pub fn check_member(&self, m: &Member) -> LemmaRow {
        let t = &self.table;
        let a = &m.set;
        let size = a.len() as u64;
        let mut cases = Vec::new();
        let mut skipped = Vec::new();
        let q = t.field().q();
        let p = t.field().p();
        let n = t.field().n();
        let want = |l| self.wants(l);

        let mut balls = Balls::new(a);
        balls.grow_to(2);
        let a2 = balls.current();
        balls.grow_to(3);
        let a3 = balls.current();

        if want(LemmaId::SemisimpleInA3) {
            if a.is_abelian() {
                skipped.push(LemmaId::SemisimpleInA3);
            } else {
                let s = a3.indices().iter().filter(|&&i| self.semisimple[i as usize]).count() as u64;
                cases.push(Case::ratio(LemmaId::SemisimpleInA3, s, size, 4 * s >= size));
            }
        }
        if want(LemmaId::NonzeroTraceInA3) {
            let nz = a3.indices().iter().filter(|&&i| t.trace(i) != 0).count() as u64;
            cases.push(Case::ratio(LemmaId::NonzeroTraceInA3, nz, size, 4 * nz >= size));
        }

        if p % 2 == 1 && want(LemmaId::TraceGenerationA3) {
            let deg = t.field().subfield_generated(a3.traces()).unwrap();
            cases.push(Case::ratio(LemmaId::TraceGenerationA3, deg as u64, n as u64, deg == n));
        }

        let rest = [
            LemmaId::OutsideSubfieldA4,
            LemmaId::OutsideTwoSubgroups,
            LemmaId::TraceGenerationA6,
            LemmaId::OutsideSubfieldA9,
        ];
        if rest.iter().any(|&l| want(l)) {
            balls.grow_to(4);
            let a4 = balls.current();
            if want(LemmaId::OutsideSubfieldA4) {
                for (_, mask) in &self.subfields {
                    let outside =
                        |s: &GroupSet| s.indices().iter().filter(|&&i| !mask[t.trace(i) as usize]).count() as u64;
                    if outside(a) > 0 {
                        let o4 = outside(&a4);
                        cases.push(Case::ratio(LemmaId::OutsideSubfieldA4, o4, size, 12 * o4 >= size));
                    } else {
                        skipped.push(LemmaId::OutsideSubfieldA4);
                    }
                }
            }

            if want(LemmaId::OutsideTwoSubgroups) && !self.subgroups.is_empty() {
                let (best, _, _) = self.two_subgroup_min(&a4.bits());
                cases.push(Case::ratio(LemmaId::OutsideTwoSubgroups, best, size, 4 * best > size));
            }

            if want(LemmaId::TraceGenerationA6) || want(LemmaId::OutsideSubfieldA9) {
                balls.grow_to(6);
            }
            if want(LemmaId::TraceGenerationA6) {
                let deg = t.field().subfield_generated(balls.current().traces()).unwrap();
                cases.push(Case::ratio(LemmaId::TraceGenerationA6, deg as u64, n as u64, deg == n));
            }

            if want(LemmaId::OutsideSubfieldA9) {
                balls.grow_to(9);
                let a9 = balls.current();
                for (_, mask) in &self.subfields {
                    let o9 = a9.indices().iter().filter(|&&i| !mask[t.trace(i) as usize]).count() as u64;
                    cases.push(Case::ratio(LemmaId::OutsideSubfieldA9, o9, size, 12 * o9 >= size));
                }
            }
        }

        if want(LemmaId::CentralizerBound) {
            cases.push(self.centralizer_case(a));
        }

        if want(LemmaId::Escape) {
            if q >= 4 {
                match self.escape_k(a, &a2) {
                    Some(k) => cases.push(Case {
                        lemma: LemmaId::Escape,
                        value: k as f64,
                        ok: true,
                    }),
                    None => cases.push(Case {
                        lemma: LemmaId::Escape,
                        value: f64::INFINITY,
                        ok: false,
                    }),
                }
            } else {
                skipped.push(LemmaId::Escape);
            }
        }

        if want(LemmaId::FibreMultiplicity) || want(LemmaId::FibreMultiplicityDisjoint) {
            let mut pairs = 0;
            'pairs: for &g in a.indices() {
                for &h in a.indices() {
                    if pairs >= self.opts.fibre_pairs_per_set {
                        break 'pairs;
                    }
                    let found: Vec<Case> = self.fibre_cases(g, h).into_iter().filter(|c| want(c.lemma)).collect();
                    if !found.is_empty() {
                        cases.extend(found);
                        pairs += 1;
                    }
                }
            }
            if pairs == 0 {
                skipped.push(LemmaId::FibreMultiplicity);
            }
        }

        if want(LemmaId::TracesOfQuotients) {
            for u in [a, &a2] {
                let nontri = u.filter(|i| !t.elem(i).is_triangular());
                match self.traces_of_quotients_case(&nontri) {
                    Some(c) => cases.push(c),
                    None => skipped.push(LemmaId::TracesOfQuotients),
                }
            }
        }

        LemmaRow {
            set_id: m.id,
            codes: a.codes(),
            cases,
            skipped,
        }
    }

    /// `max_a |C_{AA^-1}(a)| >= |Tr(A)||A| / |A^-1AA|`.
    pub fn centralizer_case(&self, a: &GroupSet) -> Case {
        let t = &self.table;
        let aai = a.product(&a.inverse()).unwrap();
        let aiaa = a.inverse().product(a).unwrap().product(a).unwrap();
        let best = a
            .indices()
            .iter()
            .map(|&x| aai.indices().iter().filter(|&&y| t.commute(x, y)).count() as u64)
            .max()
            .unwrap();
        let num = best * aiaa.len() as u64;
        let den = a.traces().len() as u64 * a.len() as u64;
        Case::ratio(LemmaId::CentralizerBound, num, den, num >= den)
    }

    /// Smallest `|B \ (H ∪ K)|` over subgroup pairs, with the minimizing pair.
    pub fn two_subgroup_min(&self, b: &Bits) -> (u64, usize, usize) {
        let total = b.count() as u64;
        let mut hits: Vec<(u64, usize)> = self
            .subgroups
            .iter()
            .enumerate()
            .map(|(k, h)| (b.intersection_count(h) as u64, k))
            .collect();
        hits.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
        let mut best = (u64::MAX, 0, 0);
        for i in 0..hits.len() {
            let (hi, ki) = hits[i];
            if total.saturating_sub(2 * hi) >= best.0 {
                break;
            }
            for &(hj, kj) in &hits[i..] {
                if total.saturating_sub(hi + hj) >= best.0 {
                    break;
                }
                let both = if ki == kj {
                    hi
                } else {
                    b.triple_count(&self.subgroups[ki], &self.subgroups[kj]) as u64
                };
                let v = total + both - hi - hj;
                if v < best.0 {
                    best = (v, ki, kj);
                }
            }
        }
        best
    }

    /// Largest over eigenbases `u` of semisimple elements of `A^[2]` of the
    /// least `k` with some `a in A^[k]` such that `a^u` has no zero entry.
    pub fn escape_k(&self, a: &GroupSet, a2: &GroupSet) -> Option<usize> {
        let t = &self.table;
        let g = t.group();
        let mut bases = Vec::new();
        let mut seen = HashSet::new();
        for &i in a2.indices() {
            if bases.len() >= self.opts.escape_bases_per_set {
                break;
            }
            if !self.semisimple[i as usize] {
                continue;
            }
            let m = t.elem(i);
            let fix = g.fixed_points(m).ok()??;
            if seen.insert(fix) {
                bases.push(g.diagonalize(m).ok()?);
            }
        }
        let mut worst = 0;
        for dz in bases {
            let mut balls = Balls::new(a);
            let mut checked = Bits::new(t.len());
            let k = loop {
                balls.grow();
                let hit = balls.seen().iter().filter(|&x| checked.insert(x)).any(|x| {
                    let c = g.conj_ext(t.elem(x), &dz.w, &dz.w_inv).unwrap();
                    !c.has_zero_entry()
                });
                if hit {
                    break Some(balls.radius());
                }
                if balls.is_full() {
                    break None;
                }
            };
            worst = worst.max(k?);
        }
        Some(worst)
    }

    /// `mult(F) <= 2` for `F(b) = (Tr b, Tr gb, Tr hb)` over the whole group.
    /// Empty unless `g` is semisimple, `h` is not central and
    /// `Fix(h) \ Fix(g)` is nonempty. A second case is added when the fixed
    /// point sets are disjoint.
    pub fn fibre_cases(&self, g: u32, h: u32) -> Vec<Case> {
        let t = &self.table;
        let grp = t.group();
        if !self.semisimple[g as usize] || t.classify(h) == ElementClass::Central {
            return Vec::new();
        }
        let (Ok(Some(fg)), Ok(Some(fh))) = (grp.fixed_points(t.elem(g)), grp.fixed_points(t.elem(h))) else {
            return Vec::new();
        };
        if fh.iter().all(|p| fg.contains(p)) {
            return Vec::new();
        }
        let m = self.fibre_multiplicity(g, h);
        let mut out = vec![Case {
            lemma: LemmaId::FibreMultiplicity,
            value: m as f64,
            ok: m <= 2,
        }];
        if !fh.iter().any(|p| fg.contains(p)) {
            out.push(Case {
                lemma: LemmaId::FibreMultiplicityDisjoint,
                value: m as f64,
                ok: m <= 2,
            });
        }
        out
    }

    pub fn fibre_multiplicity(&self, g: u32, h: u32) -> usize {
        let t = &self.table;
        let mut keys: Vec<u64> = (0..t.len() as u32)
            .map(|b| {
                let k = [t.trace(b), t.trace(t.mul(g, b)), t.trace(t.mul(h, b))];
                ((k[0] as u64) << 42) | ((k[1] as u64) << 21) | k[2] as u64
            })
            .collect();
        keys.sort_unstable();
        keys.chunk_by(|x, y| x == y).map(|c| c.len()).max().unwrap_or(0)
    }

    /// `|V g V g^-1 V| >= |V|^3 / 12` for `V = D_X`, `g` without zero entries.
    /// `None` when the hypotheses fail.
    pub fn diagonal_triple_case(&self, x: &[u32], g: u32) -> Option<Case> {
        let t = &self.table;
        let grp = t.group();
        let f = t.field();
        if t.elem(g).has_zero_entry() || x.is_empty() {
            return None;
        }
        let minus_one = f.neg(1);
        if x.iter().all(|&s| s == 1 || s == minus_one) {
            return None;
        }
        let v = GroupSet::from_indices(
            &self.table,
            x.iter().map(|&s| t.index_of(&grp.diag(s).unwrap()).unwrap()),
        );
        let gs = GroupSet::singleton(&self.table, g);
        let gi = GroupSet::singleton(&self.table, t.inv(g));
        let prod = v
            .product(&gs)
            .and_then(|s| s.product(&v))
            .and_then(|s| s.product(&gi))
            .and_then(|s| s.product(&v))
            .unwrap();
        let num = prod.len() as u64;
        let cube = (v.len() as u64).pow(3);
        Some(Case::ratio(LemmaId::DiagonalTriple, num, cube, 12 * num >= cube))
    }

    /// `|Tr(UU^-1)| >= |U| / (2 |Diag(U)|)` for nonempty `U` without
    /// triangular elements.
    pub fn traces_of_quotients_case(&self, u: &GroupSet) -> Option<Case> {
        let t = &self.table;
        if u.is_empty() || u.indices().iter().any(|&i| t.elem(i).is_triangular()) {
            return None;
        }
        let tr = u.product(&u.inverse()).unwrap().traces().len() as u64;
        let mut diag: Vec<(u32, u32)> = u.mats().iter().map(|m| (m.a, m.d)).collect();
        diag.sort_unstable();
        diag.dedup();
        let num = 2 * tr * diag.len() as u64;
        let den = u.len() as u64;
        Some(Case::ratio(LemmaId::TracesOfQuotients, num, den, num >= den))
    }
}

/// Runs the single-set checks over a family.
pub fn verify_family(lab: &LemmaLab, family: &[Member], budget: Option<u64>) -> (RunOutcome<LemmaRow>, Vec<LemmaVerdict>) {
    let out = run_rows(family, budget, |m| lab.check_member(m));
    let verdicts = fold_verdicts(&out.rows);
    (out, verdicts)
}

/// Every ordered pair `(g, h)` for the fibre check, one row per `g`.
pub fn exhaustive_fibre_rows(lab: &LemmaLab) -> Vec<LemmaRow> {
    let n = lab.table.len() as u32;
    let gs: Vec<u32> = (0..n).collect();
    run_rows(&gs, None, |&g| {
        let cases = (0..n).flat_map(|h| lab.fibre_cases(g, h)).collect();
        LemmaRow {
            set_id: g as u64,
            codes: vec![lab.table.code(g)],
            cases,
            skipped: Vec::new(),
        }
    })
    .rows
}

fn diagonal_candidates(lab: &LemmaLab) -> Vec<u32> {
    (0..lab.table.len() as u32)
        .filter(|&g| !lab.table.elem(g).has_zero_entry())
        .collect()
}

/// Every subset `X` of `F_q^×` against every `g` without zero entries.
pub fn exhaustive_diagonal_rows(lab: &LemmaLab) -> Vec<LemmaRow> {
    let q = lab.table.field().q();
    let units: Vec<u32> = (1..q).collect();
    let subsets: Vec<Vec<u32>> = (1u64..1 << units.len())
        .map(|mask| {
            units
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect();
    let gs = diagonal_candidates(lab);
    run_rows(&subsets, None, |x| {
        let cases = gs.iter().filter_map(|&g| lab.diagonal_triple_case(x, g)).collect();
        LemmaRow {
            set_id: 0,
            codes: x.iter().map(|&s| s as u128).collect(),
            cases,
            skipped: Vec::new(),
        }
    })
    .rows
    .into_iter()
    .enumerate()
    .map(|(k, mut r)| {
        r.set_id = k as u64;
        r
    })
    .collect()
}

/// Random `(X, g)` cases for the diagonal triple product.
pub fn random_diagonal_rows<R: Rng>(lab: &LemmaLab, count: usize, rng: &mut R) -> Vec<LemmaRow> {
    let q = lab.table.field().q() as usize;
    let gs = diagonal_candidates(lab);
    let inputs: Vec<(Vec<u32>, u32)> = (0..count)
        .map(|_| {
            let size = rng.gen_range(2..q);
            let x: Vec<u32> = sample(rng, q - 1, size).into_iter().map(|i| i as u32 + 1).collect();
            (x, gs[rng.gen_range(0..gs.len())])
        })
        .collect();
    run_rows(&inputs, None, |(x, g)| {
        let mut codes: Vec<u128> = x.iter().map(|&s| s as u128).collect();
        codes.sort_unstable();
        codes.push(lab.table.code(*g));
        LemmaRow {
            set_id: 0,
            codes,
            cases: lab.diagonal_triple_case(x, *g).into_iter().collect(),
            skipped: Vec::new(),
        }
    })
    .rows
    .into_iter()
    .enumerate()
    .map(|(k, mut r)| {
        r.set_id = k as u64;
        r
    })
    .collect()
}

/// Proper subgroups generated by at most two elements, reduced to the
/// maximal ones among them.
pub fn maximal_subgroups(t: &Arc<GroupTable>) -> Vec<Bits> {
    let n = t.len() as u32;
    let pairs: Vec<(u32, u32)> = (0..n).flat_map(|g| (g..n).map(move |h| (g, h))).collect();
    let closures = run_rows(&pairs, None, |&(g, h)| GroupSet::from_indices(t, [g, h]).closure().bits()).rows;
    let mut found: Vec<Bits> = closures
        .into_iter()
        .filter(|b| b.count() < n as usize)
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    found.extend(natural_subgroups(t));
    found.sort_by(|a, b| b.count().cmp(&a.count()).then_with(|| a.to_vec().cmp(&b.to_vec())));
    found.dedup();
    let mut maximal: Vec<Bits> = Vec::new();
    for h in found {
        if !maximal.iter().any(|m| h.is_subset(m)) {
            maximal.push(h);
        }
    }
    maximal
}

/// Stabilizers of points and point pairs of `P^1(F_{q^2})` (Borel subgroups
/// and torus normalizers) and the standard subfield subgroups.
pub fn natural_subgroups(t: &Arc<GroupTable>) -> Vec<Bits> {
    let g = t.group();
    let f = t.field();
    let ext = g.ext().expect("extension exists for enumerable groups");
    let big = ext.big();
    let q = f.q();
    let act = |m: &Mat2, (x, y): (u32, u32)| {
        let e = |c: u32| ext.embed(c);
        let u = big.add(big.mul(e(m.a), x), big.mul(e(m.b), y));
        let v = big.add(big.mul(e(m.c), x), big.mul(e(m.d), y));
        crate::sl2::normalize_point(big, (u, v))
    };
    let mut rational: Vec<(u32, u32)> = vec![(0, 1)];
    rational.extend((0..q).map(|y| (1, ext.embed(y))));
    let mut orbits: Vec<Vec<(u32, u32)>> = rational.iter().map(|&p| vec![p]).collect();
    for i in 0..rational.len() {
        for j in i + 1..rational.len() {
            orbits.push(vec![rational[i], rational[j]]);
        }
    }
    for y in 0..big.q() {
        if ext.unembed(y).is_some() {
            continue;
        }
        let conj = big.pow(y, q as u64);
        if y < conj {
            orbits.push(vec![(1, y), (1, conj)]);
        }
    }
    let mut out: Vec<Bits> = orbits
        .iter()
        .map(|pts| {
            Bits::from_iter(
                t.len(),
                (0..t.len() as u32).filter(|&i| pts.iter().all(|&p| pts.contains(&act(t.elem(i), p)))),
            )
        })
        .collect();
    for m in f.subfield_degrees() {
        if m == f.n() {
            continue;
        }
        let sub = f.subfield_elements(m);
        let mut mask = vec![false; q as usize];
        for x in sub {
            mask[x as usize] = true;
        }
        out.push(Bits::from_iter(
            t.len(),
            (0..t.len() as u32).filter(|&i| {
                let e = t.elem(i);
                [e.a, e.b, e.c, e.d].iter().all(|&c| mask[c as usize])
            }),
        ));
    }
    out.retain(|b| b.count() < t.len());
    out.sort_by_key(|b| b.to_vec());
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::{build_family, FamilySpec};
    use crate::sl2::Mode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn maximal_subgroup_orders_a5() {
        // A_5 = PSL_2(F_5): maximal subgroups A_4 (5), D_10 (6), S_3 (10)
        let t = GroupTable::build(5, Mode::Psl).unwrap();
        let mut orders: Vec<usize> = maximal_subgroups(&t).iter().map(|b| b.count()).collect();
        orders.sort_unstable();
        let mut expected = vec![6; 10];
        expected.extend(vec![10; 6]);
        expected.extend(vec![12; 5]);
        assert_eq!(orders, expected);
    }

    #[test]
    fn natural_subgroups_sl2_f5() {
        let t = GroupTable::build(5, Mode::Sl).unwrap();
        let subs = natural_subgroups(&t);
        let count = |k: usize| subs.iter().filter(|b| b.count() == k).count();
        assert_eq!(count(20), 6);
        assert_eq!(count(8), 5);
        assert_eq!(count(12), 10);
    }

    #[test]
    fn central_h_breaks_fibre_bound() {
        let t = GroupTable::build(5, Mode::Sl).unwrap();
        let lab = LemmaLab::new(t.clone(), LabOptions::for_table(&t));
        let g = (0..t.len() as u32).find(|&i| lab.semisimple[i as usize]).unwrap();
        assert!(lab.fibre_multiplicity(g, t.identity()) > 2);
        assert!(lab.fibre_cases(g, t.identity()).is_empty());
    }

    #[test]
    fn fibre_bound_fails_exactly_on_shared_fixed_points() {
        let t = GroupTable::build(5, Mode::Sl).unwrap();
        let lab = LemmaLab::new(t.clone(), LabOptions::for_table(&t));
        let grp = t.group();
        for g in 0..t.len() as u32 {
            for h in 0..t.len() as u32 {
                let cases = lab.fibre_cases(g, h);
                let Some(stated) = cases.first() else { continue };
                let fg = grp.fixed_points(t.elem(g)).unwrap().unwrap();
                let fh = grp.fixed_points(t.elem(h)).unwrap().unwrap();
                let shared = fh.iter().any(|p| fg.contains(p));
                assert_eq!(stated.ok, !shared);
                if shared {
                    assert_eq!(stated.value, 5.0);
                } else {
                    assert!(cases[1].ok);
                }
            }
        }
    }

    #[test]
    fn two_subgroup_min_matches_brute_force() {
        let t = GroupTable::build(7, Mode::Sl).unwrap();
        let lab = LemmaLab::new(t.clone(), LabOptions::for_table(&t));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fam = build_family(&t, &FamilySpec::Random { sizes: vec![2, 3], count: 20 }, &mut rng).unwrap();
        for m in fam {
            for r in 1..4 {
                let b = m.set.ball(r).bits();
                let subs = lab.subgroups();
                let brute = (0..subs.len())
                    .flat_map(|i| (0..subs.len()).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        (b.count() + b.triple_count(&subs[i], &subs[j])
                            - b.intersection_count(&subs[i])
                            - b.intersection_count(&subs[j])) as u64
                    })
                    .min()
                    .unwrap();
                assert_eq!(lab.two_subgroup_min(&b).0, brute);
            }
        }
    }

    #[test]
    fn member_checks_pass_on_small_groups() {
        let t = GroupTable::build(5, Mode::Sl).unwrap();
        let lab = LemmaLab::new(t.clone(), LabOptions::for_table(&t));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fam = build_family(&t, &FamilySpec::Random { sizes: vec![2, 5], count: 30 }, &mut rng).unwrap();
        let (out, verdicts) = verify_family(&lab, &fam, None);
        assert_eq!(out.rows.len(), 60);
        for v in verdicts.iter().filter(|v| v.lemma != LemmaId::FibreMultiplicity) {
            assert!(v.passed(), "{v:?}");
        }
    }
}
