//! Finite subsets of `SL_2(F_q)` and of `F_q`, with product sets, word balls,
//! closures and trace sets.

use std::cell::Cell;
use std::sync::Arc;

use thiserror::Error;

use crate::gf::FieldCtx;
use crate::sl2::{GroupTable, Mat2};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetError {
    #[error("sets live in different groups or fields")]
    ContextMismatch,
    #[error("matrix {0:?} is not in the group")]
    NotInGroup(Mat2),
    #[error("element {0} is not allowed here")]
    InvalidElement(u32),
    #[error("empty set")]
    EmptySet,
}

thread_local! {
    static OPS: Cell<u64> = const { Cell::new(0) };
}

/// Elementary operations performed on this thread since the last reset.
pub fn ops() -> u64 {
    OPS.with(|c| c.get())
}

pub fn reset_ops() {
    OPS.with(|c| c.set(0));
}

#[inline]
fn charge(n: u64) {
    OPS.with(|c| c.set(c.get() + n));
}

/// Fixed-size bit set over `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    words: Vec<u64>,
    count: usize,
}

impl Bits {
    pub fn new(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
            count: 0,
        }
    }

    pub fn from_iter<I: IntoIterator<Item = u32>>(len: usize, it: I) -> Self {
        let mut b = Bits::new(len);
        for i in it {
            b.insert(i);
        }
        b
    }

    /// Returns true if `i` was not present.
    #[inline]
    pub fn insert(&mut self, i: u32) -> bool {
        let (w, m) = (i as usize / 64, 1u64 << (i % 64));
        let fresh = self.words[w] & m == 0;
        if fresh {
            self.words[w] |= m;
            self.count += 1;
        }
        fresh
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        self.words[i as usize / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn intersection_count(&self, o: &Bits) -> usize {
        self.words.iter().zip(&o.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn triple_count(&self, o: &Bits, r: &Bits) -> usize {
        self.words
            .iter()
            .zip(&o.words)
            .zip(&r.words)
            .map(|((a, b), c)| (a & b & c).count_ones() as usize)
            .sum()
    }

    pub fn is_subset(&self, o: &Bits) -> bool {
        self.words.iter().zip(&o.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros();
                b &= b - 1;
                Some(w as u32 * 64 + t)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }
}

/// A subset of an enumerated group, stored as sorted element indices.
#[derive(Debug, Clone)]
pub struct GroupSet {
    table: Arc<GroupTable>,
    idx: Vec<u32>,
}

impl PartialEq for GroupSet {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.table, &o.table) && self.idx == o.idx
    }
}

impl Eq for GroupSet {}

impl GroupSet {
    pub fn from_indices<I: IntoIterator<Item = u32>>(table: &Arc<GroupTable>, it: I) -> Self {
        let mut idx: Vec<u32> = it.into_iter().collect();
        idx.sort_unstable();
        idx.dedup();
        GroupSet {
            table: table.clone(),
            idx,
        }
    }

    pub fn from_mats(table: &Arc<GroupTable>, mats: &[Mat2]) -> Result<Self, SetError> {
        let idx = mats
            .iter()
            .map(|m| table.index_of(m).ok_or(SetError::NotInGroup(*m)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_indices(table, idx))
    }

    fn from_bits(table: &Arc<GroupTable>, bits: &Bits) -> Self {
        GroupSet {
            table: table.clone(),
            idx: bits.to_vec(),
        }
    }

    pub fn whole(table: &Arc<GroupTable>) -> Self {
        Self::from_indices(table, 0..table.len() as u32)
    }

    pub fn singleton(table: &Arc<GroupTable>, i: u32) -> Self {
        Self::from_indices(table, [i])
    }

    pub fn table(&self) -> &Arc<GroupTable> {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.idx
    }

    pub fn contains(&self, i: u32) -> bool {
        self.idx.binary_search(&i).is_ok()
    }

    pub fn mats(&self) -> Vec<Mat2> {
        self.idx.iter().map(|&i| *self.table.elem(i)).collect()
    }

    pub fn codes(&self) -> Vec<u128> {
        self.idx.iter().map(|&i| self.table.code(i)).collect()
    }

    pub fn bits(&self) -> Bits {
        Bits::from_iter(self.table.len(), self.idx.iter().copied())
    }

    pub fn is_full(&self) -> bool {
        self.idx.len() == self.table.len()
    }

    fn same(&self, o: &GroupSet) -> Result<(), SetError> {
        if Arc::ptr_eq(&self.table, &o.table) || self.table.group() == o.table.group() {
            Ok(())
        } else {
            Err(SetError::ContextMismatch)
        }
    }

    /// `AB`.
    pub fn product(&self, o: &GroupSet) -> Result<GroupSet, SetError> {
        self.same(o)?;
        let t = &self.table;
        let n = t.len();
        let mut bits = Bits::new(n);
        let mut done = 0u64;
        'outer: for &a in &self.idx {
            for &b in &o.idx {
                bits.insert(t.mul(a, b));
            }
            done += o.idx.len() as u64;
            if bits.count() == n {
                break 'outer;
            }
        }
        charge(done);
        Ok(Self::from_bits(t, &bits))
    }

    pub fn inverse(&self) -> GroupSet {
        Self::from_indices(&self.table, self.idx.iter().map(|&i| self.table.inv(i)))
    }

    pub fn union(&self, o: &GroupSet) -> Result<GroupSet, SetError> {
        self.same(o)?;
        Ok(Self::from_indices(&self.table, self.idx.iter().chain(&o.idx).copied()))
    }

    pub fn intersection(&self, o: &GroupSet) -> Result<GroupSet, SetError> {
        self.same(o)?;
        Ok(self.filter(|i| o.contains(i)))
    }

    pub fn difference(&self, o: &GroupSet) -> Result<GroupSet, SetError> {
        self.same(o)?;
        Ok(self.filter(|i| !o.contains(i)))
    }

    pub fn filter<F: Fn(u32) -> bool>(&self, keep: F) -> GroupSet {
        GroupSet {
            table: self.table.clone(),
            idx: self.idx.iter().copied().filter(|&i| keep(i)).collect(),
        }
    }

    pub fn map<F: Fn(u32) -> u32>(&self, f: F) -> GroupSet {
        Self::from_indices(&self.table, self.idx.iter().map(|&i| f(i)))
    }

    /// `A^[1] = A ∪ A^-1 ∪ {1}`.
    pub fn symmetrize(&self) -> GroupSet {
        let t = &self.table;
        Self::from_indices(
            t,
            self.idx
                .iter()
                .flat_map(|&i| [i, t.inv(i)])
                .chain([t.identity()]),
        )
    }

    /// `A^[n]`, words of length at most `n` in `A ∪ A^-1`.
    pub fn ball(&self, n: usize) -> GroupSet {
        let mut balls = Balls::new(self);
        for _ in 0..n {
            if !balls.grow() {
                break;
            }
        }
        balls.current()
    }

    /// `A^(n) = A A ... A` with `n` factors.
    pub fn power_product(&self, n: usize) -> GroupSet {
        assert!(n >= 1);
        let mut acc = self.clone();
        for _ in 1..n {
            if acc.is_full() {
                break;
            }
            acc = acc.product(self).unwrap();
        }
        acc
    }

    /// `{a^k : a in A}`.
    pub fn elementwise_power(&self, k: u64) -> GroupSet {
        let g = self.table.group();
        let t = &self.table;
        self.map(|i| t.index_of(&g.pow(t.elem(i), k)).unwrap())
    }

    /// `<A>` by breadth-first closure.
    pub fn closure(&self) -> GroupSet {
        let mut balls = Balls::new(self);
        while balls.grow() {}
        balls.current()
    }

    pub fn generates(&self) -> bool {
        self.closure().is_full()
    }

    /// Whether all elements commute pairwise (so `<A>` is abelian).
    pub fn is_abelian(&self) -> bool {
        let t = &self.table;
        self.idx
            .iter()
            .enumerate()
            .all(|(k, &a)| self.idx[k + 1..].iter().all(|&b| t.commute(a, b)))
    }

    /// `A^g = g^-1 A g`.
    pub fn conj(&self, g: u32) -> GroupSet {
        let t = &self.table;
        self.map(|i| t.conj(i, g))
    }

    pub fn trace_set(&self) -> FieldSet {
        FieldSet::from_codes(
            &self.table.group().field_arc(),
            self.idx.iter().map(|&i| self.table.trace(i)),
        )
    }

    /// Sorted trace codes without building a `FieldSet`.
    pub fn traces(&self) -> Vec<u32> {
        let mut t: Vec<u32> = self.idx.iter().map(|&i| self.table.trace(i)).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// `A|_X` when `inside`, else `A∤X`; `x` is a sorted code list.
    pub fn trace_filter(&self, x: &[u32], inside: bool) -> GroupSet {
        let t = &self.table;
        self.filter(|i| x.binary_search(&t.trace(i)).is_ok() == inside)
    }

    /// `log2(|A B^-1| / sqrt(|A||B|))`.
    pub fn ruzsa_distance(&self, o: &GroupSet) -> Result<f64, SetError> {
        if self.is_empty() || o.is_empty() {
            return Err(SetError::EmptySet);
        }
        let ab = self.product(&o.inverse())?;
        Ok((ab.len() as f64).log2() - 0.5 * ((self.len() as f64).log2() + (o.len() as f64).log2()))
    }
}

/// Successive word balls `A^[0] ⊆ A^[1] ⊆ ...` grown by frontier expansion.
pub struct Balls {
    table: Arc<GroupTable>,
    gens: Vec<u32>,
    seen: Bits,
    frontier: Vec<u32>,
    radius: usize,
}

impl Balls {
    pub fn new(a: &GroupSet) -> Self {
        let t = a.table().clone();
        let gens = a.symmetrize().idx;
        let mut seen = Bits::new(t.len());
        seen.insert(t.identity());
        Balls {
            frontier: vec![t.identity()],
            table: t,
            gens,
            seen,
            radius: 0,
        }
    }

    /// Directed balls `(A ∪ {1})^(k)`: right multiplication by `A` only.
    pub fn directed(a: &GroupSet) -> Self {
        let mut b = Balls::new(a);
        b.gens = a.indices().to_vec();
        b
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn size(&self) -> usize {
        self.seen.count()
    }

    pub fn seen(&self) -> &Bits {
        &self.seen
    }

    pub fn is_full(&self) -> bool {
        self.seen.count() == self.table.len()
    }

    /// Extends the radius by one. Returns false if the ball did not change.
    pub fn grow(&mut self) -> bool {
        let t = &self.table;
        let mut next = Vec::new();
        for &x in &self.frontier {
            for &s in &self.gens {
                let y = t.mul(x, s);
                if self.seen.insert(y) {
                    next.push(y);
                }
            }
        }
        charge((self.frontier.len() * self.gens.len()) as u64);
        self.frontier = next;
        if self.frontier.is_empty() {
            return false;
        }
        self.radius += 1;
        true
    }

    /// Grows until the radius is `n` or the ball stops changing.
    pub fn grow_to(&mut self, n: usize) {
        while self.radius < n && self.grow() {}
    }

    pub fn current(&self) -> GroupSet {
        GroupSet::from_bits(&self.table, &self.seen)
    }
}

/// A subset of `F_q`, stored as sorted codes.
#[derive(Debug, Clone)]
pub struct FieldSet {
    field: Arc<FieldCtx>,
    codes: Vec<u32>,
}

impl PartialEq for FieldSet {
    fn eq(&self, o: &Self) -> bool {
        *self.field == *o.field && self.codes == o.codes
    }
}

impl Eq for FieldSet {}

impl FieldSet {
    pub fn from_codes<I: IntoIterator<Item = u32>>(field: &Arc<FieldCtx>, it: I) -> Self {
        let mut codes: Vec<u32> = it.into_iter().collect();
        codes.sort_unstable();
        codes.dedup();
        FieldSet {
            field: field.clone(),
            codes,
        }
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn contains(&self, x: u32) -> bool {
        self.codes.binary_search(&x).is_ok()
    }

    fn same(&self, o: &FieldSet) -> Result<(), SetError> {
        if *self.field == *o.field {
            Ok(())
        } else {
            Err(SetError::ContextMismatch)
        }
    }

    fn nonzero(&self) -> Result<(), SetError> {
        if self.contains(0) {
            Err(SetError::InvalidElement(0))
        } else {
            Ok(())
        }
    }

    fn combine<F: Fn(u32, u32) -> u32>(&self, o: &FieldSet, op: F) -> Result<FieldSet, SetError> {
        self.same(o)?;
        let q = self.field.q() as usize;
        let mut bits = Bits::new(q);
        for &a in &self.codes {
            for &b in &o.codes {
                bits.insert(op(a, b));
            }
            if bits.count() == q {
                break;
            }
        }
        charge((self.len() * o.len()) as u64);
        Ok(FieldSet {
            field: self.field.clone(),
            codes: bits.to_vec(),
        })
    }

    pub fn sum(&self, o: &FieldSet) -> Result<FieldSet, SetError> {
        let f = self.field.clone();
        self.combine(o, |a, b| f.add(a, b))
    }

    pub fn difference_set(&self, o: &FieldSet) -> Result<FieldSet, SetError> {
        let f = self.field.clone();
        self.combine(o, |a, b| f.sub(a, b))
    }

    pub fn product(&self, o: &FieldSet) -> Result<FieldSet, SetError> {
        let f = self.field.clone();
        self.combine(o, |a, b| f.mul(a, b))
    }

    /// `bA`.
    pub fn dilate(&self, b: u32) -> FieldSet {
        let f = &self.field;
        Self::from_codes(f, self.codes.iter().map(|&a| f.mul(a, b)))
    }

    pub fn map<F: Fn(u32) -> u32>(&self, op: F) -> FieldSet {
        Self::from_codes(&self.field, self.codes.iter().map(|&a| op(a)))
    }

    pub fn inverse(&self) -> Result<FieldSet, SetError> {
        self.nonzero()?;
        let f = &self.field;
        Ok(self.map(|a| f.inv(a).unwrap()))
    }

    /// Multiplicative ball `A^[n]` inside `F_q^×`.
    pub fn mul_ball(&self, n: usize) -> Result<FieldSet, SetError> {
        self.nonzero()?;
        let f = &self.field;
        let gens = Self::from_codes(f, self.codes.iter().flat_map(|&a| [a, f.inv(a).unwrap()]).chain([1]));
        let mut acc = Self::from_codes(f, [1]);
        for _ in 0..n {
            let next = acc.product(&gens)?;
            if next.len() == acc.len() {
                break;
            }
            acc = next;
        }
        Ok(acc)
    }

    /// `{x^2}`.
    pub fn squares(&self) -> FieldSet {
        let f = &self.field;
        self.map(|a| f.mul(a, a))
    }

    /// `tr(A) = {x + 1/x}`.
    pub fn tr_image(&self) -> Result<FieldSet, SetError> {
        self.nonzero()?;
        let f = &self.field;
        Ok(self.map(|a| f.tr(a).unwrap()))
    }

    pub fn union(&self, o: &FieldSet) -> Result<FieldSet, SetError> {
        self.same(o)?;
        Ok(Self::from_codes(&self.field, self.codes.iter().chain(&o.codes).copied()))
    }

    pub fn without(&self, x: u32) -> FieldSet {
        Self::from_codes(&self.field, self.codes.iter().copied().filter(|&a| a != x))
    }

    pub fn is_subset(&self, o: &FieldSet) -> bool {
        self.codes.iter().all(|&a| o.contains(a))
    }

    /// Degree `m` of the subfield generated by the set (the subring it
    /// generates, since a finite subring of a field is a field).
    pub fn generated_degree(&self) -> Result<u32, SetError> {
        self.field
            .subfield_generated(self.codes.iter().copied())
            .map_err(|_| SetError::EmptySet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::Mode;

    fn table(q: u64) -> Arc<GroupTable> {
        GroupTable::build(q, Mode::Sl).unwrap()
    }

    #[test]
    fn subgroup_closure_is_idempotent() {
        let t = table(3);
        // upper unitriangular matrices form a subgroup of order 3
        let a = GroupSet::from_mats(&t, &[Mat2::new(1, 1, 0, 1)]).unwrap();
        let h = a.closure();
        assert_eq!(h.len(), 3);
        assert_eq!(h.product(&h).unwrap(), h);
        assert_eq!(h.ball(5), h);
        let g = GroupSet::whole(&t);
        assert_eq!(g.product(&a).unwrap(), g);
    }

    #[test]
    fn ball_matches_iterated_products() {
        let t = table(5);
        let a = GroupSet::from_mats(&t, &[Mat2::new(1, 1, 0, 1), Mat2::new(2, 0, 1, 3)]).unwrap();
        let s = a.symmetrize();
        let mut naive = GroupSet::singleton(&t, t.identity());
        for n in 0..8 {
            assert_eq!(a.ball(n), naive, "radius {n}");
            naive = naive.product(&s).unwrap();
        }
        assert!(a.generates());
    }

    #[test]
    fn directed_ball_is_positive_words() {
        let t = table(3);
        let a = GroupSet::from_mats(&t, &[Mat2::new(1, 1, 0, 1), Mat2::new(1, 0, 1, 1)]).unwrap();
        let with_one = a.union(&GroupSet::singleton(&t, t.identity())).unwrap();
        let mut b = Balls::directed(&a);
        for k in 1..6 {
            b.grow_to(k);
            assert_eq!(b.current(), with_one.power_product(k));
        }
    }

    #[test]
    fn mismatched_contexts() {
        let a = GroupSet::whole(&table(2));
        let b = GroupSet::whole(&table(3));
        assert_eq!(a.product(&b), Err(SetError::ContextMismatch));
        let f = Arc::new(FieldCtx::from_order(7).unwrap());
        let x = FieldSet::from_codes(&f, [0, 1]);
        assert_eq!(x.inverse(), Err(SetError::InvalidElement(0)));
        assert_eq!(a.ruzsa_distance(&a.filter(|_| false)), Err(SetError::EmptySet));
    }

    #[test]
    fn field_sets() {
        let f = Arc::new(FieldCtx::from_order(9).unwrap());
        let f3 = FieldSet::from_codes(&f, f.subfield_elements(1));
        assert_eq!(f3.sum(&f3).unwrap(), f3);
        assert_eq!(f3.product(&f3).unwrap(), f3);
        assert_eq!(f3.generated_degree().unwrap(), 1);
        let g = FieldSet::from_codes(&f, [f.primitive()]);
        assert_eq!(g.mul_ball(8).unwrap().len(), 8);
        assert_eq!(g.generated_degree().unwrap(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sets(q: u64) -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<u32>)> {
            let n = (q * (q * q - 1)) as u32;
            let s = || prop::collection::vec(0..n, 1..12);
            (s(), s(), s())
        }

        proptest! {
            #[test]
            fn ruzsa_triangle_and_quasi_metric((a, b, c) in sets(5)) {
                let t = table(5);
                let (a, b, c) = (GroupSet::from_indices(&t, a), GroupSet::from_indices(&t, b), GroupSet::from_indices(&t, c));
                let lhs = a.product(&b).unwrap().len() * c.len();
                let rhs = a.product(&c.inverse()).unwrap().len() * c.product(&b).unwrap().len();
                prop_assert!(lhs <= rhs);
                let dab = a.ruzsa_distance(&b).unwrap();
                prop_assert!(dab >= -1e-12);
                prop_assert!((dab - b.ruzsa_distance(&a).unwrap()).abs() < 1e-12);
                let dac = a.ruzsa_distance(&c).unwrap();
                let dcb = c.ruzsa_distance(&b).unwrap();
                prop_assert!(dab <= dac + dcb + 1e-12);
            }

            #[test]
            fn ball_monotone_and_symmetric((a, _, _) in sets(3)) {
                let t = table(3);
                let a = GroupSet::from_indices(&t, a);
                let mut prev = a.ball(0);
                for n in 1..6 {
                    let cur = a.ball(n);
                    prop_assert!(prev.indices().iter().all(|&i| cur.contains(i)));
                    prop_assert_eq!(cur.inverse(), cur.clone());
                    prev = cur;
                }
                let p3 = a.power_product(3);
                let cubes = a.elementwise_power(3);
                prop_assert!(cubes.indices().iter().all(|&i| p3.contains(i)));
            }
        }
    }
}
