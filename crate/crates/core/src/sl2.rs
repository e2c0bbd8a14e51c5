//! `SL_2(F_q)` and `PSL_2(F_q)`: elements, classification, diagonalization
//! over `F_{q^2}`, and indexed element tables.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{FieldCtx, FieldError, QuadExt};

/// Groups up to this order get a full multiplication table.
pub const CAYLEY_LIMIT: usize = 4096;
/// Largest group order `GroupTable` will enumerate.
pub const ENUM_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Sl2Error {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("matrix {0:?} is not in SL_2")]
    NotInGroup([u64; 4]),
    #[error("element is not semisimple")]
    NotSemisimple,
    #[error("elements belong to different groups")]
    ContextMismatch,
    #[error("group of order {0} is too large to enumerate")]
    GroupTooLarge(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sl,
    Psl,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sl" => Ok(Mode::Sl),
            "psl" => Ok(Mode::Psl),
            _ => Err(format!("unknown mode {s:?}, expected sl or psl")),
        }
    }
}

/// A 2x2 matrix of field codes, row major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[u32; 4]", from = "[u32; 4]")]
pub struct Mat2 {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl From<Mat2> for [u32; 4] {
    fn from(m: Mat2) -> Self {
        [m.a, m.b, m.c, m.d]
    }
}

impl From<[u32; 4]> for Mat2 {
    fn from(e: [u32; 4]) -> Self {
        Mat2::new(e[0], e[1], e[2], e[3])
    }
}

impl Mat2 {
    pub const fn new(a: u32, b: u32, c: u32, d: u32) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Mat2::new(1, 0, 0, 1)
    }

    /// Row-major entry codes packed into 128 bits.
    pub fn code(&self) -> u128 {
        ((self.a as u128) << 96) | ((self.b as u128) << 64) | ((self.c as u128) << 32) | self.d as u128
    }

    pub fn from_code(code: u128) -> Self {
        let m = u32::MAX as u128;
        Mat2::new((code >> 96) as u32, (code >> 64 & m) as u32, (code >> 32 & m) as u32, (code & m) as u32)
    }

    pub fn has_zero_entry(&self) -> bool {
        self.a == 0 || self.b == 0 || self.c == 0 || self.d == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.b == 0 && self.c == 0
    }

    /// Upper or lower triangular.
    pub fn is_triangular(&self) -> bool {
        self.b == 0 || self.c == 0
    }

    pub fn mul(&self, f: &FieldCtx, o: &Mat2) -> Mat2 {
        Mat2::new(
            f.add(f.mul(self.a, o.a), f.mul(self.b, o.c)),
            f.add(f.mul(self.a, o.b), f.mul(self.b, o.d)),
            f.add(f.mul(self.c, o.a), f.mul(self.d, o.c)),
            f.add(f.mul(self.c, o.b), f.mul(self.d, o.d)),
        )
    }

    pub fn det(&self, f: &FieldCtx) -> u32 {
        f.sub(f.mul(self.a, self.d), f.mul(self.b, self.c))
    }

    /// Inverse of a determinant-one matrix.
    pub fn adjugate(&self, f: &FieldCtx) -> Mat2 {
        Mat2::new(self.d, f.neg(self.b), f.neg(self.c), self.a)
    }

    pub fn neg(&self, f: &FieldCtx) -> Mat2 {
        Mat2::new(f.neg(self.a), f.neg(self.b), f.neg(self.c), f.neg(self.d))
    }

    pub fn trace(&self, f: &FieldCtx) -> u32 {
        f.add(self.a, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementClass {
    Central,
    Unipotent,
    Semisimple,
}

/// `g = w diag(x, 1/x) w^-1` with entries in `F_{q^2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diagonalization {
    pub x: u32,
    pub x_inv: u32,
    pub w: Mat2,
    pub w_inv: Mat2,
}

/// The group `SL_2(F_q)` or `PSL_2(F_q)` over a field context.
#[derive(Debug)]
pub struct Sl2 {
    field: Arc<FieldCtx>,
    mode: Mode,
    ext: OnceLock<Result<QuadExt, FieldError>>,
}

impl PartialEq for Sl2 {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode && *self.field == *other.field
    }
}

impl Sl2 {
    pub fn new(field: Arc<FieldCtx>, mode: Mode) -> Self {
        Sl2 {
            field,
            mode,
            ext: OnceLock::new(),
        }
    }

    pub fn field(&self) -> &FieldCtx {
        &self.field
    }

    pub fn field_arc(&self) -> Arc<FieldCtx> {
        self.field.clone()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// `q(q^2 - 1)`, halved for `PSL` in odd characteristic.
    pub fn order(&self) -> u64 {
        let q = self.q() as u64;
        let sl = q * (q * q - 1);
        match self.mode {
            Mode::Sl => sl,
            Mode::Psl => sl / if q % 2 == 1 { 2 } else { 1 },
        }
    }

    pub fn ext(&self) -> Result<&QuadExt, Sl2Error> {
        self.ext
            .get_or_init(|| self.field.quadratic_extension())
            .as_ref()
            .map_err(|e| Sl2Error::Field(e.clone()))
    }

    pub fn element(&self, a: u64, b: u64, c: u64, d: u64) -> Result<Mat2, Sl2Error> {
        let f = &self.field;
        let bad = || Sl2Error::NotInGroup([a, b, c, d]);
        let m = Mat2::new(
            f.check(a).map_err(|_| bad())?,
            f.check(b).map_err(|_| bad())?,
            f.check(c).map_err(|_| bad())?,
            f.check(d).map_err(|_| bad())?,
        );
        if m.det(f) != 1 {
            return Err(bad());
        }
        Ok(self.canonical(m))
    }

    pub fn identity(&self) -> Mat2 {
        Mat2::identity()
    }

    /// Representative used for codes: `g` in `SL`, the smaller of `g, -g` in `PSL`.
    pub fn canonical(&self, g: Mat2) -> Mat2 {
        match self.mode {
            Mode::Sl => g,
            Mode::Psl => g.min(g.neg(&self.field)),
        }
    }

    pub fn code(&self, g: &Mat2) -> u128 {
        self.canonical(*g).code()
    }

    pub fn mul(&self, g: &Mat2, h: &Mat2) -> Mat2 {
        self.canonical(g.mul(&self.field, h))
    }

    pub fn inv(&self, g: &Mat2) -> Mat2 {
        self.canonical(g.adjugate(&self.field))
    }

    pub fn neg(&self, g: &Mat2) -> Mat2 {
        self.canonical(g.neg(&self.field))
    }

    /// `h^-1 g h`.
    pub fn conj(&self, g: &Mat2, h: &Mat2) -> Mat2 {
        let f = &self.field;
        self.canonical(h.adjugate(f).mul(f, g).mul(f, h))
    }

    pub fn commutator(&self, g: &Mat2, h: &Mat2) -> Mat2 {
        self.mul(&self.inv(g), &self.conj(g, h))
    }

    pub fn pow(&self, g: &Mat2, mut e: u64) -> Mat2 {
        let mut r = Mat2::identity();
        let mut b = *g;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }

    pub fn trace(&self, g: &Mat2) -> u32 {
        g.trace(&self.field)
    }

    /// `ad`.
    pub fn prod(&self, g: &Mat2) -> u32 {
        self.field.mul(g.a, g.d)
    }

    pub fn diag(&self, x: u32) -> Result<Mat2, Sl2Error> {
        let xi = self.field.inv(x)?;
        Ok(self.canonical(Mat2::new(x, 0, 0, xi)))
    }

    pub fn is_central(&self, g: &Mat2) -> bool {
        let f = &self.field;
        g.b == 0 && g.c == 0 && g.a == g.d && (g.a == 1 || g.a == f.neg(1))
    }

    /// Whether the trace is `2` or `-2`.
    pub fn is_parabolic_trace(&self, t: u32) -> bool {
        let f = &self.field;
        t == f.from_int(2) || t == f.from_int(-2)
    }

    pub fn classify(&self, g: &Mat2) -> ElementClass {
        if self.is_central(g) {
            ElementClass::Central
        } else if self.is_parabolic_trace(self.trace(g)) {
            ElementClass::Unipotent
        } else {
            ElementClass::Semisimple
        }
    }

    /// Points of `P^1(F_{q^2})` fixed by a non-central `g`, each normalized so
    /// its first nonzero coordinate is 1. `None` for central elements.
    pub fn fixed_points(&self, g: &Mat2) -> Result<Option<Vec<(u32, u32)>>, Sl2Error> {
        if self.is_central(g) {
            return Ok(None);
        }
        let ext = self.ext()?;
        let (r, s) = ext.unit_roots(self.trace(g));
        let mut pts = vec![self.eigenline(ext, g, r)];
        if s != r {
            pts.push(self.eigenline(ext, g, s));
        }
        pts.sort_unstable();
        Ok(Some(pts))
    }

    /// Number of fixed points on `P^1(F_{q^2})`.
    pub fn fix_count(&self, g: &Mat2) -> Result<u64, Sl2Error> {
        Ok(match self.fixed_points(g)? {
            None => {
                let q2 = self.q() as u64 * self.q() as u64;
                q2 + 1
            }
            Some(p) => p.len() as u64,
        })
    }

    fn eigenline(&self, ext: &QuadExt, g: &Mat2, lambda: u32) -> (u32, u32) {
        let big = ext.big();
        let e = |x: u32| ext.embed(x);
        let (a, b, c, d) = (e(g.a), e(g.b), e(g.c), e(g.d));
        let v = if b != 0 {
            (b, big.sub(lambda, a))
        } else if c != 0 {
            (big.sub(lambda, d), c)
        } else if lambda == a {
            (1, 0)
        } else {
            (0, 1)
        };
        normalize_point(big, v)
    }

    /// Diagonalization of a semisimple element. The first column of `w` is the
    /// eigenvector for `x`, the smaller-coded root.
    pub fn diagonalize(&self, g: &Mat2) -> Result<Diagonalization, Sl2Error> {
        if self.classify(g) != ElementClass::Semisimple {
            return Err(Sl2Error::NotSemisimple);
        }
        let ext = self.ext()?;
        let big = ext.big();
        let (x, x_inv) = ext.unit_roots(self.trace(g));
        let v1 = self.eigenline(ext, g, x);
        let v2 = self.eigenline(ext, g, x_inv);
        let det = big.sub(big.mul(v1.0, v2.1), big.mul(v2.0, v1.1));
        let s = big.inv(det).map_err(Sl2Error::Field)?;
        let w = Mat2::new(v1.0, big.mul(v2.0, s), v1.1, big.mul(v2.1, s));
        Ok(Diagonalization {
            x,
            x_inv,
            w,
            w_inv: w.adjugate(big),
        })
    }

    /// `u^-1 g u` with `g` embedded in `F_{q^2}`; `u` is given with its inverse.
    pub fn conj_ext(&self, g: &Mat2, u: &Mat2, u_inv: &Mat2) -> Result<Mat2, Sl2Error> {
        let ext = self.ext()?;
        let big = ext.big();
        let ge = Mat2::new(ext.embed(g.a), ext.embed(g.b), ext.embed(g.c), ext.embed(g.d));
        Ok(u_inv.mul(big, &ge).mul(big, u))
    }

    /// All elements as canonical representatives, sorted by code.
    pub fn enumerate(&self) -> Result<Vec<Mat2>, Sl2Error> {
        let n = self.order();
        if n > ENUM_LIMIT {
            return Err(Sl2Error::GroupTooLarge(n));
        }
        let f = &self.field;
        let q = f.q();
        let mut out = Vec::with_capacity(n as usize);
        for a in 0..q {
            for b in 0..q {
                if a != 0 {
                    let ai = f.inv(a).unwrap();
                    for c in 0..q {
                        let d = f.mul(ai, f.add(1, f.mul(b, c)));
                        out.push(Mat2::new(a, b, c, d));
                    }
                } else if b != 0 {
                    let c = f.neg(f.inv(b).unwrap());
                    for d in 0..q {
                        out.push(Mat2::new(0, b, c, d));
                    }
                }
            }
        }
        let mut out: Vec<Mat2> = out.into_iter().map(|g| self.canonical(g)).collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

pub fn normalize_point(f: &FieldCtx, v: (u32, u32)) -> (u32, u32) {
    if v.0 != 0 {
        (1, f.div(v.1, v.0).unwrap())
    } else {
        (0, 1)
    }
}

/// Enumerated group with elements indexed in canonical code order.
#[derive(Debug)]
pub struct GroupTable {
    group: Sl2,
    elems: Vec<Mat2>,
    index: HashMap<Mat2, u32>,
    inv: Vec<u32>,
    trace: Vec<u32>,
    identity: u32,
    cayley: Option<Vec<u16>>,
}

impl GroupTable {
    pub fn new(group: Sl2) -> Result<Self, Sl2Error> {
        let elems = group.enumerate()?;
        let index: HashMap<Mat2, u32> = elems.iter().enumerate().map(|(i, g)| (*g, i as u32)).collect();
        let inv = elems.iter().map(|g| index[&group.inv(g)]).collect();
        let trace = elems.iter().map(|g| group.trace(g)).collect();
        let identity = index[&Mat2::identity()];
        let mut table = GroupTable {
            group,
            elems,
            index,
            inv,
            trace,
            identity,
            cayley: None,
        };
        let n = table.len();
        if n <= CAYLEY_LIMIT {
            let rows: Vec<Vec<u16>> = (0..n)
                .into_par_iter()
                .map(|i| (0..n).map(|j| table.mul_slow(i as u32, j as u32) as u16).collect())
                .collect();
            table.cayley = Some(rows.concat());
        }
        Ok(table)
    }

    pub fn build(q: u64, mode: Mode) -> Result<Arc<Self>, Sl2Error> {
        let f = Arc::new(FieldCtx::from_order(q)?);
        Ok(Arc::new(GroupTable::new(Sl2::new(f, mode))?))
    }

    pub fn group(&self) -> &Sl2 {
        &self.group
    }

    pub fn field(&self) -> &FieldCtx {
        self.group.field()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn elem(&self, i: u32) -> &Mat2 {
        &self.elems[i as usize]
    }

    pub fn elems(&self) -> &[Mat2] {
        &self.elems
    }

    pub fn index_of(&self, g: &Mat2) -> Option<u32> {
        self.index.get(&self.group.canonical(*g)).copied()
    }

    pub fn code(&self, i: u32) -> u128 {
        self.elems[i as usize].code()
    }

    fn mul_slow(&self, i: u32, j: u32) -> u32 {
        let g = self.group.mul(&self.elems[i as usize], &self.elems[j as usize]);
        self.index[&g]
    }

    #[inline]
    pub fn mul(&self, i: u32, j: u32) -> u32 {
        match &self.cayley {
            Some(t) => t[i as usize * self.elems.len() + j as usize] as u32,
            None => self.mul_slow(i, j),
        }
    }

    #[inline]
    pub fn inv(&self, i: u32) -> u32 {
        self.inv[i as usize]
    }

    /// `h^-1 g h`.
    pub fn conj(&self, g: u32, h: u32) -> u32 {
        self.mul(self.mul(self.inv(h), g), h)
    }

    #[inline]
    pub fn trace(&self, i: u32) -> u32 {
        self.trace[i as usize]
    }

    pub fn prod(&self, i: u32) -> u32 {
        self.group.prod(&self.elems[i as usize])
    }

    pub fn commute(&self, i: u32, j: u32) -> bool {
        self.mul(i, j) == self.mul(j, i)
    }

    pub fn classify(&self, i: u32) -> ElementClass {
        self.group.classify(&self.elems[i as usize])
    }

    /// Conjugacy class id of every element, numbered by smallest member.
    pub fn conjugacy_classes(&self) -> Vec<u32> {
        let n = self.len();
        let mut class = vec![u32::MAX; n];
        let mut next = 0u32;
        for g in 0..n as u32 {
            if class[g as usize] != u32::MAX {
                continue;
            }
            for h in 0..n as u32 {
                class[self.conj(g, h) as usize] = next;
            }
            next += 1;
        }
        class
    }

    pub fn centralizer(&self, g: u32) -> Vec<u32> {
        (0..self.len() as u32).filter(|&h| self.commute(g, h)).collect()
    }
}
