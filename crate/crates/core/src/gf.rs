//! Finite fields `F_{p^n}` with elements encoded as integers.
//!
//! An element `a_0 + a_1 t + ... + a_{n-1} t^{n-1}` of `F_p[t]/(f)` has code
//! `sum a_i p^i`. Codes are `u32`, so `p^n` must fit in 32 bits.

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

/// Fields up to this order get log/exp/inverse tables.
pub const TABLE_LIMIT: u64 = 1 << 20;
const ADD_TABLE_LIMIT: u64 = 2236;
const MAX_DEGREE: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("degree must be at least 1")]
    DegreeZero,
    #[error("field order {p}^{n} does not fit in 32-bit codes")]
    FieldTooLarge { p: u32, n: u32 },
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("modulus must be monic of degree {0} with coefficients below p")]
    BadModulus(u32),
    #[error("modulus is reducible")]
    ReducibleModulus,
    #[error("division by zero")]
    DivisionByZero,
    #[error("empty set")]
    EmptySet,
    #[error("code {0} is not an element of the field")]
    CodeOutOfRange(u64),
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors in increasing order.
pub fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            out.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

pub fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Splits `q` as `p^n`.
pub fn prime_power(q: u64) -> Result<(u32, u32), FieldError> {
    if q < 2 {
        return Err(FieldError::NotPrimePower(q));
    }
    let p = prime_factors(q)[0];
    let mut m = q;
    let mut n = 0;
    while m.is_multiple_of(p) {
        m /= p;
        n += 1;
    }
    if m != 1 || p > u32::MAX as u64 {
        return Err(FieldError::NotPrimePower(q));
    }
    Ok((p as u32, n))
}

/// Dense polynomials over `F_p`, little endian, no trailing zeros.
pub(crate) mod poly {
    pub type Poly = Vec<u64>;

    pub fn trim(mut a: Poly) -> Poly {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn inv_mod(a: u64, p: u64) -> u64 {
        pow_mod(a, p - 2, p)
    }

    pub fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
        let mut r = 1 % p;
        a %= p;
        while e > 0 {
            if e & 1 == 1 {
                r = r * a % p;
            }
            a = a * a % p;
            e >>= 1;
        }
        r
    }

    pub fn sub(a: &Poly, b: &Poly, p: u64) -> Poly {
        let len = a.len().max(b.len());
        let out = (0..len)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(out)
    }

    pub fn mul(a: &Poly, b: &Poly, p: u64) -> Poly {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(out)
    }

    /// Quotient and remainder; `b` must be nonzero.
    pub fn div_rem(a: &Poly, b: &Poly, p: u64) -> (Poly, Poly) {
        let mut r = a.clone();
        if r.len() < b.len() {
            return (Vec::new(), r);
        }
        let lead_inv = inv_mod(*b.last().unwrap(), p);
        let mut quo = vec![0u64; r.len() - b.len() + 1];
        while r.len() >= b.len() {
            let shift = r.len() - b.len();
            let c = r.last().unwrap() * lead_inv % p;
            quo[shift] = c;
            for (i, &y) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - c * y % p) % p;
            }
            r = trim(r);
        }
        (trim(quo), r)
    }

    pub fn rem(a: &Poly, b: &Poly, p: u64) -> Poly {
        div_rem(a, b, p).1
    }

    pub fn monic(a: Poly, p: u64) -> Poly {
        match a.last() {
            None => a,
            Some(&l) => {
                let li = inv_mod(l, p);
                a.into_iter().map(|x| x * li % p).collect()
            }
        }
    }

    pub fn gcd(a: &Poly, b: &Poly, p: u64) -> Poly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_empty() {
            let r = rem(&x, &y, p);
            x = y;
            y = r;
        }
        monic(x, p)
    }

    pub fn mul_mod(a: &Poly, b: &Poly, f: &Poly, p: u64) -> Poly {
        rem(&mul(a, b, p), f, p)
    }

    pub fn pow_mod_poly(a: &Poly, mut e: u64, f: &Poly, p: u64) -> Poly {
        let mut r = rem(&vec![1], f, p);
        let mut base = rem(a, f, p);
        while e > 0 {
            if e & 1 == 1 {
                r = mul_mod(&r, &base, f, p);
            }
            base = mul_mod(&base, &base, f, p);
            e >>= 1;
        }
        r
    }

    /// `t^(p^k) mod f`.
    pub fn frob_t(k: u32, f: &Poly, p: u64) -> Poly {
        let mut x = rem(&vec![0, 1], f, p);
        for _ in 0..k {
            x = pow_mod_poly(&x, p, f, p);
        }
        x
    }

    /// Rabin's test for a monic `f` of degree `n >= 1`.
    pub fn is_irreducible(f: &Poly, p: u64) -> bool {
        let n = f.len() as u32 - 1;
        if n == 1 {
            return true;
        }
        let t: Poly = vec![0, 1];
        for r in super::prime_factors(n as u64) {
            let h = sub(&frob_t(n / r as u32, f, p), &t, p);
            if gcd(f, &h, p).len() != 1 {
                return false;
            }
        }
        sub(&frob_t(n, f, p), &t, p).is_empty()
    }

    /// Extended Euclid: `s` with `s * a = 1 mod f`, `a` coprime to `f`.
    pub fn inv_mod_poly(a: &Poly, f: &Poly, p: u64) -> Option<Poly> {
        let (mut r0, mut r1) = (f.clone(), rem(a, f, p));
        let (mut s0, mut s1): (Poly, Poly) = (Vec::new(), vec![1]);
        while !r1.is_empty() {
            let (quo, r) = div_rem(&r0, &r1, p);
            let s = sub(&s0, &mul(&quo, &s1, p), p);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if r0.len() != 1 {
            return None;
        }
        let c = inv_mod(r0[0], p);
        Some(trim(s0.into_iter().map(|x| x * c % p).collect()))
    }
}

/// Arithmetic context for `F_{p^n}`.
#[derive(Debug, Clone)]
pub struct FieldCtx {
    p: u32,
    n: u32,
    q: u32,
    modulus: Vec<u32>,
    pow_p: Vec<u64>,
    primitive: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
    inv: Vec<u32>,
    neg: Vec<u32>,
    add_tab: Vec<u32>,
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.n == other.n && self.modulus == other.modulus
    }
}

impl Eq for FieldCtx {}

impl FieldCtx {
    /// `F_{p^n}` with the canonical modulus.
    pub fn new(p: u32, n: u32) -> Result<Self, FieldError> {
        Self::check_params(p, n)?;
        let m = canonical_modulus(p, n)?;
        Self::build(p, n, m)
    }

    pub fn from_order(q: u64) -> Result<Self, FieldError> {
        let (p, n) = prime_power(q)?;
        Self::new(p, n)
    }

    /// `F_p[t]/(f)` for a user modulus given as `[a_0, ..., a_{n-1}, 1]`.
    pub fn with_modulus(p: u32, modulus: &[u32]) -> Result<Self, FieldError> {
        if modulus.len() < 2 {
            return Err(FieldError::DegreeZero);
        }
        let n = modulus.len() as u32 - 1;
        Self::check_params(p, n)?;
        if *modulus.last().unwrap() != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(FieldError::BadModulus(n));
        }
        let f: poly::Poly = modulus.iter().map(|&c| c as u64).collect();
        if !poly::is_irreducible(&f, p as u64) {
            return Err(FieldError::ReducibleModulus);
        }
        Self::build(p, n, modulus[..n as usize].to_vec())
    }

    fn check_params(p: u32, n: u32) -> Result<(), FieldError> {
        if !is_prime(p as u64) {
            return Err(FieldError::NotPrime(p));
        }
        if n == 0 {
            return Err(FieldError::DegreeZero);
        }
        let order = (p as u128).checked_pow(n);
        match order {
            Some(o) if o <= u32::MAX as u128 => Ok(()),
            _ => Err(FieldError::FieldTooLarge { p, n }),
        }
    }

    fn build(p: u32, n: u32, modulus: Vec<u32>) -> Result<Self, FieldError> {
        let q = (p as u64).pow(n) as u32;
        let pow_p = (0..=n).map(|i| (p as u64).pow(i)).collect();
        let mut ctx = FieldCtx {
            p,
            n,
            q,
            modulus,
            pow_p,
            primitive: 1,
            exp: Vec::new(),
            log: Vec::new(),
            inv: Vec::new(),
            neg: Vec::new(),
            add_tab: Vec::new(),
        };
        ctx.primitive = ctx.find_primitive();
        if (q as u64) <= TABLE_LIMIT {
            ctx.build_tables();
        }
        Ok(ctx)
    }

    fn find_primitive(&self) -> u32 {
        let order = self.q as u64 - 1;
        if order == 1 {
            return 1;
        }
        let factors = prime_factors(order);
        (2..self.q)
            .find(|&g| factors.iter().all(|&r| self.pow_slow(g, order / r) != 1))
            .expect("multiplicative group is cyclic")
    }

    fn build_tables(&mut self) {
        let q = self.q as usize;
        let order = q - 1;
        let mut exp = vec![0u32; 2 * order.max(1)];
        let mut log = vec![0u32; q];
        let mut x = 1u32;
        for k in 0..order {
            exp[k] = x;
            exp[k + order] = x;
            log[x as usize] = k as u32;
            x = self.mul_slow(x, self.primitive);
        }
        let mut inv = vec![0u32; q];
        for a in 1..q {
            inv[a] = exp[(order - log[a] as usize) % order];
        }
        self.neg = (0..q as u32).map(|a| self.neg_slow(a)).collect();
        self.exp = exp;
        self.log = log;
        self.inv = inv;
        if self.p != 2 && self.n > 1 && (q as u64) <= ADD_TABLE_LIMIT {
            let mut tab = vec![0u32; q * q];
            for a in 0..q {
                for b in 0..q {
                    tab[a * q + b] = self.add_slow(a as u32, b as u32);
                }
            }
            self.add_tab = tab;
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    /// Non-leading coefficients `a_0..a_{n-1}` of the modulus.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn primitive(&self) -> u32 {
        self.primitive
    }

    pub fn has_tables(&self) -> bool {
        !self.exp.is_empty()
    }

    pub fn check(&self, x: u64) -> Result<u32, FieldError> {
        if x < self.q as u64 {
            Ok(x as u32)
        } else {
            Err(FieldError::CodeOutOfRange(x))
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.q
    }

    pub fn digits(&self, mut x: u32) -> [u32; MAX_DEGREE] {
        let mut d = [0u32; MAX_DEGREE];
        for slot in d.iter_mut().take(self.n as usize) {
            *slot = x % self.p;
            x /= self.p;
        }
        d
    }

    pub fn from_digits(&self, d: &[u32]) -> u32 {
        let mut x = 0u64;
        for i in (0..self.n as usize).rev() {
            x = x * self.p as u64 + d.get(i).copied().unwrap_or(0) as u64;
        }
        x as u32
    }

    /// Code of the prime-field element `k mod p`.
    pub fn from_int(&self, k: i64) -> u32 {
        k.rem_euclid(self.p as i64) as u32
    }

    fn add_slow(&self, a: u32, b: u32) -> u32 {
        let (x, y) = (self.digits(a), self.digits(b));
        let mut d = [0u32; MAX_DEGREE];
        for i in 0..self.n as usize {
            d[i] = ((x[i] as u64 + y[i] as u64) % self.p as u64) as u32;
        }
        self.from_digits(&d)
    }

    fn neg_slow(&self, a: u32) -> u32 {
        let x = self.digits(a);
        let mut d = [0u32; MAX_DEGREE];
        for i in 0..self.n as usize {
            d[i] = (self.p - x[i]) % self.p;
        }
        self.from_digits(&d)
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let p = self.p as u64;
        if self.n == 1 {
            return (a as u64 * b as u64 % p) as u32;
        }
        let n = self.n as usize;
        let (x, y) = (self.digits(a), self.digits(b));
        let mut c = [0u64; 2 * MAX_DEGREE];
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            for j in 0..n {
                c[i + j] = (c[i + j] + x[i] as u64 * y[j] as u64) % p;
            }
        }
        for k in (n..2 * n - 1).rev() {
            let coef = c[k];
            if coef == 0 {
                continue;
            }
            c[k] = 0;
            for i in 0..n {
                let m = self.modulus[i] as u64;
                c[k - n + i] = (c[k - n + i] + p - coef * m % p) % p;
            }
        }
        let d: Vec<u32> = c[..n].iter().map(|&v| v as u32).collect();
        self.from_digits(&d)
    }

    fn pow_slow(&self, x: u32, mut e: u64) -> u32 {
        let mut r = 1u32;
        let mut b = x;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul_slow(r, b);
            }
            b = self.mul_slow(b, b);
            e >>= 1;
        }
        r
    }

    fn inv_slow(&self, a: u32) -> u32 {
        let p = self.p as u64;
        if self.n == 1 {
            return poly::inv_mod(a as u64, p) as u32;
        }
        let x: poly::Poly = poly::trim(self.digits(a)[..self.n as usize].iter().map(|&v| v as u64).collect());
        let mut f: poly::Poly = self.modulus.iter().map(|&v| v as u64).collect();
        f.push(1);
        let s = poly::inv_mod_poly(&x, &f, p).expect("modulus is irreducible");
        let d: Vec<u32> = s.iter().map(|&v| v as u32).collect();
        self.from_digits(&d)
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.p == 2 {
            a ^ b
        } else if self.n == 1 {
            ((a as u64 + b as u64) % self.p as u64) as u32
        } else if !self.add_tab.is_empty() {
            self.add_tab[a as usize * self.q as usize + b as usize]
        } else {
            self.add_slow(a, b)
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if self.p == 2 {
            a
        } else if self.n == 1 {
            (self.p - a) % self.p
        } else if !self.neg.is_empty() {
            self.neg[a as usize]
        } else {
            self.neg_slow(a)
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        if !self.exp.is_empty() {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        } else {
            self.mul_slow(a, b)
        }
    }

    pub fn inv(&self, a: u32) -> Result<u32, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        Ok(if !self.inv.is_empty() {
            self.inv[a as usize]
        } else {
            self.inv_slow(a)
        })
    }

    pub fn div(&self, a: u32, b: u32) -> Result<u32, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, x: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if x == 0 {
            return 0;
        }
        if !self.exp.is_empty() {
            let order = self.q as u128 - 1;
            let k = (self.log[x as usize] as u128 * e as u128) % order;
            self.exp[k as usize]
        } else {
            self.pow_slow(x, e)
        }
    }

    /// Discrete logarithm to the base `primitive()`, for nonzero `x`.
    pub fn log(&self, x: u32) -> Result<u32, FieldError> {
        if x == 0 {
            return Err(FieldError::DivisionByZero);
        }
        if !self.log.is_empty() {
            return Ok(self.log[x as usize]);
        }
        let mut y = 1u32;
        for k in 0..self.q - 1 {
            if y == x {
                return Ok(k);
            }
            y = self.mul_slow(y, self.primitive);
        }
        unreachable!("primitive element generates the multiplicative group")
    }

    pub fn frobenius(&self, x: u32) -> u32 {
        self.pow(x, self.p as u64)
    }

    /// Degrees `m | n` of the subfields `F_{p^m}`, increasing.
    pub fn subfield_degrees(&self) -> Vec<u32> {
        divisors(self.n)
    }

    pub fn subfield_order(&self, m: u32) -> u64 {
        self.pow_p[m as usize]
    }

    pub fn in_subfield(&self, x: u32, m: u32) -> bool {
        self.pow(x, self.pow_p[m as usize]) == x
    }

    /// Smallest `m | n` with `x` in `F_{p^m}`.
    pub fn min_degree(&self, x: u32) -> u32 {
        divisors(self.n)
            .into_iter()
            .find(|&m| self.in_subfield(x, m))
            .unwrap()
    }

    /// Degree of the subfield generated by `set`.
    pub fn subfield_generated<I: IntoIterator<Item = u32>>(&self, set: I) -> Result<u32, FieldError> {
        let mut degree = 1u32;
        let mut any = false;
        for x in set {
            any = true;
            degree = lcm(degree, self.min_degree(x));
            if degree == self.n {
                break;
            }
        }
        if !any {
            return Err(FieldError::EmptySet);
        }
        Ok(degree)
    }

    /// Sorted codes of `F_{p^m}` inside this field.
    pub fn subfield_elements(&self, m: u32) -> Vec<u32> {
        assert!(self.n.is_multiple_of(m), "{m} does not divide {}", self.n);
        let size = self.pow_p[m as usize];
        let mut out = vec![0u32];
        if !self.exp.is_empty() {
            let step = (self.q as u64 - 1) / (size - 1);
            out.extend((0..size - 1).map(|k| self.exp[(k * step) as usize]));
        } else {
            let g = self.pow(self.primitive, (self.q as u64 - 1) / (size - 1));
            let mut x = 1u32;
            for _ in 0..size - 1 {
                out.push(x);
                x = self.mul(x, g);
            }
        }
        out.sort_unstable();
        out
    }

    /// Scalar trace `x + 1/x`.
    pub fn tr(&self, x: u32) -> Result<u32, FieldError> {
        Ok(self.add(x, self.inv(x)?))
    }

    /// `t tr(xy) + (1 - t) tr(x/y)`.
    pub fn tr_t(&self, t: u32, x: u32, y: u32) -> Result<u32, FieldError> {
        let a = self.tr(self.mul(x, y))?;
        let b = self.tr(self.div(x, y)?)?;
        let one_minus_t = self.sub(1, t);
        Ok(self.add(self.mul(t, a), self.mul(one_minus_t, b)))
    }

    /// `F_{q^2}` together with an embedding of this field.
    pub fn quadratic_extension(&self) -> Result<QuadExt, FieldError> {
        QuadExt::new(self)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// Lexicographically smallest monic irreducible of degree `n`, as the
/// non-leading coefficients `a_0..a_{n-1}` whose code is smallest.
pub fn canonical_modulus(p: u32, n: u32) -> Result<Vec<u32>, FieldError> {
    FieldCtx::check_params(p, n)?;
    let pp = p as u64;
    let count = pp.pow(n);
    for code in 0..count {
        let mut f: poly::Poly = Vec::with_capacity(n as usize + 1);
        let mut c = code;
        for _ in 0..n {
            f.push(c % pp);
            c /= pp;
        }
        f.push(1);
        if poly::is_irreducible(&f, pp) {
            return Ok(f[..n as usize].iter().map(|&v| v as u32).collect());
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Largest fiber size of `f` on `domain`.
pub fn map_multiplicity<T, K, I, F>(domain: I, f: F) -> usize
where
    I: IntoIterator<Item = T>,
    K: Hash + Eq,
    F: Fn(T) -> K,
{
    let mut counts: HashMap<K, usize> = HashMap::new();
    for x in domain {
        *counts.entry(f(x)).or_insert(0) += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

/// `F_{q^2}` built as `F_{p^{2n}}`, with the base field embedded through a
/// root of the base modulus.
#[derive(Debug, Clone)]
pub struct QuadExt {
    big: FieldCtx,
    embed: Vec<u32>,
    unembed: HashMap<u32, u32>,
    roots: Vec<(u32, u32)>,
}

impl QuadExt {
    fn new(base: &FieldCtx) -> Result<Self, FieldError> {
        let big = FieldCtx::new(base.p, 2 * base.n)?;
        let mut f: Vec<u32> = base.modulus.clone();
        f.push(1);
        let root = big
            .subfield_elements(base.n)
            .into_iter()
            .find(|&r| {
                let mut acc = 0u32;
                for &c in f.iter().rev() {
                    acc = big.add(big.mul(acc, r), c);
                }
                acc == 0
            })
            .expect("base modulus splits in the extension");
        let powers: Vec<u32> = (0..base.n).map(|i| big.pow(root, i as u64)).collect();
        let embed: Vec<u32> = (0..base.q)
            .map(|x| {
                let d = base.digits(x);
                powers
                    .iter()
                    .zip(d.iter())
                    .fold(0u32, |acc, (&r, &c)| big.add(acc, big.mul(r, c)))
            })
            .collect();
        let unembed = embed.iter().enumerate().map(|(i, &e)| (e, i as u32)).collect();
        let mut ext = QuadExt {
            big,
            embed,
            unembed,
            roots: Vec::new(),
        };
        ext.roots = ext.root_table(base);
        Ok(ext)
    }

    /// Roots of `X^2 - tau X + 1` for every `tau`, indexed by base code.
    fn root_table(&self, base: &FieldCtx) -> Vec<(u32, u32)> {
        let q = base.q as u64;
        let big = &self.big;
        let mut found: Vec<Vec<u32>> = vec![Vec::new(); base.q as usize];
        let visit = |x: u32, found: &mut Vec<Vec<u32>>| {
            let t = big.add(x, big.inv(x).unwrap());
            let tau = self.unembed[&t] as usize;
            if !found[tau].contains(&x) {
                found[tau].push(x);
            }
        };
        for a in 1..base.q {
            visit(self.embed[a as usize], &mut found);
        }
        let w = big.pow(big.primitive(), q - 1);
        let mut x = 1u32;
        for _ in 0..=q {
            visit(x, &mut found);
            x = big.mul(x, w);
        }
        found
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                (r[0], *r.last().unwrap())
            })
            .collect()
    }

    pub fn big(&self) -> &FieldCtx {
        &self.big
    }

    pub fn embed(&self, x: u32) -> u32 {
        self.embed[x as usize]
    }

    /// Base code of `y` if `y` lies in the embedded base field.
    pub fn unembed(&self, y: u32) -> Option<u32> {
        self.unembed.get(&y).copied()
    }

    /// Roots `(x, x^-1)` of `X^2 - tau X + 1` in the extension, smaller code first.
    pub fn unit_roots(&self, tau: u32) -> (u32, u32) {
        self.roots[tau as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_irreducible(f: &[u64], p: u64) -> bool {
        let n = f.len() - 1;
        for d in 1..=n / 2 {
            for code in 0..p.pow(d as u32) {
                let mut g: Vec<u64> = (0..d).map(|i| code / p.pow(i as u32) % p).collect();
                g.push(1);
                if poly::rem(&f.to_vec(), &g, p).is_empty() {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn rabin_matches_trial_division() {
        for &(p, max_n) in &[(2u64, 7u32), (3, 5), (5, 3)] {
            for n in 1..=max_n {
                for code in 0..p.pow(n) {
                    let mut f: Vec<u64> = (0..n).map(|i| code / p.pow(i) % p).collect();
                    f.push(1);
                    assert_eq!(poly::is_irreducible(&f, p), brute_irreducible(&f, p), "{f:?} mod {p}");
                }
            }
        }
    }

    #[test]
    fn canonical_moduli() {
        assert_eq!(canonical_modulus(2, 2).unwrap(), vec![1, 1]);
        assert_eq!(canonical_modulus(2, 3).unwrap(), vec![1, 1, 0]);
        assert_eq!(canonical_modulus(2, 4).unwrap(), vec![1, 1, 0, 0]);
        assert_eq!(canonical_modulus(3, 2).unwrap(), vec![1, 0]);
        assert_eq!(canonical_modulus(7, 1).unwrap(), vec![0]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(FieldCtx::new(6, 1).unwrap_err(), FieldError::NotPrime(6));
        assert_eq!(FieldCtx::new(2, 0).unwrap_err(), FieldError::DegreeZero);
        assert_eq!(FieldCtx::new(2, 32).unwrap_err(), FieldError::FieldTooLarge { p: 2, n: 32 });
        assert_eq!(FieldCtx::from_order(6).unwrap_err(), FieldError::NotPrimePower(6));
        // t^2 + 1 = (t + 1)^2 over F_2
        assert_eq!(FieldCtx::with_modulus(2, &[1, 0, 1]).unwrap_err(), FieldError::ReducibleModulus);
        assert!(FieldCtx::with_modulus(2, &[1, 0, 0, 1, 1]).is_ok());
        let f = FieldCtx::new(5, 1).unwrap();
        assert_eq!(f.inv(0), Err(FieldError::DivisionByZero));
        assert_eq!(f.subfield_generated(std::iter::empty()), Err(FieldError::EmptySet));
    }

    #[test]
    fn inverse_table_f9_matches_search() {
        let f = FieldCtx::new(3, 2).unwrap();
        for a in 1..9 {
            let b = (1..9).find(|&b| f.mul_slow(a, b) == 1).unwrap();
            assert_eq!(f.inv(a).unwrap(), b);
            assert_eq!(f.inv_slow(a), b);
        }
    }

    #[test]
    fn tables_agree_with_slow_path() {
        for &(p, n) in &[(2, 5), (3, 3), (5, 2), (7, 2), (13, 1)] {
            let f = FieldCtx::new(p, n).unwrap();
            for a in 0..f.q() {
                for b in 0..f.q() {
                    assert_eq!(f.mul(a, b), f.mul_slow(a, b));
                    assert_eq!(f.add(a, b), f.add_slow(a, b));
                }
            }
        }
    }

    #[test]
    fn subfield_lattices() {
        let f16 = FieldCtx::new(2, 4).unwrap();
        assert_eq!(f16.subfield_degrees(), vec![1, 2, 4]);
        assert_eq!(f16.subfield_elements(2).len(), 4);
        let f64 = FieldCtx::new(2, 6).unwrap();
        assert_eq!(f64.subfield_degrees(), vec![1, 2, 3, 6]);
        for m in f64.subfield_degrees() {
            let e = f64.subfield_elements(m);
            let brute: Vec<u32> = (0..64).filter(|&x| f64.in_subfield(x, m)).collect();
            assert_eq!(e, brute);
        }
        assert_eq!(f64.subfield_generated([0, 1]).unwrap(), 1);
        assert_eq!(f64.subfield_generated([f64.primitive()]).unwrap(), 6);
        let f4 = f64.subfield_elements(2);
        let f8 = f64.subfield_elements(3);
        assert_eq!(f64.subfield_generated([f4[2], f8[2]]).unwrap(), 6);
    }

    #[test]
    fn trace_multiplicity_is_two() {
        let f7 = FieldCtx::new(7, 1).unwrap();
        assert_eq!(map_multiplicity(1..7, |x| f7.tr(x).unwrap()), 2);
        for q in [2u64, 3, 4, 5, 8, 9, 16, 25, 27] {
            let f = FieldCtx::from_order(q).unwrap();
            assert!(map_multiplicity(1..f.q(), |x| f.tr(x).unwrap()) <= 2);
        }
    }

    #[test]
    fn extension_roots() {
        for q in [2u64, 3, 4, 5, 7, 8, 9, 11, 16] {
            let f = FieldCtx::from_order(q).unwrap();
            let e = f.quadratic_extension().unwrap();
            let b = e.big();
            assert_eq!(b.q() as u64, q * q);
            for x in 0..f.q() {
                for y in 0..f.q() {
                    assert_eq!(e.embed(f.mul(x, y)), b.mul(e.embed(x), e.embed(y)));
                    assert_eq!(e.embed(f.add(x, y)), b.add(e.embed(x), e.embed(y)));
                }
            }
            for tau in 0..f.q() {
                let (r, s) = e.unit_roots(tau);
                let t = e.embed(tau);
                for x in [r, s] {
                    let v = b.add(b.sub(b.mul(x, x), b.mul(t, x)), 1);
                    assert_eq!(v, 0);
                }
                assert_eq!(b.mul(r, s), 1);
            }
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn field() -> impl Strategy<Value = FieldCtx> {
            prop::sample::select(vec![(2u32, 1u32), (2, 3), (2, 4), (3, 2), (5, 1), (7, 2), (2, 21), (3, 13)])
                .prop_map(|(p, n)| FieldCtx::new(p, n).unwrap())
        }

        proptest! {
            #[test]
            fn field_axioms(f in field(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
                let (a, b, c) = (a % f.q(), b % f.q(), c % f.q());
                prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                prop_assert_eq!(f.add(a, f.neg(a)), 0);
                prop_assert_eq!(f.frobenius(f.add(a, b)), f.add(f.frobenius(a), f.frobenius(b)));
                if a != 0 {
                    prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                    prop_assert_eq!(f.pow(a, f.q() as u64 - 1), 1);
                }
            }
        }
    }
}
