//! Finite fields `F_q` and `F_{q^m}` with the q-Frobenius automorphism.
//!
//! Extension-field elements are stored as packed little-endian base-`q`
//! digits, i.e. the coordinates with respect to the power basis
//! `1, x, ..., x^{m-1}` of the field modulus. Multiplication, inversion and
//! every Frobenius power are table lookups; the tables are built once when
//! the field is constructed, so an [`ExtField`] is cheap to share (wrap it
//! in an `Arc`) and all element operations are pure.

use std::fmt;
use std::hash::Hash;

use thiserror::Error;

/// Largest extension field order accepted by [`ExtField::new`].
pub const MAX_ORDER: u64 = 1 << 20;

/// Field orders up to this size get a full addition table.
const ADD_TABLE_MAX_ORDER: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("characteristic {0} is not a prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {q}^{m} exceeds the supported maximum {MAX_ORDER}")]
    TooLarge { q: u64, m: usize },
    #[error("modulus must be monic of degree {expected} (got {got} coefficients)")]
    BadModulus { expected: usize, got: usize },
    #[error("modulus coefficient {0} is not a residue mod q")]
    BadCoefficient(u64),
    #[error("modulus is reducible over F_q")]
    Reducible,
    #[error("conjugator must be nonzero")]
    ZeroConjugator,
    #[error("requested {ell} conjugacy classes but F_q^m has only q - 1 = {max} nonzero classes")]
    TooManyClasses { ell: usize, max: usize },
}

/// Minimal field interface shared by the prime and extension fields so that
/// matrix routines can be written once.
pub trait Field {
    type Elem: Copy + Eq + Hash + fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn sub(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn neg(&self, a: Self::Elem) -> Self::Elem;
    /// Multiplicative inverse. Panics on zero.
    fn inv(&self, a: Self::Elem) -> Self::Elem;

    fn is_zero(&self, a: Self::Elem) -> bool {
        a == self.zero()
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The prime field `F_q`; elements are residues in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if !is_prime(q) || q > MAX_ORDER {
            return Err(FieldError::NotPrime(q));
        }
        Ok(Self { q: q as u32 })
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut acc = 1u64;
        let q = self.q as u64;
        let mut base = a as u64 % q;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        a = acc as u32;
        a
    }
}

impl Field for PrimeField {
    type Elem = u32;

    fn zero(&self) -> u32 {
        0
    }
    fn one(&self) -> u32 {
        1
    }
    #[inline]
    fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }
    #[inline]
    fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }
    #[inline]
    fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }
    #[inline]
    fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }
    fn inv(&self, a: u32) -> u32 {
        assert!(a != 0, "inverse of zero in F_q");
        self.pow(a, self.q as u64 - 2)
    }
}

/// An element of `F_{q^m}`, packed as `sum_i c_i q^i` where `c_i` is the
/// coordinate of `x^i` in the power basis of the modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Packed index in `[0, q^m)`, the lexicographic position of the element.
    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Dense polynomial helpers over `F_q`, little-endian coefficient vectors.
mod fq_poly {
    use super::{Field, PrimeField};

    pub fn trim(p: &mut Vec<u32>) {
        while p.last() == Some(&0) {
            p.pop();
        }
    }

    pub fn rem(fq: &PrimeField, a: &[u32], b: &[u32]) -> Vec<u32> {
        let mut r = a.to_vec();
        trim(&mut r);
        let db = b.len() - 1;
        let lead_inv = fq.inv(b[db]);
        while r.len() > db {
            let top = r.len() - 1;
            let c = fq.mul(r[top], lead_inv);
            let shift = top - db;
            for (i, &bi) in b.iter().enumerate() {
                r[shift + i] = fq.sub(r[shift + i], fq.mul(c, bi));
            }
            trim(&mut r);
        }
        r
    }

    /// Irreducibility by trial division with every monic polynomial of degree
    /// at most `deg / 2`.
    pub fn is_irreducible(fq: &PrimeField, f: &[u32]) -> bool {
        let q = fq.order() as u64;
        let deg = f.len() - 1;
        if deg <= 1 {
            return deg == 1;
        }
        for d in 1..=deg / 2 {
            let count = q.pow(d as u32);
            for low in 0..count {
                let mut g = Vec::with_capacity(d + 1);
                let mut x = low;
                for _ in 0..d {
                    g.push((x % q) as u32);
                    x /= q;
                }
                g.push(1);
                if rem(fq, f, &g).is_empty() {
                    return false;
                }
            }
        }
        true
    }
}

/// The extension field `F_{q^m} = F_q[x] / (modulus)`.
pub struct ExtField {
    base: PrimeField,
    m: usize,
    order: u32,
    modulus: Vec<u32>,
    alpha: FieldElement,
    /// `q^i` for `i <= m`.
    digit_weight: Vec<u32>,
    /// `exp[i] = alpha^i`, stored twice over for index sums without reduction.
    exp: Vec<u32>,
    log: Vec<u32>,
    neg: Vec<u32>,
    add: Option<Vec<u32>>,
    /// `frob[i][a] = sigma^i(a)` for `0 <= i < m`.
    frob: Vec<Vec<u32>>,
}

impl fmt::Debug for ExtField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExtField")
            .field("q", &self.base.order())
            .field("m", &self.m)
            .field("modulus", &self.modulus)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl ExtField {
    /// Builds `F_{q^m}`. Without an explicit modulus the lexicographically
    /// smallest monic irreducible polynomial of degree `m` is used; the
    /// modulus is given little-endian and must include the leading 1.
    pub fn new(q: u64, m: usize, modulus: Option<Vec<u64>>) -> Result<Self, FieldError> {
        let base = PrimeField::new(q)?;
        if m == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let order = (q as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        if order > MAX_ORDER as u128 {
            return Err(FieldError::TooLarge { q, m });
        }
        let order = order as u32;

        let modulus = match modulus {
            Some(coeffs) => {
                if coeffs.len() != m + 1 || coeffs[m] != 1 {
                    return Err(FieldError::BadModulus {
                        expected: m,
                        got: coeffs.len(),
                    });
                }
                if let Some(&bad) = coeffs.iter().find(|&&c| c >= q) {
                    return Err(FieldError::BadCoefficient(bad));
                }
                let coeffs: Vec<u32> = coeffs.into_iter().map(|c| c as u32).collect();
                if !fq_poly::is_irreducible(&base, &coeffs) {
                    return Err(FieldError::Reducible);
                }
                coeffs
            }
            None => smallest_irreducible(&base, m),
        };

        let mut digit_weight = vec![1u32; m + 1];
        for i in 1..=m {
            digit_weight[i] = digit_weight[i - 1] * base.order();
        }

        let mut field = ExtField {
            base,
            m,
            order,
            modulus,
            alpha: FieldElement::ONE,
            digit_weight,
            exp: Vec::new(),
            log: Vec::new(),
            neg: Vec::new(),
            add: None,
            frob: Vec::new(),
        };
        field.neg = (0..order)
            .map(|a| field.pack(&field.unpack(a).iter().map(|&c| base.neg(c)).collect::<Vec<_>>()))
            .collect();
        if order <= ADD_TABLE_MAX_ORDER {
            let mut table = vec![0u32; (order * order) as usize];
            for a in 0..order {
                for b in 0..order {
                    table[(a * order + b) as usize] = field.add_digits(a, b);
                }
            }
            field.add = Some(table);
        }
        field.alpha = field.find_primitive();
        field.build_log_tables();
        field.build_frobenius_tables();
        Ok(field)
    }

    fn unpack(&self, a: u32) -> Vec<u32> {
        let q = self.base.order();
        let mut x = a;
        (0..self.m)
            .map(|_| {
                let d = x % q;
                x /= q;
                d
            })
            .collect()
    }

    fn pack(&self, coeffs: &[u32]) -> u32 {
        coeffs
            .iter()
            .zip(&self.digit_weight)
            .map(|(&c, &w)| c * w)
            .sum()
    }

    fn add_digits(&self, a: u32, b: u32) -> u32 {
        let q = self.base.order();
        if q == 2 {
            return a ^ b;
        }
        let (mut x, mut y, mut out) = (a, b, 0);
        for i in 0..self.m {
            let d = (x % q + y % q) % q;
            out += d * self.digit_weight[i];
            x /= q;
            y /= q;
        }
        out
    }

    /// Schoolbook product modulo the modulus; used only while building tables.
    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let fq = &self.base;
        let (a, b) = (self.unpack(a), self.unpack(b));
        let mut prod = vec![0u32; 2 * self.m];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                prod[i + j] = fq.add(prod[i + j], fq.mul(ai, bj));
            }
        }
        let mut r = fq_poly::rem(fq, &prod, &self.modulus);
        r.resize(self.m, 0);
        self.pack(&r)
    }

    fn pow_slow(&self, a: u32, mut e: u64) -> u32 {
        let (mut acc, mut base) = (1u32, a);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_slow(acc, base);
            }
            base = self.mul_slow(base, base);
            e >>= 1;
        }
        acc
    }

    fn find_primitive(&self) -> FieldElement {
        let group = self.order as u64 - 1;
        let factors = prime_factors(group);
        (1..self.order)
            .find(|&g| factors.iter().all(|&p| self.pow_slow(g, group / p) != 1))
            .map(FieldElement)
            .expect("the multiplicative group of a finite field is cyclic")
    }

    fn build_log_tables(&mut self) {
        let n = (self.order - 1) as usize;
        let mut exp = vec![0u32; 2 * n.max(1)];
        let mut log = vec![0u32; self.order as usize];
        let mut cur = 1u32;
        for i in 0..n {
            exp[i] = cur;
            exp[i + n] = cur;
            log[cur as usize] = i as u32;
            cur = self.mul_slow(cur, self.alpha.0);
        }
        debug_assert_eq!(cur, 1, "alpha must have order q^m - 1");
        self.exp = exp;
        self.log = log;
    }

    fn build_frobenius_tables(&mut self) {
        let n = (self.order - 1) as u64;
        let q = self.base.order() as u64;
        let mut frob = Vec::with_capacity(self.m);
        frob.push((0..self.order).collect::<Vec<u32>>());
        for i in 1..self.m {
            let qi = q.pow(i as u32) % n.max(1);
            let table = (0..self.order)
                .map(|a| {
                    if a == 0 {
                        0
                    } else {
                        let l = self.log[a as usize] as u64;
                        self.exp[((l * qi) % n) as usize]
                    }
                })
                .collect();
            frob.push(table);
        }
        self.frob = frob;
    }

    pub fn base(&self) -> &PrimeField {
        &self.base
    }

    /// Characteristic `q` of the base field.
    pub fn q(&self) -> u32 {
        self.base.order()
    }

    /// Extension degree.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of elements `q^m`.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Monic modulus, little-endian.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// The primitive element found by lexicographic search.
    pub fn alpha(&self) -> FieldElement {
        self.alpha
    }

    /// Element with the given power-basis coordinates (little-endian).
    /// Returns `None` when the length is not `m` or a coordinate is out of range.
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Option<FieldElement> {
        if coeffs.len() != self.m || coeffs.iter().any(|&c| c >= self.q()) {
            return None;
        }
        Some(FieldElement(self.pack(coeffs)))
    }

    pub fn coeffs(&self, e: FieldElement) -> Vec<u32> {
        self.unpack(e.0)
    }

    /// Writes the power-basis coordinates of `e` into `out` (length `m`).
    pub fn write_coeffs(&self, e: FieldElement, out: &mut [u32]) {
        let q = self.q();
        let mut x = e.0;
        for slot in out.iter_mut().take(self.m) {
            *slot = x % q;
            x /= q;
        }
    }

    /// Element from its packed index; `None` if out of range.
    pub fn element(&self, index: u32) -> Option<FieldElement> {
        (index < self.order).then_some(FieldElement(index))
    }

    /// Embeds a residue of `F_q`.
    pub fn from_base(&self, c: u32) -> FieldElement {
        FieldElement(c % self.q())
    }

    /// All elements in lexicographic (packed index) order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.order).map(FieldElement)
    }

    /// `alpha^e`.
    pub fn alpha_pow(&self, e: u64) -> FieldElement {
        let n = (self.order - 1) as u64;
        FieldElement(self.exp[(e % n) as usize])
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.is_zero() {
            return FieldElement::ZERO;
        }
        let n = (self.order - 1) as u64;
        let l = self.log[a.0 as usize] as u64;
        FieldElement(self.exp[((l * (e % n)) % n) as usize])
    }

    /// Discrete logarithm to base alpha. `None` for zero.
    pub fn log(&self, a: FieldElement) -> Option<u32> {
        (!a.is_zero()).then(|| self.log[a.0 as usize])
    }

    /// `sigma^i(e)` for the q-Frobenius `sigma(a) = a^q`; negative `i` is
    /// reduced modulo `m`.
    #[inline]
    pub fn frobenius(&self, e: FieldElement, i: i64) -> FieldElement {
        let i = i.rem_euclid(self.m as i64) as usize;
        FieldElement(self.frob[i][e.0 as usize])
    }

    /// Generalized power `N_i(a) = sigma^{i-1}(a) ... sigma(a) a`.
    pub fn gen_power(&self, a: FieldElement, i: usize) -> FieldElement {
        let mut acc = FieldElement::ONE;
        for j in 0..i {
            acc = self.mul(acc, self.frobenius(a, j as i64));
        }
        acc
    }

    /// Iterated operator `D_a^i(b) = sigma^i(b) N_i(a)`.
    pub fn op_apply(&self, a: FieldElement, b: FieldElement, i: usize) -> FieldElement {
        let mut cur = b;
        for _ in 0..i {
            cur = self.mul(self.frobenius(cur, 1), a);
        }
        cur
    }

    /// `a^c = sigma(c) a c^{-1}`.
    pub fn conjugate(&self, a: FieldElement, c: FieldElement) -> Result<FieldElement, FieldError> {
        if c.is_zero() {
            return Err(FieldError::ZeroConjugator);
        }
        Ok(self.mul(self.mul(self.frobenius(c, 1), a), self.inv(c)))
    }

    /// Exhaustive search for `c != 0` with `a^c = b`.
    pub fn are_conjugate(&self, a: FieldElement, b: FieldElement) -> bool {
        self.elements()
            .skip(1)
            .any(|c| self.conjugate(a, c).map(|x| x == b).unwrap_or(false))
    }

    /// Representatives `1, alpha, ..., alpha^{ell-1}` of `ell` distinct nonzero
    /// conjugacy classes.
    pub fn conjugacy_representatives(&self, ell: usize) -> Result<Vec<FieldElement>, FieldError> {
        let max = self.q() as usize - 1;
        if ell > max {
            return Err(FieldError::TooManyClasses { ell, max });
        }
        Ok((0..ell as u64).map(|e| self.alpha_pow(e)).collect())
    }
}

impl Field for ExtField {
    type Elem = FieldElement;

    fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }
    fn one(&self) -> FieldElement {
        FieldElement::ONE
    }
    #[inline]
    fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.add {
            Some(t) => FieldElement(t[(a.0 * self.order + b.0) as usize]),
            None => FieldElement(self.add_digits(a.0, b.0)),
        }
    }
    #[inline]
    fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }
    #[inline]
    fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        FieldElement(self.exp[(self.log[a.0 as usize] + self.log[b.0 as usize]) as usize])
    }
    #[inline]
    fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(self.neg[a.0 as usize])
    }
    fn inv(&self, a: FieldElement) -> FieldElement {
        assert!(!a.is_zero(), "inverse of zero in F_q^m");
        let n = self.order - 1;
        FieldElement(self.exp[((n - self.log[a.0 as usize]) % n) as usize])
    }
}

fn smallest_irreducible(fq: &PrimeField, m: usize) -> Vec<u32> {
    let q = fq.order() as u64;
    let count = q.pow(m as u32);
    // Lexicographic order on (c_{m-1}, ..., c_0) with the leading 1 fixed.
    for idx in 0..count {
        let mut f = Vec::with_capacity(m + 1);
        let mut x = idx;
        let mut digits = vec![0u32; m];
        for slot in digits.iter_mut().rev() {
            *slot = (x % q) as u32;
            x /= q;
        }
        // digits[0] is the most significant (x^{m-1}) coefficient.
        for i in 0..m {
            f.push(digits[m - 1 - i]);
        }
        f.push(1);
        if fq_poly::is_irreducible(fq, &f) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}
