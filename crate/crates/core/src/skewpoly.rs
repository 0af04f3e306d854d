//! The skew polynomial ring `F_{q^m}[x, σ]` with `x·a = σ(a)·x`.

use crate::galois::{ExtField, Field, FieldElement};

/// `f = Σ f_i x^i` with coefficients on the left. Trailing zero
/// coefficients are always trimmed, so the zero polynomial has no
/// coefficients and [`SkewPolynomial::degree`] returns `None` for it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SkewPolynomial {
    coeffs: Vec<FieldElement>,
}

impl SkewPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(FieldElement::ONE)
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// `c·x^i`.
    pub fn monomial(c: FieldElement, i: usize) -> Self {
        let mut coeffs = vec![FieldElement::ZERO; i + 1];
        coeffs[i] = c;
        Self::from_coeffs(coeffs)
    }

    pub fn from_coeffs(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Coefficient of `x^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or(FieldElement::ZERO)
    }

    /// `None` stands for the degree −∞ of the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, field: &ExtField, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::from_coeffs((0..n).map(|i| field.add(self.coeff(i), other.coeff(i))).collect())
    }

    pub fn sub(&self, field: &ExtField, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::from_coeffs((0..n).map(|i| field.sub(self.coeff(i), other.coeff(i))).collect())
    }

    /// Left scalar multiple `c·f`.
    pub fn scale(&self, field: &ExtField, c: FieldElement) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|&a| field.mul(c, a)).collect())
    }

    /// Ore product: `(f·g)_k = Σ_{i+j=k} f_i σ^i(g_j)`.
    pub fn mul(&self, field: &ExtField, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![FieldElement::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &fi) in self.coeffs.iter().enumerate() {
            if fi.is_zero() {
                continue;
            }
            for (j, &gj) in other.coeffs.iter().enumerate() {
                let t = field.mul(fi, field.frobenius(gj, i as i64));
                out[i + j] = field.add(out[i + j], t);
            }
        }
        Self::from_coeffs(out)
    }

    /// Generalized operator evaluation `f(b)_a = Σ f_i D_a^i(b)`.
    pub fn op_evaluate(&self, field: &ExtField, b: FieldElement, a: FieldElement) -> FieldElement {
        let mut acc = FieldElement::ZERO;
        let mut d = b;
        for (i, &fi) in self.coeffs.iter().enumerate() {
            if i > 0 {
                d = field.mul(field.frobenius(d, 1), a);
            }
            acc = field.add(acc, field.mul(fi, d));
        }
        acc
    }
}

/// Checks the product rule `(f·g)(b)_a = f(g(b)_a)_a`.
pub fn product_rule_check(
    field: &ExtField,
    f: &SkewPolynomial,
    g: &SkewPolynomial,
    b: FieldElement,
    a: FieldElement,
) -> bool {
    let lhs = f.mul(field, g).op_evaluate(field, b, a);
    let rhs = f.op_evaluate(field, g.op_evaluate(field, b, a), a);
    lhs == rhs
}

/// Monic polynomial of least degree vanishing at every `(b, class)` point,
/// where `class` indexes into `reps`. Points are absorbed in order: whenever
/// the current polynomial does not vanish at a point, it is multiplied on
/// the left by `x − a^c` with `c` the current evaluation.
pub fn annihilator(field: &ExtField, points: &[(FieldElement, usize)], reps: &[FieldElement]) -> SkewPolynomial {
    let mut f = SkewPolynomial::one();
    for &(b, class) in points {
        let a = reps[class];
        let c = f.op_evaluate(field, b, a);
        if c.is_zero() {
            continue;
        }
        let root = field.conjugate(a, c).expect("c is nonzero");
        let factor = SkewPolynomial::from_coeffs(vec![field.neg(root), FieldElement::ONE]);
        f = factor.mul(field, &f);
    }
    f
}

/// `Q(x, y_1, ..., y_s) = Q_0(x) + Q_1(x) y_1 + ... + Q_s(x) y_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultivariateSkewPolynomial {
    components: Vec<SkewPolynomial>,
}

impl MultivariateSkewPolynomial {
    /// `components[0]` is `Q_0`; there must be at least one component.
    pub fn new(components: Vec<SkewPolynomial>) -> Self {
        assert!(!components.is_empty(), "Q_0 is required");
        Self { components }
    }

    pub fn components(&self) -> &[SkewPolynomial] {
        &self.components
    }

    /// Interleaving order `s`.
    pub fn order(&self) -> usize {
        self.components.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(SkewPolynomial::is_zero)
    }

    /// `max_j deg(Q_j) + w_j`, `None` for the zero polynomial.
    pub fn weighted_degree(&self, weights: &[usize]) -> Option<usize> {
        assert_eq!(weights.len(), self.components.len(), "one weight per component");
        self.components
            .iter()
            .zip(weights)
            .filter_map(|(q, &w)| q.degree().map(|d| d + w))
            .max()
    }

    /// `E(Q) = Q_0(ξ)_a + Σ_l Q_l(u_l)_a`.
    pub fn evaluate(&self, field: &ExtField, xi: FieldElement, u: &[FieldElement], a: FieldElement) -> FieldElement {
        assert_eq!(u.len(), self.order(), "one value per y-variable");
        let mut acc = self.components[0].op_evaluate(field, xi, a);
        for (q, &ul) in self.components[1..].iter().zip(u) {
            acc = field.add(acc, q.op_evaluate(field, ul, a));
        }
        acc
    }

    /// `Q_0 + Σ_l Q_l · f_l`.
    pub fn substitute(&self, field: &ExtField, f: &[SkewPolynomial]) -> SkewPolynomial {
        assert_eq!(f.len(), self.order(), "one polynomial per y-variable");
        self.components[1..]
            .iter()
            .zip(f)
            .fold(self.components[0].clone(), |acc, (q, fl)| acc.add(field, &q.mul(field, fl)))
    }
}
