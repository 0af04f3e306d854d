//! Dense matrices over [`Field`]s, exact elimination, and `F_q`-subspaces.
//!
//! Subspaces are stored by their reduced row-echelon basis, so two
//! [`Subspace`] values are equal exactly when they span the same space.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::galois::{ExtField, Field, FieldElement, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("expansion basis is not F_q-linearly independent")]
    BadBasis,
    #[error("subspaces live in different ambient spaces ({0} vs {1})")]
    AmbientMismatch(usize, usize),
    #[error("cannot draw a {dim}-dimensional subspace ({reason})")]
    BadDim { dim: usize, reason: &'static str },
    #[error("dimension mismatch: {0}")]
    Shape(&'static str),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from equal-length rows. `cols` is needed for the
    /// zero-row case.
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Result<Self, LinalgError> {
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Shape("ragged rows"));
        }
        let n = rows.len();
        Ok(Self {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn push_row(&mut self, row: &[T]) {
        assert_eq!(row.len(), self.cols, "row length");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Vertical concatenation.
    pub fn stack(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::Shape("column counts differ"));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    fn truncate_rows(&mut self, rows: usize) {
        self.rows = rows;
        self.data.truncate(rows * self.cols);
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * self.cols);
        head[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }
}

impl<T: Copy> Matrix<T> {
    pub fn zeros<F: Field<Elem = T>>(field: &F, rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, field.zero())
    }

    pub fn identity<F: Field<Elem = T>>(field: &F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    /// Matrix product.
    pub fn mul<F: Field<Elem = T>>(&self, field: &F, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Shape("inner dimensions differ"));
        }
        let mut out = Self::zeros(field, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if field.is_zero(a) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = field.add(out.get(i, j), field.mul(a, rhs.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// `A x` for a column vector `x`.
    pub fn mul_vec<F: Field<Elem = T>>(&self, field: &F, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "vector length");
        self.row_iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(field.zero(), |acc, (&a, &b)| field.add(acc, field.mul(a, b)))
            })
            .collect()
    }
}

/// In-place reduction to reduced row-echelon form. Pivots are taken
/// leftmost-first from the first row with a nonzero entry; returns the pivot
/// columns. Zero rows end up at the bottom.
pub fn rref<F: Field>(field: &F, m: &mut Matrix<F::Elem>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| !field.is_zero(m.get(i, c))) else {
            continue;
        };
        m.swap_rows(r, p);
        let inv = field.inv(m.get(r, c));
        for x in m.row_mut(r)[c..].iter_mut() {
            *x = field.mul(*x, inv);
        }
        for i in 0..m.rows {
            if i == r {
                continue;
            }
            let factor = m.get(i, c);
            if field.is_zero(factor) {
                continue;
            }
            for j in c..m.cols {
                let v = field.sub(m.get(i, j), field.mul(factor, m.get(r, j)));
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<F: Field>(field: &F, m: &Matrix<F::Elem>) -> usize {
    let mut work = m.clone();
    rref(field, &mut work).len()
}

/// Solution set of `A x = b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSolution<T> {
    /// One solution, `None` when the system is inconsistent.
    pub particular: Option<Vec<T>>,
    /// Basis of the right kernel of `A`.
    pub nullspace: Vec<Vec<T>>,
}

impl<T> LinearSolution<T> {
    pub fn is_consistent(&self) -> bool {
        self.particular.is_some()
    }
}

/// Kernel basis of a matrix already in RREF with the given pivot columns.
/// Free variable `f` contributes the vector with a 1 in position `f`.
fn kernel_from_rref<F: Field>(field: &F, r: &Matrix<F::Elem>, pivots: &[usize], cols: usize) -> Vec<Vec<F::Elem>> {
    let mut is_pivot = vec![false; cols];
    for &p in pivots {
        is_pivot[p] = true;
    }
    (0..cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![field.zero(); cols];
            v[free] = field.one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = field.neg(r.get(row, free));
            }
            v
        })
        .collect()
}

pub fn nullspace<F: Field>(field: &F, a: &Matrix<F::Elem>) -> Vec<Vec<F::Elem>> {
    let mut work = a.clone();
    let pivots = rref(field, &mut work);
    kernel_from_rref(field, &work, &pivots, a.cols)
}

/// Exact Gaussian elimination on the augmented system `[A | b]`.
pub fn solve_linear<F: Field>(field: &F, a: &Matrix<F::Elem>, b: &[F::Elem]) -> LinearSolution<F::Elem> {
    assert_eq!(a.rows, b.len(), "right-hand side length");
    let n = a.cols;
    let mut aug = Matrix::zeros(field, a.rows, n + 1);
    for (i, &rhs) in b.iter().enumerate() {
        aug.row_mut(i)[..n].copy_from_slice(a.row(i));
        aug.set(i, n, rhs);
    }
    let pivots = rref(field, &mut aug);
    let consistent = pivots.last() != Some(&n);
    let coeff_pivots: Vec<usize> = pivots.iter().copied().filter(|&p| p < n).collect();
    let particular = consistent.then(|| {
        let mut x = vec![field.zero(); n];
        for (row, &p) in coeff_pivots.iter().enumerate() {
            x[p] = aug.get(row, n);
        }
        x
    });
    // The augmented column never creates a pivot row above a coefficient
    // pivot, so the kernel of A can be read off the same echelon form.
    let nullspace = kernel_from_rref(field, &aug, &coeff_pivots, n);
    LinearSolution { particular, nullspace }
}

/// Expands each `F_{q^m}` entry into `m` consecutive `F_q` coordinates with
/// respect to the ordered basis `basis`.
pub fn expand_rows(
    field: &ExtField,
    m: &Matrix<FieldElement>,
    basis: &[FieldElement],
) -> Result<Matrix<u32>, LinalgError> {
    let deg = field.m();
    let fq = field.base();
    if basis.len() != deg {
        return Err(LinalgError::BadBasis);
    }
    // Columns of `to_basis` convert power-basis coordinates into `basis`
    // coordinates: if B has the basis elements as rows, coords = p B^{-1}.
    let b = Matrix::from_rows(basis.iter().map(|&e| field.coeffs(e)).collect(), deg)?;
    let mut aug = Matrix::zeros(fq, deg, 2 * deg);
    for i in 0..deg {
        aug.row_mut(i)[..deg].copy_from_slice(b.row(i));
        aug.set(i, deg + i, 1);
    }
    let pivots = rref(fq, &mut aug);
    if pivots.len() < deg || pivots[deg - 1] >= deg {
        return Err(LinalgError::BadBasis);
    }
    let mut b_inv = Matrix::zeros(fq, deg, deg);
    for i in 0..deg {
        b_inv.row_mut(i).copy_from_slice(&aug.row(i)[deg..]);
    }
    let power_basis = basis.iter().enumerate().all(|(i, &e)| field.coeffs(e) == unit(deg, i));

    let mut out = Matrix::zeros(fq, m.rows(), m.cols() * deg);
    let mut coords = vec![0u32; deg];
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            field.write_coeffs(m.get(r, c), &mut coords);
            let slot = &mut out.row_mut(r)[c * deg..(c + 1) * deg];
            if power_basis {
                slot.copy_from_slice(&coords);
            } else {
                let converted = Matrix::from_rows(vec![coords.clone()], deg)?.mul(fq, &b_inv)?;
                slot.copy_from_slice(converted.row(0));
            }
        }
    }
    Ok(out)
}

fn unit(n: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// The power basis `1, x, ..., x^{m-1}` of `F_{q^m}` over `F_q`.
pub fn power_basis(field: &ExtField) -> Vec<FieldElement> {
    (0..field.m())
        .map(|i| field.from_coeffs(&unit(field.m(), i)).expect("unit vector"))
        .collect()
}

/// A subspace of `F_q^N` held as an RREF basis with full row rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix<u32>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Matrix::filled(0, ambient, 0),
        }
    }

    pub fn full(fq: &PrimeField, ambient: usize) -> Self {
        Self {
            ambient,
            basis: Matrix::identity(fq, ambient),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// RREF basis rows.
    pub fn basis(&self) -> &Matrix<u32> {
        &self.basis
    }

    pub fn contains(&self, fq: &PrimeField, v: &[u32]) -> bool {
        let mut m = self.basis.clone();
        m.push_row(v);
        rank(fq, &m) == self.dim()
    }

    pub fn sum(&self, fq: &PrimeField, other: &Subspace) -> Result<Subspace, LinalgError> {
        if self.ambient != other.ambient {
            return Err(LinalgError::AmbientMismatch(self.ambient, other.ambient));
        }
        Ok(rowspace(fq, &self.basis.stack(&other.basis)?))
    }
}

/// RREF basis of the `F_q` row span.
pub fn rowspace(fq: &PrimeField, m: &Matrix<u32>) -> Subspace {
    let mut work = m.clone();
    let r = rref(fq, &mut work).len();
    work.truncate_rows(r);
    Subspace {
        ambient: m.cols(),
        basis: work,
    }
}

pub fn subspace_sum_dim(fq: &PrimeField, u: &Subspace, v: &Subspace) -> Result<usize, LinalgError> {
    if u.ambient != v.ambient {
        return Err(LinalgError::AmbientMismatch(u.ambient, v.ambient));
    }
    Ok(rank(fq, &u.basis.stack(&v.basis)?))
}

pub fn subspace_intersection_dim(fq: &PrimeField, u: &Subspace, v: &Subspace) -> Result<usize, LinalgError> {
    Ok(u.dim() + v.dim() - subspace_sum_dim(fq, u, v)?)
}

fn random_vector<R: Rng + ?Sized>(fq: &PrimeField, n: usize, rng: &mut R) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..fq.order())).collect()
}

/// Uniform draw from the Grassmannian of `dim`-dimensional subspaces of `F_q^ambient`.
pub fn random_subspace<R: Rng + ?Sized>(
    fq: &PrimeField,
    ambient: usize,
    dim: usize,
    rng: &mut R,
) -> Result<Subspace, LinalgError> {
    if dim > ambient {
        return Err(LinalgError::BadDim {
            dim,
            reason: "larger than the ambient space",
        });
    }
    random_disjoint_subspace(fq, &Subspace::zero(ambient), dim, rng)
}

/// Uniform `dim`-dimensional subspace of `v`.
pub fn random_subspace_of<R: Rng + ?Sized>(
    fq: &PrimeField,
    v: &Subspace,
    dim: usize,
    rng: &mut R,
) -> Result<Subspace, LinalgError> {
    if dim > v.dim() {
        return Err(LinalgError::BadDim {
            dim,
            reason: "larger than the containing subspace",
        });
    }
    if dim == v.dim() {
        return Ok(v.clone());
    }
    // A uniform full-rank coefficient matrix picks a uniform subspace of the
    // coordinate space, which the basis maps isomorphically onto v.
    let coeffs = random_subspace(fq, v.dim(), dim, rng)?;
    Ok(rowspace(fq, &coeffs.basis.mul(fq, &v.basis)?))
}

/// Uniform `dim`-dimensional `E` with `E ∩ v = 0`.
///
/// Rows are drawn one at a time, rejecting vectors already in the span of
/// `v` and the rows chosen so far. Every admissible `E` has the same number
/// of ordered bases, so the result is uniform after reduction.
pub fn random_disjoint_subspace<R: Rng + ?Sized>(
    fq: &PrimeField,
    v: &Subspace,
    dim: usize,
    rng: &mut R,
) -> Result<Subspace, LinalgError> {
    if v.dim() + dim > v.ambient {
        return Err(LinalgError::BadDim {
            dim,
            reason: "no room for a complement of that size",
        });
    }
    let n = v.ambient;
    let mut span = v.basis.clone();
    let mut rows = Matrix::filled(0, n, 0u32);
    while rows.rows() < dim {
        let candidate = random_vector(fq, n, rng);
        let mut test = span.clone();
        test.push_row(&candidate);
        let mut reduced = test.clone();
        if rref(fq, &mut reduced).len() > span.rows() {
            span = test;
            rows.push_row(&candidate);
        }
    }
    Ok(rowspace(fq, &rows))
}

/// Number of `k`-dimensional subspaces of `F_q^n` (zero when `k > n`).
pub fn gaussian_binomial(n: usize, k: usize, q: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let q = BigUint::from(q);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= q.pow((n - i) as u32) - 1u32;
        den *= q.pow((i + 1) as u32) - 1u32;
    }
    num / den
}

/// Every vector of `F_q^n`, in little-endian counting order.
pub fn all_vectors(q: u32, n: usize) -> Vec<Vec<u32>> {
    let total = (q as usize).pow(n as u32);
    (0..total)
        .map(|mut x| {
            (0..n)
                .map(|_| {
                    let d = (x % q as usize) as u32;
                    x /= q as usize;
                    d
                })
                .collect()
        })
        .collect()
}

/// Calls `visit` once for every `k`-dimensional subspace of `F_q^n`, passing
/// its reduced row echelon basis. Pivot sets are visited in lexicographic
/// order and free entries in little-endian counting order.
pub fn for_each_rref_basis<V: FnMut(&Matrix<u32>)>(q: u32, n: usize, k: usize, mut visit: V) {
    if k > n {
        return;
    }
    let mut pivots: Vec<usize> = (0..k).collect();
    let mut m = Matrix::filled(k, n, 0u32);
    loop {
        let mut free = Vec::new();
        for (r, &p) in pivots.iter().enumerate() {
            for c in p + 1..n {
                if !pivots.contains(&c) {
                    free.push((r, c));
                }
            }
        }
        m.data.iter_mut().for_each(|x| *x = 0);
        for (r, &p) in pivots.iter().enumerate() {
            m.set(r, p, 1);
        }
        'count: loop {
            visit(&m);
            for &(r, c) in &free {
                let v = m.get(r, c) + 1;
                if v < q {
                    m.set(r, c, v);
                    continue 'count;
                }
                m.set(r, c, 0);
            }
            break;
        }
        // Next k-combination of 0..n.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if pivots[i] < n - k + i {
                pivots[i] += 1;
                for j in i + 1..k {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Every `k`-dimensional subspace of `F_q^n`. Exhaustive; only for tiny
/// `q^n` (brute-force checks).
pub fn enumerate_subspaces(fq: &PrimeField, n: usize, k: usize) -> Vec<Subspace> {
    let vecs = all_vectors(fq.order(), n);
    let mut level = vec![Subspace::zero(n)];
    for _ in 0..k {
        let mut next = std::collections::BTreeSet::new();
        for s in &level {
            for v in &vecs {
                if !s.contains(fq, v) {
                    let mut m = s.basis.clone();
                    m.push_row(v);
                    next.insert(rowspace(fq, &m).basis.data.clone());
                }
            }
        }
        level = next
            .into_iter()
            .map(|data| Subspace {
                ambient: n,
                basis: Matrix {
                    rows: data.len().checked_div(n).unwrap_or(0),
                    cols: n,
                    data,
                },
            })
            .collect();
    }
    level
}
