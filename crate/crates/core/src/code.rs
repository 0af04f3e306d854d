//! LILRS code construction: parameters, encoding, lifting, rate and
//! distance, plus the unlifted interleaved code and its skew-metric twin.

use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::Ratio;
use rand::Rng;
use thiserror::Error;

use crate::galois::{ExtField, Field, FieldElement, FieldError};
use crate::linalg::{self, rowspace, LinalgError, Matrix, Subspace};
use crate::skewpoly::SkewPolynomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("interleaving order s must be at least 1")]
    ZeroInterleaving,
    #[error("at least one shot is required")]
    NoShots,
    #[error("shot {shot} has length {len}, but at most m = {m} F_q-independent points exist")]
    BlockTooLong { shot: usize, len: usize, m: usize },
    #[error("shot {0} is empty")]
    EmptyBlock(usize),
    #[error("dimension k = {k} must satisfy 1 <= k <= n_t = {n_t}")]
    DimensionOutOfRange { k: usize, n_t: usize },
    #[error("expected {expected} {what}, got {got}")]
    Count { what: &'static str, expected: usize, got: usize },
    #[error("representative a_{0} is zero")]
    ZeroRepresentative(usize),
    #[error("representatives a_{0} and a_{1} are conjugate")]
    ConjugateRepresentatives(usize, usize),
    #[error("evaluation points of shot {0} are F_q-linearly dependent")]
    DependentPoints(usize),
    #[error("message does not match the code parameters: {0}")]
    ParamMismatch(&'static str),
}

/// Parameters of an LILRS code. Validated eagerly at construction.
#[derive(Debug, Clone)]
pub struct CodeParams {
    field: Arc<ExtField>,
    s: usize,
    block_lengths: Vec<usize>,
    k: usize,
    a: Vec<FieldElement>,
    beta: Vec<Vec<FieldElement>>,
    expansion_basis: Vec<FieldElement>,
    /// Per shot, the inverse of the `n_i x n_i` pivot block of the
    /// `F_q`-coordinates of `β^(i)` together with its pivot columns; used
    /// to express `ξ` in the `β^(i)` basis.
    beta_coords: Vec<(Vec<usize>, Matrix<u32>)>,
}

impl CodeParams {
    /// Code with default representatives `1, α, ..., α^{ℓ-1}` and evaluation
    /// points `α^0, ..., α^{n_i - 1}` in every shot.
    pub fn new(field: Arc<ExtField>, s: usize, block_lengths: Vec<usize>, k: usize) -> Result<Self, CodeError> {
        let ell = block_lengths.len();
        if ell == 0 {
            return Err(CodeError::NoShots);
        }
        let a = field.conjugacy_representatives(ell)?;
        let beta = block_lengths
            .iter()
            .map(|&n| (0..n as u64).map(|e| field.alpha_pow(e)).collect())
            .collect();
        Self::with_points(field, s, k, a, beta)
    }

    pub fn with_points(
        field: Arc<ExtField>,
        s: usize,
        k: usize,
        a: Vec<FieldElement>,
        beta: Vec<Vec<FieldElement>>,
    ) -> Result<Self, CodeError> {
        if s == 0 {
            return Err(CodeError::ZeroInterleaving);
        }
        let ell = beta.len();
        if ell == 0 {
            return Err(CodeError::NoShots);
        }
        if a.len() != ell {
            return Err(CodeError::Count {
                what: "conjugacy representatives",
                expected: ell,
                got: a.len(),
            });
        }
        let max = field.q() as usize - 1;
        if ell > max {
            return Err(FieldError::TooManyClasses { ell, max }.into());
        }
        let m = field.m();
        let block_lengths: Vec<usize> = beta.iter().map(Vec::len).collect();
        for (i, &n) in block_lengths.iter().enumerate() {
            if n == 0 {
                return Err(CodeError::EmptyBlock(i));
            }
            if n > m {
                return Err(CodeError::BlockTooLong { shot: i, len: n, m });
            }
        }
        let n_t: usize = block_lengths.iter().sum();
        if k == 0 || k > n_t {
            return Err(CodeError::DimensionOutOfRange { k, n_t });
        }
        for (i, &ai) in a.iter().enumerate() {
            if ai.is_zero() {
                return Err(CodeError::ZeroRepresentative(i));
            }
            for (j, &aj) in a.iter().enumerate().skip(i + 1) {
                if field.are_conjugate(ai, aj) {
                    return Err(CodeError::ConjugateRepresentatives(i, j));
                }
            }
        }
        let fq = *field.base();
        let mut beta_coords = Vec::with_capacity(ell);
        for (i, block) in beta.iter().enumerate() {
            let b = Matrix::from_rows(block.iter().map(|&e| field.coeffs(e)).collect(), m)?;
            let mut work = b.clone();
            let pivots = linalg::rref(&fq, &mut work);
            if pivots.len() < block.len() {
                return Err(CodeError::DependentPoints(i));
            }
            // xi = c B restricted to the pivot columns is c B_P, so
            // c = xi_P B_P^{-1}.
            let n = block.len();
            let mut bp = Matrix::zeros(&fq, n, n);
            for r in 0..n {
                for (c, &p) in pivots.iter().enumerate() {
                    bp.set(r, c, b.get(r, p));
                }
            }
            beta_coords.push((pivots, invert(&fq, &bp)));
        }
        let expansion_basis = linalg::power_basis(&field);
        Ok(Self {
            field,
            s,
            block_lengths,
            k,
            a,
            beta,
            expansion_basis,
            beta_coords,
        })
    }

    pub fn field(&self) -> &Arc<ExtField> {
        &self.field
    }

    /// Number of shots `ℓ`.
    pub fn ell(&self) -> usize {
        self.block_lengths.len()
    }

    /// Interleaving order.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn block_lengths(&self) -> &[usize] {
        &self.block_lengths
    }

    /// Total subspace dimension `n_t`.
    pub fn n_t(&self) -> usize {
        self.block_lengths.iter().sum()
    }

    pub fn representatives(&self) -> &[FieldElement] {
        &self.a
    }

    pub fn beta(&self) -> &[Vec<FieldElement>] {
        &self.beta
    }

    pub fn expansion_basis(&self) -> &[FieldElement] {
        &self.expansion_basis
    }

    /// Ambient dimension `N_i = n_i + s m` of shot `i`.
    pub fn ambient_dim(&self, shot: usize) -> usize {
        self.block_lengths[shot] + self.s * self.field.m()
    }

    pub fn ambient_dims(&self) -> Vec<usize> {
        (0..self.ell()).map(|i| self.ambient_dim(i)).collect()
    }

    /// `ξ = Σ_j c_j β_j^(i)`.
    pub fn xi_from_coords(&self, shot: usize, coords: &[u32]) -> FieldElement {
        let f = &self.field;
        self.beta[shot]
            .iter()
            .zip(coords)
            .fold(FieldElement::ZERO, |acc, (&b, &c)| f.add(acc, f.mul(f.from_base(c), b)))
    }

    /// Coordinates of `ξ` in the basis `β^(i)`; `None` if `ξ` is outside
    /// their span.
    pub fn coords_of_xi(&self, shot: usize, xi: FieldElement) -> Option<Vec<u32>> {
        let fq = self.field.base();
        let (pivots, inv) = &self.beta_coords[shot];
        let full = self.field.coeffs(xi);
        let restricted: Vec<u32> = pivots.iter().map(|&p| full[p]).collect();
        let row = Matrix::from_rows(vec![restricted], pivots.len()).ok()?;
        let c = row.mul(fq, inv).ok()?.row(0).to_vec();
        (self.xi_from_coords(shot, &c) == xi).then_some(c)
    }

    /// Worst-case number of root-finding solutions `q^{m k (s-1)}`.
    pub fn worst_case_list_size(&self) -> BigUint {
        BigUint::from(self.field.q()).pow((self.field.m() * self.k * (self.s - 1)) as u32)
    }
}

fn invert(fq: &crate::galois::PrimeField, m: &Matrix<u32>) -> Matrix<u32> {
    let n = m.rows();
    let mut aug = Matrix::zeros(fq, n, 2 * n);
    for i in 0..n {
        aug.row_mut(i)[..n].copy_from_slice(m.row(i));
        aug.set(i, n + i, 1);
    }
    linalg::rref(fq, &mut aug);
    let mut out = Matrix::zeros(fq, n, n);
    for i in 0..n {
        out.row_mut(i).copy_from_slice(&aug.row(i)[n..]);
    }
    out
}

/// The `s` message polynomials, each of degree `< k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessageTuple {
    polys: Vec<SkewPolynomial>,
}

impl MessageTuple {
    pub fn new(params: &CodeParams, polys: Vec<SkewPolynomial>) -> Result<Self, CodeError> {
        if polys.len() != params.s {
            return Err(CodeError::ParamMismatch("wrong number of message polynomials"));
        }
        if polys.iter().any(|p| p.degree().is_some_and(|d| d >= params.k)) {
            return Err(CodeError::ParamMismatch("message polynomial of degree >= k"));
        }
        Ok(Self { polys })
    }

    pub fn zero(params: &CodeParams) -> Self {
        Self {
            polys: vec![SkewPolynomial::zero(); params.s],
        }
    }

    /// Uniform over all `q^{m k s}` messages.
    pub fn random<R: Rng + ?Sized>(params: &CodeParams, rng: &mut R) -> Self {
        let order = params.field.order();
        let coeffs: Vec<FieldElement> = (0..params.s * params.k)
            .map(|_| params.field.element(rng.gen_range(0..order)).expect("in range"))
            .collect();
        Self::from_coefficients(params, &coeffs).expect("length s k")
    }

    /// Coefficient `j` of polynomial `l` is `coeffs[l k + j]`.
    pub fn from_coefficients(params: &CodeParams, coeffs: &[FieldElement]) -> Result<Self, CodeError> {
        if coeffs.len() != params.s * params.k {
            return Err(CodeError::ParamMismatch("need s k coefficients"));
        }
        Ok(Self {
            polys: coeffs
                .chunks(params.k)
                .map(|c| SkewPolynomial::from_coeffs(c.to_vec()))
                .collect(),
        })
    }

    pub fn to_coefficients(&self, k: usize) -> Vec<FieldElement> {
        self.polys.iter().flat_map(|p| (0..k).map(move |j| p.coeff(j))).collect()
    }

    pub fn polys(&self) -> &[SkewPolynomial] {
        &self.polys
    }

    fn check(&self, params: &CodeParams) -> Result<(), CodeError> {
        if self.polys.len() != params.s {
            return Err(CodeError::ParamMismatch("wrong number of message polynomials"));
        }
        if self.polys.iter().any(|p| p.degree().is_some_and(|d| d >= params.k)) {
            return Err(CodeError::ParamMismatch("message polynomial of degree >= k"));
        }
        Ok(())
    }
}

/// A tuple of `ℓ` subspaces, one per shot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubspaceTuple {
    shots: Vec<Subspace>,
}

impl SubspaceTuple {
    pub fn new(shots: Vec<Subspace>) -> Self {
        Self { shots }
    }

    pub fn shots(&self) -> &[Subspace] {
        &self.shots
    }

    pub fn dims(&self) -> Vec<usize> {
        self.shots.iter().map(Subspace::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.shots.iter().map(Subspace::dim).sum()
    }
}

/// ILRS codeword: row `l`, column `(i, j)` holds `f^(l)(β_j^(i))_{a_i}`.
pub fn encode_ilrs(params: &CodeParams, msg: &MessageTuple) -> Result<Matrix<FieldElement>, CodeError> {
    msg.check(params)?;
    let f = &params.field;
    let mut out = Matrix::zeros(f.as_ref(), params.s, params.n_t());
    let mut col = 0;
    for (i, block) in params.beta.iter().enumerate() {
        for &b in block {
            for (l, p) in msg.polys.iter().enumerate() {
                out.set(l, col, p.op_evaluate(f, b, params.a[i]));
            }
            col += 1;
        }
    }
    Ok(out)
}

/// Lifted codeword: shot `i` is the row space of `(I | expand(evaluations))`.
pub fn lift(params: &CodeParams, msg: &MessageTuple) -> Result<SubspaceTuple, CodeError> {
    let c = encode_ilrs(params, msg)?;
    let f = &params.field;
    let fq = *f.base();
    let m = f.m();
    let mut shots = Vec::with_capacity(params.ell());
    let mut col = 0;
    for i in 0..params.ell() {
        let n = params.block_lengths[i];
        let big_n = params.ambient_dim(i);
        let mut rows = Matrix::zeros(&fq, n, big_n);
        let mut coords = vec![0u32; m];
        for j in 0..n {
            let row = rows.row_mut(j);
            row[j] = 1;
            for l in 0..params.s {
                f.write_coeffs(c.get(l, col + j), &mut coords);
                row[n + l * m..n + (l + 1) * m].copy_from_slice(&coords);
            }
        }
        col += n;
        shots.push(rowspace(&fq, &rows));
    }
    Ok(SubspaceTuple { shots })
}

/// `R = s m k / Σ_i n_i (n_i + s m)`.
pub fn code_rate(params: &CodeParams) -> Ratio<u64> {
    let sm = (params.s * params.field.m()) as u64;
    let num = sm * params.k as u64;
    let den: u64 = params.block_lengths.iter().map(|&n| n as u64 * (n as u64 + sm)).sum();
    Ratio::new(num, den)
}

/// `2 (n_t − k + 1)`.
pub fn min_sum_subspace_distance(params: &CodeParams) -> usize {
    2 * (params.n_t() - params.k + 1)
}

/// `b_j = a_i^{β_j} = D_{a_i}(β_j) β_j^{-1}` for every evaluation point.
pub fn isrs_params(params: &CodeParams) -> Vec<FieldElement> {
    let f = &params.field;
    params
        .beta
        .iter()
        .zip(&params.a)
        .flat_map(|(block, &a)| block.iter().map(move |&b| f.conjugate(a, b).expect("β entries are nonzero")))
        .collect()
}

fn scale_columns(params: &CodeParams, c: &Matrix<FieldElement>, invert: bool) -> Result<Matrix<FieldElement>, CodeError> {
    let f = &params.field;
    if c.cols() != params.n_t() {
        return Err(CodeError::ParamMismatch("codeword length differs from n_t"));
    }
    let beta: Vec<FieldElement> = params.beta.iter().flatten().copied().collect();
    let mut out = c.clone();
    for r in 0..c.rows() {
        for (j, &b) in beta.iter().enumerate() {
            let factor = if invert { f.inv(b) } else { b };
            out.set(r, j, f.mul(c.get(r, j), factor));
        }
    }
    Ok(out)
}

/// `C · diag(β^{-1})`: ILRS coordinates to skew-metric coordinates.
pub fn isrs_transform(params: &CodeParams, c: &Matrix<FieldElement>) -> Result<Matrix<FieldElement>, CodeError> {
    scale_columns(params, c, true)
}

/// `C · diag(β)`, the inverse of [`isrs_transform`].
pub fn isrs_inverse_transform(params: &CodeParams, c: &Matrix<FieldElement>) -> Result<Matrix<FieldElement>, CodeError> {
    scale_columns(params, c, false)
}
