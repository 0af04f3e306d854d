//! Interpolation-based list and probabilistic-unique decoding.
//!
//! The decoder solves one linear system for a basis of all interpolation
//! polynomials `Q = (Q_0, Q_1, ..., Q_s)` that vanish on the received rows,
//! then one σ-twisted linear system whose solutions are the candidate
//! message tuples. Every candidate is re-encoded and checked against the
//! received spaces before it is returned.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{pull_back, ChannelError, Reachability, ReceivedRow, ReceivedShot};
use crate::code::{isrs_inverse_transform, CodeError, CodeParams, MessageTuple, SubspaceTuple};
use crate::galois::{ExtField, Field, FieldElement, PrimeField};
use crate::linalg::{for_each_rref_basis, gaussian_binomial, nullspace, rank, rref, solve_linear, LinearSolution, Matrix};
use crate::skewpoly::{MultivariateSkewPolynomial, SkewPolynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    List,
    Unique,
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecodeMode::List => "list",
            DecodeMode::Unique => "unique",
        })
    }
}

impl FromStr for DecodeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "list" => Ok(DecodeMode::List),
            "unique" => Ok(DecodeMode::Unique),
            other => Err(format!("unknown decode mode `{other}` (expected list or unique)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum DecoderError {
    #[error("received data does not match the code: {0}")]
    Shape(&'static str),
    #[error("the interpolation system has only the zero solution")]
    NoSolution,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Degree bound `D` of the interpolation problem.
///
/// List mode uses the smallest `D` for which the number of unknowns
/// `D(s+1) − s(k−1)` exceeds `n_r`; unique mode uses `⌈(n_r + sk)/(s+1)⌉`.
pub fn degree_bound(s: usize, k: usize, n_r: usize, mode: DecodeMode) -> usize {
    match mode {
        DecodeMode::List => (n_r + s * (k - 1) + 1).div_ceil(s + 1),
        DecodeMode::Unique => (n_r + s * k).div_ceil(s + 1),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpolationConfig {
    pub degree_bound: usize,
    /// `(0, k−1, ..., k−1)`.
    pub weights: Vec<usize>,
    pub mode: DecodeMode,
}

impl InterpolationConfig {
    pub fn new(params: &CodeParams, n_r: usize, mode: DecodeMode) -> Self {
        let (s, k) = (params.s(), params.k());
        let mut weights = vec![k - 1; s + 1];
        weights[0] = 0;
        Self {
            degree_bound: degree_bound(s, k, n_r, mode),
            weights,
            mode,
        }
    }

    /// Number of coefficients of `Q_l` for `l ≥ 1`, i.e. `D − k + 1`
    /// (zero when `D < k`).
    pub fn y_len(&self) -> usize {
        (self.degree_bound + 1).saturating_sub(self.weights.get(1).map_or(0, |w| w + 1))
    }

    /// Total number of unknown coefficients.
    pub fn unknowns(&self) -> usize {
        self.degree_bound + (self.weights.len() - 1) * self.y_len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpolationBasis {
    pub config: InterpolationConfig,
    pub basis: Vec<MultivariateSkewPolynomial>,
}

impl InterpolationBasis {
    /// `d_I`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// `b, D_a(b), ..., D_a^{len−1}(b)` appended to `out`.
fn op_powers(f: &ExtField, a: FieldElement, b: FieldElement, len: usize, out: &mut Vec<FieldElement>) {
    let mut cur = b;
    for _ in 0..len {
        out.push(cur);
        cur = f.mul(f.frobenius(cur, 1), a);
    }
}

fn check_received(params: &CodeParams, received: &[ReceivedShot]) -> Result<usize, DecoderError> {
    if received.len() != params.ell() {
        return Err(DecoderError::Shape("wrong number of shots"));
    }
    if received.iter().flat_map(|s| &s.rows).any(|r| r.u.len() != params.s()) {
        return Err(DecoderError::Shape("received row with the wrong number of y-values"));
    }
    Ok(received.iter().map(|s| s.rows.len()).sum())
}

/// Basis of all `Q` with `deg Q_0 < D`, `deg Q_l ≤ D − k` vanishing on
/// every received row. Columns of the system are the `Q_0` coefficients by
/// degree, then those of `Q_1`, ..., `Q_s`.
pub fn build_interpolation(
    params: &CodeParams,
    received: &[ReceivedShot],
    cfg: &InterpolationConfig,
) -> Result<InterpolationBasis, DecoderError> {
    let n_r = check_received(params, received)?;
    if cfg.degree_bound != degree_bound(params.s(), params.k(), n_r, cfg.mode) || cfg.weights.len() != params.s() + 1 {
        return Err(DecoderError::Shape("interpolation config does not match the received dimension"));
    }
    let f = params.field();
    let d = cfg.degree_bound;
    let y_len = cfg.y_len();
    let cols = cfg.unknowns();
    let mut m = Matrix::filled(0, cols, FieldElement::ZERO);
    let mut row = Vec::with_capacity(cols);
    for (shot, &a) in received.iter().zip(params.representatives()) {
        for r in &shot.rows {
            row.clear();
            op_powers(f, a, r.xi, d, &mut row);
            for &ul in &r.u {
                op_powers(f, a, ul, y_len, &mut row);
            }
            m.push_row(&row);
        }
    }
    let kernel = nullspace(f.as_ref(), &m);
    if kernel.is_empty() {
        return Err(DecoderError::NoSolution);
    }
    let basis = kernel
        .into_iter()
        .map(|v| {
            let mut comps = vec![SkewPolynomial::from_coeffs(v[..d].to_vec())];
            comps.extend(v[d..].chunks(y_len.max(1)).take(params.s()).map(|c| {
                if y_len == 0 {
                    SkewPolynomial::zero()
                } else {
                    SkewPolynomial::from_coeffs(c.to_vec())
                }
            }));
            comps.resize(params.s() + 1, SkewPolynomial::zero());
            MultivariateSkewPolynomial::new(comps)
        })
        .collect();
    Ok(InterpolationBasis {
        config: cfg.clone(),
        basis,
    })
}

/// The linear system `Q_R g = rhs` in the twisted unknowns
/// `g_{j s + (l−1)} = σ^{−j}(f^(l)_j)`.
///
/// Row `d d_I + r` is coefficient `d` of `Q_0^(r) + Σ_l Q_l^(r) f^(l)`
/// with `σ^{−d}` applied, so that it becomes `F_{q^m}`-linear in `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootFindingSystem {
    pub matrix: Matrix<FieldElement>,
    pub rhs: Vec<FieldElement>,
    pub s: usize,
    pub k: usize,
    pub degree_bound: usize,
    pub interpolation_dim: usize,
}

pub fn build_root_finding(basis: &InterpolationBasis, params: &CodeParams) -> RootFindingSystem {
    let f = params.field();
    let (s, k) = (params.s(), params.k());
    let d_max = basis.config.degree_bound;
    let d_i = basis.dim();
    let mut matrix = Matrix::filled(d_max * d_i, s * k, FieldElement::ZERO);
    let mut rhs = vec![FieldElement::ZERO; d_max * d_i];
    for d in 0..d_max {
        let twist = -(d as i64);
        for (r, q) in basis.basis.iter().enumerate() {
            let row = d * d_i + r;
            for j in 0..k.min(d + 1) {
                for l in 1..=s {
                    let c = q.components()[l].coeff(d - j);
                    if !c.is_zero() {
                        matrix.set(row, j * s + l - 1, f.frobenius(c, twist));
                    }
                }
            }
            rhs[row] = f.neg(f.frobenius(q.components()[0].coeff(d), twist));
        }
    }
    RootFindingSystem {
        matrix,
        rhs,
        s,
        k,
        degree_bound: d_max,
        interpolation_dim: d_i,
    }
}

impl RootFindingSystem {
    pub fn solve(&self, field: &ExtField) -> LinearSolution<FieldElement> {
        solve_linear(field, &self.matrix, &self.rhs)
    }

    /// Twisted unknowns of a message: `g_{j s + l} = σ^{−j}(f^(l+1)_j)`.
    pub fn twist(&self, field: &ExtField, msg: &MessageTuple) -> Vec<FieldElement> {
        twist_coefficients(field, self.s, self.k, &msg.to_coefficients(self.k))
    }

    /// Message coefficients `f^(l)_j = σ^j(g_{j s + l − 1})`, laid out as in
    /// [`MessageTuple::from_coefficients`].
    pub fn untwist(&self, field: &ExtField, g: &[FieldElement]) -> Vec<FieldElement> {
        let mut out = vec![FieldElement::ZERO; self.s * self.k];
        for j in 0..self.k {
            for l in 0..self.s {
                out[l * self.k + j] = field.frobenius(g[j * self.s + l], j as i64);
            }
        }
        out
    }

    pub fn is_satisfied(&self, field: &ExtField, g: &[FieldElement]) -> bool {
        self.matrix.mul_vec(field, g) == self.rhs
    }
}

fn twist_coefficients(field: &ExtField, s: usize, k: usize, coeffs: &[FieldElement]) -> Vec<FieldElement> {
    let mut g = vec![FieldElement::ZERO; s * k];
    for l in 0..s {
        for j in 0..k {
            g[j * s + l] = field.frobenius(coeffs[l * k + j], -(j as i64));
        }
    }
    g
}

/// `γ + s δ < s (n_t − k + 1)`.
pub fn region_list(params: &CodeParams, gamma: usize, delta: usize) -> bool {
    let s = params.s();
    gamma + s * delta < s * (params.n_t() - params.k() + 1)
}

/// `γ + s δ ≤ s (n_t − k)`.
pub fn region_unique(params: &CodeParams, gamma: usize, delta: usize) -> bool {
    let s = params.s();
    gamma + s * delta <= s * (params.n_t() - params.k())
}

pub fn in_region(params: &CodeParams, mode: DecodeMode, gamma: usize, delta: usize) -> bool {
    match mode {
        DecodeMode::List => region_list(params, gamma, delta),
        DecodeMode::Unique => region_unique(params, gamma, delta),
    }
}

/// The heuristic failure bound `4 q^{−exponent}` of unique decoding, with
/// `exponent = m (s (D − k) − γ + 1)` and the unique-mode `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureBound {
    pub q: u32,
    pub exponent: i64,
}

impl FailureBound {
    pub fn exact(&self) -> Ratio<BigUint> {
        let q = BigUint::from(self.q);
        let four = BigUint::from(4u32);
        if self.exponent >= 0 {
            Ratio::new(four, q.pow(self.exponent as u32))
        } else {
            Ratio::new(four * q.pow((-self.exponent) as u32), BigUint::one())
        }
    }

    pub fn value(&self) -> f64 {
        4.0 * (self.q as f64).powf(-(self.exponent as f64))
    }
}

pub fn failure_bound(params: &CodeParams, gamma: usize, n_r: usize) -> FailureBound {
    let (s, k) = (params.s() as i64, params.k() as i64);
    let d = degree_bound(params.s(), params.k(), n_r, DecodeMode::Unique) as i64;
    FailureBound {
        q: params.field().q(),
        exponent: params.field().m() as i64 * (s * (d - k) - gamma as i64 + 1),
    }
}

/// Computes how far the received spaces are from the lift of a message.
///
/// For a received basis row `(ξ, u)` the error `u^(l) − f^(l)(ξ)` vanishes
/// exactly when the row lies in the lifted codeword space, so the number of
/// insertions in shot `i` is the `F_q`-rank of its error rows.
struct Verifier<'a> {
    params: &'a CodeParams,
    /// Per shot, per received row: `D_{a_i}^j(ξ)` for `j < k`, and `u`.
    shots: Vec<Vec<(Vec<FieldElement>, Vec<FieldElement>)>>,
}

impl<'a> Verifier<'a> {
    fn new(params: &'a CodeParams, received: &[ReceivedShot]) -> Self {
        let f = params.field();
        let shots = received
            .iter()
            .zip(params.representatives())
            .map(|(shot, &a)| {
                shot.rows
                    .iter()
                    .map(|r| {
                        let mut pw = Vec::with_capacity(params.k());
                        op_powers(f, a, r.xi, params.k(), &mut pw);
                        (pw, r.u.clone())
                    })
                    .collect()
            })
            .collect();
        Self { params, shots }
    }

    fn reachability(&self, coeffs: &[FieldElement]) -> Reachability {
        let f = self.params.field();
        let fq = *f.base();
        let (s, k, m) = (self.params.s(), self.params.k(), f.m());
        let per_shot = self
            .shots
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                let mut err = Matrix::filled(rows.len(), s * m, 0u32);
                for (r, (pw, u)) in rows.iter().enumerate() {
                    let out = err.row_mut(r);
                    for l in 0..s {
                        let mut e = u[l];
                        for j in 0..k {
                            e = f.sub(e, f.mul(coeffs[l * k + j], pw[j]));
                        }
                        f.write_coeffs(e, &mut out[l * m..(l + 1) * m]);
                    }
                }
                let gamma = rank(&fq, &err);
                (gamma, self.params.block_lengths()[i] + gamma - rows.len())
            })
            .collect();
        Reachability::from_per_shot(per_shot)
    }
}

/// `(γ, δ)` of the received spaces relative to the lift of `msg`. The rows
/// of every received shot must be linearly independent over `F_q`.
pub fn received_reachability(params: &CodeParams, received: &[ReceivedShot], msg: &MessageTuple) -> Reachability {
    Verifier::new(params, received).reachability(&msg.to_coefficients(params.k()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    /// Only the zero polynomial satisfies the interpolation constraints.
    NoInterpolant,
    /// The root-finding system has more than one solution (unique mode).
    RankDeficient,
    /// The root-finding system has no solution.
    Inconsistent,
    /// The candidate set is too large to search.
    ListOverflow,
    /// No solution of the root-finding system passes verification.
    NoVerifiedCandidate,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::NoInterpolant => "no-interpolant",
            FailureReason::RankDeficient => "rank-deficient",
            FailureReason::Inconsistent => "inconsistent",
            FailureReason::ListOverflow => "list-overflow",
            FailureReason::NoVerifiedCandidate => "no-verified-candidate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeStatus {
    Unique,
    List,
    Failure(FailureReason),
}

impl fmt::Display for DecodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeStatus::Unique => f.write_str("unique"),
            DecodeStatus::List => f.write_str("list"),
            DecodeStatus::Failure(r) => write!(f, "failure({r})"),
        }
    }
}

/// How list mode searched the root-finding solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ListRoute {
    /// Every element of the affine solution set was checked.
    Enumeration,
    /// Small subspaces of the received spaces were tried as part of the
    /// intersection with a codeword.
    SubspaceSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub received_dim: usize,
    pub degree_bound: usize,
    /// `d_I`, zero when interpolation failed.
    pub interpolation_dim: usize,
    pub root_rank: Option<usize>,
    pub root_nullity: Option<usize>,
    pub list_route: Option<ListRoute>,
    pub candidates_examined: u64,
    /// `q^{m k (s−1)}`.
    pub worst_case_list_size: BigUint,
    /// Distance of the received spaces to each returned message.
    pub reachability: Vec<Reachability>,
    /// Heuristic failure bound for unique results.
    pub failure_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    /// Sorted by coefficient vector.
    pub messages: Vec<MessageTuple>,
    pub diagnostics: Diagnostics,
}

impl DecodeOutcome {
    pub fn contains(&self, msg: &MessageTuple) -> bool {
        self.messages.contains(msg)
    }

    pub fn is_failure(&self) -> bool {
        matches!(self.status, DecodeStatus::Failure(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderOptions {
    pub mode: DecodeMode,
    /// Largest affine solution set enumerated element by element.
    pub list_cap: u64,
    /// Largest number of subspace combinations tried when the solution set
    /// exceeds `list_cap`.
    pub search_cap: u64,
}

impl DecoderOptions {
    pub const DEFAULT_LIST_CAP: u64 = 4096;
    pub const DEFAULT_SEARCH_CAP: u64 = 1 << 20;

    pub fn new(mode: DecodeMode) -> Self {
        Self {
            mode,
            list_cap: Self::DEFAULT_LIST_CAP,
            search_cap: Self::DEFAULT_SEARCH_CAP,
        }
    }
}

pub fn decode(params: &CodeParams, u: &SubspaceTuple, mode: DecodeMode) -> Result<DecodeOutcome, DecoderError> {
    decode_with(params, u, &DecoderOptions::new(mode))
}

pub fn decode_with(params: &CodeParams, u: &SubspaceTuple, opts: &DecoderOptions) -> Result<DecodeOutcome, DecoderError> {
    let received = pull_back(params, u)?;
    decode_received(params, &received, opts)
}

/// Decodes from received rows. The rows of each shot must form an `F_q`
/// basis of the received space.
pub fn decode_received(
    params: &CodeParams,
    received: &[ReceivedShot],
    opts: &DecoderOptions,
) -> Result<DecodeOutcome, DecoderError> {
    let n_r = check_received(params, received)?;
    let f = params.field();
    let cfg = InterpolationConfig::new(params, n_r, opts.mode);
    let mut diag = Diagnostics {
        received_dim: n_r,
        degree_bound: cfg.degree_bound,
        interpolation_dim: 0,
        root_rank: None,
        root_nullity: None,
        list_route: None,
        candidates_examined: 0,
        worst_case_list_size: params.worst_case_list_size(),
        reachability: Vec::new(),
        failure_bound: None,
    };
    let fail = |reason, diagnostics| DecodeOutcome {
        status: DecodeStatus::Failure(reason),
        messages: Vec::new(),
        diagnostics,
    };
    let basis = match build_interpolation(params, received, &cfg) {
        Ok(b) => b,
        Err(DecoderError::NoSolution) => return Ok(fail(FailureReason::NoInterpolant, diag)),
        Err(e) => return Err(e),
    };
    diag.interpolation_dim = basis.dim();
    let system = build_root_finding(&basis, params);
    let solution = system.solve(f);
    let nullity = solution.nullspace.len();
    diag.root_nullity = Some(nullity);
    diag.root_rank = Some(params.s() * params.k() - nullity);
    let Some(particular) = solution.particular.clone() else {
        return Ok(fail(FailureReason::Inconsistent, diag));
    };
    let verifier = Verifier::new(params, received);

    if opts.mode == DecodeMode::Unique {
        if nullity > 0 {
            return Ok(fail(FailureReason::RankDeficient, diag));
        }
        let coeffs = system.untwist(f, &particular);
        diag.candidates_examined = 1;
        let reach = verifier.reachability(&coeffs);
        if !region_unique(params, reach.gamma, reach.delta) {
            return Ok(fail(FailureReason::NoVerifiedCandidate, diag));
        }
        diag.failure_bound = Some(failure_bound(params, reach.gamma, n_r).value());
        diag.reachability.push(reach);
        return Ok(DecodeOutcome {
            status: DecodeStatus::Unique,
            messages: vec![MessageTuple::from_coefficients(params, &coeffs)?],
            diagnostics: diag,
        });
    }

    let accept = |coeffs: &[FieldElement]| {
        let reach = verifier.reachability(coeffs);
        region_list(params, reach.gamma, reach.delta).then_some(reach)
    };
    let order = BigUint::from(f.order());
    let set_size = order.pow(nullity as u32);
    let mut found: BTreeSet<Vec<FieldElement>> = BTreeSet::new();
    if set_size <= BigUint::from(opts.list_cap) {
        diag.list_route = Some(ListRoute::Enumeration);
        diag.candidates_examined = enumerate_affine(f, &particular, &solution.nullspace, |g| {
            let coeffs = system.untwist(f, g);
            if accept(&coeffs).is_some() {
                found.insert(coeffs);
            }
        });
    } else {
        let search = SubspaceSearch::new(params, received, &system, &particular, &solution.nullspace);
        let (width, cost) = search.plan();
        if cost > BigUint::from(opts.search_cap) {
            return Ok(fail(FailureReason::ListOverflow, diag));
        }
        diag.list_route = Some(ListRoute::SubspaceSearch);
        diag.candidates_examined = search.run(
            width,
            |reach| region_list(params, reach.gamma, reach.delta),
            |coeffs| {
                found.insert(coeffs);
            },
        );
    }
    if found.is_empty() {
        return Ok(fail(FailureReason::NoVerifiedCandidate, diag));
    }
    let mut messages = Vec::with_capacity(found.len());
    for coeffs in found {
        diag.reachability.push(verifier.reachability(&coeffs));
        messages.push(MessageTuple::from_coefficients(params, &coeffs)?);
    }
    Ok(DecodeOutcome {
        status: DecodeStatus::List,
        messages,
        diagnostics: diag,
    })
}

/// Visits `p + Σ_t c_t n_t` for every `c ∈ F^ν`; returns the count.
fn enumerate_affine<V: FnMut(&[FieldElement])>(
    f: &ExtField,
    particular: &[FieldElement],
    kernel: &[Vec<FieldElement>],
    mut visit: V,
) -> u64 {
    let order = f.order();
    let mut digits = vec![0u32; kernel.len()];
    let mut g = particular.to_vec();
    let mut count = 0;
    loop {
        visit(&g);
        count += 1;
        // Odometer step: raising digit t from c to c + 1 adds n_t scaled by
        // the difference; wrapping to 0 subtracts (order − 1) steps at once.
        let mut t = 0;
        loop {
            if t == kernel.len() {
                return count;
            }
            let old = f.element(digits[t]).expect("digit");
            digits[t] = (digits[t] + 1) % order;
            let new = f.element(digits[t]).expect("digit");
            let diff = f.sub(new, old);
            for (x, &n) in g.iter_mut().zip(&kernel[t]) {
                *x = f.add(*x, f.mul(diff, n));
            }
            if digits[t] != 0 {
                break;
            }
            t += 1;
        }
    }
}

/// Search of the affine solution set guided by the received spaces.
///
/// Over `F_q` the solution set is `c ↦ f_0 + Σ c_e b_e` with `m ν`
/// coordinates, and the error `u − f(ξ)` of a received vector is an affine
/// map `c ↦ h − L c` into `F_q^{s m}`.
///
/// Received vectors with `ξ = 0` never lie in a codeword space. Working
/// modulo their span `Z_i`, shot `i` reduces to `p_i ≤ n_i` rows with
/// independent `ξ`, and its intersection with a candidate codeword
/// corresponds to the rows whose error vanishes modulo `Z_i`. A candidate in
/// the list region meets the received spaces in at least `μ` dimensions, so
/// for any width `t ≤ μ` some `t`-dimensional choice of rows spread over the
/// shots has zero error. Trying every such choice and enumerating the
/// solutions of the resulting linear equations finds every verified
/// candidate.
struct SubspaceSearch<'a> {
    params: &'a CodeParams,
    fq: PrimeField,
    /// `m ν`.
    dim: usize,
    f0: Vec<FieldElement>,
    directions: Vec<Vec<FieldElement>>,
    shots: Vec<QuotientShot>,
    /// Smallest intersection dimension of a list-region candidate, `None`
    /// when no candidate can exist.
    min_intersection: Option<usize>,
}

struct QuotientShot {
    /// `dim Z_i`.
    pure: usize,
    /// Per row with nonzero `ξ`: `(h̄, L̄)` reduced modulo `Z_i`.
    rows: Vec<(Vec<u32>, Matrix<u32>)>,
}

impl QuotientShot {
    fn width(&self) -> usize {
        self.rows.first().map_or(0, |r| r.0.len())
    }
}

impl<'a> SubspaceSearch<'a> {
    fn new(
        params: &'a CodeParams,
        received: &[ReceivedShot],
        system: &RootFindingSystem,
        particular: &[FieldElement],
        kernel: &[Vec<FieldElement>],
    ) -> Self {
        let f = params.field();
        let fq = *f.base();
        let (s, k, m) = (params.s(), params.k(), f.m());
        let sm = s * m;
        let f0 = system.untwist(f, particular);
        let basis = crate::linalg::power_basis(f);
        let directions: Vec<Vec<FieldElement>> = kernel
            .iter()
            .flat_map(|n| {
                basis.iter().map(move |&e| {
                    let scaled: Vec<FieldElement> = n.iter().map(|&x| f.mul(e, x)).collect();
                    system.untwist(f, &scaled)
                })
            })
            .collect();
        let dim = directions.len();
        let eval = |coeffs: &[FieldElement], pw: &[FieldElement], l: usize| {
            (0..k).fold(FieldElement::ZERO, |acc, j| f.add(acc, f.mul(coeffs[l * k + j], pw[j])))
        };
        let shots = received
            .iter()
            .zip(params.representatives())
            .map(|(shot, &a)| {
                // Row layout: ξ coordinates, then h, then L column by column.
                let width = m + sm + sm * dim;
                let mut raw = Matrix::filled(0, width, 0u32);
                let mut row = vec![0u32; width];
                let mut digits = vec![0u32; m];
                for r in &shot.rows {
                    let mut pw = Vec::with_capacity(k);
                    op_powers(f, a, r.xi, k, &mut pw);
                    f.write_coeffs(r.xi, &mut row[..m]);
                    for l in 0..s {
                        f.write_coeffs(f.sub(r.u[l], eval(&f0, &pw, l)), &mut row[m + l * m..m + (l + 1) * m]);
                    }
                    for (c, dir) in directions.iter().enumerate() {
                        let col = m + sm + c * sm;
                        for l in 0..s {
                            f.write_coeffs(eval(dir, &pw, l), &mut digits);
                            row[col + l * m..col + (l + 1) * m].copy_from_slice(&digits);
                        }
                    }
                    raw.push_row(&row);
                }
                let pivots = rref(&fq, &mut raw);
                let lifted = pivots.iter().filter(|&&p| p < m).count();
                // Rows past `lifted` have ξ = 0 and therefore L = 0; their h
                // parts span Z_i, already in echelon form.
                let z_rows: Vec<Vec<u32>> = (lifted..pivots.len()).map(|r| raw.row(r)[m..m + sm].to_vec()).collect();
                let mut z = Matrix::from_rows(z_rows, sm).expect("width sm");
                let z_pivots = rref(&fq, &mut z);
                let keep: Vec<usize> = (0..sm).filter(|c| !z_pivots.contains(c)).collect();
                let reduce = |v: &mut [u32]| {
                    for (zr, &p) in z_pivots.iter().enumerate() {
                        let factor = v[p];
                        if factor != 0 {
                            for (x, &zv) in v.iter_mut().zip(z.row(zr)) {
                                *x = fq.sub(*x, fq.mul(factor, zv));
                            }
                        }
                    }
                };
                let rows = (0..lifted)
                    .map(|r| {
                        let data = raw.row(r);
                        let mut h = data[m..m + sm].to_vec();
                        reduce(&mut h);
                        let mut lin = Matrix::filled(keep.len(), dim, 0u32);
                        let mut col_vec = vec![0u32; sm];
                        for c in 0..dim {
                            col_vec.copy_from_slice(&data[m + sm + c * sm..m + sm + (c + 1) * sm]);
                            reduce(&mut col_vec);
                            for (e, &kc) in keep.iter().enumerate() {
                                lin.set(e, c, col_vec[kc]);
                            }
                        }
                        (keep.iter().map(|&kc| h[kc]).collect(), lin)
                    })
                    .collect();
                QuotientShot {
                    pure: z_pivots.len(),
                    rows,
                }
            })
            .collect();
        // The largest γ' with γ' + s(n_t − n_r + γ') < s(n_t − k + 1).
        let n_r: usize = received.iter().map(|r| r.rows.len()).sum();
        let budget = s * (n_r + 1).saturating_sub(k);
        let min_intersection = (budget > 0).then(|| n_r - (budget.div_ceil(s + 1) - 1));
        Self {
            params,
            fq,
            dim,
            f0,
            directions,
            shots,
            min_intersection,
        }
    }

    /// Ways to spread `width` rows over the shots.
    fn allocations(&self, width: usize) -> Vec<Vec<usize>> {
        fn go(caps: &[usize], i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if i == caps.len() {
                if left == 0 {
                    out.push(cur.clone());
                }
                return;
            }
            for w in 0..=caps[i].min(left) {
                cur[i] = w;
                go(caps, i + 1, left - w, cur, out);
            }
            cur[i] = 0;
        }
        let caps: Vec<usize> = self.shots.iter().map(|s| s.rows.len()).collect();
        let mut out = Vec::new();
        go(&caps, 0, width, &mut vec![0; caps.len()], &mut out);
        out
    }

    /// Estimated work for one width: number of row choices times the
    /// generic size of the remaining solution set.
    fn cost(&self, width: usize) -> BigUint {
        let q = self.fq.order() as u64;
        self.allocations(width)
            .iter()
            .map(|alloc| {
                let equations: usize = alloc.iter().zip(&self.shots).map(|(&w, s)| w * s.width()).sum();
                let choices: BigUint = alloc
                    .iter()
                    .zip(&self.shots)
                    .map(|(&w, s)| gaussian_binomial(s.rows.len(), w, q))
                    .product();
                choices * BigUint::from(q).pow(self.dim.saturating_sub(equations) as u32)
            })
            .sum()
    }

    /// The cheapest width and its estimated cost; width 0 when no candidate
    /// can exist.
    fn plan(&self) -> (usize, BigUint) {
        let Some(mu) = self.min_intersection else {
            return (0, BigUint::from(0u32));
        };
        (1..=mu)
            .map(|t| (t, self.cost(t)))
            .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("mu >= 1")
    }

    /// `(γ_i, δ_i)` per shot for the candidate `c`.
    fn reachability(&self, c: &[u32]) -> Reachability {
        let fq = &self.fq;
        let per_shot = self
            .shots
            .iter()
            .enumerate()
            .map(|(i, shot)| {
                let mut err = Matrix::filled(shot.rows.len(), shot.width(), 0u32);
                for (r, (h, lin)) in shot.rows.iter().enumerate() {
                    let lc = lin.mul_vec(fq, c);
                    for (x, (&hv, &lv)) in err.row_mut(r).iter_mut().zip(h.iter().zip(&lc)) {
                        *x = fq.sub(hv, lv);
                    }
                }
                let residual = rank(fq, &err);
                (shot.pure + residual, self.params.block_lengths()[i] + residual - shot.rows.len())
            })
            .collect();
        Reachability::from_per_shot(per_shot)
    }

    fn coefficients(&self, c: &[u32]) -> Vec<FieldElement> {
        let f = self.params.field();
        let mut out = self.f0.clone();
        for (&ci, dir) in c.iter().zip(&self.directions) {
            if ci == 0 {
                continue;
            }
            let scale = f.from_base(ci);
            for (x, &d) in out.iter_mut().zip(dir) {
                *x = f.add(*x, f.mul(scale, d));
            }
        }
        out
    }

    /// Calls `found` once with the message coefficients of every distinct
    /// candidate whose reachability passes `accept`; returns the number of
    /// candidates examined.
    fn run<A, V>(&self, width: usize, accept: A, mut found: V) -> u64
    where
        A: Fn(&Reachability) -> bool,
        V: FnMut(Vec<FieldElement>),
    {
        if width == 0 {
            return 0;
        }
        let q = self.fq.order();
        let ell = self.shots.len();
        let mut cache: Vec<Vec<Option<Vec<Matrix<u32>>>>> = (0..ell).map(|_| vec![None; width + 1]).collect();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut examined = 0;
        for alloc in self.allocations(width) {
            for (i, &w) in alloc.iter().enumerate() {
                if cache[i][w].is_none() {
                    let mut list = Vec::new();
                    for_each_rref_basis(q, self.shots[i].rows.len(), w, |b| list.push(b.clone()));
                    cache[i][w] = Some(list);
                }
            }
            let lists: Vec<&[Matrix<u32>]> = alloc
                .iter()
                .enumerate()
                .map(|(i, &w)| cache[i][w].as_deref().expect("filled"))
                .collect();
            let mut chosen = vec![0usize; ell];
            'product: loop {
                let (a, b) = self.constraints(&lists, &chosen);
                let sol = solve_linear(&self.fq, &a, &b);
                if let Some(p) = &sol.particular {
                    for digits in crate::linalg::all_vectors(q, sol.nullspace.len()) {
                        let mut c = p.clone();
                        for (&d, n) in digits.iter().zip(&sol.nullspace) {
                            for (x, &v) in c.iter_mut().zip(n) {
                                *x = self.fq.add(*x, self.fq.mul(d, v));
                            }
                        }
                        examined += 1;
                        if !seen.contains(&c) {
                            if accept(&self.reachability(&c)) {
                                found(self.coefficients(&c));
                            }
                            seen.insert(c);
                        }
                    }
                }
                for i in 0..ell {
                    chosen[i] += 1;
                    if chosen[i] < lists[i].len() {
                        continue 'product;
                    }
                    chosen[i] = 0;
                }
                break;
            }
        }
        examined
    }

    /// Zero-error equations `L̄_w c = h̄_w` for every chosen row
    /// combination `w`.
    fn constraints(&self, lists: &[&[Matrix<u32>]], chosen: &[usize]) -> (Matrix<u32>, Vec<u32>) {
        let fq = &self.fq;
        let mut a = Matrix::filled(0, self.dim, 0u32);
        let mut b = Vec::new();
        let mut row = vec![0u32; self.dim];
        for (i, list) in lists.iter().enumerate() {
            let shot = &self.shots[i];
            for coeffs in list[chosen[i]].row_iter() {
                for e in 0..shot.width() {
                    row.iter_mut().for_each(|x| *x = 0);
                    let mut rhs = 0;
                    for (&c, (h, lin)) in coeffs.iter().zip(&shot.rows) {
                        if c == 0 {
                            continue;
                        }
                        rhs = fq.add(rhs, fq.mul(c, h[e]));
                        for (x, &v) in row.iter_mut().zip(lin.row(e)) {
                            *x = fq.add(*x, fq.mul(c, v));
                        }
                    }
                    a.push_row(&row);
                    b.push(rhs);
                }
            }
        }
        (a, b)
    }
}

/// Interpolation decoding of an `s × n_t` received ILRS matrix.
pub fn decode_ilrs(
    params: &CodeParams,
    r: &Matrix<FieldElement>,
    opts: &DecoderOptions,
) -> Result<DecodeOutcome, DecoderError> {
    if r.rows() != params.s() || r.cols() != params.n_t() {
        return Err(DecoderError::Shape("received matrix must be s x n_t"));
    }
    let mut col = 0;
    let received: Vec<ReceivedShot> = params
        .beta()
        .iter()
        .map(|block| {
            let rows = block
                .iter()
                .map(|&b| {
                    let row = ReceivedRow {
                        xi: b,
                        u: (0..params.s()).map(|l| r.get(l, col)).collect(),
                    };
                    col += 1;
                    row
                })
                .collect();
            ReceivedShot { rows }
        })
        .collect();
    decode_received(params, &received, opts)
}

/// Decodes a received word in skew-metric coordinates by undoing the
/// column scaling and decoding as ILRS.
pub fn decode_isrs(
    params: &CodeParams,
    r: &Matrix<FieldElement>,
    opts: &DecoderOptions,
) -> Result<DecodeOutcome, DecoderError> {
    decode_ilrs(params, &isrs_inverse_transform(params, r)?, opts)
}
