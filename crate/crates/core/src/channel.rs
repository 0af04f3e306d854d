//! The multishot operator channel.
//!
//! Shot `i` keeps a uniform `(n_i − δ_i)`-dimensional subspace of `V_i` and
//! adds a uniform `γ_i`-dimensional error space `E_i` with `E_i ∩ V_i = 0`.
//! [`AllocationSampler`] splits prescribed totals `(γ, δ)` across shots with
//! probability proportional to the number of (kept space, error space)
//! pairs each split admits, so that together with [`transmit`] the whole
//! realization is uniform.

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::Rng;
use thiserror::Error;

use crate::code::{CodeParams, SubspaceTuple};
use crate::galois::{FieldElement, PrimeField};
use crate::linalg::{
    gaussian_binomial, random_disjoint_subspace, random_subspace_of, rowspace, subspace_intersection_dim,
    subspace_sum_dim, LinalgError, Matrix,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("channel spec invalid: {0}")]
    SpecInvalid(String),
    #[error("no allocation of gamma = {gamma} insertions and delta = {delta} deletions fits the code")]
    Infeasible { gamma: usize, delta: usize },
    #[error("subspace tuples have different shapes")]
    ShapeMismatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Per-shot insertions `γ_i` and deletions `δ_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelSpec {
    pub insertions: Vec<usize>,
    pub deletions: Vec<usize>,
}

impl ChannelSpec {
    pub fn identity(ell: usize) -> Self {
        Self {
            insertions: vec![0; ell],
            deletions: vec![0; ell],
        }
    }

    pub fn gamma(&self) -> usize {
        self.insertions.iter().sum()
    }

    pub fn delta(&self) -> usize {
        self.deletions.iter().sum()
    }

    pub fn validate(&self, params: &CodeParams) -> Result<(), ChannelError> {
        let ell = params.ell();
        if self.insertions.len() != ell || self.deletions.len() != ell {
            return Err(ChannelError::SpecInvalid(format!("expected {ell} shots")));
        }
        for i in 0..ell {
            let n = params.block_lengths()[i];
            if self.deletions[i] > n {
                return Err(ChannelError::SpecInvalid(format!(
                    "shot {i}: {} deletions exceed n_i = {n}",
                    self.deletions[i]
                )));
            }
            let room = params.ambient_dim(i) - n;
            if self.insertions[i] > room {
                return Err(ChannelError::SpecInvalid(format!(
                    "shot {i}: {} insertions exceed N_i - n_i = {room}",
                    self.insertions[i]
                )));
            }
        }
        Ok(())
    }
}

/// Applies the operator channel to every shot of `v`.
pub fn transmit<R: Rng + ?Sized>(
    params: &CodeParams,
    v: &SubspaceTuple,
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<SubspaceTuple, ChannelError> {
    spec.validate(params)?;
    check_shape(params, v)?;
    let fq = params.field().base();
    let mut shots = Vec::with_capacity(params.ell());
    for (i, vi) in v.shots().iter().enumerate() {
        if vi.dim() != params.block_lengths()[i] {
            return Err(ChannelError::SpecInvalid(format!("shot {i} is not a codeword shot")));
        }
        let kept = random_subspace_of(fq, vi, vi.dim() - spec.deletions[i], rng)?;
        let err = random_disjoint_subspace(fq, vi, spec.insertions[i], rng)?;
        let ui = kept.sum(fq, &err)?;
        debug_assert_eq!(ui.dim(), vi.dim() + spec.insertions[i] - spec.deletions[i]);
        shots.push(ui);
    }
    Ok(SubspaceTuple::new(shots))
}

fn check_shape(params: &CodeParams, u: &SubspaceTuple) -> Result<(), ChannelError> {
    if u.shots().len() != params.ell()
        || u.shots().iter().enumerate().any(|(i, s)| s.ambient_dim() != params.ambient_dim(i))
    {
        return Err(ChannelError::ShapeMismatch);
    }
    Ok(())
}

/// Number of channel realizations of one shot with `γ_i` insertions and
/// `δ_i` deletions: `[n choose δ]_q · q^{n γ} · [N − n choose γ]_q`.
pub fn shot_realizations(q: u64, n: usize, ambient: usize, gamma: usize, delta: usize) -> BigUint {
    if delta > n || gamma + n > ambient {
        return BigUint::zero();
    }
    gaussian_binomial(n, delta, q) * BigUint::from(q).pow((n * gamma) as u32) * gaussian_binomial(ambient - n, gamma, q)
}

/// Exact sampler for per-shot allocations of fixed totals `(γ, δ)`.
///
/// `suffix[i][g][d]` counts the realizations of shots `i..ℓ` with totals
/// `(g, d)`; sampling walks the shots front to back.
#[derive(Debug, Clone)]
pub struct AllocationSampler {
    q: u64,
    shots: Vec<(usize, usize)>,
    gamma: usize,
    delta: usize,
    suffix: Vec<Vec<Vec<BigUint>>>,
}

impl AllocationSampler {
    /// `shots` holds `(n_i, N_i)` for every shot.
    pub fn new(q: u64, shots: Vec<(usize, usize)>, gamma: usize, delta: usize) -> Result<Self, ChannelError> {
        let ell = shots.len();
        let mut suffix = vec![vec![vec![BigUint::zero(); delta + 1]; gamma + 1]; ell + 1];
        suffix[ell][0][0] = BigUint::from(1u32);
        for i in (0..ell).rev() {
            let (n, big_n) = shots[i];
            for g in 0..=gamma {
                for d in 0..=delta {
                    let mut total = BigUint::zero();
                    for gi in 0..=g.min(big_n - n) {
                        for di in 0..=d.min(n) {
                            let rest = &suffix[i + 1][g - gi][d - di];
                            if rest.is_zero() {
                                continue;
                            }
                            total += shot_realizations(q, n, big_n, gi, di) * rest;
                        }
                    }
                    suffix[i][g][d] = total;
                }
            }
        }
        if suffix[0][gamma][delta].is_zero() {
            return Err(ChannelError::Infeasible { gamma, delta });
        }
        Ok(Self {
            q,
            shots,
            gamma,
            delta,
            suffix,
        })
    }

    pub fn for_code(params: &CodeParams, gamma: usize, delta: usize) -> Result<Self, ChannelError> {
        let shots = params
            .block_lengths()
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, params.ambient_dim(i)))
            .collect();
        Self::new(params.field().q() as u64, shots, gamma, delta)
    }

    /// Total number of channel realizations with these totals.
    pub fn total(&self) -> &BigUint {
        &self.suffix[0][self.gamma][self.delta]
    }

    /// Number of realizations compatible with one allocation.
    pub fn weight(&self, spec: &ChannelSpec) -> BigUint {
        self.shots
            .iter()
            .enumerate()
            .map(|(i, &(n, big_n))| shot_realizations(self.q, n, big_n, spec.insertions[i], spec.deletions[i]))
            .product()
    }

    /// Every allocation with nonzero weight, with its weight.
    pub fn allocations(&self) -> Vec<(ChannelSpec, BigUint)> {
        let mut out = Vec::new();
        let mut cur = ChannelSpec::identity(self.shots.len());
        self.collect(0, self.gamma, self.delta, &mut cur, &mut out);
        out
    }

    fn collect(&self, i: usize, g: usize, d: usize, cur: &mut ChannelSpec, out: &mut Vec<(ChannelSpec, BigUint)>) {
        if i == self.shots.len() {
            if g == 0 && d == 0 {
                out.push((cur.clone(), self.weight(cur)));
            }
            return;
        }
        let (n, big_n) = self.shots[i];
        for gi in 0..=g.min(big_n - n) {
            for di in 0..=d.min(n) {
                if self.suffix[i + 1][g - gi][d - di].is_zero() {
                    continue;
                }
                cur.insertions[i] = gi;
                cur.deletions[i] = di;
                self.collect(i + 1, g - gi, d - di, cur, out);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSpec {
        let ell = self.shots.len();
        let mut spec = ChannelSpec::identity(ell);
        let (mut g, mut d) = (self.gamma, self.delta);
        for i in 0..ell {
            let (n, big_n) = self.shots[i];
            let mut r = rng.gen_biguint_below(&self.suffix[i][g][d]);
            'pick: for gi in 0..=g.min(big_n - n) {
                for di in 0..=d.min(n) {
                    let rest = &self.suffix[i + 1][g - gi][d - di];
                    if rest.is_zero() {
                        continue;
                    }
                    let w = shot_realizations(self.q, n, big_n, gi, di) * rest;
                    if r < w {
                        spec.insertions[i] = gi;
                        spec.deletions[i] = di;
                        break 'pick;
                    }
                    r -= w;
                }
            }
            g -= spec.insertions[i];
            d -= spec.deletions[i];
        }
        debug_assert!(g == 0 && d == 0);
        spec
    }
}

/// Draws a per-shot allocation of `(γ, δ)` weighted by realization counts.
pub fn sample_channel_spec<R: Rng + ?Sized>(
    params: &CodeParams,
    gamma: usize,
    delta: usize,
    rng: &mut R,
) -> Result<ChannelSpec, ChannelError> {
    Ok(AllocationSampler::for_code(params, gamma, delta)?.sample(rng))
}

/// `Σ_i dim(U_i + V_i) − dim(U_i ∩ V_i)`.
pub fn sum_subspace_distance(fq: &PrimeField, u: &SubspaceTuple, v: &SubspaceTuple) -> Result<usize, ChannelError> {
    if u.shots().len() != v.shots().len() {
        return Err(ChannelError::ShapeMismatch);
    }
    let mut total = 0;
    for (a, b) in u.shots().iter().zip(v.shots()) {
        let sum = subspace_sum_dim(fq, a, b).map_err(|_| ChannelError::ShapeMismatch)?;
        total += sum - subspace_intersection_dim(fq, a, b)?;
    }
    Ok(total)
}

/// Per-shot insertions and deletions that take `V` to `U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachability {
    /// `(γ_i, δ_i)` for every shot.
    pub per_shot: Vec<(usize, usize)>,
    pub gamma: usize,
    pub delta: usize,
}

impl Reachability {
    pub fn from_per_shot(per_shot: Vec<(usize, usize)>) -> Self {
        let gamma = per_shot.iter().map(|p| p.0).sum();
        let delta = per_shot.iter().map(|p| p.1).sum();
        Self { per_shot, gamma, delta }
    }
}

/// The channel parameters under which `U` is reachable from `V`:
/// `δ_i = dim V_i − dim(U_i ∩ V_i)`, `γ_i = dim U_i − dim(U_i ∩ V_i)`.
///
/// Because every inserted space must meet `V_i` trivially, the kept space is
/// forced to be `U_i ∩ V_i`, so these are the only values for which
/// `U` is reachable.
pub fn min_gamma_delta(fq: &PrimeField, u: &SubspaceTuple, v: &SubspaceTuple) -> Result<Reachability, ChannelError> {
    if u.shots().len() != v.shots().len() {
        return Err(ChannelError::ShapeMismatch);
    }
    let mut per_shot = Vec::with_capacity(u.shots().len());
    for (a, b) in u.shots().iter().zip(v.shots()) {
        let inter = subspace_intersection_dim(fq, a, b).map_err(|_| ChannelError::ShapeMismatch)?;
        per_shot.push((a.dim() - inter, b.dim() - inter));
    }
    Ok(Reachability::from_per_shot(per_shot))
}

/// Whether `U` is `(γ, δ)`-reachable from `V`.
pub fn is_reachable(
    fq: &PrimeField,
    u: &SubspaceTuple,
    v: &SubspaceTuple,
    gamma: usize,
    delta: usize,
) -> Result<bool, ChannelError> {
    let r = min_gamma_delta(fq, u, v)?;
    Ok(r.gamma == gamma && r.delta == delta)
}

/// A received basis vector `(ξ, u^(1), ..., u^(s))` in `F_{q^m}` coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedRow {
    pub xi: FieldElement,
    pub u: Vec<FieldElement>,
}

/// The basis of one received shot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReceivedShot {
    pub rows: Vec<ReceivedRow>,
}

/// Converts every RREF basis row of `U_i` to `(ξ, u)`: the first `n_i`
/// coordinates give `ξ = Σ c_j β_j^(i)`, block `l` of `m` coordinates gives
/// `u^(l)` in the expansion basis.
pub fn pull_back(params: &CodeParams, u: &SubspaceTuple) -> Result<Vec<ReceivedShot>, ChannelError> {
    check_shape(params, u)?;
    let f = params.field();
    let m = f.m();
    Ok(u.shots()
        .iter()
        .enumerate()
        .map(|(i, shot)| {
            let n = params.block_lengths()[i];
            let rows = shot
                .basis()
                .row_iter()
                .map(|row| ReceivedRow {
                    xi: params.xi_from_coords(i, &row[..n]),
                    u: (0..params.s())
                        .map(|l| f.from_coeffs(&row[n + l * m..n + (l + 1) * m]).expect("residues"))
                        .collect(),
                })
                .collect();
            ReceivedShot { rows }
        })
        .collect())
}

/// Inverse of [`pull_back`]: expands `(ξ, u)` rows back to `F_q` and takes
/// row spaces.
pub fn push_forward(params: &CodeParams, received: &[ReceivedShot]) -> Result<SubspaceTuple, ChannelError> {
    if received.len() != params.ell() {
        return Err(ChannelError::ShapeMismatch);
    }
    let f = params.field();
    let fq = *f.base();
    let m = f.m();
    let mut shots = Vec::with_capacity(received.len());
    for (i, shot) in received.iter().enumerate() {
        let n = params.block_lengths()[i];
        let mut mat = Matrix::filled(0, params.ambient_dim(i), 0u32);
        for r in &shot.rows {
            if r.u.len() != params.s() {
                return Err(ChannelError::ShapeMismatch);
            }
            let mut row = params.coords_of_xi(i, r.xi).ok_or(ChannelError::ShapeMismatch)?;
            for &ul in &r.u {
                row.extend(f.coeffs(ul));
            }
            debug_assert_eq!(row.len(), n + params.s() * m);
            mat.push_row(&row);
        }
        shots.push(rowspace(&fq, &mat));
    }
    Ok(SubspaceTuple::new(shots))
}
