//! Lifted interleaved linearized Reed–Solomon (LILRS) codes for multishot
//! network coding.
//!
//! The crate covers the whole pipeline: field and skew-polynomial
//! arithmetic ([`galois`], [`skewpoly`]), exact linear algebra and
//! subspaces ([`linalg`]), code construction and lifting ([`code`]), the
//! multishot operator channel ([`channel`]), the interpolation-based
//! list / probabilistic-unique decoder ([`decoder`]) and seeded Monte
//! Carlo campaigns ([`harness`]).

pub mod galois;
pub mod linalg;
pub mod skewpoly;
pub mod code;
pub mod channel;
pub mod decoder;
pub mod harness;

pub use galois::{ExtField, Field, FieldElement, PrimeField};
pub use skewpoly::{MultivariateSkewPolynomial, SkewPolynomial};
