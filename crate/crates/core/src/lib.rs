//! A desk-scale lab for measure-theoretic experiments on finite first-order
//! structures.
//!
//! Everything here is exact and finite: structures are explicit relation
//! tables on `{0, .., n-1}`, formula types are trace rows of a bit matrix,
//! and Keisler measures are finitely supported weight vectors over those
//! traces. On top of that base the crate computes dependence ranks and VC
//! dimension, Morley products evaluated through realization plugins (order
//! cuts, generic graph vertices), Glivenko-Cantelli sampling curves, and
//! "frequency interpretation" certificates, all with rational arithmetic so
//! test oracles can compare values for equality instead of within tolerances.
//!
//! The numeric side is generic over [`weight::Weight`], a small scalar trait
//! with implementations for [`Rat`] (arbitrary-precision rationals, the
//! default used by every shipped pipeline) and for `f64`/`f32` when a float
//! lane is enough. Concrete aliases for the rational instantiations live at
//! the crate root.

pub mod dependence;
pub mod empirics;
pub mod logic;
pub mod measure;
pub mod morley;
pub mod scenario;
pub mod typespace;
pub mod weight;

/// Exact scalar used by all shipped pipelines.
pub type Rat = num_rational::BigRational;

/// Keisler measure with exact rational weights.
pub type Measure = measure::KeislerMeasure<Rat>;

/// Dependence report over exact rational masses.
pub type DkReport = dependence::DkReport<Rat>;

/// Morley product evaluation with exact rational values.
pub type ProductEvaluation = morley::ProductEvaluation<Rat>;

/// Glivenko-Cantelli run with exact rational deviations.
pub type GcRun = empirics::GcRun<Rat>;

/// Frequency certificate over exact rational masses.
pub type FimCertificate = empirics::FimCertificate<Rat>;

/// Builds the exact rational `p / q`. Panics if `q == 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    use num_bigint::BigInt;
    Rat::new(BigInt::from(p), BigInt::from(q))
}
