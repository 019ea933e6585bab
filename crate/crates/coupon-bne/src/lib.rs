//! Bayes-Nash equilibria of coupon games between an advertiser (A) and a
//! privacy-conscious consumer (B).
//!
//! B has a private type, sends a (possibly randomized) binary signal and
//! redeems a coupon; A responds to the signal with a report, a guess or an
//! accusation. The solvers return closed-form equilibria and the
//! [`oracle`] checks them numerically.
//!
//! Math is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the common `f64` instantiations.

pub mod cli;
pub mod error;
pub mod game;
pub mod identity_game;
pub mod model;
pub mod optout_game;
pub mod oracle;
pub mod privacy;
pub mod scalar;
pub mod scoring;
pub mod scoring_game;

pub use error::{BneError, Result};
pub use game::{solve, AStrategy, EquilibriumReport, GameSpec, Posteriors, Profile, Utilities};
pub use identity_game::{solve_continuous_threshold, solve_identity_bne, IdentityBne, IdentityCase, ValuationDistribution};
pub use model::{bayes_posteriors, BStrategy, CouponValues, GuessPolicy, OptOutPolicy, PaymentMatrix, Prior, ScoringReportPair};
pub use optout_game::{classify_case, solve_optout_bne, OptOutBne, OptOutCase};
pub use oracle::{best_response_gap, enumerate_equilibria, utility_surface, EquilibriumComponent, GapReport, SurfaceRow};

pub use privacy::{dp_epsilon, solve_privacy_aware, x_game, PrivacyAwareParams};
pub use scalar::{Extended, Scalar};
pub use scoring::{make_logarithmic, make_quadratic, make_spherical, ScoringRule};
pub use scoring_game::{solve_scoring_bne, solve_scoring_bne_asymmetric, ScoringBne, ScoringRegime};

pub type Prior64 = Prior<f64>;
pub type Prior32 = Prior<f32>;
pub type BStrategy64 = BStrategy<f64>;
pub type BStrategy32 = BStrategy<f32>;
pub type Extended64 = Extended<f64>;
pub type ScoringRule64 = ScoringRule<f64>;
pub type ScoringRule32 = ScoringRule<f32>;
