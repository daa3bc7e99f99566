//! Stochastic precedence P(X₁ ≤ X₂) and tie mass P(X₁ = X₂) for pairs
//! joined by a copula, with L_γ / B_γ classification and target-based
//! prospect ranking.
//!
//! ```
//! use sp_copula::{copula::CopulaSpec, precedence::eta_exact};
//!
//! let c = CopulaSpec::shuffle(0.3).unwrap();
//! let (eta, xi) = eta_exact(&c, None, None).unwrap();
//! assert_eq!((eta, xi), (0.3, 0.0));
//! ```

pub mod copula;
pub mod dist;
pub mod oracle;
pub mod precedence;
pub mod quad;
pub mod rng;
pub mod special;
pub mod tba;

pub use copula::{Copula, CopulaSample, CopulaSpec, Component};
pub use dist::{Distribution, OrderCheckResult, Relation};
pub use precedence::{ClassVerdict, Method, PrecedenceReport};
