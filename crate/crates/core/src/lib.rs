//! Limiting covariance of traces of polynomials in independent Wigner
//! matrices and deterministic matrices, with Monte Carlo and exact
//! finite-N checks.

pub mod annulus;
pub mod covariance;
pub mod ensembles;
pub mod graph;
pub mod error;
pub mod linalg;
pub mod monte_carlo;
pub mod state;
pub mod words;

pub use covariance::{first_order, phi2, phi2_poly, ParamsMap, Phi2Terms, WignerParams};
pub use error::{Error, Result};
pub use linalg::C64;
pub use state::{DetFamily, FamilySpec, LimitState};
pub use words::{DetLetter, DetWord, Monomial, Polynomial, WignerId};
