//! Numerical checks of the matrix perturbation bounds and the probability
//! inequalities behind the estimator's error analysis.
//!
//! * [`perturbation`]: eigenvalue, eigenvector and eigenprojection bounds for
//!   symmetric pairs `T`, `T̃ = T + Δ`.
//! * [`suite`]: randomized instance suites over those bounds.
//! * [`linearization`]: the MLE linearization `ĝ = γ + J_n^{-1/2}(W_n + r_n)`.
//! * [`design`]: the information matrix `A_n` against its expectation `B_n`.
//! * [`maximal`]: the weighted chi-square maximal inequality.

pub mod design;
pub mod linearization;
pub mod maximal;
pub mod perturbation;
pub mod suite;
