//! Closed-form Mittag-Leffler solutions of fractional Cauchy problems
//! `sum_k lambda_k D^{nu k} F = g` with Dzherbashyan-Caputo derivatives,
//! independent numerical oracles for them, random-time subordination, and
//! finite-velocity random motions whose characteristic functions solve such
//! problems.

pub mod error;
pub mod special_functions;
pub mod quadrature;
pub mod char_poly;
pub mod cauchy_solver;
pub mod laplace_oracle;
pub mod montecarlo;
pub mod subordination;
pub mod random_motion;
pub mod schema;

pub use error::{Error, Result};
pub use num_complex::Complex64;
