//! Finite-string tools for studying non-local games through compression
//! estimates of Kolmogorov complexity, with exact oracles for game values
//! and local-polytope questions.

pub mod complexity;
pub mod experiments;
pub mod games;
pub mod oracles;
pub mod strings;
