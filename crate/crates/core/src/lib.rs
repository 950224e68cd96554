//! Linear complementarity problems on the monotone extended second order cone
//!
//! ```text
//!     L = { (x, u) in R^p x R^q : x_1 >= x_2 >= ... >= x_p >= ||u|| }
//! ```
//!
//! solved by rewriting them as a mixed complementarity problem on the
//! nonnegative orthant and applying a Fischer-Burmeister semismooth Newton
//! method. Also contains a closed-form conic portfolio model whose KKT
//! conditions are a complementarity problem on the same cone.

pub mod cli;
pub mod cone;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod lcp;
pub mod linalg;
pub mod portfolio;
pub mod solver;

pub use cone::{classify_pair, CaseTag, ComplementarityCertificate, ConeDims, ConePoint};
pub use error::{Error, Result};
pub use lcp::{LcpInstance, ReformPoint};
pub use solver::{solve, LcpSolution, NewtonConfig, SolveOptions, SolveStatus};
