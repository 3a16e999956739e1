//! Laplacian spectra of explicitly solvable domains, Riesz means and the
//! semiclassical inequalities around them.

// negated comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};

pub mod convexgeom;
pub mod experiments;
pub mod grid;
pub mod optimize;
pub mod quadrature;
pub mod riesz;
pub mod semiclassics;
pub mod spectra;
pub mod verify;

pub use spectra::{BoundarySpec, Domain, EigenvalueList};

/// Boundary condition on a face or a whole boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bc {
    Dirichlet,
    Neumann,
}

impl Bc {
    pub fn tag(self) -> &'static str {
        match self {
            Bc::Dirichlet => "D",
            Bc::Neumann => "N",
        }
    }

    pub fn parse(s: &str) -> Option<Bc> {
        match s.trim() {
            "D" | "d" | "dirichlet" | "Dirichlet" => Some(Bc::Dirichlet),
            "N" | "n" | "neumann" | "Neumann" => Some(Bc::Neumann),
            _ => None,
        }
    }
}

impl std::fmt::Display for Bc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mixed product boundary conditions need a product domain")]
    MixedOnNonProduct,
    #[error("eigenvalue budget exceeded: about {estimate} entries requested, budget {budget}")]
    BudgetExceeded { estimate: u64, budget: u64 },
    #[error("bessel zero search failed for order {order}, index {k}: {reason}")]
    Bracketing { order: f64, k: usize, reason: String },
    #[error("quadrature did not converge: estimate {value}, error {error}")]
    Quadrature { value: f64, error: f64 },
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("optimizer did not converge after {iterations} iterations (best {best})")]
    Optimizer { iterations: usize, best: f64 },
    #[error("collapse hypothesis violated at step {step}: r_in*sqrt(lambda) = {value}")]
    Hypothesis { step: usize, value: f64 },
    #[error("premise fails: {what} (ratio {value})")]
    Premise { what: String, value: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
