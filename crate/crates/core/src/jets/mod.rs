//! Truncated power series, Laurent series and polynomial matrices.

mod coeff;
mod jet;
pub mod json;
mod laurent;
mod matrix;
mod polymatrix;

pub use coeff::{
    fmt_float, parse_float, parse_rational, qi_to_c64, rational_nth_root, rationalize, Coeff, Qi,
    FLOAT_BITS,
};
pub use jet::{compose_tuple, degree, functional_inverse, identity_tuple, Composer, Exps, Jet};
pub use laurent::LaurentJet;
pub use matrix::{poly_deflate, poly_eval, qmat, solve_sylvester, Mat};
pub use polymatrix::PolyMatrix;

pub use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JetError {
    #[error("variable count mismatch: {0} vs {1}")]
    VarMismatch(usize, usize),
    #[error("expected {expected} inner series, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("inner series {0} has a nonzero constant term")]
    NonzeroConstant(usize),
    #[error("empty tuple")]
    Empty,
    #[error("linear part is singular")]
    SingularLinearPart,
    #[error("series is not divisible by the requested monomial")]
    NotDivisible,
    #[error("truncation exhausted: need order {needed}, have {available}")]
    OrderExhausted { needed: u32, available: u32 },
    #[error("series is not a unit")]
    NotUnit,
    #[error("no root in the coefficient field")]
    NoRoot,
    #[error("parse error: {0}")]
    Parse(String),
}
