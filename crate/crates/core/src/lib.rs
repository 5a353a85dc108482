//! Formal normal forms and parabolic stable manifolds for local holomorphic dynamics.

pub mod classify;
pub mod dynamics;
pub mod infgen;
pub mod jets;
pub mod manifold;
pub mod rspipeline;
pub mod transforms;
pub mod turrittin;

pub use jets::{Coeff, Complex64, Jet, JetError, LaurentJet, Mat, PolyMatrix, Qi};
