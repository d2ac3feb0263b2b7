//! Exact-arithmetic workbench for H-twisted Lie algebras over a point.
//!
//! Structure constants, twists, and all derived data live in ℚ; every residual
//! is computed exactly, so "the axiom holds" always means "the residual is the
//! zero vector", never "small". The crate covers the twisted bracket calculus
//! (connection, exterior covariant derivative D, twist operator H̃, trace),
//! naïve cohomology tables, two-term L∞ algebras and their morphisms, graded
//! symplectic (degree −3 and −2) realizations with derived brackets, Courant
//! lifts, and the regular Q-model cohomology.

#[cfg(test)]
pub(crate) mod fixtures;
pub mod graded;
pub mod l2;
pub mod linalg;
pub mod naive;
pub mod pq3;
pub mod regular;
pub mod report;
pub mod twisted;

pub use graded::{GPoly, GVectorField, GeneratorSpec, GradedAlgebra, PoissonSpec};
pub use l2::{L2Algebra, L2Morphism};
pub use linalg::{RMatrix, Rational};
pub use naive::{CochainBasis, NaiveTable};
pub use regular::RegularRealization;
pub use report::{ResidualItem, ResidualReport};
pub use twisted::{MultiForm, TwistedLieAlgebra};
