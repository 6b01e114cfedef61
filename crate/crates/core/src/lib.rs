//! Finite-dimensional Cartan triples `(M, N, D)` of matrix *-algebras and their
//! inverse-semigroup extensions `P -> G -> S`.

pub mod bimod;
pub mod crossed;
pub mod isemigroup;
pub mod linalg;
pub mod repmod;
pub mod triple;
