//! Classification of hyperbolic vector fields on the circle and the
//! geometry of the Lorentzian surfaces they model.
//!
//! A smooth periodic profile `f` with simple zeros induces a vector field
//! `X_{f,P} = f ∂_t` on the circle of circumference `P`. This crate computes
//! the full classification data of such fields — zero count, the multiplier
//! at each zero, and the regularized circle integral `μ` of `1/f` — decides
//! when two fields are diffeomorphic (optionally up to scale, reversal, and
//! finite covers), constructs explicit conjugating diffeomorphisms, and
//! verifies the local geometry of the associated ribbon metrics
//! `f(y)dx² + 2dxdy`: saddle extensions at simple zeros, the reflection
//! group combinatorics of the universal extension, geodesics, Jacobi fields,
//! and lightlike incompleteness.
//!
//! With the default `parallel` feature, corpus-level operations in [`batch`]
//! fan out over rayon; disable default features for a fully sequential
//! build.

pub mod batch;
pub mod circlefield;
pub mod conjugacy;
pub mod expr;
pub mod funcspace;
pub mod geodesics;
pub mod numerics;
pub mod surface;



pub use expr::{parse_expr, DomainError, Expr, ParseError};
pub use funcspace::{PeriodicFunction, ZeroData};


