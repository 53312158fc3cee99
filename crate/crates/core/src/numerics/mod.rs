//! Shared numerical kernels: quadrature, ODE stepping, root finding,
//! limit extrapolation.

pub mod extrap;
pub mod ode;
pub mod quad;
pub mod roots;
