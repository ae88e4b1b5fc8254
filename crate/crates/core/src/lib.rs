//! Numerical toolkit for logarithmic derivatives `g_n(z) = sum 1/(z - z_k)`
//! of polynomials whose zeros lie on the unit circle.

pub mod certificate;
pub mod dd;
pub mod explorer;
pub mod extremal;
pub mod levelset;
pub mod numeric;
pub mod poles;
pub mod poly;
pub mod polynorm;
pub mod quadrature;

pub use poles::{poisson_kernel, ComplexPoint, PoleError, PoleSet, RationalLevelFunction};
