//! Hilbert class polynomials of imaginary quadratic discriminants, computed
//! from complex floating-point approximations of `j` at the CM points.

pub mod bigfloat;
pub mod classgroup;
pub mod engine;
pub mod heightbound;
pub mod modeval;
pub mod polyops;
