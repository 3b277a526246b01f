//! Free-fermion eight-vertex model: theta functions, gauge-transformed
//! algebraic Bethe ansatz, scalar products and the cascade residuals.

pub type C64 = num_complex::Complex64;

pub mod bethe;
pub mod cascade;
pub mod gauge;
pub mod harness;
pub mod linalg;
pub mod sampling;
pub mod scalar;
pub mod theta;
pub mod vertex;
