//! Exact computational toolkit for orthogonal modular varieties of
//! signature (2, n): quadratic-form invariants, the projective / tube /
//! bounded models of the symmetric domain, cusp and parabolic data,
//! rational polyhedral fans and their toric charts, core decompositions of
//! self-adjoint cones, a formal characteristic-class engine, leading terms
//! of dimension formulas, and ramification data of finite-order isometries.

pub mod error;
pub mod dd;
pub mod chern;
pub mod corecone;
pub mod cycles;
pub mod dimform;
pub mod domains;
pub mod fan;
pub mod linalg;
pub mod parab;
pub mod qform;
pub mod rat;
pub mod scalar;

pub use error::{Error, Result};
