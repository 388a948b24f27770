//! Numerical tests of holomorphic extendibility on circle domains.
//!
//! Given a continuous function `f` on the boundary of a domain bounded by
//! finitely many disjoint circles, the crate decides whether `f` is the
//! boundary value of a function holomorphic inside, and when it is not it
//! builds a holomorphic `g` for which `f + g` has negative change of argument
//! along the boundary. Such a `g` cannot exist for extendable `f`, by the
//! argument principle, so the pair `(f, g)` certifies non-extendibility.

pub mod argument;
pub mod boundary;
pub mod expr;
pub mod extend;
pub mod geometry;
pub mod harmonic;
pub mod io;

pub use num_complex::Complex64;
