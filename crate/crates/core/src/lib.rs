//! Finite-dimensional quantum contextuality toolkit.
//!
//! The crate models contexts (commutative subalgebras of `M_n(C)`, represented
//! by their atomic projections), the finite posets they generate, and three
//! presheaves over those posets:
//!
//! - the spectral presheaf, whose global sections are non-contextual value
//!   assignments ([`spectral`]),
//! - the probabilistic presheaf, whose global sections are quantum states when
//!   the catalog is informationally complete ([`gleason`]),
//! - the Bell presheaf over a product of two context posets ([`bell`]).
//!
//! [`wigner`] checks that unitary and antiunitary conjugations act as order
//! automorphisms and Jordan automorphisms.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, reports and the
//! command line live in the `contextua` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bell;
pub mod contexts;
pub mod eigen;
mod error;
pub mod gleason;
pub mod lp;
pub mod matrix;
pub mod nnls;
pub mod opalg;
pub mod presheaf;
pub mod random;
pub mod real;
pub mod spectral;
pub mod tol;
pub mod wigner;

pub use error::{Error, Result};
pub use matrix::{c64, ComplexMatrix};
