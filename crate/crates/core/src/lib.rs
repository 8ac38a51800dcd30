//! O(D)-equivariant fuzzy spheres from energy-cutoff quantization.
//!
//! The crate builds, for any dimension `D >= 2` and cutoff `lambda >= 1`, the
//! finite-dimensional algebra generated by the cutoff-projected Cartesian
//! coordinates of a particle confined to the unit sphere, together with all
//! the machinery needed to verify its defining relations to machine
//! precision:
//!
//! * [`symtensor`] - compressed symmetric tensors and the trace-free
//!   symmetric projector calculus,
//! * [`harmonic`] - the harmonic spaces `V_D^l`, their Gram data and the
//!   angular-momentum / coordinate actions,
//! * [`fuzzy`] - the cutoff algebra: coordinate and angular-momentum
//!   matrices and the Snyder-type relation checks,
//! * [`cg`] - classical and deformed Clebsch-Gordan channel coefficients and
//!   the strong-convergence experiment,
//! * [`lift`] - the realization of the cutoff algebra inside the so(D+1)
//!   irrep on harmonic polynomials of top degree,
//! * [`radial`] - the confining-well model behind the construction, with an
//!   independent finite-difference eigensolver.

pub mod cg;
pub mod error;
pub mod fuzzy;
pub mod gammafn;
pub mod harmonic;
pub mod lift;
pub mod linalg;
pub mod poly;
pub mod radial;
pub mod report;
pub mod suites;
pub mod symtensor;

pub use error::Error;

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
