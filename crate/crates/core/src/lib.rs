//! paralab-core: a desk-scale numerical laboratory for fractal measures on
//! the parabola.
//!
//! The crate builds and measures delta-discretized objects - Frostman
//! measures on the arc, their FFT convolution powers, Fourier L^p norms,
//! Riesz energies (spatial and Fourier-side), parabola-to-line transfers,
//! Katz-Tao incidence instances, and n-fold sumset covers - and exposes the
//! closed-form exponents those measurements are compared against.

// `!(x > 0)`-style guards double as NaN rejection and stay as written.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod convolution;
pub mod dyadic;
pub mod error;
pub(crate) mod fft;
pub mod exponents;
pub mod grid;
pub mod incidence;
pub mod lattice;
pub mod lines;
pub mod mollifier;
pub mod parabola;
pub mod psi;
pub mod spectrum;

pub use error::{Error, Result};
pub use exponents::{
    gamma_exponent, iterate_gamma, max_energy_exponent, sumset_exponent, zeta_exponent,
    ExponentParams,
};
pub use lines::{line_metric, GrassmannLine, Tube};
pub use parabola::{arc_measure, cantor_parabola_measure, lattice_parabola_measure, AtomicMeasure};
