//! Numerical toolkit for the geodesic X-ray transform on simple geodesic
//! disks of constant curvature.
//!
//! The disk `|z| <= R` carries the metric `(1 + kappa*|z|^2)^{-2} |dz|^2`
//! (Gaussian curvature `4*kappa`); the simplicity condition `|kappa| R^2 < 1`
//! makes every geodesic a chord-like curve that exits in finite time. The
//! crate provides:
//!
//! - [`geometry`]: fan-beam coordinates, geodesics, exit times, the
//!   scattering involution, footpoint and time-rescaling maps;
//! - [`basis`]: Zernike disk polynomials and the matching boundary basis,
//!   plain and weighted by powers of the boundary defining function;
//! - [`transform`]: quadrature realizations of the X-ray transform and
//!   backprojection, assembled operator matrices, normal operators;
//! - [`spectral`]: closed-form singular values, the degenerate elliptic
//!   operators generating the Zernike-Sobolev scales, SVD inversion;
//! - [`range`]: range-characterization operators built from the scattering
//!   relation and the fiberwise Hilbert transform;
//! - [`attenuated`]: matrix-attenuated transforms via transport ODEs,
//!   integrating factors, adjoints and normal-operator probes;
//! - [`asymptotics`]: boundary-profile fitting against log-polynomial
//!   dictionaries, exponent laws and index-set classification;
//! - [`verify`]: the golden identity suite driving the acceptance checks.

pub mod asymptotics;
pub mod attenuated;
pub mod basis;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod range;
pub mod special;
pub mod spectral;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{DiskModel, FanBeam, PhasePoint};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
