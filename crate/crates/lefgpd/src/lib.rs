#![forbid(unsafe_code)]

//! Numerical verification of the Lefschetz fixed point formula on flat
//! models.
//!
//! The library computes the supertrace of a twisted heat operator on the
//! flat torus three independent ways -- a theta-kernel quadrature, an exact
//! Fourier-mode sum, and the fixed-point-weighted sum over simple fixed
//! points -- and exposes the deformation-space trace functionals whose
//! t -> 0 limit connects them.
//!
//! The core is generic over the working scalar through [`Real`] (`f32` or
//! `f64`); the exact lattice algebra underneath fixed-point enumeration runs
//! in `i64`. All stated tolerances assume `f64`; the `*64` aliases at the
//! crate root are the instantiations the CLI uses.

pub mod error;
pub mod geometry;
pub mod groupoid;
pub mod heatkernel;
pub mod lefschetz;
pub mod linalg;
pub mod numeric;
pub mod superalgebra;

pub use error::{Error, Result};
pub use numeric::{pairwise_sum, real, Real};

/// Default `f64` instantiations of the main types.
pub type TorusMap64 = geometry::TorusMap<f64>;
pub type FixedPointRecord64 = geometry::FixedPointRecord<f64>;
pub type QuadratureGrid64 = geometry::QuadratureGrid<f64>;
pub type GradedEndomorphism64 = superalgebra::GradedEndomorphism<f64>;
pub type Zeta64 = superalgebra::Zeta<f64>;
pub type HeatTime64 = heatkernel::HeatTime<f64>;
pub type ThetaKernel64 = heatkernel::ThetaKernel<f64>;
pub type EllipticSymbol64 = heatkernel::EllipticSymbol<f64>;
pub type DeformationKernel64 = groupoid::DeformationKernel<f64>;
pub type TraceLadder64 = groupoid::TraceLadder<f64>;
pub type VerificationConfig64 = lefschetz::VerificationConfig<f64>;
pub type ConvergenceReport64 = lefschetz::ConvergenceReport<f64>;
