//! Numerical laboratory for helicity functionals of divergence-free vector fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: balls, axisymmetric solid tori, masked Cartesian grids,
//!   boundary/section/loop samplers and polyline curves.
//! * [`fields`]: the analytic field catalog (tubes, harmonic torus fields,
//!   spheromak), grid-sampled fields and central-difference operators.
//! * [`biot_savart`]: dense Biot-Savart and Newtonian-potential sums and
//!   Amperian loop integrals.
//! * [`functionals`]: writhe, linking number, the helicity estimators,
//!   energy rate and the helicity difference in volume and surface form.
//! * [`hodge`]: harmonic-knot bases on unions of solid tori.
//! * [`transport`]: compressible diffeomorphism families, frozen-in
//!   transport and conservation sweeps.
//! * [`mhd`]: magnetic Biot-Savart, potential and cross helicities.
//!
//! Every reduction runs in a fixed order so results are bit-identical for any
//! worker count.

pub mod biot_savart;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod hodge;
pub mod mhd;
pub mod par;
pub mod special;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{Mat3, Vec3};
