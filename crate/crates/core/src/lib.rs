//! Scattering of surface waves by random mass defects on a half-plane lattice.
//!
//! The numerical core is generic over [`Real`]; the aliases below fix it to `f64`.

// `!(x > 0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod ensemble;
pub mod error;
pub mod greens;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod scalar;
pub mod scattering;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Complex64 = C<f64>;
pub type Params = spectrum::SurfaceParams<f64>;
pub type Spectral = spectrum::SpectralData<f64>;
pub type Dispersion = spectrum::DispersionPoint<f64>;
pub type Kernel64 = greens::Kernel<f64>;
pub type Greens = greens::RadiatingGreens<f64>;
pub type GreensOpts = greens::GreensOptions<f64>;
pub type Table = greens::GreensTable<f64>;
pub type Patch = scattering::PerturbationPatch<f64>;
pub type Settings = scattering::SolverSettings<f64>;
pub type Solver = scattering::ScatteringSolver<f64>;
pub type Solution = scattering::ScatteringResult<f64>;
pub type Effective = asymptotics::AsymptoticParams<f64>;
pub type Moments64 = asymptotics::MomentSolution<f64>;
