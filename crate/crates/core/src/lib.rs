//! Optimal transport for radially contoured distributions.
//!
//! - [`profile`]: generator functions, normalizers, moments and radial laws.
//! - [`transport`]: monotone radial rearrangement, Monge maps, exact `W2`, McCann interpolation.
//! - [`barycenter`]: Wasserstein barycenters by quantile averaging, with optimality certificates.
//! - [`gridlab`]: 2D grid densities, debiased entropic barycenters, contours and ellipse fits.
//! - [`oracle`]: sampling and exact discrete optimal transport used as independent checks.

pub mod barycenter;
pub mod error;
pub mod gridlab;
pub mod oracle;
pub mod profile;
pub mod quadrature;
pub mod transport;

pub use barycenter::{
    radial_barycenter, Atom, BarycenterResult, GeneralizedRadialDistribution, GeneralizedRadialMeasure,
};
pub use error::{Error, Result};
pub use profile::{DistributionSpec, Generator, RadialDistribution, RadialMeasure, RadialProfile};
pub use transport::{mccann_interpolate, monge_map, radial_rearrangement, w2_distance, MongeMap, RadialMap};
