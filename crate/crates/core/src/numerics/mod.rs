//! Gaussian special functions, adaptive quadrature and seeded random
//! streams shared by every other module.

mod gaussian;
mod quadrature;
mod rng;

pub use gaussian::{
    cdf, cdf_antideriv, gaussian, pdf, phi_deriv_l1, quantile, survival, GaussianKind,
};
pub use quadrature::{integrate, integrate_pieces, integrate_unit, Quadrature, Tolerance};
pub use rng::{substream, RandomStream};
