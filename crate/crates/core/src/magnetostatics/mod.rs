//! Magnetostatics of the two-piece Stern-Gerlach magnet.
//!
//! Both pieces are uniformly magnetized, so the only sources are the bound
//! surface currents `K = M x n` on their boundaries. B follows from the
//! Biot-Savart law by adaptive quadrature over those panels; the Jacobian
//! from central differences of B. A [`FieldGrid`] caches both over the flight
//! corridor.

mod export;
mod geometry;
mod grid;
mod params;
mod quadrature;
mod sample;

pub use export::{divergence_profile, write_slice_csv, yz_slice, SliceRow, SLICE_HEADER};
pub use geometry::{build_geometry, magnetized_box, Panel, PrismBody, SgdGeometry};
pub use grid::{build_field_grid, pack, unpack, FieldGrid, GridSpec, NodeValue};
pub use params::{SgdParams, IRON_SATURATION};
pub use quadrature::{biot_savart_field, field_jacobian, FieldEvaluator, QuadratureConfig};
pub use sample::{FieldSample, FieldSource, SampleMode};

use crate::math::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field point is not finite")]
    NonFinitePoint,
    #[error(
        "quadrature did not converge at ({:e}, {:e}, {:e}); estimate |B| = {:e} T, error bound {error_bound:e} T",
        point.x, point.y, point.z, estimate.norm()
    )]
    QuadratureFailure {
        point: Vec3,
        estimate: Vec3,
        error_bound: f64,
    },
    #[error("grid node {index}: {source}")]
    GridNode {
        index: usize,
        #[source]
        source: Box<FieldError>,
    },
    #[error("point ({:e}, {:e}, {:e}) is outside the field grid", .0.x, .0.y, .0.z)]
    OutOfBounds(Vec3),
    #[error("field cache: {0}")]
    CacheFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
