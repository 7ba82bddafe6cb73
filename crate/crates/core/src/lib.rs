//! Persistent homology of 2D point clouds via distributed alpha complexes.
//!
//! The pipeline triangulates a point cloud, splits it over a rectilinear grid
//! cover, computes local alpha-filtration persistence per cover element, and
//! merges the pieces through a Mayer-Vietoris style spectral sequence plus an
//! extension step. A sequential oracle implementing the classic single-matrix
//! reduction is included for verification.

pub mod geometry;
pub mod delaunay;
pub mod alpha;
pub mod cover;
pub mod z2matrix;
pub mod barcode_algebra;
pub mod spectral;
pub mod runtime;
pub mod oracle;
