//! Metric spheres glued from two round hemispheres along a circle
//! homeomorphism: seam distances and measures, area densities at seam points,
//! extensions of the gluing map, and discrete conformal modulus.

pub mod density;
pub mod error;
pub mod extension;
pub mod glued;
pub mod homeo;
pub mod mesh;
pub mod modulus;
pub mod numeric;
pub mod oracle;
pub mod seam;
pub mod sphere;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use glued::{GluedMetric, GluedPoint};
pub use homeo::{CircleHomeo, HomeoSpec};
pub use mesh::WeightedMesh;
pub use sphere::{DiskPoint, Hemisphere, SpherePoint};
