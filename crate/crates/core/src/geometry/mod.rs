//! Truncated exterior meshes, cut-off functions and sphere quadratures.

mod cutoff;
mod locate;
mod mesh;
mod mesher;
mod sphere;

pub use cutoff::{CutoffFunction, CutoffValue};
pub use locate::PointLocator;
pub use mesh::{load_mesh, tet_gradients, BoundaryFacet, ExteriorMesh, FacetTag, MeshStats};
pub use mesher::{
    build_exterior_mesh, build_exterior_mesh_with, MesherOptions, ObstacleShape, Polyhedron,
    RadialGrading,
};
pub use sphere::{sphere_quadrature, SurfaceQuadrature};

/// Points and vectors in physical space.
pub type Vec3 = nalgebra::Vector3<f64>;
