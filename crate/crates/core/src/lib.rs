//! Smoothing of planar and surface quadrilateral meshes.
//!
//! The main smoother relocates each free node so that the two virtual
//! triangles of every incident quad (split along the diagonal through the
//! node) become isosceles right triangles, then blends the per-triangle
//! targets with length-based weights. A Laplacian baseline, quad quality
//! metrics, height-surface and kriging bindings for surface meshes, and
//! deterministic mesh generators are included.

pub mod error;
pub mod geometry;
pub mod io;
pub mod kriging;
pub mod mesh;
pub mod meshgen;
pub mod planar;
pub mod quality;
pub mod surface;

pub use error::{Error, Result};
pub use geometry::{paraboloid_surface, project_along_normal, vertex_normal, HeightSurface};
pub use kriging::{kriging_fit, kriging_predict, KrigingModel, Variogram};
pub use mesh::{FanInfo, NodeId, Quad, QuadMesh};
pub use meshgen::{gen_disk_mesh, gen_grid, lift_to_surface, perturb, GridSpec, PerturbSpec};
pub use planar::{
    laplacian_node, quad_targets, smooth_node_planar, smooth_planar, weights, Algorithm,
    IterationStats, SmootherConfig, UpdateOrder, WeightScheme,
};
pub use quality::{
    gamma_quality, lambda_quality, mesh_quality_report, Metric, QualityReport, ReportTable,
};
pub use surface::{
    local_frame, smooth_laplacian_capped, smooth_mesh, smooth_node_surface, smooth_surface,
    tbase_target_3d, LocalFrame, SurfaceBinding,
};
