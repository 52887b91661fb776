//! Triangle-based smoothing of quad meshes lying on a height surface.
//!
//! Each virtual triangle gets its own orthonormal frame; the planar target
//! formula is applied in that frame and mapped back to global coordinates.
//! After the weighted aggregation, every node is put back on the surface,
//! either by projecting along its vertex normal (parametric surfaces) or by
//! re-interpolating its height with kriging (interpolated surfaces).

use nalgebra::{Point2, Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{project_along_normal, vertex_normal, HeightSurface};
use crate::kriging::KrigingModel;
use crate::mesh::{is_collinear, NodeId, QuadMesh};
use crate::planar::{
    iterate, laplacian_node, length_floor, smooth_planar, target_abc, target_cda, weighted_sum,
    weights, Algorithm, IterationStats, SmootherConfig, WeightScheme,
};

/// Orthonormal frame spanning a triangle's plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: Point3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
    pub n: Vector3<f64>,
}

impl LocalFrame {
    pub fn to_local(&self, x: &Point3<f64>) -> Point2<f64> {
        let d = x - self.origin;
        Point2::new(d.dot(&self.u), d.dot(&self.v))
    }

    pub fn to_global(&self, p: &Point2<f64>) -> Point3<f64> {
        self.origin + self.u * p.x + self.v * p.y
    }
}

/// Frame of triangle `p q r` with origin `q`, `u` along `q -> r`, and normal
/// `(q - p) x (r - p)`; the local images of `p, q, r` are counter-clockwise.
pub fn local_frame(p: &Point3<f64>, q: &Point3<f64>, r: &Point3<f64>) -> Result<LocalFrame> {
    if is_collinear(p, q, r) {
        return Err(Error::DegenerateFrame);
    }
    let u = (r - q).normalize();
    let n = (q - p).cross(&(r - p)).normalize();
    let v = n.cross(&u);
    Ok(LocalFrame {
        origin: *q,
        u,
        v,
        n,
    })
}

/// Target for free node `a` in triangle `a b c` (right angle at `b`).
///
/// Equals `b + n x (c - b)` with `n` the unit normal of `a b c`, so the
/// result lies in the triangle's plane on the same side of `bc` as `a`.
/// A collinear triangle returns [`Error::DegenerateFrame`].
pub fn tbase_target_3d(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Result<Point3<f64>> {
    let frame = local_frame(a, b, c)?;
    let t = target_abc(frame.to_local(b), frame.to_local(c));
    Ok(frame.to_global(&t))
}

/// Target for free node `a` in triangle `c d a` (right angle at `d`), using
/// the mirrored planar formula in the frame of `c d a`.
pub fn tbase_target_3d_mirrored(
    a: &Point3<f64>,
    c: &Point3<f64>,
    d: &Point3<f64>,
) -> Result<Point3<f64>> {
    if is_collinear(c, d, a) {
        return Err(Error::DegenerateFrame);
    }
    let u = (c - d).normalize();
    let n = (d - c).cross(&(a - c)).normalize();
    let frame = LocalFrame {
        origin: *d,
        u,
        v: n.cross(&u),
        n,
    };
    let t = target_cda(frame.to_local(c), frame.to_local(d));
    Ok(frame.to_global(&t))
}

pub(crate) fn relocate_surface(
    node: NodeId,
    mesh: &QuadMesh,
    scheme: WeightScheme,
    floor: f64,
) -> Result<Point3<f64>> {
    let incident = mesh.incident_quads(node);
    if incident.is_empty() {
        return Err(Error::IsolatedNode(node.0));
    }
    let mut targets = Vec::with_capacity(2 * incident.len());
    let mut lengths = Vec::with_capacity(2 * incident.len());
    for &q in incident {
        let [a, b, c, d] = mesh.quads()[q]
            .rotated_to(node)
            .expect("adjacency lists only incident quads");
        let [a, b, c, d] = [a, b, c, d].map(|n| mesh.position(n));
        if let Ok(t) = tbase_target_3d(&a, &b, &c) {
            targets.push(t);
            lengths.push((c - b).norm().max(floor));
        }
        if let Ok(t) = tbase_target_3d_mirrored(&a, &c, &d) {
            targets.push(t);
            lengths.push((d - c).norm().max(floor));
        }
    }
    if targets.is_empty() {
        return Err(Error::DegenerateFan(node.0));
    }
    let w = weights(&lengths, scheme)?;
    Ok(weighted_sum(&targets, &w))
}

/// Weighted triangle-based position of `node` in 3D. Degenerate virtual
/// triangles are dropped and the remaining weights renormalized.
pub fn smooth_node_surface(
    node: NodeId,
    mesh: &QuadMesh,
    scheme: WeightScheme,
) -> Result<Point3<f64>> {
    relocate_surface(node, mesh, scheme, length_floor(mesh))
}

/// What keeps nodes on the surface after each relocation.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceBinding {
    /// Project along the vertex normal onto `z = f(x, y)`.
    Parametric { surface: HeightSurface },
    /// Keep `x, y` and re-interpolate `z`.
    Interpolated { model: KrigingModel },
}

impl SurfaceBinding {
    pub fn parametric(surface: HeightSurface) -> Self {
        SurfaceBinding::Parametric { surface }
    }

    pub fn interpolated(model: KrigingModel) -> Self {
        SurfaceBinding::Interpolated { model }
    }

    /// Height of the bound surface at `(x, y)`.
    pub fn height(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            SurfaceBinding::Parametric { surface } => Ok(surface.eval(x, y)),
            SurfaceBinding::Interpolated { model } => model.predict(x, y),
        }
    }
}

/// Default iteration count for interpolated surfaces.
pub const INTERPOLATED_ITERATIONS: usize = 10;

/// Search bracket for normal projection, in average edge lengths.
pub const PROJECTION_BRACKET: f64 = 10.0;

/// [`smooth_surface`] with a callback invoked after every iteration.
pub fn smooth_surface_observed(
    mesh: QuadMesh,
    binding: &SurfaceBinding,
    config: &SmootherConfig,
    mut observer: impl FnMut(usize, &QuadMesh),
) -> Result<(QuadMesh, IterationStats)> {
    let floor = length_floor(&mesh);
    let bracket = PROJECTION_BRACKET * mesh.average_edge_length()?;
    let algorithm = config.algorithm;
    let mut count = 0;
    iterate(
        mesh,
        config,
        move |m, n| match algorithm {
            Algorithm::Laplacian => laplacian_node(n, m),
            Algorithm::Tbase(scheme) => relocate_surface(n, m, scheme, floor),
        },
        move |m, n, p| match binding {
            SurfaceBinding::Parametric { surface } => {
                let normal = vertex_normal(m, n)?;
                project_along_normal(p, &normal, surface, bracket).map_err(|e| match e {
                    Error::ProjectionFailed { reason, .. } => Error::ProjectionFailed {
                        node: Some(n.0),
                        reason,
                    },
                    other => other,
                })
            }
            SurfaceBinding::Interpolated { model } => {
                Ok(Point3::new(p.x, p.y, model.predict(p.x, p.y)?))
            }
        },
        |m| {
            count += 1;
            observer(count, m);
            Ok(())
        },
    )
}

/// Iterate relocation plus surface update until the displacement tolerance
/// or the iteration cap is reached.
pub fn smooth_surface(
    mesh: QuadMesh,
    binding: &SurfaceBinding,
    config: &SmootherConfig,
) -> Result<(QuadMesh, IterationStats)> {
    smooth_surface_observed(mesh, binding, config, |_, _| {})
}

/// Planar smoothing when `binding` is `None`, surface smoothing otherwise.
pub fn smooth_mesh(
    mesh: QuadMesh,
    binding: Option<&SurfaceBinding>,
    config: &SmootherConfig,
) -> Result<(QuadMesh, IterationStats)> {
    match binding {
        None => smooth_planar(mesh, config),
        Some(b) => smooth_surface(mesh, b, config),
    }
}

/// Result of a Laplacian-capped run.
#[derive(Debug, Clone)]
pub struct CappedRun {
    pub laplacian_stats: IterationStats,
    pub mesh: QuadMesh,
    pub stats: IterationStats,
}

/// Run the Laplacian baseline first (up to `config.max_iterations`), then run
/// `config.algorithm` with the Laplacian iteration count as its cap.
pub fn smooth_laplacian_capped(
    mesh: QuadMesh,
    binding: Option<&SurfaceBinding>,
    config: &SmootherConfig,
) -> Result<CappedRun> {
    let ls_config = SmootherConfig {
        algorithm: Algorithm::Laplacian,
        ..config.clone()
    };
    let (_, laplacian_stats) = smooth_mesh(mesh.clone(), binding, &ls_config)?;
    let capped = SmootherConfig {
        max_iterations: laplacian_stats.iterations_run,
        ..config.clone()
    };
    let (mesh, stats) = smooth_mesh(mesh, binding, &capped)?;
    Ok(CappedRun {
        laplacian_stats,
        mesh,
        stats,
    })
}
