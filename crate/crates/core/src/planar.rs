//! Triangle-based node relocation for planar quad meshes, the Laplacian
//! baseline, and the iteration driver shared with the surface smoother.
//!
//! For a free node `A` in the counter-clockwise quad `ABCD`, the quad is cut
//! along the diagonal `AC` into the virtual triangles `ABC` and `CDA`. Each
//! triangle yields the position of `A` that makes it an isosceles right
//! triangle with the right angle at the fixed neighbor (`B` or `D`). The new
//! position is a weighted mean of these targets over all incident quads,
//! with weights `l^p / sum(l^p)` taken from the triangle edge opposite `A`.

use nalgebra::{Point2, Point3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{NodeId, QuadMesh};

/// Length exponent of the target weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightScheme {
    /// `p = 0`: plain average.
    Average,
    /// `p = -1/2`.
    InverseSqrtLength,
    /// `p = -1`.
    InverseLength,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 3] = [
        WeightScheme::Average,
        WeightScheme::InverseSqrtLength,
        WeightScheme::InverseLength,
    ];

    pub fn exponent(self) -> f64 {
        match self {
            WeightScheme::Average => 0.0,
            WeightScheme::InverseSqrtLength => -0.5,
            WeightScheme::InverseLength => -1.0,
        }
    }

    /// Variant number 1, 2 or 3.
    pub fn variant(self) -> u8 {
        match self {
            WeightScheme::Average => 1,
            WeightScheme::InverseSqrtLength => 2,
            WeightScheme::InverseLength => 3,
        }
    }

    pub fn from_variant(v: u8) -> Option<Self> {
        match v {
            1 => Some(WeightScheme::Average),
            2 => Some(WeightScheme::InverseSqrtLength),
            3 => Some(WeightScheme::InverseLength),
            _ => None,
        }
    }

    fn raw(self, l: f64) -> f64 {
        match self {
            WeightScheme::Average => 1.0,
            WeightScheme::InverseSqrtLength => 1.0 / l.sqrt(),
            WeightScheme::InverseLength => 1.0 / l,
        }
    }
}

/// Which relocation rule to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Laplacian,
    Tbase(WeightScheme),
}

impl Algorithm {
    /// Row label used in comparison tables.
    pub fn label(self) -> String {
        match self {
            Algorithm::Laplacian => "LS".to_string(),
            Algorithm::Tbase(s) => format!("Vari.{}", s.variant()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateOrder {
    /// Every node is computed from the previous iterate.
    #[default]
    Simultaneous,
    /// Nodes are updated in place in index order.
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub algorithm: Algorithm,
    /// Absolute stopping distance. `None` means `1e-4` times the average
    /// edge length of the input mesh.
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    pub update_order: UpdateOrder,
    pub fix_boundary: bool,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig {
            algorithm: Algorithm::Tbase(WeightScheme::Average),
            tolerance: None,
            max_iterations: 500,
            update_order: UpdateOrder::Simultaneous,
            fix_boundary: true,
        }
    }
}

pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-4;

impl SmootherConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SmootherConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_order(mut self, order: UpdateOrder) -> Self {
        self.update_order = order;
        self
    }

    /// Resolve the stopping distance for `mesh`.
    pub fn resolved_tolerance(&self, mesh: &QuadMesh) -> Result<f64> {
        let tol = match self.tolerance {
            Some(t) => t,
            None => DEFAULT_RELATIVE_TOLERANCE * mesh.average_edge_length()?,
        };
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be > 0, got {tol}"
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        Ok(tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iterations_run: usize,
    pub max_displacement_history: Vec<f64>,
    pub converged: bool,
    pub tolerance: f64,
}

/// The two targets for free corner `a` of the counter-clockwise quad
/// `a b c d`: one from triangle `abc`, one from triangle `cda`.
pub fn quad_targets(b: Point2<f64>, c: Point2<f64>, d: Point2<f64>) -> (Point2<f64>, Point2<f64>) {
    (target_abc(b, c), target_cda(c, d))
}

/// `b + rot(+90)(c - b)`.
#[inline]
pub(crate) fn target_abc(b: Point2<f64>, c: Point2<f64>) -> Point2<f64> {
    Point2::new(b.x + b.y - c.y, -b.x + b.y + c.x)
}

/// `d + rot(-90)(c - d)`.
#[inline]
pub(crate) fn target_cda(c: Point2<f64>, d: Point2<f64>) -> Point2<f64> {
    Point2::new(d.x - d.y + c.y, d.x + d.y - c.x)
}

/// Normalized weights `l_i^p / sum_j l_j^p`. Lengths are expected to be
/// positive (see [`length_floor`]).
pub fn weights(lengths: &[f64], scheme: WeightScheme) -> Result<Vec<f64>> {
    if lengths.is_empty() {
        return Err(Error::NoLengths);
    }
    if scheme == WeightScheme::Average {
        let w = 1.0 / lengths.len() as f64;
        return Ok(vec![w; lengths.len()]);
    }
    let raw: Vec<f64> = lengths.iter().map(|&l| scheme.raw(l)).collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|r| r / sum).collect())
}

/// Smallest edge length fed to the weights: `1e-12` of the bounding-box
/// diagonal.
pub fn length_floor(mesh: &QuadMesh) -> f64 {
    (1e-12 * mesh.bbox_diagonal()).max(f64::MIN_POSITIVE)
}

fn xy(p: Point3<f64>) -> Point2<f64> {
    Point2::new(p.x, p.y)
}

pub(crate) fn weighted_sum<const D: usize>(
    targets: &[nalgebra::Point<f64, D>],
    w: &[f64],
) -> nalgebra::Point<f64, D> {
    let mut acc = nalgebra::SVector::<f64, D>::zeros();
    for (t, wi) in targets.iter().zip(w) {
        acc += t.coords * *wi;
    }
    nalgebra::Point::from(acc)
}

pub(crate) fn relocate_planar(
    node: NodeId,
    mesh: &QuadMesh,
    scheme: WeightScheme,
    floor: f64,
) -> Result<Point2<f64>> {
    let incident = mesh.incident_quads(node);
    if incident.is_empty() {
        return Err(Error::IsolatedNode(node.0));
    }
    let mut targets = Vec::with_capacity(2 * incident.len());
    let mut lengths = Vec::with_capacity(2 * incident.len());
    for &q in incident {
        let [_, b, c, d] = mesh.quads()[q]
            .rotated_to(node)
            .expect("adjacency lists only incident quads");
        let (b, c, d) = (
            xy(mesh.position(b)),
            xy(mesh.position(c)),
            xy(mesh.position(d)),
        );
        let (t1, t2) = quad_targets(b, c, d);
        targets.push(t1);
        lengths.push((c - b).norm().max(floor));
        targets.push(t2);
        lengths.push((d - c).norm().max(floor));
    }
    let w = weights(&lengths, scheme)?;
    Ok(weighted_sum(&targets, &w))
}

/// Weighted triangle-based position of `node` in the xy plane.
pub fn smooth_node_planar(
    node: NodeId,
    mesh: &QuadMesh,
    scheme: WeightScheme,
) -> Result<Point2<f64>> {
    relocate_planar(node, mesh, scheme, length_floor(mesh))
}

/// Centroid of the edge-connected neighbors (in 3D).
pub fn laplacian_node(node: NodeId, mesh: &QuadMesh) -> Result<Point3<f64>> {
    let nbrs = mesh.edge_neighbors(node);
    if nbrs.is_empty() {
        return Err(Error::IsolatedNode(node.0));
    }
    let pts: Vec<Point3<f64>> = nbrs.iter().map(|&n| mesh.position(n)).collect();
    let w = vec![1.0 / pts.len() as f64; pts.len()];
    Ok(weighted_sum(&pts, &w))
}

/// Nodes the driver relocates.
pub(crate) fn movable_nodes(mesh: &QuadMesh, fix_boundary: bool) -> Vec<NodeId> {
    (0..mesh.node_count())
        .map(NodeId)
        .filter(|&n| !mesh.incident_quads(n).is_empty())
        .filter(|&n| !(fix_boundary && mesh.is_boundary(n)))
        .collect()
}

/// Fixed-point iteration shared by the planar and surface smoothers.
///
/// `relocate` proposes a position from the current state; `settle` maps the
/// proposal onto whatever the node is constrained to (identity for planar
/// meshes, surface projection otherwise). `after_iteration` sees the mesh
/// after every committed iteration.
pub(crate) fn iterate<R, S>(
    mut mesh: QuadMesh,
    config: &SmootherConfig,
    relocate: R,
    settle: S,
    mut after_iteration: impl FnMut(&QuadMesh) -> Result<()>,
) -> Result<(QuadMesh, IterationStats)>
where
    R: Fn(&QuadMesh, NodeId) -> Result<Point3<f64>> + Sync,
    S: Fn(&QuadMesh, NodeId, Point3<f64>) -> Result<Point3<f64>> + Sync,
{
    let tolerance = config.resolved_tolerance(&mesh)?;
    let nodes = movable_nodes(&mesh, config.fix_boundary);
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iterations {
        let max_disp = match config.update_order {
            UpdateOrder::Simultaneous => {
                let moved: Vec<(NodeId, Point3<f64>)> = nodes
                    .par_iter()
                    .map(|&n| {
                        let p = relocate(&mesh, n)?;
                        Ok((n, settle(&mesh, n, p)?))
                    })
                    .collect::<Result<_>>()?;
                let mut max_disp: f64 = 0.0;
                for (n, p) in moved {
                    max_disp = max_disp.max((p - mesh.position(n)).norm());
                    mesh.set_position(n, p);
                }
                max_disp
            }
            UpdateOrder::Sequential => {
                let mut max_disp: f64 = 0.0;
                for &n in &nodes {
                    let p = relocate(&mesh, n)?;
                    let p = settle(&mesh, n, p)?;
                    max_disp = max_disp.max((p - mesh.position(n)).norm());
                    mesh.set_position(n, p);
                }
                max_disp
            }
        };
        history.push(max_disp);
        after_iteration(&mesh)?;
        if max_disp < tolerance {
            converged = true;
            break;
        }
    }

    let stats = IterationStats {
        iterations_run: history.len(),
        max_displacement_history: history,
        converged,
        tolerance,
    };
    Ok((mesh, stats))
}

/// Iterate the configured rule over a planar mesh until the largest node
/// displacement drops below the tolerance or the iteration cap is hit.
pub fn smooth_planar(
    mesh: QuadMesh,
    config: &SmootherConfig,
) -> Result<(QuadMesh, IterationStats)> {
    if !mesh.is_planar() {
        return Err(Error::InvalidParameter(
            "smooth_planar needs a mesh with constant z; use smooth_surface".into(),
        ));
    }
    let floor = length_floor(&mesh);
    let algorithm = config.algorithm;
    iterate(
        mesh,
        config,
        move |m, n| {
            let z = m.position(n).z;
            match algorithm {
                Algorithm::Laplacian => {
                    let c = laplacian_node(n, m)?;
                    Ok(Point3::new(c.x, c.y, z))
                }
                Algorithm::Tbase(scheme) => {
                    let p = relocate_planar(n, m, scheme, floor)?;
                    Ok(Point3::new(p.x, p.y, z))
                }
            }
        },
        |_, _, p| Ok(p),
        |_| Ok(()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Quad;

    fn p2(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    pub(crate) fn unit_grid(nx: usize, ny: usize) -> QuadMesh {
        let mut pos = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                pos.push(Point3::new(i as f64, j as f64, 0.0));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut quads = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                quads.push(Quad::new(
                    id(i, j),
                    id(i + 1, j),
                    id(i + 1, j + 1),
                    id(i, j + 1),
                ));
            }
        }
        QuadMesh::new(pos, quads).unwrap()
    }

    #[test]
    fn unit_square_is_its_own_target() {
        let (t1, t2) = quad_targets(p2(1., 0.), p2(1., 1.), p2(0., 1.));
        assert_eq!(t1, p2(0., 0.));
        assert_eq!(t2, p2(0., 0.));
    }

    #[test]
    fn first_branch_substitution() {
        assert_eq!(target_abc(p2(1., 0.), p2(2., 1.)), p2(0., 1.));
    }

    #[test]
    fn targets_translate() {
        let (b, c, d) = (p2(1.3, -0.2), p2(2.1, 1.7), p2(0.1, 0.9));
        let t = nalgebra::Vector2::new(-3.5, 7.25);
        let (a1, a2) = quad_targets(b, c, d);
        let (s1, s2) = quad_targets(b + t, c + t, d + t);
        assert!((s1 - (a1 + t)).norm() < 1e-12);
        assert!((s2 - (a2 + t)).norm() < 1e-12);
    }

    #[test]
    fn degenerate_fixed_edge_returns_neighbor() {
        let b = p2(0.4, 0.6);
        assert_eq!(target_abc(b, b), b);
        assert_eq!(target_cda(b, b), b);
    }

    #[test]
    fn weight_examples() {
        let w = weights(&[3.0, 1.0, 7.0, 2.0], WeightScheme::Average).unwrap();
        assert!(w.iter().all(|&x| x == 0.25));
        let w = weights(&[1.0, 1.0, 4.0, 4.0], WeightScheme::InverseSqrtLength).unwrap();
        let expect = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = weights(&[1.0, 2.0], WeightScheme::InverseLength).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            weights(&[], WeightScheme::Average),
            Err(Error::NoLengths)
        ));
    }

    #[test]
    fn center_of_perfect_grid_is_fixed() {
        let m = unit_grid(2, 2);
        for s in WeightScheme::ALL {
            let p = smooth_node_planar(NodeId(4), &m, s).unwrap();
            assert!((p - p2(1., 1.)).norm() < 1e-15);
        }
    }

    #[test]
    fn displaced_center_returns_to_neighbor_mean() {
        let mut m = unit_grid(2, 2);
        m.set_position(NodeId(4), Point3::new(1.1, 1.1, 0.0));
        let p = smooth_node_planar(NodeId(4), &m, WeightScheme::Average).unwrap();
        assert!((p - p2(1., 1.)).norm() < 1e-15);
    }

    #[test]
    fn node_output_scales_with_mesh() {
        let mut m = unit_grid(3, 3);
        m.set_position(NodeId(5), Point3::new(1.2, 0.9, 0.0));
        m.set_position(NodeId(10), Point3::new(1.8, 2.3, 0.0));
        let s = 2.5;
        let scaled = m
            .clone()
            .with_positions(m.positions().iter().map(|p| p * s).collect());
        for scheme in WeightScheme::ALL {
            let a = smooth_node_planar(NodeId(5), &m, scheme).unwrap();
            let b = smooth_node_planar(NodeId(5), &scaled, scheme).unwrap();
            assert!((a * s - b).norm() < 1e-12);
        }
    }

    #[test]
    fn laplacian_examples() {
        let m = unit_grid(2, 2);
        assert_eq!(
            laplacian_node(NodeId(4), &m).unwrap(),
            Point3::new(1., 1., 0.)
        );
        // Node 1 on a 2x1 strip has neighbors 0, 2 and 4.
        let strip = unit_grid(2, 1);
        let c = laplacian_node(NodeId(1), &strip).unwrap();
        assert!((c - Point3::new(1.0, 1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn perfect_grid_converges_in_one_iteration() {
        for algo in [
            Algorithm::Laplacian,
            Algorithm::Tbase(WeightScheme::Average),
            Algorithm::Tbase(WeightScheme::InverseLength),
        ] {
            let m = unit_grid(4, 4);
            let (out, stats) = smooth_planar(m.clone(), &SmootherConfig::new(algo)).unwrap();
            assert!(stats.converged);
            assert_eq!(stats.iterations_run, 1);
            assert_eq!(stats.max_displacement_history[0], 0.0);
            assert_eq!(out, m);
        }
    }

    #[test]
    fn sequential_updates_converge() {
        let mut m = unit_grid(4, 4);
        m.set_position(NodeId(6), Point3::new(1.3, 0.8, 0.0));
        let cfg = SmootherConfig::new(Algorithm::Tbase(WeightScheme::InverseSqrtLength))
            .with_order(UpdateOrder::Sequential);
        let (out, stats) = smooth_planar(m, &cfg).unwrap();
        assert!(stats.converged);
        assert!((out.position(NodeId(6)) - Point3::new(1.0, 1.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn free_boundary_moves_outline() {
        let mut m = unit_grid(2, 2);
        m.set_position(NodeId(1), Point3::new(1.0, -0.3, 0.0));
        let mut cfg = SmootherConfig::new(Algorithm::Laplacian).with_max_iterations(1);
        cfg.fix_boundary = false;
        let (out, _) = smooth_planar(m.clone(), &cfg).unwrap();
        assert_ne!(out.position(NodeId(0)), m.position(NodeId(0)));
    }

    #[test]
    fn rejects_bad_config_and_non_planar_input() {
        let m = unit_grid(2, 2);
        let cfg = SmootherConfig::new(Algorithm::Laplacian).with_tolerance(0.0);
        assert!(smooth_planar(m.clone(), &cfg).is_err());
        let cfg = SmootherConfig::new(Algorithm::Laplacian).with_max_iterations(0);
        assert!(smooth_planar(m.clone(), &cfg).is_err());
        let mut lifted = m;
        lifted.set_position(NodeId(4), Point3::new(1.0, 1.0, 0.5));
        assert!(smooth_planar(lifted, &SmootherConfig::default()).is_err());
    }
}
