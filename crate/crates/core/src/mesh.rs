//! Quad mesh data model.
//!
//! A [`QuadMesh`] owns node positions (planar meshes carry `z = 0`), quad
//! connectivity, the node to incident-quad adjacency, and per-node boundary
//! flags. Connectivity is fixed once built; smoothing only moves positions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// Dense node index into [`QuadMesh::positions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

/// Four corners in cyclic order. Diagonals are (0, 2) and (1, 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quad {
    pub corners: [NodeId; 4],
}

impl Quad {
    pub fn new(a: usize, b: usize, c: usize, d: usize) -> Self {
        Quad {
            corners: [NodeId(a), NodeId(b), NodeId(c), NodeId(d)],
        }
    }

    /// Corners cyclically rotated so that `node` comes first.
    pub fn rotated_to(&self, node: NodeId) -> Option<[NodeId; 4]> {
        let k = self.corners.iter().position(|&c| c == node)?;
        Some(std::array::from_fn(|i| self.corners[(k + i) % 4]))
    }

    /// Same cycle traversed in the opposite direction, first corner kept.
    pub fn reversed(&self) -> Self {
        let [a, b, c, d] = self.corners;
        Quad {
            corners: [a, d, c, b],
        }
    }

    /// The four directed edges `(corner[i], corner[i + 1])`.
    pub fn edges(&self) -> [(usize, usize); 4] {
        std::array::from_fn(|i| (self.corners[i].0, self.corners[(i + 1) % 4].0))
    }
}

/// Ordered ring of quads around a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FanInfo {
    pub node: NodeId,
    pub incident_quads: Vec<usize>,
    /// The incident quads form a full cycle around the node.
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadMesh {
    positions: Vec<Point3<f64>>,
    quads: Vec<Quad>,
    boundary: Vec<bool>,
    adjacency: Vec<Vec<usize>>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl QuadMesh {
    /// Positions and connectivity with no derived data. Call
    /// [`build_adjacency`](Self::build_adjacency) and friends, or use
    /// [`QuadMesh::new`].
    pub fn from_raw(positions: Vec<Point3<f64>>, quads: Vec<Quad>) -> Self {
        let n = positions.len();
        QuadMesh {
            positions,
            quads,
            boundary: vec![false; n],
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Validated mesh: adjacency built, winding normalized, boundary classified.
    pub fn new(positions: Vec<Point3<f64>>, quads: Vec<Quad>) -> Result<Self> {
        Self::from_raw(positions, quads)
            .build_adjacency()?
            .classify_boundary()?
            .orient_ccw()
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn position(&self, node: NodeId) -> Point3<f64> {
        self.positions[node.0]
    }

    pub fn quads(&self) -> &[Quad] {
        &self.quads
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn quad_count(&self) -> usize {
        self.quads.len()
    }

    /// Quads incident to `node`, in increasing quad index.
    pub fn incident_quads(&self, node: NodeId) -> &[usize] {
        &self.adjacency[node.0]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn is_boundary(&self, node: NodeId) -> bool {
        self.boundary[node.0]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Replace positions, keeping connectivity. Panics if the count differs.
    pub fn with_positions(mut self, positions: Vec<Point3<f64>>) -> Self {
        assert_eq!(positions.len(), self.positions.len());
        self.positions = positions;
        self
    }

    pub fn set_position(&mut self, node: NodeId, p: Point3<f64>) {
        self.positions[node.0] = p;
    }

    pub fn quad_points(&self, q: usize) -> [Point3<f64>; 4] {
        self.quads[q].corners.map(|c| self.positions[c.0])
    }

    /// Check corner indices and fill the node to incident-quad lists.
    pub fn build_adjacency(mut self) -> Result<Self> {
        let count = self.positions.len();
        let mut adjacency = vec![Vec::new(); count];
        for (qi, quad) in self.quads.iter().enumerate() {
            for (k, c) in quad.corners.iter().enumerate() {
                if c.0 >= count {
                    return Err(Error::NodeOutOfRange {
                        quad: qi,
                        node: c.0,
                        count,
                    });
                }
                if quad.corners[..k].contains(c) {
                    return Err(Error::RepeatedCorner {
                        quad: qi,
                        node: c.0,
                    });
                }
                adjacency[c.0].push(qi);
            }
        }
        self.adjacency = adjacency;
        Ok(self)
    }

    /// Undirected edge to sharing-quads map, ordered by edge key.
    pub fn edge_map(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (qi, quad) in self.quads.iter().enumerate() {
            for (a, b) in quad.edges() {
                map.entry(edge_key(a, b)).or_default().push(qi);
            }
        }
        map
    }

    /// Flag nodes on edges used by exactly one quad.
    pub fn classify_boundary(mut self) -> Result<Self> {
        let mut boundary = vec![false; self.positions.len()];
        for ((a, b), sharing) in self.edge_map() {
            match sharing.len() {
                1 => {
                    boundary[a] = true;
                    boundary[b] = true;
                }
                2 => {}
                n => return Err(Error::NonManifoldEdge(a, b, n)),
            }
        }
        self.boundary = boundary;
        Ok(self)
    }

    /// Make winding consistent across shared edges, then turn each connected
    /// component so its projected area on the xy plane is positive. For a
    /// planar, untangled mesh every quad then has positive signed area.
    pub fn orient_ccw(mut self) -> Result<Self> {
        let edges = self.edge_map();
        let nq = self.quads.len();
        let mut flip: Vec<Option<bool>> = vec![None; nq];

        for seed in 0..nq {
            if flip[seed].is_some() {
                continue;
            }
            flip[seed] = Some(false);
            let mut component = vec![seed];
            let mut queue = VecDeque::from([seed]);
            while let Some(q) = queue.pop_front() {
                let q_flip = flip[q].unwrap();
                for (a, b) in self.quads[q].edges() {
                    // Directed edge as it will be traversed after flipping.
                    let (a, b) = if q_flip { (b, a) } else { (a, b) };
                    for &r in &edges[&edge_key(a, b)] {
                        if r == q {
                            continue;
                        }
                        // Consistent neighbors traverse the shared edge as b -> a.
                        let needed = self.quads[r].edges().contains(&(a, b));
                        match flip[r] {
                            None => {
                                flip[r] = Some(needed);
                                component.push(r);
                                queue.push_back(r);
                            }
                            Some(f) if f != needed => return Err(Error::NonOrientable(r)),
                            Some(_) => {}
                        }
                    }
                }
            }

            let area: f64 = component
                .iter()
                .map(|&q| {
                    let s = signed_area_xy(&self.quad_points(q));
                    if flip[q].unwrap() {
                        -s
                    } else {
                        s
                    }
                })
                .sum();
            if area < 0.0 {
                for &q in &component {
                    flip[q] = flip[q].map(|f| !f);
                }
            }
        }

        for (quad, f) in self.quads.iter_mut().zip(flip) {
            if f == Some(true) {
                *quad = quad.reversed();
            }
        }
        // Reversal keeps the corner sets, so adjacency stays valid.
        Ok(self)
    }

    /// Unique undirected edges, ordered by `(min, max)` node index.
    pub fn unique_edges(&self) -> Vec<(usize, usize)> {
        self.edge_map().into_keys().collect()
    }

    /// Mean length over the set of unique edges.
    pub fn average_edge_length(&self) -> Result<f64> {
        if self.quads.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let edges = self.unique_edges();
        let total: f64 = edges
            .iter()
            .map(|&(a, b)| (self.positions[a] - self.positions[b]).norm())
            .sum();
        Ok(total / edges.len() as f64)
    }

    /// Diagonal of the axis-aligned bounding box of all nodes.
    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.positions)
    }

    /// All nodes share one z value (to a scale-relative tolerance).
    pub fn is_planar(&self) -> bool {
        let Some(first) = self.positions.first() else {
            return true;
        };
        let tol = 1e-12 * self.bbox_diagonal().max(f64::MIN_POSITIVE);
        self.positions.iter().all(|p| (p.z - first.z).abs() <= tol)
    }

    /// Nodes sharing an edge with `node`, ascending.
    pub fn edge_neighbors(&self, node: NodeId) -> Vec<NodeId> {
        let mut set = BTreeSet::new();
        for &q in &self.adjacency[node.0] {
            if let Some([_, b, _, d]) = self.quads[q].rotated_to(node) {
                set.insert(b);
                set.insert(d);
            }
        }
        set.into_iter().collect()
    }

    /// Incident quads ordered around `node` by shared edges.
    pub fn fan(&self, node: NodeId) -> FanInfo {
        let incident = &self.adjacency[node.0];
        // For each incident quad, the corner after and before `node`.
        let links: Vec<(usize, NodeId, NodeId)> = incident
            .iter()
            .filter_map(|&q| {
                let [_, next, _, prev] = self.quads[q].rotated_to(node)?;
                Some((q, next, prev))
            })
            .collect();
        if links.is_empty() {
            return FanInfo {
                node,
                incident_quads: Vec::new(),
                closed: false,
            };
        }

        // Start from a quad whose trailing edge has no predecessor, if any.
        let start = links
            .iter()
            .position(|&(_, _, prev)| !links.iter().any(|&(_, next, _)| next == prev))
            .unwrap_or(0);

        let mut used = vec![false; links.len()];
        let mut order = Vec::with_capacity(links.len());
        let mut cur = start;
        loop {
            used[cur] = true;
            order.push(links[cur].0);
            let next = links[cur].1;
            match (0..links.len()).find(|&j| !used[j] && links[j].2 == next) {
                Some(j) => cur = j,
                None => break,
            }
        }
        let closed = order.len() == links.len() && links[cur].1 == links[start].2;
        // Quads not reached by the walk (non-fan configurations) go last.
        for (j, l) in links.iter().enumerate() {
            if !used[j] {
                order.push(l.0);
            }
        }
        FanInfo {
            node,
            incident_quads: order,
            closed,
        }
    }
}

/// Shoelace area of the quad projected onto the xy plane.
pub fn signed_area_xy(p: &[Point3<f64>; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let a = p[i];
        let b = p[(i + 1) % 4];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

pub fn bbox_diagonal(points: &[Point3<f64>]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let (mut lo, mut hi) = (first.coords, first.coords);
    for p in points {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    (hi - lo).norm()
}

/// Twice the triangle area vector.
#[inline]
pub(crate) fn tri_cross(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Vector3<f64> {
    (b - a).cross(&(c - a))
}

/// Collinearity test: triangle area below `1e-12 * diag^2` of the triangle's
/// own bounding box.
pub fn is_collinear(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> bool {
    let diag = bbox_diagonal(&[*a, *b, *c]);
    0.5 * tri_cross(a, b, c).norm() < 1e-12 * diag * diag || diag == 0.0
}
