//! Deterministic synthetic quad meshes.
//!
//! Random perturbation uses ChaCha8 seeded with a 64-bit integer
//! (`rand_chacha::ChaCha8Rng::seed_from_u64`), so a seed reproduces the same
//! mesh on every platform. Offsets are drawn uniformly from a disk by
//! rejection sampling, which needs no transcendental functions.

use nalgebra::{Point2, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HeightSurface;
use crate::mesh::{NodeId, Quad, QuadMesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub spacing: f64,
    #[serde(default)]
    pub origin: [f64; 2],
}

fn one() -> f64 {
    1.0
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize) -> Self {
        GridSpec {
            nx,
            ny,
            spacing: 1.0,
            origin: [0.0, 0.0],
        }
    }

    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn with_origin(mut self, x: f64, y: f64) -> Self {
        self.origin = [x, y];
        self
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidParameter("grid needs nx, ny >= 1".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing {} must be > 0",
                self.spacing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    /// Largest offset as a fraction of the local spacing, in `[0, 0.49]`.
    pub magnitude: f64,
    pub seed: u64,
}

pub const MAX_PERTURBATION: f64 = 0.49;

/// Structured grid of squares, `(nx + 1) * (ny + 1)` nodes in row-major order.
pub fn gen_grid(spec: &GridSpec) -> Result<QuadMesh> {
    spec.validate()?;
    let GridSpec {
        nx,
        ny,
        spacing,
        origin,
    } = *spec;
    let mut pos = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            pos.push(Point3::new(
                origin[0] + i as f64 * spacing,
                origin[1] + j as f64 * spacing,
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut quads = Vec::with_capacity(nx * ny);
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
    QuadMesh::new(pos, quads)
}

/// Shift every interior node by a random offset of length at most
/// `magnitude` times its shortest incident edge. Boundary nodes stay put.
pub fn perturb(mesh: QuadMesh, spec: &PerturbSpec) -> Result<QuadMesh> {
    if !(0.0..=MAX_PERTURBATION).contains(&spec.magnitude) {
        return Err(Error::InvalidParameter(format!(
            "perturbation magnitude {} outside [0, {MAX_PERTURBATION}]",
            spec.magnitude
        )));
    }
    if spec.magnitude == 0.0 {
        return Ok(mesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let original = mesh.clone();
    let mut out = mesh;
    for n in (0..original.node_count()).map(NodeId) {
        if original.is_boundary(n) || original.incident_quads(n).is_empty() {
            continue;
        }
        let here = original.position(n);
        let spacing = original
            .edge_neighbors(n)
            .iter()
            .map(|&m| (original.position(m) - here).norm())
            .fold(f64::INFINITY, f64::min);
        let (dx, dy) = loop {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            if x * x + y * y <= 1.0 {
                break (x, y);
            }
        };
        let r = spec.magnitude * spacing;
        out.set_position(n, Point3::new(here.x + r * dx, here.y + r * dy, here.z));
    }
    Ok(out)
}

/// Quad mesh of a disk: a square core of `2 * rings` cells per side, wrapped
/// by `rings` layers that blend the core outline onto the circle.
pub fn gen_disk_mesh(radius: f64, rings: usize) -> Result<QuadMesh> {
    if rings < 2 {
        return Err(Error::InvalidParameter(format!(
            "disk mesh needs rings >= 2, got {rings}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius {radius} must be > 0"
        )));
    }
    let m = 2 * rings;
    let half = 0.5 * radius;
    let cell = 2.0 * half / m as f64;

    let mut pos: Vec<Point3<f64>> = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            pos.push(Point3::new(
                -half + i as f64 * cell,
                -half + j as f64 * cell,
                0.0,
            ));
        }
    }
    let core = |i: usize, j: usize| j * (m + 1) + i;
    let mut quads = Vec::new();
    for j in 0..m {
        for i in 0..m {
            quads.push(Quad::new(
                core(i, j),
                core(i + 1, j),
                core(i + 1, j + 1),
                core(i, j + 1),
            ));
        }
    }

    // Core outline, counter-clockwise from the lower-left corner.
    let mut outline = Vec::with_capacity(4 * m);
    outline.extend((0..m).map(|i| core(i, 0)));
    outline.extend((0..m).map(|j| core(m, j)));
    outline.extend((0..m).map(|i| core(m - i, m)));
    outline.extend((0..m).map(|j| core(0, m - j)));
    let per = outline.len();

    let mut prev = outline.clone();
    for layer in 1..=rings {
        let t = layer as f64 / rings as f64;
        let ring: Vec<usize> = outline
            .iter()
            .map(|&k| {
                let s = pos[k];
                let r = (s.x * s.x + s.y * s.y).sqrt();
                let circle = Point2::new(s.x * radius / r, s.y * radius / r);
                let p = if layer == rings {
                    circle
                } else {
                    Point2::new(s.x + t * (circle.x - s.x), s.y + t * (circle.y - s.y))
                };
                pos.push(Point3::new(p.x, p.y, 0.0));
                pos.len() - 1
            })
            .collect();
        for k in 0..per {
            let k1 = (k + 1) % per;
            quads.push(Quad::new(prev[k], ring[k], ring[k1], prev[k1]));
        }
        prev = ring;
    }
    QuadMesh::new(pos, quads)
}

/// Set each node's height from `surface`.
pub fn lift_to_surface(mesh: QuadMesh, surface: &HeightSurface) -> QuadMesh {
    let pos = mesh
        .positions()
        .iter()
        .map(|p| Point3::new(p.x, p.y, surface.eval(p.x, p.y)))
        .collect();
    mesh.with_positions(pos)
}
