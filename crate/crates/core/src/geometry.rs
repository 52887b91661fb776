//! Height surfaces `z = f(x, y)`, vertex normals, and projection of points
//! onto a surface along a direction.

use nalgebra::{Point3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{NodeId, QuadMesh};

/// Quadratic height field
/// `z = c + cx*x + cy*y + cxx*x^2 + cxy*x*y + cyy*y^2`.
///
/// Covers planes and the paraboloid test surface; the gradient is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct HeightSurface {
    pub c: f64,
    pub cx: f64,
    pub cy: f64,
    pub cxx: f64,
    pub cxy: f64,
    pub cyy: f64,
}

impl HeightSurface {
    pub fn flat(z: f64) -> Self {
        HeightSurface {
            c: z,
            ..Default::default()
        }
    }

    pub fn plane(c: f64, cx: f64, cy: f64) -> Self {
        HeightSurface {
            c,
            cx,
            cy,
            ..Default::default()
        }
    }

    /// `z = apex - k (x^2 + y^2)`.
    pub fn paraboloid(apex: f64, k: f64) -> Self {
        HeightSurface {
            c: apex,
            cxx: -k,
            cyy: -k,
            ..Default::default()
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c + self.cx * x + self.cy * y + self.cxx * x * x + self.cxy * x * y + self.cyy * y * y
    }

    /// `(df/dx, df/dy)`.
    pub fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.cx + 2.0 * self.cxx * x + self.cxy * y,
            self.cy + self.cxy * x + 2.0 * self.cyy * y,
        )
    }

    /// Upward unit normal of the surface at `(x, y)`.
    pub fn normal(&self, x: f64, y: f64) -> Unit<Vector3<f64>> {
        let (gx, gy) = self.grad(x, y);
        Unit::new_normalize(Vector3::new(-gx, -gy, 1.0))
    }

    /// Signed vertical offset of `p` from the surface.
    pub fn residual(&self, p: &Point3<f64>) -> f64 {
        p.z - self.eval(p.x, p.y)
    }
}

/// `z = 200 - 0.02 (x^2 + y^2)`.
pub fn paraboloid_surface() -> HeightSurface {
    HeightSurface::paraboloid(200.0, 0.02)
}

/// Sum of the four corner cross products of a quad. Its direction is the quad
/// normal and its length is four times the (planar) quad area.
pub fn quad_normal_sum(p: &[Point3<f64>; 4]) -> Vector3<f64> {
    (0..4)
        .map(|i| {
            let here = p[i];
            (p[(i + 1) % 4] - here).cross(&(p[(i + 3) % 4] - here))
        })
        .sum()
}

/// Area-weighted mean of the incident quad normals.
pub fn vertex_normal(mesh: &QuadMesh, node: NodeId) -> Result<Unit<Vector3<f64>>> {
    let sum: Vector3<f64> = mesh
        .incident_quads(node)
        .iter()
        .map(|&q| quad_normal_sum(&mesh.quad_points(q)) / 4.0)
        .sum();
    let len = sum.norm();
    if !len.is_finite() || len <= 0.0 {
        return Err(Error::ProjectionFailed {
            node: Some(node.0),
            reason: "vertex normal has zero length".into(),
        });
    }
    Ok(Unit::new_unchecked(sum / len))
}

/// Absolute residual the projection iterates to.
const ROOT_TOL: f64 = 1e-12;
/// Residual accepted when the bracket cannot shrink further.
pub const PROJECTION_TOL: f64 = 1e-10;
const SCAN_STEPS: usize = 256;
const MAX_ROOT_ITERS: usize = 200;

/// Move `p` along `n` onto `surface`: the root of
/// `g(t) = p.z + t n.z - f(p.x + t n.x, p.y + t n.y)` nearest to zero within
/// `|t| <= max_step`, found by Newton steps safeguarded with bisection.
pub fn project_along_normal(
    p: Point3<f64>,
    n: &Unit<Vector3<f64>>,
    surface: &HeightSurface,
    max_step: f64,
) -> Result<Point3<f64>> {
    let at = |t: f64| p + n.as_ref() * t;
    let g = |t: f64| surface.residual(&at(t));
    let dg = |t: f64| {
        let q = at(t);
        let (fx, fy) = surface.grad(q.x, q.y);
        n.z - (fx * n.x + fy * n.y)
    };
    let fail = |reason: String| Error::ProjectionFailed { node: None, reason };

    let g0 = g(0.0);
    if g0.abs() <= ROOT_TOL {
        return Ok(p);
    }
    if max_step.is_nan() || max_step <= 0.0 {
        return Err(fail(format!("search bracket {max_step} is not positive")));
    }

    // Closest sign change on either side of t = 0.
    let mut bracket = None;
    let (mut prev_pos, mut prev_neg) = ((0.0, g0), (0.0, g0));
    for k in 1..=SCAN_STEPS {
        let t = max_step * k as f64 / SCAN_STEPS as f64;
        let gp = g(t);
        if gp == 0.0 {
            return Ok(at(t));
        }
        if gp.signum() != prev_pos.1.signum() {
            bracket = Some((prev_pos, (t, gp)));
            break;
        }
        prev_pos = (t, gp);
        let gn = g(-t);
        if gn == 0.0 {
            return Ok(at(-t));
        }
        if gn.signum() != prev_neg.1.signum() {
            bracket = Some(((-t, gn), prev_neg));
            break;
        }
        prev_neg = (-t, gn);
    }

    let t = match bracket {
        Some(((a, ga), (b, gb))) => safeguarded_newton(&g, &dg, a, ga, b, gb),
        None => newton_unbracketed(&g, &dg, max_step),
    };
    match t {
        Some(t) if g(t).abs() < PROJECTION_TOL => Ok(at(t)),
        Some(t) => Err(fail(format!(
            "root search stalled with residual {:e}",
            g(t)
        ))),
        None => Err(fail(format!(
            "no surface crossing within {max_step} along the normal"
        ))),
    }
}

fn safeguarded_newton(
    g: &impl Fn(f64) -> f64,
    dg: &impl Fn(f64) -> f64,
    mut lo: f64,
    glo: f64,
    mut hi: f64,
    _ghi: f64,
) -> Option<f64> {
    let lo_sign = glo.signum();
    // Start from the end nearer to zero.
    let mut t = if lo.abs() < hi.abs() { lo } else { hi };
    for _ in 0..MAX_ROOT_ITERS {
        let gt = g(t);
        if gt.abs() <= ROOT_TOL {
            return Some(t);
        }
        if gt.signum() == lo_sign {
            lo = t;
        } else {
            hi = t;
        }
        let d = dg(t);
        let newton = t - gt / d;
        let inside = newton.is_finite() && (newton - lo) * (newton - hi) < 0.0;
        let next = if inside { newton } else { 0.5 * (lo + hi) };
        if next == t || (hi - lo).abs() <= f64::EPSILON * t.abs().max(1.0) {
            return Some(next);
        }
        t = next;
    }
    Some(t)
}

fn newton_unbracketed(
    g: &impl Fn(f64) -> f64,
    dg: &impl Fn(f64) -> f64,
    max_step: f64,
) -> Option<f64> {
    let mut t = 0.0;
    for _ in 0..MAX_ROOT_ITERS {
        let gt = g(t);
        if gt.abs() <= ROOT_TOL {
            return (t.abs() <= max_step).then_some(t);
        }
        let d = dg(t);
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        t -= gt / d;
        if !t.is_finite() || t.abs() > max_step {
            return None;
        }
    }
    None
}
