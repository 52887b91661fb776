//! Element quality and mesh statistics.
//!
//! `lambda` is a planar shape measure: 1 for a square, 0 when any three
//! corners are collinear. `gamma` extends it to warped quads by averaging
//! `lambda` over the quad projected onto the plane of each of its four
//! corner triangles.

use std::fmt;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{is_collinear, signed_area_xy, QuadMesh};

/// Lower edges of the five histogram bins. Each bin is closed below and
/// open above, except the last one which also includes 1.0.
pub const BIN_EDGES: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];
pub const BIN_LABELS: [&str; 5] = ["0.0~0.2", "0.2~0.4", "0.4~0.6", "0.6~0.8", "0.8~1.0"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Planar shape measure.
    Lambda,
    /// Warpage-aware measure for quads in 3D.
    #[default]
    Gamma,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lambda" => Ok(Metric::Lambda),
            "gamma" => Ok(Metric::Gamma),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

fn any_three_collinear(p: &[Point3<f64>; 4]) -> bool {
    (0..4).any(|i| is_collinear(&p[i], &p[(i + 1) % 4], &p[(i + 2) % 4]))
}

/// Shape quality of the quad `a b c d` (cyclic order).
pub fn lambda_quality(a: Point3<f64>, b: Point3<f64>, c: Point3<f64>, d: Point3<f64>) -> f64 {
    let p = [a, b, c, d];
    if any_three_collinear(&p) {
        return 0.0;
    }
    let mut num = 1.0;
    let mut den = 1.0;
    for i in 0..4 {
        let here = p[i];
        let e1: Vector3<f64> = p[(i + 1) % 4] - here;
        let e2: Vector3<f64> = p[(i + 3) % 4] - here;
        num *= e1.cross(&e2).norm();
        den *= e1.norm_squared() + e2.norm_squared();
    }
    if den == 0.0 {
        return 0.0;
    }
    (2.0 * (num / den).powf(0.25)).clamp(0.0, 1.0)
}

/// Warpage-aware quality: mean of `lambda` over the four corner-triangle
/// projections.
pub fn gamma_quality(a: Point3<f64>, b: Point3<f64>, c: Point3<f64>, d: Point3<f64>) -> f64 {
    let p = [a, b, c, d];
    if any_three_collinear(&p) {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..4 {
        let (o, q, r) = (p[i], p[(i + 1) % 4], p[(i + 2) % 4]);
        let n = (q - o).cross(&(r - o));
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let n = n / len;
        let proj = p.map(|x| x - n * (x - o).dot(&n));
        sum += lambda_quality(proj[0], proj[1], proj[2], proj[3]);
    }
    sum / 4.0
}

pub fn element_quality(points: &[Point3<f64>; 4], metric: Metric) -> f64 {
    let [a, b, c, d] = *points;
    match metric {
        Metric::Lambda => lambda_quality(a, b, c, d),
        Metric::Gamma => gamma_quality(a, b, c, d),
    }
}

/// Per-element qualities with mean, root-mean-square deviation, and the
/// five-bin histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub metric: Metric,
    pub per_element: Vec<f64>,
    pub mq: f64,
    pub mse: f64,
    pub histogram: [usize; 5],
    /// Elements with non-positive signed area in the xy projection.
    pub inverted: usize,
}

pub fn bin_index(q: f64) -> usize {
    BIN_EDGES.iter().rposition(|&lo| q >= lo).unwrap_or(0)
}

impl QualityReport {
    pub fn from_values(values: Vec<f64>, metric: Metric, inverted: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let n = values.len() as f64;
        // A rounded mean can miss a uniform value by an ulp; keep MSE exactly 0 then.
        let uniform = values.iter().all(|&v| v == values[0]);
        let mq = if uniform {
            values[0]
        } else {
            values.iter().sum::<f64>() / n
        };
        let mse = (values.iter().map(|v| (v - mq).powi(2)).sum::<f64>() / n).sqrt();
        let mut histogram = [0usize; 5];
        for &v in &values {
            histogram[bin_index(v)] += 1;
        }
        Ok(QualityReport {
            metric,
            per_element: values,
            mq,
            mse,
            histogram,
            inverted,
        })
    }

    pub fn percentages(&self) -> [f64; 5] {
        let n = self.per_element.len() as f64;
        self.histogram.map(|c| 100.0 * c as f64 / n)
    }

    pub fn csv_header() -> String {
        let mut cols = vec!["mesh".to_string(), "algorithm".to_string()];
        cols.extend(BIN_LABELS.iter().map(|s| s.to_string()));
        cols.extend(["MQ", "MSE", "inverted"].map(String::from));
        cols.join(",")
    }

    pub fn csv_row(&self, mesh: &str, algorithm: &str) -> String {
        let mut cols = vec![mesh.to_string(), algorithm.to_string()];
        cols.extend(self.percentages().iter().map(|p| format!("{p:.2}%")));
        cols.push(format!("{:.4}", self.mq));
        cols.push(format!("{:.4}", self.mse));
        cols.push(self.inverted.to_string());
        cols.join(",")
    }
}

/// Quality of every element, MQ and MSE.
pub fn mesh_quality_report(mesh: &QuadMesh, metric: Metric) -> Result<QualityReport> {
    if mesh.quad_count() == 0 {
        return Err(Error::EmptyMesh);
    }
    let mut values = Vec::with_capacity(mesh.quad_count());
    let mut inverted = 0;
    for q in 0..mesh.quad_count() {
        let pts = mesh.quad_points(q);
        values.push(element_quality(&pts, metric));
        if signed_area_xy(&pts) <= 0.0 {
            inverted += 1;
        }
    }
    QualityReport::from_values(values, metric, inverted)
}

/// Rows in the comparison-table layout: one row per algorithm run.
#[derive(Debug, Clone, Default)]
pub struct ReportTable {
    pub rows: Vec<(String, String, QualityReport)>,
}

impl ReportTable {
    pub fn push(
        &mut self,
        mesh: impl Into<String>,
        algorithm: impl Into<String>,
        r: QualityReport,
    ) {
        self.rows.push((mesh.into(), algorithm.into(), r));
    }

    pub fn to_csv(&self) -> String {
        let mut out = QualityReport::csv_header();
        out.push('\n');
        for (mesh, algo, r) in &self.rows {
            out.push_str(&r.csv_row(mesh, algo));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for ReportTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mesh_w = self
            .rows
            .iter()
            .map(|r| r.0.len())
            .chain(std::iter::once(4))
            .max()
            .unwrap_or(4);
        let algo_w = self
            .rows
            .iter()
            .map(|r| r.1.len())
            .chain(std::iter::once(9))
            .max()
            .unwrap_or(9);
        write!(f, "{:<mesh_w$}  {:<algo_w$}", "Mesh", "Algorithm")?;
        for l in BIN_LABELS {
            write!(f, "  {l:>8}")?;
        }
        writeln!(f, "  {:>6}  {:>6}  {:>8}", "MQ", "MSE", "inverted")?;
        for (mesh, algo, r) in &self.rows {
            write!(f, "{mesh:<mesh_w$}  {algo:<algo_w$}")?;
            for p in r.percentages() {
                write!(f, "  {:>8}", format!("{p:.2}%"))?;
            }
            writeln!(f, "  {:>6.4}  {:>6.4}  {:>8}", r.mq, r.mse, r.inverted)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    #[test]
    fn lambda_anchors() {
        let sq = lambda_quality(p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.), p(0., 1., 0.));
        assert_eq!(sq, 1.0);
        let collinear = lambda_quality(p(0., 0., 0.), p(1., 0., 0.), p(2., 0., 0.), p(0., 1., 0.));
        assert_eq!(collinear, 0.0);
        let rect = lambda_quality(p(0., 0., 0.), p(2., 0., 0.), p(2., 1., 0.), p(0., 1., 0.));
        assert!((rect - 0.8).abs() < 1e-12);
    }

    #[test]
    fn coincident_corners_score_zero() {
        let q = lambda_quality(p(0., 0., 0.), p(0., 0., 0.), p(1., 1., 0.), p(0., 1., 0.));
        assert_eq!(q, 0.0);
        let g = gamma_quality(p(0., 0., 0.), p(0., 0., 0.), p(1., 1., 0.), p(0., 1., 0.));
        assert_eq!(g, 0.0);
    }

    #[test]
    fn gamma_of_planar_square_and_lifted_corner() {
        let g = gamma_quality(p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.), p(0., 1., 0.));
        assert!((g - 1.0).abs() < 1e-15);
        let warped = gamma_quality(p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.5), p(0., 1., 0.));
        assert!(warped < 1.0);
        // Independent evaluation (explicit plane projection in a separate script).
        assert!((warped - 0.985_756_657_988_873_7).abs() < 1e-12, "{warped}");
    }

    #[test]
    fn report_statistics() {
        let r = QualityReport::from_values(vec![1.0, 1.0, 0.8], Metric::Lambda, 0).unwrap();
        assert!((r.mq - 0.933_333_333_333_333_3).abs() < 1e-12);
        assert!((r.mse - 0.094_280_904_158_206_32).abs() < 1e-12);
        assert_eq!(r.histogram, [0, 0, 0, 0, 3]);

        let r = QualityReport::from_values(vec![1.0; 4], Metric::Lambda, 0).unwrap();
        assert_eq!((r.mq, r.mse), (1.0, 0.0));
        assert_eq!(r.percentages(), [0.0, 0.0, 0.0, 0.0, 100.0]);
        assert!(QualityReport::from_values(vec![], Metric::Lambda, 0).is_err());
    }

    #[test]
    fn bins_are_closed_below() {
        assert_eq!(bin_index(0.0), 0);
        assert_eq!(bin_index(0.2), 1);
        assert_eq!(bin_index(0.199_999), 0);
        assert_eq!(bin_index(0.8), 4);
        assert_eq!(bin_index(1.0), 4);
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            QualityReport::csv_header(),
            "mesh,algorithm,0.0~0.2,0.2~0.4,0.4~0.6,0.6~0.8,0.8~1.0,MQ,MSE,inverted"
        );
        let r = QualityReport::from_values(vec![1.0, 0.5], Metric::Lambda, 0).unwrap();
        assert_eq!(
            r.csv_row("m", "LS"),
            "m,LS,0.00%,0.00%,50.00%,0.00%,50.00%,0.7500,0.2500,0"
        );
    }
}
