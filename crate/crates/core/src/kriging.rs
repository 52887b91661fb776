//! Ordinary kriging of heights over scattered `(x, y, z)` samples.
//!
//! Each query solves the bordered system
//!
//! ```text
//! | G  1 | |w|   |g0|
//! | 1' 0 | |m| = | 1|
//! ```
//!
//! over its `k` nearest samples, where `G[i][j] = variogram(|s_i - s_j|)` and
//! `g0[i] = variogram(|s_i - query|)`. The estimate is `sum(w_i z_i)`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, Point3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Variogram {
    /// `slope * h`.
    Linear { slope: f64 },
    /// `scale * h^exponent`, `0 < exponent < 2`.
    Power { scale: f64, exponent: f64 },
    /// Spherical model reaching `sill` at `range`.
    Spherical { sill: f64, range: f64 },
    /// `sill * (1 - exp(-3h / range))`.
    Exponential { sill: f64, range: f64 },
}

impl Default for Variogram {
    fn default() -> Self {
        Variogram::Linear { slope: 1.0 }
    }
}

impl Variogram {
    pub fn eval(&self, h: f64) -> f64 {
        match *self {
            Variogram::Linear { slope } => slope * h,
            Variogram::Power { scale, exponent } => scale * h.powf(exponent),
            Variogram::Spherical { sill, range } => {
                if h >= range {
                    sill
                } else {
                    let r = h / range;
                    sill * (1.5 * r - 0.5 * r * r * r)
                }
            }
            Variogram::Exponential { sill, range } => sill * (1.0 - (-3.0 * h / range).exp()),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Variogram::Linear { slope } => slope > 0.0,
            Variogram::Power { scale, exponent } => scale > 0.0 && exponent > 0.0 && exponent < 2.0,
            Variogram::Spherical { sill, range } | Variogram::Exponential { sill, range } => {
                sill > 0.0 && range > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Kriging(format!(
                "invalid variogram parameters {self:?}"
            )))
        }
    }
}

pub const DEFAULT_NEIGHBORS: usize = 16;
const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingModel {
    samples: Vec<Point3<f64>>,
    variogram: Variogram,
    neighbors: usize,
}

/// Validate the samples and keep them for lazy per-query solves.
pub fn kriging_fit(
    samples: Vec<Point3<f64>>,
    variogram: Variogram,
    neighbors: usize,
) -> Result<KrigingModel> {
    if samples.len() < 3 {
        return Err(Error::Kriging(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    if neighbors < 3 {
        return Err(Error::Kriging(format!(
            "neighborhood size must be >= 3, got {neighbors}"
        )));
    }
    variogram.validate()?;
    if let Some(p) = samples
        .iter()
        .find(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
    {
        return Err(Error::Kriging(format!("non-finite sample {p:?}")));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let key = |i: usize| (samples[i].x, samples[i].y);
    order.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap_or(Ordering::Equal));
    for w in order.windows(2) {
        if key(w[0]) == key(w[1]) {
            return Err(Error::Kriging(format!(
                "samples {} and {} share location ({}, {})",
                w[0].min(w[1]),
                w[0].max(w[1]),
                samples[w[0]].x,
                samples[w[0]].y
            )));
        }
    }
    Ok(KrigingModel {
        samples,
        variogram,
        neighbors,
    })
}

impl KrigingModel {
    pub fn samples(&self) -> &[Point3<f64>] {
        &self.samples
    }

    pub fn variogram(&self) -> Variogram {
        self.variogram
    }

    pub fn neighbors(&self) -> usize {
        self.neighbors
    }

    /// Indices of the `k` nearest samples, ordered by distance then index.
    fn nearest(&self, x: f64, y: f64) -> Vec<usize> {
        let d2 = |i: usize| {
            let s = &self.samples[i];
            (s.x - x).powi(2) + (s.y - y).powi(2)
        };
        let cmp = |a: &usize, b: &usize| d2(*a).total_cmp(&d2(*b)).then(a.cmp(b));
        let mut idx: Vec<usize> = (0..self.samples.len()).collect();
        let k = self.neighbors.min(idx.len());
        if k < idx.len() {
            idx.select_nth_unstable_by(k - 1, cmp);
            idx.truncate(k);
        }
        idx.sort_by(cmp);
        idx
    }

    /// Kriged height at `(x, y)`.
    pub fn predict(&self, x: f64, y: f64) -> Result<f64> {
        let local: Vec<Point3<f64>> = self
            .nearest(x, y)
            .into_iter()
            .map(|i| self.samples[i])
            .collect();
        ordinary_kriging(&local, &self.variogram, x, y)
    }
}

pub fn kriging_predict(model: &KrigingModel, x: f64, y: f64) -> Result<f64> {
    model.predict(x, y)
}

/// Ordinary kriging weights for `query` over all of `samples`.
pub fn kriging_weights(
    samples: &[Point3<f64>],
    variogram: &Variogram,
    x: f64,
    y: f64,
) -> Result<Vec<f64>> {
    let k = samples.len();
    if k == 0 {
        return Err(Error::Kriging("no samples".into()));
    }
    let dist = |a: &Point3<f64>, bx: f64, by: f64| ((a.x - bx).powi(2) + (a.y - by).powi(2)).sqrt();
    let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = DVector::<f64>::zeros(k + 1);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = variogram.eval(dist(&samples[i], samples[j].x, samples[j].y));
        }
        a[(i, k)] = 1.0;
        a[(k, i)] = 1.0;
        rhs[i] = variogram.eval(dist(&samples[i], x, y));
    }
    rhs[k] = 1.0;

    let solve = |m: DMatrix<f64>| {
        m.lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
    };
    let sol = match solve(a.clone()) {
        Some(s) => s,
        None => {
            for i in 0..k {
                a[(i, i)] += JITTER;
            }
            solve(a).ok_or_else(|| Error::Kriging(format!("singular system at ({x}, {y})")))?
        }
    };
    Ok(sol.iter().take(k).copied().collect())
}

/// Kriged height at `(x, y)` using every sample given.
pub fn ordinary_kriging(
    samples: &[Point3<f64>],
    variogram: &Variogram,
    x: f64,
    y: f64,
) -> Result<f64> {
    let w = kriging_weights(samples, variogram, x, y)?;
    Ok(w.iter().zip(samples).map(|(wi, s)| wi * s.z).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    fn linear() -> Variogram {
        Variogram::default()
    }

    #[test]
    fn fit_requirements() {
        let three = vec![p(0., 0., 1.), p(1., 0., 2.), p(0., 1., 3.)];
        assert!(kriging_fit(three.clone(), linear(), 16).is_ok());
        assert!(kriging_fit(three[..2].to_vec(), linear(), 16).is_err());
        let dup = vec![p(0., 0., 1.), p(1., 0., 2.), p(0., 0., 3.)];
        assert!(matches!(
            kriging_fit(dup, linear(), 16),
            Err(Error::Kriging(_))
        ));
        assert!(kriging_fit(three.clone(), linear(), 2).is_err());
        assert!(kriging_fit(three, Variogram::Linear { slope: -1.0 }, 16).is_err());
    }

    #[test]
    fn two_point_midpoint() {
        let s = [p(0., 0., 0.), p(2., 0., 2.)];
        let z = ordinary_kriging(&s, &linear(), 1.0, 0.0).unwrap();
        assert!((z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_three_point_midpoint() {
        // Reflection x -> -x with z -> 2 - z maps the set onto itself.
        let m = kriging_fit(
            vec![p(-1., 0., 0.), p(1., 0., 2.), p(0., 5., 1.)],
            linear(),
            16,
        )
        .unwrap();
        assert!((m.predict(0.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field() {
        let samples: Vec<_> = (0..25)
            .map(|i| {
                p(
                    (i % 5) as f64 * 1.3,
                    (i / 5) as f64 * 0.7 + 0.1 * (i % 3) as f64,
                    4.2,
                )
            })
            .collect();
        let m = kriging_fit(samples, linear(), 9).unwrap();
        for &(x, y) in &[(0.3, 0.2), (2.9, 1.1), (-4.0, 8.0)] {
            assert!((m.predict(x, y).unwrap() - 4.2).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_at_samples_for_each_variogram() {
        let samples: Vec<_> = (0..36)
            .map(|i| {
                let (x, y) = (
                    (i % 6) as f64 * 2.0 + 0.3 * (i % 4) as f64,
                    (i / 6) as f64 * 2.0,
                );
                p(x, y, (0.3 * x).sin() + 0.1 * y * y)
            })
            .collect();
        for v in [
            linear(),
            Variogram::Power {
                scale: 0.5,
                exponent: 1.5,
            },
            Variogram::Spherical {
                sill: 2.0,
                range: 8.0,
            },
            Variogram::Exponential {
                sill: 1.0,
                range: 6.0,
            },
        ] {
            let m = kriging_fit(samples.clone(), v, 16).unwrap();
            for s in &samples {
                assert!((m.predict(s.x, s.y).unwrap() - s.z).abs() < 1e-8, "{v:?}");
            }
        }
    }

    #[test]
    fn nearest_neighbors_are_deterministic() {
        let samples: Vec<_> = (0..10).map(|i| p(i as f64, 0.0, i as f64)).collect();
        let m = kriging_fit(samples, linear(), 3).unwrap();
        assert_eq!(m.nearest(4.5, 0.0), vec![4, 5, 3]);
    }
}
