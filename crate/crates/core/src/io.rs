//! Mesh exchange format, JSON sidecar, and kriging sample CSV.
//!
//! Mesh files are a Wavefront subset:
//!
//! ```text
//! # comment
//! v <x> <y> [<z>]
//! f <i> <j> <k> <l>
//! ```
//!
//! Face indices are 1-based and every face has exactly four corners
//! (`i/t/n` tokens are accepted, only the vertex index is used). `vt`, `vn`,
//! `o`, `g`, `s`, `usemtl` and `mtllib` lines are ignored. Coordinates are
//! written with 17 significant digits.
//!
//! The optional sidecar `<stem>.json` next to the mesh carries boundary node
//! indices (0-based) and the surface the mesh is bound to.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HeightSurface;
use crate::kriging::{kriging_fit, Variogram, DEFAULT_NEIGHBORS};
use crate::mesh::{Quad, QuadMesh};
use crate::surface::SurfaceBinding;

pub fn write_obj(mesh: &QuadMesh) -> String {
    let mut out = String::with_capacity(64 * (mesh.node_count() + mesh.quad_count()));
    let _ = writeln!(
        out,
        "# {} vertices, {} quads",
        mesh.node_count(),
        mesh.quad_count()
    );
    for p in mesh.positions() {
        let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    for q in mesh.quads() {
        let [a, b, c, d] = q.corners.map(|n| n.0 + 1);
        let _ = writeln!(out, "f {a} {b} {c} {d}");
    }
    out
}

fn parse_f64(tok: Option<&str>, line: usize, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Parse the exchange format into a validated mesh.
pub fn parse_obj(text: &str) -> Result<QuadMesh> {
    let mut positions = Vec::new();
    let mut quads = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut toks = content.split_whitespace();
        match toks.next() {
            None => {}
            Some("v") => {
                let x = parse_f64(toks.next(), line, "x")?;
                let y = parse_f64(toks.next(), line, "y")?;
                let z = match toks.next() {
                    Some(t) => parse_f64(Some(t), line, "z")?,
                    None => 0.0,
                };
                positions.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        let v = t.split('/').next().unwrap_or(t);
                        match v.parse::<usize>() {
                            Ok(k) if k >= 1 => Ok(k - 1),
                            _ => Err(Error::parse(line, format!("bad face index `{t}`"))),
                        }
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 4 {
                    return Err(Error::parse(
                        line,
                        format!("faces must be quads, got {} corners", idx.len()),
                    ));
                }
                quads.push(Quad::new(idx[0], idx[1], idx[2], idx[3]));
            }
            Some("vt" | "vn" | "o" | "g" | "s" | "usemtl" | "mtllib") => {}
            Some(other) => return Err(Error::parse(line, format!("unknown statement `{other}`"))),
        }
    }
    QuadMesh::new(positions, quads)
}

/// Where kriging samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "from", rename_all = "lowercase")]
pub enum SampleSource {
    /// The nodes of the input mesh.
    #[default]
    Nodes,
    /// A CSV file of `x,y,z` rows, relative to the sidecar or config file.
    Csv {
        path: PathBuf,
    },
    Inline {
        points: Vec<[f64; 3]>,
    },
}

/// Surface a mesh is bound to, as stored in sidecars and run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SurfaceSpec {
    #[default]
    None,
    Parametric {
        surface: HeightSurface,
    },
    Kriging {
        #[serde(default)]
        samples: SampleSource,
        #[serde(default)]
        variogram: Variogram,
        #[serde(default = "default_neighbors")]
        neighbors: usize,
    },
}

fn default_neighbors() -> usize {
    DEFAULT_NEIGHBORS
}

impl SurfaceSpec {
    /// Build the binding for `mesh`. Relative CSV paths resolve against `base`.
    pub fn bind(&self, mesh: &QuadMesh, base: &Path) -> Result<Option<SurfaceBinding>> {
        match self {
            SurfaceSpec::None => Ok(None),
            SurfaceSpec::Parametric { surface } => Ok(Some(SurfaceBinding::parametric(*surface))),
            SurfaceSpec::Kriging {
                samples,
                variogram,
                neighbors,
            } => {
                let points = match samples {
                    SampleSource::Nodes => mesh.positions().to_vec(),
                    SampleSource::Csv { path } => read_samples_csv(&base.join(path))?,
                    SampleSource::Inline { points } => points
                        .iter()
                        .map(|&[x, y, z]| Point3::new(x, y, z))
                        .collect(),
                };
                let model = kriging_fit(points, *variogram, *neighbors)?;
                Ok(Some(SurfaceBinding::interpolated(model)))
            }
        }
    }

    /// Copy with node-derived samples frozen inline, so the binding stays valid
    /// once the mesh has moved.
    pub fn freeze_samples(&self, original: &QuadMesh) -> SurfaceSpec {
        match self {
            SurfaceSpec::Kriging {
                samples: SampleSource::Nodes,
                variogram,
                neighbors,
            } => SurfaceSpec::Kriging {
                samples: SampleSource::Inline {
                    points: original
                        .positions()
                        .iter()
                        .map(|p| [p.x, p.y, p.z])
                        .collect(),
                },
                variogram: *variogram,
                neighbors: *neighbors,
            },
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Sidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<usize>>,
    #[serde(default)]
    pub surface: SurfaceSpec,
}

impl Sidecar {
    pub fn for_mesh(mesh: &QuadMesh, surface: SurfaceSpec) -> Self {
        let boundary = mesh
            .boundary_flags()
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Sidecar {
            boundary: Some(boundary),
            surface,
        }
    }

    /// Boundary list, if present, must agree with the mesh's edge topology.
    pub fn check(&self, mesh: &QuadMesh) -> Result<()> {
        if let Some(listed) = &self.boundary {
            let mut flags = vec![false; mesh.node_count()];
            for &i in listed {
                if i >= flags.len() {
                    return Err(Error::InvalidParameter(format!(
                        "sidecar boundary node {i} out of range"
                    )));
                }
                flags[i] = true;
            }
            if let Some(i) = (0..flags.len()).find(|&i| flags[i] != mesh.boundary_flags()[i]) {
                return Err(Error::InvalidParameter(format!(
                    "sidecar boundary flag for node {i} disagrees with mesh topology"
                )));
            }
        }
        Ok(())
    }
}

pub fn sidecar_path(mesh_path: &Path) -> PathBuf {
    mesh_path.with_extension("json")
}

pub fn write_mesh(path: &Path, mesh: &QuadMesh, sidecar: Option<&Sidecar>) -> Result<()> {
    fs::write(path, write_obj(mesh))?;
    if let Some(s) = sidecar {
        let mut json = serde_json::to_string_pretty(s)?;
        json.push('\n');
        fs::write(sidecar_path(path), json)?;
    }
    Ok(())
}

/// Read a mesh and, when present, its sidecar.
pub fn read_mesh(path: &Path) -> Result<(QuadMesh, Option<Sidecar>)> {
    let mesh = parse_obj(&fs::read_to_string(path)?)?;
    let side = sidecar_path(path);
    let sidecar = if side.exists() && side != path {
        let s: Sidecar = serde_json::from_str(&fs::read_to_string(&side)?)?;
        s.check(&mesh)?;
        Some(s)
    } else {
        None
    };
    Ok((mesh, sidecar))
}

/// `x,y,z` rows; a non-numeric first line is taken as a header.
pub fn parse_samples_csv(text: &str) -> Result<Vec<Point3<f64>>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && cols.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        if cols.len() != 3 {
            return Err(Error::parse(
                i + 1,
                format!("expected 3 columns, got {}", cols.len()),
            ));
        }
        let x = parse_f64(Some(cols[0]), i + 1, "x")?;
        let y = parse_f64(Some(cols[1]), i + 1, "y")?;
        let z = parse_f64(Some(cols[2]), i + 1, "z")?;
        out.push(Point3::new(x, y, z));
    }
    Ok(out)
}

pub fn read_samples_csv(path: &Path) -> Result<Vec<Point3<f64>>> {
    parse_samples_csv(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen::{gen_grid, perturb, GridSpec, PerturbSpec};

    #[test]
    fn parse_accepts_extras_and_rejects_triangles() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n";
        let m = parse_obj(text).unwrap();
        assert_eq!((m.node_count(), m.quad_count()), (4, 1));
        assert_eq!(m.positions()[2].z, 0.0);

        let tri = "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 3\n";
        assert!(matches!(parse_obj(tri), Err(Error::Parse { line: 4, .. })));
        let zero = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 0 1 2 3\n";
        assert!(parse_obj(zero).is_err());
        let range = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 9\n";
        assert!(matches!(
            parse_obj(range),
            Err(Error::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let g = gen_grid(&GridSpec::new(4, 3).with_spacing(0.1)).unwrap();
        let m = perturb(
            g,
            &PerturbSpec {
                magnitude: 0.3,
                seed: 7,
            },
        )
        .unwrap();
        let back = parse_obj(&write_obj(&m)).unwrap();
        assert_eq!(back.quads(), m.quads());
        for (a, b) in back.positions().iter().zip(m.positions()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn csv_samples_with_header() {
        let pts = parse_samples_csv("x,y,z\n0,0,1\n1, 0, 2.5\n\n").unwrap();
        assert_eq!(pts, vec![Point3::new(0., 0., 1.), Point3::new(1., 0., 2.5)]);
        assert!(parse_samples_csv("0,0\n").is_err());
    }

    #[test]
    fn sidecar_boundary_check() {
        let m = gen_grid(&GridSpec::new(2, 2)).unwrap();
        let s = Sidecar::for_mesh(&m, SurfaceSpec::None);
        assert_eq!(s.boundary.as_ref().unwrap().len(), 8);
        s.check(&m).unwrap();
        let bad = Sidecar {
            boundary: Some(vec![4]),
            surface: SurfaceSpec::None,
        };
        assert!(bad.check(&m).is_err());
        let json = serde_json::to_string(&Sidecar::for_mesh(
            &m,
            SurfaceSpec::Parametric {
                surface: HeightSurface::paraboloid(200.0, 0.02),
            },
        ))
        .unwrap();
        let back: Sidecar = serde_json::from_str(&json).unwrap();
        assert!(matches!(back.surface, SurfaceSpec::Parametric { .. }));
    }
}
