//! JSON run and generator configuration.

use std::path::PathBuf;

use quadsmooth::io::SurfaceSpec;
use quadsmooth::{
    paraboloid_surface, Algorithm, GridSpec, HeightSurface, PerturbSpec, UpdateOrder, WeightScheme,
};
use serde::{Deserialize, Serialize};

/// Height surface named on the command line or in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LiftSpec {
    Named(NamedSurface),
    Explicit(HeightSurface),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NamedSurface {
    /// z = 200 - 0.02 (x^2 + y^2)
    Paraboloid,
    /// z = 0
    Flat,
}

impl LiftSpec {
    pub fn surface(&self) -> HeightSurface {
        match *self {
            LiftSpec::Named(NamedSurface::Paraboloid) => paraboloid_surface(),
            LiftSpec::Named(NamedSurface::Flat) => HeightSurface::flat(0.0),
            LiftSpec::Explicit(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeshShape {
    Grid(GridSpec),
    Disk { radius: f64, rings: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(flatten)]
    pub shape: MeshShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Mesh(PathBuf),
    Generate(GenSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    #[default]
    Fixed,
    /// Run the Laplacian baseline first and cap the iteration count at its
    /// iteration count.
    LaplacianCapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlgoName {
    Laplacian,
    Tbase,
}

/// One algorithm selection: `laplacian`, or `tbase` with variant 1, 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgoSpec {
    pub algo: AlgoName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<u8>,
}

impl AlgoSpec {
    pub fn resolve(&self) -> Result<Algorithm, String> {
        match (self.algo, self.variant) {
            (AlgoName::Laplacian, None) => Ok(Algorithm::Laplacian),
            (AlgoName::Laplacian, Some(_)) => Err("--variant only applies to --algo tbase".into()),
            (AlgoName::Tbase, v) => {
                let v = v.unwrap_or(1);
                WeightScheme::from_variant(v)
                    .map(Algorithm::Tbase)
                    .ok_or_else(|| format!("variant must be 1, 2 or 3, got {v}"))
            }
        }
    }
}

/// Parse `ls`, `laplacian`, `1`..`3`, `vari.1`, `tbase2`...
pub fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    let t = s.trim().to_ascii_lowercase();
    match t.as_str() {
        "ls" | "laplacian" => return Ok(Algorithm::Laplacian),
        _ => {}
    }
    let digits = t
        .trim_start_matches("vari.")
        .trim_start_matches("vari")
        .trim_start_matches("tbase")
        .trim_start_matches(':');
    digits
        .parse::<u8>()
        .ok()
        .and_then(WeightScheme::from_variant)
        .map(Algorithm::Tbase)
        .ok_or_else(|| format!("unknown algorithm `{s}` (use ls, 1, 2 or 3)"))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// `compare` writes one mesh per algorithm here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Everything a `smooth` or `compare` run needs. Command-line flags override
/// the fields they name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Mesh label in reports; defaults to the input file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub input: InputSource,
    #[serde(default = "default_algo")]
    pub algorithm: AlgoSpec,
    /// Algorithms for `compare`; the original mesh row is always included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithms: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub order: UpdateOrder,
    #[serde(default = "yes")]
    pub fix_boundary: bool,
    #[serde(default)]
    pub output: Outputs,
}

fn default_algo() -> AlgoSpec {
    AlgoSpec {
        algo: AlgoName::Tbase,
        variant: Some(1),
    }
}

fn yes() -> bool {
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names() {
        assert_eq!(parse_algorithm("LS").unwrap(), Algorithm::Laplacian);
        assert_eq!(
            parse_algorithm("Vari.2").unwrap(),
            Algorithm::Tbase(WeightScheme::InverseSqrtLength)
        );
        assert_eq!(
            parse_algorithm("3").unwrap(),
            Algorithm::Tbase(WeightScheme::InverseLength)
        );
        assert!(parse_algorithm("4").is_err());
    }

    #[test]
    fn run_config_json() {
        let json = r#"{
            "input": {"generate": {"kind": "grid", "nx": 4, "ny": 3, "perturb": {"magnitude": 0.2, "seed": 5}}},
            "algorithm": {"algo": "tbase", "variant": 2},
            "surface": {"kind": "kriging"},
            "budget": "laplacian-capped"
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert!(matches!(
            cfg.input,
            InputSource::Generate(GenSpec {
                shape: MeshShape::Grid(_),
                ..
            })
        ));
        assert_eq!(
            cfg.algorithm.resolve().unwrap(),
            Algorithm::Tbase(WeightScheme::InverseSqrtLength)
        );
        assert_eq!(cfg.budget, Budget::LaplacianCapped);
        assert!(cfg.fix_boundary);
        assert!(matches!(
            cfg.surface,
            Some(SurfaceSpec::Kriging { neighbors: 16, .. })
        ));

        let lift: GenSpec = serde_json::from_str(
            r#"{"kind": "disk", "radius": 100, "rings": 8, "lift": "paraboloid"}"#,
        )
        .unwrap();
        assert_eq!(lift.lift.unwrap().surface(), paraboloid_surface());
    }
}
