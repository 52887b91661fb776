use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use quadsmooth::io::{self, SampleSource, Sidecar, SurfaceSpec};
use quadsmooth::surface::INTERPOLATED_ITERATIONS;
use quadsmooth::{
    gen_disk_mesh, gen_grid, lift_to_surface, mesh_quality_report, perturb, smooth_mesh, Algorithm,
    GridSpec, HeightSurface, IterationStats, Metric, PerturbSpec, QuadMesh, ReportTable,
    SmootherConfig, SurfaceBinding, WeightScheme,
};
use serde::Serialize;

use crate::config::{
    parse_algorithm, AlgoSpec, Budget, GenSpec, InputSource, LiftSpec, MeshShape, NamedSurface,
    Outputs, RunConfig,
};
use crate::{
    usage, CompareArgs, GenerateArgs, QualityArgs, RunArgs, ShapeCmd, SmoothArgs, SurfaceChoice,
};

/// Iteration cap when neither flags nor config give one and the surface is
/// not interpolated.
const DEFAULT_MAX_ITERATIONS: usize = 1000;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn build_mesh(spec: &GenSpec) -> Result<(QuadMesh, SurfaceSpec)> {
    let mesh = match &spec.shape {
        MeshShape::Grid(g) => gen_grid(g),
        MeshShape::Disk { radius, rings } => gen_disk_mesh(*radius, *rings),
    }
    .map_err(|e| usage(e.to_string()))?;
    let mesh = match &spec.perturb {
        Some(p) => perturb(mesh, p).map_err(|e| usage(e.to_string()))?,
        None => mesh,
    };
    Ok(match spec.lift {
        Some(lift) => {
            let surface = lift.surface();
            (
                lift_to_surface(mesh, &surface),
                SurfaceSpec::Parametric { surface },
            )
        }
        None => (mesh, SurfaceSpec::None),
    })
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let mut spec: GenSpec = match (&a.config, &a.shape) {
        (Some(_), Some(_)) => {
            return Err(usage(
                "give either --config or a shape subcommand, not both",
            ))
        }
        (None, None) => {
            return Err(usage(
                "missing shape: use `generate grid`, `generate disk` or --config",
            ))
        }
        (Some(path), None) => read_json(path)?,
        (None, Some(shape)) => GenSpec {
            shape: match *shape {
                ShapeCmd::Grid {
                    nx,
                    ny,
                    spacing,
                    origin,
                } => {
                    let [x, y] = origin.unwrap_or([0.0, 0.0]);
                    MeshShape::Grid(
                        GridSpec::new(nx, ny)
                            .with_spacing(spacing)
                            .with_origin(x, y),
                    )
                }
                ShapeCmd::Disk { radius, rings } => MeshShape::Disk { radius, rings },
            },
            perturb: None,
            lift: None,
        },
    };
    if let Some(magnitude) = a.perturb {
        spec.perturb = Some(PerturbSpec {
            magnitude,
            seed: a.seed,
        });
    }
    if let Some(named) = a.lift {
        spec.lift = Some(LiftSpec::Named(named));
    }
    let output = a.output.ok_or_else(|| usage("missing -o/--output"))?;
    let (mesh, surface) = build_mesh(&spec)?;
    io::write_mesh(&output, &mesh, Some(&Sidecar::for_mesh(&mesh, surface)))
        .with_context(|| format!("writing {}", output.display()))?;
    println!(
        "{} vertices, {} faces",
        mesh.node_count(),
        mesh.quad_count()
    );
    Ok(())
}

/// A run config with command-line overrides applied and its input loaded.
struct Prepared {
    name: String,
    original: QuadMesh,
    /// Surface spec with every sample source made self-contained.
    surface: SurfaceSpec,
    binding: Option<SurfaceBinding>,
    config: RunConfig,
}

fn prepare(run: &RunArgs) -> Result<Prepared> {
    let (mut config, config_dir) = match &run.config {
        Some(path) => {
            let mut config: RunConfig = read_json(path)?;
            let dir = parent_dir(path);
            let o = &mut config.output;
            for p in [&mut o.mesh, &mut o.stats, &mut o.report, &mut o.dir]
                .into_iter()
                .flatten()
            {
                *p = dir.join(&*p);
            }
            (config, dir)
        }
        None => {
            let input = run
                .input
                .clone()
                .ok_or_else(|| usage("missing input mesh (positional argument or --config)"))?;
            (
                RunConfig {
                    name: None,
                    input: InputSource::Mesh(input),
                    algorithm: AlgoSpec {
                        algo: crate::config::AlgoName::Tbase,
                        variant: Some(1),
                    },
                    algorithms: None,
                    surface: None,
                    tolerance: None,
                    max_iterations: None,
                    budget: Budget::Fixed,
                    order: Default::default(),
                    fix_boundary: true,
                    output: Outputs::default(),
                },
                PathBuf::new(),
            )
        }
    };
    if let Some(input) = &run.input {
        config.input = InputSource::Mesh(input.clone());
    }
    if run.tolerance.is_some() {
        config.tolerance = run.tolerance;
    }
    if run.max_iterations.is_some() {
        config.max_iterations = run.max_iterations;
    }
    if let Some(b) = run.budget {
        config.budget = b;
    }
    if let Some(o) = run.order {
        config.order = o.into();
    }
    if run.free_boundary {
        config.fix_boundary = false;
    }

    // Relative paths inside the config resolve against the config file;
    // paths given on the command line resolve against the working directory.
    let (original, inherent, name, base) = match &config.input {
        InputSource::Mesh(path) => {
            let path = if run.input.is_some() {
                path.clone()
            } else {
                config_dir.join(path)
            };
            let (mesh, sidecar) =
                io::read_mesh(&path).with_context(|| format!("reading {}", path.display()))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "mesh".into());
            (mesh, sidecar.map(|s| s.surface), name, parent_dir(&path))
        }
        InputSource::Generate(spec) => {
            let (mesh, surface) = build_mesh(spec)?;
            let name = match spec.shape {
                MeshShape::Grid(_) => "grid",
                MeshShape::Disk { .. } => "disk",
            };
            (mesh, Some(surface), name.to_string(), config_dir.clone())
        }
    };
    let name = config.name.clone().unwrap_or(name);

    let (mut surface, surface_base) = match run.surface {
        SurfaceChoice::Auto => match &config.surface {
            Some(s) => (s.clone(), config_dir.clone()),
            None => (inherent.unwrap_or_default(), base),
        },
        SurfaceChoice::None => (SurfaceSpec::None, PathBuf::new()),
        SurfaceChoice::Paraboloid | SurfaceChoice::Flat => {
            let named = if run.surface == SurfaceChoice::Flat {
                NamedSurface::Flat
            } else {
                NamedSurface::Paraboloid
            };
            let surface: HeightSurface = LiftSpec::Named(named).surface();
            (SurfaceSpec::Parametric { surface }, PathBuf::new())
        }
        SurfaceChoice::Kriging => (
            SurfaceSpec::Kriging {
                samples: SampleSource::Nodes,
                variogram: Default::default(),
                neighbors: quadsmooth::kriging::DEFAULT_NEIGHBORS,
            },
            PathBuf::new(),
        ),
    };
    if let SurfaceSpec::Kriging {
        samples, neighbors, ..
    } = &mut surface
    {
        if let Some(csv) = &run.samples {
            *samples = SampleSource::Csv { path: csv.clone() };
        }
        if let Some(k) = run.neighbors {
            *neighbors = k;
        }
    } else if run.samples.is_some() || run.neighbors.is_some() {
        return Err(usage("--samples and --neighbors need a kriging surface"));
    }
    let surface_base = if run.samples.is_some() {
        PathBuf::new()
    } else {
        surface_base
    };
    let surface = self_contained(surface, &original, &surface_base)?;
    let binding = surface.bind(&original, &surface_base)?;
    Ok(Prepared {
        name,
        original,
        surface,
        binding,
        config,
    })
}

/// Inline node or CSV samples so the surface no longer depends on the input
/// mesh or on relative paths.
fn self_contained(spec: SurfaceSpec, original: &QuadMesh, base: &Path) -> Result<SurfaceSpec> {
    Ok(match spec {
        SurfaceSpec::Kriging {
            samples: SampleSource::Csv { path },
            variogram,
            neighbors,
        } => {
            let full = base.join(&path);
            let points = io::read_samples_csv(&full)
                .with_context(|| format!("reading {}", full.display()))?;
            SurfaceSpec::Kriging {
                samples: SampleSource::Inline {
                    points: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
                },
                variogram,
                neighbors,
            }
        }
        other => other.freeze_samples(original),
    })
}

impl Prepared {
    fn smoother(&self, algorithm: Algorithm) -> Result<SmootherConfig> {
        let max_iterations = self.config.max_iterations.unwrap_or(match self.binding {
            Some(SurfaceBinding::Interpolated { .. }) => INTERPOLATED_ITERATIONS,
            _ => DEFAULT_MAX_ITERATIONS,
        });
        let config = SmootherConfig {
            algorithm,
            tolerance: self.config.tolerance,
            max_iterations,
            update_order: self.config.order,
            fix_boundary: self.config.fix_boundary,
        };
        config
            .resolved_tolerance(&self.original)
            .map_err(|e| usage(e.to_string()))?;
        Ok(config)
    }

    fn run(&self, config: &SmootherConfig) -> Result<(QuadMesh, IterationStats)> {
        Ok(smooth_mesh(
            self.original.clone(),
            self.binding.as_ref(),
            config,
        )?)
    }

    fn write(&self, path: &Path, mesh: &QuadMesh) -> Result<()> {
        let sidecar = Sidecar::for_mesh(mesh, self.surface.clone());
        io::write_mesh(path, mesh, Some(&sidecar))
            .with_context(|| format!("writing {}", path.display()))
    }
}

#[derive(Serialize)]
struct StatsFile<'a> {
    algorithm: String,
    budget: Budget,
    #[serde(skip_serializing_if = "Option::is_none")]
    laplacian: Option<&'a IterationStats>,
    run: &'a IterationStats,
    quality_before: QualitySummary,
    quality_after: QualitySummary,
}

#[derive(Serialize)]
struct QualitySummary {
    metric: Metric,
    mq: f64,
    mse: f64,
    inverted: usize,
}

fn summarize(mesh: &QuadMesh, metric: Metric) -> Result<QualitySummary> {
    let r = mesh_quality_report(mesh, metric)?;
    Ok(QualitySummary {
        metric,
        mq: r.mq,
        mse: r.mse,
        inverted: r.inverted,
    })
}

fn describe(label: &str, stats: &IterationStats) -> String {
    let last = stats
        .max_displacement_history
        .last()
        .copied()
        .unwrap_or(0.0);
    let first = stats
        .max_displacement_history
        .first()
        .copied()
        .unwrap_or(0.0);
    format!(
        "{label}: {} iterations, {}, max displacement {first:.3e} -> {last:.3e} (tolerance {:.3e})",
        stats.iterations_run,
        if stats.converged {
            "converged"
        } else {
            "not converged"
        },
        stats.tolerance
    )
}

pub fn smooth(a: SmoothArgs) -> Result<()> {
    let mut prep = prepare(&a.run)?;
    if let Some(algo) = a.algo {
        prep.config.algorithm = AlgoSpec {
            algo,
            variant: a.variant,
        };
    } else if let Some(v) = a.variant {
        prep.config.algorithm.variant = Some(v);
    }
    let algorithm = prep.config.algorithm.resolve().map_err(usage)?;
    let metric: Metric = a.run.metric.into();
    let config = prep.smoother(algorithm)?;

    let (laplacian, (mesh, stats)) = match prep.config.budget {
        Budget::Fixed => (None, prep.run(&config)?),
        Budget::LaplacianCapped => {
            let (_, ls) = prep.run(&SmootherConfig {
                algorithm: Algorithm::Laplacian,
                ..config.clone()
            })?;
            let capped = SmootherConfig {
                max_iterations: ls.iterations_run,
                ..config
            };
            (Some(ls), prep.run(&capped)?)
        }
    };

    if let Some(ls) = &laplacian {
        println!("{}", describe("LS budget", ls));
    }
    println!("{}", describe(&algorithm.label(), &stats));
    let before = summarize(&prep.original, metric)?;
    let after = summarize(&mesh, metric)?;
    println!(
        "MQ {:.4} -> {:.4}, MSE {:.4} -> {:.4}, inverted {} -> {}",
        before.mq, after.mq, before.mse, after.mse, before.inverted, after.inverted
    );

    if let Some(out) = a.output.or_else(|| prep.config.output.mesh.clone()) {
        prep.write(&out, &mesh)?;
    }
    if let Some(path) = a.stats.or_else(|| prep.config.output.stats.clone()) {
        let file = StatsFile {
            algorithm: algorithm.label(),
            budget: prep.config.budget,
            laplacian: laplacian.as_ref(),
            run: &stats,
            quality_before: before,
            quality_after: after,
        };
        let mut json = serde_json::to_string_pretty(&file)?;
        json.push('\n');
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn quality(a: QualityArgs) -> Result<()> {
    let (mesh, _) =
        io::read_mesh(&a.mesh).with_context(|| format!("reading {}", a.mesh.display()))?;
    let name = a
        .mesh
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into());
    let report = mesh_quality_report(&mesh, a.metric.into())?;
    let mut table = ReportTable::default();
    table.push(name, "Original", report);
    print!("{table}");
    if let Some(csv) = a.csv {
        fs::write(&csv, table.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(())
}

fn default_algorithms() -> Vec<Algorithm> {
    std::iter::once(Algorithm::Laplacian)
        .chain(WeightScheme::ALL.into_iter().map(Algorithm::Tbase))
        .collect()
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let prep = prepare(&a.run)?;
    let names = a.algos.clone().or_else(|| prep.config.algorithms.clone());
    let algorithms = match names {
        Some(list) => list
            .iter()
            .map(|s| parse_algorithm(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?,
        None => default_algorithms(),
    };
    if algorithms.is_empty() {
        return Err(usage("no algorithms to compare"));
    }
    let metric: Metric = a.run.metric.into();
    let base = prep.smoother(Algorithm::Laplacian)?;

    let mut laplacian: Option<(QuadMesh, IterationStats)> = None;
    if prep.config.budget == Budget::LaplacianCapped || algorithms.contains(&Algorithm::Laplacian) {
        laplacian = Some(prep.run(&base)?);
    }
    let cap = match (prep.config.budget, &laplacian) {
        (Budget::LaplacianCapped, Some((_, ls))) => ls.iterations_run,
        _ => base.max_iterations,
    };

    let mut table = ReportTable::default();
    table.push(
        &prep.name,
        "Original",
        mesh_quality_report(&prep.original, metric)?,
    );
    let mut lines = Vec::new();
    let out_dir = a.out_dir.clone().or_else(|| prep.config.output.dir.clone());
    if let Some(dir) = &out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    for algorithm in algorithms {
        let (mesh, stats) = match (algorithm, &laplacian) {
            (Algorithm::Laplacian, Some(run)) => run.clone(),
            _ => prep.run(&SmootherConfig {
                algorithm,
                max_iterations: cap,
                ..base.clone()
            })?,
        };
        let label = algorithm.label();
        lines.push(describe(&label, &stats));
        table.push(&prep.name, &label, mesh_quality_report(&mesh, metric)?);
        if let Some(dir) = &out_dir {
            prep.write(&dir.join(format!("{}_{}.obj", prep.name, label)), &mesh)?;
        }
    }
    print!("{table}");
    for l in lines {
        println!("{l}");
    }
    if let Some(csv) = a.csv.or_else(|| prep.config.output.report.clone()) {
        fs::write(&csv, table.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(())
}
