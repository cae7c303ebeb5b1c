use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use quasispec::bounds::{Alpha, BoundInputs, Theorem};
use quasispec::capacity::{
    annular_lower_bound_check, annulus, annulus_exact, solve_capacity, teichmuller_capacity, TeichmullerGrid,
};
use quasispec::conformal::{q_alpha, ConformalMap, DEFAULT_SHELLS};
use quasispec::geometry::{generate_snowflake, read_curve, triangulate, EdgeRule, Point2, SnowflakeSpec};
use quasispec::metrics::{
    estimate_bounded_turning, estimate_three_point, k_from_ahlfors, k_star_shaped, QcCoefficient,
};
use quasispec::report::{verify, write_report, BoundEntry, BoundReport, Outcome, Preset, ReportFormat, VerifyConfig};
use quasispec::spectral::{neumann_mu1, DEFAULT_EIG_TOL};
use quasispec::{svg, Error};

/// Neumann eigenvalue bounds for planar quasidiscs.
#[derive(Debug, Parser, Serialize)]
#[command(name = "quasispec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Rule {
    Tent,
    Flat,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Bt,
    #[value(name = "3pt")]
    #[serde(rename = "3pt")]
    ThreePoint,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum CapacityPreset {
    Annulus,
    Teichmuller,
    /// Two polyline continua in an annulus, read from `--input`.
    Custom,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum VerifyPreset {
    Star,
    Square,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
enum Command {
    /// Rohde snowflake polygon.
    Snowflake {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value_t = Rule::Tent)]
        rule: Rule,
        /// Seed for `--rule random`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Ahlfors three-point constant of a curve file.
    Ahlfors {
        curve: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Bt)]
        method: Method,
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Hyperbolic alpha-dilatation of a catalog map.
    Qalpha {
        /// identity, scale:R, quadratic:C or koebe
        #[arg(long)]
        map: String,
        #[arg(long, conflicts_with = "alpha_grid", required_unless_present = "alpha_grid")]
        alpha: Option<f64>,
        /// Comma-separated alphas.
        #[arg(long, value_delimiter = ',')]
        alpha_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_SHELLS)]
        shells: usize,
    },
    /// Condenser capacity on a grid.
    Capacity {
        #[arg(long, value_enum)]
        preset: CapacityPreset,
        /// Inner radius (annulus, custom).
        #[arg(long, default_value_t = 1.0)]
        inner: f64,
        /// Outer radius (annulus, custom).
        #[arg(long, default_value_t = 2.0)]
        outer: f64,
        /// Teichmuller parameter.
        #[arg(long, default_value_t = 2.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0 / 128.0)]
        spacing: f64,
        #[arg(long, default_value_t = quasispec::capacity::DEFAULT_TOL)]
        tol: f64,
        /// JSON `{"f0": [[x, y], ...], "f1": [...]}` for the custom preset.
        #[arg(long, required_if_eq("preset", "custom"))]
        input: Option<PathBuf>,
    },
    /// First nonzero Neumann eigenvalue of a curve file.
    Eig {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long, default_value_t = DEFAULT_EIG_TOL)]
        tol: f64,
        /// Mesh with the eigenvector sign pattern.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// One eigenvalue bound as a report.
    Bound {
        /// eq16, a, cor42 or c.
        #[arg(long)]
        theorem: Theorem,
        /// Quasiconformality coefficient (theorem a).
        #[arg(long, conflicts_with_all = ["beta"])]
        k: Option<f64>,
        /// Ahlfors constant (cor42; theorem a via K(C)).
        #[arg(long)]
        c: Option<f64>,
        /// Snowflake parameter (theorem c).
        #[arg(long)]
        p: Option<f64>,
        /// Star-shape parameter (theorem a via K(beta)).
        #[arg(long)]
        beta: Option<f64>,
        /// Q(alpha) at the given alpha (eq16).
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        area: f64,
        #[arg(long, conflicts_with = "optimize")]
        alpha: Option<f64>,
        /// Minimise over the alpha window (the default without --alpha).
        #[arg(long)]
        optimize: bool,
    },
    /// Curve, constants, bounds and finite elements for a preset domain.
    Verify {
        #[arg(long, value_enum)]
        preset: VerifyPreset,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 0.03)]
        h: f64,
        #[arg(long, default_value_t = DEFAULT_EIG_TOL)]
        tol: f64,
    },
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a Value,
    result: T,
}

#[derive(Deserialize)]
struct Continua {
    f0: Vec<Point2>,
    f1: Vec<Point2>,
}

enum Status {
    Done,
    Infeasible(String),
    Violated,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Infeasible(why)) => {
            eprintln!("{why}");
            ExitCode::from(2)
        }
        Ok(Status::Violated) => {
            eprintln!("error: report verdict is violated");
            ExitCode::from(1)
        }
        Err(e) => {
            let infeasible = e.downcast_ref::<Error>().is_some_and(Error::is_infeasible);
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(if infeasible { 2 } else { 1 })
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QUASISPEC_THREADS") {
        let n: usize = v.parse().with_context(|| format!("QUASISPEC_THREADS = {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    init_threads()?;
    for path in [cli.out.as_deref(), svg_path(&cli.command)].into_iter().flatten() {
        check_writable(path)?;
    }
    let config = serde_json::to_value(cli)?;
    let format = match cli.format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    let emit = |bytes: Vec<u8>| -> anyhow::Result<()> {
        match &cli.out {
            Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
            None => Ok(std::io::stdout().lock().write_all(&bytes)?),
        }
    };
    let envelope = |result: Value| write_report(&Envelope { config: &config, result }, format);

    match &cli.command {
        Command::Snowflake { p, n, rule, seed, svg } => {
            let rule = match rule {
                Rule::Tent => EdgeRule::AllTent,
                Rule::Flat => EdgeRule::AllFlat,
                Rule::Random => EdgeRule::SeededRandom(*seed),
            };
            let curve = generate_snowflake(&SnowflakeSpec::new(*p, *n, rule))?;
            if let Some(path) = svg {
                fs::write(path, svg::curve_svg(&curve))?;
            }
            emit(envelope(serde_json::json!({
                "vertex_count": curve.len(),
                "area": curve.area(),
                "diameter": curve.diameter(),
                "vertices": curve,
            }))?)?;
        }
        Command::Ahlfors { curve, method, stride } => {
            let curve = read_curve(curve)?;
            let est = match method {
                Method::Bt => estimate_bounded_turning(curve.vertices(), *stride)?,
                Method::ThreePoint => estimate_three_point(curve.vertices(), *stride)?,
            };
            emit(envelope(serde_json::to_value(est)?)?)?;
        }
        Command::Qalpha { map, alpha, alpha_grid, shells } => {
            let map: ConformalMap = map.parse()?;
            let alphas = alpha_grid.clone().unwrap_or_else(|| alpha.iter().copied().collect());
            let results = alphas
                .iter()
                .map(|&a| q_alpha(&map, a, *shells))
                .collect::<quasispec::Result<Vec<_>>>()?;
            emit(envelope(serde_json::to_value(results)?)?)?;
        }
        Command::Capacity { preset, inner, outer, t, spacing, tol, input } => {
            let result = match preset {
                CapacityPreset::Annulus => {
                    let res = solve_capacity(&annulus(*inner, *outer, *spacing)?, *tol)?;
                    let exact = annulus_exact(*inner, *outer);
                    serde_json::json!({
                        "exact": exact,
                        "relative_error": (res.value - exact) / exact,
                        "capacity": res,
                    })
                }
                CapacityPreset::Teichmuller => {
                    let grid = TeichmullerGrid {
                        h0: *spacing,
                        ..TeichmullerGrid::default()
                    };
                    serde_json::to_value(teichmuller_capacity(*t, grid)?)?
                }
                CapacityPreset::Custom => {
                    let path = input.as_ref().expect("clap requires --input");
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    let c: Continua = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                    serde_json::to_value(annular_lower_bound_check(*inner, *outer, &c.f0, &c.f1, *spacing)?)?
                }
            };
            emit(envelope(result)?)?;
        }
        Command::Eig { curve, h, tol, svg } => {
            let curve = read_curve(curve)?;
            let mesh = triangulate(&curve, *h)?;
            let res = neumann_mu1(&mesh, *tol)?;
            if let Some(path) = svg {
                fs::write(path, svg::mesh_svg(&mesh, Some(&res.vector)))?;
            }
            let mut value = serde_json::to_value(&res)?;
            value["triangles"] = mesh.triangles.len().into();
            value["area"] = curve.area().into();
            emit(envelope(value)?)?;
        }
        Command::Bound { theorem, k, c, p, beta, q, area, alpha, .. } => {
            let inputs = bound_inputs(*theorem, *k, *c, *p, *beta, *q, *area)?;
            let entry = match alpha {
                Some(a) => BoundEntry::at(inputs, Alpha::new(*a)?)?,
                None => BoundEntry::optimized(inputs)?,
            };
            let mut report = BoundReport::new("cli", config.clone(), *area, None, false)?;
            report.k = inputs.k;
            report.ahlfors_c = inputs.c;
            report.beta = *beta;
            let infeasible = entry.infeasible.clone();
            report.bounds.push(entry);
            report.finalize()?;
            emit(write_report(&report, format)?)?;
            if let Some(why) = infeasible {
                return Ok(Status::Infeasible(why));
            }
        }
        Command::Verify { preset, beta, h, tol } => {
            let mut vc = VerifyConfig::new(match preset {
                VerifyPreset::Star => Preset::Star,
                VerifyPreset::Square => Preset::Square,
            });
            vc.beta = *beta;
            vc.h = *h;
            vc.eig_tol = *tol;
            let mut report = verify(&vc)?;
            // keep the pipeline's own settings next to the command line
            report.config = serde_json::json!({ "run": config, "pipeline": report.config });
            emit(write_report(&report, format)?)?;
            if report.verdict == Outcome::Violated {
                return Ok(Status::Violated);
            }
        }
    }
    Ok(Status::Done)
}

fn bound_inputs(
    theorem: Theorem,
    k: Option<f64>,
    c: Option<f64>,
    p: Option<f64>,
    beta: Option<f64>,
    q: Option<f64>,
    area: f64,
) -> anyhow::Result<BoundInputs> {
    Ok(match theorem {
        Theorem::Eq16 => {
            let Some(q) = q else { bail!("--theorem eq16 needs --q") };
            BoundInputs { area, ..BoundInputs::eq16(q) }
        }
        Theorem::TheoremA => {
            let k: QcCoefficient = match (k, c, beta) {
                (Some(k), None, None) => QcCoefficient::direct(k)?,
                (None, Some(c), None) => k_from_ahlfors(c)?,
                (None, None, Some(b)) => k_star_shaped(b)?,
                _ => bail!("--theorem a needs exactly one of --k, --c, --beta"),
            };
            BoundInputs::theorem_a(k, area)
        }
        Theorem::Corollary42 => {
            let Some(c) = c else { bail!("--theorem cor42 needs --c") };
            BoundInputs::corollary42(c, area)
        }
        Theorem::TheoremC => {
            let Some(p) = p else { bail!("--theorem c needs --p") };
            BoundInputs::theorem_c(p, area)
        }
    })
}

fn svg_path(command: &Command) -> Option<&Path> {
    match command {
        Command::Snowflake { svg, .. } | Command::Eig { svg, .. } => svg.as_deref(),
        _ => None,
    }
}

/// Output paths must sit in an existing directory; checked before any compute.
fn check_writable(path: &Path) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        bail!("output directory {} does not exist", dir.display());
    }
    if path.is_dir() {
        bail!("output path {} is a directory", path.display());
    }
    Ok(())
}
