mod commands;
mod model;
mod report;

use clap::{Args, Parser, Subcommand};
use commands::{Context, EquivalenceArgs, GeodesicArgs, MakeKind, MapSpec, MobilityArgs, Outcome};
use nalgebra::DMatrix;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Lib(#[from] projcalc::Error),
}

#[derive(Parser)]
#[command(name = "projcalc", version, about = "Projective geometry of connections and metrics: invariants, geodesics, metrisability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Christoffel symbols, curvature, Weyl tensor and 2D projective invariants at a point.
    Invariants {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_parser = floats)]
        at: Floats,
        /// Metric name, `connection` or `class2d`.
        #[arg(long)]
        metric: Option<String>,
    },
    /// Integrate a geodesic and track first integrals.
    Geodesic {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        metric: Option<String>,
        /// Second metric for painleve, killing and family integrals.
        #[arg(long)]
        partner: Option<String>,
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        from: Floats,
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        dir: Floats,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Comma-separated: energy, painleve, killing, family:<t>.
        #[arg(long, value_delimiter = ',')]
        integrals: Vec<String>,
        /// Trajectory CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        drift_tol: f64,
    },
    /// Solve the metrisability equation and report the degree of mobility.
    Mobility {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        metric: Option<String>,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        /// Collocation points per axis.
        #[arg(long, default_value_t = 15)]
        grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        svtol: f64,
        /// Sub-box `a,b;c,d;...` for the ansatz and collocation.
        #[arg(long, value_parser = region, allow_hyphen_values = true)]
        region: Option<Region>,
        /// Low-discrepancy probe points for verifying solutions.
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Test whether two objects of a model are projectively equivalent.
    CheckEquivalence {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        first: Option<String>,
        #[arg(long)]
        second: Option<String>,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 3)]
        geodesics: usize,
        #[arg(long, default_value_t = 2.0)]
        tmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 1e-6)]
        drift_tol: f64,
    },
    /// Emit a model file for a standard construction.
    Make(MakeArgs),
    /// Pull the metrics of a model back along a chart map and emit the result.
    Transform {
        #[arg(long)]
        model: PathBuf,
        /// Beltrami matrix `a,b,c;d,e,f;g,h,i` with determinant 1.
        #[arg(long, value_parser = matrix, allow_hyphen_values = true, conflicts_with = "map", required_unless_present = "map")]
        matrix: Option<Matrix>,
        /// Map component expression, once per coordinate.
        #[arg(long, allow_hyphen_values = true)]
        map: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MakeArgs {
    #[command(subcommand)]
    kind: MakeCommand,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MakeCommand {
    /// Dini pair with X(x), Y(y) on a square chart.
    Dini {
        #[arg(long = "x", allow_hyphen_values = true)]
        x: String,
        #[arg(long = "y", allow_hyphen_values = true)]
        y: String,
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
    },
    /// Levi-Civita block model; h uses the coordinates after the first, h-bar the last ones.
    LeviCivita {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        sign: f64,
        /// Block `a,b;c,d`.
        #[arg(long, value_parser = strings, allow_hyphen_values = true)]
        h: Strings,
        #[arg(long, value_parser = strings, allow_hyphen_values = true)]
        h_bar: Strings,
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
    },
    /// Round sphere in the gnomonic chart.
    Sphere {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
    },
    /// Flat connection and Euclidean metric.
    Flat {
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
}

type Floats = Vec<f64>;
type Region = Vec<(f64, f64)>;
type Matrix = DMatrix<f64>;
type Strings = Vec<Vec<String>>;

fn floats(s: &str) -> Result<Floats, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"))).collect()
}

fn rows(s: &str) -> Result<Vec<Floats>, String> {
    s.split(';').map(floats).collect()
}

fn region(s: &str) -> Result<Region, String> {
    rows(s)?.into_iter().map(|r| if r.len() == 2 && r[0] < r[1] { Ok((r[0], r[1])) } else { Err(format!("`{s}`: each interval is `lo,hi` with lo < hi")) }).collect()
}

fn matrix(s: &str) -> Result<Matrix, String> {
    let r = rows(s)?;
    if r.iter().any(|row| row.len() != r.len()) {
        return Err(format!("`{s}` is not a square matrix"));
    }
    Ok(DMatrix::from_fn(r.len(), r.len(), |i, j| r[i][j]))
}

fn strings(s: &str) -> Result<Strings, String> {
    Ok(s.split(';').map(|r| r.split(',').map(|t| t.trim().to_string()).collect()).collect())
}

fn seed() -> Result<u64, CliError> {
    match std::env::var("PROJCALC_SEED") {
        Err(_) => Ok(projcalc::sampling::DEFAULT_SEED),
        Ok(v) => {
            let v = v.trim();
            let parsed = match v.strip_prefix("0x") {
                Some(hex) => u64::from_str_radix(hex, 16),
                None => v.parse(),
            };
            parsed.map_err(|_| CliError::Input(format!("PROJCALC_SEED=`{v}` is not an unsigned integer")))
        }
    }
}

fn run(cli: Cli, ctx: &Context) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Invariants { model, at, metric } => commands::invariants(ctx, &model, &at, metric.as_deref()),
        Command::Geodesic { model, metric, partner, from, dir, tmax, step, integrals, out, drift_tol } => commands::geodesic(
            ctx,
            &GeodesicArgs {
                model: &model,
                metric: metric.as_deref(),
                partner: partner.as_deref(),
                from: &from,
                dir: &dir,
                tmax,
                step,
                integrals: &integrals,
                out: out.as_deref(),
                drift_tol,
            },
        ),
        Command::Mobility { model, metric, degree, grid, svtol, region, points } => {
            commands::mobility(ctx, &MobilityArgs { model: &model, metric: metric.as_deref(), degree, grid, svtol, region, points })
        }
        Command::CheckEquivalence { model, first, second, points, tol, geodesics, tmax, step, drift_tol } => commands::check_equivalence(
            ctx,
            &EquivalenceArgs { model: &model, first: first.as_deref(), second: second.as_deref(), points, tol, geodesics, tmax, step, drift_tol },
        ),
        Command::Make(MakeArgs { kind, out }) => {
            let kind = match kind {
                MakeCommand::Dini { x, y, half_width } => MakeKind::Dini { x, y, half_width },
                MakeCommand::LeviCivita { lambda, sign, h, h_bar, half_width } => MakeKind::LeviCivita { lambda, sign, h, h_bar, half_width },
                MakeCommand::Sphere { dim, half_width } => MakeKind::Sphere { dim, half_width },
                MakeCommand::Flat { dim } => MakeKind::Flat { dim },
            };
            commands::make(ctx, kind, out.as_ref())
        }
        Command::Transform { model, matrix, map, out } => {
            let spec = match matrix {
                Some(m) => MapSpec::Beltrami(m),
                None => MapSpec::Exprs(map),
            };
            commands::transform(ctx, &model, spec, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = seed().and_then(|seed| run(cli, &Context { argv: std::env::args().skip(1).collect(), seed }));
    match outcome {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.stdout.as_bytes());
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
