mod commands;
mod output;
mod problem;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use rsform::{Complex64, Coeff, Qi};
use serde_json::json;

use commands::{BlowupArgs, Ctx, OrbitArgs, Outcome, StableArgs};
use problem::{Precision, Problem};

/// Error that ends a command: bad input exits with 2, a mathematical failure with 1.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Math(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Math(_) => 1,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let (kind, e) = match self {
            Failure::Input(e) => ("input", e),
            Failure::Math(e) => ("math", e),
        };
        json!({"error": {"kind": kind, "message": format!("{e:#}")}})
    }
}

#[derive(Parser, Debug)]
#[command(name = "rsform", version, about = "Formal normal forms and stable manifolds along invariant formal curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Truncate the input jets to this order.
    #[arg(long, global = true)]
    order: Option<u32>,
    /// `exact` for rational arithmetic, or a bit count up to 53 for double precision.
    #[arg(long, global = true, env = "RSFORM_PRECISION")]
    precision: Option<String>,
    /// Numerical tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for the result JSON and any CSV/SVG artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact formats to write under --out (default: all).
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a problem file: schema, curve invariance, truncation, or the RS-form clauses.
    Validate { problem: PathBuf },
    /// Time-t flow of a vector field.
    Exp {
        problem: PathBuf,
        #[arg(long, default_value = "1")]
        time: String,
    },
    /// Logarithm of a unipotent diffeomorphism.
    Log { problem: PathBuf },
    /// Infinitesimal generator of F^m with m the embeddability index.
    Infgen { problem: PathBuf },
    /// Permissible transformations along the curve: punctual blow-up unless another map is chosen.
    Blowup {
        problem: PathBuf,
        #[arg(long, default_value_t = 1)]
        times: u32,
        /// Coordinate center of the blow-up.
        #[arg(long, value_delimiter = ',')]
        center: Vec<usize>,
        #[arg(long)]
        ramify: Option<u32>,
        /// Shearing exponents, one per coordinate, the first being 0.
        #[arg(long, value_delimiter = ',')]
        shear: Vec<u32>,
    },
    /// Formal reduction of a linear system with a gauge certificate.
    ReduceLinear { problem: PathBuf },
    /// Replay a certificate against a linear system and compare with a reduced form.
    VerifyCertificate { problem: PathBuf, certificate: PathBuf, form: PathBuf },
    /// Reduce a vector field or diffeomorphism with its curve to RS form.
    Reduce { problem: PathBuf },
    /// Node/saddle classification of the attracting directions with synthesized sectors.
    Classify {
        problem: PathBuf,
        #[arg(long)]
        m: Option<u32>,
    },
    /// Stable graph over one attracting direction.
    Stable {
        problem: PathBuf,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Grid as RADIAL x ANGULAR x W, e.g. 64x64x8.
        #[arg(long, default_value = "64x64x8")]
        grid: String,
        /// Position in the list of attracting directions.
        #[arg(long, default_value_t = 0)]
        direction: usize,
        /// Graph orbits drawn in the SVG.
        #[arg(long, default_value_t = 6)]
        orbits: usize,
        /// Largest accepted invariance residual; larger values exit with status 1.
        #[arg(long, default_value_t = 1e-8)]
        max_residual: f64,
    },
    /// Iterate the map from a point.
    Orbit {
        problem: PathBuf,
        /// Start point as re:im per coordinate; defaults to the curve point over x = 0.1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        escape_radius: f64,
    },
    /// Overall verdict: hyperbolic branch, case (i), or the list of stable manifolds.
    Report { problem: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Exp { .. } => "exp",
            Command::Log { .. } => "log",
            Command::Infgen { .. } => "infgen",
            Command::Blowup { .. } => "blowup",
            Command::ReduceLinear { .. } => "reduce-linear",
            Command::VerifyCertificate { .. } => "verify-certificate",
            Command::Reduce { .. } => "reduce",
            Command::Classify { .. } => "classify",
            Command::Stable { .. } => "stable",
            Command::Orbit { .. } => "orbit",
            Command::Report { .. } => "report",
        }
    }

    fn problem(&self) -> &PathBuf {
        match self {
            Command::Validate { problem }
            | Command::Exp { problem, .. }
            | Command::Log { problem }
            | Command::Infgen { problem }
            | Command::Blowup { problem, .. }
            | Command::ReduceLinear { problem }
            | Command::VerifyCertificate { problem, .. }
            | Command::Reduce { problem }
            | Command::Classify { problem, .. }
            | Command::Stable { problem, .. }
            | Command::Orbit { problem, .. }
            | Command::Report { problem } => problem,
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize, usize), Failure> {
    let parts: Vec<usize> = s.split(['x', 'X']).map(|t| t.trim().parse()).collect::<Result<_, _>>().map_err(|_| {
        Failure::Input(anyhow!("--grid must look like 64x64x8, got {s:?}"))
    })?;
    match parts[..] {
        [a, b, c] if a >= 8 && b >= 8 && c >= 1 => Ok((a, b, c)),
        _ => Err(Failure::Input(anyhow!("--grid needs three sizes, the first two at least 8"))),
    }
}

fn dispatch<K: Coeff>(cmd: &Command, p: &Problem, ctx: &Ctx) -> Result<Outcome, Failure> {
    match cmd {
        Command::Validate { .. } => commands::validate::<K>(p, ctx),
        Command::Exp { time, .. } => commands::exp::<K>(p, ctx, time),
        Command::Log { .. } => commands::log::<K>(p, ctx),
        Command::Infgen { .. } => commands::infgen::<K>(p, ctx),
        Command::Blowup { times, center, ramify, shear, .. } => commands::blowup::<K>(
            p,
            ctx,
            &BlowupArgs { times: *times, center: center.clone(), ramify: *ramify, shear: shear.clone() },
        ),
        Command::ReduceLinear { .. } => commands::reduce_linear::<K>(p, ctx),
        Command::VerifyCertificate { certificate, form, .. } => {
            commands::verify_certificate::<K>(p, ctx, certificate, form)
        }
        Command::Reduce { .. } => commands::reduce::<K>(p, ctx),
        Command::Classify { m, .. } => commands::classify::<K>(p, ctx, *m),
        Command::Stable { m, max_iter, grid, direction, orbits, max_residual, .. } => commands::stable::<K>(
            p,
            ctx,
            &StableArgs {
                m: *m,
                max_iter: *max_iter,
                grid: parse_grid(grid)?,
                direction: *direction,
                orbits: *orbits,
                max_residual: *max_residual,
            },
        ),
        Command::Orbit { start, steps, escape_radius, .. } => commands::orbit::<K>(
            p,
            ctx,
            &OrbitArgs { start: start.clone(), steps: *steps, escape_radius: *escape_radius },
        ),
        Command::Report { .. } => commands::report::<K>(p, ctx),
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let p = Problem::load(cli.command.problem())?;
    let precision = match &cli.precision {
        Some(s) => Precision::parse(s).map_err(Failure::Input)?,
        None => p.precision()?.unwrap_or(Precision::Exact),
    };
    let tol = cli.tol.or(p.options.tol).unwrap_or(1e-10);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Input(anyhow!("tolerance must be positive")));
    }
    let ctx = Ctx { order: cli.order.or(p.options.order), tol, precision: precision.label() };
    match precision {
        Precision::Exact => dispatch::<Qi>(&cli.command, &p, &ctx),
        Precision::Float => dispatch::<Complex64>(&cli.command, &p, &ctx),
    }
}

fn wanted(formats: &[Format], name: &str) -> bool {
    let f = if name.ends_with(".csv") {
        Format::Csv
    } else if name.ends_with(".svg") {
        Format::Svg
    } else {
        Format::Json
    };
    formats.is_empty() || formats.contains(&f)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, code) = match run(&cli) {
        Ok(o) => {
            let code = if o.failure.is_some() { 1 } else { 0 };
            (o, code)
        }
        Err(e) => {
            eprintln!("{}", output::render(&e.to_json()));
            return ExitCode::from(e.code());
        }
    };
    let mut result = outcome.result;
    result["command"] = json!(cli.command.name());
    if let Some(why) = &outcome.failure {
        result["failure"] = json!(why);
    }
    let main = output::Artifact::json(&format!("{}.json", cli.command.name()), result);
    print!("{}", main.body);
    if let Some(dir) = &cli.out {
        let files: Vec<_> = std::iter::once(main).chain(outcome.files).filter(|a| wanted(&cli.format, &a.name)).collect();
        if let Err(e) = output::write_all(dir, &files) {
            let f = Failure::Input(e);
            eprintln!("{}", output::render(&f.to_json()));
            return ExitCode::from(f.code());
        }
    }
    if let Some(why) = &outcome.failure {
        eprintln!("{}", output::render(&Failure::Math(anyhow!("{why}")).to_json()));
    }
    ExitCode::from(code)
}
