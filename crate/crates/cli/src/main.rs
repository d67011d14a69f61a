mod cmd;

use std::io::{IsTerminal, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffproj::verify::Frac;

#[derive(Parser)]
#[command(
    name = "ffproj",
    version,
    about = "Exact experiments on projections of point sets in F_p^n",
    long_about = "Exact experiments on projections of point sets in F_p^n.\n\n\
        Every command writes one JSON report (or CSV rows with --format csv) to \
        standard output. Exit codes: 0 ok, 1 a check failed, 2 usage error, \
        3 input parse error, 4 enumeration budget exceeded."
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Maximum number of subspaces any single enumeration may visit.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub budget: u128,
    /// Master seed for randomised commands (echoed in every report).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: 1, or every core for `sweep`).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Count or list the m-dimensional subspaces of F_p^n.
    Gr {
        #[command(subcommand)]
        action: GrCmd,
    },
    /// Projection of a point set along a subspace, or along every subspace of a dimension.
    Project(cmd::ProjectArgs),
    /// Subspaces along which a point set has a small projection.
    Exceptional(cmd::ExceptionalArgs),
    /// Structural checks on a subspace family.
    Family {
        #[command(subcommand)]
        action: FamilyCmd,
    },
    /// Point-line incidences in the plane, counted two ways.
    Incidence(cmd::IncidenceArgs),
    /// Incidences of a grid A x B with lines against the grid incidence bound.
    Stevens(cmd::StevensArgs),
    /// Exact checks of projection inequalities and ratio reports for bounds.
    Verify {
        #[command(subcommand)]
        action: VerifyCmd,
    },
    /// Closure of a set of residues under the sum rules, with a witness path to 1.
    Seq(cmd::SeqArgs),
    /// Run a batch of seeded instances described by a JSON config.
    Sweep(cmd::SweepArgs),
}

#[derive(Subcommand)]
enum GrCmd {
    /// Number of m-dimensional subspaces (Gaussian binomial).
    Count(cmd::GrArgs),
    /// Every m-dimensional subspace, in canonical order.
    Enum(cmd::GrArgs),
}

#[derive(Subcommand)]
enum FamilyCmd {
    /// Non-degeneracy, common intersection and (optionally) non-concentration.
    Check(cmd::FamilyCheckArgs),
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Exhaustive check of the three exceptional-set estimates with explicit constants.
    Chen(cmd::ChenArgs),
    /// Largest projection over a family against a named lower bound.
    Bound(cmd::BoundArgs),
    /// Intersection, fiber-energy and sum-projection inequalities for a pair of subspaces.
    Props(cmd::PropsArgs),
    /// The two structural hypotheses on a mixed-dimension family.
    Improvement(cmd::ImprovementArgs),
}

/// A failure with its exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ffproj::Error> for Failure {
    fn from(e: ffproj::Error) -> Self {
        let code = match e {
            ffproj::Error::Parse { .. } => 3,
            ffproj::Error::Budget { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

pub fn parse_frac(s: &str) -> Result<Frac, String> {
    s.parse::<Frac>().map_err(|e| e.to_string())
}

fn emit(kind: &str, ansi: &str, message: &str) {
    let color = std::io::stderr().is_terminal() && std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty());
    let mut err = std::io::stderr().lock();
    let _ = if color {
        writeln!(err, "\x1b[1;{ansi}m{kind}:\x1b[0m {message}")
    } else {
        writeln!(err, "{kind}: {message}")
    };
}

pub fn warn(message: &str) {
    emit("warning", "33", message);
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let g = &cli.global;
    let start = Instant::now();
    let threads = match &cli.command {
        Command::Sweep(_) => g.jobs,
        _ => Some(g.jobs.unwrap_or(1)),
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let mut report = match cli.command {
        Command::Gr {
            action: GrCmd::Count(a),
        } => cmd::gr_count(g, a)?,
        Command::Gr { action: GrCmd::Enum(a) } => cmd::gr_enum(g, a)?,
        Command::Project(a) => cmd::project(g, a)?,
        Command::Exceptional(a) => cmd::exceptional(g, a)?,
        Command::Family {
            action: FamilyCmd::Check(a),
        } => cmd::family_check(g, a)?,
        Command::Incidence(a) => cmd::incidence(g, a)?,
        Command::Stevens(a) => cmd::stevens(g, a)?,
        Command::Verify { action } => match action {
            VerifyCmd::Chen(a) => cmd::chen(g, a)?,
            VerifyCmd::Bound(a) => cmd::bound(g, a)?,
            VerifyCmd::Props(a) => cmd::props(g, a)?,
            VerifyCmd::Improvement(a) => cmd::improvement(g, a)?,
        },
        Command::Seq(a) => cmd::seq(g, a)?,
        Command::Sweep(a) => cmd::sweep(g, a)?,
    };
    report.timing_ms = start.elapsed().as_millis() as u64;
    let out = match g.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv()?,
    };
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(out.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| Failure::usage(format!("cannot write output: {e}")))?;
    Ok(if report.pass == Some(false) { 1 } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => {
            if code == 1 {
                emit(
                    "check failed",
                    "31",
                    "at least one exact inequality did not hold; see the report",
                );
            }
            ExitCode::from(code)
        }
        Err(f) => {
            emit("error", "31", &f.message);
            ExitCode::from(f.code)
        }
    }
}
