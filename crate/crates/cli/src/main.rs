use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hmin_cli::commands::{self, Common, Outcome, SeedArgs};
use hmin_cli::error::{CliError, ExitStatus};
use hmin_core::gallery::GalleryParams;
use hmin_core::par::Execution;

/// Verify, extract, build and classify H-minimal surfaces in the first
/// Heisenberg group.
#[derive(Parser)]
#[command(name = "hmin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON surface specification.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Directory for report.json and any CSV or OBJ output.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sampling grid; overrides the spec's `grid`.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    grid: Option<Vec<usize>>,
    /// Numeric override such as `tol_h_analytic=1e-10`; repeatable.
    #[arg(long, value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// H-mean curvature and characteristic scans.
    Verify(CommonArgs),
    /// Trace a seed curve and write seed.csv.
    Seed {
        #[command(flatten)]
        common: CommonArgs,
        /// Start point; defaults to the spec's seed block or the catalog's.
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
        z0: Option<Vec<f64>>,
        /// Arclength traced in each direction.
        #[arg(long)]
        span: Option<f64>,
    },
    /// Triangulate the surface and write mesh.obj.
    Build(CommonArgs),
    /// Characteristic and singular loci of a ruled patch; writes loci.csv
    /// and singular.csv.
    Loci(CommonArgs),
    /// Sort an entire minimal graph into its family.
    Classify(CommonArgs),
    /// Run catalog checks on named entries, or `all`.
    Gallery {
        names: Vec<String>,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        u0: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        radius: Option<f64>,
    },
}

fn common(a: &CommonArgs, exec: Execution) -> Common {
    Common { spec: a.spec.clone(), grid: a.grid.as_ref().map(|g| [g[0], g[1]]), tol: a.tol.clone(), exec }
}

/// Sizes the global pool from `HMIN_THREADS`.
fn configure_threads() -> Result<Execution, CliError> {
    let Ok(v) = std::env::var("HMIN_THREADS") else { return Ok(Execution::Parallel) };
    let n: usize = v.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| CliError::spec(format!("HMIN_THREADS must be a positive integer, got `{v}`")))?;
    if n == 1 {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(Execution::Parallel)
}

fn run(cli: Cli) -> Result<(Outcome, Option<PathBuf>), CliError> {
    let exec = configure_threads()?;
    Ok(match &cli.command {
        Command::Verify(a) => (commands::verify(&common(a, exec))?, a.out.clone()),
        Command::Seed { common: a, z0, span } => {
            let args = SeedArgs { z0: z0.as_ref().map(|z| [z[0], z[1]]), span: *span };
            (commands::seed(&common(a, exec), args)?, a.out.clone().or_else(|| Some(PathBuf::from("."))))
        }
        Command::Build(a) => (commands::build(&common(a, exec))?, a.out.clone().or_else(|| Some(PathBuf::from(".")))),
        Command::Loci(a) => (commands::loci(&common(a, exec))?, a.out.clone().or_else(|| Some(PathBuf::from(".")))),
        Command::Classify(a) => (commands::classify(&common(a, exec))?, a.out.clone()),
        Command::Gallery { names, common: a, a: scale, u0, n, radius } => {
            let d = GalleryParams::default();
            let p = GalleryParams { a: scale.unwrap_or(d.a), u0: u0.unwrap_or(d.u0), n: n.unwrap_or(d.n), radius: radius.unwrap_or(d.radius), plane: d.plane };
            (commands::gallery(&common(a, exec), names, &p)?, a.out.clone())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(out, dir)| {
        if let Some(d) = dir {
            commands::write_outputs(&out, &d)?;
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.report).expect("report serializes");
            // A closed pipe (`hmin ... | head`) is not an error.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            let status = if out.report.pass { ExitStatus::Pass } else { ExitStatus::CheckFailed };
            ExitCode::from(status as u8)
        }
        Err(e) => {
            eprintln!("hmin: {e}");
            ExitCode::from(e.status() as u8)
        }
    }
}
