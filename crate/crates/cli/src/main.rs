use std::path::PathBuf;
use std::process::ExitCode;

use adf_cli::{render_svg, run_command, CliError, Options, Verb};
use clap::Parser;

/// Experiments with the average-distance and compliance functionals.
#[derive(Parser, Debug)]
#[command(name = "adf", version)]
struct Args {
    verb: Verb,
    /// Scene file (TOML).
    #[arg(long)]
    scene: PathBuf,
    /// Overrides the scene's λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Overrides the quadrature cell size.
    #[arg(long = "quad-h")]
    quad_h: Option<f64>,
    /// Stationarity tolerance, descent stop residual or solver tolerance,
    /// depending on the verb.
    #[arg(long)]
    tol: Option<f64>,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    let text = std::fs::read_to_string(&args.scene)?;
    let opts = Options { lambda: args.lambda, quad_h: args.quad_h, tol: args.tol };
    let (report, figure) = run_command(args.verb, &args.scene.display().to_string(), &text, &opts)?;
    match &args.out {
        Some(p) => std::fs::write(p, report.to_json())?,
        None => print!("{}", report.to_json()),
    }
    if let Some(p) = &args.csv {
        report.write_csv(std::fs::File::create(p)?)?;
    }
    if let Some(p) = &args.svg {
        std::fs::write(p, render_svg(&figure))?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
