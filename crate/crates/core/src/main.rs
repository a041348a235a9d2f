use clap::{Parser, Subcommand};
use qcurv::cli::{
    run_curvature, run_ends, run_gbc_verify, run_kernels, run_levelset, run_suite_command,
    run_symmetrize, CommandOutput, InputSpec, OutputFormat, RunConfig,
};
use qcurv::error::QcurvError;
use qcurv::quad::QuadratureSpec;
use std::path::PathBuf;
use std::process::ExitCode;

/// Curvature toolkit for conformally flat metrics e^{2w} g_0 on R^n.
#[derive(Parser)]
#[command(name = "qcurv", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Input profile specification (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, default_value = "json")]
    format: String,

    /// Override the dimension from the input file.
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Seed for randomized batteries.
    #[arg(long, global = true, default_value_t = 20240817)]
    seed: u64,

    /// Outer cutoff radius for quadrature.
    #[arg(long, global = true)]
    rmax: Option<f64>,

    /// Angular node count.
    #[arg(long, global = true)]
    nodes: Option<usize>,

    /// Quadrature tolerance budget eps_quad.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit curvature frames at requested radii.
    Curvature {
        /// Comma-separated radii (default: an even scan of the hull).
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Kernel table and the structure-lemma report.
    Kernels {
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 30)]
        grid: usize,
    },
    /// Per-end asymptotics, completeness and equality-case report.
    Ends,
    /// Spherical symmetrization checks on an axisymmetric field.
    Symmetrize,
    /// Total-curvature inequality verifier.
    GbcVerify,
    /// Dimension-four level-set identities.
    Levelset {
        /// Comma-separated level values.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
    },
    /// Run the full verification battery.
    Suite,
}

fn exit_code_for(err: &QcurvError) -> i32 {
    match err {
        QcurvError::Schema(_) | QcurvError::Profile(_) => 2,
        _ => 1,
    }
}

fn load_input(args: &Args) -> Result<InputSpec, QcurvError> {
    let path = args
        .input
        .as_ref()
        .ok_or_else(|| QcurvError::Schema("--input PATH is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| QcurvError::Schema(format!("cannot read {}: {e}", path.display())))?;
    let mut input = InputSpec::parse(&text)?;
    if let Some(n) = args.n {
        input.n = n;
    }
    Ok(input)
}

fn build_config(args: &Args) -> Result<RunConfig, QcurvError> {
    let mut spec = QuadratureSpec::default();
    if let Some(rmax) = args.rmax {
        spec.r_max = rmax;
    }
    if let Some(nodes) = args.nodes {
        spec.angular_nodes = nodes;
        spec.radial_nodes = nodes.max(spec.radial_nodes);
    }
    if let Some(tol) = args.tol {
        spec.eps_quad = tol;
    }
    spec.validate()?;
    let format = match args.format.as_str() {
        "json" => OutputFormat::Json,
        "csv" => OutputFormat::Csv,
        other => {
            return Err(QcurvError::Schema(format!(
                "unknown format {other:?}; use json or csv"
            )))
        }
    };
    Ok(RunConfig {
        seed: args.seed,
        spec,
        format,
    })
}

fn dispatch(args: &Args, cfg: &RunConfig) -> Result<CommandOutput, QcurvError> {
    match &args.command {
        Command::Curvature { radii } => run_curvature(&load_input(args)?, cfg, radii),
        Command::Kernels { grid } => run_kernels(&load_input(args)?, cfg, *grid),
        Command::Ends => run_ends(&load_input(args)?, cfg),
        Command::Symmetrize => run_symmetrize(&load_input(args)?, cfg),
        Command::GbcVerify => run_gbc_verify(&load_input(args)?, cfg),
        Command::Levelset { lambda } => run_levelset(&load_input(args)?, cfg, lambda),
        Command::Suite => run_suite_command(cfg),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    // QCURV_THREADS caps internal worker parallelism; single-threaded
    // otherwise. Recorded here so reports stay reproducible.
    let _threads: usize = std::env::var("QCURV_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1);
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match dispatch(&args, &cfg) {
        Ok(out) => {
            match &args.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &out.text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                }
                None => print!("{}", out.text),
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
