//! Command-line front end: bound reports for matrices, tensors and cp
//! matrices, and parameter scans over the example families.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use atomrank::model::{self, BuilderOptions, ConicProblem};
use atomrank::report::{
    self, exit_code_for, parse_bound_list, BoundKind, BoundReport, RunOptions, ScanFamily, ScanRange, EXIT_INPUT,
};
use atomrank::types::{CpInputMatrix, DEFAULT_CP_TOL, DEFAULT_EPS_ZERO};
use atomrank::{Error, SolverOptions};

#[derive(Parser)]
#[command(name = "atomrank", version, about = "Self-scaled SDP lower bounds on nonnegative rank and cp-rank")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds on the nonnegative rank of a CSV matrix.
    Nonneg(NonnegArgs),
    /// τ₊ˢᵒˢ of a JSON tensor of order >= 3.
    Tensor(TensorArgs),
    /// Bounds on the cp-rank of a symmetric CSV matrix.
    Cp(CpArgs),
    /// Evaluate a bound over a parameter grid and write CSV.
    Scan(ScanArgs),
}

#[derive(Args)]
struct Common {
    /// Input file.
    #[arg(long)]
    input: PathBuf,
    /// Solver tolerance, used for both the duality gap and feasibility.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Entries at or below this value count as zero.
    #[arg(long = "eps-zero", default_value_t = DEFAULT_EPS_ZERO)]
    eps_zero: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, visible_alias = "json")]
    out: Option<PathBuf>,
    /// Write a text listing of the τ problem here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct Strengthening {
    /// Index X by all of vec(A) instead of the support.
    #[arg(long)]
    full: bool,
    /// Add X >= 0.
    #[arg(long = "extra-nonneg")]
    extra_nonneg: bool,
    /// Add X_{ij,kl} >= (2 - t) A_ij A_kl.
    #[arg(long = "extra-2t")]
    extra_2t: bool,
}

impl Strengthening {
    fn builder(&self) -> BuilderOptions {
        BuilderOptions {
            use_reduced: !self.full,
            add_entrywise_nonneg: self.extra_nonneg,
            add_two_minus_t: self.extra_2t,
            ..BuilderOptions::default()
        }
    }
}

#[derive(Args)]
struct NonnegArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    strengthening: Strengthening,
    /// Comma-separated: tau, omega, theta, chi_frac, chi, mutual_info or all.
    #[arg(long, default_value = "tau")]
    bounds: String,
}

#[derive(Args)]
struct TensorArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CpArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated: tau, rank, c_frac, c_exact or all.
    #[arg(long, default_value = "tau")]
    bounds: String,
    /// Symmetry and semidefiniteness tolerance for the input.
    #[arg(long = "cp-tol", default_value_t = DEFAULT_CP_TOL)]
    cp_tol: f64,
}

#[derive(Args)]
struct ScanArgs {
    /// nested-rect, tensor-2x2x2 or cp-example.
    #[arg(long)]
    family: String,
    /// Points per parameter axis.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Parameter box a0:a1,b0:b1 (default: [0,1]² for nested-rect, [0,3]² otherwise).
    #[arg(long)]
    range: Option<String>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    strengthening: Strengthening,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dump(path: Option<&Path>, build: impl FnOnce() -> Result<ConicProblem, Error>) -> Result<(), Error> {
    if let Some(p) = path {
        std::fs::write(p, build()?.dump())?;
    }
    Ok(())
}

fn finish(report: BoundReport, common: &Common) -> Result<i32, Error> {
    write_or_print(common.out.as_deref(), &report.to_json())?;
    Ok(report.exit_code())
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Nonneg(args) => {
            let c = &args.common;
            let opts = RunOptions {
                bounds: parse_bound_list(&args.bounds, &BoundKind::NONNEG)?,
                solver: SolverOptions::with_tol(c.tol),
                builder: args.strengthening.builder(),
            };
            let a = report::read_matrix_csv(&c.input, c.eps_zero)?;
            dump(c.dump.as_deref(), || model::build_tau_plus_matrix(&a, &opts.builder))?;
            finish(report::nonneg_report(&a, &opts)?, c)
        }
        Command::Tensor(args) => {
            let c = &args.common;
            let opts = RunOptions { solver: SolverOptions::with_tol(c.tol), ..RunOptions::default() };
            let t = report::read_tensor_json(&c.input, c.eps_zero)?;
            let rep = report::tensor_report(&t, &opts)?;
            dump(c.dump.as_deref(), || model::build_tau_plus_tensor(&t))?;
            finish(rep, c)
        }
        Command::Cp(args) => {
            let c = &args.common;
            let opts = RunOptions {
                bounds: parse_bound_list(&args.bounds, &BoundKind::CP)?,
                solver: SolverOptions::with_tol(c.tol),
                builder: BuilderOptions::default(),
            };
            let a = CpInputMatrix::from_matrix(report::read_matrix_csv(&c.input, c.eps_zero)?, args.cp_tol)?;
            dump(c.dump.as_deref(), || model::build_tau_cp(&a))?;
            finish(report::cp_report(&a, &opts)?, c)
        }
        Command::Scan(args) => {
            let family: ScanFamily = args.family.parse()?;
            let range = match &args.range {
                Some(r) => r.parse::<ScanRange>()?,
                None => family.default_range(),
            };
            let opts = RunOptions {
                solver: SolverOptions::with_tol(args.tol),
                builder: args.strengthening.builder(),
                ..RunOptions::default()
            };
            let rows = report::scan(family, args.grid, &range, &opts)?;
            write_or_print(args.out.as_deref(), &report::scan_to_csv(&rows))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("atomrank: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
