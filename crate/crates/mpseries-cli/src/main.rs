use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mpseries_cli::{options_from_file, resolve, run, Command, Options, EXIT_CONFIG};

/// Numerical toolkit for half-integral weight Poincaré series on the
/// metaplectic cover: series evaluation, coefficient tables, L-values,
/// non-vanishing certificates, and special-function self-tests.
#[derive(Parser)]
#[command(name = "mpseries", version, about)]
struct Cli {
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Group level (a positive multiple of 4).
    #[arg(long, global = true)]
    level: Option<u32>,

    /// Half-integral weight as a fraction over 2, e.g. 13/2.
    #[arg(long = "m", global = true, value_name = "ODD/2")]
    weight: Option<String>,

    /// Dirichlet character label: trivial or kronecker:D.
    #[arg(long, global = true)]
    character: Option<String>,

    /// Complex parameter written as a+bi.
    #[arg(long, global = true)]
    s: Option<String>,

    /// Evaluation point on the upper half-plane, written as a+bi.
    #[arg(long, global = true)]
    z: Option<String>,

    /// Poincaré seed: exp:<n> or kernel (kernel uses --s).
    #[arg(long, global = true)]
    seed: Option<String>,

    /// Largest |c| enumerated in coset sums.
    #[arg(long = "c-bound", global = true)]
    c_bound: Option<f64>,

    /// Term floor for inner kernel evaluations.
    #[arg(long = "n-terms", global = true)]
    n_terms: Option<usize>,

    /// Absolute truncation target.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Gauge: abs, pow:<alpha>, or clamp:<cap>.
    #[arg(long, global = true)]
    gauge: Option<String>,

    /// Number of Fourier coefficients to extract.
    #[arg(long, global = true)]
    count: Option<usize>,

    /// Extraction height (defaults to an amplification-aware choice).
    #[arg(long, global = true)]
    y0: Option<f64>,

    /// Rectangle parameter ε > 1/2 for the min-weight scan.
    #[arg(long, global = true)]
    eps: Option<f64>,

    /// Rectangle parameter ν > ε for the min-weight scan.
    #[arg(long, global = true)]
    nu: Option<f64>,

    /// Rectangle half-height η > 0 for the min-weight scan.
    #[arg(long, global = true)]
    eta: Option<f64>,

    /// Read lvalue coefficients from a CSV table instead of extracting them.
    #[arg(long = "coeffs-in", global = true)]
    coeffs_in: Option<PathBuf>,

    /// Write the main artifact to this path (also printed to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format: report or csv.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Worker threads (0 = automatic). Results are thread-count independent.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a Poincaré series at a point, with its truncation estimate.
    Eval,
    /// Extract a Fourier coefficient table (CSV by default).
    Coeffs,
    /// Print the Dirichlet and unfolded L-values where their domains permit.
    Lvalue,
    /// Run the non-vanishing certificate for the configured parameters.
    Certify,
    /// Scan for the least weight covering an s-rectangle.
    M0,
    /// Run the special-function identity suite and print residuals.
    Sanity,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Eval => Command::Eval,
        Cmd::Coeffs => Command::Coeffs,
        Cmd::Lvalue => Command::Lvalue,
        Cmd::Certify => Command::Certify,
        Cmd::M0 => Command::MinWeight,
        Cmd::Sanity => Command::Sanity,
    };

    let from_file = match &cli.config {
        Some(path) => match options_from_file(path) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => Options::default(),
    };
    let from_flags = Options {
        level: cli.level,
        weight: cli.weight,
        character: cli.character,
        s: cli.s,
        z: cli.z,
        seed: cli.seed,
        c_bound: cli.c_bound,
        n_terms: cli.n_terms,
        tol: cli.tol,
        gauge: cli.gauge,
        count: cli.count,
        y0: cli.y0,
        eps: cli.eps,
        nu: cli.nu,
        eta: cli.eta,
        coeffs_in: cli.coeffs_in,
        out: cli.out,
        format: cli.format,
        threads: cli.threads,
    };
    let options = from_file.merged_with(from_flags);

    let cfg = match resolve(command, &options) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let code = run(&cfg, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
