mod artifact;
mod commands;
mod figure;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Outcome of a command, mapped to the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Fails,
    Indeterminate,
}

const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "rach", version, about = "Deterministic access codes for random access with SIC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a codebook or block design.
    #[command(subcommand)]
    Construct(Construct),
    /// Block design utilities.
    #[command(subcommand)]
    Design(DesignCmd),
    /// Check a decodability property of a codebook.
    Verify(VerifyArgs),
    /// Estimate the packet error rate by simulation.
    Simulate(SimulateArgs),
    /// Exhaustive search for a largest 3-IC code.
    Search(SearchArgs),
    /// Search results for a range of frame sizes next to reference values.
    Table(TableArgs),
    /// Regenerate the data behind a PER figure.
    Figure(FigureArgs),
}

#[derive(Subcommand, Debug)]
enum Construct {
    /// All weight-k patterns of length n.
    Cw {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Refuse to enumerate more than this many patterns.
        #[arg(long, default_value_t = rach_core::design::DEFAULT_ENUM_CAP)]
        cap: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Steiner triple system S(2,3,n).
    Sts {
        #[arg(long)]
        n: usize,
        /// Write the incidence codebook instead of the block list.
        #[arg(long)]
        codebook: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lift a 3-IC code of frame n to frame n+3.
    Busschbach {
        #[arg(long = "in")]
        input: PathBuf,
        /// Maximum number of 111a candidates examined.
        #[arg(long, default_value_t = 1 << 20)]
        budget: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum DesignCmd {
    /// Check that every t-subset lies in exactly one block.
    Verify { file: PathBuf },
    /// Convert a block design into its incidence codebook.
    Codebook {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a bundled design (s35_26 or s35_65).
    Bundled {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct CodeInput {
    /// Codebook file.
    #[arg(long)]
    code: Option<PathBuf>,
    /// Block design file, used through its incidence codebook.
    #[arg(long)]
    design: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Ic,
    Superimposed,
    Coverfree,
    Rc,
    Prop1,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    input: CodeInput,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, value_enum, default_value_t = Mode::Ic)]
    mode: Mode,
    /// Subset checks allowed before answering "indeterminate".
    #[arg(long, default_value_t = rach_core::verify::DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct SimInput {
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long)]
    design: Option<PathBuf>,
    /// Random weight-k patterns of length n, as `n,k`.
    #[arg(long, value_parser = parse_pair)]
    random: Option<(usize, usize)>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    input: SimInput,
    /// Access intensity, or a comma-separated list.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_lambda)]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    n: usize,
    /// Node limit per frame size; unlimited by default.
    #[arg(long)]
    budget_nodes: Option<u64>,
    #[arg(long)]
    no_symmetry: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, default_value_t = 7)]
    n_max: usize,
    #[arg(long)]
    budget_nodes: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FigureName {
    Fig1,
    Fig2,
}

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(value_enum)]
    name: FigureName,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of points on the log-spaced intensity grid over [0.01, 1].
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(2..))]
    points: u32,
    /// Directory receiving one CSV per curve and a manifest.
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `n,k`, found {s:?}"))?;
    let n = a.trim().parse().map_err(|_| format!("bad n in {s:?}"))?;
    let k = b.trim().parse().map_err(|_| format!("bad k in {s:?}"))?;
    Ok((n, k))
}

fn parse_lambda(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("bad number {s:?}"))?;
    if v > 0.0 && v.is_finite() { Ok(v) } else { Err(format!("lambda must be positive, found {s:?}")) }
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RACH_THREADS") else {
        return Ok(());
    };
    let n: usize =
        raw.trim().parse().map_err(|_| format!("RACH_THREADS: expected a positive integer, found {raw:?}"))?;
    if n == 0 {
        return Err("RACH_THREADS: must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| format!("RACH_THREADS: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // first paragraph only, folded onto one line: diagnosis plus flag
            let rendered = e.render().to_string();
            let line: Vec<&str> = rendered.lines().take_while(|l| !l.trim().is_empty()).map(str::trim).collect();
            eprintln!("{}", line.join(" "));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    match commands::run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Fails) => ExitCode::from(1),
        Ok(Status::Indeterminate) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
