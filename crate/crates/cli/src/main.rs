use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use layersolve_cli::commands::{self, Outcome, Overrides, SpectrumTarget};
use layersolve_cli::config::{parse_a_list, parse_pairs, thread_cap};
use layersolve_cli::{CliError, CliResult, Config};

/// Boundary-layer solutions of 2u'' = u^2 - A(1 - x^2), u(+-1) = 0.
///
/// Exit codes: 0 pass, 1 threshold failure, 2 configuration error, 3 numerical failure.
/// LAYERSOLVE_THREADS caps the worker threads.
#[derive(Parser)]
#[command(name = "layersolve", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated A values, increasing.
    #[arg(long = "A-list", global = true, value_name = "A,...")]
    a_list: Option<String>,
    /// Branch pairs such as PP,PM,MP,MM (left letter at x=-1), or all.
    #[arg(long, global = true, value_name = "PAIRS")]
    branches: Option<String>,
    /// Half-width of the outer correction cutoff.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Inner-zone constant D.
    #[arg(long = "big-d", global = true)]
    big_d: Option<f64>,
    /// Half-line truncation.
    #[arg(long = "s-max", global = true)]
    s_max: Option<f64>,
    /// Newton residual tolerance relative to A.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for reports and data files.
    #[arg(long = "out-dir", global = true, default_value = "layersolve-out")]
    out_dir: PathBuf,
    /// Seed for every random input.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write gnuplot-ready .dat files.
    #[arg(long = "emit-plots", global = true)]
    emit_plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve both boundary-layer profiles and export them.
    Painleve,
    /// Assemble the composite approximation and report its residual.
    Composite,
    /// Correct the composite approximation by Newton iteration.
    Solve,
    /// Half-line, difference-linearization or interval spectra.
    Spectrum {
        #[arg(long, value_enum, default_value = "interval")]
        operator: SpectrumTarget,
        /// Number of eigenvalues.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Energy, threshold, functional and uniqueness checks on Y+ - Y-.
    Theory,
    /// Full harness over the A list and branch pairs.
    Sweep,
}

fn config(c: &Common) -> CliResult<Config> {
    let mut cfg = match &c.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let o = Overrides {
        a_list: c.a_list.as_deref().map(parse_a_list).transpose()?,
        branches: c.branches.as_deref().map(parse_pairs).transpose()?,
        delta: c.delta,
        big_d: c.big_d,
        s_max: c.s_max,
        tol: c.tol,
        seed: c.seed,
    };
    o.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<Outcome> {
    let mut cfg = config(&cli.common)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap()? {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Config(e.to_string()))?
    };
    let out = &cli.common.out_dir;
    let plots = cli.common.emit_plots;
    pool.install(|| match cli.command {
        Command::Painleve => commands::painleve(&cfg, out, plots),
        Command::Composite => commands::composite(&cfg, out, plots),
        Command::Solve => commands::solve(&cfg, out, plots),
        Command::Spectrum { operator, k } => {
            if let Some(k) = k {
                cfg.spectrum.k = k;
            }
            commands::spectrum(&cfg, out, operator)
        }
        Command::Theory => commands::theory(&cfg, out),
        Command::Sweep => commands::sweep(&cfg, out, plots),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) => {
            for l in &o.lines {
                println!("{l}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(if o.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
