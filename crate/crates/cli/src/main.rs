//! `kingman`: command-line front end to the kingman-core library.
//!
//! Exit status is 0 on success, 1 when `verify` reports a failed check and
//! 2 for usage, configuration or input errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kingman_core::processes::{BesselScaling, JumpAtom};

use config::{parse_jump, CommandKind, Format, Law, Process, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "kingman", version, about = "Kingman convolution, Bessel and Kingman-Levy processes")]
struct Cli {
    /// JSON file with run settings; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for relative output paths.
    #[arg(long, global = true, env = "KINGMAN_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact file (CSV with a JSON sidecar next to it).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of tables printed to stdout.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write (x, y) tables for plotting to this file.
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the normalized Bessel kernel and J_s.
    Kernel {
        #[arg(long, allow_negative_numbers = true)]
        s: Option<f64>,
        /// Points to evaluate at (repeat or separate by commas).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Draw a batch from a law.
    Sample {
        #[arg(long, value_enum)]
        law: Option<Law>,
        #[arg(long, allow_negative_numbers = true)]
        s: Option<f64>,
        /// Scales of a Rayleighian law.
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        /// Levy pair (JSON) for `--law levy`.
        #[arg(long)]
        pair: Option<PathBuf>,
        /// Time of the Levy marginal.
        #[arg(long)]
        time: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Convolve two stored batches.
    Convolve {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        other: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Empirical and analytic radial characteristic functions.
    Radchf {
        /// Stored batch.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Levy pair whose transform is printed alongside.
        #[arg(long)]
        pair: Option<PathBuf>,
        /// Time at which the pair's transform is taken.
        #[arg(long)]
        time: Option<f64>,
        /// One argument vector; the default grid is used when omitted.
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate a path.
    Simulate {
        #[arg(long, value_enum)]
        process: Option<Process>,
        #[arg(long, allow_negative_numbers = true)]
        s: Option<f64>,
        /// Dimension of a Brownian motion.
        #[arg(long)]
        d: Option<usize>,
        /// Component variance of a Brownian motion per unit time.
        #[arg(long)]
        variance: Option<f64>,
        #[arg(long, value_parser = parse_scaling)]
        scaling: Option<BesselScaling>,
        #[arg(long)]
        pair: Option<PathBuf>,
        #[command(flatten)]
        levy: LevyArgs,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Harvest Wiener-Hopf samples and check the factorization.
    Whf {
        #[command(flatten)]
        levy: LevyArgs,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        nu: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the verification suite.
    Verify {
        /// Smaller samples, same thresholds.
        #[arg(long)]
        quick: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Default)]
struct LevyArgs {
    /// Symmetric Levy spec (JSON with `sigma` and `jump_atoms`).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Symmetric jump atom `V:RATE`; repeatable.
    #[arg(long = "jump", value_parser = parse_jump)]
    jumps: Vec<JumpAtom>,
}

fn parse_scaling(text: &str) -> Result<BesselScaling, String> {
    match text {
        "kingman" => Ok(BesselScaling::Kingman),
        "standard" => Ok(BesselScaling::Standard),
        _ => Err(format!("expected `kingman` or `standard`, got {text:?}")),
    }
}

fn common(kind: CommandKind, c: Common) -> RunConfig {
    RunConfig {
        command: Some(kind),
        seed: c.seed,
        out: c.out,
        format: c.format,
        emit_plot_data: c.emit_plot_data,
        ..Default::default()
    }
}

fn levy(cfg: RunConfig, l: LevyArgs) -> RunConfig {
    RunConfig {
        spec: l.spec,
        sigma: l.sigma,
        jumps: (!l.jumps.is_empty()).then_some(l.jumps),
        ..cfg
    }
}

impl Command {
    fn into_config(self) -> RunConfig {
        match self {
            Command::Kernel { s, x, common: c } => RunConfig {
                s,
                x,
                ..common(CommandKind::Kernel, c)
            },
            Command::Sample {
                law,
                s,
                lambda,
                pair,
                time,
                n,
                common: c,
            } => RunConfig {
                law,
                s,
                lambda,
                pair,
                time,
                n,
                ..common(CommandKind::Sample, c)
            },
            Command::Convolve { input, other, common: c } => RunConfig {
                input,
                other,
                ..common(CommandKind::Convolve, c)
            },
            Command::Radchf {
                input,
                pair,
                time,
                t,
                common: c,
            } => RunConfig {
                input,
                pair,
                time,
                t,
                ..common(CommandKind::Radchf, c)
            },
            Command::Simulate {
                process,
                s,
                d,
                variance,
                scaling,
                pair,
                levy: l,
                horizon,
                dt,
                common: c,
            } => levy(
                RunConfig {
                    process,
                    s,
                    d,
                    variance,
                    scaling,
                    pair,
                    horizon,
                    dt,
                    ..common(CommandKind::Simulate, c)
                },
                l,
            ),
            Command::Whf {
                levy: l,
                p,
                n_paths,
                dt,
                nu,
                theta,
                common: c,
            } => levy(
                RunConfig {
                    p,
                    n_paths,
                    dt,
                    nu,
                    theta,
                    ..common(CommandKind::Whf, c)
                },
                l,
            ),
            Command::Verify { quick, common: c } => RunConfig {
                quick: quick.then_some(true),
                ..common(CommandKind::Verify, c)
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let mut cfg = cli.command.map(Command::into_config).unwrap_or_default();
    cfg.out_dir = cli.out_dir;
    if let Some(path) = &cli.config {
        match RunConfig::from_file(path) {
            Ok(file) => cfg = cfg.over(file),
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        }
    }
    let mut stdout = std::io::stdout().lock();
    match commands::run(&cfg, &mut stdout) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
