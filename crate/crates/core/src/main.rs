use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dtn_workbench::commands::{
    cmd_compare, cmd_run, cmd_sweep, cmd_train, CommandError, SweepSpec,
};
use dtn_workbench::config::load_config;
use dtn_workbench::ml::GbdtParams;
use dtn_workbench::routing::RouterKind;

#[derive(Parser)]
#[command(
    name = "dtnwb",
    version,
    about = "Delay-tolerant network routing workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation; writes events.csv and reports.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        plots: bool,
    },
    /// Run a parameter grid over seeds 0..N.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// name=v1,v2,... (repeatable)
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = dtn_workbench::commands::DEFAULT_GRID_CAP)]
        cap: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train the forwarding gate from collect-mode event logs.
    Train {
        #[arg(long, value_delimiter = ',', required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        rounds: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 5)]
        min_leaf: usize,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several routers on paired seeds and test the differences.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        routers: Vec<RouterKind>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        plots: bool,
    },
}

/// Runs the command and returns what it has to say on stdout.
fn run(cli: Cli) -> Result<String, CommandError> {
    let mut text = String::new();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            plots,
        } => {
            let cfg = load_config(&config)?;
            let res = cmd_run(&cfg, seed, &out, plots)?;
            let r = &res.report;
            let _ = writeln!(
                text,
                "created {} delivered {} relayed {} delivery_prob {:.4} overhead {}",
                r.created,
                r.delivered,
                r.relayed,
                r.delivery_prob,
                r.overhead_ratio
                    .map_or("undefined".into(), |o| format!("{o:.3}"))
            );
            for f in res.files {
                let _ = writeln!(text, "wrote {}", f.display());
            }
        }
        Command::Sweep {
            config,
            axes,
            seeds,
            cap,
            out,
        } => {
            let base = load_config(&config)?;
            let axes = axes
                .iter()
                .map(|a| SweepSpec::parse_axis(a))
                .collect::<Result<_, _>>()?;
            let spec = SweepSpec {
                base,
                axes,
                seeds,
                cap,
            };
            let rows = cmd_sweep(&spec, &out)?;
            let _ = writeln!(
                text,
                "wrote {} rows to {}",
                rows.len(),
                out.join("reports.csv").display()
            );
        }
        Command::Train {
            logs,
            rounds,
            depth,
            eta,
            lambda,
            gamma,
            min_leaf,
            split_seed,
            train_fraction,
            out,
        } => {
            let params = GbdtParams {
                rounds,
                max_depth: depth,
                learning_rate: eta,
                l2_lambda: lambda,
                min_split_gain: gamma,
                min_leaf_examples: min_leaf,
            };
            let res = cmd_train(&logs, &params, split_seed, train_fraction, &out)?;
            text.push_str(&res.summary);
            let _ = writeln!(text, "wrote {}", out.display());
        }
        Command::Compare {
            config,
            routers,
            seeds,
            out,
            plots,
        } => {
            let cfg = load_config(&config)?;
            let res = cmd_compare(&cfg, &routers, seeds, &out, plots)?;
            text.push_str(&res.verdict);
            let _ = writeln!(text, "wrote {}", out.display());
        }
    }
    Ok(text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(text) => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
