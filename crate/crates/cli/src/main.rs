use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fishery_cli::commands::{self, FitArgs, SimulateArgs, SolveArgs};
use fishery_core::growth::GrowthVariant;

#[derive(Parser)]
#[command(name = "fishery", version, about = "Growth calibration and harvesting control for a managed fishery")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a growth curve and size spectrum to survey data.
    Fit {
        /// CSV with columns day, mean_weight_g, sample_count.
        #[arg(long)]
        daily: PathBuf,
        /// CSV with a weight_g column from the intensive survey.
        #[arg(long)]
        intensive: PathBuf,
        /// Season day of the intensive survey.
        #[arg(long)]
        intensive_day: f64,
        /// vb, logistic or logistic-tv.
        #[arg(long)]
        variant: GrowthVariant,
        /// Output JSON; the fitted curve goes next to it as <stem>.curve.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the harvesting problem for every cell of the configured sweep.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Time steps between stored CSV rows.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Simulate paths under a stored equilibrium policy.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Run directory written by `solve`.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Result JSON (defaults to <policy>/simulation_seed_<seed>.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge run directories into one long-format CSV.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Fit {
            daily,
            intensive,
            intensive_day,
            variant,
            out,
        } => {
            let curve = commands::fit(&FitArgs {
                daily: &daily,
                intensive: &intensive,
                intensive_day,
                variant,
                out: &out,
            })?;
            println!("wrote {} and {}", out.display(), curve.display());
        }
        Command::Solve { config, out, stride } => {
            let cells = commands::solve_config(&SolveArgs {
                config: &config,
                out: out.as_deref(),
                stride,
            })?;
            for c in cells {
                println!(
                    "eta {} psi {}: Phi(t0, x_bar) = {:.6e}, bounds {} -> {}",
                    c.cell.eta,
                    c.cell.psi,
                    c.phi_t0_x_bar,
                    if c.bounds_passed { "ok" } else { "VIOLATED" },
                    c.dir.display()
                );
            }
        }
        Command::Simulate {
            config,
            policy,
            seed,
            out,
        } => {
            let (path, rep) = commands::simulate(&SimulateArgs {
                config: &config,
                policy: &policy,
                seed,
                out: out.as_deref(),
            })?;
            let j = rep.result.j_estimate;
            print!("J = {:.6e} +/- {:.3e}", j.value, j.se);
            if let Some(c) = rep.comparison {
                print!(", Phi = {:.6e}, z = {:.2}", c.phi, c.z_score);
            }
            println!(" -> {}", path.display());
        }
        Command::Report { dirs, out } => {
            let rows = commands::report(&dirs, &out)?;
            println!("wrote {rows} rows to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(fishery_cli::exit_code(&e) as u8)
        }
    }
}
