use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use d2d_cache::harness::output::write_outputs;
use d2d_cache::harness::{analytic_rows, run_experiment, scaling_summaries, ExperimentConfig, Profile, Scheme};
use d2d_cache::{Error, Result};

#[derive(Parser)]
#[command(name = "d2dsim", version, about = "D2D caching network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment file layered over the profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; falls back to $D2DSIM_OUT_DIR, then ./results.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "desk")]
    profile: Profile,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// First point of every grid, configured schemes.
    Simulate,
    /// Full grid, configured schemes.
    Sweep,
    /// Closed-form tradeoff bound and scaling orders.
    Analytic,
    /// D2D, coded multicast, harmonic and unicast on shared realizations.
    Compare,
    /// Check the configuration and list every problem.
    Validate,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::read(p, cli.profile)?,
        None => cli.profile.config(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("D2DSIM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    cfg.validate()?;
    let dir = out_dir(cli);
    let (rows, users) = match cli.command {
        Command::Validate => {
            println!("ok");
            return Ok(());
        }
        Command::Analytic => {
            let rows = analytic_rows(&cfg)?;
            std::fs::create_dir_all(&dir)?;
            let summaries: Vec<_> = scaling_summaries(&cfg)
                .into_iter()
                .map(|((n, m, c), s)| serde_json::json!({ "n": n, "m": m, "M": c, "summary": s }))
                .collect();
            std::fs::write(dir.join("scaling.json"), serde_json::to_string_pretty(&summaries)?)?;
            (rows, Vec::new())
        }
        Command::Simulate => {
            let cfg = cfg.first_point();
            let out = run_experiment(&cfg, &cfg.schemes, cli.jobs)?;
            (out.rows, out.users)
        }
        Command::Sweep => {
            let out = run_experiment(&cfg, &cfg.schemes, cli.jobs)?;
            (out.rows, out.users)
        }
        Command::Compare => {
            let out = run_experiment(&cfg, &Scheme::COMPARE, cli.jobs)?;
            (out.rows, out.users)
        }
    };
    write_outputs(&dir, &rows, &users)?;
    eprintln!("wrote {} rows to {}", rows.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Validation(errs)) => {
            println!("{}", serde_json::to_string(&errs).unwrap_or_default());
            ExitCode::from(2)
        }
        Err(e) => {
            println!("{}", serde_json::to_string(&[e.to_string()]).unwrap_or_default());
            ExitCode::FAILURE
        }
    }
}
