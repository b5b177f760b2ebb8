use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use tdm::cli::{self, CliError, Experiment, ExperimentConfig, Profile};

#[derive(Parser, Debug)]
#[command(name = "tdm", version, about = "Run a spacetime density matrix experiment and write its data")]
struct Args {
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment name; overrides the config
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build(args: Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&args.config, args.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(e)) => ExperimentConfig::new(e),
        (None, None) => return Err(CliError::Config("pass --config or --experiment".into())),
    };
    if let Some(e) = args.experiment {
        if args.config.is_some() && e != cfg.experiment {
            cfg.parameters.clear();
        }
        cfg.experiment = e;
    }
    if let Some(p) = args.profile {
        cfg.profile = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = cli::init_threads().and_then(|_| build(args)).and_then(|cfg| cli::run(&cfg));
    match result {
        Ok(summary) => {
            for c in &summary.checks {
                println!("{:<6} {:<40} {:.6e}  {}", if c.pass { "ok" } else { "miss" }, c.name, c.value, c.detail);
            }
            ExitCode::SUCCESS
        }
        Err(e @ CliError::Assertion(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
