//! Thin command-line wrapper over the library's `cli` module.

use clap::Parser;
use std::process::ExitCode;
use std::str::FromStr;

use bbm_lab::cli::{run_command, CliError, CommandName, RunConfig};

/// Two-type reducible branching Brownian motion laboratory.
#[derive(Parser, Debug)]
#[command(name = "bbm", version, about, long_about = None)]
struct Args {
    /// classify | constants | approx | centering | simulate | fit | localize
    /// | decorate | laplace | martingale | fkpp | oracle
    command: String,

    /// Oracle target (speed | bridge | transform | lfun | identity | quad)
    target: Option<String>,

    /// Configuration file (`key = value` lines, `#` comments)
    #[arg(long)]
    config: Option<std::path::PathBuf>,

    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    threads: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    family: Option<String>,
    /// Proximity exponent; `inf` for the unperturbed target
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    prune_depth: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    refine: bool,
    #[arg(long)]
    residual: bool,

    /// Any other configuration key, repeatable: --set key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        cfg.merge_text(&text)?;
    }
    // flags override the file
    let mut apply = |key: &str, value: String| cfg.apply(key, &value, 0);
    if let Some(v) = args.seed {
        apply("seed", v.to_string())?;
    }
    if let Some(v) = &args.out_dir {
        apply("out_dir", v.clone())?;
    }
    if let Some(v) = args.threads {
        apply("threads", v.to_string())?;
    }
    if let Some(v) = args.reps {
        apply("reps", v.to_string())?;
    }
    if let Some(v) = args.t {
        apply("t", v.to_string())?;
    }
    if let Some(v) = args.beta {
        apply("beta", v.to_string())?;
    }
    if let Some(v) = args.sigma2 {
        apply("sigma2", v.to_string())?;
    }
    if let Some(v) = &args.family {
        apply("family", v.clone())?;
    }
    if let Some(v) = &args.h {
        apply("h", v.clone())?;
    }
    if let Some(v) = &args.mode {
        apply("mode", v.clone())?;
    }
    if let Some(v) = args.rho {
        apply("rho", v.to_string())?;
    }
    if let Some(v) = args.dx {
        apply("dx", v.to_string())?;
    }
    if let Some(v) = args.prune_depth {
        apply("prune_depth", v.to_string())?;
    }
    if let Some(v) = args.budget {
        apply("budget", v.to_string())?;
    }
    if args.refine {
        apply("refine", "true".to_string())?;
    }
    if args.residual {
        apply("residual", "true".to_string())?;
    }
    for pair in &args.set {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(CliError::Validation(format!(
                "--set expects KEY=VALUE, got {pair:?}"
            )));
        };
        cfg.apply(key.trim(), value, 0)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match CommandName::from_str(&args.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome =
        build_config(&args).and_then(|cfg| run_command(command, args.target.as_deref(), &cfg));
    match outcome {
        Ok(out) => {
            for line in &out.stdout {
                println!("{line}");
            }
            println!("manifest: {}", out.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
