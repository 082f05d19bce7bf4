//! `truncsde`: run convergence, positivity, timing and path experiments for
//! positivity-preserving SDE schemes and write CSV reports.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, ConfigError, ExperimentConfig, RawConfig};

const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "truncsde", version, about, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Write full trajectories of one scheme at one step size.
    Simulate(Flags),
    /// Strong errors against a fine reference and fitted rates.
    Convergence(Flags),
    /// Frequency of the TEM iterate reaching zero, per step size.
    Positivity(Flags),
    /// Errors and single-threaded run times at one step size.
    Compare(Flags),
    /// Print model validity flags and assumption diagnostics.
    Check(Flags),
}

/// Every flag may also be given in the config file under the same name
/// (with `T` for `--horizon`); flags win.
#[derive(Debug, Args)]
struct Flags {
    /// Flat `key = value` file, `#` starts a comment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved config in file syntax and exit.
    #[arg(long)]
    print_config: bool,
    /// Preset or family: example-3-2, example-ait, example-cir,
    /// three-halves, ait-sahalia, cir-lamperti.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated: tem, tmil, em, bem, logtem, stem, stem2.
    #[arg(long)]
    schemes: Option<String>,
    /// Step sizes: `2^-5..2^-9`, `2^-5,2^-7` or decimals.
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    /// Time horizon T.
    #[arg(long = "horizon", short = 'T')]
    horizon: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long, short)]
    output: Option<String>,
    /// Truncation radius scale for TEM and TMil.
    #[arg(long)]
    l1: Option<String>,
    /// Truncation radius exponent for TEM and TMil.
    #[arg(long)]
    gamma: Option<String>,
    /// Reference level m, reference step 2^-m.
    #[arg(long)]
    ref_m: Option<String>,
    /// `self` or `common:<scheme>`.
    #[arg(long)]
    ref_mode: Option<String>,
    /// Worker cap for path simulation.
    #[arg(long)]
    threads: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a_m1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b2: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("model", &self.model),
            ("schemes", &self.schemes),
            ("dt", &self.dt),
            ("paths", &self.paths),
            ("T", &self.horizon),
            ("seed", &self.seed),
            ("output", &self.output),
            ("l1", &self.l1),
            ("gamma", &self.gamma),
            ("ref_m", &self.ref_m),
            ("ref_mode", &self.ref_mode),
            ("threads", &self.threads),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("sigma", &self.sigma),
            ("x0", &self.x0),
            ("a_m1", &self.a_m1),
            ("a0", &self.a0),
            ("a1", &self.a1),
            ("a2", &self.a2),
            ("b", &self.b),
            ("kappa", &self.kappa),
            ("theta", &self.theta),
            ("b1", &self.b1),
            ("b2", &self.b2),
        ]
    }
}

fn load(command: Command, flags: &Flags) -> Result<ExperimentConfig, String> {
    let mut raw = RawConfig::new();
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        raw = config::parse_text(&text).map_err(|e: ConfigError| format!("{}: {e}", path.display()))?;
    }
    raw.insert("command".into(), command.as_str().into());
    for (key, value) in flags.overrides() {
        if let Some(v) = value {
            raw.insert(key.into(), v.clone());
        }
    }
    ExperimentConfig::resolve(&raw).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Convergence(f) => (Command::Convergence, f),
        Sub::Positivity(f) => (Command::Positivity, f),
        Sub::Compare(f) => (Command::Compare, f),
        Sub::Check(f) => (Command::Check, f),
    };
    let cfg = match load(command, flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if flags.print_config {
        print!("{}", cfg.serialize());
        return ExitCode::SUCCESS;
    }
    match run::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
