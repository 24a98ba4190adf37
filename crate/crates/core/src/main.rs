use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use relu_optset::cli::{exit_code, run, Command, ExperimentConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Describe,
    Tune,
    Prune,
    Path,
    Sensitivity,
    Patterns,
    #[value(name = "probe-1d")]
    Probe1d,
}

#[derive(Debug, Parser)]
#[command(name = "relu-optset", version, about = "Optimal sets of convex two-layer ReLU reformulations")]
struct Args {
    #[arg(value_enum, required_unless_present = "show_config")]
    command: Option<Cmd>,
    #[arg(long, required_unless_present = "show_config")]
    config: Option<PathBuf>,
    /// Replaces every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print all defaults and exit.
    #[arg(long)]
    show_config: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("RELU_OPTSET_LOG", "warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if args.show_config {
        print!("{}", ExperimentConfig::show_defaults());
        return ExitCode::SUCCESS;
    }
    let command = match args.command.expect("required by clap") {
        Cmd::Solve => Command::Solve,
        Cmd::Describe => Command::Describe,
        Cmd::Tune => Command::Tune,
        Cmd::Prune => Command::Prune,
        Cmd::Path => Command::Path,
        Cmd::Sensitivity => Command::Sensitivity,
        Cmd::Patterns => Command::Patterns,
        Cmd::Probe1d => Command::Probe1d,
    };
    let cfg = ExperimentConfig::load(&args.config.expect("required by clap")).and_then(|mut cfg| {
        if let Some(s) = args.seed {
            cfg.override_seed(s);
        }
        if let Some(o) = args.out {
            cfg.output.dir = o;
        }
        cfg.validate(command)?;
        Ok(cfg)
    });
    // Anything wrong with the configuration itself is a parse failure.
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = run(command, &cfg);
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
