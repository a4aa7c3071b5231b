mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Globals;

fn init_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("SRKBQA_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("SRKBQA_THREADS={value:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }

    let g = Globals {
        seed: cli.seed,
        config: cli.config.clone(),
        manifest: cli.manifest.clone(),
    };
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(a, &g),
        Command::Synth(a) => commands::synth(a, &g),
        Command::Pretrain(a) => commands::pretrain(a, &g),
        Command::TrainReasoner(a) => commands::train_reasoner(a, &g),
        Command::Finetune(a) => commands::finetune(a, &g),
        Command::Retrieve(a) => commands::retrieve(a, &g),
        Command::Eval(a) => commands::eval(a, &g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: error: {e:#}", cli.command.name());
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
