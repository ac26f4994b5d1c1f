mod args;
mod commands;
mod config;
mod error;
mod manifest;

use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;
use manifest::{OutputDigest, RunManifest};

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<OutputDigest>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    files
        .iter()
        .map(|(name, data)| {
            let path = dir.join(name);
            std::fs::write(&path, data).map_err(|e| CliError::io(&path, e))?;
            Ok(OutputDigest::of(name, data))
        })
        .collect()
}

/// Runs a command, writes its files and manifest, and returns the manifest.
fn execute(command: &Command, seed: u64, cli: &Cli) -> Result<RunManifest, CliError> {
    let started = now();
    let out = commands::run(command, seed)?;
    let outputs = write_outputs(&cli.out_dir, &out.files)?;
    let manifest = RunManifest {
        command: command.name().to_string(),
        params: command.clone(),
        master_seed: seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: cli.threads,
        started,
        finished: now(),
        outputs,
    };
    manifest.write(&cli.out_dir)?;
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    std::io::stdout().flush().ok();
    match out.failure {
        Some(msg) => Err(CliError::Failed(msg)),
        None => Ok(manifest),
    }
}

fn replay(path: &Path, cli: &Cli) -> Result<(), CliError> {
    let old = RunManifest::read(path)?;
    if old.command != old.params.name() {
        return Err(CliError::Usage(format!("manifest {} is inconsistent", path.display())));
    }
    let new = match execute(&old.params, old.master_seed, cli) {
        Ok(m) => m,
        // A failing verification still leaves its manifest behind to compare.
        Err(CliError::Failed(_)) => RunManifest::read(&cli.out_dir.join(RunManifest::file_name(&old.command)))?,
        Err(e) => return Err(e),
    };
    let mut mismatched = Vec::new();
    for want in &old.outputs {
        if !new.outputs.contains(want) {
            mismatched.push(want.file.clone());
        }
    }
    if new.outputs.len() != old.outputs.len() {
        mismatched.push("<file set>".into());
    }
    if mismatched.is_empty() {
        eprintln!("replay: {} output(s) identical", old.outputs.len());
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "replay differs in: {}",
            mismatched.join(", ")
        )))
    }
}

fn main_inner() -> Result<(), CliError> {
    let argv = config::splice(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(e.exit_code());
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Replay(a) => replay(&a.manifest, &cli),
        c => execute(c, cli.seed, &cli).map(|_| ()),
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
