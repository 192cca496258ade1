mod args;
mod commands;
mod manifest;
mod reproduce;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use sphcond::{Error, ErrorKind};

use args::{Cli, Command};
use commands::Outcome;
use manifest::{digests, sha256_hex, unix_seconds, RunManifest};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_BAD_INPUT: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Infeasible => "infeasible",
        ErrorKind::BadInput => "bad_input",
        ErrorKind::Numeric => "numeric",
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Infeasible => EXIT_INFEASIBLE,
        ErrorKind::BadInput => EXIT_BAD_INPUT,
        ErrorKind::Numeric => EXIT_NUMERIC,
    }
}

fn fail(kind: ErrorKind, message: String) -> ExitCode {
    let body = json!({"error": {"kind": kind_name(kind), "message": message}});
    eprintln!(
        "{}",
        serde_json::to_string_pretty(&body).expect("error body serializes")
    );
    ExitCode::from(exit_code(kind))
}

fn dispatch(command: &Command) -> sphcond::Result<Outcome> {
    match command {
        Command::Gen(a) => commands::gen(a),
        Command::Dmeasure(a) => commands::dmeasure(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::AmbiEval(a) => commands::ambi_eval(a),
        Command::HrtfEval(a) => commands::hrtf_eval(a),
        Command::Reproduce(a) => reproduce::run(a),
    }
}

fn write_manifest(cli: &Cli, outcome: &Outcome, started_at: f64) -> sphcond::Result<()> {
    let Some(path) = &cli.manifest else {
        return Ok(());
    };
    let config = serde_json::to_vec(&cli.command)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command_line: std::env::args().collect(),
        seed: outcome.seed,
        config_hash: sha256_hex(&config),
        inputs: digests(&outcome.inputs)?,
        outputs: digests(&outcome.outputs)?,
        stdout_sha256: sha256_hex(outcome.stdout.as_bytes()),
        started_at,
        finished_at: unix_seconds(),
    };
    sphcond::io::write_json(path, &manifest)
}

fn run(cli: &Cli) -> sphcond::Result<()> {
    let started_at = unix_seconds();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("cannot configure thread pool: {e}")))?;
    }
    let outcome = dispatch(&cli.command)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(outcome.stdout.as_bytes())?;
    stdout.flush()?;
    write_manifest(cli, &outcome, started_at)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(ErrorKind::BadInput, e.render().to_string()),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string()),
    }
}
