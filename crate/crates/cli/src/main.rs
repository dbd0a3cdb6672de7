mod cli;
mod commands;
mod config;
mod error;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;

use cli::{Cli, Command, QcaCommand};
use commands::Output;
use error::CliError;

#[derive(Serialize)]
struct ResultRecord<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a serde_json::Value,
    result: &'a serde_json::Value,
    wall_clock_seconds: f64,
}

type Runner = fn(&cli::Common) -> Result<Output, CliError>;

fn emit(out: &Path, o: &Output, seconds: f64) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    let record = ResultRecord {
        command: &o.command,
        version: env!("CARGO_PKG_VERSION"),
        config: &o.config,
        result: &o.result,
        wall_clock_seconds: seconds,
    };
    fs::write(out.join("result.json"), serde_json::to_string_pretty(&record)? + "\n")?;
    if let Some(rows) = &o.samples {
        let mut w = csv::Writer::from_path(out.join("samples.csv"))?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    if let Some(c) = &o.circuit {
        fs::write(out.join("circuit.json"), serde_json::to_string_pretty(c)? + "\n")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (common, run): (_, Runner) = match &cli.command {
        Command::Distinguish(c) => (c, commands::distinguish),
        Command::Learn(c) => (c, commands::learn),
        Command::Qca(QcaCommand::Index(c)) => (c, commands::qca_index),
        Command::Qca(QcaCommand::Compile(c)) => (c, commands::qca_compile),
        Command::Qca(QcaCommand::Pump(c)) => (c, commands::qca_pump),
        Command::Qca(QcaCommand::Decompose(c)) => (c, commands::qca_decompose),
        Command::Qca(QcaCommand::Verify(c)) => (c, commands::qca_verify),
    };
    let outcome = run(common).and_then(|o| {
        emit(&common.out, &o, start.elapsed().as_secs_f64())?;
        Ok(o)
    });
    match outcome {
        Ok(o) => {
            println!("{}: {}", o.command, o.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
