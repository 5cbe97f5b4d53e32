use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wbansim::experiment::{emit, parse_sweep, single, sweep, Format};
use wbansim::{RunError, Scenario, Simulation, TraceMode};

#[derive(Parser)]
#[command(name = "wbansim", version, about = "802.15.4 WBAN attack simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print the aggregated metrics table.
    Run {
        scenario: PathBuf,
        /// Master seed (overrides run.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep one key: `path=v1,v2,...`.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump the event trace of replication 0 as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Override a scenario key: `path=value`. Repeatable.
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("wbansim: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let Command::Run {
        scenario,
        seed,
        sweep: sweep_spec,
        format,
        out,
        trace,
        overrides,
    } = Cli::parse().command;

    let mut sc = match Scenario::load(&scenario) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    for o in &overrides {
        let Some((k, v)) = o.split_once('=') else {
            return fail(format!("--set expects PATH=VALUE, got `{o}`"));
        };
        if let Err(e) = sc.set(k.trim(), v.trim()) {
            return fail(e);
        }
    }
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    if let Err(e) = sc.validate() {
        return fail(e);
    }

    let table = match sweep_spec {
        Some(spec) => match parse_sweep(&spec) {
            Ok((axis, values)) => sweep(&sc, &axis, &values),
            Err(e) => Err(RunError::Config(e)),
        },
        None => single(&sc),
    };
    let table = match table {
        Ok(t) => t,
        Err(e) => return fail(e),
    };

    if let Some(path) = trace {
        let seed = wbansim::experiment::replication_seed(sc.seed, 0);
        let run = Simulation::new(&sc, seed, TraceMode::Full)
            .map_err(RunError::from)
            .and_then(|s| Ok(s.run()?));
        let run = match run {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let mut lines = String::new();
        for rec in &run.trace {
            lines.push_str(&serde_json::to_string(rec).expect("trace serializes"));
            lines.push('\n');
        }
        if let Err(e) = std::fs::write(&path, lines) {
            return fail(format!("{}: {e}", path.display()));
        }
    }

    let bytes = emit(&table, format);
    let written = match out {
        Some(path) => std::fs::write(&path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
