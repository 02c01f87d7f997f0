use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use contextua::{render, run, Format, Options, COMMANDS};

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
    Dot,
}

/// Contextuality toolkit: Kochen-Specker colouring, Gleason reconstruction,
/// Bell analysis and Wigner symmetries on finite context posets.
#[derive(Parser)]
#[command(name = "contextua", version)]
struct Cli {
    /// One of: ks-check, ks-enumerate, gleason-roundtrip, gleason-reconstruct,
    /// bell-analyze, bell-classify, wigner-check, poset-export
    command: String,
    #[arg(long)]
    scenario: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Maximum number of sections to enumerate.
    #[arg(long, default_value_t = 1_000_000)]
    cap: usize,
    /// Seed for sampled states and symmetries.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to dot for poset-export and json otherwise.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if !COMMANDS.contains(&cli.command.as_str()) {
        eprintln!(
            "error: unknown command '{}'\n\nusage: contextua <COMMAND> --scenario PATH [OPTIONS]\ncommands: {}",
            cli.command,
            COMMANDS.join(", ")
        );
        return ExitCode::from(1);
    }
    let text = match std::fs::read_to_string(&cli.scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.scenario.display());
            return ExitCode::from(1);
        }
    };
    let opts = Options { tol: cli.tol, cap: cli.cap, seed: cli.seed };
    let report = match run(&cli.command, &text, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let format = match cli.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Text) => Format::Text,
        Some(FormatArg::Dot) => Format::Dot,
        None if cli.command == "poset-export" => Format::Dot,
        None => Format::Json,
    };
    let color =
        std::env::var_os("CONTEXTUA_NO_COLOR").is_none() && std::io::IsTerminal::is_terminal(&std::io::stdout());
    print!("{}", render(&report, format, color));
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, render(&report, format, false)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
