use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use xbar_cli::{run, with_threads, Cli, CliError, Command, Output};

fn out_path(cmd: &Command) -> Option<PathBuf> {
    match cmd {
        Command::Calibrate(_) | Command::MakeFixtures(_) => None,
        Command::Validate(a) => a.out.clone(),
        Command::SweepMappings(a) => a.out.clone(),
        Command::ConvBench(a) => a.out.clone(),
        Command::Mvm(a) => a.out.clone(),
    }
}

fn emit(cmd: &Command, out: &Output) -> Result<(), CliError> {
    let summary = serde_json::to_string_pretty(&out.summary).expect("serialisable") + "\n";
    match out_path(cmd) {
        Some(path) => {
            std::fs::write(&path, &out.body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut json = path.clone().into_os_string();
            json.push(".json");
            let json = PathBuf::from(json);
            std::fs::write(&json, summary).map_err(|e| CliError::Io(format!("{}: {e}", json.display())))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.body.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = with_threads(cli.threads, || run(&cli.command))
        .and_then(|r| r)
        .and_then(|out| emit(&cli.command, &out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xbar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
