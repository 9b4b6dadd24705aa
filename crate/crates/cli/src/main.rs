use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use slq_cli::{run, write_files, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|out| {
        write_files(&out)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            for n in &out.notices {
                eprintln!("note: {n}");
            }
            for (path, _) in &out.files {
                eprintln!("wrote {}", path.display());
            }
            let _ = std::io::stdout().write_all(out.stdout.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
