use clap::error::ErrorKind;
use clap::Parser;
use evmscope_cli::{run, Cli, ExitStatus};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => ExitStatus::Error as i32,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let status = run(cli.command).unwrap_or_else(|e| {
        eprintln!("evmscope: {e}");
        ExitStatus::Error
    });
    std::process::exit(status as i32);
}
