use clap::error::ErrorKind;
use clap::Parser;

use cellfclust_cli::args::Cli;
use cellfclust_cli::runner;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    if let Some(cap) = cli.thread_cap() {
        // Best effort: if a pool is already running the cap cannot change.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cap.get())
            .build_global();
    }

    if let Err(e) = runner::dispatch(&cli.command) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
