use clap::Parser;

use stagesurv::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("{}", e.message.trim_end());
        std::process::exit(e.code);
    }
}
