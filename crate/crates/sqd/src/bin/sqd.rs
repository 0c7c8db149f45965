use clap::Parser;
use sqd::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(msg) => print!("{msg}"),
        Err(e) => {
            eprintln!("sqd: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
