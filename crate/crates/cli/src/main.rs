use clap::Parser;

use tokenflow_cli::{configure_threads, execute, Cli};

fn main() {
    let cli = Cli::parse();
    let mut lines = Vec::new();
    let result = configure_threads().and_then(|()| execute(&cli, &mut lines));
    for line in &lines {
        println!("{line}");
    }
    if let Err(e) = result {
        eprintln!("tokenflow: {e}");
        std::process::exit(e.exit_code());
    }
}
