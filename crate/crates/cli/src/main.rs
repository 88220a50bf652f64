use clap::Parser;
use settomo_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let code = execute(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
