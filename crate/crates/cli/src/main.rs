use clap::Parser;

fn main() {
    let cli = rks_cli::Cli::parse();
    if let Err(e) = rks_cli::run(cli) {
        eprintln!("rks: {e}");
        std::process::exit(e.exit_code());
    }
}
