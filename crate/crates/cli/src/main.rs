use clap::Parser;

fn main() {
    let cli = pplasso_cli::args::Cli::parse();
    if let Err(e) = pplasso_cli::run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
