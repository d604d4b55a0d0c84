use clap::Parser;

fn main() {
    let cli = smoothparam::cli::Cli::parse();
    std::process::exit(smoothparam::cli::run(cli));
}
