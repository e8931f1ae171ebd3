use clap::Parser;

fn main() {
    std::process::exit(ptgpe::cli::run(ptgpe::cli::Cli::parse()));
}
