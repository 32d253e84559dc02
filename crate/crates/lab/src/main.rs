use clap::Parser;

fn main() {
    let args = dyadlab::cli::Args::parse();
    std::process::exit(dyadlab::cli::run(&args));
}
