use clap::Parser;
use dtsnn::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
