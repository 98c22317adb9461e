use clap::Parser;
use measys_core::cli::{run, Args};

fn main() {
    let args = Args::parse();
    std::process::exit(run(&args));
}
