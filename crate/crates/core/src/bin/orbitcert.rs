use clap::Parser;
use orbitcert::cli::{main_with_args, CliArgs};

fn main() {
    std::process::exit(main_with_args(CliArgs::parse()));
}
