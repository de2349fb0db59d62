use clap::Parser;

fn main() {
    let args = qudit_bell::cli::Args::parse();
    std::process::exit(qudit_bell::cli::main_with_args(args));
}
