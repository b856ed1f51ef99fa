use clap::Parser;

fn main() {
    let cli = pbs_lex_cli::Cli::parse();
    if let Err(f) = pbs_lex_cli::run(cli) {
        eprintln!("error: {:#}", f.error());
        std::process::exit(f.exit_code());
    }
}
