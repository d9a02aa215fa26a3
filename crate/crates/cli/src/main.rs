use clap::Parser;

fn main() {
    let cli = brc_cli::Cli::parse();
    match brc_cli::run(cli) {
        Ok(_) => {}
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
