use clap::Parser;

fn main() {
    let cli = roomem_cli::Cli::parse();
    match roomem_cli::run(cli) {
        Ok(report) => print!("{report}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
