use clap::Parser;

fn main() {
    let cli = optocool_cli::Cli::parse();
    match optocool_cli::run(cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("optocool: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
