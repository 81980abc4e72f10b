use clap::Parser;
use gmsurf_cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("gmsurf {}: error: {e:#}", cli.command.name());
            std::process::exit(exit_code(&e));
        }
    }
}
