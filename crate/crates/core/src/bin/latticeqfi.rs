use clap::Parser;

use latticeqfi::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("latticeqfi: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
