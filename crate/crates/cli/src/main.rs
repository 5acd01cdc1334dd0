use clap::Parser;
use fqh_cli::{run, summary, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            if !files.is_empty() {
                println!("{}", summary(cli.command, &files));
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
