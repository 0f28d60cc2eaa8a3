use std::process::ExitCode;

use clap::Parser;
use popsent::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            let err = serde_json::json!({ "error": e.to_string(), "causes": chain });
            eprintln!("{err}");
            ExitCode::FAILURE
        }
    }
}
