//! Runs a bundled scenario in memory and prints the per-check summary.
//!
//! `cargo run --release --example scenario -- [name]`

use mfield::harness::{bundled, parse_scenario, run_scenario, RunOptions, BUNDLED};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "torus-markov".into());
    let Some(text) = bundled(&name) else {
        let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
        eprintln!("unknown scenario {name}; bundled: {}", names.join(", "));
        std::process::exit(2);
    };
    let run = parse_scenario(text).and_then(|s| run_scenario(&s, text, &RunOptions::default()));
    match run {
        Ok(outcome) => {
            print!("{}", outcome.report.summary());
            println!("hash {}", outcome.report.hash);
            std::process::exit(outcome.report.exit_code().into());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code().into());
        }
    }
}
