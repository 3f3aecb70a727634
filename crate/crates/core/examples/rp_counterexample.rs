//! Searches for a family that breaks the support precondition of reflection
//! positivity and whose reflected Gram matrix is indefinite.
//!
//! `cargo run --example rp_counterexample -- [out.json]`

use mfield::positivity::search_rp_counterexample;

fn main() -> mfield::Result<()> {
    let out = std::env::args().nth(1);
    match search_rp_counterexample(8, 8, 1.0, 2024, 500)? {
        Some(w) => {
            println!("indefinite family of size {}, min eigenvalue {:e}", w.family.len(), w.min_eigenvalue);
            let json = serde_json::to_string_pretty(&w)? + "\n";
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => print!("{json}"),
            }
        }
        None => println!("no counterexample in 500 tries"),
    }
    Ok(())
}
