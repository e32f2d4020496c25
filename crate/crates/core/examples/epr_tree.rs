//! Singlet pair with randomly chosen analyser settings on each side. Sixteen
//! leaves (setting pair and two outcomes) carry the quantum joint weights,
//! and the correlations reproduce the CHSH value 2√2.
//!
//!     cargo run --release --example epr_tree

use qcp::scenarios::{run_scenario, RunOptions};

fn main() -> qcp::Result<()> {
    let r = run_scenario("epr", &RunOptions::default())?;
    for (k, v) in &r.values {
        println!("{k:<24} {v:.12}");
    }
    for a in &r.assertions {
        println!("{:<24} {:.12}  {} {:.12}  {}", a.name, a.value, a.relation.symbol(), a.target, if a.pass { "ok" } else { "FAIL" });
    }
    Ok(())
}
