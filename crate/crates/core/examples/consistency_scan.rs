//! Randomized search, per scenario, for an anchor s-set that two disjoint
//! s-sets both overlap almost perfectly. No such triple exists: Psi-hat of
//! disjoint equal-time s-sets are orthogonal.
//!
//!     cargo run --release --example consistency_scan

use qcp::scenarios::{consistency_scan, registry};

fn main() -> qcp::Result<()> {
    println!("{:<28} candidates  qualifying  violations", "scenario");
    for info in registry() {
        let setup = info.build(&info.default_config())?;
        let r = consistency_scan(&setup, 1000, 0.05, 7)?;
        println!("{:<28} {:>10}  {:>10}  {:>10}", info.name, r.candidates, r.qualifying, r.violations.len());
    }
    Ok(())
}
