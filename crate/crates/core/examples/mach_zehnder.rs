//! Mach–Zehnder interferometer with a shutter in the lower arm. With the
//! shutter open the D1 port stays dark; closing it lights both detectors.
//! The phase plate in the upper arm moves the fringe.
//!
//!     cargo run --release --example mach_zehnder

use qcp::scenarios::{run_scenario, RunOptions};

fn main() -> qcp::Result<()> {
    println!("shutter  phase    D1        D2        absorbed");
    for shutter in ["open", "closed"] {
        for phase in ["0", "pi/2", "pi"] {
            let opts = RunOptions {
                overrides: vec![format!("shutter={shutter}"), format!("hwp_phase={phase}")],
                ..RunOptions::default()
            };
            let r = run_scenario("mach_zehnder", &opts)?;
            let v = |k: &str| r.assertion(k).map_or(f64::NAN, |a| a.value);
            println!(
                "{shutter:<8} {phase:<8} {:.6}  {:.6}  {:.6}",
                v("d1_weight"),
                v("d2_weight"),
                v("absorbed_weight")
            );
        }
    }

    let r = run_scenario("mach_zehnder", &RunOptions { overrides: vec!["shutter=random".into()], ..RunOptions::default() })?;
    let open_d1 = r.assertion("open_and_d1_weight").map_or(f64::NAN, |a| a.value);
    println!("\nrandom shutter: tree has {} branches, open and D1 carries {open_d1:e}", r.values["tree_branches"]);
    for a in &r.assertions {
        println!("  {:<28} {}", a.name, if a.pass { "ok" } else { "FAIL" });
    }
    Ok(())
}
