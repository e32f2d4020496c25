//! Latching detectors on both arms of a splitter. Once a detector latches,
//! the final pointer record is near-certain to agree with where the particle
//! was at every earlier time, which is what lets a present record stand in
//! for a past position.
//!
//!     cargo run --release --example retrodiction

use qcp::born::build_povm;
use qcp::cournot::m_psi;
use qcp::scenarios::{find, run_with_config};

fn main() -> qcp::Result<()> {
    let info = find("retrodiction_lab")?;
    let mut cfg = info.default_config();
    cfg.set("reflectivity", "0.3")?;
    let setup = info.build(&cfg)?;
    let qp = &setup.process;
    let (last, _) = setup.ssets.last().expect("declared");
    println!("s-sets compared with {last}:");
    let fin = setup.sset(last)?;
    for (name, s) in &setup.ssets {
        println!("  {name:<18} t={}  weight {:.6}  M {:+.10}", s.time, qp.weight(s)?, m_psi(qp, s, fin)?);
    }
    let m = setup.measurement.as_ref().expect("detector model");
    let povm = build_povm(&m.model, &m.ready)?;
    println!("\nPOVM outcomes {:?}, completeness {:e}", povm.outcomes(), povm.completeness_residual());

    let report = run_with_config(info, &cfg, 7)?;
    println!("all assertions pass: {}", report.passed);
    Ok(())
}
