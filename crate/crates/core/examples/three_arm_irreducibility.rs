//! Three arms recombined onto one detector, with a half-wave plate on the
//! middle arm. The outer arms each satisfy the one-sided overlap condition
//! against the detector, yet neither is near-certain, and the middle arm's
//! factor is -1. Read as an implication, the one-sided condition would put the
//! particle in two disjoint arms at once.
//!
//!     cargo run --release --example three_arm_irreducibility

use qcp::cournot::{fac_ratio, j_residual, m_psi};
use qcp::scenarios::find;

fn main() -> qcp::Result<()> {
    let info = find("three_arm_hwp")?;
    let setup = info.build(&info.default_config())?;
    let qp = &setup.process;
    let detector = setup.sset("detector")?;
    println!("detector weight {:.6}", qp.weight(detector)?);
    println!("arm  weight     M(arm, det)  j residual   fac ratio");
    for arm in ["arm1", "arm2", "arm3"] {
        let s = setup.sset(arm)?;
        println!(
            "{arm}  {:.6}  {:>11.6}  {:>10.3e}  {:>10.6}",
            qp.weight(s)?,
            m_psi(qp, s, detector)?,
            j_residual(qp, s, detector)?,
            fac_ratio(qp, s, detector)?
        );
    }
    Ok(())
}
