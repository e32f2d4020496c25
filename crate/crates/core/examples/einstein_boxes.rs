//! Two counter-propagating packets; a barrier rises at t = 2 and splits the
//! box. Overlaps between the same box at different times stay at 1, overlaps
//! across boxes stay at 0, and sampled trajectories never change side.
//!
//!     cargo run --release --example einstein_boxes

use qcp::compat::{build_compatible_ensemble, EnsembleMethod};
use qcp::cournot::m_psi;
use qcp::scenarios::find;

fn main() -> qcp::Result<()> {
    let info = find("einstein_boxes")?;
    let setup = info.build(&info.default_config())?;
    let qp = &setup.process;
    let end_l = setup.sset("left@10")?;
    let end_r = setup.sset("right@10")?;
    println!("   t   weight(left)  M(left@t, left@10)  M(left@t, right@10)");
    for t in [2.0, 3.0, 5.0, 7.5, 10.0] {
        let l = setup.sset(&format!("left@{t}"))?;
        println!(
            "{t:>5}  {:.9}   {:.12}      {:+.3e}",
            qp.weight(l)?,
            m_psi(qp, l, end_l)?,
            m_psi(qp, l, end_r)?
        );
    }

    let ens = build_compatible_ensemble(qp, qp.time_grid(), 20_000, 7, EnsembleMethod::MonotoneTransport)?;
    println!("\nmonotone transport, 20000 trajectories");
    println!("  ended left:                 {:.4}", ens.frequency(end_l)?);
    println!("  crossed after the barrier:  {}", ens.crossing_frequency(&end_l.region, 2.0)?);
    let ind = build_compatible_ensemble(qp, qp.time_grid(), 20_000, 7, EnsembleMethod::Independent)?;
    println!("independent draws crossed:    {:.4}", ind.crossing_frequency(&end_l.region, 2.0)?);
    Ok(())
}
