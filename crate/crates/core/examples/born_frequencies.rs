//! Relative frequencies of N repeated trials, three ways: the Chebyshev bound,
//! the exact binomial weight, and a seeded Monte Carlo count. For small N the
//! weight is also read off the materialized N-fold product process.
//!
//!     cargo run --release --example born_frequencies

use qcp::born::{ensemble_frequency_weight, product_frequency_weight};
use qcp::classical::{chebyshev_frequency_bound, count_frequency_deviations, exact_frequency_event};
use qcp::hilbert::{network, ModeSpace, Region, Space, UnitarySchedule, WaveFunction};
use qcp::squant::QuantumProcess;

fn main() -> qcp::Result<()> {
    let (p, eps, n) = (0.5, 0.1, 25_000);
    println!("Chebyshev bound on a miss: {:.3e}", chebyshev_frequency_bound(p, eps, n));
    println!("exact P(|k/N - p| <= eps):  {:.17}", exact_frequency_event(p, eps, n)?);
    let misses = count_frequency_deviations(p, eps, n, 2_000, 7);
    println!("Monte Carlo misses:         {misses} of 2000 sequences");

    // one photon on a 30% splitter; "click" is the reflected port
    let space: Space = ModeSpace::new(&["in", "click"])?.into();
    let schedule = UnitarySchedule::new(2).with(1.0, network::splitter(0.3))?;
    let qp = QuantumProcess::new(schedule.into(), WaveFunction::mode(&space, "in")?, (0.0, 1.0), vec![0.0, 1.0])?;
    let click = Region::from_labels(&space, &["click"])?;
    println!("\n  N  binomial path        product process");
    for n in [1usize, 2, 4, 8, 12] {
        let a = ensemble_frequency_weight(&qp, n as u64, 1.0, &click, 0.15)?;
        let b = product_frequency_weight(&qp, n, 1.0, &click, 0.15, 1 << 13)?;
        println!("{n:>3}  {a:.15}  {b:.15}");
    }
    Ok(())
}
