//! Sampling trajectories whose one-time marginals follow the Born weights,
//! then testing that pairs with M_Psi near 1 are also near-certain for the
//! sampled measure. The majority statistic Y counts how many of a family of
//! near-certain s-sets each trajectory visits.
//!
//!     cargo run --release --example compatible_ensembles

use qcp::compat::{
    build_compatible_ensemble, compatibility_check, majority_bound, majority_statistic, EnsembleMethod,
};
use qcp::hilbert::{network, ModeSpace, Region, Space, UnitarySchedule, WaveFunction};
use qcp::squant::{QuantumProcess, SSet};

fn main() -> qcp::Result<()> {
    let modes = ModeSpace::new(&["S", "Dk", "T", "R", "DT", "DR"])?;
    let space: Space = modes.clone().into();
    let schedule = UnitarySchedule::new(6)
        .with(1.0, network::transfer(&modes, &["S", "Dk"], &["T", "R"], &network::splitter(0.3))?)?
        .with(2.0, network::route(&modes, &["T", "R"], &["DT", "DR"])?)?;
    let psi0 = WaveFunction::mode(&space, "S")?;
    let qp = QuantumProcess::new(schedule.into(), psi0, (0.0, 2.0), vec![0.0, 1.0, 2.0])?;
    let at = |t: f64, l: &str| -> qcp::Result<SSet> { Ok(SSet::new(t, Region::from_labels(&space, &[l])?)) };
    let pairs = vec![(at(1.0, "R")?, at(2.0, "DR")?), (at(1.0, "T")?, at(2.0, "DT")?), (at(1.0, "R")?, at(2.0, "DT")?)];

    for method in [EnsembleMethod::MonotoneTransport, EnsembleMethod::Independent] {
        let ens = build_compatible_ensemble(&qp, qp.time_grid(), 50_000, 7, method)?;
        let report = compatibility_check(&ens, &qp, &pairs, 1e-3, 1e-2)?;
        println!("{}:", method.name());
        for p in &report.pairs {
            println!("  t={} -> t={}  M_Psi {:+.4}  M_P {:+.4}", p.t1, p.t2, p.m_psi, p.m_p);
        }
        println!("  violations: {:?}", report.violations);
    }

    // fifty s-sets of weight at least 1 - 1e-4: a small rotation leaks weight
    // into a second mode on odd ticks and returns it on even ones
    let two: Space = ModeSpace::new(&["kept", "leak"])?.into();
    let theta = 1e-4f64.sqrt().asin();
    let mut schedule = UnitarySchedule::new(2);
    for t in 1..=50 {
        schedule.push(t as f64, network::rotation(if t % 2 == 1 { theta } else { -theta }))?;
    }
    let grid: Vec<f64> = (0..=50).map(f64::from).collect();
    let leaky = QuantumProcess::new(schedule.into(), WaveFunction::mode(&two, "kept")?, (0.0, 50.0), grid)?;
    let kept = Region::from_labels(&two, &["kept"])?;
    let family: Vec<SSet> = (1..=50).map(|t| SSet::new(t as f64, kept.clone())).collect();
    // every trajectory is in `kept` at even times, so who leaks next is a fresh draw
    let ens = build_compatible_ensemble(&leaky, leaky.time_grid(), 100_000, 7, EnsembleMethod::MonotoneTransport)?;
    let y = majority_statistic(&ens, &family, 1e-3)?;
    println!(
        "\nE(Y) = {:.6}, P(Y <= 1 - 1e-3) = {:.5}, bound {}",
        y.mean,
        y.tail,
        majority_bound(1e-4, 1e-3)
    );
    Ok(())
}
