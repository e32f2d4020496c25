//! Split-operator propagation of Gaussian packets, checked two ways: against
//! dense exponentiation of the same grid Hamiltonian, and through Ehrenfest's
//! theorem for a free packet and a harmonic coherent state.
//!
//!     cargo run --release --example ehrenfest

use qcp::hilbert::{
    ehrenfest_diagnostics, gaussian_packet, DenseHamiltonian, GridSpace, Propagator, Space, SplitOperator,
    WaveFunction,
};

fn snapshots(prop: &Propagator, psi: &WaveFunction, every: f64, n: usize) -> qcp::Result<Vec<WaveFunction>> {
    let mut out = vec![psi.clone()];
    for _ in 1..n {
        let next = prop.evolve(out.last().expect("seeded"), every)?;
        out.push(next);
    }
    Ok(out)
}

fn main() -> qcp::Result<()> {
    let grid = GridSpace::line(-12.0, 12.0, 64)?;
    let space: Space = grid.clone().into();
    let v: Vec<f64> = grid.coordinates(0).iter().map(|x| 0.5 * x * x).collect();
    let split: Propagator = SplitOperator::new(&space, 1.0, 1e-3, v.clone())?.into();
    let dense: Propagator = DenseHamiltonian::new(DenseHamiltonian::grid_hamiltonian(&space, 1.0, &v)?)?.into();
    let psi = gaussian_packet(&space, &[0.0], 1.6, &[1.0])?;
    let diff = split.evolve(&psi, 0.1)?.max_abs_diff(&dense.evolve(&psi, 0.1)?)?;
    println!("64 points, 100 steps: split-operator vs dense max |diff| = {diff:.3e}");

    let space: Space = GridSpace::line(-20.0, 20.0, 512)?.into();
    let xs = space.as_grid().expect("grid").coordinates(0);
    let cases = [
        ("free", vec![0.0; 512], gaussian_packet(&space, &[-3.0], 1.0, &[1.5])?),
        (
            "harmonic",
            xs.iter().map(|x| 0.5 * x * x).collect(),
            gaussian_packet(&space, &[2.0], std::f64::consts::FRAC_1_SQRT_2, &[0.0])?,
        ),
    ];
    for (name, v, psi) in cases {
        let prop: Propagator = SplitOperator::new(&space, 1.0, 1e-3, v)?.into();
        let traj = snapshots(&prop, &psi, 0.01, 100)?;
        let rep = ehrenfest_diagnostics(&traj, &prop, 1e-4)?;
        let k = rep.times.len() - 1;
        println!(
            "{name:<8} <x>(t={:.2}) = {:+.5}  <p> = {:+.5}  residuals {:.2e} / {:.2e}",
            rep.times[k], rep.mean_position[0][k], rep.mean_momentum[0][k], rep.max_position_residual, rep.max_momentum_residual
        );
    }
    Ok(())
}
