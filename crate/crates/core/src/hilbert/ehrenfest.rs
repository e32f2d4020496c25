use serde::Serialize;

use crate::error::{Error, Result};

use super::fft::GridFft;
use super::propagator::Propagator;
use super::space::GridSpace;
use super::wave::WaveFunction;

/// Expectation values and centered-difference residuals of
/// `d⟨Q⟩/dt = ⟨P⟩/m` and `d⟨P⟩/dt = −⟨∇V⟩` along every grid axis.
#[derive(Debug, Clone, Serialize)]
pub struct EhrenfestReport {
    pub times: Vec<f64>,
    /// `mean_position[axis][k]`
    pub mean_position: Vec<Vec<f64>>,
    pub mean_momentum: Vec<Vec<f64>>,
    /// Residuals at interior snapshots `1..n-1`.
    pub position_residual: Vec<Vec<f64>>,
    pub momentum_residual: Vec<Vec<f64>>,
    pub max_position_residual: f64,
    pub max_momentum_residual: f64,
    pub tolerance: f64,
    pub flagged: bool,
}

fn gradient(grid: &GridSpace, v: &[f64], axis: usize, flat: usize) -> f64 {
    let idx = grid.unflatten(flat);
    let n = grid.points(axis);
    let h = grid.spacing(axis);
    let at = |i: usize| {
        let mut j = idx;
        j[axis] = i;
        v[grid.flatten(j)]
    };
    let i = idx[axis];
    if i == 0 {
        (at(1) - at(0)) / h
    } else if i == n - 1 {
        (at(n - 1) - at(n - 2)) / h
    } else {
        (at(i + 1) - at(i - 1)) / (2.0 * h)
    }
}

pub fn ehrenfest_diagnostics(
    trajectory: &[WaveFunction],
    prop: &Propagator,
    tolerance: f64,
) -> Result<EhrenfestReport> {
    if trajectory.len() < 3 {
        return Err(Error::TooFewSnapshots {
            required: 3,
            got: trajectory.len(),
        });
    }
    let split = match prop {
        Propagator::SplitOperator(s) => s,
        _ => {
            return Err(Error::Unsupported(
                "Ehrenfest diagnostics need a split-operator propagator".into(),
            ))
        }
    };
    let grid = split.grid();
    for psi in trajectory {
        if psi.space().as_grid() != Some(grid) {
            return Err(Error::SpaceMismatch);
        }
    }
    let times: Vec<f64> = trajectory.iter().map(|p| p.time()).collect();
    let step = times[1] - times[0];
    if !(step != 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0)) {
        return Err(Error::NonUniformSnapshots);
    }
    let fft = GridFft::new(grid);
    let dim = grid.dimension();
    let m = split.mass();
    let mut mean_position = vec![Vec::new(); dim];
    let mut mean_momentum = vec![Vec::new(); dim];
    let mut mean_force = vec![Vec::new(); dim];
    for psi in trajectory {
        let mass = psi.norm_sqr();
        let v = split.potential_at(psi.time());
        let rho = psi.density();
        for a in 0..dim {
            mean_position[a].push(psi.mean_position(a)?);
            mean_momentum[a].push(psi.mean_momentum_with(grid, &fft, a)?);
            let f: f64 = rho
                .iter()
                .enumerate()
                .map(|(i, r)| r * gradient(grid, v, a, i))
                .sum();
            mean_force[a].push(f / mass);
        }
    }
    let n = trajectory.len();
    let mut position_residual = vec![Vec::with_capacity(n - 2); dim];
    let mut momentum_residual = vec![Vec::with_capacity(n - 2); dim];
    for a in 0..dim {
        for k in 1..n - 1 {
            let dq = (mean_position[a][k + 1] - mean_position[a][k - 1]) / (2.0 * step);
            let dp = (mean_momentum[a][k + 1] - mean_momentum[a][k - 1]) / (2.0 * step);
            position_residual[a].push(dq - mean_momentum[a][k] / m);
            momentum_residual[a].push(dp + mean_force[a][k]);
        }
    }
    let max_abs = |r: &Vec<Vec<f64>>| r.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let max_position_residual = max_abs(&position_residual);
    let max_momentum_residual = max_abs(&momentum_residual);
    Ok(EhrenfestReport {
        times,
        mean_position,
        mean_momentum,
        position_residual,
        momentum_residual,
        max_position_residual,
        max_momentum_residual,
        tolerance,
        flagged: max_position_residual > tolerance || max_momentum_residual > tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{gaussian_packet, SplitOperator, Space, C64};

    fn snapshots(prop: &Propagator, psi: &WaveFunction, every: f64, n: usize) -> Vec<WaveFunction> {
        let mut out = vec![psi.clone()];
        for _ in 1..n {
            let next = prop.evolve(out.last().unwrap(), every).unwrap();
            out.push(next);
        }
        out
    }

    #[test]
    fn free_particle_residuals_small() {
        let space: Space = GridSpace::line(-20.0, 20.0, 512).unwrap().into();
        let prop: Propagator = SplitOperator::new(&space, 1.0, 0.001, vec![0.0; 512]).unwrap().into();
        let psi = gaussian_packet(&space, &[-3.0], 1.0, &[1.5]).unwrap();
        let rep = ehrenfest_diagnostics(&snapshots(&prop, &psi, 0.01, 20), &prop, 1e-4).unwrap();
        assert!(!rep.flagged, "{} {}", rep.max_position_residual, rep.max_momentum_residual);
    }

    #[test]
    fn harmonic_coherent_state_residuals_small() {
        let space: Space = GridSpace::line(-20.0, 20.0, 512).unwrap().into();
        let v: Vec<f64> = space.as_grid().unwrap().coordinates(0).iter().map(|x| 0.5 * x * x).collect();
        let prop: Propagator = SplitOperator::new(&space, 1.0, 0.001, v).unwrap().into();
        let psi = gaussian_packet(&space, &[2.0], std::f64::consts::FRAC_1_SQRT_2, &[0.0]).unwrap();
        let snaps = snapshots(&prop, &psi, 0.01, 40);
        let rep = ehrenfest_diagnostics(&snaps, &prop, 1e-4).unwrap();
        assert!(!rep.flagged, "{} {}", rep.max_position_residual, rep.max_momentum_residual);
        // analytic coherent-state oracle: ⟨Q⟩(t) = 2 cos t
        for (k, t) in rep.times.iter().enumerate() {
            assert!((rep.mean_position[0][k] - 2.0 * t.cos()).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_state_has_zero_residuals() {
        let space: Space = GridSpace::line(0.0, 8.0, 16).unwrap().into();
        let prop: Propagator = SplitOperator::new(&space, 1.0, 0.1, vec![0.0; 16]).unwrap().into();
        let psi = WaveFunction::new(&space, vec![C64::new(0.25, 0.0); 16], 0.0).unwrap();
        let rep = ehrenfest_diagnostics(&snapshots(&prop, &psi, 0.1, 5), &prop, 1e-12).unwrap();
        assert!(rep.max_position_residual <= 1e-12 && rep.max_momentum_residual <= 1e-12);
    }

    #[test]
    fn too_few_snapshots() {
        let space: Space = GridSpace::line(0.0, 8.0, 16).unwrap().into();
        let prop: Propagator = SplitOperator::new(&space, 1.0, 0.1, vec![0.0; 16]).unwrap().into();
        let psi = WaveFunction::new(&space, vec![C64::new(0.25, 0.0); 16], 0.0).unwrap();
        assert!(matches!(
            ehrenfest_diagnostics(&[psi.clone(), psi], &prop, 1e-4),
            Err(Error::TooFewSnapshots { .. })
        ));
    }
}
