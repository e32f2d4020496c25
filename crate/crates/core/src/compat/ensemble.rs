use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format;
use crate::hilbert::{Region, Space, WaveFunction};
use crate::squant::{QuantumProcess, SSet};

use super::coupling::minimal_flux_coupling;

/// Marginal masses below this are dropped before sampling.
const MASS_CUTOFF: f64 = 1e-14;
const MARGINAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnsembleMethod {
    /// Fresh draw from `|Ψ(t)|²` at every time.
    Independent,
    /// Quantile coupling on grids; minimal-flux coupling on mode spaces.
    #[default]
    MonotoneTransport,
}

impl EnsembleMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Independent => "independent",
            Self::MonotoneTransport => "monotone-transport",
        }
    }
}

impl FromStr for EnsembleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(Self::Independent),
            "monotone-transport" | "monotone_transport" => Ok(Self::MonotoneTransport),
            other => Err(Error::UnknownMethod(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    /// Mode transitions `a → b` are allowed only when `M_Ψ((t,a),(t',b))` exceeds this.
    pub coupling_threshold: f64,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self { coupling_threshold: 1e-6 }
    }
}

/// Sampled trajectories on a time grid; positions are point or mode indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    space: Space,
    times: Vec<f64>,
    positions: Vec<u32>,
    count: usize,
    seed: u64,
    method: EnsembleMethod,
}

fn marginal(psi: &WaveFunction) -> Vec<f64> {
    let mut p = psi.density();
    p.iter_mut().for_each(|v| {
        if *v < MASS_CUTOFF {
            *v = 0.0
        }
    });
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Smallest index whose cumulative mass exceeds `u`, skipping empty cells.
fn quantile(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("non-empty");
    let target = u * total;
    let i = cdf.partition_point(|&c| c <= target);
    i.min(cdf.len() - 1)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn build_compatible_ensemble(
    qp: &QuantumProcess,
    times: &[f64],
    count: usize,
    seed: u64,
    method: EnsembleMethod,
) -> Result<TrajectoryEnsemble> {
    build_compatible_ensemble_with(qp, times, count, seed, method, &EnsembleOptions::default())
}

pub fn build_compatible_ensemble_with(
    qp: &QuantumProcess,
    times: &[f64],
    count: usize,
    seed: u64,
    method: EnsembleMethod,
    options: &EnsembleOptions,
) -> Result<TrajectoryEnsemble> {
    if count == 0 || times.is_empty() {
        return Err(Error::InvalidArgument("ensemble needs count >= 1 and a time grid".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("ensemble times must increase".into()));
    }
    let states: Vec<WaveFunction> = times
        .iter()
        .map(|&t| qp.state_at(t).map(|c| c.into_owned()))
        .collect::<Result<_>>()?;
    let marginals: Vec<Vec<f64>> = states.iter().map(marginal).collect();
    let cdfs: Vec<Vec<f64>> = marginals.iter().map(|p| cumulative(p)).collect();
    let nt = times.len();
    let mut positions = vec![0u32; count * nt];

    let transport_modes = method == EnsembleMethod::MonotoneTransport && qp.space().as_modes().is_some();
    let kernels = if transport_modes {
        Some(mode_kernels(qp, times, &marginals, options)?)
    } else {
        None
    };

    positions
        .par_chunks_mut(nt)
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = rng_for(seed, i as u64);
            match (method, &kernels) {
                (EnsembleMethod::Independent, _) => {
                    for (k, cdf) in cdfs.iter().enumerate() {
                        row[k] = quantile(cdf, rng.random::<f64>()) as u32;
                    }
                }
                (EnsembleMethod::MonotoneTransport, None) => {
                    let u = rng.random::<f64>();
                    for (k, cdf) in cdfs.iter().enumerate() {
                        row[k] = quantile(cdf, u) as u32;
                    }
                }
                (EnsembleMethod::MonotoneTransport, Some(kernels)) => {
                    let mut cur = quantile(&cdfs[0], rng.random::<f64>());
                    row[0] = cur as u32;
                    for k in 1..nt {
                        cur = quantile(&kernels[k - 1][cur], rng.random::<f64>());
                        row[k] = cur as u32;
                    }
                }
            }
        });

    Ok(TrajectoryEnsemble {
        space: qp.space().clone(),
        times: times.to_vec(),
        positions,
        count,
        seed,
        method,
    })
}

/// Row-wise cumulative transition kernels `K[k][a]` from time `k` to `k+1`.
fn mode_kernels(
    qp: &QuantumProcess,
    times: &[f64],
    marginals: &[Vec<f64>],
    options: &EnsembleOptions,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let space = qp.space();
    let dim = space.dimension();
    // Ψ̂((t_k, {a})) for every mode with mass
    let hats: Vec<Vec<Option<WaveFunction>>> = times
        .par_iter()
        .zip(marginals)
        .map(|(&t, p)| {
            (0..dim)
                .map(|a| {
                    if p[a] == 0.0 {
                        return Ok(None);
                    }
                    let region = Region::from_indices(space, [a])?;
                    qp.psi_hat(&SSet::new(t, region)).map(Some)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    (0..times.len() - 1)
        .into_par_iter()
        .map(|k| {
            let (p, q) = (&marginals[k], &marginals[k + 1]);
            let allowed = |a: usize, b: usize| match (&hats[k][a], &hats[k + 1][b]) {
                (Some(x), Some(y)) => {
                    let den = x.norm_sqr() + y.norm_sqr();
                    let m = 2.0 * x.inner(y).map(|z| z.re).unwrap_or(0.0) / den;
                    m > options.coupling_threshold
                }
                _ => false,
            };
            let joint = minimal_flux_coupling(p, q, allowed).ok_or(Error::NoCompatibleCoupling(k))?;
            let mut deviation = 0.0f64;
            for a in 0..dim {
                deviation = deviation.max((joint[a].iter().sum::<f64>() - p[a]).abs());
            }
            for b in 0..dim {
                deviation = deviation.max((joint.iter().map(|r| r[b]).sum::<f64>() - q[b]).abs());
            }
            if deviation > MARGINAL_TOLERANCE {
                return Err(Error::MarginalMismatch { time_index: k, deviation });
            }
            Ok(joint
                .iter()
                .enumerate()
                .map(|(a, row)| if p[a] > 0.0 { cumulative(row) } else { vec![1.0; dim] })
                .collect())
        })
        .collect()
}

impl TrajectoryEnsemble {
    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn method(&self) -> EnsembleMethod {
        self.method
    }

    pub fn trajectory(&self, i: usize) -> &[u32] {
        let nt = self.times.len();
        &self.positions[i * nt..(i + 1) * nt]
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &[u32]> {
        self.positions.chunks(self.times.len())
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&g| (g - t).abs() <= 1e-9)
            .ok_or(Error::TimeOffGrid(t))
    }

    /// Per-trajectory membership in an s-set.
    pub fn membership(&self, s: &SSet) -> Result<Vec<bool>> {
        self.space.ensure_same(s.region.space())?;
        let k = self.time_index(s.time)?;
        Ok(self
            .trajectories()
            .map(|row| s.region.contains(row[k] as usize))
            .collect())
    }

    pub fn frequency(&self, s: &SSet) -> Result<f64> {
        let hits = self.membership(s)?.iter().filter(|&&b| b).count();
        Ok(hits as f64 / self.count as f64)
    }

    /// Empirical frequency of `S₁ ∩ S₂`. For different times this is a property
    /// of the sampling method, not a prediction of the quantum process.
    pub fn joint_frequency(&self, s1: &SSet, s2: &SSet) -> Result<f64> {
        let a = self.membership(s1)?;
        let b = self.membership(s2)?;
        let hits = a.iter().zip(&b).filter(|(x, y)| **x && **y).count();
        Ok(hits as f64 / self.count as f64)
    }

    /// Fraction of consecutive steps at or after `from` on which a trajectory
    /// enters or leaves `region`.
    pub fn crossing_frequency(&self, region: &Region, from: f64) -> Result<f64> {
        self.space.ensure_same(region.space())?;
        let k0 = self.time_index(from)?;
        let nt = self.times.len();
        if k0 + 1 >= nt {
            return Ok(0.0);
        }
        let changes: usize = self
            .trajectories()
            .map(|row| {
                (k0..nt - 1)
                    .filter(|&k| region.contains(row[k] as usize) != region.contains(row[k + 1] as usize))
                    .count()
            })
            .sum();
        Ok(changes as f64 / (self.count * (nt - 1 - k0)) as f64)
    }

    /// Columnar CSV: a header row with the grid times, then one row of position
    /// indices per trajectory.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.times.iter().map(|&t| format::real(t)))?;
        for row in self.trajectories() {
            w.write_record(row.iter().map(|i| i.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{gaussian_packet, network, GridSpace, ModeSpace, Propagator, UnitarySchedule, C64};

    fn static_grid() -> QuantumProcess {
        let space: Space = GridSpace::line(-10.0, 10.0, 64).unwrap().into();
        let psi = gaussian_packet(&space, &[0.0], 1.5, &[0.0]).unwrap();
        QuantumProcess::new(Propagator::identity(64), psi, (0.0, 3.0), vec![0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    fn bs_modes() -> QuantumProcess {
        let space: Space = ModeSpace::new(&["S", "R", "T", "DR", "DT"]).unwrap().into();
        let m = space.as_modes().unwrap().clone();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let w = network::unitary_with_first_column(&[C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(0.0, h)]).unwrap();
        let split = network::mix(&m, &["S", "R", "T"], &w).unwrap();
        let detect = network::route(&m, &["R", "T"], &["DR", "DT"]).unwrap();
        let prop: Propagator = UnitarySchedule::new(5).with(1.0, split).unwrap().with(2.0, detect).unwrap().into();
        let psi0 = WaveFunction::mode(&space, "S").unwrap();
        QuantumProcess::new(prop, psi0, (0.0, 3.0), vec![0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn marginals_match_in_band() {
        let qp = static_grid();
        let left = Region::interval(qp.space(), -100.0, -0.7).unwrap();
        for method in [EnsembleMethod::Independent, EnsembleMethod::MonotoneTransport] {
            let ens = build_compatible_ensemble(&qp, qp.time_grid(), 20_000, 3, method).unwrap();
            for &t in qp.time_grid() {
                let s = SSet::new(t, left.clone());
                let p = qp.weight(&s).unwrap();
                let f = ens.frequency(&s).unwrap();
                assert!((f - p).abs() <= format::sigma_band(p, 20_000), "{method:?} {t} {f} {p}");
            }
        }
    }

    #[test]
    fn static_transport_never_moves() {
        let qp = static_grid();
        let ens = build_compatible_ensemble(&qp, qp.time_grid(), 1000, 1, EnsembleMethod::MonotoneTransport).unwrap();
        assert!(ens.trajectories().all(|r| r.iter().all(|&x| x == r[0])));
    }

    #[test]
    fn mode_transport_keeps_branches() {
        let qp = bs_modes();
        let ens = build_compatible_ensemble(&qp, qp.time_grid(), 4000, 11, EnsembleMethod::MonotoneTransport).unwrap();
        let sp = qp.space().as_modes().unwrap();
        let (r, dr, dt) = (sp.index_of("R").unwrap() as u32, sp.index_of("DR").unwrap() as u32, sp.index_of("DT").unwrap() as u32);
        for row in ens.trajectories() {
            assert_eq!(row[0], 0);
            if row[1] == r {
                assert_eq!(row[2], dr);
            } else {
                assert_eq!(row[2], dt);
            }
        }
        let ind = build_compatible_ensemble(&qp, qp.time_grid(), 4000, 11, EnsembleMethod::Independent).unwrap();
        let mixed = ind.trajectories().filter(|row| row[1] == r && row[2] == dt).count();
        assert!(mixed > 800);
    }

    #[test]
    fn reproducible_and_exportable() {
        let qp = bs_modes();
        let a = build_compatible_ensemble(&qp, qp.time_grid(), 100, 5, EnsembleMethod::MonotoneTransport).unwrap();
        let b = build_compatible_ensemble(&qp, qp.time_grid(), 100, 5, EnsembleMethod::MonotoneTransport).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 101);
        assert!(text.starts_with("0.0000000000000000e0,"));
        assert!(matches!("bogus".parse::<EnsembleMethod>(), Err(Error::UnknownMethod(_))));
        assert!(matches!(a.time_index(0.5), Err(Error::TimeOffGrid(_))));
    }
}
