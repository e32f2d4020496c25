use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::fft::GridFft;
use super::space::{GridSpace, Space};
use super::wave::{WaveFunction, C64};

/// Max entrywise deviation of `U†U` from the identity accepted for dense unitaries.
pub const UNITARY_TOLERANCE: f64 = 1e-12;

const TIME_EPS: f64 = 1e-12;

/// Time evolution `U(t)` over a discretized space.
#[derive(Clone, Debug)]
pub enum Propagator {
    /// Strang split-operator scheme on a periodic grid.
    SplitOperator(Arc<SplitOperator>),
    /// `exp(-iHt)` from the eigendecomposition of a dense Hermitian generator.
    Dense(Arc<DenseHamiltonian>),
    /// Dense unitaries applied at fixed instants (timed optical elements).
    Schedule(Arc<UnitarySchedule>),
    /// Independent factors acting on the axes of a tensor product.
    Tensor(Arc<TensorPropagator>),
}

impl Propagator {
    pub fn identity(dim: usize) -> Self {
        Propagator::Schedule(Arc::new(UnitarySchedule {
            dim,
            elements: Vec::new(),
        }))
    }

    pub fn dimension(&self) -> usize {
        match self {
            Propagator::SplitOperator(s) => s.grid.len(),
            Propagator::Dense(d) => d.dim,
            Propagator::Schedule(s) => s.dim,
            Propagator::Tensor(t) => t.dims.iter().product(),
        }
    }

    /// Evolves `psi` forward by `duration` (backward when negative).
    pub fn evolve(&self, psi: &WaveFunction, duration: f64) -> Result<WaveFunction> {
        if psi.len() != self.dimension() {
            return Err(Error::SpaceMismatch);
        }
        let t0 = psi.time();
        let mut out = psi.clone();
        self.apply(out.amplitudes_mut(), t0, duration)?;
        Ok(out.with_time(t0 + duration))
    }

    /// Evolves raw amplitudes from time `t0` by `duration`.
    pub fn apply(&self, amps: &mut [C64], t0: f64, duration: f64) -> Result<()> {
        if duration == 0.0 {
            return Ok(());
        }
        match self {
            Propagator::SplitOperator(s) => s.apply(amps, t0, duration),
            Propagator::Dense(d) => {
                d.apply(amps, duration);
                Ok(())
            }
            Propagator::Schedule(s) => {
                s.apply(amps, t0, duration);
                Ok(())
            }
            Propagator::Tensor(t) => t.apply(amps, t0, duration),
        }
    }

    /// Errors when `duration` cannot be reached by this propagator.
    pub fn check_duration(&self, duration: f64) -> Result<()> {
        match self {
            Propagator::SplitOperator(s) => s.step_count(duration).map(|_| ()),
            Propagator::Tensor(t) => t.factors.iter().try_for_each(|f| f.check_duration(duration)),
            _ => Ok(()),
        }
    }
}

/// Split-operator propagator for `H = P²/2m + V(x, t)` with piecewise-constant `V`.
pub struct SplitOperator {
    grid: Arc<GridSpace>,
    mass: f64,
    dt: f64,
    /// `(start time, V on the grid)`, sorted by start time.
    potentials: Vec<(f64, Vec<f64>)>,
    kinetic_phase: Vec<C64>,
    potential_phase: Vec<Vec<C64>>,
    fft: GridFft,
}

impl fmt::Debug for SplitOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitOperator")
            .field("points", &self.grid.len())
            .field("mass", &self.mass)
            .field("dt", &self.dt)
            .field("potential_segments", &self.potentials.len())
            .finish()
    }
}

impl SplitOperator {
    pub fn new(space: &Space, mass: f64, dt: f64, potential: Vec<f64>) -> Result<Self> {
        Self::with_schedule(space, mass, dt, vec![(f64::NEG_INFINITY, potential)])
    }

    /// Potential switches to `potentials[k].1` at time `potentials[k].0`.
    pub fn with_schedule(
        space: &Space,
        mass: f64,
        dt: f64,
        mut potentials: Vec<(f64, Vec<f64>)>,
    ) -> Result<Self> {
        let grid = match space {
            Space::Grid(g) => g.clone(),
            Space::Modes(_) => {
                return Err(Error::Unsupported(
                    "split-operator evolution needs a grid space".into(),
                ))
            }
        };
        if !(mass > 0.0 && dt > 0.0 && mass.is_finite() && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mass ({mass}) and time step ({dt}) must be positive"
            )));
        }
        if potentials.is_empty() {
            return Err(Error::InvalidArgument("empty potential schedule".into()));
        }
        for (_, v) in &potentials {
            if v.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    expected: grid.len(),
                    got: v.len(),
                });
            }
        }
        potentials.sort_by(|a, b| a.0.total_cmp(&b.0));
        potentials[0].0 = f64::NEG_INFINITY;
        let ks: Vec<Vec<f64>> = (0..grid.dimension()).map(|a| grid.wavenumbers(a)).collect();
        let kinetic_phase = (0..grid.len())
            .map(|i| {
                let idx = grid.unflatten(i);
                let k2: f64 = (0..grid.dimension()).map(|a| ks[a][idx[a]].powi(2)).sum();
                C64::from_polar(1.0, -k2 / (2.0 * mass) * dt)
            })
            .collect();
        let potential_phase = potentials
            .iter()
            .map(|(_, v)| v.iter().map(|&x| C64::from_polar(1.0, -x * dt / 2.0)).collect())
            .collect();
        let fft = GridFft::new(&grid);
        Ok(Self {
            grid,
            mass,
            dt,
            potentials,
            kinetic_phase,
            potential_phase,
            fft,
        })
    }

    pub fn grid(&self) -> &GridSpace {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn segment_at(&self, t: f64) -> usize {
        self.potentials
            .iter()
            .rposition(|(start, _)| *start <= t)
            .unwrap_or(0)
    }

    /// Potential in force at time `t`.
    pub fn potential_at(&self, t: f64) -> &[f64] {
        &self.potentials[self.segment_at(t)].1
    }

    pub fn step_count(&self, duration: f64) -> Result<i64> {
        let n = (duration / self.dt).round();
        if (n * self.dt - duration).abs() > 1e-9 * duration.abs().max(1.0) {
            return Err(Error::NonCommensurateDuration {
                duration,
                step: self.dt,
            });
        }
        Ok(n as i64)
    }

    fn apply(&self, amps: &mut [C64], t0: f64, duration: f64) -> Result<()> {
        let n = self.step_count(duration)?;
        let forward = n >= 0;
        let h = if forward { self.dt } else { -self.dt };
        let phase = |z: C64| if forward { z } else { z.conj() };
        for j in 0..n.unsigned_abs() {
            let mid = t0 + (j as f64 + 0.5) * h;
            let vp = &self.potential_phase[self.segment_at(mid)];
            for (a, p) in amps.iter_mut().zip(vp) {
                *a *= phase(*p);
            }
            self.fft.forward(amps);
            for (a, p) in amps.iter_mut().zip(&self.kinetic_phase) {
                *a *= phase(*p);
            }
            self.fft.inverse(amps);
            for (a, p) in amps.iter_mut().zip(vp) {
                *a *= phase(*p);
            }
        }
        Ok(())
    }
}

/// `exp(-iHt)` via `H = Q diag(λ) Q†`.
#[derive(Debug)]
pub struct DenseHamiltonian {
    dim: usize,
    eigenvectors: DMatrix<C64>,
    eigenvalues: Vec<f64>,
}

impl DenseHamiltonian {
    pub fn new(hamiltonian: DMatrix<C64>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if hamiltonian.ncols() != dim {
            return Err(Error::InvalidArgument("Hamiltonian must be square".into()));
        }
        let dev = (&hamiltonian - hamiltonian.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let scale = hamiltonian.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if dev > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonian is not Hermitian (deviation {dev:e})"
            )));
        }
        let eig = hamiltonian.symmetric_eigen();
        Ok(Self {
            dim,
            eigenvectors: eig.eigenvectors,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
        })
    }

    /// Spectral kinetic energy plus `diag(V)` on a grid, i.e. the generator the
    /// split-operator scheme approximates.
    pub fn grid_hamiltonian(space: &Space, mass: f64, potential: &[f64]) -> Result<DMatrix<C64>> {
        let grid = space
            .as_grid()
            .ok_or_else(|| Error::Unsupported("grid Hamiltonian needs a grid space".into()))?;
        let n = grid.len();
        if potential.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: potential.len(),
            });
        }
        let fft = GridFft::new(grid);
        let ks: Vec<Vec<f64>> = (0..grid.dimension()).map(|a| grid.wavenumbers(a)).collect();
        let energy: Vec<f64> = (0..n)
            .map(|i| {
                let idx = grid.unflatten(i);
                (0..grid.dimension()).map(|a| ks[a][idx[a]].powi(2)).sum::<f64>() / (2.0 * mass)
            })
            .collect();
        let mut h = DMatrix::<C64>::zeros(n, n);
        for j in 0..n {
            let mut col = vec![C64::new(0.0, 0.0); n];
            col[j] = C64::new(1.0, 0.0);
            fft.forward(&mut col);
            col.iter_mut().zip(&energy).for_each(|(z, e)| *z *= e);
            fft.inverse(&mut col);
            for i in 0..n {
                h[(i, j)] = col[i];
            }
            h[(j, j)] += potential[j];
        }
        // symmetrize away FFT rounding
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        Ok(h)
    }

    pub fn unitary(&self, duration: f64) -> DMatrix<C64> {
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim,
            self.eigenvalues
                .iter()
                .map(|&l| C64::from_polar(1.0, -l * duration)),
        ));
        &self.eigenvectors * phases * self.eigenvectors.adjoint()
    }

    fn apply(&self, amps: &mut [C64], duration: f64) {
        let v = DVector::from_column_slice(amps);
        let mut c = self.eigenvectors.adjoint() * v;
        for (z, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *z *= C64::from_polar(1.0, -l * duration);
        }
        let out = &self.eigenvectors * c;
        amps.copy_from_slice(out.as_slice());
    }
}

/// Dense unitaries applied at fixed instants. Evolving over `(t0, t0 + d]`
/// applies every element whose instant falls in that window, in time order;
/// backward evolution applies adjoints in reverse order.
#[derive(Debug, Clone)]
pub struct UnitarySchedule {
    dim: usize,
    elements: Vec<(f64, DMatrix<C64>)>,
}

impl UnitarySchedule {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            elements: Vec::new(),
        }
    }

    /// Adds `unitary` acting at `time`; elements at the same instant compose
    /// in insertion order.
    pub fn push(&mut self, time: f64, unitary: DMatrix<C64>) -> Result<()> {
        if unitary.nrows() != self.dim || unitary.ncols() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: unitary.nrows(),
            });
        }
        let deviation = unitarity_deviation(&unitary);
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        let pos = self.elements.partition_point(|(t, _)| *t <= time);
        self.elements.insert(pos, (time, unitary));
        Ok(())
    }

    pub fn with(mut self, time: f64, unitary: DMatrix<C64>) -> Result<Self> {
        self.push(time, unitary)?;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[(f64, DMatrix<C64>)] {
        &self.elements
    }

    /// The product of all elements acting in `(t0, t0 + duration]`.
    pub fn unitary(&self, t0: f64, duration: f64) -> DMatrix<C64> {
        let mut u = DMatrix::<C64>::identity(self.dim, self.dim);
        let (lo, hi) = (t0.min(t0 + duration), t0.max(t0 + duration));
        for (t, m) in &self.elements {
            if *t > lo + TIME_EPS && *t <= hi + TIME_EPS {
                u = m * u;
            }
        }
        if duration < 0.0 {
            u.adjoint()
        } else {
            u
        }
    }

    fn apply(&self, amps: &mut [C64], t0: f64, duration: f64) {
        let end = t0 + duration;
        let mut v = DVector::from_column_slice(amps);
        if duration > 0.0 {
            for (t, m) in &self.elements {
                if *t > t0 + TIME_EPS && *t <= end + TIME_EPS {
                    v = m * v;
                }
            }
        } else {
            for (t, m) in self.elements.iter().rev() {
                if *t > end + TIME_EPS && *t <= t0 + TIME_EPS {
                    v = m.adjoint() * v;
                }
            }
        }
        amps.copy_from_slice(v.as_slice());
    }
}

impl From<UnitarySchedule> for Propagator {
    fn from(s: UnitarySchedule) -> Self {
        Propagator::Schedule(Arc::new(s))
    }
}

impl From<SplitOperator> for Propagator {
    fn from(s: SplitOperator) -> Self {
        Propagator::SplitOperator(Arc::new(s))
    }
}

impl From<DenseHamiltonian> for Propagator {
    fn from(d: DenseHamiltonian) -> Self {
        Propagator::Dense(Arc::new(d))
    }
}

/// Factor-wise evolution on a row-major tensor product.
#[derive(Debug)]
pub struct TensorPropagator {
    factors: Vec<Propagator>,
    dims: Vec<usize>,
}

impl TensorPropagator {
    pub fn new(factors: Vec<Propagator>) -> Self {
        let dims = factors.iter().map(|f| f.dimension()).collect();
        Self { factors, dims }
    }

    pub fn factors(&self) -> &[Propagator] {
        &self.factors
    }

    fn apply(&self, amps: &mut [C64], t0: f64, duration: f64) -> Result<()> {
        let total: usize = self.dims.iter().product();
        let mut buf = Vec::new();
        for (k, f) in self.factors.iter().enumerate() {
            let d = self.dims[k];
            let right: usize = self.dims[k + 1..].iter().product();
            let left = total / (d * right);
            buf.resize(d, C64::new(0.0, 0.0));
            for l in 0..left {
                for r in 0..right {
                    let base = l * d * right + r;
                    for (i, b) in buf.iter_mut().enumerate() {
                        *b = amps[base + i * right];
                    }
                    f.apply(&mut buf, t0, duration)?;
                    for (i, b) in buf.iter().enumerate() {
                        amps[base + i * right] = *b;
                    }
                }
            }
        }
        Ok(())
    }
}

impl From<TensorPropagator> for Propagator {
    fn from(t: TensorPropagator) -> Self {
        Propagator::Tensor(Arc::new(t))
    }
}

/// `max |U†U − 1|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let p = u.adjoint() * u;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((p[(i, j)] - target).norm());
        }
    }
    dev
}
