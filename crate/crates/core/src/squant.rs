//! Single-time cylinder sets, quantum processes and the set function
//! `Ψ̂[(t, Δ)] = U⁻¹(t) E(Δ) U(t) Ψ₀`.

use std::borrow::Cow;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::hilbert::{
    ModeSpace, Propagator, Region, Space, TensorPropagator, WaveFunction, C64,
};

/// Default cap on the dimension of materialized product spaces.
pub const DEFAULT_PRODUCT_CAP: usize = 1 << 16;

const GRID_EPS: f64 = 1e-9;

/// An s-set `(t, Δ)`: every trajectory whose position at time `t` lies in `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SSet {
    pub time: f64,
    pub region: Region,
}

impl SSet {
    pub fn new(time: f64, region: Region) -> Self {
        Self { time, region }
    }

    /// `(t, X)`.
    pub fn full(time: f64, space: &Space) -> Self {
        Self::new(time, Region::full(space))
    }
}

/// A closed system over `[t_I, t_F]`: initial state at time 0, a propagator
/// and the time grid on which snapshots `Ψ(t)` are cached.
pub struct QuantumProcess {
    propagator: Propagator,
    psi0: WaveFunction,
    start: f64,
    end: f64,
    grid: Vec<f64>,
    snapshots: OnceLock<Vec<WaveFunction>>,
}

impl std::fmt::Debug for QuantumProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuantumProcess")
            .field("dimension", &self.psi0.len())
            .field("interval", &(self.start, self.end))
            .field("grid_points", &self.grid.len())
            .finish()
    }
}

impl QuantumProcess {
    /// `grid` is sorted and deduplicated; times outside `[start, end]` are rejected.
    pub fn new(
        propagator: Propagator,
        psi0: WaveFunction,
        interval: (f64, f64),
        mut grid: Vec<f64>,
    ) -> Result<Self> {
        let (start, end) = interval;
        if !(start <= 0.0 && 0.0 <= end) {
            return Err(Error::InvalidArgument(format!(
                "interval [{start}, {end}] must contain the reference time 0"
            )));
        }
        let n2 = psi0.norm_sqr();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(Error::Unnormalized(n2));
        }
        if psi0.len() != propagator.dimension() {
            return Err(Error::SpaceMismatch);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() <= GRID_EPS);
        for &t in &grid {
            if t < start - GRID_EPS || t > end + GRID_EPS {
                return Err(Error::TimeOutsideInterval { time: t, start, end });
            }
            propagator.check_duration(t)?;
        }
        Ok(Self {
            propagator,
            psi0: psi0.with_time(0.0),
            start,
            end,
            grid,
            snapshots: OnceLock::new(),
        })
    }

    pub fn space(&self) -> &Space {
        self.psi0.space()
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn initial_state(&self) -> &WaveFunction {
        &self.psi0
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn grid_index(&self, t: f64) -> Option<usize> {
        let i = self.grid.partition_point(|&g| g < t - GRID_EPS);
        (i < self.grid.len() && (self.grid[i] - t).abs() <= GRID_EPS).then_some(i)
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if t < self.start - GRID_EPS || t > self.end + GRID_EPS {
            return Err(Error::TimeOutsideInterval {
                time: t,
                start: self.start,
                end: self.end,
            });
        }
        Ok(())
    }

    /// `Ψ(t)` at every grid time, materialized once and shared by all readers.
    pub fn snapshots(&self) -> &[WaveFunction] {
        self.snapshots.get_or_init(|| {
            let mut out: Vec<Option<WaveFunction>> = vec![None; self.grid.len()];
            let split = self.grid.partition_point(|&g| g < 0.0);
            let mut cur = self.psi0.clone();
            for k in split..self.grid.len() {
                cur = self
                    .propagator
                    .evolve(&cur, self.grid[k] - cur.time())
                    .expect("grid durations validated at construction");
                out[k] = Some(cur.clone());
            }
            let mut cur = self.psi0.clone();
            for k in (0..split).rev() {
                cur = self
                    .propagator
                    .evolve(&cur, self.grid[k] - cur.time())
                    .expect("grid durations validated at construction");
                out[k] = Some(cur.clone());
            }
            out.into_iter().map(|s| s.expect("filled")).collect()
        })
    }

    /// `Ψ(t) = U(t)Ψ₀`, from the snapshot cache when `t` is a grid time.
    pub fn state_at(&self, t: f64) -> Result<Cow<'_, WaveFunction>> {
        self.check_time(t)?;
        if let Some(k) = self.grid_index(t) {
            return Ok(Cow::Borrowed(&self.snapshots()[k]));
        }
        Ok(Cow::Owned(self.propagator.evolve(&self.psi0, t)?))
    }

    /// Evolves `psi` (any time tag) to time `to`.
    pub fn evolve_to(&self, psi: &WaveFunction, to: f64) -> Result<WaveFunction> {
        self.propagator.evolve(psi, to - psi.time())
    }

    /// `E(Δ)Ψ(t)` at time `t`.
    pub fn projected(&self, s: &SSet) -> Result<WaveFunction> {
        self.state_at(s.time)?.project(&s.region)
    }

    /// `Ψ̂(S) = U⁻¹(t)E(Δ)U(t)Ψ₀`, represented at time 0.
    pub fn psi_hat(&self, s: &SSet) -> Result<WaveFunction> {
        let p = self.projected(s)?;
        self.evolve_to(&p, 0.0)
    }

    /// `‖Ψ̂(S)‖² = P_t(Δ)`.
    pub fn weight(&self, s: &SSet) -> Result<f64> {
        self.state_at(s.time)?.mass_in(&s.region)
    }

    /// `‖Ψ̂((t, X)) − Σ_k Ψ̂((t, Δ_k))‖` for a partition `{Δ_k}` of `X`.
    pub fn sigma_additivity_residual(&self, t: f64, partition: &[Region]) -> Result<f64> {
        Region::check_partition(self.space(), partition)?;
        let whole = self.psi_hat(&SSet::full(t, self.space()))?;
        let mut acc = WaveFunction::zeros(self.space(), 0.0);
        for r in partition {
            let part = self.psi_hat(&SSet::new(t, r.clone()))?;
            acc.add_scaled(C64::new(1.0, 0.0), &part)?;
        }
        Ok(whole.sub(&acc)?.norm())
    }
}

/// `Q₁ × Q₂` with the default dimension cap.
pub fn product(a: &QuantumProcess, b: &QuantumProcess) -> Result<QuantumProcess> {
    product_with_cap(a, b, DEFAULT_PRODUCT_CAP)
}

fn flatten_factors(p: &Propagator) -> Vec<Propagator> {
    match p {
        Propagator::Tensor(t) => t.factors().to_vec(),
        other => vec![other.clone()],
    }
}

/// Product process on the tensor product of two mode spaces. Grid products
/// are not materialized; use [`SymbolicProduct`] for those.
pub fn product_with_cap(a: &QuantumProcess, b: &QuantumProcess, cap: usize) -> Result<QuantumProcess> {
    if (a.start - b.start).abs() > GRID_EPS || (a.end - b.end).abs() > GRID_EPS {
        return Err(Error::IntervalMismatch);
    }
    let (ma, mb) = match (a.space(), b.space()) {
        (Space::Modes(x), Space::Modes(y)) => (x, y),
        _ => {
            return Err(Error::Unsupported(
                "grid products are kept symbolic; use SymbolicProduct".into(),
            ))
        }
    };
    let dimension = ma.dimension().saturating_mul(mb.dimension());
    if dimension > cap {
        return Err(Error::ProductDimensionTooLarge { dimension, cap });
    }
    let space: Space = ModeSpace::product(ma, mb).into();
    let mut amps = Vec::with_capacity(dimension);
    for x in a.psi0.amplitudes() {
        for y in b.psi0.amplitudes() {
            amps.push(x * y);
        }
    }
    let psi0 = WaveFunction::new(&space, amps, 0.0)?;
    let mut factors = flatten_factors(&a.propagator);
    factors.extend(flatten_factors(&b.propagator));
    let propagator: Propagator = TensorPropagator::new(factors).into();
    let mut grid = a.grid.clone();
    grid.extend_from_slice(&b.grid);
    QuantumProcess::new(propagator, psi0, (a.start, a.end), grid)
}

/// N-fold product `Q × … × Q`.
pub fn power(qp: &QuantumProcess, n: usize, cap: usize) -> Result<QuantumProcess> {
    if n == 0 {
        return Err(Error::InvalidArgument("power needs n >= 1".into()));
    }
    let d = qp.space().dimension();
    let dimension = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if dimension > cap {
        return Err(Error::ProductDimensionTooLarge { dimension, cap });
    }
    let mut acc = QuantumProcess::new(
        qp.propagator.clone(),
        qp.psi0.clone(),
        (qp.start, qp.end),
        qp.grid.clone(),
    )?;
    for _ in 1..n {
        acc = product_with_cap(&acc, qp, cap)?;
    }
    Ok(acc)
}

/// Product of processes kept in factorized form; only product boxes are addressable.
#[derive(Debug, Clone)]
pub struct SymbolicProduct {
    factors: Vec<Arc<QuantumProcess>>,
}

impl SymbolicProduct {
    pub fn new(factors: Vec<Arc<QuantumProcess>>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
        let iv = first.interval();
        if factors.iter().any(|f| {
            let j = f.interval();
            (j.0 - iv.0).abs() > GRID_EPS || (j.1 - iv.1).abs() > GRID_EPS
        }) {
            return Err(Error::IntervalMismatch);
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[Arc<QuantumProcess>] {
        &self.factors
    }

    fn check_box(&self, regions: &[Region]) -> Result<()> {
        if regions.len() != self.factors.len() {
            return Err(Error::LengthMismatch {
                expected: self.factors.len(),
                got: regions.len(),
            });
        }
        Ok(())
    }

    /// `‖Ψ̂((t, Δ₁ × … × Δ_n))‖² = Π_k ‖Ψ̂_k((t, Δ_k))‖²`.
    pub fn box_weight(&self, t: f64, regions: &[Region]) -> Result<f64> {
        self.check_box(regions)?;
        self.factors
            .iter()
            .zip(regions)
            .try_fold(1.0, |acc, (f, r)| Ok(acc * f.weight(&SSet::new(t, r.clone()))?))
    }

    /// Factors of `Ψ̂((t, Δ₁ × … × Δ_n))`.
    pub fn box_psi_hat(&self, t: f64, regions: &[Region]) -> Result<Vec<WaveFunction>> {
        self.check_box(regions)?;
        self.factors
            .iter()
            .zip(regions)
            .map(|(f, r)| f.psi_hat(&SSet::new(t, r.clone())))
            .collect()
    }

    /// `⟨Ψ̂(B₁)|Ψ̂(B₂)⟩` for two product boxes, as the product of factor overlaps.
    pub fn box_inner(&self, t1: f64, b1: &[Region], t2: f64, b2: &[Region]) -> Result<C64> {
        let v1 = self.box_psi_hat(t1, b1)?;
        let v2 = self.box_psi_hat(t2, b2)?;
        v1.iter()
            .zip(&v2)
            .try_fold(C64::new(1.0, 0.0), |acc, (x, y)| Ok(acc * x.inner(y)?))
    }
}
