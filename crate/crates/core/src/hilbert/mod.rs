//! Discretized Hilbert spaces: uniform grids and finite mode networks, with
//! norm-preserving time evolution, exact projections and Ehrenfest checks.

mod ehrenfest;
mod fft;
pub mod network;
mod propagator;
mod region;
mod space;
mod wave;

pub use ehrenfest::{ehrenfest_diagnostics, EhrenfestReport};
pub use fft::GridFft;
pub use propagator::{
    unitarity_deviation, DenseHamiltonian, Propagator, SplitOperator, TensorPropagator,
    UnitarySchedule, UNITARY_TOLERANCE,
};
pub use region::Region;
pub use space::{GridSpace, ModeSpace, Space};
pub use wave::{gaussian_packet, WaveFunction, C64, PACKET_TAIL_TOLERANCE};

/// `E(Δ)ψ`.
pub fn project(psi: &WaveFunction, region: &Region) -> crate::Result<WaveFunction> {
    psi.project(region)
}

/// `⟨ψ₁|ψ₂⟩`.
pub fn inner(a: &WaveFunction, b: &WaveFunction) -> crate::Result<C64> {
    a.inner(b)
}

/// `U(duration)ψ`.
pub fn evolve(psi: &WaveFunction, prop: &Propagator, duration: f64) -> crate::Result<WaveFunction> {
    prop.evolve(psi, duration)
}
