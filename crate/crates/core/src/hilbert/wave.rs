use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

use super::fft::GridFft;
use super::region::Region;
use super::space::{GridSpace, Space};

pub type C64 = Complex64;

/// Tail mass allowed outside the grid when constructing packets.
pub const PACKET_TAIL_TOLERANCE: f64 = 1e-10;

/// Complex amplitudes over a discretized configuration space, tagged with a time.
///
/// Amplitudes are normalized discretely: `Σ|a_i|² = 1`, so `|a_i|²` is the
/// probability mass of point `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    space: Space,
    amps: Vec<C64>,
    time: f64,
}

impl WaveFunction {
    pub fn new(space: &Space, amps: Vec<C64>, time: f64) -> Result<Self> {
        if amps.len() != space.dimension() {
            return Err(Error::LengthMismatch {
                expected: space.dimension(),
                got: amps.len(),
            });
        }
        Ok(Self {
            space: space.clone(),
            amps,
            time,
        })
    }

    pub fn zeros(space: &Space, time: f64) -> Self {
        Self {
            space: space.clone(),
            amps: vec![C64::new(0.0, 0.0); space.dimension()],
            time,
        }
    }

    pub fn basis(space: &Space, index: usize, time: f64) -> Result<Self> {
        let mut psi = Self::zeros(space, time);
        let slot = psi
            .amps
            .get_mut(index)
            .ok_or_else(|| Error::InvalidArgument(format!("basis index {index} out of range")))?;
        *slot = C64::new(1.0, 0.0);
        Ok(psi)
    }

    /// Basis state of a mode space addressed by label.
    pub fn mode(space: &Space, label: &str) -> Result<Self> {
        let idx = space
            .as_modes()
            .and_then(|m| m.index_of(label))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mode `{label}`")))?;
        Self::basis(space, idx, 0.0)
    }

    /// Mode-space state from `(label, amplitude)` pairs.
    pub fn from_modes(space: &Space, entries: &[(&str, C64)]) -> Result<Self> {
        let modes = space
            .as_modes()
            .ok_or_else(|| Error::Unsupported("from_modes needs a mode space".into()))?;
        let mut psi = Self::zeros(space, 0.0);
        for &(label, a) in entries {
            let i = modes
                .index_of(label)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown mode `{label}`")))?;
            psi.amps[i] += a;
        }
        Ok(psi)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Rescales to unit norm. A zero vector is returned unchanged.
    pub fn normalize(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
        self
    }

    pub fn scale(mut self, c: C64) -> Self {
        self.amps.iter_mut().for_each(|a| *a *= c);
        self
    }

    /// `Σ c_k ψ_k` at the time of the first term.
    pub fn superpose(terms: &[(C64, &WaveFunction)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty superposition".into()))?;
        let mut out = Self::zeros(&first.space, first.time);
        for (c, psi) in terms {
            out.add_scaled(*c, psi)?;
        }
        Ok(out)
    }

    pub fn add_scaled(&mut self, c: C64, other: &WaveFunction) -> Result<()> {
        self.space.ensure_same(&other.space)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &WaveFunction) -> Result<WaveFunction> {
        let mut out = self.clone();
        out.add_scaled(C64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &WaveFunction) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `⟨self|other⟩`, antilinear in the first argument.
    pub fn inner(&self, other: &WaveFunction) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(inner_slices(&self.amps, &other.amps))
    }

    /// `E(Δ)ψ`: amplitudes outside `region` are zeroed. The result is
    /// sub-normalized whenever mass lies outside the region.
    pub fn project(&self, region: &Region) -> Result<WaveFunction> {
        self.space.ensure_same(region.space())?;
        let amps = self
            .amps
            .iter()
            .zip(region.mask())
            .map(|(&a, &m)| if m { a } else { C64::new(0.0, 0.0) })
            .collect();
        Ok(Self {
            space: self.space.clone(),
            amps,
            time: self.time,
        })
    }

    /// `‖E(Δ)ψ‖²`.
    pub fn mass_in(&self, region: &Region) -> Result<f64> {
        self.space.ensure_same(region.space())?;
        Ok(self
            .amps
            .iter()
            .zip(region.mask())
            .filter(|(_, &m)| m)
            .map(|(a, _)| a.norm_sqr())
            .sum())
    }

    fn grid(&self) -> Result<&GridSpace> {
        self.space
            .as_grid()
            .ok_or_else(|| Error::Unsupported("position moments need a grid space".into()))
    }

    /// `⟨Q_axis⟩` by quadrature over the grid, normalized by the state's mass.
    pub fn mean_position(&self, axis: usize) -> Result<f64> {
        let grid = self.grid()?;
        let mass = self.norm_sqr();
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let idx = grid.unflatten(i);
            acc += grid.coordinate(axis, idx[axis]) * a.norm_sqr();
        }
        Ok(acc / mass)
    }

    /// `⟨P_axis⟩` (with ħ = 1) from the discrete Fourier spectrum.
    pub fn mean_momentum(&self, axis: usize) -> Result<f64> {
        let grid = self.grid()?;
        let fft = GridFft::new(grid);
        self.mean_momentum_with(grid, &fft, axis)
    }

    pub(crate) fn mean_momentum_with(
        &self,
        grid: &GridSpace,
        fft: &GridFft,
        axis: usize,
    ) -> Result<f64> {
        let mut spec = self.amps.clone();
        fft.forward(&mut spec);
        let ks = grid.wavenumbers(axis);
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, z) in spec.iter().enumerate() {
            let idx = grid.unflatten(i);
            let w = z.norm_sqr();
            num += ks[idx[axis]] * w;
            den += w;
        }
        Ok(num / den)
    }
}

pub(crate) fn inner_slices(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Normalized Gaussian packet `exp(-(x-c)²/(4σ²) + i p·x)` at time 0.
///
/// `width` is the standard deviation σ of `|ψ|²` along each axis.
pub fn gaussian_packet(
    space: &Space,
    center: &[f64],
    width: f64,
    momentum: &[f64],
) -> Result<WaveFunction> {
    let grid = space
        .as_grid()
        .ok_or_else(|| Error::Unsupported("gaussian packets need a grid space".into()))?;
    let dim = grid.dimension();
    if center.len() != dim || momentum.len() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            got: center.len().min(momentum.len()),
        });
    }
    let spacing = grid.min_spacing();
    if !(width > 2.0 * spacing) {
        return Err(Error::PacketTooNarrow { width, spacing });
    }
    let tail_mass: f64 = (0..dim)
        .map(|a| {
            let s = width * std::f64::consts::SQRT_2;
            0.5 * erfc((center[a] - grid.lower(a)) / s) + 0.5 * erfc((grid.upper(a) - center[a]) / s)
        })
        .sum();
    if tail_mass > PACKET_TAIL_TOLERANCE {
        return Err(Error::PacketClipped { tail_mass });
    }
    let amps = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let mut exponent = C64::new(0.0, 0.0);
            for a in 0..dim {
                let d = x[a] - center[a];
                exponent += C64::new(-d * d / (4.0 * width * width), momentum[a] * d);
            }
            exponent.exp()
        })
        .collect();
    Ok(WaveFunction::new(space, amps, 0.0)?.normalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Space {
        GridSpace::line(-20.0, 20.0, 512).unwrap().into()
    }

    #[test]
    fn symmetric_packet_has_zero_moments() {
        let psi = gaussian_packet(&line(), &[0.0], 1.0, &[0.0]).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(psi.mean_position(0).unwrap().abs() < 1e-8);
        assert!(psi.mean_momentum(0).unwrap().abs() < 1e-8);
    }

    #[test]
    fn displaced_boosted_packet_moments() {
        // oracle: direct quadrature of x|ψ|² and of k|ψ̃|² over the produced amplitudes
        let s = line();
        let psi = gaussian_packet(&s, &[-5.0], 1.0, &[2.0]).unwrap();
        let grid = s.as_grid().unwrap();
        let q: f64 = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| grid.coordinate(0, i) * a.norm_sqr())
            .sum();
        assert!((q + 5.0).abs() < 1e-6, "{q}");
        // momentum from a finite-difference current: Im(ψ* ∂ψ), central differences
        let h = grid.spacing(0);
        let a = psi.amplitudes();
        let mut p_fd = 0.0;
        for i in 1..a.len() - 1 {
            let d = (a[i + 1] - a[i - 1]) / (2.0 * h);
            p_fd += (a[i].conj() * d).im;
        }
        assert!((p_fd - 2.0).abs() < 1e-2, "{p_fd}");
        assert!((psi.mean_momentum(0).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn under_resolved_packet_rejected() {
        assert!(matches!(
            gaussian_packet(&line(), &[0.0], 0.01, &[0.0]),
            Err(Error::PacketTooNarrow { .. })
        ));
    }

    #[test]
    fn clipped_packet_rejected() {
        assert!(matches!(
            gaussian_packet(&line(), &[18.0], 1.0, &[0.0]),
            Err(Error::PacketClipped { .. })
        ));
    }

    #[test]
    fn projection_splits_mass() {
        let s = line();
        let psi = gaussian_packet(&s, &[0.0], 1.0, &[0.0]).unwrap();
        let left = Region::interval(&s, -100.0, 0.0).unwrap();
        let full = Region::full(&s);
        let pl = psi.project(&left).unwrap();
        let pr = psi.project(&left.complement()).unwrap();
        // oracle: quadrature of |ψ|² over the mask; the grid point at x = 0 sits in the right half
        let oracle: f64 = psi
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(i, _)| s.as_grid().unwrap().coordinate(0, *i) < 0.0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        assert!((pl.norm_sqr() - oracle).abs() < 1e-14);
        let at_zero = psi.amplitudes()[256].norm_sqr();
        assert!((pl.norm_sqr() - (0.5 - at_zero / 2.0)).abs() < 1e-9);
        assert!((pl.norm_sqr() + pr.norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
        assert_eq!(psi.project(&full).unwrap(), psi);
        assert_eq!(psi.project(&Region::empty(&s)).unwrap().norm_sqr(), 0.0);
        assert_eq!(pl.project(&left).unwrap(), pl);
    }

    #[test]
    fn inner_products() {
        let s: Space = crate::hilbert::ModeSpace::new(&["a", "b", "c"]).unwrap().into();
        let a = WaveFunction::mode(&s, "a").unwrap();
        let b = WaveFunction::mode(&s, "b").unwrap();
        assert_eq!(a.inner(&b).unwrap(), C64::new(0.0, 0.0));
        let u = WaveFunction::new(&s, vec![C64::new(1.0, 0.0); 3], 0.0)
            .unwrap()
            .normalize();
        let r1 = Region::from_labels(&s, &["a", "b"]).unwrap();
        let r2 = Region::from_labels(&s, &["b", "c"]).unwrap();
        let ov = u
            .project(&r1)
            .unwrap()
            .inner(&u.project(&r2).unwrap())
            .unwrap();
        assert!((ov.re - 1.0 / 3.0).abs() < 1e-15 && ov.im == 0.0);
        let g = WaveFunction::from_modes(&s, &[("a", C64::new(0.0, 2.0)), ("c", C64::new(1.0, 1.0))])
            .unwrap();
        assert!((g.inner(&g).unwrap().re - g.norm_sqr()).abs() < 1e-15);
        assert_eq!(g.inner(&u).unwrap(), u.inner(&g).unwrap().conj());
    }
}
