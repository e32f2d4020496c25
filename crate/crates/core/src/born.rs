//! Born frequencies through the N-fold product process, and POVMs read off
//! from pointer positions of a finite measurement model.

use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classical::exact_frequency_event;
use crate::error::{Error, Result};
use crate::format;
use crate::hilbert::{unitarity_deviation, ModeSpace, Region, Space, C64, UNITARY_TOLERANCE};
use crate::squant::{power, QuantumProcess, SSet};

/// Name of the neutral outcome `ω₀` in exported POVMs.
pub const NEUTRAL: &str = "omega0";
const HERMITIAN_TOLERANCE: f64 = 1e-12;
const POSITIVITY_TOLERANCE: f64 = 1e-10;
const COMPLETENESS_TOLERANCE: f64 = 1e-10;

/// Micro system ⊗ apparatus, a coupling unitary standing for `U(t_F − t_I)`, and
/// an outcome map `f` from product labels to `Ω ∪ {ω₀}`.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    micro: Arc<ModeSpace>,
    apparatus: Arc<ModeSpace>,
    product: Space,
    coupling: DMatrix<C64>,
    outcomes: Vec<String>,
    /// `outcome_of[x]` is the index into `outcomes`, `None` for `ω₀`.
    outcome_of: Vec<Option<usize>>,
}

impl MeasurementModel {
    /// `f` receives the product label (`micro,apparatus…`) and returns an
    /// outcome name or `None` for `ω₀`.
    pub fn new<S: AsRef<str>>(
        micro: &ModeSpace,
        apparatus: &ModeSpace,
        coupling: DMatrix<C64>,
        outcomes: &[S],
        f: impl Fn(&str) -> Option<String>,
    ) -> Result<Self> {
        let product = ModeSpace::product(micro, apparatus);
        let n = product.dimension();
        if coupling.nrows() != n || coupling.ncols() != n {
            return Err(Error::InvalidModel(format!(
                "coupling is {}x{}, product dimension is {n}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        let deviation = unitarity_deviation(&coupling);
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        let outcomes: Vec<String> = outcomes.iter().map(|o| o.as_ref().to_owned()).collect();
        if outcomes.iter().any(|o| o == NEUTRAL || o.split_whitespace().count() != 1) {
            return Err(Error::InvalidModel("outcome names must be single words other than omega0".into()));
        }
        let outcome_of = product
            .labels()
            .iter()
            .map(|l| match f(l) {
                None => Ok(None),
                Some(o) => outcomes
                    .iter()
                    .position(|x| *x == o)
                    .map(Some)
                    .ok_or_else(|| Error::InvalidModel(format!("f({l}) = `{o}` is not an outcome"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            micro: Arc::new(micro.clone()),
            apparatus: Arc::new(apparatus.clone()),
            product: product.into(),
            coupling,
            outcomes,
            outcome_of,
        })
    }

    pub fn micro(&self) -> &ModeSpace {
        &self.micro
    }

    pub fn apparatus(&self) -> &ModeSpace {
        &self.apparatus
    }

    pub fn product_space(&self) -> &Space {
        &self.product
    }

    pub fn coupling(&self) -> &DMatrix<C64> {
        &self.coupling
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    /// `f⁻¹(A)` as a region of the product space; `A` may name [`NEUTRAL`].
    pub fn preimage<S: AsRef<str>>(&self, outcomes: &[S]) -> Result<Region> {
        let wanted = self.outcome_indices(outcomes)?;
        Region::from_mask(
            &self.product,
            self.outcome_of.iter().map(|o| wanted.contains(o)).collect(),
        )
    }

    fn outcome_indices<S: AsRef<str>>(&self, outcomes: &[S]) -> Result<Vec<Option<usize>>> {
        outcomes
            .iter()
            .map(|o| {
                let o = o.as_ref();
                if o == NEUTRAL {
                    return Ok(None);
                }
                self.outcomes
                    .iter()
                    .position(|x| x == o)
                    .map(Some)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown outcome `{o}`")))
            })
            .collect()
    }

    /// `V = U(1 ⊗ Φ)`, a `(d·a) × d` isometry.
    fn isometry(&self, ready: &[C64]) -> Result<DMatrix<C64>> {
        let d = self.micro.dimension();
        let a = self.apparatus.dimension();
        if ready.len() != a {
            return Err(Error::LengthMismatch { expected: a, got: ready.len() });
        }
        let embed = DMatrix::from_fn(d * a, d, |row, col| {
            if row / a == col {
                ready[row % a]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(&self.coupling * embed)
    }

    /// `‖E[f⁻¹(A)] U (φ ⊗ Φ)‖²`, computed on the product space without the POVM.
    pub fn direct_probability<S: AsRef<str>>(&self, outcomes: &[S], phi: &[C64], ready: &[C64]) -> Result<f64> {
        let v = self.isometry(ready)?;
        if phi.len() != v.ncols() {
            return Err(Error::LengthMismatch { expected: v.ncols(), got: phi.len() });
        }
        let out = v * nalgebra::DVector::from_column_slice(phi);
        let region = self.preimage(outcomes)?;
        Ok(region.indices().map(|i| out[i].norm_sqr()).sum())
    }
}

/// Effects `O({ω})` for every outcome plus `O({ω₀})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    outcomes: Vec<String>,
    atoms: Vec<DMatrix<C64>>,
    neutral: DMatrix<C64>,
}

/// Assembles `⟨eᵢ|O(A)|eⱼ⟩ = h_A(eᵢ, eⱼ) = ⟨eᵢ⊗Φ|U†E[f⁻¹(A)]U|eⱼ⊗Φ⟩` for every
/// atom and checks self-adjointness, positivity and completeness.
pub fn build_povm(model: &MeasurementModel, ready: &[C64]) -> Result<Povm> {
    let norm: f64 = ready.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(norm));
    }
    let v = model.isometry(ready)?;
    let d = v.ncols();
    let n_out = model.outcomes.len();
    // one effect per outcome index, plus ω₀ last
    let effects: Vec<DMatrix<C64>> = (0..=n_out)
        .into_par_iter()
        .map(|o| {
            let target = if o == n_out { None } else { Some(o) };
            let rows: Vec<usize> = (0..v.nrows()).filter(|&x| model.outcome_of[x] == target).collect();
            DMatrix::from_fn(d, d, |i, j| rows.iter().map(|&x| v[(x, i)].conj() * v[(x, j)]).sum())
        })
        .collect();
    let mut atoms = effects;
    let neutral = atoms.pop().expect("neutral effect");
    let povm = Povm {
        outcomes: model.outcomes.clone(),
        atoms,
        neutral,
    };
    povm.check()?;
    Ok(povm)
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

impl Povm {
    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn dimension(&self) -> usize {
        self.neutral.nrows()
    }

    pub fn atom(&self, outcome: &str) -> Result<&DMatrix<C64>> {
        if outcome == NEUTRAL {
            return Ok(&self.neutral);
        }
        self.outcomes
            .iter()
            .position(|o| o == outcome)
            .map(|i| &self.atoms[i])
            .ok_or_else(|| Error::InvalidArgument(format!("unknown outcome `{outcome}`")))
    }

    pub fn neutral(&self) -> &DMatrix<C64> {
        &self.neutral
    }

    /// `O(A) = Σ_{ω ∈ A} O({ω})`.
    pub fn operator<S: AsRef<str>>(&self, outcomes: &[S]) -> Result<DMatrix<C64>> {
        let d = self.dimension();
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for o in outcomes {
            acc += self.atom(o.as_ref())?;
        }
        Ok(acc)
    }

    /// `‖Σ O(atoms) + O(ω₀) − 1‖_max`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dimension();
        let mut acc = self.neutral.clone();
        for a in &self.atoms {
            acc += a;
        }
        (acc - DMatrix::<C64>::identity(d, d))
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Smallest eigenvalue over all effects.
    pub fn min_eigenvalue(&self) -> f64 {
        self.atoms
            .iter()
            .chain(std::iter::once(&self.neutral))
            .map(min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.atoms
            .iter()
            .chain(std::iter::once(&self.neutral))
            .map(hermitian_deviation)
            .fold(0.0, f64::max)
    }

    fn check(&self) -> Result<()> {
        let h = self.hermitian_deviation();
        if h > HERMITIAN_TOLERANCE {
            return Err(Error::PovmInvariant(format!("effect not self-adjoint, deviation {h:e}")));
        }
        let e = self.min_eigenvalue();
        if e < -POSITIVITY_TOLERANCE {
            return Err(Error::PovmInvariant(format!("negative eigenvalue {e:e}")));
        }
        let c = self.completeness_residual();
        if c > COMPLETENESS_TOLERANCE {
            return Err(Error::PovmInvariant(format!("effects sum to identity within {c:e}")));
        }
        self.spot_check_bounded()
    }

    /// `|⟨φ|O|ϕ⟩| ≤ ‖φ‖‖ϕ‖` on a few fixed pseudo-random pairs.
    fn spot_check_bounded(&self) -> Result<()> {
        let d = self.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b0d);
        let mut draw = || {
            nalgebra::DVector::from_fn(d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        };
        for _ in 0..8 {
            let (a, b) = (draw(), draw());
            let bound = a.norm() * b.norm() * (1.0 + 1e-10);
            for o in self.atoms.iter().chain(std::iter::once(&self.neutral)) {
                let h = (a.adjoint() * o * &b)[(0, 0)].norm();
                if h > bound {
                    return Err(Error::PovmInvariant(format!("|h(a, b)| = {h} exceeds |a||b| = {bound}")));
                }
            }
        }
        Ok(())
    }

    /// Header `povm <dim> <outcomes>`, then per effect a line `outcome <name>`
    /// followed by `dim` rows of `re im` pairs. The neutral effect comes last.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.dimension();
        writeln!(out, "povm {d} {}", self.outcomes.len() + 1)?;
        let named = self
            .outcomes
            .iter()
            .map(String::as_str)
            .zip(&self.atoms)
            .chain(std::iter::once((NEUTRAL, &self.neutral)));
        for (name, m) in named {
            writeln!(out, "outcome {name}")?;
            for i in 0..d {
                let row: Vec<String> = (0..d)
                    .map(|j| format!("{} {}", format::real(m[(i, j)].re), format::real(m[(i, j)].im)))
                    .collect();
                writeln!(out, "{}", row.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()));
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of POVM text".into()))?
                .map_err(Error::from)
        };
        let header = next()?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (d, n) = match parts.as_slice() {
            ["povm", d, n] => (
                d.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?,
                n.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?,
            ),
            _ => return Err(Error::Parse(format!("bad header `{header}`"))),
        };
        let mut outcomes = Vec::new();
        let mut atoms = Vec::new();
        let mut neutral = None;
        for _ in 0..n {
            let line = next()?;
            let name = line
                .strip_prefix("outcome ")
                .ok_or_else(|| Error::Parse(format!("expected `outcome`, got `{line}`")))?
                .trim()
                .to_owned();
            let mut m = DMatrix::<C64>::zeros(d, d);
            for i in 0..d {
                let row = next()?;
                let vals: Vec<f64> = row
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
                    .collect::<Result<_>>()?;
                if vals.len() != 2 * d {
                    return Err(Error::Parse(format!("row {i} of `{name}` has {} numbers", vals.len())));
                }
                for j in 0..d {
                    m[(i, j)] = C64::new(vals[2 * j], vals[2 * j + 1]);
                }
            }
            if name == NEUTRAL {
                neutral = Some(m);
            } else {
                outcomes.push(name);
                atoms.push(m);
            }
        }
        let povm = Povm {
            outcomes,
            atoms,
            neutral: neutral.ok_or_else(|| Error::Parse("missing neutral effect".into()))?,
        };
        povm.check()?;
        Ok(povm)
    }
}

/// `P_φ(A) = ⟨φ|O(A)|φ⟩`.
pub fn outcome_probability<S: AsRef<str>>(povm: &Povm, outcomes: &[S], phi: &[C64]) -> Result<f64> {
    let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(norm));
    }
    if phi.len() != povm.dimension() {
        return Err(Error::LengthMismatch { expected: povm.dimension(), got: phi.len() });
    }
    let o = povm.operator(outcomes)?;
    let v = nalgebra::DVector::from_column_slice(phi);
    Ok((v.adjoint() * o * &v)[(0, 0)].re)
}

/// `P_φ({ω₀})`, the weight of configurations the apparatus never records.
pub fn neutral_weight(model: &MeasurementModel, phi: &[C64], ready: &[C64]) -> Result<f64> {
    model.direct_probability(&[NEUTRAL], phi, ready)
}

/// `‖Ψ^N[(t, Δ_{N,ε})]‖²` through the identity with the binomial measure, with
/// `p = ‖Ψ̂((t, Δ))‖²`. No product state is built.
pub fn ensemble_frequency_weight(qp: &QuantumProcess, n: u64, t: f64, region: &Region, eps: f64) -> Result<f64> {
    let p = qp.weight(&SSet::new(t, region.clone()))?;
    exact_frequency_event(p, eps, n)
}

/// The same weight computed on the materialized N-fold product process.
pub fn product_frequency_weight(
    qp: &QuantumProcess,
    n: usize,
    t: f64,
    region: &Region,
    eps: f64,
    cap: usize,
) -> Result<f64> {
    let p = qp.weight(&SSet::new(t, region.clone()))?;
    let big = power(qp, n, cap)?;
    let d = qp.space().dimension();
    let mask: Vec<bool> = (0..big.space().dimension())
        .map(|mut idx| {
            let mut k = 0usize;
            for _ in 0..n {
                k += usize::from(region.contains(idx % d));
                idx /= d;
            }
            (k as f64 / n as f64 - p).abs() <= eps + 1e-12
        })
        .collect();
    let sigma = Region::from_mask(big.space(), mask)?;
    big.weight(&SSet::new(t, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{network, Propagator, UnitarySchedule, WaveFunction};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// spin ⊗ pointer{ready, up, down}; basis state i drives the pointer to i+1
    fn ideal() -> MeasurementModel {
        let micro = ModeSpace::new(&["up", "down"]).unwrap();
        let app = ModeSpace::new(&["ready", "up", "down"]).unwrap();
        let product = ModeSpace::product(&micro, &app);
        let u = network::from_basis_map(6, |j| {
            let (s, p) = (j / 3, j % 3);
            let target = match p {
                0 => s + 1,
                x if x == s + 1 => 0,
                x => x,
            };
            vec![(s * 3 + target, c(1.0))]
        });
        let _ = product;
        MeasurementModel::new(&micro, &app, u, &["+", "-"], |l| match l.split(',').nth(1) {
            Some("up") => Some("+".into()),
            Some("down") => Some("-".into()),
            _ => None,
        })
        .unwrap()
    }

    const READY: [C64; 3] = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];

    #[test]
    fn ideal_atoms_are_projectors() {
        let m = ideal();
        let p = build_povm(&m, &READY).unwrap();
        let up = p.atom("+").unwrap();
        assert!((up[(0, 0)] - c(1.0)).norm() < 1e-12 && up[(1, 1)].norm() < 1e-12);
        assert!(p.neutral().iter().all(|z| z.norm() < 1e-12));
        assert_eq!(outcome_probability(&p, &["+"], &[c(1.0), c(0.0)]).unwrap(), 1.0);
        let all = outcome_probability(&p, &["+", "-", NEUTRAL], &[c(0.6), C64::new(0.0, 0.8)]).unwrap();
        assert!((all - 1.0).abs() < 1e-12);
        assert_eq!(neutral_weight(&m, &[c(0.6), c(0.8)], &READY).unwrap(), 0.0);
        assert!(matches!(outcome_probability(&p, &["+"], &[c(1.0), c(1.0)]), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn tilted_spin_probability() {
        let m = ideal();
        let p = build_povm(&m, &READY).unwrap();
        for theta in [0.3, 1.1, 2.0] {
            let phi = [c((theta / 2.0f64).cos()), c((theta / 2.0f64).sin())];
            let via_povm = outcome_probability(&p, &["+"], &phi).unwrap();
            let direct = m.direct_probability(&["+"], &phi, &READY).unwrap();
            assert!((via_povm - (theta / 2.0f64).cos().powi(2)).abs() < 1e-10);
            assert!((via_povm - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn noisy_pointer() {
        // basis i drives the pointer to i with amplitude √(1−η), to the other with √η
        let eta: f64 = 0.1;
        let micro = ModeSpace::new(&["a", "b"]).unwrap();
        let app = ModeSpace::new(&["ready", "a", "b"]).unwrap();
        let (g, w) = ((1.0 - eta).sqrt(), eta.sqrt());
        let mut col = vec![c(0.0); 6];
        col[1] = c(g);
        col[2] = c(w);
        let mut first = vec![c(0.0); 6];
        first[0..3].copy_from_slice(&col[0..3]);
        // columns for |a,ready⟩ and |b,ready⟩; complete to a unitary on each micro block
        let block_a = network::unitary_with_first_column(&[c(0.0), c(g), c(w)]).unwrap();
        let block_b = network::unitary_with_first_column(&[c(0.0), c(w), c(g)]).unwrap();
        let mut u = DMatrix::<C64>::zeros(6, 6);
        u.view_mut((0, 0), (3, 3)).copy_from(&block_a);
        u.view_mut((3, 3), (3, 3)).copy_from(&block_b);
        let m = MeasurementModel::new(&micro, &app, u, &["A", "B"], |l| match l.split(',').nth(1) {
            Some("a") => Some("A".into()),
            Some("b") => Some("B".into()),
            _ => None,
        })
        .unwrap();
        let p = build_povm(&m, &READY).unwrap();
        let a = p.atom("A").unwrap();
        assert!((a[(0, 0)] - c(1.0 - eta)).norm() < 1e-12);
        assert!((a[(1, 1)] - c(eta)).norm() < 1e-12);
        assert!(a[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn unrecorded_component_and_silent_apparatus() {
        // a third micro state leaves the pointer at ready
        let micro = ModeSpace::new(&["up", "down", "lost"]).unwrap();
        let app = ModeSpace::new(&["ready", "up", "down"]).unwrap();
        let u = network::from_basis_map(9, |j| {
            let (s, p) = (j / 3, j % 3);
            let target = if s == 2 {
                p
            } else {
                match p {
                    0 => s + 1,
                    x if x == s + 1 => 0,
                    x => x,
                }
            };
            vec![(s * 3 + target, c(1.0))]
        });
        let f = |l: &str| match l.split(',').nth(1) {
            Some("up") => Some("+".to_owned()),
            Some("down") => Some("-".to_owned()),
            _ => None,
        };
        let m = MeasurementModel::new(&micro, &app, u.clone(), &["+", "-"], f).unwrap();
        let phi = [c(0.99f64.sqrt()), c(0.0), c(0.1)];
        assert!((neutral_weight(&m, &phi, &READY).unwrap() - 0.01).abs() < 1e-12);
        let silent = MeasurementModel::new(&micro, &app, u, &["+"], |_| None).unwrap();
        let p = build_povm(&silent, &READY).unwrap();
        assert!((p.neutral() - DMatrix::<C64>::identity(3, 3)).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn povm_text_round_trip() {
        let p = build_povm(&ideal(), &READY).unwrap();
        let mut buf = Vec::new();
        p.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("povm 2 3\noutcome +\n"));
        assert_eq!(Povm::read_text(text.as_bytes()).unwrap(), p);
        assert!(Povm::read_text("povm 2\n".as_bytes()).is_err());
    }

    #[test]
    fn model_validation() {
        let micro = ModeSpace::new(&["a", "b"]).unwrap();
        let app = ModeSpace::new(&["r", "x"]).unwrap();
        let bad = DMatrix::<C64>::identity(4, 4) * c(2.0);
        assert!(matches!(
            MeasurementModel::new(&micro, &app, bad, &["x"], |_| None),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(
            MeasurementModel::new(&micro, &app, DMatrix::identity(4, 4), &["x"], |_| Some("y".into())),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn binomial_and_product_routes_agree() {
        let space: Space = ModeSpace::new(&["l", "r"]).unwrap().into();
        let prop: Propagator = UnitarySchedule::new(2).with(1.0, network::beam_splitter()).unwrap().into();
        let qp = QuantumProcess::new(prop, WaveFunction::mode(&space, "l").unwrap(), (0.0, 1.0), vec![0.0, 1.0]).unwrap();
        let region = Region::from_labels(&space, &["l"]).unwrap();
        for n in 1..=8usize {
            let a = ensemble_frequency_weight(&qp, n as u64, 1.0, &region, 0.2).unwrap();
            let b = product_frequency_weight(&qp, n, 1.0, &region, 0.2, 1 << 16).unwrap();
            assert!((a - b).abs() < 1e-12, "{n}: {a} {b}");
        }
        assert_eq!(ensemble_frequency_weight(&qp, 1, 1.0, &region, 0.5).unwrap(), 1.0);
    }
}
