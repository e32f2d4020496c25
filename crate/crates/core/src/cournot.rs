//! The overlap functional `M_Ψ`, Cournot verdicts and the probes showing that
//! the two-time condition does not reduce to a one-sided one.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{WaveFunction, C64};
use crate::squant::{QuantumProcess, SSet};

pub const DEFAULT_THRESHOLD: f64 = 1e-3;
/// Weights below this are treated as vanishing.
pub const WEIGHT_FLOOR: f64 = 1e-14;

/// `M_Ψ` together with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overlap {
    pub m: f64,
    /// `1 − m`, from `‖Ψ̂(S₁) − Ψ̂(S₂)‖²/(w₁ + w₂)` in the near-certain regime.
    pub one_minus_m: f64,
    #[serde(skip)]
    pub inner: C64,
    pub w1: f64,
    pub w2: f64,
}

/// `2 Re⟨a|b⟩ / (‖a‖² + ‖b‖²)` for two vectors.
pub fn overlap(a: &WaveFunction, b: &WaveFunction) -> Result<Overlap> {
    let w1 = a.norm_sqr();
    let w2 = b.norm_sqr();
    if w1 <= WEIGHT_FLOOR && w2 <= WEIGHT_FLOOR {
        return Err(Error::BothWeightsVanish);
    }
    let inner = a.inner(b)?;
    let den = w1 + w2;
    let mut m = 2.0 * inner.re / den;
    let mut one_minus_m = 1.0 - m;
    if m > 0.999 {
        one_minus_m = a.sub(b)?.norm_sqr() / den;
        m = 1.0 - one_minus_m;
    }
    Ok(Overlap { m, one_minus_m, inner, w1, w2 })
}

pub fn m_psi(qp: &QuantumProcess, s1: &SSet, s2: &SSet) -> Result<f64> {
    Ok(m_psi_detail(qp, s1, s2)?.m)
}

pub fn m_psi_detail(qp: &QuantumProcess, s1: &SSet, s2: &SSet) -> Result<Overlap> {
    let a = qp.psi_hat(s1)?;
    let b = if s1 == s2 { a.clone() } else { qp.psi_hat(s2)? };
    overlap(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CournotVerdict {
    pub m_value: f64,
    pub threshold: f64,
    /// `m_value ≥ 1 − threshold`; the relation is symmetric in the two s-sets.
    pub holds: bool,
}

impl CournotVerdict {
    pub fn new(m_value: f64, threshold: f64) -> Self {
        Self {
            m_value,
            threshold,
            holds: m_value >= 1.0 - threshold,
        }
    }
}

pub fn verdict(qp: &QuantumProcess, s1: &SSet, s2: &SSet, threshold: f64) -> Result<CournotVerdict> {
    Ok(CournotVerdict::new(m_psi(qp, s1, s2)?, threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticularCase {
    pub weight: f64,
    /// `M_Ψ(X^T, S)`, equal to `2w/(1+w)`.
    pub m_full: f64,
    /// `w ≤ 2w/(1+w)` within 1e-12.
    pub inequality_holds: bool,
    /// Verdict on the weight itself: holds iff `w ≥ 1 − threshold`.
    pub verdict: CournotVerdict,
}

pub fn particular_case(qp: &QuantumProcess, s: &SSet, threshold: f64) -> Result<ParticularCase> {
    let hat = qp.psi_hat(s)?;
    let weight = hat.norm_sqr();
    let m_full = overlap(qp.initial_state(), &hat)?.m;
    Ok(ParticularCase {
        weight,
        m_full,
        inequality_holds: weight <= m_full + 1e-12,
        verdict: CournotVerdict::new(weight, threshold),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyViolation {
    pub index: usize,
    pub m_first: f64,
    pub m_second: f64,
    pub inner_re: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub candidates: usize,
    /// Pairs where both overlaps with the anchor reach `1 − threshold`.
    pub qualifying: usize,
    pub violations: Vec<ConsistencyViolation>,
}

/// Scans candidate pairs of disjoint equal-time s-sets for the forbidden
/// configuration `M(S,S₁) ≈ M(S,S₂) ≈ 1` with `Re⟨Ψ̂(S₁)|Ψ̂(S₂)⟩ ≤ 0`.
pub fn consistency_probe(
    qp: &QuantumProcess,
    anchor: &SSet,
    candidates: &[(SSet, SSet)],
    threshold: f64,
) -> Result<ConsistencyReport> {
    for (index, (a, b)) in candidates.iter().enumerate() {
        if (a.time - b.time).abs() > 1e-12 {
            return Err(Error::MalformedCandidate {
                index,
                reason: "times differ".into(),
            });
        }
        if !a.region.is_disjoint(&b.region)? {
            return Err(Error::MalformedCandidate {
                index,
                reason: "regions overlap".into(),
            });
        }
    }
    let hat = qp.psi_hat(anchor)?;
    let rows: Vec<Option<ConsistencyViolation>> = candidates
        .par_iter()
        .enumerate()
        .map(|(index, (a, b))| -> Result<Option<ConsistencyViolation>> {
            let ha = qp.psi_hat(a)?;
            let hb = qp.psi_hat(b)?;
            let m_of = |v: &WaveFunction| match overlap(&hat, v) {
                Ok(o) => Ok(o.m),
                Err(Error::BothWeightsVanish) => Ok(0.0),
                Err(e) => Err(e),
            };
            let m_first = m_of(&ha)?;
            let m_second = m_of(&hb)?;
            if m_first < 1.0 - threshold || m_second < 1.0 - threshold {
                return Ok(None);
            }
            Ok(Some(ConsistencyViolation {
                index,
                m_first,
                m_second,
                inner_re: ha.inner(&hb)?.re,
            }))
        })
        .collect::<Result<_>>()?;
    let qualifying: Vec<ConsistencyViolation> = rows.into_iter().flatten().collect();
    Ok(ConsistencyReport {
        candidates: candidates.len(),
        qualifying: qualifying.len(),
        violations: qualifying.into_iter().filter(|v| v.inner_re <= 0.0).collect(),
    })
}

/// `Re⟨Ψ̂(S₁)|Ψ̂(S₂)⟩ / ‖Ψ̂(S₂)‖²`.
pub fn fac_ratio(qp: &QuantumProcess, s1: &SSet, s2: &SSet) -> Result<f64> {
    let a = qp.psi_hat(s1)?;
    let b = qp.psi_hat(s2)?;
    let w2 = b.norm_sqr();
    if w2 <= WEIGHT_FLOOR {
        return Err(Error::VanishingWeight("second s-set"));
    }
    Ok(a.inner(&b)?.re / w2)
}

/// `‖E(Δ₂)Ψ(t₂) − E(Δ₂)U(t₂−t₁)E(Δ₁)Ψ(t₁)‖ / ‖E(Δ₂)Ψ(t₂)‖`.
///
/// A small value says the content of `Δ₂` at `t₂` came from `Δ₁`, but not the
/// converse; several disjoint `Δ₁` can satisfy it at once.
pub fn j_residual(qp: &QuantumProcess, s1: &SSet, s2: &SSet) -> Result<f64> {
    let target = qp.projected(s2)?;
    let tn = target.norm();
    if tn * tn <= WEIGHT_FLOOR {
        return Err(Error::VanishingWeight("second s-set"));
    }
    let carried = qp.evolve_to(&qp.projected(s1)?, s2.time)?.project(&s2.region)?;
    Ok(target.sub(&carried)?.norm() / tn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{network, ModeSpace, Propagator, Region, Space, UnitarySchedule};

    fn bs() -> QuantumProcess {
        let space: Space = ModeSpace::new(&["a", "b", "c"]).unwrap().into();
        let m = space.as_modes().unwrap().clone();
        let u = network::mix(&m, &["a", "b"], &network::beam_splitter()).unwrap();
        let prop: Propagator = UnitarySchedule::new(3).with(1.0, u).unwrap().into();
        let psi0 = WaveFunction::mode(&space, "a").unwrap();
        QuantumProcess::new(prop, psi0, (0.0, 2.0), vec![0.0, 1.0, 2.0]).unwrap()
    }

    fn s(qp: &QuantumProcess, t: f64, labels: &[&str]) -> SSet {
        SSet::new(t, Region::from_labels(qp.space(), labels).unwrap())
    }

    #[test]
    fn identical_arguments_give_one() {
        let qp = bs();
        let x = s(&qp, 1.0, &["a"]);
        let o = m_psi_detail(&qp, &x, &x).unwrap();
        assert!((o.m - 1.0).abs() < 1e-12);
        assert_eq!(o.one_minus_m, 0.0);
    }

    #[test]
    fn equal_time_reduces_to_measure_ratio() {
        let qp = bs();
        let a = s(&qp, 1.0, &["a", "c"]);
        let b = s(&qp, 1.0, &["a", "b"]);
        // P(Δ₁∩Δ₂) = 0.5, P(Δ₁) = 0.5, P(Δ₂) = 1
        assert!((m_psi(&qp, &a, &b).unwrap() - 2.0 * 0.5 / 1.5).abs() < 1e-12);
        let c = s(&qp, 1.0, &["b"]);
        assert!(m_psi(&qp, &a, &c).unwrap().abs() < 1e-12);
        assert!(matches!(
            m_psi(&qp, &s(&qp, 1.0, &["c"]), &s(&qp, 2.0, &["c"])),
            Err(Error::BothWeightsVanish)
        ));
    }

    #[test]
    fn particular_case_closed_form() {
        let qp = bs();
        let full = particular_case(&qp, &SSet::full(1.0, qp.space()), DEFAULT_THRESHOLD).unwrap();
        assert!((full.m_full - 1.0).abs() < 1e-12 && full.verdict.holds);
        let half = particular_case(&qp, &s(&qp, 1.0, &["a"]), DEFAULT_THRESHOLD).unwrap();
        assert!((half.m_full - 2.0 * 0.5 / 1.5).abs() < 1e-12);
        assert!(half.inequality_holds && !half.verdict.holds);
        let none = particular_case(&qp, &s(&qp, 1.0, &["c"]), DEFAULT_THRESHOLD).unwrap();
        assert_eq!(none.m_full, 0.0);
    }

    #[test]
    fn particular_case_arithmetic() {
        // a process whose s-set carries weight 0.999 exactly
        let space: Space = ModeSpace::new(&["x", "y"]).unwrap().into();
        let psi0 = WaveFunction::from_modes(
            &space,
            &[("x", C64::new(0.999f64.sqrt(), 0.0)), ("y", C64::new(0.001f64.sqrt(), 0.0))],
        )
        .unwrap();
        let qp = QuantumProcess::new(Propagator::identity(2), psi0, (0.0, 1.0), vec![0.0]).unwrap();
        let pc = particular_case(&qp, &s(&qp, 0.0, &["x"]), 1e-3).unwrap();
        assert!((pc.m_full - 2.0 * 0.999 / 1.999).abs() < 1e-12);
        assert!(pc.verdict.holds);
    }

    #[test]
    fn consistency_probe_rejects_malformed() {
        let qp = bs();
        let anchor = s(&qp, 0.0, &["a"]);
        let bad = vec![(s(&qp, 1.0, &["a"]), s(&qp, 2.0, &["b"]))];
        assert!(matches!(
            consistency_probe(&qp, &anchor, &bad, 0.1),
            Err(Error::MalformedCandidate { index: 0, .. })
        ));
        let overlapping = vec![(s(&qp, 1.0, &["a"]), s(&qp, 1.0, &["a", "b"]))];
        assert!(consistency_probe(&qp, &anchor, &overlapping, 0.1).is_err());
        let complement = vec![(s(&qp, 1.0, &["a"]), s(&qp, 1.0, &["b", "c"]))];
        let rep = consistency_probe(&qp, &anchor, &complement, 0.1).unwrap();
        assert_eq!(rep.qualifying, 0);
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn fac_and_j_on_identical_sets() {
        let qp = bs();
        let x = s(&qp, 1.0, &["a"]);
        assert!((fac_ratio(&qp, &x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!(j_residual(&qp, &x, &x).unwrap() < 1e-12);
        assert!(matches!(
            fac_ratio(&qp, &x, &s(&qp, 1.0, &["c"])),
            Err(Error::VanishingWeight(_))
        ));
    }
}
