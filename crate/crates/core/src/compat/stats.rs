use serde::Serialize;

use crate::cournot;
use crate::error::{Error, Result};
use crate::squant::{QuantumProcess, SSet};

use super::ensemble::TrajectoryEnsemble;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub t1: f64,
    pub t2: f64,
    pub m_psi: f64,
    /// `2 f(S₁∩S₂)/(f(S₁) + f(S₂))`; NaN when neither s-set was visited.
    pub m_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub pairs: Vec<PairCheck>,
    pub eps: f64,
    pub slack: f64,
    /// Indices into `pairs` with `m_psi ≥ 1 − eps` but `m_p < 1 − slack`.
    pub violations: Vec<usize>,
}

impl CompatibilityReport {
    pub fn is_compatible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tests `M_Ψ(S₁,S₂) ≈ 1 ⇒ M_P(S₁,S₂) ≈ 1` on the declared pairs, with the
/// empirical `M_P` taken from the ensemble.
pub fn compatibility_check(
    ensemble: &TrajectoryEnsemble,
    qp: &QuantumProcess,
    pairs: &[(SSet, SSet)],
    eps: f64,
    slack: f64,
) -> Result<CompatibilityReport> {
    let mut rows = Vec::with_capacity(pairs.len());
    let mut violations = Vec::new();
    for (i, (s1, s2)) in pairs.iter().enumerate() {
        let f1 = ensemble.frequency(s1)?;
        let f2 = ensemble.frequency(s2)?;
        let f12 = ensemble.joint_frequency(s1, s2)?;
        let m_p = if f1 + f2 > 0.0 { 2.0 * f12 / (f1 + f2) } else { f64::NAN };
        let m_psi = cournot::m_psi(qp, s1, s2)?;
        if m_psi >= 1.0 - eps && m_p < 1.0 - slack {
            violations.push(i);
        }
        rows.push(PairCheck {
            t1: s1.time,
            t2: s2.time,
            m_psi,
            m_p,
        });
    }
    Ok(CompatibilityReport {
        pairs: rows,
        eps,
        slack,
        violations,
    })
}

/// Distribution of `Y = (1/N) Σᵢ 1_{Sᵢ}` over the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorityReport {
    #[serde(skip)]
    pub y: Vec<f64>,
    pub mean: f64,
    pub delta: f64,
    /// Empirical `P(Y ≤ 1 − δ)`.
    pub tail: f64,
    pub count: usize,
}

pub fn majority_statistic(ensemble: &TrajectoryEnsemble, ssets: &[SSet], delta: f64) -> Result<MajorityReport> {
    if ssets.is_empty() {
        return Err(Error::EmptySSets);
    }
    let mut hits = vec![0u32; ensemble.count()];
    for s in ssets {
        for (h, m) in hits.iter_mut().zip(ensemble.membership(s)?) {
            *h += u32::from(m);
        }
    }
    let n = ssets.len() as f64;
    let y: Vec<f64> = hits.iter().map(|&h| h as f64 / n).collect();
    Ok(summarize(y, delta))
}

pub(crate) fn summarize(y: Vec<f64>, delta: f64) -> MajorityReport {
    let count = y.len();
    let mean = y.iter().sum::<f64>() / count as f64;
    let tail = y.iter().filter(|&&v| v <= 1.0 - delta).count() as f64 / count as f64;
    MajorityReport {
        y,
        mean,
        delta,
        tail,
        count,
    }
}

/// Largest `E(Y)` compatible with `P(Y ≤ a) = P_a`: `1 − P_a(1 − a)`.
pub fn sup_expectation(a: f64, p_a: f64) -> f64 {
    1.0 - p_a * (1.0 - a)
}

/// `ε/δ`, the bound on `P(Y ≤ 1 − δ)` when `E(Y) ≥ 1 − ε`.
pub fn majority_bound(eps: f64, delta: f64) -> f64 {
    eps / delta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_expectation_values() {
        assert_eq!(sup_expectation(1.0, 0.3), 1.0);
        assert_eq!(sup_expectation(0.2, 0.0), 1.0);
        // E(Y) ≥ 1 − ε with a = 1 − δ forces P_a ≤ ε/δ
        let (eps, delta) = (1e-9, 1e-3);
        let p = majority_bound(eps, delta);
        assert!((p - 1e-6).abs() < 1e-18);
        assert!((sup_expectation(1.0 - delta, p) - (1.0 - eps)).abs() < 1e-15);
    }

    #[test]
    fn summary() {
        let r = summarize(vec![1.0, 1.0, 0.5, 0.999], 1e-3);
        assert!((r.mean - 3.499 / 4.0).abs() < 1e-15);
        assert_eq!(r.tail, 0.5);
    }
}
