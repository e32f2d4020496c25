//! Finite probability spaces and the quantitative side of the probabilistic
//! Cournot principle: Chebyshev bounds, exact frequency events and `M_P`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-12;
/// Largest trial count accepted by [`exact_frequency_event`].
pub const MAX_EXACT_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbabilitySpace {
    outcomes: Vec<String>,
    masses: Vec<f64>,
}

/// A subset of the outcomes of one space, stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    mask: Vec<bool>,
}

impl Event {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn intersection(&self, other: &Event) -> Result<Event> {
        if self.mask.len() != other.mask.len() {
            return Err(Error::LengthMismatch {
                expected: self.mask.len(),
                got: other.mask.len(),
            });
        }
        Ok(Event::from_mask(
            self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        ))
    }
}

impl FiniteProbabilitySpace {
    pub fn new<S: AsRef<str>>(outcomes: &[S], masses: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != masses.len() {
            return Err(Error::InvalidProbabilitySpace(
                "need one mass per outcome and at least one outcome".into(),
            ));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidProbabilitySpace("negative or non-finite mass".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidProbabilitySpace(format!("masses sum to {total}")));
        }
        let outcomes: Vec<String> = outcomes.iter().map(|s| s.as_ref().to_owned()).collect();
        let mut seen = std::collections::HashSet::new();
        if !outcomes.iter().all(|o| seen.insert(o.as_str())) {
            return Err(Error::InvalidProbabilitySpace("duplicate outcome".into()));
        }
        Ok(Self { outcomes, masses })
    }

    /// Two-outcome space `{1, 0}` with mass `p` on `1`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(&["1", "0"], vec![p, 1.0 - p])
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn event<S: AsRef<str>>(&self, labels: &[S]) -> Result<Event> {
        let mut mask = vec![false; self.len()];
        for l in labels {
            let i = self
                .outcomes
                .iter()
                .position(|o| o == l.as_ref())
                .ok_or_else(|| Error::InvalidArgument(format!("unknown outcome `{}`", l.as_ref())))?;
            mask[i] = true;
        }
        Ok(Event::from_mask(mask))
    }

    /// Outcomes whose comma-separated components satisfy `pred`.
    pub fn event_where(&self, pred: impl Fn(&[&str]) -> bool) -> Event {
        Event::from_mask(
            self.outcomes
                .iter()
                .map(|o| pred(&o.split(',').collect::<Vec<_>>()))
                .collect(),
        )
    }

    pub fn probability(&self, e: &Event) -> Result<f64> {
        if e.mask.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: e.mask.len(),
            });
        }
        Ok(self
            .masses
            .iter()
            .zip(&e.mask)
            .filter(|(_, &m)| m)
            .map(|(p, _)| p)
            .sum())
    }

    /// `P₁ × P₂`; outcome labels are joined with a comma.
    pub fn product(&self, other: &Self) -> Self {
        let mut outcomes = Vec::with_capacity(self.len() * other.len());
        let mut masses = Vec::with_capacity(self.len() * other.len());
        for (a, pa) in self.outcomes.iter().zip(&self.masses) {
            for (b, pb) in other.outcomes.iter().zip(&other.masses) {
                outcomes.push(format!("{a},{b}"));
                masses.push(pa * pb);
            }
        }
        Self { outcomes, masses }
    }

    pub fn power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("power needs n >= 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.product(self);
        }
        Ok(acc)
    }
}

/// `P₁ × P₂`.
pub fn product_space(a: &FiniteProbabilitySpace, b: &FiniteProbabilitySpace) -> FiniteProbabilitySpace {
    a.product(b)
}

/// `p(1−p)/(ε²N)`, the Chebyshev bound on `P^N(|X_N − p| ≥ ε)`.
pub fn chebyshev_frequency_bound(p: f64, eps: f64, n: u64) -> f64 {
    p * (1.0 - p) / (eps * eps * n as f64)
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `P^N(|k/N − p| ≤ ε)` by exact binomial summation in log space.
pub fn exact_frequency_event(p: f64, eps: f64, n: u64) -> Result<f64> {
    if n > MAX_EXACT_TRIALS {
        return Err(Error::OverflowGuard(n));
    }
    if n == 0 || !(0.0..=1.0).contains(&p) || !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("p = {p}, eps = {eps}, N = {n}")));
    }
    let nf = n as f64;
    let inside = |k: u64| (k as f64 / nf - p).abs() <= eps + 1e-12;
    let log_pmf = |k: u64| {
        let kf = k as f64;
        let a = if k == 0 { 0.0 } else { kf * p.ln() };
        let b = if k == n { 0.0 } else { (nf - kf) * (1.0 - p).ln() };
        ln_binomial(n, k) + a + b
    };
    let terms = |want: bool| neumaier((0..=n).filter(|&k| inside(k) == want).map(|k| log_pmf(k).exp()));
    let inner = terms(true);
    if inner <= 0.5 {
        Ok(inner)
    } else {
        Ok((1.0 - terms(false)).clamp(0.0, 1.0))
    }
}

/// `2P(A∩B)/(P(A)+P(B))`.
pub fn m_p(space: &FiniteProbabilitySpace, a: &Event, b: &Event) -> Result<f64> {
    let pa = space.probability(a)?;
    let pb = space.probability(b)?;
    if pa + pb <= 0.0 {
        return Err(Error::BothWeightsVanish);
    }
    Ok(2.0 * space.probability(&a.intersection(b)?)? / (pa + pb))
}

/// `(P(A∩B)/P(A), P(A∩B)/P(B))`.
pub fn conditional_ratios(space: &FiniteProbabilitySpace, a: &Event, b: &Event) -> Result<(f64, f64)> {
    let pa = space.probability(a)?;
    let pb = space.probability(b)?;
    if pa <= 0.0 {
        return Err(Error::VanishingWeight("first event"));
    }
    if pb <= 0.0 {
        return Err(Error::VanishingWeight("second event"));
    }
    let pab = space.probability(&a.intersection(b)?)?;
    Ok((pab / pa, pab / pb))
}

/// Runs `meta_trials` sequences of `n` Bernoulli(`p`) draws and counts those
/// whose relative frequency misses `p` by more than `eps`. Trial `k` draws
/// from stream `k` of the generator seeded with `seed`.
pub fn count_frequency_deviations(p: f64, eps: f64, n: u64, meta_trials: u64, seed: u64) -> u64 {
    (0..meta_trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let hits = (0..n).filter(|_| rng.random::<f64>() < p).count() as f64;
            u64::from((hits / n as f64 - p).abs() > eps)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial_tail_oracle(p: f64, eps: f64, n: u64) -> f64 {
        // direct pmf recursion in linear space for small N
        let mut pmf = vec![0.0; n as usize + 1];
        pmf[0] = (1.0 - p).powi(n as i32);
        for k in 1..=n as usize {
            pmf[k] = pmf[k - 1] * p / (1.0 - p) * (n as usize - k + 1) as f64 / k as f64;
        }
        pmf.iter()
            .enumerate()
            .filter(|(k, _)| (*k as f64 / n as f64 - p).abs() <= eps + 1e-12)
            .map(|(_, v)| v)
            .sum()
    }

    #[test]
    fn chebyshev_values() {
        assert!((chebyshev_frequency_bound(0.5, 0.1, 25_000) - 1e-3).abs() < 1e-15);
        assert_eq!(chebyshev_frequency_bound(0.5, 0.5, 1), 1.0);
        assert!((chebyshev_frequency_bound(0.1, 0.05, 10_000) - 3.6e-3).abs() < 1e-15);
        let exact = exact_frequency_event(0.1, 0.05, 10_000).unwrap();
        assert!(1.0 - exact <= 3.6e-3);
    }

    #[test]
    fn exact_frequency_values() {
        assert_eq!(exact_frequency_event(0.5, 0.6, 1).unwrap(), 1.0);
        let v = exact_frequency_event(0.5, 0.05, 1000).unwrap();
        assert!(v > 0.998 && v < 1.0, "{v}");
        assert!((v - binomial_tail_oracle(0.5, 0.05, 1000)).abs() < 1e-12);
        assert!(exact_frequency_event(0.5, 0.1, 25_000).unwrap() >= 0.999);
        assert!((exact_frequency_event(0.3, 0.02, 200).unwrap() - binomial_tail_oracle(0.3, 0.02, 200)).abs() < 1e-12);
        assert!(matches!(exact_frequency_event(0.5, 0.1, 2_000_000), Err(Error::OverflowGuard(_))));
    }

    #[test]
    fn events_and_ratios() {
        let coin = FiniteProbabilitySpace::bernoulli(0.5).unwrap();
        let two = product_space(&coin, &coin);
        assert!(two.masses().iter().all(|m| (m - 0.25).abs() < 1e-15));
        let a = two.event(&["1,1", "1,0"]).unwrap();
        assert_eq!(m_p(&two, &a, &a).unwrap(), 1.0);
        assert_eq!(conditional_ratios(&two, &a, &a).unwrap(), (1.0, 1.0));
        let b = two.event(&["0,1"]).unwrap();
        assert_eq!(m_p(&two, &a, &b).unwrap(), 0.0);
        let point = FiniteProbabilitySpace::new(&["x"], vec![1.0]).unwrap();
        assert_eq!(coin.product(&point).masses(), coin.masses());
        let ten = FiniteProbabilitySpace::bernoulli(0.3).unwrap().power(10).unwrap();
        let first = ten.event_where(|parts| parts[0] == "1");
        assert!((ten.probability(&first).unwrap() - 0.3).abs() < 1e-12);
        assert!(FiniteProbabilitySpace::new(&["a", "b"], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let a = count_frequency_deviations(0.5, 0.05, 200, 500, 7);
        let b = count_frequency_deviations(0.5, 0.05, 200, 500, 7);
        assert_eq!(a, b);
        // |k/200 − 0.5| > 0.05 has probability about 0.14
        assert!(a > 30 && a < 110, "{a}");
    }
}
