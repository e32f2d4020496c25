//! Tensor-product mode spaces addressed by per-factor digits.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{ModeSpace, Region, Space, WaveFunction, C64};

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Product of named factors, each a list of mode labels.
#[derive(Debug, Clone)]
pub(crate) struct Modes {
    pub space: ModeSpace,
    names: Vec<Vec<String>>,
    dims: Vec<usize>,
}

impl Modes {
    pub fn new(factors: &[&[&str]]) -> Result<Self> {
        let mut spaces = factors.iter().map(|f| ModeSpace::new(f));
        let first = spaces.next().ok_or_else(|| Error::InvalidModeSpace("no factors".into()))??;
        let space = spaces.try_fold(first, |acc, s| s.map(|s| ModeSpace::product(&acc, &s)))?;
        Ok(Self {
            space,
            names: factors.iter().map(|f| f.iter().map(|s| s.to_string()).collect()).collect(),
            dims: factors.iter().map(|f| f.len()).collect(),
        })
    }

    pub fn space(&self) -> Space {
        self.space.clone().into()
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    pub fn digit(&self, factor: usize, label: &str) -> usize {
        self.names[factor]
            .iter()
            .position(|n| n == label)
            .unwrap_or_else(|| panic!("no mode `{label}` in factor {factor}"))
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    /// Operator whose column for basis state `j` is `image(digits(j))`.
    pub fn operator(&self, image: impl Fn(&[usize]) -> Vec<(Vec<usize>, C64)>) -> DMatrix<C64> {
        let n = self.dimension();
        let mut u = DMatrix::<C64>::zeros(n, n);
        for j in 0..n {
            for (d, a) in image(&self.digits(j)) {
                u[(self.index(&d), j)] += a;
            }
        }
        u
    }

    /// `w` on factor `k` (acting on digits), identity on the rest.
    pub fn local(&self, k: usize, w: &DMatrix<C64>) -> DMatrix<C64> {
        self.operator(|d| {
            (0..self.dims[k])
                .filter(|&i| w[(i, d[k])] != c(0.0))
                .map(|i| {
                    let mut e = d.to_vec();
                    e[k] = i;
                    (e, w[(i, d[k])])
                })
                .collect()
        })
    }

    /// Basis state from one label per factor.
    pub fn state(&self, labels: &[&str]) -> Vec<usize> {
        labels.iter().enumerate().map(|(k, l)| self.digit(k, l)).collect()
    }

    pub fn wave(&self, terms: &[(&[&str], C64)]) -> Result<WaveFunction> {
        let mut amps = vec![c(0.0); self.dimension()];
        for (labels, a) in terms {
            amps[self.index(&self.state(labels))] += *a;
        }
        WaveFunction::new(&self.space(), amps, 0.0)
    }

    /// Basis states whose digits satisfy `pred`.
    pub fn region(&self, pred: impl Fn(&[usize]) -> bool) -> Result<Region> {
        let mask = (0..self.dimension()).map(|i| pred(&self.digits(i))).collect();
        Region::from_mask(&self.space(), mask)
    }
}

/// Swap of two digit values on factor `k` as a local permutation matrix.
pub(crate) fn swap(dim: usize, a: usize, b: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::identity(dim, dim);
    m[(a, a)] = c(0.0);
    m[(b, b)] = c(0.0);
    m[(a, b)] = c(1.0);
    m[(b, a)] = c(1.0);
    m
}
