use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Uniform periodic grid over a 1D interval or a 2D rectangle.
///
/// Points are stored row-major with axis 0 slowest. Coordinates run from
/// `lower` (inclusive) to `lower + extent` (exclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpace {
    lower: Vec<f64>,
    extent: Vec<f64>,
    points: Vec<usize>,
}

impl GridSpace {
    pub fn line(lower: f64, upper: f64, points: usize) -> Result<Self> {
        Self::new(vec![lower], vec![upper - lower], vec![points])
    }

    pub fn plane(x: (f64, f64), y: (f64, f64), points: (usize, usize)) -> Result<Self> {
        Self::new(
            vec![x.0, y.0],
            vec![x.1 - x.0, y.1 - y.0],
            vec![points.0, points.1],
        )
    }

    pub fn new(lower: Vec<f64>, extent: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let dim = points.len();
        if !(1..=2).contains(&dim) || lower.len() != dim || extent.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2 with matching axis data (got {dim})"
            )));
        }
        for (axis, (&n, &e)) in points.iter().zip(&extent).enumerate() {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: {n} points; need a power of two >= 8"
                )));
            }
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: extent {e} must be positive"
                )));
            }
        }
        Ok(Self {
            lower,
            extent,
            points,
        })
    }

    pub fn dimension(&self) -> usize {
        self.points.len()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self, axis: usize) -> usize {
        self.points[axis]
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.lower[axis] + self.extent[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.points[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dimension())
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.spacing(axis)
    }

    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis])
            .map(|i| self.coordinate(axis, i))
            .collect()
    }

    /// Multi-index of a flat point index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        match self.dimension() {
            1 => [flat, 0],
            _ => [flat / self.points[1], flat % self.points[1]],
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        match self.dimension() {
            1 => idx[0],
            _ => idx[0] * self.points[1] + idx[1],
        }
    }

    /// Position of a flat point index, one entry per axis.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        let idx = self.unflatten(flat);
        (0..self.dimension())
            .map(|a| self.coordinate(a, idx[a]))
            .collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis];
        let dk = 2.0 * PI / self.extent[axis];
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                m * dk
            })
            .collect()
    }
}

/// Finite set of named basis modes: arms, ports, pointer states.
#[derive(Clone)]
pub struct ModeSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    factors: Vec<usize>,
}

impl fmt::Debug for ModeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModeSpace")
            .field("dimension", &self.labels.len())
            .field("factors", &self.factors)
            .finish()
    }
}

impl PartialEq for ModeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors && self.labels == other.labels
    }
}

impl ModeSpace {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidModeSpace(format!(
                "dimension must be at least 2 (got {})",
                labels.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidModeSpace(format!("duplicate label `{l}`")));
            }
        }
        let factors = vec![labels.len()];
        Ok(Self {
            labels,
            index,
            factors,
        })
    }

    /// Tensor product space; labels are joined with `,` in row-major order.
    pub fn product(a: &ModeSpace, b: &ModeSpace) -> Self {
        let mut labels = Vec::with_capacity(a.dimension() * b.dimension());
        for la in &a.labels {
            for lb in &b.labels {
                labels.push(format!("{la},{lb}"));
            }
        }
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let mut factors = a.factors.clone();
        factors.extend_from_slice(&b.factors);
        Self {
            labels,
            index,
            factors,
        }
    }

    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Dimensions of the primitive tensor factors (a single entry unless built by `product`).
    pub fn factors(&self) -> &[usize] {
        &self.factors
    }
}

/// Configuration space a wave function lives on.
#[derive(Debug, Clone)]
pub enum Space {
    Grid(Arc<GridSpace>),
    Modes(Arc<ModeSpace>),
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Space::Grid(a), Space::Grid(b)) => Arc::ptr_eq(a, b) || a == b,
            (Space::Modes(a), Space::Modes(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl From<GridSpace> for Space {
    fn from(g: GridSpace) -> Self {
        Space::Grid(Arc::new(g))
    }
}

impl From<ModeSpace> for Space {
    fn from(m: ModeSpace) -> Self {
        Space::Modes(Arc::new(m))
    }
}

impl Space {
    pub fn dimension(&self) -> usize {
        match self {
            Space::Grid(g) => g.len(),
            Space::Modes(m) => m.dimension(),
        }
    }

    pub fn as_grid(&self) -> Option<&GridSpace> {
        match self {
            Space::Grid(g) => Some(g),
            Space::Modes(_) => None,
        }
    }

    pub fn as_modes(&self) -> Option<&ModeSpace> {
        match self {
            Space::Modes(m) => Some(m),
            Space::Grid(_) => None,
        }
    }

    pub fn ensure_same(&self, other: &Space) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Human-readable name of a configuration point.
    pub fn point_name(&self, i: usize) -> String {
        match self {
            Space::Modes(m) => m.label(i).to_string(),
            Space::Grid(g) => {
                let p = g.position(i);
                let parts: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
                format!("({})", parts.join(", "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_point_counts() {
        assert!(GridSpace::line(0.0, 1.0, 12).is_err());
        assert!(GridSpace::line(0.0, 1.0, 4).is_err());
        assert!(GridSpace::line(1.0, 1.0, 16).is_err());
        let g = GridSpace::line(-20.0, 20.0, 512).unwrap();
        assert!((g.spacing(0) - 40.0 / 512.0).abs() < 1e-15);
        assert_eq!(g.len(), 512);
    }

    #[test]
    fn wavenumbers_are_in_fft_order() {
        let g = GridSpace::line(0.0, 2.0 * PI, 8).unwrap();
        assert_eq!(
            g.wavenumbers(0),
            vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]
        );
    }

    #[test]
    fn plane_flattening_round_trips() {
        let g = GridSpace::plane((0.0, 1.0), (0.0, 2.0), (8, 16)).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flatten(g.unflatten(flat)), flat);
        }
        assert_eq!(g.unflatten(17), [1, 1]);
    }

    #[test]
    fn mode_space_labels_unique() {
        assert!(ModeSpace::new(&["a", "a"]).is_err());
        assert!(ModeSpace::new(&["a"]).is_err());
        let a = ModeSpace::new(&["u", "d"]).unwrap();
        let b = ModeSpace::new(&["x", "y", "z"]).unwrap();
        let p = ModeSpace::product(&a, &b);
        assert_eq!(p.dimension(), 6);
        assert_eq!(p.index_of("d,y"), Some(4));
        assert_eq!(p.factors(), &[2, 3]);
    }
}
