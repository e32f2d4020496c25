use crate::error::{Error, Result};

use super::space::Space;

/// Exact point mask over a discretized configuration space.
///
/// Every subset of grid points (or mode labels) is a region, so the
/// projector algebra `E(A)E(B) = E(A ∩ B)` holds without tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    space: Space,
    mask: Vec<bool>,
}

impl Region {
    pub fn from_mask(space: &Space, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != space.dimension() {
            return Err(Error::LengthMismatch {
                expected: space.dimension(),
                got: mask.len(),
            });
        }
        Ok(Self {
            space: space.clone(),
            mask,
        })
    }

    pub fn full(space: &Space) -> Self {
        Self {
            space: space.clone(),
            mask: vec![true; space.dimension()],
        }
    }

    pub fn empty(space: &Space) -> Self {
        Self {
            space: space.clone(),
            mask: vec![false; space.dimension()],
        }
    }

    pub fn from_indices(space: &Space, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; space.dimension()];
        for i in indices {
            let slot = mask.get_mut(i).ok_or_else(|| {
                Error::InvalidArgument(format!("point index {i} out of range"))
            })?;
            *slot = true;
        }
        Ok(Self {
            space: space.clone(),
            mask,
        })
    }

    /// Region of a mode space given by label names.
    pub fn from_labels<S: AsRef<str>>(space: &Space, labels: &[S]) -> Result<Self> {
        let modes = space
            .as_modes()
            .ok_or_else(|| Error::Unsupported("label regions need a mode space".into()))?;
        let idx = labels
            .iter()
            .map(|l| {
                modes
                    .index_of(l.as_ref())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown label `{}`", l.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(space, idx)
    }

    /// Labels of a product mode space whose components satisfy `pred`.
    ///
    /// `pred` receives the per-factor label parts (split on `,`).
    pub fn where_labels(space: &Space, pred: impl Fn(&[&str]) -> bool) -> Result<Self> {
        let modes = space
            .as_modes()
            .ok_or_else(|| Error::Unsupported("label regions need a mode space".into()))?;
        let mask = modes
            .labels()
            .iter()
            .map(|l| {
                let parts: Vec<&str> = l.split(',').collect();
                pred(&parts)
            })
            .collect();
        Self::from_mask(space, mask)
    }

    /// Grid region of points whose position satisfies `pred`.
    pub fn where_position(space: &Space, pred: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let grid = space
            .as_grid()
            .ok_or_else(|| Error::Unsupported("position regions need a grid space".into()))?;
        let mask = (0..grid.len()).map(|i| pred(&grid.position(i))).collect();
        Self::from_mask(space, mask)
    }

    /// 1D grid points with `lo <= x < hi`.
    pub fn interval(space: &Space, lo: f64, hi: f64) -> Result<Self> {
        Self::where_position(space, |p| p[0] >= lo && p[0] < hi)
    }

    /// Union of half-open point-index intervals `[start, end)`.
    pub fn from_index_intervals(space: &Space, intervals: &[(usize, usize)]) -> Result<Self> {
        let n = space.dimension();
        let mut mask = vec![false; n];
        for &(a, b) in intervals {
            if a > b || b > n {
                return Err(Error::InvalidArgument(format!(
                    "interval [{a}, {b}) outside 0..{n}"
                )));
            }
            mask[a..b].iter_mut().for_each(|m| *m = true);
        }
        Self::from_mask(space, mask)
    }

    /// Maximal runs of included point indices as half-open intervals.
    pub fn index_intervals(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, &m) in self.mask.iter().enumerate() {
            match (m, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, self.mask.len()));
        }
        out
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn complement(&self) -> Self {
        Self {
            space: self.space.clone(),
            mask: self.mask.iter().map(|m| !m).collect(),
        }
    }

    fn zip_with(&self, other: &Region, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Ok(Self {
            space: self.space.clone(),
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn intersection(&self, other: &Region) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Region) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn difference(&self, other: &Region) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_disjoint(&self, other: &Region) -> Result<bool> {
        self.space.ensure_same(&other.space)?;
        Ok(!self.mask.iter().zip(&other.mask).any(|(&a, &b)| a && b))
    }

    /// Box `A × B` on the tensor product space `space` (row-major, `A` slowest).
    pub fn product(a: &Region, b: &Region, space: &Space) -> Result<Self> {
        let (na, nb) = (a.mask.len(), b.mask.len());
        if space.dimension() != na * nb {
            return Err(Error::LengthMismatch {
                expected: na * nb,
                got: space.dimension(),
            });
        }
        let mut mask = Vec::with_capacity(na * nb);
        for &ma in &a.mask {
            for &mb in &b.mask {
                mask.push(ma && mb);
            }
        }
        Self::from_mask(space, mask)
    }

    /// Checks that `parts` are pairwise disjoint and cover the space.
    pub fn check_partition(space: &Space, parts: &[Region]) -> Result<()> {
        let mut cover = vec![0usize; space.dimension()];
        for p in parts {
            space.ensure_same(&p.space)?;
            for i in p.indices() {
                cover[i] += 1;
            }
        }
        if let Some(i) = cover.iter().position(|&c| c > 1) {
            return Err(Error::NotAPartition(format!(
                "point {i} is covered more than once"
            )));
        }
        if let Some(i) = cover.iter().position(|&c| c == 0) {
            return Err(Error::NotAPartition(format!("point {i} is not covered")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{GridSpace, ModeSpace};

    fn line() -> Space {
        GridSpace::line(-4.0, 4.0, 16).unwrap().into()
    }

    #[test]
    fn complement_is_involutive_and_disjoint() {
        let s = line();
        let r = Region::interval(&s, -1.0, 2.0).unwrap();
        assert_eq!(r.complement().complement(), r);
        assert!(r.is_disjoint(&r.complement()).unwrap());
        assert!(r.union(&r.complement()).unwrap().is_full());
    }

    #[test]
    fn intervals_round_trip() {
        let s = line();
        let r = Region::from_index_intervals(&s, &[(0, 3), (7, 9), (15, 16)]).unwrap();
        assert_eq!(r.index_intervals(), vec![(0, 3), (7, 9), (15, 16)]);
        assert_eq!(r.count(), 6);
    }

    #[test]
    fn labels_and_product_boxes() {
        let a: Space = ModeSpace::new(&["u", "d"]).unwrap().into();
        let b: Space = ModeSpace::new(&["x", "y"]).unwrap().into();
        let ab: Space = ModeSpace::product(a.as_modes().unwrap(), b.as_modes().unwrap()).into();
        let ra = Region::from_labels(&a, &["d"]).unwrap();
        let rb = Region::from_labels(&b, &["x", "y"]).unwrap();
        let p = Region::product(&ra, &rb, &ab).unwrap();
        assert_eq!(p.mask(), &[false, false, true, true]);
        let w = Region::where_labels(&ab, |parts| parts[1] == "y").unwrap();
        assert_eq!(w.mask(), &[false, true, false, true]);
        assert!(Region::from_labels(&a, &["nope"]).is_err());
    }

    #[test]
    fn partition_check_catches_overlap_and_gaps() {
        let s = line();
        let l = Region::interval(&s, -4.0, 0.0).unwrap();
        let r = Region::interval(&s, 0.0, 4.0).unwrap();
        assert!(Region::check_partition(&s, &[l.clone(), r.clone()]).is_ok());
        let wide = Region::interval(&s, -1.0, 4.0).unwrap();
        assert!(matches!(
            Region::check_partition(&s, &[l.clone(), wide]),
            Err(Error::NotAPartition(_))
        ));
        assert!(Region::check_partition(&s, &[l]).is_err());
    }
}
