use crate::error::{Error, Result};
use crate::hilbert::{GridSpace, Region, Space};
use crate::squant::QuantumProcess;

use super::TreeStructure;

pub const DEFAULT_MASS_FLOOR: f64 = 1e-8;

/// Parameters of [`extract_tree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub gap_threshold: f64,
    pub mass_floor: f64,
}

impl ExtractOptions {
    /// Four grid spacings and a floor of `1e-8` of the peak density.
    pub fn for_grid(grid: &GridSpace) -> Self {
        Self {
            gap_threshold: 4.0 * grid.min_spacing(),
            mass_floor: DEFAULT_MASS_FLOOR,
        }
    }
}

/// Index offsets whose physical length is below `gap`.
fn neighbourhood(grid: &GridSpace, gap: f64) -> Vec<[isize; 2]> {
    let reach = |a: usize| {
        if a < grid.dimension() {
            (gap / grid.spacing(a)).ceil() as isize
        } else {
            0
        }
    };
    let (r0, r1) = (reach(0), reach(1));
    let mut out = Vec::new();
    for d0 in -r0..=r0 {
        for d1 in -r1..=r1 {
            let mut len2 = (d0 as f64 * grid.spacing(0)).powi(2);
            if grid.dimension() > 1 {
                len2 += (d1 as f64 * grid.spacing(1)).powi(2);
            }
            if len2.sqrt() < gap {
                out.push([d0, d1]);
            }
        }
    }
    out
}

fn shifted(grid: &GridSpace, flat: usize, d: [isize; 2]) -> Option<usize> {
    let idx = grid.unflatten(flat);
    let mut out = [0usize; 2];
    for a in 0..grid.dimension() {
        let j = idx[a] as isize + d[a];
        if j < 0 || j >= grid.points(a) as isize {
            return None;
        }
        out[a] = j as usize;
    }
    Some(grid.flatten(out))
}

fn dilate(grid: &GridSpace, mask: &[bool], nbhd: &[[isize; 2]]) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        for &d in nbhd {
            if let Some(j) = shifted(grid, i, d) {
                out[j] = true;
            }
        }
    }
    out
}

/// Connected components of `mask`, where points closer than the gap are linked.
fn components(grid: &GridSpace, mask: &[bool], nbhd: &[[isize; 2]]) -> Vec<Vec<bool>> {
    let mut label = vec![usize::MAX; mask.len()];
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = vec![false; mask.len()];
        let mut stack = vec![start];
        label[start] = id;
        while let Some(i) = stack.pop() {
            comp[i] = true;
            for &d in nbhd {
                if let Some(j) = shifted(grid, i, d) {
                    if mask[j] && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Clusters the support `{x : |Ψ(t,x)|² ≥ mass_floor · max}` at each grid time,
/// links every cluster to the clusters of the previous time whose gap-dilation
/// touches it, and merges lineages backward wherever a cluster has several
/// parents. Branches are the clusters at the last time.
pub fn extract_tree(qp: &QuantumProcess, times: &[f64], gap_threshold: f64, mass_floor: f64) -> Result<TreeStructure> {
    let densities = times
        .iter()
        .map(|&t| Ok(qp.state_at(t)?.density()))
        .collect::<Result<Vec<_>>>()?;
    extract_from_densities(qp.space(), times, &densities, gap_threshold, mass_floor)
}

/// [`extract_tree`] on precomputed densities, one per time.
pub fn extract_from_densities(
    space: &Space,
    times: &[f64],
    densities: &[Vec<f64>],
    gap_threshold: f64,
    mass_floor: f64,
) -> Result<TreeStructure> {
    let grid = space
        .as_grid()
        .ok_or_else(|| Error::Unsupported("tree extraction needs a grid space".into()))?;
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("extraction times must increase".into()));
    }
    if densities.len() != times.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: densities.len(),
        });
    }
    if !(gap_threshold > 0.0) || !(mass_floor > 0.0 && mass_floor < 1.0) {
        return Err(Error::InvalidArgument("gap_threshold > 0 and 0 < mass_floor < 1 required".into()));
    }
    let nbhd = neighbourhood(grid, gap_threshold);
    let mut comps: Vec<Vec<Vec<bool>>> = Vec::with_capacity(times.len());
    for rho in densities {
        if rho.len() != grid.len() {
            return Err(Error::SpaceMismatch);
        }
        let peak = rho.iter().cloned().fold(0.0f64, f64::max);
        let mask: Vec<bool> = rho.iter().map(|&r| peak > 0.0 && r >= mass_floor * peak).collect();
        comps.push(components(grid, &mask, &nbhd));
    }

    // parents[k][c]: clusters at k−1 linked to cluster c at k
    let mut parents: Vec<Vec<Vec<usize>>> = vec![Vec::new(); times.len()];
    for k in 1..times.len() {
        let dilated: Vec<Vec<bool>> = comps[k - 1].iter().map(|p| dilate(grid, p, &nbhd)).collect();
        for c in &comps[k] {
            let mut ps: Vec<usize> = dilated
                .iter()
                .enumerate()
                .filter(|(_, d)| d.iter().zip(c).any(|(a, b)| *a && *b))
                .map(|(p, _)| p)
                .collect();
            if ps.is_empty() {
                if comps[k - 1].len() == 1 {
                    ps.push(0);
                } else {
                    return Err(Error::ClusterLineageAmbiguous {
                        time_index: k,
                        reason: format!(
                            "cluster at t = {} touches none of the {} clusters at t = {}",
                            times[k],
                            comps[k - 1].len(),
                            times[k - 1]
                        ),
                    });
                }
            }
            parents[k].push(ps);
        }
    }

    // coarsen backward: all parents of one node become one node
    let mut uf: Vec<UnionFind> = comps.iter().map(|c| UnionFind::new(c.len())).collect();
    for k in (1..times.len()).rev() {
        for c in 0..comps[k].len() {
            let root = uf[k].find(c);
            let first = parents[k][c][0];
            for &p in &parents[k][c] {
                uf[k - 1].union(first, p);
            }
            // the node's other members must share this parent too
            for c2 in 0..comps[k].len() {
                if c2 != c && uf[k].find(c2) == root {
                    uf[k - 1].union(first, parents[k][c2][0]);
                }
            }
        }
    }
    for c in 1..comps[0].len() {
        uf[0].union(0, c);
    }

    // node regions and parent pointers per level
    let mut node_mask: Vec<Vec<(usize, Vec<bool>)>> = Vec::with_capacity(times.len());
    for (k, level) in comps.iter().enumerate() {
        let mut nodes: Vec<(usize, Vec<bool>)> = Vec::new();
        for (c, m) in level.iter().enumerate() {
            let r = uf[k].find(c);
            match nodes.iter_mut().find(|(root, _)| *root == r) {
                Some((_, acc)) => acc.iter_mut().zip(m).for_each(|(a, b)| *a |= *b),
                None => nodes.push((r, m.clone())),
            }
        }
        node_mask.push(nodes);
    }
    let nt = times.len();
    let mut branches = Vec::new();
    for leaf in 0..node_mask[nt - 1].len() {
        let mut regions = vec![None; nt];
        let mut root = node_mask[nt - 1][leaf].0;
        for k in (0..nt).rev() {
            let mask = &node_mask[k].iter().find(|(r, _)| *r == root).expect("node").1;
            regions[k] = Some(Region::from_mask(space, mask.clone())?);
            if k > 0 {
                let parent = parents[k][root][0];
                root = uf[k - 1].find(parent);
            }
        }
        branches.push(regions.into_iter().map(|r| r.expect("filled")).collect());
    }
    TreeStructure::new(space, times.to_vec(), branches)
}
