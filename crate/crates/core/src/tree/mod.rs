//! Forward tree structures: branch maps from the time grid to regions, the
//! four axioms, merged branches `Σ^s_k`, permanence residuals and residence
//! statistics.

mod extract;
mod io;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::compat::{MajorityReport, TrajectoryEnsemble};
use crate::cournot;
use crate::error::{Error, Result};
use crate::hilbert::{Region, Space, WaveFunction};
use crate::squant::{QuantumProcess, SSet};

pub use extract::{extract_from_densities, extract_tree, ExtractOptions, DEFAULT_MASS_FLOOR};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeStructure {
    space: Space,
    times: Vec<f64>,
    /// `branches[i][k]` is `Δᵢ(t_k)`.
    branches: Vec<Vec<Region>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    DisjointOrEqual,
    NoRejoin,
    CommonRoot,
    FullSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub times: Vec<f64>,
    pub branches: (usize, usize),
}

impl TreeStructure {
    pub fn new(space: &Space, times: Vec<f64>, branches: Vec<Vec<Region>>) -> Result<Self> {
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTree("time grid must be non-empty and increasing".into()));
        }
        if branches.is_empty() {
            return Err(Error::InvalidTree("no branches".into()));
        }
        for (i, b) in branches.iter().enumerate() {
            if b.len() != times.len() {
                return Err(Error::InvalidTree(format!(
                    "branch {i} has {} regions for {} times",
                    b.len(),
                    times.len()
                )));
            }
            for r in b {
                space.ensure_same(r.space())?;
            }
        }
        Ok(Self {
            space: space.clone(),
            times,
            branches,
        })
    }

    /// A tree whose branches are constant in time.
    pub fn constant(space: &Space, times: Vec<f64>, regions: Vec<Region>) -> Result<Self> {
        let n = times.len();
        Self::new(space, times, regions.into_iter().map(|r| vec![r; n]).collect())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn region(&self, branch: usize, k: usize) -> &Region {
        &self.branches[branch][k]
    }

    pub fn branch(&self, i: usize) -> &[Region] {
        &self.branches[i]
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&g| (g - t).abs() <= 1e-9)
            .ok_or(Error::TimeOffGrid(t))
    }

    /// `I^s_k`: branch indices grouped by equal region at grid index `ks`,
    /// in order of first appearance.
    pub fn partition_at(&self, ks: usize) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.len() {
            match groups
                .iter_mut()
                .find(|g| self.branches[g[0]][ks] == self.branches[i][ks])
            {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        groups
    }

    /// `Σ^s_k(t) = ∪_{i ∈ group} Δᵢ(t)` at grid index `kt`.
    pub fn merged_region(&self, group: &[usize], kt: usize) -> Result<Region> {
        let mut acc = Region::empty(&self.space);
        for &i in group {
            acc = acc.union(&self.branches[i][kt])?;
        }
        Ok(acc)
    }
}

/// Checks the four axioms exactly on the masks. Each violation names the
/// axiom, the offending times and a pair of branches.
pub fn validate_tree(tree: &TreeStructure) -> Vec<AxiomViolation> {
    let n = tree.len();
    let nt = tree.times.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .flat_map_iter(|&(i, j)| {
            let (bi, bj) = (&tree.branches[i], &tree.branches[j]);
            let equal: Vec<bool> = (0..nt).map(|k| bi[k] == bj[k]).collect();
            let disjoint: Vec<bool> = (0..nt)
                .map(|k| bi[k].is_disjoint(&bj[k]).unwrap_or(false))
                .collect();
            let mut out = Vec::new();
            for k in 0..nt {
                if !equal[k] && !disjoint[k] {
                    out.push(AxiomViolation {
                        axiom: Axiom::DisjointOrEqual,
                        times: vec![tree.times[k]],
                        branches: (i, j),
                    });
                }
            }
            if let Some(t) = (0..nt).rev().find(|&t| equal[t]) {
                if let Some(s) = (0..t).find(|&s| !equal[s]) {
                    out.push(AxiomViolation {
                        axiom: Axiom::NoRejoin,
                        times: vec![tree.times[s], tree.times[t]],
                        branches: (i, j),
                    });
                }
            }
            if !equal[0] {
                out.push(AxiomViolation {
                    axiom: Axiom::CommonRoot,
                    times: vec![tree.times[0]],
                    branches: (i, j),
                });
            }
            if !disjoint[nt - 1] {
                out.push(AxiomViolation {
                    axiom: Axiom::FullSplit,
                    times: vec![tree.times[nt - 1]],
                    branches: (i, j),
                });
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermanenceReport {
    /// `max_t 1 − ‖Ψ̂(S^{t_I}_1(t))‖²`.
    pub support_residual: f64,
    /// `max_{t ≤ s, k} 1 − M_Ψ(S^t_k(s), S^t_k(t_F))`.
    pub overlap_residual: f64,
    /// Where the overlap residual is attained: `(t, s, k)`.
    pub worst: Option<(f64, f64, usize)>,
}

/// Permanence conditions evaluated on every grid pair `t ≤ s` and every merged branch.
pub fn permanence_residuals(qp: &QuantumProcess, tree: &TreeStructure) -> Result<PermanenceReport> {
    let violations = validate_tree(tree);
    if !violations.is_empty() {
        return Err(Error::InvalidTree(format!(
            "{} axiom violation(s), first: {:?}",
            violations.len(),
            violations[0].axiom
        )));
    }
    qp.space().ensure_same(&tree.space)?;
    let nt = tree.times.len();
    let all: Vec<usize> = (0..tree.len()).collect();
    let support_residual = (0..nt)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let r = tree.merged_region(&all, k)?;
            Ok(1.0 - qp.weight(&SSet::new(tree.times[k], r))?)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);

    // every (t, s, k) cell needs Ψ̂ of a merged region; distinct ones are few
    let mut cells: Vec<(usize, usize, usize, Vec<usize>)> = Vec::new();
    for kt in 0..nt {
        for (g, group) in tree.partition_at(kt).into_iter().enumerate() {
            for ks in kt..nt {
                cells.push((kt, ks, g, group.clone()));
            }
        }
    }
    let mut keys: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
    let mut wanted: Vec<(usize, Vec<usize>)> = Vec::new();
    for (_, ks, _, group) in &cells {
        for k in [*ks, nt - 1] {
            let key = (k, group.clone());
            if !keys.contains_key(&key) {
                keys.insert(key.clone(), wanted.len());
                wanted.push(key);
            }
        }
    }
    let hats: Vec<WaveFunction> = wanted
        .par_iter()
        .map(|(k, group)| {
            let r = tree.merged_region(group, *k)?;
            qp.psi_hat(&SSet::new(tree.times[*k], r))
        })
        .collect::<Result<_>>()?;
    let mut overlap_residual = 0.0f64;
    let mut worst = None;
    for (kt, ks, g, group) in &cells {
        let a = &hats[keys[&(*ks, group.clone())]];
        let b = &hats[keys[&(nt - 1, group.clone())]];
        let r = match cournot::overlap(a, b) {
            Ok(o) => o.one_minus_m,
            Err(Error::BothWeightsVanish) => continue,
            Err(e) => return Err(e),
        };
        if r > overlap_residual || worst.is_none() {
            overlap_residual = overlap_residual.max(r);
            worst = Some((tree.times[*kt], tree.times[*ks], *g));
        }
    }
    Ok(PermanenceReport {
        support_residual,
        overlap_residual,
        worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidenceReport {
    pub times: Vec<f64>,
    /// `E(Y_t)` per requested time.
    pub per_time_mean: Vec<f64>,
    /// Distribution of `Y = (1/N) Σ_r Y_{t_r}`.
    pub summary: MajorityReport,
}

/// `Y_t = 1` when the trajectory sits in the same branch at `t` and at `t_F`.
pub fn residence_statistic(
    ensemble: &TrajectoryEnsemble,
    tree: &TreeStructure,
    times: &[f64],
    delta: f64,
) -> Result<ResidenceReport> {
    if times.is_empty() {
        return Err(Error::EmptySSets);
    }
    ensemble.space().ensure_same(&tree.space)?;
    let kf_tree = tree.times.len() - 1;
    let kf_ens = ensemble.time_index(tree.times[kf_tree])?;
    let idx: Vec<(usize, usize)> = times
        .iter()
        .map(|&t| Ok((tree.time_index(t)?, ensemble.time_index(t)?)))
        .collect::<Result<_>>()?;
    let mut per_time = vec![0usize; times.len()];
    let y: Vec<f64> = ensemble
        .trajectories()
        .map(|row| {
            let end = row[kf_ens] as usize;
            let branch = (0..tree.len()).find(|&i| tree.branches[i][kf_tree].contains(end));
            let mut hits = 0usize;
            for (r, &(kt, ke)) in idx.iter().enumerate() {
                if let Some(b) = branch {
                    if tree.branches[b][kt].contains(row[ke] as usize) {
                        hits += 1;
                        per_time[r] += 1;
                    }
                }
            }
            hits as f64 / times.len() as f64
        })
        .collect();
    let count = ensemble.count() as f64;
    Ok(ResidenceReport {
        times: times.to_vec(),
        per_time_mean: per_time.iter().map(|&h| h as f64 / count).collect(),
        summary: crate::compat::summarize(y, delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{build_compatible_ensemble, EnsembleMethod};
    use crate::hilbert::{network, ModeSpace, Propagator, UnitarySchedule, C64};

    fn labels(space: &Space, l: &[&str]) -> Region {
        Region::from_labels(space, l).unwrap()
    }

    fn bs() -> (QuantumProcess, TreeStructure) {
        let space: Space = ModeSpace::new(&["S", "R", "T", "DR", "DT"]).unwrap().into();
        let m = space.as_modes().unwrap().clone();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let w = network::unitary_with_first_column(&[C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(0.0, h)]).unwrap();
        let prop: Propagator = UnitarySchedule::new(5)
            .with(1.0, network::mix(&m, &["S", "R", "T"], &w).unwrap())
            .unwrap()
            .with(2.0, network::route(&m, &["R", "T"], &["DR", "DT"]).unwrap())
            .unwrap()
            .into();
        let qp = QuantumProcess::new(prop, WaveFunction::mode(&space, "S").unwrap(), (0.0, 3.0), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let all = Region::full(&space);
        let tree = TreeStructure::new(
            &space,
            vec![0.0, 1.0, 2.0, 3.0],
            vec![
                vec![all.clone(), labels(&space, &["R"]), labels(&space, &["DR"]), labels(&space, &["DR"])],
                vec![all, labels(&space, &["T"]), labels(&space, &["DT"]), labels(&space, &["DT"])],
            ],
        )
        .unwrap();
        (qp, tree)
    }

    #[test]
    fn beam_splitter_tree_is_valid_and_permanent() {
        let (qp, tree) = bs();
        assert!(validate_tree(&tree).is_empty());
        let rep = permanence_residuals(&qp, &tree).unwrap();
        assert!(rep.support_residual <= 1e-12);
        assert!(rep.overlap_residual <= 1e-12, "{rep:?}");
        assert_eq!(tree.partition_at(0), vec![vec![0, 1]]);
        assert_eq!(tree.partition_at(2), vec![vec![0], vec![1]]);
    }

    #[test]
    fn rejoin_and_root_violations() {
        let space: Space = ModeSpace::new(&["a", "b"]).unwrap().into();
        let (a, b) = (labels(&space, &["a"]), labels(&space, &["b"]));
        let rejoin = TreeStructure::new(
            &space,
            vec![0.0, 1.0, 2.0],
            vec![vec![a.clone(), a.clone(), a.clone()], vec![a.clone(), b.clone(), a.clone()]],
        )
        .unwrap();
        let v = validate_tree(&rejoin);
        assert!(v.iter().any(|x| x.axiom == Axiom::NoRejoin && x.times == vec![1.0, 2.0]));
        assert!(v.iter().any(|x| x.axiom == Axiom::FullSplit));
        let rootless = TreeStructure::constant(&space, vec![0.0, 1.0], vec![a.clone(), b.clone()]).unwrap();
        let v = validate_tree(&rootless);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].axiom, Axiom::CommonRoot);
        let overlapping = TreeStructure::constant(&space, vec![0.0], vec![Region::full(&space), a]).unwrap();
        assert!(validate_tree(&overlapping).iter().any(|x| x.axiom == Axiom::DisjointOrEqual));
        let single = TreeStructure::constant(&space, vec![0.0, 1.0], vec![Region::full(&space)]).unwrap();
        assert!(validate_tree(&single).is_empty());
        assert!(TreeStructure::new(&space, vec![0.0, 1.0], vec![vec![b]]).is_err());
    }

    #[test]
    fn residence_under_both_methods() {
        let (qp, tree) = bs();
        let times = [1.0, 2.0, 3.0];
        let mono = build_compatible_ensemble(&qp, qp.time_grid(), 5000, 7, EnsembleMethod::MonotoneTransport).unwrap();
        let r = residence_statistic(&mono, &tree, &times, 1e-3).unwrap();
        assert_eq!(r.summary.mean, 1.0);
        let ind = build_compatible_ensemble(&qp, qp.time_grid(), 5000, 7, EnsembleMethod::Independent).unwrap();
        let r = residence_statistic(&ind, &tree, &times, 1e-3).unwrap();
        assert!(r.summary.mean < 0.8);
        let single = TreeStructure::constant(qp.space(), tree.times().to_vec(), vec![Region::full(qp.space())]).unwrap();
        let r = residence_statistic(&ind, &single, &times, 1e-3).unwrap();
        assert!(r.summary.y.iter().all(|&y| y == 1.0));
    }
}
