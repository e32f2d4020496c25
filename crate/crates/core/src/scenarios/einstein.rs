//! Two counter-propagating packets on a walled 1D grid; a barrier is switched
//! on between them at `barrier_time`, leaving one packet in each box.

use std::sync::Arc;

use crate::compat::{build_compatible_ensemble, EnsembleMethod};
use crate::cournot::m_psi;
use crate::error::{Error, Result};
use crate::hilbert::{gaussian_packet, GridSpace, Region, Space, SplitOperator, WaveFunction, C64};
use crate::squant::{QuantumProcess, SSet};
use crate::tree::{extract_tree, ExtractOptions, TreeStructure, DEFAULT_MASS_FLOOR};

use super::shared::tree_checks;
use super::{Checks, Config, RunContext, ScenarioSetup};

pub(crate) const DEFAULTS: &str = r#"
points = 512
lower = -32.0
upper = 32.0
mass = 1.0
dt = 0.005
width = 1.0
momentum = 8.0
# potential wall_height wherever |x| >= wall
wall = 28.0
wall_height = 500.0
barrier_half_width = 2.0
barrier_height = 500.0
barrier_time = 2.0
final_time = 10.0
step = 0.25
count = 100000
method = "monotone-transport"
# cluster linking distance for tree extraction; 0 means four grid spacings
gap = 0.0
"#;

fn grid_times(cfg: &Config) -> Result<Vec<f64>> {
    let tb = cfg.real("barrier_time")?;
    let tf = cfg.real("final_time")?;
    let step = cfg.real("step")?;
    if !(tb > 0.0 && tf > tb && step > 0.0) {
        return Err(Error::Config("need 0 < barrier_time < final_time and step > 0".into()));
    }
    let n = ((tf - tb) / step).round() as usize;
    if ((tb + n as f64 * step) - tf).abs() > 1e-9 {
        return Err(Error::Config("final_time - barrier_time must be a multiple of step".into()));
    }
    let mut times = vec![0.0];
    times.extend((0..=n).map(|k| tb + k as f64 * step));
    Ok(times)
}

pub(crate) fn build(cfg: &Config) -> Result<ScenarioSetup> {
    let points = cfg.count("points")?;
    let grid = GridSpace::line(cfg.real("lower")?, cfg.real("upper")?, points)?;
    let space: Space = grid.clone().into();
    let xs = grid.coordinates(0);
    let (wall, wh) = (cfg.real("wall")?, cfg.real("wall_height")?);
    let (bw, bh) = (cfg.real("barrier_half_width")?, cfg.real("barrier_height")?);
    let walls: Vec<f64> = xs.iter().map(|x| if x.abs() >= wall { wh } else { 0.0 }).collect();
    let boxed: Vec<f64> = xs
        .iter()
        .zip(&walls)
        .map(|(x, w)| if x.abs() <= bw { w + bh } else { *w })
        .collect();
    let tb = cfg.real("barrier_time")?;
    let prop = SplitOperator::with_schedule(
        &space,
        cfg.real("mass")?,
        cfg.real("dt")?,
        vec![(f64::NEG_INFINITY, walls), (tb, boxed)],
    )?;
    let (w, p) = (cfg.real("width")?, cfg.real("momentum")?);
    let right = gaussian_packet(&space, &[0.0], w, &[p])?;
    let left = gaussian_packet(&space, &[0.0], w, &[-p])?;
    let psi0: WaveFunction = WaveFunction::superpose(&[(C64::new(1.0, 0.0), &right), (C64::new(1.0, 0.0), &left)])?.normalize();
    let times = grid_times(cfg)?;
    let tf = *times.last().expect("grid");
    let qp = Arc::new(QuantumProcess::new(prop.into(), psi0, (0.0, tf), times.clone())?);
    let l = Region::where_position(&space, |x| x[0] < 0.0)?;
    let r = l.complement();
    let mut ssets = Vec::new();
    for &t in &times[1..] {
        ssets.push((format!("left@{t}"), SSet::new(t, l.clone())));
        ssets.push((format!("right@{t}"), SSet::new(t, r.clone())));
    }
    let full = Region::full(&space);
    let branch = |b: &Region| -> Vec<Region> {
        std::iter::once(full.clone()).chain(times[1..].iter().map(|_| b.clone())).collect()
    };
    let tree = TreeStructure::new(&space, times.clone(), vec![branch(&l), branch(&r)])?;
    Ok(ScenarioSetup {
        process: qp,
        ssets,
        tree: Some(tree),
        measurement: None,
    })
}

pub(crate) fn check(setup: &ScenarioSetup, cfg: &Config, ctx: &RunContext, checks: &mut Checks) -> Result<()> {
    let qp = &setup.process;
    let times = qp.time_grid().to_vec();
    let tb = cfg.real("barrier_time")?;
    let tf = *times.last().expect("grid");
    let end_l = setup.sset(&format!("left@{tf}"))?;
    let end_r = setup.sset(&format!("right@{tf}"))?;
    let (mut same, mut cross) = (f64::INFINITY, f64::NEG_INFINITY);
    for &t in &times[1..] {
        let l = setup.sset(&format!("left@{t}"))?;
        let r = setup.sset(&format!("right@{t}"))?;
        same = same.min(m_psi(qp, l, end_l)?).min(m_psi(qp, r, end_r)?);
        cross = cross.max(m_psi(qp, l, end_r)?.abs()).max(m_psi(qp, r, end_l)?.abs());
    }
    checks.value("left_weight_final", qp.weight(end_l)?);
    checks.near_one("same_box_min_m", 1e-6, same);
    checks.at_most("cross_box_max_m", 1e-6, cross);
    tree_checks(setup, checks, 1e-6)?;

    let method: EnsembleMethod = cfg.text("method")?.parse()?;
    let ens = build_compatible_ensemble(qp, &times, cfg.count("count")?, ctx.seed, method)?;
    let crossing = ens.crossing_frequency(&end_l.region, tb)?;
    checks.at_most("crossing_frequency", 1e-3, crossing);

    let grid = qp.space().as_grid().expect("grid scenario");
    let gap = match cfg.real("gap")? {
        g if g > 0.0 => g,
        _ => ExtractOptions::for_grid(grid).gap_threshold,
    };
    let extracted = extract_tree(qp, &times, gap, DEFAULT_MASS_FLOOR)?;
    checks.near("extracted_branches", 2.0, 0.0, extracted.len() as f64);
    Ok(())
}
