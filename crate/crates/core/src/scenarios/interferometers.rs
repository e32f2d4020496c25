//! Mode-network interferometers: single splitter, Mach–Zehnder with shutter,
//! the three-arm network with a half-wave plate, and the which-path test
//! particle.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::cournot::{fac_ratio, j_residual, m_psi};
use crate::error::{Error, Result};
use crate::hilbert::{network, unitarity_deviation, ModeSpace, Propagator, Region, UnitarySchedule, C64};
use crate::squant::{QuantumProcess, SSet};
use crate::tree::TreeStructure;

use super::modes::{c, Modes};
use super::shared::{compatibility_checks, tree_checks};
use super::{Checks, Config, RunContext, ScenarioSetup};

pub(crate) const BEAM_SPLITTER: &str = r#"
reflectivity = 0.5
count = 20000
method = "monotone-transport"
threshold = 1e-3
slack = 1e-3
"#;

pub(crate) const MACH_ZEHNDER: &str = r#"
# open | closed | random
shutter = "open"
open_probability = 0.5
hwp_phase = 0.0
count = 20000
method = "monotone-transport"
threshold = 1e-3
slack = 1e-3
"#;

pub(crate) const THREE_ARM: &str = r#"
# first splitter sends this fraction to arm 1, the second splits the rest
splitter_ratios = [0.3333333333333333, 0.5]
hwp_phase = 3.141592653589793
"#;

pub(crate) const TEST_PARTICLE: &str = r#"
kick_angle = 1.5707963267948966
"#;

fn process(modes: &Modes, schedule: UnitarySchedule, psi0: &[(&[&str], C64)], grid: Vec<f64>) -> Result<Arc<QuantumProcess>> {
    let end = *grid.last().expect("grid");
    let prop: Propagator = schedule.into();
    Ok(Arc::new(QuantumProcess::new(prop, modes.wave(psi0)?, (0.0, end), grid)?))
}

/// Particle operator `w` (on factor 0) applied only where factor `k` has digit `when`.
fn controlled(modes: &Modes, k: usize, when: usize, w: &DMatrix<C64>) -> DMatrix<C64> {
    modes.operator(|d| {
        if d[k] != when {
            return vec![(d.to_vec(), c(1.0))];
        }
        (0..w.nrows())
            .filter(|&i| w[(i, d[0])] != c(0.0))
            .map(|i| {
                let mut e = d.to_vec();
                e[0] = i;
                (e, w[(i, d[0])])
            })
            .collect()
    })
}

/// Port weights below this count as dark when laying out trees.
const DARK: f64 = 1e-12;

pub(crate) fn build_beam_splitter(cfg: &Config) -> Result<ScenarioSetup> {
    let r = cfg.real_in("reflectivity", 0.0, 1.0)?;
    let particle = ["S", "Dk", "T", "R", "DT", "DR"];
    let modes = Modes::new(&[&particle])?;
    let ms = &modes.space;
    let schedule = UnitarySchedule::new(modes.dimension())
        .with(1.0, network::transfer(ms, &["S", "Dk"], &["T", "R"], &network::splitter(r))?)?
        .with(2.0, network::route(ms, &["T", "R"], &["DT", "DR"])?)?;
    let qp = process(&modes, schedule, &[(&["S"], c(1.0))], vec![0.0, 1.0, 2.0])?;
    let at = |t: f64, l: &str| -> Result<SSet> {
        let p = modes.digit(0, l);
        Ok(SSet::new(t, modes.region(|d| d[0] == p)?))
    };
    let ssets = vec![
        ("source".to_owned(), at(0.0, "S")?),
        ("arm_r".to_owned(), at(1.0, "R")?),
        ("arm_t".to_owned(), at(1.0, "T")?),
        ("det_r".to_owned(), at(2.0, "DR")?),
        ("det_t".to_owned(), at(2.0, "DT")?),
    ];
    let reg = |i: usize| ssets[i].1.region.clone();
    let branches: Vec<Vec<Region>> = [(r, 1, 3), (1.0 - r, 2, 4)]
        .into_iter()
        .filter(|&(weight, _, _)| weight > DARK)
        .map(|(_, arm, det)| vec![reg(0), reg(arm), reg(det)])
        .collect();
    let tree = TreeStructure::new(&modes.space(), vec![0.0, 1.0, 2.0], branches)?;
    Ok(ScenarioSetup {
        process: qp,
        ssets,
        tree: Some(tree),
        measurement: None,
    })
}

pub(crate) fn check_beam_splitter(setup: &ScenarioSetup, cfg: &Config, ctx: &RunContext, checks: &mut Checks) -> Result<()> {
    let r = cfg.real("reflectivity")?;
    let qp = &setup.process;
    let w = |l: &str| -> Result<f64> { qp.weight(setup.sset(l)?) };
    checks.near("arm_weight_r", r, 1e-12, w("arm_r")?);
    checks.near("arm_weight_t", 1.0 - r, 1e-12, w("arm_t")?);
    checks.value("detector_weight_r", w("det_r")?);
    checks.value("detector_weight_t", w("det_t")?);
    for (arm, det, weight) in [("arm_r", "det_r", r), ("arm_t", "det_t", 1.0 - r)] {
        if weight > DARK {
            let m = m_psi(qp, setup.sset(arm)?, setup.sset(det)?)?;
            checks.near_one(&format!("m_{arm}_{}", det.replace("det", "detector")), 1e-10, m);
        }
    }
    tree_checks(setup, checks, 1e-10)?;
    compatibility_checks(setup, cfg, ctx, &[("arm_r", "det_r"), ("arm_t", "det_t"), ("source", "det_r")], checks)
}

const MZ_PARTICLE: [&str; 9] = ["S", "Dk", "U", "L", "U2", "L2", "D1", "D2", "ABS"];

fn shutter_probability(cfg: &Config) -> Result<f64> {
    Ok(match cfg.one_of("shutter", &["open", "closed", "random"])? {
        "open" => 1.0,
        "closed" => 0.0,
        _ => cfg.real_in("open_probability", 0.0, 1.0)?,
    })
}

pub(crate) fn build_mach_zehnder(cfg: &Config) -> Result<ScenarioSetup> {
    let q = shutter_probability(cfg)?;
    let phi = cfg.real("hwp_phase")?;
    let p = &ModeSpace::new(&MZ_PARTICLE)?;
    let modes = Modes::new(&[&MZ_PARTICLE, &["open", "closed"]])?;
    let bs1 = network::transfer(p, &["S", "Dk"], &["U", "L"], &network::beam_splitter())?;
    let plate = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::from_polar(1.0, phi), c(1.0)]));
    let open_arms = network::transfer(p, &["U", "L"], &["U2", "L2"], &plate)?;
    let blocked_arms = network::transfer(p, &["U", "L"], &["U2", "ABS"], &plate)?;
    let bs2 = network::transfer(p, &["U2", "L2"], &["D1", "D2"], &network::beam_splitter())?;
    let shutter = network::rotation(q.sqrt().acos());
    let tick2 = controlled(&modes, 1, 0, &open_arms) * controlled(&modes, 1, 1, &blocked_arms);
    let schedule = UnitarySchedule::new(modes.dimension())
        .with(1.0, modes.local(0, &bs1))?
        .with(1.0, modes.local(1, &shutter))?
        .with(2.0, tick2)?
        .with(3.0, modes.local(0, &bs2))?;
    let qp = process(&modes, schedule, &[(&["S", "open"], c(1.0))], vec![0.0, 1.0, 2.0, 3.0])?;
    let sset = |t: f64, part: Option<&str>, shutter: Option<&str>| -> Result<SSet> {
        let pd = part.map(|l| modes.digit(0, l));
        let sd = shutter.map(|l| modes.digit(1, l));
        Ok(SSet::new(
            t,
            modes.region(|d| pd.is_none_or(|x| d[0] == x) && sd.is_none_or(|x| d[1] == x))?,
        ))
    };
    let ssets = vec![
        ("upper_arm".to_owned(), sset(1.0, Some("U"), None)?),
        ("lower_arm".to_owned(), sset(1.0, Some("L"), None)?),
        ("open".to_owned(), sset(1.0, None, Some("open"))?),
        ("closed".to_owned(), sset(1.0, None, Some("closed"))?),
        ("d1".to_owned(), sset(3.0, Some("D1"), None)?),
        ("d2".to_owned(), sset(3.0, Some("D2"), None)?),
        ("absorbed".to_owned(), sset(3.0, Some("ABS"), None)?),
        ("open_d1".to_owned(), sset(3.0, Some("D1"), Some("open"))?),
        ("open_d2".to_owned(), sset(3.0, Some("D2"), Some("open"))?),
        ("closed_d1".to_owned(), sset(3.0, Some("D1"), Some("closed"))?),
        ("closed_d2".to_owned(), sset(3.0, Some("D2"), Some("closed"))?),
        ("closed_absorbed".to_owned(), sset(3.0, Some("ABS"), Some("closed"))?),
    ];
    let space = modes.space();
    let full = Region::full(&space);
    let open = sset(1.0, None, Some("open"))?.region;
    let closed = open.complement();
    let leaf = |p: &str, s: &str| -> Result<Region> { Ok(sset(3.0, Some(p), Some(s))?.region) };
    // the open branch ends at each port the phase leaves lit
    let (s2, c2) = ((phi / 2.0).sin().powi(2), (phi / 2.0).cos().powi(2));
    let mut branches = Vec::new();
    for (port, weight) in [("D1", s2), ("D2", c2)] {
        if weight > DARK {
            branches.push(vec![full.clone(), open.clone(), open.clone(), leaf(port, "open")?]);
        }
    }
    for port in ["D1", "D2", "ABS"] {
        branches.push(vec![full.clone(), closed.clone(), closed.clone(), leaf(port, "closed")?]);
    }
    let tree = TreeStructure::new(&space, vec![0.0, 1.0, 2.0, 3.0], branches)?;
    Ok(ScenarioSetup {
        process: qp,
        ssets,
        tree: Some(tree),
        measurement: None,
    })
}

pub(crate) fn check_mach_zehnder(setup: &ScenarioSetup, cfg: &Config, ctx: &RunContext, checks: &mut Checks) -> Result<()> {
    let q = shutter_probability(cfg)?;
    let phi = cfg.real("hwp_phase")?;
    let (s2, c2) = ((phi / 2.0).sin().powi(2), (phi / 2.0).cos().powi(2));
    let qp = &setup.process;
    let w = |l: &str| -> Result<f64> { qp.weight(setup.sset(l)?) };
    checks.value("open_probability", q);
    checks.near("upper_path_weight", 0.5, 1e-12, w("upper_arm")?);
    checks.near("lower_path_weight", 0.5, 1e-12, w("lower_arm")?);
    checks.near("d1_weight", q * s2 + (1.0 - q) / 4.0, 1e-10, w("d1")?);
    checks.near("d2_weight", q * c2 + (1.0 - q) / 4.0, 1e-10, w("d2")?);
    checks.near("absorbed_weight", (1.0 - q) / 2.0, 1e-10, w("absorbed")?);
    checks.near("open_and_d1_weight", q * s2, 1e-10, w("open_d1")?);
    checks.near("branch_open_d2", q * c2, 1e-10, w("open_d2")?);
    checks.near("branch_closed_d1", (1.0 - q) / 4.0, 1e-10, w("closed_d1")?);
    checks.near("branch_closed_d2", (1.0 - q) / 4.0, 1e-10, w("closed_d2")?);
    checks.near("branch_closed_absorbed", (1.0 - q) / 2.0, 1e-10, w("closed_absorbed")?);
    tree_checks(setup, checks, 1e-10)?;
    compatibility_checks(
        setup,
        cfg,
        ctx,
        &[("open", "open_d2"), ("closed", "closed_absorbed"), ("upper_arm", "d2")],
        checks,
    )
}

/// Recombination row proportional to `1/aₖ` makes the three contributions
/// to the detector equal in magnitude.
fn three_arm_amplitudes(ratios: &[f64]) -> Result<([f64; 3], [f64; 3])> {
    let [r1, r2] = ratios else {
        return Err(Error::Config("splitter_ratios needs two entries".into()));
    };
    if !(0.0 < *r1 && *r1 < 1.0 && 0.0 < *r2 && *r2 < 1.0) {
        return Err(Error::Config("splitter ratios must lie strictly between 0 and 1".into()));
    }
    let a = [r1.sqrt(), ((1.0 - r1) * r2).sqrt(), ((1.0 - r1) * (1.0 - r2)).sqrt()];
    let inv: Vec<f64> = a.iter().map(|x| 1.0 / x).collect();
    let n = inv.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((a, [inv[0] / n, inv[1] / n, inv[2] / n]))
}

pub(crate) fn build_three_arm(cfg: &Config) -> Result<ScenarioSetup> {
    let (a, w) = three_arm_amplitudes(&cfg.reals("splitter_ratios")?)?;
    let phi = cfg.real("hwp_phase")?;
    let modes = Modes::new(&[&["S", "A1", "A2", "A3", "D", "E1", "E2"]])?;
    let ms = &modes.space;
    let split = network::unitary_with_first_column(&[c(0.0), c(a[0]), c(a[1]), c(a[2])])?;
    let recombine = network::unitary_with_first_column(&[c(w[0]), c(w[1]), c(w[2])])?.transpose();
    debug_assert!(unitarity_deviation(&recombine) < 1e-12);
    let schedule = UnitarySchedule::new(modes.dimension())
        .with(1.0, network::mix(ms, &["S", "A1", "A2", "A3"], &split)?)?
        .with(2.0, network::phase(ms, "A2", phi)?)?
        .with(3.0, network::transfer(ms, &["A1", "A2", "A3"], &["D", "E1", "E2"], &recombine)?)?;
    let qp = process(&modes, schedule, &[(&["S"], c(1.0))], vec![0.0, 1.0, 2.0, 3.0])?;
    let at = |t: f64, l: &str| -> Result<SSet> {
        let p = modes.digit(0, l);
        Ok(SSet::new(t, modes.region(|d| d[0] == p)?))
    };
    Ok(ScenarioSetup {
        process: qp,
        ssets: vec![
            ("arm1".to_owned(), at(2.0, "A1")?),
            ("arm2".to_owned(), at(2.0, "A2")?),
            ("arm3".to_owned(), at(2.0, "A3")?),
            ("detector".to_owned(), at(3.0, "D")?),
        ],
        tree: None,
        measurement: None,
    })
}

pub(crate) fn check_three_arm(setup: &ScenarioSetup, _cfg: &Config, _ctx: &RunContext, checks: &mut Checks) -> Result<()> {
    let qp = &setup.process;
    let (s1, s2, s3, sf) = (
        setup.sset("arm1")?,
        setup.sset("arm2")?,
        setup.sset("arm3")?,
        setup.sset("detector")?,
    );
    checks.value("detector_weight", qp.weight(sf)?);
    checks.near("arms_overlap_count", 0.0, 0.0, s1.region.intersection(&s3.region)?.count() as f64);
    checks.at_most("j_residual_arm1", 1e-6, j_residual(qp, s1, sf)?);
    checks.at_most("j_residual_arm3", 1e-6, j_residual(qp, s3, sf)?);
    checks.value("j_residual_arm2", j_residual(qp, s2, sf)?);
    checks.near("fac_ratio_arm2", -1.0, 1e-6, fac_ratio(qp, s2, sf)?);
    checks.value("fac_ratio_arm1", fac_ratio(qp, s1, sf)?);
    checks.below("m_psi_arm1_detector", 0.9, m_psi(qp, s1, sf)?);
    checks.below("m_psi_arm3_detector", 0.9, m_psi(qp, s3, sf)?);
    Ok(())
}

const TP_PARTICLE: [&str; 8] = ["S", "Dk", "U", "L", "U2", "L2", "D1", "D2"];

fn test_particle_process(kick: f64) -> Result<(Modes, Arc<QuantumProcess>)> {
    let p = &ModeSpace::new(&TP_PARTICLE)?;
    let modes = Modes::new(&[&TP_PARTICLE, &["rest", "kicked"]])?;
    let bs1 = network::transfer(p, &["S", "Dk"], &["U", "L"], &network::beam_splitter())?;
    let arms = network::route(p, &["U", "L"], &["U2", "L2"])?;
    let bs2 = network::transfer(p, &["U2", "L2"], &["D1", "D2"], &network::beam_splitter())?;
    let upper = modes.digit(0, "U");
    let rot = network::rotation(kick);
    let kick_op = modes.operator(|d| {
        if d[0] != upper {
            return vec![(d.to_vec(), c(1.0))];
        }
        (0..2)
            .map(|i| {
                let mut e = d.to_vec();
                e[1] = i;
                (e, rot[(i, d[1])])
            })
            .collect()
    });
    let schedule = UnitarySchedule::new(modes.dimension())
        .with(1.0, modes.local(0, &bs1))?
        .with(2.0, kick_op)?
        .with(2.0, modes.local(0, &arms))?
        .with(3.0, modes.local(0, &bs2))?;
    let qp = process(&modes, schedule, &[(&["S", "rest"], c(1.0))], vec![0.0, 1.0, 2.0, 3.0])?;
    Ok((modes, qp))
}

fn detector_ssets(modes: &Modes) -> Result<Vec<(String, SSet)>> {
    let at = |t: f64, l: &str| -> Result<SSet> {
        let p = modes.digit(0, l);
        Ok(SSet::new(t, modes.region(|d| d[0] == p)?))
    };
    let kicked = modes.digit(1, "kicked");
    Ok(vec![
        ("upper_arm".to_owned(), at(1.0, "U")?),
        ("kicked".to_owned(), SSet::new(2.0, modes.region(|d| d[1] == kicked)?)),
        ("d1".to_owned(), at(3.0, "D1")?),
        ("d2".to_owned(), at(3.0, "D2")?),
    ])
}

pub(crate) fn build_test_particle(cfg: &Config) -> Result<ScenarioSetup> {
    let (modes, qp) = test_particle_process(cfg.real("kick_angle")?)?;
    Ok(ScenarioSetup {
        process: qp,
        ssets: detector_ssets(&modes)?,
        tree: None,
        measurement: None,
    })
}

pub(crate) fn check_test_particle(setup: &ScenarioSetup, cfg: &Config, _ctx: &RunContext, checks: &mut Checks) -> Result<()> {
    let k = cfg.real("kick_angle")?;
    let qp = &setup.process;
    checks.value("kicked_weight", qp.weight(setup.sset("kicked")?)?);
    checks.near("d1_weight_coupled", (1.0 - k.cos()) / 2.0, 1e-10, qp.weight(setup.sset("d1")?)?);
    checks.near("d2_weight_coupled", (1.0 + k.cos()) / 2.0, 1e-10, qp.weight(setup.sset("d2")?)?);
    let (modes, free) = test_particle_process(0.0)?;
    let ss = detector_ssets(&modes)?;
    checks.at_most("d1_weight_uncoupled", 1e-10, free.weight(&ss[2].1)?);
    checks.near("d2_weight_uncoupled", 1.0, 1e-10, free.weight(&ss[3].1)?);
    Ok(())
}
