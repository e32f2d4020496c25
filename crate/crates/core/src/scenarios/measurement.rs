//! Pointer-based measurement scenarios: Stern–Gerlach spin, the EPR pair with
//! random settings, and latching detectors for retrodiction.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::born::MeasurementModel;
use crate::cournot::m_psi;
use crate::error::Result;
use crate::hilbert::{network, ModeSpace, Propagator, Region, UnitarySchedule, C64};
use crate::squant::{QuantumProcess, SSet};
use crate::tree::TreeStructure;

use super::modes::{c, swap, Modes};
use super::shared::{compatibility_checks, povm_checks, tree_checks};
use super::{Checks, Config, MeasurementSetup, RunContext, ScenarioSetup};

pub(crate) const STERN_GERLACH: &str = r#"
# spin direction in the x-z plane
theta = 1.0
"#;

pub(crate) const EPR: &str = r#"
angles_a = [0.0, 1.5707963267948966]
angles_b = [0.7853981633974483, 2.356194490192345]
# probability of the first setting on each side
q_a = 0.5
q_b = 0.5
"#;

pub(crate) const RETRODICTION: &str = r#"
reflectivity = 0.5
count = 20000
method = "monotone-transport"
threshold = 1e-3
slack = 1e-3
"#;

const POINTER: [&str; 3] = ["ready", "plus", "minus"];

fn process(modes: &Modes, schedule: UnitarySchedule, psi0: &[(&[&str], C64)], grid: Vec<f64>) -> Result<Arc<QuantumProcess>> {
    let end = *grid.last().expect("grid");
    let prop: Propagator = schedule.into();
    Ok(Arc::new(QuantumProcess::new(prop, modes.wave(psi0)?, (0.0, end), grid)?))
}

/// `|+_α⟩ = (cos α/2, sin α/2)`, `|−_α⟩ = (−sin α/2, cos α/2)`.
fn spin_basis(alpha: f64) -> [[f64; 2]; 2] {
    let (s, c) = (alpha / 2.0).sin_cos();
    [[c, s], [-s, c]]
}

/// `Σ_± P_±(α) ⊗ S_±` on (spin digit `spin`, pointer digit `pointer`), where
/// `S_±` swaps ready with the `±` pointer state and α is picked by `angle(d)`.
fn measure(modes: &Modes, spin: usize, pointer: usize, angle: impl Fn(&[usize]) -> f64) -> DMatrix<C64> {
    let shifts = [swap(3, 0, 1), swap(3, 0, 2)];
    modes.operator(|d| {
        let basis = spin_basis(angle(d));
        let mut out = Vec::new();
        for (k, v) in basis.iter().enumerate() {
            let amp = v[d[spin]];
            for (s2, w) in v.iter().enumerate() {
                for p2 in 0..3 {
                    let sh = shifts[k][(p2, d[pointer])].re;
                    if amp * w * sh != 0.0 {
                        let mut e = d.to_vec();
                        e[spin] = s2;
                        e[pointer] = p2;
                        out.push((e, c(amp * w * sh)));
                    }
                }
            }
        }
        out
    })
}

pub(crate) fn build_stern_gerlach(cfg: &Config) -> Result<ScenarioSetup> {
    let theta = cfg.real("theta")?;
    let modes = Modes::new(&[&["up", "down"], &POINTER])?;
    let coupling = measure(&modes, 0, 1, |_| 0.0);
    let schedule = UnitarySchedule::new(modes.dimension()).with(1.0, coupling.clone())?;
    let (s, co) = (theta / 2.0).sin_cos();
    let qp = process(
        &modes,
        schedule,
        &[(&["up", "ready"], c(co)), (&["down", "ready"], c(s))],
        vec![0.0, 1.0],
    )?;
    let pointer_at = |l: &str| -> Result<SSet> {
        let p = modes.digit(1, l);
        Ok(SSet::new(1.0, modes.region(|d| d[1] == p)?))
    };
    let (plus, minus) = (pointer_at("plus")?, pointer_at("minus")?);
    let space = modes.space();
    let full = Region::full(&space);
    let tree = TreeStructure::new(
        &space,
        vec![0.0, 1.0],
        vec![vec![full.clone(), plus.region.clone()], vec![full, minus.region.clone()]],
    )?;
    let spin = ModeSpace::new(&["up", "down"])?;
    let pointer = ModeSpace::new(&POINTER)?;
    let model = MeasurementModel::new(&spin, &pointer, coupling, &["+", "-"], |l| match l.split(',').nth(1) {
        Some("plus") => Some("+".into()),
        Some("minus") => Some("-".into()),
        _ => None,
    })?;
    Ok(ScenarioSetup {
        process: qp,
        ssets: vec![("plus".to_owned(), plus), ("minus".to_owned(), minus)],
        tree: Some(tree),
        measurement: Some(MeasurementSetup {
            model,
            ready: vec![c(1.0), c(0.0), c(0.0)],
            probes: vec![
                ("tilted".to_owned(), vec![c(co), c(s)]),
                ("up".to_owned(), vec![c(1.0), c(0.0)]),
                ("down".to_owned(), vec![c(0.0), c(1.0)]),
                ("complex".to_owned(), vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]),
            ],
        }),
    })
}

pub(crate) fn check_stern_gerlach(setup: &ScenarioSetup, cfg: &Config, _ctx: &RunContext, checks: &mut Checks) -> Result<()> {
    let theta = cfg.real("theta")?;
    let qp = &setup.process;
    checks.near("branch_weight_plus", (theta / 2.0).cos().powi(2), 1e-12, qp.weight(setup.sset("plus")?)?);
    checks.near("branch_weight_minus", (theta / 2.0).sin().powi(2), 1e-12, qp.weight(setup.sset("minus")?)?);
    let m = setup.measurement.as_ref().expect("stern_gerlach has a model");
    let povm = povm_checks(m, checks)?;
    let up = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
    let down = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
    let dev = |a: &DMatrix<C64>, b: &DMatrix<C64>| (a - b).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let projector_dev = dev(povm.atom("+")?, &up).max(dev(povm.atom("-")?, &down));
    checks.at_most("atom_projector_deviation", 1e-12, projector_dev);
    tree_checks(setup, checks, 1e-10)
}

/// Spin A, spin B, setting A, setting B, pointer A, pointer B.
fn epr_modes() -> Result<Modes> {
    Modes::new(&[&["u", "d"], &["u", "d"], &["a0", "a1"], &["b0", "b1"], &POINTER, &POINTER])
}

struct EprParams {
    a: Vec<f64>,
    b: Vec<f64>,
    q_a: f64,
    q_b: f64,
}

fn epr_params(cfg: &Config) -> Result<EprParams> {
    let a = cfg.reals("angles_a")?;
    let b = cfg.reals("angles_b")?;
    if a.len() != 2 || b.len() != 2 {
        return Err(crate::error::Error::Config("each side needs exactly two angles".into()));
    }
    Ok(EprParams {
        a,
        b,
        q_a: cfg.real_in("q_a", 0.0, 1.0)?,
        q_b: cfg.real_in("q_b", 0.0, 1.0)?,
    })
}

/// Singlet probability of (outcome A, outcome B), `0` meaning `+`:
/// `½ sin²(θ/2)` for equal outcomes, `½ cos²(θ/2)` for opposite ones.
fn singlet_probability(alpha: f64, beta: f64, oa: usize, ob: usize) -> f64 {
    let half = (alpha - beta) / 2.0;
    if oa == ob {
        0.5 * half.sin().powi(2)
    } else {
        0.5 * half.cos().powi(2)
    }
}

fn epr_leaf_label(x: usize, y: usize, oa: usize, ob: usize) -> String {
    let sign = |o: usize| if o == 0 { '+' } else { '-' };
    format!("a{x}b{y}{}{}", sign(oa), sign(ob))
}

pub(crate) fn build_epr(cfg: &Config) -> Result<ScenarioSetup> {
    let p = epr_params(cfg)?;
    let modes = epr_modes()?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (aa, bb) = (p.a.clone(), p.b.clone());
    let schedule = UnitarySchedule::new(modes.dimension())
        .with(1.0, modes.local(2, &network::rotation(p.q_a.sqrt().acos())))?
        .with(1.0, modes.local(3, &network::rotation(p.q_b.sqrt().acos())))?
        .with(2.0, measure(&modes, 0, 4, move |d| aa[d[2]]))?
        .with(2.0, measure(&modes, 1, 5, move |d| bb[d[3]]))?;
    let qp = process(
        &modes,
        schedule,
        &[
            (&["u", "d", "a0", "b0", "ready", "ready"], c(r)),
            (&["d", "u", "a0", "b0", "ready", "ready"], c(-r)),
        ],
        vec![0.0, 1.0, 2.0],
    )?;
    let space = modes.space();
    let full = Region::full(&space);
    let mut ssets = Vec::new();
    let mut branches = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            let settings = modes.region(|d| d[2] == x && d[3] == y)?;
            ssets.push((format!("a{x}b{y}"), SSet::new(1.0, settings.clone())));
            for oa in 0..2 {
                for ob in 0..2 {
                    let leaf = modes.region(|d| d[2] == x && d[3] == y && d[4] == oa + 1 && d[5] == ob + 1)?;
                    ssets.push((epr_leaf_label(x, y, oa, ob), SSet::new(2.0, leaf.clone())));
                    branches.push(vec![full.clone(), settings.clone(), leaf]);
                }
            }
        }
    }
    let tree = TreeStructure::new(&space, vec![0.0, 1.0, 2.0], branches)?;
    Ok(ScenarioSetup {
        process: qp,
        ssets,
        tree: Some(tree),
        measurement: None,
    })
}

pub(crate) fn check_epr(setup: &ScenarioSetup, cfg: &Config, _ctx: &RunContext, checks: &mut Checks) -> Result<()> {
    let p = epr_params(cfg)?;
    let qp = &setup.process;
    let qa = [p.q_a, 1.0 - p.q_a];
    let qb = [p.q_b, 1.0 - p.q_b];
    let (mut nonzero, mut worst, mut total) = (0usize, 0.0f64, 0.0f64);
    let mut chsh_terms = [[0.0f64; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let mut corr = 0.0;
            let mut mass = 0.0;
            for oa in 0..2 {
                for ob in 0..2 {
                    let w = qp.weight(setup.sset(&epr_leaf_label(x, y, oa, ob))?)?;
                    let expected = qa[x] * qb[y] * singlet_probability(p.a[x], p.b[y], oa, ob);
                    nonzero += usize::from(w > 1e-12);
                    worst = worst.max((w - expected).abs());
                    total += w;
                    mass += w;
                    corr += if oa == ob { w } else { -w };
                }
            }
            chsh_terms[x][y] = if mass > 0.0 { corr / mass } else { f64::NAN };
        }
    }
    let chsh = |e: &[[f64; 2]; 2]| (e[0][0] - e[0][1] + e[1][0] + e[1][1]).abs();
    let closed: [[f64; 2]; 2] = [
        [-(p.a[0] - p.b[0]).cos(), -(p.a[0] - p.b[1]).cos()],
        [-(p.a[1] - p.b[0]).cos(), -(p.a[1] - p.b[1]).cos()],
    ];
    checks.near("nonzero_branches", 16.0, 0.0, nonzero as f64);
    checks.at_most("branch_weight_max_error", 1e-12, worst);
    checks.near("weight_sum", 1.0, 1e-12, total);
    checks.near("chsh", chsh(&closed), 1e-10, chsh(&chsh_terms));
    tree_checks(setup, checks, 1e-10)
}

const PARTICLE: [&str; 5] = ["S", "Dk", "T", "R", "A"];
const DETECTOR: [&str; 3] = ["ready", "fired", "latched"];

pub(crate) fn build_retrodiction(cfg: &Config) -> Result<ScenarioSetup> {
    let r = cfg.real_in("reflectivity", 0.0, 1.0)?;
    let modes = Modes::new(&[&PARTICLE, &DETECTOR, &DETECTOR])?;
    let pm = ModeSpace::new(&PARTICLE)?;
    let split = network::transfer(&pm, &["S", "Dk"], &["T", "R"], &network::splitter(r))?;
    let [pr, pt, pa] = [modes.digit(0, "R"), modes.digit(0, "T"), modes.digit(0, "A")];
    // particle in an arm with its detector ready ↔ absorbed with that detector fired
    let absorb = |arm: usize, det: usize| {
        modes.operator(move |d| {
            let mut e = d.to_vec();
            if d[0] == arm && d[det] == 0 {
                e[0] = pa;
                e[det] = 1;
            } else if d[0] == pa && d[det] == 1 {
                e[0] = arm;
                e[det] = 0;
            }
            vec![(e, c(1.0))]
        })
    };
    let latch = swap(3, 1, 2);
    let schedule = UnitarySchedule::new(modes.dimension())
        .with(1.0, modes.local(0, &split))?
        .with(2.0, absorb(pr, 1))?
        .with(2.0, absorb(pt, 2))?
        .with(3.0, modes.local(1, &latch))?
        .with(3.0, modes.local(2, &latch))?;
    let coupling = schedule.unitary(0.0, 4.0);
    let qp = process(&modes, schedule, &[(&["S", "ready", "ready"], c(1.0))], vec![0.0, 1.0, 2.0, 3.0, 4.0])?;
    let triggered = |k: usize| modes.region(move |d| d[k] != 0);
    let dr = triggered(1)?;
    let dt = triggered(2)?;
    let ssets = vec![
        ("phi_r".to_owned(), SSet::new(1.0, modes.region(|d| d[0] == pr && d[1] == 0 && d[2] == 0)?)),
        ("phi_t".to_owned(), SSet::new(1.0, modes.region(|d| d[0] == pt && d[1] == 0 && d[2] == 0)?)),
        ("dr_triggered_t2".to_owned(), SSet::new(2.0, dr.clone())),
        ("dr_triggered_t3".to_owned(), SSet::new(3.0, dr.clone())),
        ("dr_triggered_final".to_owned(), SSet::new(4.0, dr.clone())),
        ("dt_triggered_final".to_owned(), SSet::new(4.0, dt.clone())),
    ];
    let space = modes.space();
    let full = Region::full(&space);
    let arm = |p: usize| modes.region(move |d| d[0] == p);
    let only_r = dr.difference(&dt)?;
    let only_t = dt.difference(&dr)?;
    let tree = TreeStructure::new(
        &space,
        vec![0.0, 1.0, 2.0, 3.0, 4.0],
        vec![
            vec![full.clone(), arm(pr)?, only_r.clone(), only_r.clone(), only_r],
            vec![full, arm(pt)?, only_t.clone(), only_t.clone(), only_t],
        ],
    )?;
    let apparatus = ModeSpace::product(&ModeSpace::new(&DETECTOR)?, &ModeSpace::new(&DETECTOR)?);
    let model = MeasurementModel::new(&pm, &apparatus, coupling, &["R", "T"], |l| {
        let parts: Vec<&str> = l.split(',').collect();
        match (parts[1] == "latched", parts[2] == "latched") {
            (true, false) => Some("R".into()),
            (false, true) => Some("T".into()),
            _ => None,
        }
    })?;
    let mut ready = vec![c(0.0); 9];
    ready[0] = c(1.0);
    let basis = |i: usize| (0..5).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect::<Vec<_>>();
    Ok(ScenarioSetup {
        process: qp,
        ssets,
        tree: Some(tree),
        measurement: Some(MeasurementSetup {
            model,
            ready,
            probes: vec![
                ("source".to_owned(), basis(0)),
                ("dark_input".to_owned(), basis(1)),
                ("mixed_inputs".to_owned(), vec![c(0.6), C64::new(0.0, 0.8), c(0.0), c(0.0), c(0.0)]),
            ],
        }),
    })
}

pub(crate) fn check_retrodiction(setup: &ScenarioSetup, cfg: &Config, ctx: &RunContext, checks: &mut Checks) -> Result<()> {
    let r = cfg.real("reflectivity")?;
    let qp = &setup.process;
    let s = |l: &str| setup.sset(l);
    let fin = s("dr_triggered_final")?;
    checks.near_one("m_final_t2", 1e-10, m_psi(qp, fin, s("dr_triggered_t2")?)?);
    checks.near_one("m_final_t1", 1e-10, m_psi(qp, fin, s("phi_r")?)?);
    let ws: Vec<f64> = ["dr_triggered_t2", "dr_triggered_t3", "dr_triggered_final"]
        .iter()
        .map(|l| qp.weight(s(l)?))
        .collect::<Result<_>>()?;
    let spread = ws.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ws.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.at_most("triggered_weight_spread", 1e-12, spread);
    checks.near("triggered_weight", r, 1e-12, ws[2]);
    let m = setup.measurement.as_ref().expect("retrodiction_lab has a model");
    let povm = povm_checks(m, checks)?;
    let p_r = crate::born::outcome_probability(&povm, &["R"], &m.probes[0].1)?;
    checks.near("outcome_r_probability", r, 1e-10, p_r);
    tree_checks(setup, checks, 1e-10)?;
    compatibility_checks(
        setup,
        cfg,
        ctx,
        &[("phi_r", "dr_triggered_final"), ("dr_triggered_t2", "dr_triggered_final")],
        checks,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::unitarity_deviation;

    #[test]
    fn measurement_coupling_is_unitary() {
        let modes = Modes::new(&[&["u", "d"], &POINTER]).unwrap();
        for alpha in [0.0, 0.4, 2.5] {
            assert!(unitarity_deviation(&measure(&modes, 0, 1, |_| alpha)) < 1e-14);
        }
    }

    #[test]
    fn singlet_table_sums_to_one() {
        for (a, b) in [(0.0, 0.3), (1.0, -2.0)] {
            let s: f64 = (0..4).map(|k| singlet_probability(a, b, k / 2, k % 2)).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(singlet_probability(0.7, 0.7, 0, 0), 0.0);
    }
}
