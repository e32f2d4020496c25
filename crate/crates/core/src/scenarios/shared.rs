//! Checks shared between scenarios.

use crate::born::{build_povm, neutral_weight, outcome_probability, Povm, NEUTRAL};
use crate::compat::{build_compatible_ensemble, compatibility_check, EnsembleMethod};
use crate::error::Result;
use crate::tree::{permanence_residuals, validate_tree};

use super::{Checks, Config, MeasurementSetup, Relation, RunContext, ScenarioSetup};

const VANISHING: f64 = 1e-12;

pub(crate) fn tree_checks(setup: &ScenarioSetup, checks: &mut Checks, permanence_tol: f64) -> Result<()> {
    let Some(tree) = &setup.tree else {
        return Ok(());
    };
    let violations = validate_tree(tree);
    checks.value("tree_branches", tree.len() as f64);
    checks.near("tree_axiom_violations", 0.0, 0.0, violations.len() as f64);
    let residual = if violations.is_empty() {
        let p = permanence_residuals(&setup.process, tree)?;
        checks.value("support_residual", p.support_residual);
        checks.value("overlap_residual", p.overlap_residual);
        p.support_residual.max(p.overlap_residual)
    } else {
        f64::NAN
    };
    checks.at_most("permanence_residual", permanence_tol, residual);
    Ok(())
}

/// Samples an ensemble on the process grid and tests the labelled pairs.
/// Pairs where both s-sets carry no weight are skipped.
pub(crate) fn compatibility_checks(
    setup: &ScenarioSetup,
    cfg: &Config,
    ctx: &RunContext,
    pairs: &[(&str, &str)],
    checks: &mut Checks,
) -> Result<()> {
    let qp = &setup.process;
    let method: EnsembleMethod = cfg.text("method")?.parse()?;
    let count = cfg.count("count")?;
    let eps = cfg.real("threshold")?;
    let slack = cfg.real("slack")?;
    let mut chosen = Vec::new();
    for (a, b) in pairs {
        let (s1, s2) = (setup.sset(a)?.clone(), setup.sset(b)?.clone());
        if qp.weight(&s1)? > VANISHING || qp.weight(&s2)? > VANISHING {
            chosen.push((s1, s2));
        }
    }
    let ens = build_compatible_ensemble(qp, qp.time_grid(), count, ctx.seed, method)?;
    let report = compatibility_check(&ens, qp, &chosen, eps, slack)?;
    let min_mp = report
        .pairs
        .iter()
        .filter(|p| p.m_psi >= 1.0 - eps)
        .map(|p| p.m_p)
        .fold(f64::INFINITY, f64::min);
    checks.value("compatibility_pairs", report.pairs.len() as f64);
    if min_mp.is_finite() {
        checks.value("compatibility_min_m_p", min_mp);
    }
    checks.near("compatibility_violations", 0.0, 0.0, report.violations.len() as f64);
    Ok(())
}

/// Effect invariants plus POVM-versus-direct probabilities for every probe,
/// on each single outcome, on `ω₀` and on the whole outcome set.
pub(crate) fn povm_checks(m: &MeasurementSetup, checks: &mut Checks) -> Result<Povm> {
    let povm = build_povm(&m.model, &m.ready)?;
    checks.at_most("povm_completeness", 1e-10, povm.completeness_residual());
    checks.assert("povm_min_eigenvalue", Relation::AtLeast, 0.0, 1e-10, povm.min_eigenvalue());
    checks.at_most("povm_hermitian_deviation", 1e-12, povm.hermitian_deviation());
    let mut sets: Vec<Vec<String>> = m.model.outcomes().iter().map(|o| vec![o.clone()]).collect();
    sets.push(vec![NEUTRAL.to_owned()]);
    let mut all = m.model.outcomes().to_vec();
    all.push(NEUTRAL.to_owned());
    sets.push(all);
    let mut worst = 0.0f64;
    for (_, phi) in &m.probes {
        for set in &sets {
            let a = outcome_probability(&povm, set, phi)?;
            let b = m.model.direct_probability(set, phi, &m.ready)?;
            worst = worst.max((a - b).abs());
        }
    }
    checks.at_most("povm_vs_direct", 1e-10, worst);
    if let Some((_, phi)) = m.probes.first() {
        checks.at_most("neutral_weight", 1e-10, neutral_weight(&m.model, phi, &m.ready)?);
    }
    Ok(povm)
}
