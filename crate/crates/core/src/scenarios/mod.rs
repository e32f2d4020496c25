//! Registered experiments: each builds a quantum process with s-sets declared
//! up front (plus an optional tree and measurement model), then runs its
//! checks and reports every number with a pass/fail per assertion.

mod config;
mod einstein;
mod interferometers;
mod measurement;
mod modes;
mod shared;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::born::MeasurementModel;
use crate::cournot::{consistency_probe, ConsistencyReport};
use crate::error::{Error, Result};
use crate::format;
use crate::hilbert::{Region, Space, C64};
use crate::squant::{QuantumProcess, SSet};
use crate::tree::TreeStructure;

pub use config::{parse_real, Config};

/// A built scenario. The s-sets are fixed here, before any sampling.
#[derive(Debug, Clone)]
pub struct ScenarioSetup {
    pub process: Arc<QuantumProcess>,
    pub ssets: Vec<(String, SSet)>,
    pub tree: Option<TreeStructure>,
    pub measurement: Option<MeasurementSetup>,
}

#[derive(Debug, Clone)]
pub struct MeasurementSetup {
    pub model: MeasurementModel,
    /// Ready state `Φ` of the apparatus.
    pub ready: Vec<C64>,
    /// Named micro states to probe.
    pub probes: Vec<(String, Vec<C64>)>,
}

impl ScenarioSetup {
    pub fn sset(&self, label: &str) -> Result<&SSet> {
        self.ssets
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::InvalidArgument(format!("no s-set labelled `{label}`")))
    }

    pub fn space(&self) -> &Space {
        self.process.space()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "==")]
    Near,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
            Relation::Near => "==",
        }
    }

    /// `<=`: `v ≤ target + tol`; `>=`: `v ≥ target − tol`; `<`: `v < target + tol`;
    /// `==`: `|v − target| ≤ tol`. NaN never passes.
    pub fn holds(self, value: f64, target: f64, tolerance: f64) -> bool {
        match self {
            Relation::AtMost => value <= target + tolerance,
            Relation::AtLeast => value >= target - tolerance,
            Relation::Below => value < target + tolerance,
            Relation::Near => (value - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub relation: Relation,
    pub target: f64,
    pub tolerance: f64,
    pub value: f64,
    pub pass: bool,
}

/// Raw values and assertions collected by a scenario run.
#[derive(Debug, Default)]
pub struct Checks {
    values: BTreeMap<String, f64>,
    assertions: Vec<Assertion>,
}

impl Checks {
    pub fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_owned(), v);
    }

    pub fn assert(&mut self, name: &str, relation: Relation, target: f64, tolerance: f64, value: f64) {
        self.assertions.push(Assertion {
            name: name.to_owned(),
            relation,
            target,
            tolerance,
            value,
            pass: relation.holds(value, target, tolerance),
        });
    }

    pub fn at_most(&mut self, name: &str, bound: f64, value: f64) {
        self.assert(name, Relation::AtMost, 0.0, bound, value);
    }

    pub fn near(&mut self, name: &str, target: f64, tolerance: f64, value: f64) {
        self.assert(name, Relation::Near, target, tolerance, value);
    }

    /// `value ≥ 1 − tolerance`.
    pub fn near_one(&mut self, name: &str, tolerance: f64, value: f64) {
        self.assert(name, Relation::AtLeast, 1.0, tolerance, value);
    }

    pub fn below(&mut self, name: &str, bound: f64, value: f64) {
        self.assert(name, Relation::Below, bound, 0.0, value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub config: toml::Table,
    pub values: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per assertion: name, relation, target, value, tolerance, pass.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "relation", "target", "value", "tolerance", "pass"])?;
        for a in &self.assertions {
            w.write_record([
                a.name.as_str(),
                a.relation.symbol(),
                &format::real(a.target),
                &format::real(a.value),
                &format::real(a.tolerance),
                if a.pass { "true" } else { "false" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.pass)
    }
}

/// What a check routine sees besides the setup and config.
#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub seed: u64,
}

type BuildFn = fn(&Config) -> Result<ScenarioSetup>;
type CheckFn = fn(&ScenarioSetup, &Config, &RunContext, &mut Checks) -> Result<()>;

pub struct ScenarioInfo {
    pub name: &'static str,
    /// Short tag shown next to the name in listings.
    pub setup: &'static str,
    pub description: &'static str,
    defaults: &'static str,
    build: BuildFn,
    check: CheckFn,
}

impl std::fmt::Debug for ScenarioInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioInfo").field("name", &self.name).finish()
    }
}

impl ScenarioInfo {
    pub fn default_config(&self) -> Config {
        Config::from_defaults(self.defaults).expect("scenario defaults parse")
    }

    pub fn build(&self, config: &Config) -> Result<ScenarioSetup> {
        (self.build)(config)
    }
}

static REGISTRY: [ScenarioInfo; 8] = [
    ScenarioInfo {
        name: "einstein_boxes",
        setup: "packet pair split into two boxes",
        description: "1D grid: two counter-propagating packets, a barrier inserted between them, boxes L and R",
        defaults: einstein::DEFAULTS,
        build: einstein::build,
        check: einstein::check,
    },
    ScenarioInfo {
        name: "beam_splitter",
        setup: "single splitter, two detectors",
        description: "source, 50/50 splitter, two arms, detectors DR and DT",
        defaults: interferometers::BEAM_SPLITTER,
        build: interferometers::build_beam_splitter,
        check: interferometers::check_beam_splitter,
    },
    ScenarioInfo {
        name: "mach_zehnder",
        setup: "two-splitter interferometer with shutter",
        description: "dark port D1, shutter open/closed/random on the lower arm, phase plate on the upper arm",
        defaults: interferometers::MACH_ZEHNDER,
        build: interferometers::build_mach_zehnder,
        check: interferometers::check_mach_zehnder,
    },
    ScenarioInfo {
        name: "three_arm_hwp",
        setup: "three arms, half-wave plate, one detector",
        description: "three disjoint arms recombined on a detector; a sign flip on the middle arm",
        defaults: interferometers::THREE_ARM,
        build: interferometers::build_three_arm,
        check: interferometers::check_three_arm,
    },
    ScenarioInfo {
        name: "stern_gerlach",
        setup: "spin with pointer",
        description: "tilted spin-1/2 measured by a three-state pointer; POVM read off the pointer",
        defaults: measurement::STERN_GERLACH,
        build: measurement::build_stern_gerlach,
        check: measurement::check_stern_gerlach,
    },
    ScenarioInfo {
        name: "epr",
        setup: "singlet, random settings, two pointers",
        description: "singlet pair, two independent binary setting registers, two pointers; 16 branches",
        defaults: measurement::EPR,
        build: measurement::build_epr,
        check: measurement::check_epr,
    },
    ScenarioInfo {
        name: "retrodiction_lab",
        setup: "splitter with latching detectors",
        description: "particle and two detectors that fire and latch; records stay put after triggering",
        defaults: measurement::RETRODICTION,
        build: measurement::build_retrodiction,
        check: measurement::check_retrodiction,
    },
    ScenarioInfo {
        name: "test_particle_disturbance",
        setup: "interferometer with which-path test particle",
        description: "a test particle kicked by the upper arm washes out the dark port",
        defaults: interferometers::TEST_PARTICLE,
        build: interferometers::build_test_particle,
        check: interferometers::check_test_particle,
    },
];

pub fn registry() -> &'static [ScenarioInfo] {
    &REGISTRY
}

pub fn find(name: &str) -> Result<&'static ScenarioInfo> {
    REGISTRY
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_owned()))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// TOML documents overlaid in order.
    pub documents: Vec<String>,
    /// `key=value` assignments applied after the documents.
    pub overrides: Vec<String>,
    /// Ensemble size, when the scenario samples one.
    pub count: Option<usize>,
}

pub fn resolve_config(info: &ScenarioInfo, options: &RunOptions) -> Result<Config> {
    let mut cfg = info.default_config();
    for doc in &options.documents {
        cfg.merge_toml(doc)?;
    }
    for o in &options.overrides {
        cfg.set_assignment(o)?;
    }
    if let Some(n) = options.count {
        if !cfg.has("count") {
            return Err(Error::Config(format!("{} samples no ensemble; --count does not apply", info.name)));
        }
        cfg.set("count", &n.to_string())?;
    }
    Ok(cfg)
}

pub fn run_scenario(name: &str, options: &RunOptions) -> Result<ScenarioReport> {
    let info = find(name)?;
    let cfg = resolve_config(info, options)?;
    run_with_config(info, &cfg, options.seed)
}

pub fn run_with_config(info: &ScenarioInfo, cfg: &Config, seed: u64) -> Result<ScenarioReport> {
    let setup = info.build(cfg)?;
    let mut checks = Checks::default();
    (info.check)(&setup, cfg, &RunContext { seed }, &mut checks)?;
    for (name, tol) in cfg.tolerances() {
        let a = checks
            .assertions
            .iter_mut()
            .find(|a| a.name == *name)
            .ok_or_else(|| Error::Config(format!("tol.{name}: {} has no such assertion", info.name)))?;
        a.tolerance = *tol;
        a.pass = a.relation.holds(a.value, a.target, a.tolerance);
    }
    let passed = checks.assertions.iter().all(|a| a.pass);
    Ok(ScenarioReport {
        scenario: info.name.to_owned(),
        seed,
        config: cfg.table().clone(),
        values: checks.values,
        assertions: checks.assertions,
        passed,
    })
}

fn random_region_pair(space: &Space, rng: &mut ChaCha8Rng) -> Result<(Region, Region)> {
    let n = space.dimension();
    match space {
        Space::Grid(_) => {
            let mut cuts = [rng.random_range(0..=n), rng.random_range(0..=n), rng.random_range(0..=n)];
            cuts.sort_unstable();
            Ok((
                Region::from_indices(space, cuts[0]..cuts[1])?,
                Region::from_indices(space, cuts[1]..cuts[2])?,
            ))
        }
        Space::Modes(_) => {
            let colour: Vec<u8> = (0..n).map(|_| rng.random_range(0..3u8)).collect();
            Ok((
                Region::from_mask(space, colour.iter().map(|&c| c == 1).collect())?,
                Region::from_mask(space, colour.iter().map(|&c| c == 2).collect())?,
            ))
        }
    }
}

/// Randomized scan for the forbidden pattern of the consistency lemma.
/// Anchors cycle through the declared s-sets; half of the candidates put the
/// anchor's own region first, paired with a random part of its complement.
pub fn consistency_scan(setup: &ScenarioSetup, pairs: usize, threshold: f64, seed: u64) -> Result<ConsistencyReport> {
    if setup.ssets.is_empty() {
        return Err(Error::EmptySSets);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = setup.process.time_grid();
    let space = setup.space();
    let n_anchor = setup.ssets.len();
    let mut total = ConsistencyReport {
        candidates: 0,
        qualifying: 0,
        violations: Vec::new(),
    };
    for (a, (_, anchor)) in setup.ssets.iter().enumerate() {
        let take = pairs / n_anchor + usize::from(a < pairs % n_anchor);
        let mut cands = Vec::with_capacity(take);
        for c in 0..take {
            if c % 2 == 0 {
                let t = grid[rng.random_range(0..grid.len())];
                let (r1, r2) = random_region_pair(space, &mut rng)?;
                cands.push((SSet::new(t, r1), SSet::new(t, r2)));
            } else {
                let (_, other) = random_region_pair(space, &mut rng)?;
                let rest = other.difference(&anchor.region)?;
                cands.push((anchor.clone(), SSet::new(anchor.time, rest)));
            }
        }
        let r = consistency_probe(&setup.process, anchor, &cands, threshold)?;
        let offset = total.candidates;
        total.candidates += r.candidates;
        total.qualifying += r.qualifying;
        total.violations.extend(r.violations.into_iter().map(|mut v| {
            v.index += offset;
            v
        }));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_scenario() {
        assert!(matches!(
            run_scenario("unknown", &RunOptions::default()),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn defaults_parse_and_names_unique() {
        let mut names: Vec<&str> = registry().iter().map(|s| s.name).collect();
        for s in registry() {
            s.default_config();
        }
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 8);
    }

    #[test]
    fn relations() {
        assert!(Relation::AtMost.holds(1e-11, 0.0, 1e-10));
        assert!(!Relation::AtMost.holds(1e-9, 0.0, 1e-10));
        assert!(Relation::AtLeast.holds(1.0 - 1e-7, 1.0, 1e-6));
        assert!(Relation::Below.holds(0.5, 0.9, 0.0));
        assert!(!Relation::Near.holds(f64::NAN, 0.0, 1.0));
    }

    #[test]
    fn tolerance_override_flips_verdict() {
        let opts = RunOptions {
            overrides: vec!["tol.arm_weight_r=-1".into()],
            ..Default::default()
        };
        let r = run_scenario("beam_splitter", &opts).unwrap();
        assert!(!r.passed);
        assert!(!r.assertion("arm_weight_r").unwrap().pass);
        let bad = RunOptions {
            overrides: vec!["tol.nope=1".into()],
            ..Default::default()
        };
        assert!(matches!(run_scenario("beam_splitter", &bad), Err(Error::Config(_))));
    }

    #[test]
    fn csv_report_shape() {
        let r = run_scenario("stern_gerlach", &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("name,relation,target,value,tolerance,pass\n"));
        assert_eq!(text.lines().count(), r.assertions.len() + 1);
    }
}
