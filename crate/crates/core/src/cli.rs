//! `qcp list | run | sweep`. Exit codes: 0 when every assertion passes, 1
//! when one fails (reports are still written), 2 on configuration or usage
//! errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::born::build_povm;
use crate::compat::{build_compatible_ensemble, EnsembleMethod};
use crate::error::{Error, Result};
use crate::format;
use crate::scenarios::{self, resolve_config, run_with_config, RunOptions, ScenarioReport};

#[derive(Debug, Parser)]
#[command(name = "qcp", version, about = "Run quantum-process scenarios and export their reports")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List registered scenarios.
    List {
        #[arg(long, value_enum, default_value = "text")]
        format: ListFormat,
    },
    /// Run one scenario and write its report.
    Run {
        scenario: String,
        #[command(flatten)]
        common: Common,
        /// Report formats; repeat for both.
        #[arg(long = "format", value_enum)]
        formats: Vec<ReportFormat>,
        /// Extra artifacts to write next to the report.
        #[arg(long, value_enum)]
        export: Vec<Export>,
    },
    /// Run a scenario once per parameter value; one CSV row per value.
    Sweep {
        scenario: String,
        parameter: String,
        /// Values; reals may use `pi`, e.g. `pi/2`. Put negative expressions
        /// such as `-pi/2` after `--`.
        #[arg(required = true, num_args = 1.., allow_negative_numbers = true)]
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory; reports go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` override with a dotted key; repeatable.
    #[arg(long = "set")]
    sets: Vec<String>,
    /// TOML config document overlaid on the defaults; repeatable.
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    /// Ensemble size.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ListFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Export {
    Ensemble,
    Tree,
    Povm,
}

impl Common {
    fn options(&self) -> Result<RunOptions> {
        let documents = self
            .configs
            .iter()
            .map(|p| fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display()))))
            .collect::<Result<_>>()?;
        Ok(RunOptions {
            seed: self.seed,
            documents,
            overrides: self.sets.clone(),
            count: self.count,
        })
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<bool> {
    match cli.command {
        Command::List { format } => {
            list(format, stdout)?;
            Ok(true)
        }
        Command::Run {
            scenario,
            common,
            formats,
            export,
        } => run(&scenario, &common, &formats, &export, stdout),
        Command::Sweep {
            scenario,
            parameter,
            values,
            common,
        } => sweep(&scenario, &parameter, &values, &common, stdout),
    }
}

fn list(format: ListFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        ListFormat::Text => {
            writeln!(out, "scenarios:")?;
            for s in scenarios::registry() {
                writeln!(out, "  {} ({}): {}", s.name, s.setup, s.description)?;
            }
        }
        ListFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["name", "setup", "description"])?;
            for s in scenarios::registry() {
                w.write_record([s.name, s.setup, s.description])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("output directory {}: {e}", dir.display())))
}

fn write_report(report: &ScenarioReport, format: ReportFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        ReportFormat::Csv => report.write_csv(out),
        ReportFormat::Text => {
            writeln!(out, "{}", report.to_json()?)?;
            Ok(())
        }
    }
}

fn run(name: &str, common: &Common, formats: &[ReportFormat], export: &[Export], stdout: &mut dyn Write) -> Result<bool> {
    let info = scenarios::find(name)?;
    let cfg = resolve_config(info, &common.options()?)?;
    if !export.is_empty() && common.out.is_none() {
        return Err(Error::Config("--export needs --out".into()));
    }
    let report = run_with_config(info, &cfg, common.seed)?;
    let formats = if formats.is_empty() { &[ReportFormat::Csv][..] } else { formats };
    match &common.out {
        None => {
            for &f in formats {
                write_report(&report, f, stdout)?;
            }
        }
        Some(dir) => {
            ensure_dir(dir)?;
            for &f in formats {
                let ext = if f == ReportFormat::Csv { "csv" } else { "json" };
                let mut file = fs::File::create(dir.join(format!("{name}.{ext}")))?;
                write_report(&report, f, &mut file)?;
            }
            if !export.is_empty() {
                let setup = info.build(&cfg)?;
                for e in export {
                    match e {
                        Export::Ensemble => {
                            let count = cfg.count("count")?;
                            let method = match cfg.has("method") {
                                true => cfg.text("method")?.parse()?,
                                false => EnsembleMethod::default(),
                            };
                            let qp = &setup.process;
                            let ens = build_compatible_ensemble(qp, qp.time_grid(), count, common.seed, method)?;
                            ens.write_csv(fs::File::create(dir.join(format!("{name}_ensemble.csv")))?)?;
                        }
                        Export::Tree => {
                            let tree = setup
                                .tree
                                .as_ref()
                                .ok_or_else(|| Error::Config(format!("{name} declares no tree")))?;
                            fs::write(dir.join(format!("{name}_tree.json")), tree.to_json()?)?;
                        }
                        Export::Povm => {
                            let m = setup
                                .measurement
                                .as_ref()
                                .ok_or_else(|| Error::Config(format!("{name} has no measurement model")))?;
                            let povm = build_povm(&m.model, &m.ready)?;
                            povm.write_text(fs::File::create(dir.join(format!("{name}_povm.txt")))?)?;
                        }
                    }
                }
            }
        }
    }
    for a in report.failures() {
        writeln!(
            stdout,
            "FAIL {}: {} {} {} (tolerance {})",
            a.name,
            format::real(a.value),
            a.relation.symbol(),
            format::real(a.target),
            format::real(a.tolerance)
        )?;
    }
    Ok(report.passed)
}

fn sweep(name: &str, parameter: &str, values: &[String], common: &Common, stdout: &mut dyn Write) -> Result<bool> {
    let info = scenarios::find(name)?;
    let base = common.options()?;
    let base_cfg = resolve_config(info, &base)?;
    if !base_cfg.has(parameter) {
        return Err(Error::Config(format!("{name} has no parameter `{parameter}`")));
    }
    let mut reports = Vec::with_capacity(values.len());
    for v in values {
        let mut cfg = base_cfg.clone();
        cfg.set(parameter, v)?;
        reports.push(run_with_config(info, &cfg, common.seed)?);
    }
    // union in first-seen order; a check skipped at some value leaves its cell empty
    let mut names: Vec<&str> = Vec::new();
    for a in reports.iter().flat_map(|r| &r.assertions) {
        if !names.contains(&a.name.as_str()) {
            names.push(&a.name);
        }
    }
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec![parameter];
        header.extend(&names);
        header.push("pass");
        w.write_record(&header)?;
        for (v, r) in values.iter().zip(&reports) {
            let mut row = vec![v.clone()];
            for n in &names {
                row.push(r.assertion(n).map_or_else(String::new, |a| format::real(a.value)));
            }
            row.push(r.passed.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    match &common.out {
        None => stdout.write_all(&buf)?,
        Some(dir) => {
            ensure_dir(dir)?;
            fs::write(dir.join(format!("{name}_sweep_{parameter}.csv")), &buf)?;
        }
    }
    Ok(reports.iter().all(|r| r.passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("qcp").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn list_formats() {
        let (code, out, _) = call(&["list"]);
        assert_eq!(code, 0);
        assert!(out.contains("mach_zehnder (two-splitter interferometer with shutter)"));
        let (_, csv, _) = call(&["list", "--format", "csv"]);
        assert!(csv.starts_with("name,setup,description\n"));
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["run", "bogus"]).0, 2);
        assert_eq!(call(&["run", "stern_gerlach", "--set", "nope=1"]).0, 2);
        assert_eq!(call(&["run", "stern_gerlach", "--count", "5"]).0, 2);
        assert_eq!(call(&["run", "stern_gerlach"]).0, 0);
        let (code, out, _) = call(&["run", "stern_gerlach", "--set", "tol.branch_weight_plus=-1"]);
        assert_eq!(code, 1);
        assert!(out.contains("FAIL branch_weight_plus"));
    }

    #[test]
    fn sweep_rows_and_unknown_parameter() {
        let (code, out, _) = call(&["sweep", "test_particle_disturbance", "kick_angle", "0", "pi/2", "pi"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("kick_angle,d1_weight_coupled"));
        assert!(lines[3].starts_with("pi,1.0000000000000"));
        assert_eq!(call(&["sweep", "stern_gerlach", "phi", "1"]).0, 2);
    }
}
