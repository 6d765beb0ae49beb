//! Command-line front end: `build`, `solve`, `validate` and `compare`.
//!
//! Exit status: 0 success, 1 violation or no feasible schedule, 2 input
//! error, 3 backend error. Wall-clock figures go to `meta.json` only, so
//! every other output is byte-identical across runs with identical inputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::assembly::{assemble, structure_check, with_case};
use crate::error::{Error, Result};
use crate::scenario::{parse_scenario, CaseTag, Scenario};
use crate::solver::{solve, write_mps, Backend, Schedule, SolveOptions, SolveResult, SolveStatus, CBC_ENV};
use crate::validate::{check_schedule, recompute_objective, resilience_series, series_table, ObjectiveBreakdown, DEFAULT_TOLERANCE};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_BACKEND: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "smess", version, about = "Restoration scheduling with separable mobile storage, generators and fuel tankers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble the model, write it in MPS form and print family counts
    /// against the closed-form sizes.
    Build {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Case variant; defaults to the scenario's.
        #[arg(long)]
        case: Option<CaseTag>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve one case variant and write the schedule.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        case: Option<CaseTag>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a schedule against the scenario.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Case variant to check against; defaults to the schedule's.
        #[arg(long)]
        case: Option<CaseTag>,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve several case variants and tabulate objectives and series.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated case variants.
        #[arg(long, value_delimiter = ',', default_value = "case1,case2,case3,case4,case5")]
        case: Vec<CaseTag>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON document.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Facets of every polygonal disk (even, at least 4).
    #[arg(long)]
    pub disk_segments: Option<usize>,
    /// Add the optional rows tying pickup to energization.
    #[arg(long)]
    pub strict_pickup: bool,
    #[arg(long)]
    pub phi_travel: Option<f64>,
    #[arg(long)]
    pub phi_fuel: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Relative optimality gap; defaults to the scenario's.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit: f64,
    /// `highs` or `cbc`; the CBC executable is taken from the environment
    /// variable named by `CBC_ENV`, then `PATH`.
    #[arg(long, default_value_t = Backend::default_backend())]
    pub backend: Backend,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        let text = fs::read_to_string(&self.scenario).map_err(|e| Error::invariant(self.scenario.display().to_string(), e.to_string()))?;
        let mut s = parse_scenario(&text)?;
        if let Some(k) = self.disk_segments {
            if k < 4 || k % 2 != 0 {
                return Err(Error::invariant("--disk-segments", "must be even and at least 4"));
            }
            s.study.disk_segments = k;
        }
        s.study.strict_pickup |= self.strict_pickup;
        for (flag, value, slot) in [
            ("--phi-travel", self.phi_travel, &mut s.study.phi_travel),
            ("--phi-fuel", self.phi_fuel, &mut s.study.phi_fuel),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invariant(flag, "must be finite and non-negative"));
                }
                *slot = v;
            }
        }
        Ok(s)
    }
}

impl SolverArgs {
    fn options(&self, s: &Scenario) -> Result<SolveOptions> {
        let opts = SolveOptions {
            gap: self.gap.unwrap_or(s.study.mip_gap),
            time_limit: self.time_limit,
            backend: self.backend,
            ..Default::default()
        };
        opts.validate()?;
        Ok(opts)
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BackendMissing { .. } | Error::Backend { .. } | Error::FractionalBinary { .. } | Error::Model(_) => EXIT_BACKEND,
        _ => EXIT_INPUT,
    }
}

/// Summary written next to a solved schedule.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub case: CaseTag,
    pub backend: Backend,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub breakdown: Option<ObjectiveBreakdown>,
    pub violations: Option<usize>,
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    unix_time_s: u64,
    solve_seconds: Vec<(CaseTag, f64)>,
    cbc_env: &'static str,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_meta(dir: &Path, command: &str, solve_seconds: Vec<(CaseTag, f64)>) -> Result<()> {
    let unix_time_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let meta = Meta {
        command,
        unix_time_s,
        solve_seconds,
        cbc_env: CBC_ENV,
    };
    write(dir, "meta.json", &serde_json::to_string_pretty(&meta)?)
}

fn cmd_build(scenario: &ScenarioArgs, case: Option<CaseTag>, out: &Path) -> Result<u8> {
    let mut s = scenario.load()?;
    if let Some(c) = case {
        s = with_case(&s, c);
    }
    let a = assemble(&s)?;
    let check = structure_check(&a.scenario, &a.counts)?;
    write(out, "model.mps", &write_mps(&a.model, false))?;
    write(out, "counts.json", &serde_json::to_string_pretty(&check)?)?;
    print!("{}", check.render());
    println!("\nwrote {} and {}", out.join("model.mps").display(), out.join("counts.json").display());
    Ok(EXIT_OK)
}

fn solve_one(s: &Scenario, options: &SolveOptions) -> Result<(SolveResult, SolveSummary)> {
    let a = assemble(s)?;
    let r = solve(&a, options)?;
    let (breakdown, violations) = match &r.schedule {
        Some(sched) => (
            Some(recompute_objective(s, sched)),
            Some(check_schedule(s, sched, DEFAULT_TOLERANCE)?.violations.len()),
        ),
        None => (None, None),
    };
    let summary = SolveSummary {
        case: s.study.case,
        backend: r.backend,
        status: r.status,
        objective: r.objective,
        bound: r.bound,
        gap: r.gap,
        breakdown,
        violations,
    };
    Ok((r, summary))
}

fn write_solution(dir: &Path, s: &Scenario, r: &SolveResult, summary: &SolveSummary) -> Result<()> {
    write(dir, "solve.json", &serde_json::to_string_pretty(summary)?)?;
    if let Some(sched) = &r.schedule {
        write(dir, "schedule.json", &sched.to_json())?;
        write(dir, "series.tsv", &series_table(&resilience_series(s, sched)))?;
    }
    Ok(())
}

fn cmd_solve(scenario: &ScenarioArgs, case: Option<CaseTag>, solver: &SolverArgs, out: &Path) -> Result<u8> {
    let mut s = scenario.load()?;
    if let Some(c) = case {
        s = with_case(&s, c);
    }
    let options = solver.options(&s)?;
    let (r, summary) = solve_one(&s, &options)?;
    write_solution(out, &s, &r, &summary)?;
    write_meta(out, "solve", vec![(s.study.case, r.seconds)])?;
    println!(
        "{} {}: status {}, objective {}, gap {}",
        s.study.case,
        r.backend,
        r.status,
        r.objective.map_or("-".into(), |v| format!("{v:.6}")),
        r.gap.map_or("-".into(), |g| format!("{g:.2e}"))
    );
    if let Some(b) = &summary.breakdown {
        println!(
            "restored {:.6} kWh, travel spans {:?}, exchanges {:?}",
            b.restored, b.travel_spans, b.exchange_spans
        );
    }
    Ok(if r.schedule.is_some() { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_validate(scenario: &ScenarioArgs, case: Option<CaseTag>, schedule: &Path, tol: f64, out: &Path) -> Result<u8> {
    let s = scenario.load()?;
    let text = fs::read_to_string(schedule).map_err(|e| Error::invariant(schedule.display().to_string(), e.to_string()))?;
    let sched = Schedule::from_json(&text)?;
    let s = with_case(&s, case.unwrap_or(sched.case));
    let report = check_schedule(&s, &sched, tol)?;
    let breakdown = recompute_objective(&s, &sched);
    write(out, "report.json", &serde_json::to_string_pretty(&report)?)?;
    write(out, "violations.tsv", &report.to_table())?;
    write(out, "series.tsv", &series_table(&resilience_series(&s, &sched)))?;
    println!(
        "{} checks, {} violations, max residual {:.3e}; objective {:.6} (restored {:.6})",
        report.checks,
        report.violations.len(),
        report.max_residual,
        breakdown.total,
        breakdown.restored
    );
    for v in report.violations.iter().take(20) {
        println!("  {v}");
    }
    Ok(if report.pass() { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_compare(scenario: &ScenarioArgs, cases: &[CaseTag], solver: &SolverArgs, out: &Path) -> Result<u8> {
    let base = scenario.load()?;
    let options = solver.options(&base)?;
    let results: Vec<Result<(Scenario, SolveResult, SolveSummary)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .iter()
            .map(|&c| {
                let s = with_case(&base, c);
                let options = &options;
                scope.spawn(move || solve_one(&s, options).map(|(r, sum)| (s, r, sum)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let mut table = String::from("case\tstatus\tobjective\trestored_kwh\ttravel_spans\texchanges\tviolations\n");
    let mut seconds = Vec::new();
    let mut code = EXIT_OK;
    for result in results {
        let (s, r, summary) = result?;
        let case = s.study.case;
        write_solution(&out.join(case.to_string()), &s, &r, &summary)?;
        seconds.push((case, r.seconds));
        let b = summary.breakdown.as_ref();
        table.push_str(&format!(
            "{case}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.status,
            r.objective.map_or("-".into(), |v| v.to_string()),
            b.map_or("-".into(), |b| b.restored.to_string()),
            b.map_or("-".into(), |b| b.travel_total().to_string()),
            b.map_or("-".into(), |b| b.exchange_total().to_string()),
            summary.violations.map_or("-".into(), |v| v.to_string()),
        ));
        if r.schedule.is_none() || summary.violations.is_some_and(|v| v > 0) {
            code = EXIT_VIOLATION;
        }
    }
    write(out, "compare.tsv", &table)?;
    write_meta(out, "compare", seconds)?;
    print!("{table}");
    Ok(code)
}

/// Run the command line and return the exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Build { scenario, case, out } => cmd_build(scenario, *case, out),
        Command::Solve { scenario, case, solver, out } => cmd_solve(scenario, *case, solver, out),
        Command::Validate {
            scenario,
            case,
            schedule,
            tolerance,
            out,
        } => cmd_validate(scenario, *case, schedule, *tolerance, out),
        Command::Compare { scenario, case, solver, out } => cmd_compare(scenario, case, solver, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_errors_map_to_three() {
        let e = Error::Backend {
            backend: "cbc".into(),
            message: "crashed".into(),
        };
        assert_eq!(exit_code(&e), EXIT_BACKEND);
        assert_eq!(exit_code(&Error::invariant("x", "bad")), EXIT_INPUT);
    }

    #[test]
    fn compare_accepts_a_case_list() {
        let cli = Cli::try_parse_from(["smess", "compare", "--scenario", "s.json", "--case", "case1,case5"]).unwrap();
        match cli.command {
            Command::Compare { case, .. } => assert_eq!(case, vec![CaseTag::Case1, CaseTag::Case5]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_flag_is_an_input_error() {
        assert_eq!(run(["smess", "solve", "--nope"]), EXIT_INPUT);
    }
}
