use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Error, Result};
use crate::milp::ModelIR;

use super::{write_mps, RawSolution, SolveOptions, SolveStatus, SOLVER_SEED};

/// Environment variable naming the CBC executable.
pub const CBC_ENV: &str = "SMESS_CBC";

fn executable(p: &Path) -> bool {
    p.is_file()
}

/// CBC bundled with a PuLP installation under `root`.
fn pulp_bundled(root: &Path) -> Option<PathBuf> {
    let entries = std::fs::read_dir(root).ok()?;
    let mut pythons: Vec<PathBuf> = entries
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("python3")))
        .collect();
    pythons.sort();
    for py in pythons.iter().rev() {
        for pkgs in ["dist-packages", "site-packages"] {
            for arch in ["64", "i64"] {
                let p = py.join(pkgs).join("pulp/solverdir/cbc/linux").join(arch).join("cbc");
                if executable(&p) {
                    return Some(p);
                }
            }
        }
    }
    None
}

/// Locate CBC: the [`CBC_ENV`] variable, then `PATH`, then a PuLP bundle.
pub fn cbc_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(CBC_ENV) {
        let p = PathBuf::from(p);
        return executable(&p).then_some(p);
    }
    if let Some(path) = std::env::var_os("PATH") {
        for dir in std::env::split_paths(&path) {
            let p = dir.join("cbc");
            if executable(&p) {
                return Some(p);
            }
        }
    }
    ["/usr/local/lib", "/usr/lib"].iter().find_map(|r| pulp_bundled(Path::new(r)))
}

fn fail(message: impl Into<String>) -> Error {
    Error::Backend {
        backend: "cbc".into(),
        message: message.into(),
    }
}

/// Value after `key` on the first stdout line starting with it.
fn stdout_value(out: &str, key: &str) -> Option<f64> {
    out.lines()
        .find_map(|l| l.trim().strip_prefix(key))
        .and_then(|v| v.trim().split_whitespace().next())
        .and_then(|v| v.parse().ok())
}

/// Parse a CBC solution file: a status line, then `index name value dual`
/// per non-zero column. Lines flagged `**` are infeasible values and are
/// read like any other.
pub(crate) fn parse_solution(text: &str, model: &ModelIR) -> Result<(String, Option<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| fail("empty solution file"))?;
    let status = head.split(" - ").next().unwrap_or("").trim().to_string();
    let objective = head
        .rsplit("objective value")
        .next()
        .and_then(|v| v.trim().parse::<f64>().ok());
    let mut values = vec![0.0; model.num_vars()];
    for l in lines {
        let l = l.trim().trim_start_matches("**").trim();
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() < 3 {
            continue;
        }
        if let Some(v) = model.var_by_name(tok[1]) {
            values[v.0] = tok[2].parse().map_err(|_| fail(format!("bad value `{}`", tok[2])))?;
        }
    }
    Ok((status, objective, values))
}

/// Solve through an MPS file. CBC minimises, so the file carries the
/// negated objective and the reported values are negated back.
pub(crate) fn solve(model: &ModelIR, options: &SolveOptions) -> Result<RawSolution> {
    let exe = cbc_path().ok_or_else(|| Error::BackendMissing {
        backend: "cbc".into(),
        message: format!("set {CBC_ENV} or put `cbc` on PATH"),
    })?;
    let dir = tempfile::tempdir()?;
    let mps = dir.path().join("model.mps");
    let sol = dir.path().join("model.sol");
    std::fs::write(&mps, write_mps(model, true))?;
    let seed = SOLVER_SEED.to_string();
    let output = Command::new(&exe)
        .arg(&mps)
        .args(["-sec", &options.time_limit.to_string()])
        .args(["-ratio", &options.gap.to_string()])
        .args(["-threads", &options.threads.to_string()])
        .args(["-randomCbcSeed", &seed, "-randomSeed", &seed])
        .args(["-primalT", "1e-9", "-integerT", "1e-8"])
        .arg("-solve")
        .arg("-solu")
        .arg(&sol)
        .output()
        .map_err(|e| Error::BackendMissing {
            backend: "cbc".into(),
            message: format!("{}: {e}", exe.display()),
        })?;
    let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(fail(format!("{}: {}{}", output.status, stderr, tail(&stdout))));
    }
    let text = std::fs::read_to_string(&sol).map_err(|e| fail(format!("no solution file: {e}\n{}", tail(&stdout))))?;
    let (status_text, objective, values) = parse_solution(&text, model)?;
    let objective = objective.map(|o| -o);
    let status = if status_text.starts_with("Optimal") {
        SolveStatus::Optimal
    } else if status_text.starts_with("Infeasible") || status_text.starts_with("Integer infeasible") {
        SolveStatus::Infeasible
    } else if status_text.starts_with("Stopped on time") {
        SolveStatus::TimeLimit
    } else if status_text.starts_with("Stopped on ratio") || status_text.starts_with("Stopped on gap") {
        SolveStatus::GapLimit
    } else {
        SolveStatus::Error
    };
    let has_values = status.has_incumbent_status() && objective.is_some();
    let bound = match stdout_value(&stdout, "Lower bound:") {
        Some(lb) => Some(-lb),
        None if status == SolveStatus::Optimal => objective,
        None => None,
    };
    let status = match (status, objective, bound) {
        (SolveStatus::Optimal, Some(o), Some(b)) if super::relative_gap(b, o) > 1e-9 => SolveStatus::GapLimit,
        (s, _, _) => s,
    };
    Ok(RawSolution {
        status,
        objective: if has_values { objective } else { None },
        bound,
        values: has_values.then_some(values),
    })
}

fn tail(s: &str) -> String {
    let lines: Vec<&str> = s.lines().collect();
    lines[lines.len().saturating_sub(15)..].join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_file_is_parsed_by_name() {
        let mut m = ModelIR::new();
        m.add_binary("x", "x[i=1,t=0]".into());
        m.add_continuous("P", "P[b=1~2,t=1]".into(), -3.0, 3.0);
        let text = "Optimal - objective value -2.50000000\n      1 P[b=1~2,t=1]   -2.5   1\n";
        let (status, obj, values) = parse_solution(text, &m).unwrap();
        assert_eq!(status, "Optimal");
        assert_eq!(obj, Some(-2.5));
        assert_eq!(values, vec![0.0, -2.5]);
    }

    #[test]
    fn flagged_lines_are_read() {
        let mut m = ModelIR::new();
        m.add_binary("x", "x[t=0]".into());
        let text = "Stopped on time - objective value 3\n** 0 x[t=0] 1 0\n";
        let (status, _, values) = parse_solution(text, &m).unwrap();
        assert_eq!(status, "Stopped on time");
        assert_eq!(values, vec![1.0]);
    }
}
