use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::{json, Value};

use tsvar::calculus::{improper_integral, integrate_fn};
use tsvar::problems;
use tsvar::variational::{
    el_residual, solve_truncated, verify_candidate_with, Solution, Terminal, Trajectory, Verdict,
};
use tsvar::{Error, GridFunction, ProblemFile};

use crate::{Failure, Source};

type Outcome = Result<Value, Failure>;

fn load(src: &Source) -> Result<ProblemFile, Failure> {
    if let Some(id) = src.file.strip_prefix("corpus:") {
        return Ok(problems::find(id)?.file);
    }
    let text = std::fs::read_to_string(&src.file)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", src.file)))?;
    Ok(ProblemFile::from_json(&text)?)
}

fn csv_of(f: &GridFunction) -> String {
    let mut out = String::from("t");
    for k in 1..=f.dim() {
        let _ = write!(out, ",x{k}");
    }
    out.push('\n');
    for (i, t) in f.times().iter().enumerate() {
        let _ = write!(out, "{t}");
        for v in f.value(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn write_csv(path: &Option<PathBuf>, body: &str) -> Result<(), Failure> {
    if let Some(p) = path {
        std::fs::write(p, body)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

pub fn integrate(
    src: &Source,
    from: Option<f64>,
    to: Option<f64>,
    improper: bool,
    horizons: Option<Vec<f64>>,
    integrand: Option<String>,
) -> Outcome {
    let mut file = load(src)?;
    if integrand.is_some() {
        file.integrand = integrand;
    }
    let ts = file.timescale()?;
    let f = file
        .integrand()?
        .ok_or_else(|| Failure::Input("no integrand in the file or on the command line".into()))?;
    let eval = |t: f64| f.eval(&[t]);
    let mut cfg = file.config.improper;
    if let Some(h) = src.h {
        cfg.h = h;
    }
    let a = ts.a();
    if improper {
        let hs = horizons
            .or(file.config.horizons.clone())
            .unwrap_or_else(|| (1..=10).map(|k| ts.next_member_at_or_after(a + 10.0 * k as f64)).collect());
        let est = improper_integral(&ts, &eval, a, &hs, &cfg)?;
        return Ok(json!({ "command": "integrate", "improper": true, "estimate": est }));
    }
    let lo = from.unwrap_or(a);
    let hi = to.ok_or_else(|| Failure::Input("--to is required unless --improper".into()))?;
    let value = integrate_fn(&ts, &eval, lo, hi, cfg.h)?;
    Ok(json!({ "command": "integrate", "from": lo, "to": hi, "h": cfg.h, "value": value }))
}

pub fn residual(src: &Source, candidate: &str, window: f64, csv: Option<PathBuf>) -> Outcome {
    let file = load(src)?;
    let problem = file.problem()?;
    let x = file.candidate(candidate)?;
    let h = src.h.unwrap_or(file.config.verify.h);
    let end = problem
        .timescale()
        .next_member_at_or_after(problem.a() + window);
    let grid = problem.grid_past(end, h, &[])?;
    let stop = grid.index_of(end)?;
    let traj = Trajectory::from_path(&problem, &x, grid)?;
    let r = el_residual(&problem, &traj)?;
    let r = r.truncate(stop + 1);
    write_csv(&csv, &csv_of(&r).replacen(",x", ",r", r.dim()))?;
    let rows = rows_of(&r);
    Ok(json!({
        "command": "residual",
        "candidate": candidate,
        "window": [problem.a(), end],
        "h": h,
        "nodes": r.len(),
        "sup_norm": r.sup_norm(),
        "residuals": rows,
    }))
}

pub fn verify(src: &Source, candidate: &str) -> Outcome {
    let file = load(src)?;
    let problem = file.problem()?;
    let x = file.candidate(candidate)?;
    let competitors: Vec<_> = file
        .candidate_paths()?
        .into_iter()
        .filter(|(name, _)| name != candidate)
        .collect();
    let mut cfg = file.config.verify.clone();
    if let Some(h) = src.h {
        cfg.h = h;
    }
    let report = verify_candidate_with(&problem, &x, &competitors, &cfg)?;
    let expected = file.expected.get(candidate).copied();
    let v = json!({
        "command": "verify",
        "candidate": candidate,
        "expected": expected,
        "report": report,
    });
    if report.verdict == Verdict::Consistent {
        Ok(v)
    } else {
        Err(Failure::Flagged(v, 5))
    }
}

fn parse_terminal(s: &str, dim: usize) -> Result<Terminal, Failure> {
    if s == "free" {
        return Ok(Terminal::Free);
    }
    let vals = s
        .strip_prefix("pinned=")
        .ok_or_else(|| Failure::Input(format!("terminal must be free or pinned=V1,..., got '{s}'")))?;
    let v = vals
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Input(format!("bad pinned value: {e}")))?;
    if v.len() != dim {
        return Err(Failure::Lib(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        }));
    }
    Ok(Terminal::Pinned(v))
}

fn rows_of(f: &GridFunction) -> Vec<Value> {
    f.times()
        .iter()
        .enumerate()
        .map(|(i, t)| json!([t, f.value(i)]))
        .collect()
}

fn solution_json(s: &Solution) -> Value {
    let rows = rows_of(s.trajectory.x());
    json!({
        "command": "solve",
        "objective": s.objective,
        "converged": s.converged,
        "iterations": s.iterations,
        "grad_norm": s.grad_norm,
        "trajectory": rows,
    })
}

pub fn solve(
    src: &Source,
    horizon: f64,
    terminal: &str,
    seed: Option<u64>,
    csv: Option<PathBuf>,
) -> Outcome {
    let file = load(src)?;
    let problem = file.problem()?;
    let terminal = parse_terminal(terminal, problem.dim())?;
    let mut opts = file.config.solver;
    if let Some(s) = seed {
        opts.seed = s;
    }
    let h = src.h.unwrap_or(file.config.verify.h);
    match solve_truncated(&problem, horizon, &terminal, h, &opts) {
        Ok(s) => {
            write_csv(&csv, &csv_of(s.trajectory.x()))?;
            Ok(solution_json(&s))
        }
        Err(Error::MaxIterExceeded(s)) => {
            write_csv(&csv, &csv_of(s.trajectory.x()))?;
            Err(Failure::Flagged(solution_json(&s), 4))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn export(id: Option<String>, out: Option<PathBuf>) -> Outcome {
    let Some(id) = id else {
        let ids: Vec<Value> = problems::corpus()
            .into_iter()
            .map(|p| json!({ "id": p.id, "notes": p.notes }))
            .collect();
        return Ok(json!({ "command": "export", "problems": ids }));
    };
    let file = problems::find(&id)?.file;
    if let Some(p) = out {
        std::fs::write(&p, file.to_json())
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())))?;
        return Ok(json!({ "command": "export", "id": id, "written": p }));
    }
    Ok(serde_json::to_value(&file).expect("problem files serialize"))
}
