//! Built-in problems with known candidates and expected verdicts.
//!
//! | id             | scale                          | L                      |
//! |----------------|--------------------------------|------------------------|
//! | `ex-neg`       | `arith(0, 1)`                  | `(x^s - alpha)^2 + beta x^D` |
//! | `ex-neg-r`     | `ray(0)`                       | same                   |
//! | `ex-pos`       | `ray(0)`                       | `-sqrt(1 + (x^D)^2)`   |
//! | `ex-pos-mixed` | `union(interval(0,1), arith(2,1))` | same               |
//! | `lqr-z`        | `arith(0, 1)`                  | `-((x^D)^2 + (x^s)^2)` |
//! | `lqr-r`        | `ray(0)`                       | same                   |
//!
//! Every problem is built from a [`ProblemFile`], so it can be exported and
//! fed back to the command line tool.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::problem_file::{FileConfig, LagrangianSpec, ProblemFile, TimeScaleField};
use crate::timescale::TimeScale;
use crate::variational::{Path, Problem, Verdict};

#[derive(Clone, Debug)]
pub struct KnownCandidate {
    pub label: String,
    pub path: Path,
    pub expected: Verdict,
}

#[derive(Clone, Debug)]
pub struct NamedProblem {
    pub id: String,
    pub problem: Problem,
    pub known_candidates: Vec<KnownCandidate>,
    pub notes: String,
    pub file: ProblemFile,
}

impl NamedProblem {
    pub fn from_file(file: ProblemFile) -> Result<NamedProblem> {
        let problem = file.problem()?;
        let known_candidates = file
            .expected
            .iter()
            .map(|(label, verdict)| {
                Ok(KnownCandidate {
                    label: label.clone(),
                    path: file.candidate(label)?,
                    expected: *verdict,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NamedProblem {
            id: file.id.clone().unwrap_or_default(),
            problem,
            known_candidates,
            notes: file.notes.clone(),
            file,
        })
    }

    pub fn candidate(&self, label: &str) -> Option<&KnownCandidate> {
        self.known_candidates.iter().find(|c| c.label == label)
    }
}

/// Literal for an expression, parenthesized so signs compose.
fn lit(v: f64) -> String {
    format!("({v})")
}

struct Entry<'a> {
    id: &'a str,
    notes: String,
    ts: &'a TimeScale,
    x_a: f64,
    l: String,
    d2: String,
    d3: String,
    candidates: Vec<(&'a str, String, Verdict)>,
}

fn build(entry: Entry<'_>) -> NamedProblem {
    let mut candidates = BTreeMap::new();
    let mut expected = BTreeMap::new();
    for (label, expr, verdict) in entry.candidates {
        candidates.insert(label.to_string(), vec![expr]);
        expected.insert(label.to_string(), verdict);
    }
    let file = ProblemFile {
        id: Some(entry.id.to_string()),
        notes: entry.notes,
        timescale: TimeScaleField::Dsl(entry.ts.to_string()),
        a: Some(entry.ts.a()),
        x_a: vec![entry.x_a],
        lagrangian: LagrangianSpec {
            l: entry.l,
            d2: Some(vec![entry.d2]),
            d3: Some(vec![entry.d3]),
        },
        integrand: None,
        candidates,
        expected,
        config: FileConfig::default(),
    };
    NamedProblem::from_file(file).expect("built-in problems are valid")
}

/// `L = (x^sigma - alpha)^2 + beta x^Delta`, `x(a) = alpha`. The constant
/// `x = alpha` solves the Euler-Lagrange equation, but the transversality
/// term equals `beta alpha` at every horizon.
pub fn ex_neg(alpha: f64, beta: f64, ts: &TimeScale) -> NamedProblem {
    let (al, be) = (lit(alpha), lit(beta));
    build(Entry {
        id: "ex-neg",
        notes: format!(
            "alpha = {alpha}, beta = {beta}; the constant candidate satisfies Euler-Lagrange \
             but not transversality, and the difference quotients are unbounded in T"
        ),
        ts,
        x_a: alpha,
        l: format!("(u1 - {al})^2 + {be} * v1"),
        d2: format!("2 * (u1 - {al})"),
        d3: be.clone(),
        candidates: vec![("const", al, Verdict::ElFailsTransversality)],
    })
}

/// `L = -sqrt(1 + (x^Delta)^2)`, `x(a) = A`. The constant is the solution;
/// every line `alpha t + A` with `alpha != 0` solves Euler-Lagrange but
/// fails transversality and loses to the constant.
pub fn ex_pos(big_a: f64, ts: &TimeScale) -> NamedProblem {
    let a = lit(big_a);
    let t0 = lit(ts.a());
    build(Entry {
        id: "ex-pos",
        notes: format!("A = {big_a}; arc length, maximized by the constant path"),
        ts,
        x_a: big_a,
        l: "-sqrt(1 + v1^2)".into(),
        d2: "0".into(),
        d3: "-v1 / sqrt(1 + v1^2)".into(),
        candidates: vec![
            ("const", a.clone(), Verdict::Consistent),
            ("slope-0.5", format!("{a} + 0.5 * (t - {t0})"), Verdict::NotWeaklyMaximal),
            ("slope-1", format!("{a} + (t - {t0})"), Verdict::NotWeaklyMaximal),
        ],
    })
}

fn lqr(id: &str, ts: &TimeScale, candidate: String, notes: &str) -> NamedProblem {
    build(Entry {
        id,
        notes: notes.into(),
        ts,
        x_a: 1.0,
        l: "-(v1^2 + u1^2)".into(),
        d2: "-2 * u1".into(),
        d3: "-2 * v1".into(),
        candidates: vec![("decay", candidate, Verdict::Consistent)],
    })
}

/// `L = -((x^Delta)^2 + (x^sigma)^2)` on the non-negative integers. The
/// Euler-Lagrange equation is `x_{t+1} - 3 x_t + x_{t-1} = 0`; its decaying
/// solution is `r^t` with `r = (3 - sqrt 5) / 2`.
pub fn lqr_z() -> NamedProblem {
    lqr(
        "lqr-z",
        &TimeScale::naturals(),
        "((3 - sqrt(5)) / 2)^t".into(),
        "linear recurrence x(t+1) - 3 x(t) + x(t-1) = 0; truncations end with 2 x(T) = x(T-1)",
    )
}

/// The same Lagrangian on the half line: `x'' = x`, decaying branch `e^{-t}`.
pub fn lqr_r() -> NamedProblem {
    lqr(
        "lqr-r",
        &TimeScale::ray(0.0),
        "exp(-t)".into(),
        "x'' = x; truncations at T with free end solve x'(T) = 0: x = cosh(T - t) / cosh(T)",
    )
}

pub fn corpus() -> Vec<NamedProblem> {
    let mixed = TimeScale::parse("union(interval(0,1), arith(2,1))").expect("valid scale");
    let mut ex_neg_r = ex_neg(1.0, 1.0, &TimeScale::ray(0.0));
    rename(&mut ex_neg_r, "ex-neg-r");
    let mut ex_pos_mixed = ex_pos(1.0, &mixed);
    ex_pos_mixed.known_candidates.retain(|c| c.label == "const");
    ex_pos_mixed.file.candidates.retain(|k, _| k == "const");
    ex_pos_mixed.file.expected.retain(|k, _| k == "const");
    rename(&mut ex_pos_mixed, "ex-pos-mixed");
    vec![
        ex_neg(1.0, 1.0, &TimeScale::naturals()),
        ex_neg_r,
        ex_pos(1.0, &TimeScale::ray(0.0)),
        ex_pos_mixed,
        lqr_z(),
        lqr_r(),
    ]
}

fn rename(p: &mut NamedProblem, id: &str) {
    p.id = id.to_string();
    p.file.id = Some(id.to_string());
}

pub fn find(id: &str) -> Result<NamedProblem> {
    corpus().into_iter().find(|p| p.id == id).ok_or_else(|| {
        let ids: Vec<String> = corpus().into_iter().map(|p| p.id).collect();
        Error::InvalidProblem(format!("unknown problem '{id}' (known: {})", ids.join(", ")))
    })
}

/// The problem file of a corpus entry, as JSON.
pub fn export(id: &str) -> Result<String> {
    Ok(find(id)?.file.to_json())
}
