//! JSON problem files: the time scale, the Lagrangian as expressions in
//! `t, u1..un, v1..vn`, named candidate paths in `t`, and run settings.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::ImproperConfig;
use crate::error::{Error, Result};
use crate::expr::{lagrangian_vars, Expr};
use crate::timescale::{Segment, TimeScale};
use crate::variational::{
    Lagrangian, PartialFn, Path, Problem, SolverOptions, Verdict, VerifyConfig,
};

/// The time scale, either as DSL text or as a list of segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeScaleField {
    Dsl(String),
    Segments(Vec<Segment>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianSpec {
    #[serde(rename = "L")]
    pub l: String,
    /// One expression per component of `d2 L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d3: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub verify: VerifyConfig,
    pub solver: SolverOptions,
    pub improper: ImproperConfig,
    /// Horizons for improper integrals; `None` uses `a + 10, a + 20, ..., a + 100`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    pub timescale: TimeScaleField,
    /// Must equal the left endpoint of the time scale when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    pub x_a: Vec<f64>,
    pub lagrangian: LagrangianSpec,
    /// Scalar integrand in `t` for the `integrate` command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrand: Option<String>,
    /// Candidate paths: one expression in `t` per component.
    #[serde(default)]
    pub candidates: BTreeMap<String, Vec<String>>,
    /// Expected verdicts of known candidates.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expected: BTreeMap<String, Verdict>,
    #[serde(default)]
    pub config: FileConfig,
}

fn compile_all(exprs: &[String], vars: &[&str], n: usize, what: &str) -> Result<Vec<Expr>> {
    if exprs.len() != n {
        return Err(Error::InvalidProblem(format!(
            "{what}: expected {n} expression(s), got {}",
            exprs.len()
        )));
    }
    exprs.iter().map(|s| Expr::parse(s, vars)).collect()
}

impl ProblemFile {
    pub fn from_json(src: &str) -> Result<ProblemFile> {
        serde_json::from_str(src).map_err(|e| Error::Parse {
            pos: e.column(),
            msg: format!("line {}: {e}", e.line()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    pub fn dim(&self) -> usize {
        self.x_a.len()
    }

    pub fn timescale(&self) -> Result<TimeScale> {
        let ts = match &self.timescale {
            TimeScaleField::Dsl(s) => TimeScale::parse(s)?,
            TimeScaleField::Segments(segs) => TimeScale::new(segs.clone())?,
        };
        if let Some(a) = self.a {
            if (a - ts.a()).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::InvalidProblem(format!(
                    "a = {a} is not the left endpoint {} of the time scale",
                    ts.a()
                )));
            }
        }
        Ok(ts)
    }

    pub fn lagrangian(&self) -> Result<Lagrangian> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidProblem("x_a must not be empty".into()));
        }
        let names = lagrangian_vars(n);
        let vars: Vec<&str> = names.iter().map(String::as_str).collect();
        let l = Arc::new(Expr::parse(&self.lagrangian.l, &vars)?);
        let partial = |exprs: &Option<Vec<String>>, what: &str| -> Result<Option<Arc<PartialFn>>> {
            let Some(exprs) = exprs else { return Ok(None) };
            let compiled = compile_all(exprs, &vars, n, what)?;
            let f: Arc<PartialFn> = Arc::new(move |t, u, v, out| {
                let args = pack(t, u, v);
                for (o, e) in out.iter_mut().zip(&compiled) {
                    *o = e.eval(&args);
                }
            });
            Ok(Some(f))
        };
        let d2 = partial(&self.lagrangian.d2, "d2")?;
        let d3 = partial(&self.lagrangian.d3, "d3")?;
        let eval = l.clone();
        Lagrangian::new(n, move |t, u, v| eval.eval(&pack(t, u, v))).with_partials(d2, d3)
    }

    /// Builds the problem and checks that `L(a, x_a, 0)` is finite.
    pub fn problem(&self) -> Result<Problem> {
        let ts = self.timescale()?;
        let l = self.lagrangian()?;
        let zero = vec![0.0; self.dim()];
        let v = l.eval(ts.a(), &self.x_a, &zero);
        if !v.is_finite() {
            return Err(Error::NonFinite(ts.a()));
        }
        Problem::new(ts, self.x_a.clone(), l)
    }

    pub fn candidate(&self, name: &str) -> Result<Path> {
        let exprs = self.candidates.get(name).ok_or_else(|| {
            Error::InvalidProblem(format!(
                "unknown candidate '{name}' (known: {})",
                self.candidates.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })?;
        let compiled = compile_all(exprs, &["t"], self.dim(), name)?;
        Ok(Path::new(self.dim(), move |t, out| {
            for (o, e) in out.iter_mut().zip(&compiled) {
                *o = e.eval(&[t]);
            }
        }))
    }

    /// All candidates, in name order.
    pub fn candidate_paths(&self) -> Result<Vec<(String, Path)>> {
        self.candidates
            .keys()
            .map(|k| Ok((k.clone(), self.candidate(k)?)))
            .collect()
    }

    pub fn integrand(&self) -> Result<Option<Expr>> {
        self.integrand
            .as_deref()
            .map(|s| Expr::parse(s, &["t"]))
            .transpose()
    }
}

fn pack(t: f64, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut args = Vec::with_capacity(1 + u.len() + v.len());
    args.push(t);
    args.extend_from_slice(u);
    args.extend_from_slice(v);
    args
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = r#"{
        "timescale": "union(interval(0,1), arith(2,1))",
        "x_a": [1.0],
        "lagrangian": { "L": "-sqrt(1 + v1^2)", "d3": ["-v1 / sqrt(1 + v1^2)"] },
        "candidates": { "flat": ["1"], "line": ["1 + t / 2"] }
    }"#;

    #[test]
    fn parses_and_builds() {
        let f = ProblemFile::from_json(SRC).unwrap();
        let p = f.problem().unwrap();
        assert_eq!(p.a(), 0.0);
        assert_eq!(p.lagrangian().has_analytic_partials(), (false, true));
        let line = f.candidate("line").unwrap();
        assert_eq!(line.eval(2.0), vec![2.0]);
        assert!(f.candidate("nope").is_err());
    }

    #[test]
    fn round_trips() {
        let f = ProblemFile::from_json(SRC).unwrap();
        let g = ProblemFile::from_json(&f.to_json()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn structured_timescale() {
        let src = r#"{
            "timescale": [{"kind": "points", "points": [0, 0.5]}, {"kind": "ray", "start": 1}],
            "x_a": [0], "lagrangian": { "L": "u1" }
        }"#;
        let ts = ProblemFile::from_json(src).unwrap().timescale().unwrap();
        assert_eq!(ts.to_string(), "union(points(0, 0.5), ray(1))");
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(ProblemFile::from_json("{"), Err(Error::Parse { .. })));
        let mut f = ProblemFile::from_json(SRC).unwrap();
        f.lagrangian.l = "u2".into();
        assert!(matches!(f.problem(), Err(Error::Parse { .. })));
        f.lagrangian.l = "-v1".into();
        f.lagrangian.d3 = Some(vec!["1".into()]);
        assert!(matches!(f.problem(), Err(Error::PartialsMismatch { .. })));
        f.lagrangian.d3 = None;
        f.a = Some(3.0);
        assert!(matches!(f.problem(), Err(Error::InvalidProblem(_))));
    }
}
