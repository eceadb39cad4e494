//! CSV and JSON emitters. Reals are written with 17 significant digits so that
//! every value parses back to the same `f64` and re-emits to the same text.

use std::str::FromStr;

use serde_json::{json, Map, Number, Value};

use crate::harness::{RateStudy, ReferenceSpec, StabilityReport};
use crate::oracles::{Method, ProjectionResult};
use crate::solver::{AuditReport, Trajectory};
use crate::Vector;

/// Scientific notation with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number carrying [`fmt_real`] text; non-finite values become `null`.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&fmt_real(x)).expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(real).collect())
}

fn vector(v: &Vector) -> Value {
    reals(v.as_slice())
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::Auto => "auto",
        Method::Exact => "exact",
        Method::FrankWolfe => "frank-wolfe",
        Method::CuttingPlane => "cutting-plane",
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

pub fn projection_json(r: &ProjectionResult) -> Value {
    json!({
        "point": vector(&r.point),
        "certified_eps": real(r.certified_eps),
        "iterations": r.iterations,
        "converged": r.converged,
        "method": method_name(r.method),
    })
}

/// Trajectory table: one row per node. Row `k > 0` carries the certificate and
/// budget of the step that produced `x_k`; row 0 carries zeros.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let d = traj.nodes.first().map_or(0, |x| x.len());
    let mut out = String::from("k,t");
    for i in 0..d {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",certified_eps,budget\n");
    for (k, x) in traj.nodes.iter().enumerate() {
        let (cert, budget) = if k == 0 { (0.0, 0.0) } else { (traj.steps[k - 1].certified_eps, traj.steps[k - 1].budget) };
        out.push_str(&format!("{k},{}", fmt_real(traj.grid.node(k))));
        for c in x.iter() {
            out.push(',');
            out.push_str(&fmt_real(*c));
        }
        out.push_str(&format!(",{},{}\n", fmt_real(cert), fmt_real(budget)));
    }
    out
}

pub fn audit_json(report: &AuditReport) -> Value {
    let c = &report.constants;
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|b| {
            json!({
                "name": b.name,
                "samples": b.samples,
                "violations": b.violations,
                "worst_margin": real(b.worst_margin),
                "worst_ratio": real(b.worst_ratio),
                "passed": b.passed(),
            })
        })
        .collect();
    json!({
        "passed": report.passed(),
        "complete": report.complete,
        "failed_cells": report.failed_cells,
        "constants": {
            "l_c": real(c.l_c), "l_h": real(c.l_h), "h0": real(c.h0),
            "sqrt_gamma": real(c.sqrt_gamma), "c_frak": real(c.c_frak),
            "k1": real(c.k1), "k2": real(c.k2), "k3": real(c.k3),
            "k4": real(c.k4), "k5": real(c.k5), "k6": real(c.k6),
        },
        "checks": checks,
    })
}

/// Full trajectory diagnostics.
pub fn trajectory_json(problem: &str, traj: &Trajectory, audit: Option<&AuditReport>, error: Option<&str>) -> Value {
    let steps: Vec<Value> = traj
        .steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            json!({
                "k": k,
                "predictor": vector(&s.predictor),
                "predictor_distance": real(s.predictor_distance),
                "certified_eps": real(s.certified_eps),
                "iterations": s.iterations,
                "budget": real(s.budget),
                "h_xk": real(s.h_xk),
                "failed": s.failed,
                "integral": vector(&traj.integrals[k]),
            })
        })
        .collect();
    let nodes: Vec<Value> = traj.nodes.iter().map(vector).collect();
    let mut m = Map::new();
    m.insert("problem".into(), json!(problem));
    m.insert(
        "grid".into(),
        json!({ "horizon": real(traj.grid.horizon()), "n": traj.grid.n(), "mu": real(traj.grid.mu()) }),
    );
    m.insert("schedule".into(), json!({ "c": real(traj.schedule.c()), "p": real(traj.schedule.p()) }));
    m.insert("eps".into(), real(traj.eps));
    m.insert("complete".into(), json!(traj.is_complete()));
    m.insert("nodes".into(), Value::Array(nodes));
    m.insert("steps".into(), Value::Array(steps));
    m.insert("audit".into(), audit.map_or(Value::Null, audit_json));
    m.insert("error".into(), error.map_or(Value::Null, |e| json!(e)));
    Value::Object(m)
}

pub fn rate_csv(study: &RateStudy) -> String {
    let mut out = String::from("n,mu,eps,error\n");
    for e in &study.entries {
        out.push_str(&format!("{},{},{},{}\n", e.n, fmt_real(e.mu), fmt_real(e.eps), fmt_real(e.error)));
    }
    out
}

pub fn rate_json(study: &RateStudy) -> Value {
    let reference = match study.reference {
        ReferenceSpec::ClosedForm => json!({ "kind": "closed-form" }),
        ReferenceSpec::FineGrid { n_ref } => json!({ "kind": "fine-grid", "n_ref": n_ref }),
    };
    let gate = study.reference_gate.as_ref().map_or(Value::Null, |g| {
        json!({ "n_ref": g.n_ref, "deviation": real(g.deviation), "bound": real(g.bound), "passed": g.passed })
    });
    json!({
        "problem": study.problem.as_str(),
        "method": method_name(study.method),
        "schedule": { "c": real(study.schedule.c()), "p": real(study.schedule.p()) },
        "reference": reference,
        "ladder": study.entries.iter().map(|e| e.n).collect::<Vec<_>>(),
        "errors": reals(&study.entries.iter().map(|e| e.error).collect::<Vec<_>>()),
        "slope": study.slope.map_or(Value::Null, real),
        "ratios": reals(&study.ratios),
        "exact": study.exact,
        "strictly_decreasing": study.strictly_decreasing,
        "slope_ok": study.slope_ok(),
        "monotone_ok": study.monotone_ok(),
        "reference_gate": gate,
        "passed": study.passed(),
    })
}

pub fn stability_json(r: &StabilityReport) -> Value {
    json!({
        "target": vector(&r.target),
        "errors": reals(&r.errors),
        "final_error": real(r.final_error),
        "within_noise_band": r.within_noise_band,
        "converged": r.converged,
        "passed": r.passed(),
    })
}

/// A parsed CSV table: integer columns stay integers, everything else is real.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
}

impl Table {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().ok_or("empty table")?.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|f| {
                    if f.contains(['e', '.', 'N', 'i']) {
                        f.parse::<f64>().map(Cell::Real).map_err(|e| format!("row {i}: `{f}`: {e}"))
                    } else {
                        f.parse::<u64>().map(Cell::Int).map_err(|e| format!("row {i}: `{f}`: {e}"))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != header.len() {
                return Err(format!("row {i} has {} fields, header has {}", row.len(), header.len()));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn emit(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(k) => k.to_string(),
                    Cell::Real(x) => fmt_real(*x),
                })
                .collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[j] {
                    Cell::Int(k) => k as f64,
                    Cell::Real(x) => x,
                })
                .collect(),
        )
    }
}
