//! Task execution. Each task runs on its own resolved objects, so tasks are
//! independent of one another and of their order.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use leray::chains::{abel_sum, integrate, verify_residue_formula, VerifyOptions, DEFAULT_ORDER, DEFAULT_RADIUS, DEFAULT_TOLERANCE};
use leray::cr::{check_cr_form, check_cr_function, check_integrability, check_polar, Method, Report};
use leray::residue::{laurent_expand, reduce_pole, residue_class, residue_multi, ResidueResult};
use leray::{ZeroVerdict};

use crate::model::{Job, Overrides, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub task: &'static str,
    pub input: String,
    pub status: Status,
    pub summary: String,
    pub result: Value,
}

/// Effective numerical settings: task options, then command line, then
/// manifest `set`, then defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub radius: f64,
    pub order: usize,
    pub tolerance: f64,
}

impl Settings {
    pub fn layered(layers: &[&Overrides]) -> Settings {
        let pick = |f: &dyn Fn(&Overrides) -> Option<f64>, default: f64| {
            layers.iter().find_map(|o| f(o)).unwrap_or(default)
        };
        Settings {
            radius: pick(&|o| o.radius, DEFAULT_RADIUS),
            order: layers.iter().find_map(|o| o.order).unwrap_or(DEFAULT_ORDER),
            tolerance: pick(&|o| o.tolerance, DEFAULT_TOLERANCE),
        }
    }
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn verdict(v: ZeroVerdict) -> &'static str {
    match v {
        ZeroVerdict::Exact(true) => "exact-zero",
        ZeroVerdict::Exact(false) => "exact-nonzero",
        ZeroVerdict::Probable(true) => "probable-zero",
        ZeroVerdict::Probable(false) => "probable-nonzero",
        ZeroVerdict::Undecidable => "undecidable",
    }
}

fn method(m: Method) -> &'static str {
    match m {
        Method::Exact => "exact",
        Method::Sampled => "sampled",
    }
}

fn checks(r: &Report) -> Value {
    Value::Array(
        r.checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "pass": c.pass,
                    "method": method(c.method),
                    "detail": c.detail,
                    "witness": c.witness,
                })
            })
            .collect(),
    )
}

fn failed_checks(r: &Report) -> String {
    let names: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| if c.detail.is_empty() { c.name.clone() } else { format!("{} ({})", c.name, c.detail) })
        .collect();
    if names.is_empty() {
        "all checks pass".into()
    } else {
        format!("failed: {}", names.join("; "))
    }
}

fn residue_json(r: &ResidueResult) -> Value {
    json!({
        "form": r.form.show(),
        "ambient": r.ambient.show(),
        "closed_input": verdict(r.closed_input),
        "closed_output": verdict(r.closed_output),
        "cr_output": r.cr_output,
        "sign_convention": r.sign_convention,
    })
}

fn outcome(pass: bool, summary: String, result: Value) -> (Status, String, Value) {
    (if pass { Status::Pass } else { Status::Fail }, summary, result)
}

fn execute(job: &Job, s: Settings) -> leray::Result<(Status, String, Value)> {
    Ok(match job {
        Job::Integrability(chart) => {
            let r = check_integrability(chart)?;
            let pairs: Vec<Value> = r
                .pairs
                .iter()
                .map(|p| {
                    json!({
                        "pair": [p.i + 1, p.j + 1],
                        "bracket": p.bracket.show(),
                        "in_span": p.in_span,
                        "method": method(p.method),
                        "witness": p.witness,
                    })
                })
                .collect();
            let summary = match r.failures().next() {
                None => format!("integrable ({} pairs)", r.pairs.len()),
                Some(p) => format!("not integrable: [L{}, L{}] = {}", p.i + 1, p.j + 1, p.bracket.show()),
            };
            outcome(r.integrable(), summary, json!({ "integrable": r.integrable(), "pairs": pairs }))
        }
        Job::CrFunction(chart, f) => {
            let r = check_cr_function(chart, f)?;
            outcome(r.pass(), failed_checks(&r), json!({ "pass": r.pass(), "checks": checks(&r) }))
        }
        Job::CrForm(chart, a) => {
            let r = check_cr_form(chart, a, a.degree())?;
            outcome(r.pass(), failed_checks(&r), json!({ "pass": r.pass(), "checks": checks(&r) }))
        }
        Job::Polar(sub) => {
            let r = check_polar(sub)?;
            outcome(r.pass(), failed_checks(&r), json!({ "pass": r.pass(), "checks": checks(&r) }))
        }
        Job::Closed(phi) => {
            let v = phi.closedness()?;
            outcome(v.is_zero(), format!("closedness: {}", verdict(v)), json!({ "closed": verdict(v) }))
        }
        Job::Residue(phi) => {
            let r = residue_class(phi)?;
            let pass = r.closed_output.is_zero();
            outcome(pass, format!("Res = {}", r.form.show()), residue_json(&r))
        }
        Job::Reduce(phi) => {
            let p = reduce_pole(phi)?;
            let identity = p.identity_numerator(phi)?.vanishes();
            let result = json!({
                "reduced": { "numerator": p.reduced.omega.show(), "order": p.reduced.divisors[0].order },
                "rho": { "numerator": p.rho.omega.show(), "order": p.rho.divisors[0].order },
                "identity": verdict(identity),
            });
            outcome(
                identity.is_zero(),
                format!("order {} -> {}, identity {}", phi.divisors[0].order, p.reduced.divisors[0].order, verdict(identity)),
                result,
            )
        }
        Job::Laurent(phi) => {
            let l = laurent_expand(phi)?;
            let principal: Vec<Value> = l
                .principal
                .iter()
                .map(|(k, f)| json!({ "order": k, "coefficient": f.show() }))
                .collect();
            let result = json!({
                "principal": principal,
                "simple_part": l.simple_part.show(),
                "steps": l.steps.len(),
                "reconstruction": verdict(l.reconstruction),
            });
            outcome(
                l.reconstruction.is_zero(),
                format!("{} principal terms, reconstruction {}", l.principal.len(), verdict(l.reconstruction)),
                result,
            )
        }
        Job::ResidueMulti(phi, locus) => {
            let r = residue_multi(phi, locus)?;
            let pass = r.closed_output.is_zero();
            outcome(pass, format!("Res = {}", r.form.show()), residue_json(&r))
        }
        Job::Integrate(form, chain) => {
            let v = integrate(chain, form, s.order)?;
            outcome(true, format!("{:.12} {:+.12}i", v.re, v.im), json!({ "value": complex(v), "order": s.order }))
        }
        Job::Verify(phi, chain, locus) => {
            let opts = VerifyOptions {
                radius: s.radius,
                order: s.order,
                tolerance: s.tolerance,
            };
            let r = verify_residue_formula(phi, chain, opts, locus.as_ref())?;
            let result = json!({
                "lhs": complex(r.lhs),
                "rhs": complex(r.rhs),
                "abs_error": r.abs_error,
                "tolerance": r.tolerance,
                "residue": r.residue.show(),
                "radius": s.radius,
                "order": s.order,
            });
            outcome(r.pass, format!("|lhs - rhs| = {:.3e} (tol {:.1e})", r.abs_error, r.tolerance), result)
        }
        Job::Abel(phi, comps, certified) => {
            let r = abel_sum(phi, comps, s.order, s.tolerance, *certified)?;
            let result = json!({
                "terms": r.terms.iter().copied().map(complex).collect::<Vec<_>>(),
                "sum": complex(r.sum),
                "tolerance": r.tolerance,
                "order": s.order,
            });
            outcome(r.pass, format!("|sum| = {:.3e} (tol {:.1e})", r.sum.norm(), r.tolerance), result)
        }
    })
}

pub fn run_task(index: usize, task: &Task, base: &[&Overrides]) -> TaskReport {
    let mut layers = vec![&task.options];
    layers.extend_from_slice(base);
    let settings = Settings::layered(&layers);
    let (status, summary, result) = match execute(&task.job, settings) {
        Ok(r) => r,
        Err(e) => (Status::Error, e.to_string(), json!({ "error": e.to_string() })),
    };
    TaskReport {
        index,
        task: task.label,
        input: task.text.clone(),
        status,
        summary,
        result,
    }
}
