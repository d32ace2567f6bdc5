//! Check catalog, dependency-ordered execution, report files and sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{Scenario, ScenarioConfig};
use crate::almost_contact::{estimate_alpha_beta, validate_structure};
use crate::error::{GeomError, Result};
use crate::immersion::semi_slant_check;
use crate::report::{CheckReport, RecordKind, ResidualRecord, Residuals};
use crate::sampling::Sampler;
use crate::theorems::{
    check_gauss_suite_ordered, check_inequality_41, check_inequality_51, check_lemma32, check_lemma51, check_theorem31,
    check_theorem32, slant_coefficient, Tolerances,
};
use crate::warped::{certify_warped, verify_corollary31, verify_lemma31_on, xi_in_nt, FactorLayout, WarpedScenario};

/// Every check, in dependency order.
pub const CHECKS: [&str; 13] = [
    "validate_structure",
    "alpha_beta",
    "certify_warped",
    "semi_slant_check",
    "gauss_suite",
    "lemma_3_1",
    "corollary_3_1",
    "lemma_3_2",
    "theorem_3_1",
    "theorem_3_2",
    "inequality_4_1",
    "lemma_5_1",
    "inequality_5_1",
];

const XI_RECORD: &str = "xi tangent to N_T";
const TYPE_TOL: f64 = 1e-6;
const ANGLE_TOL: f64 = 1e-9;

pub fn check_names() -> &'static [&'static str] {
    &CHECKS
}

/// Checks whose failure or skip blocks `name`.
fn gates(name: &str) -> &'static [&'static str] {
    match name {
        "validate_structure" => &[],
        "alpha_beta" | "certify_warped" | "semi_slant_check" | "gauss_suite" | "theorem_3_1" | "theorem_3_2" => {
            &["validate_structure"]
        }
        "lemma_3_1" | "corollary_3_1" => &["validate_structure", "certify_warped"],
        _ => &["validate_structure", "certify_warped", "semi_slant_check"],
    }
}

/// Checks that must have run before `name`, gating or not.
fn prerequisites(name: &str) -> Vec<&'static str> {
    let mut p = gates(name).to_vec();
    if matches!(name, "theorem_3_1" | "theorem_3_2") {
        p.push("certify_warped");
    }
    p
}

/// Per-run overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol_identity: Option<f64>,
    pub tol_inequality: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.samples {
            if n == 0 {
                return Err(GeomError::Validation("--samples must be positive".into()));
            }
            cfg.count = n;
        }
        for (v, slot, flag) in [
            (self.tol_identity, &mut cfg.tolerances.identity, "--tol-identity"),
            (self.tol_inequality, &mut cfg.tolerances.inequality, "--tol-ineq"),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(GeomError::Validation(format!("{flag} must be finite and non-negative")));
                }
                *slot = v;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub report: CheckReport,
}

impl Outcome {
    fn finished(mut report: CheckReport) -> Self {
        let status = if report.pass { Status::Pass } else { Status::Fail };
        report.meta("status", status_name(status));
        Outcome { status, report }
    }

    fn skipped(name: &str, reason: impl Into<String>) -> Self {
        let mut report = CheckReport::new(name);
        report.push(ResidualRecord::skipped(name, reason));
        report.meta("status", "skipped");
        Outcome { status: Status::Skipped, report }
    }

    fn error(name: &str, e: &GeomError) -> Self {
        let mut report = CheckReport::new(name);
        report.pass = false;
        report.meta("status", "error");
        report.meta("error", e.to_string());
        Outcome { status: Status::Error, report }
    }

    fn reason(&self) -> String {
        match self.report.records.first() {
            Some(r) if r.kind == RecordKind::Skipped => r.note.clone().unwrap_or_default(),
            _ => String::new(),
        }
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Skipped => "skipped",
        Status::Error => "error",
    }
}

/// 0 if everything passed or was skipped, 2 on any error, else 1.
pub fn exit_code(outcomes: &[Outcome]) -> i32 {
    if outcomes.iter().any(|o| o.status == Status::Error) {
        2
    } else if outcomes.iter().any(|o| o.status == Status::Fail) {
        1
    } else {
        0
    }
}

/// Requested names plus prerequisites, in catalog order. `all` selects everything.
pub fn select(requested: &[String]) -> Result<Vec<&'static str>> {
    if let Some(bad) = requested.iter().find(|r| r.as_str() != "all" && !CHECKS.contains(&r.as_str())) {
        return Err(GeomError::Validation(format!("unknown check `{bad}` (known: all, {})", CHECKS.join(", "))));
    }
    if requested.is_empty() || requested.iter().any(|r| r == "all") {
        return Ok(CHECKS.to_vec());
    }
    let mut wanted: Vec<&str> = Vec::new();
    for r in requested {
        let name = CHECKS.iter().find(|c| **c == r.as_str()).copied().expect("validated above");
        wanted.extend(prerequisites(name));
        wanted.push(name);
    }
    Ok(CHECKS.iter().copied().filter(|c| wanted.contains(c)).collect())
}

/// Seed of check `name`, independent of which other checks run.
fn check_seed(seed: u64, name: &str) -> u64 {
    let k = CHECKS.iter().position(|c| *c == name).unwrap_or(CHECKS.len()) as u64 + 1;
    seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Context<'a> {
    scn: &'a Scenario,
    tol: Tolerances,
    count: usize,
    seed: u64,
    approximate: bool,
    xi_in_nt: Option<bool>,
    certified: Option<bool>,
}

impl Context<'_> {
    fn sampler(&self, name: &str) -> Sampler {
        Sampler::new(check_seed(self.seed, name))
    }

    fn warped(&self) -> std::result::Result<&WarpedScenario, String> {
        self.scn.warped.as_ref().ok_or_else(|| "scenario declares no [factors] section".to_string())
    }

    /// `Err(reason)` when the check's hypotheses do not match the scenario.
    fn applicable(&self, name: &str) -> std::result::Result<(), String> {
        match name {
            "validate_structure" | "alpha_beta" | "gauss_suite" => Ok(()),
            "certify_warped" => self.warped().map(|_| ()),
            "lemma_3_1" | "corollary_3_1" => {
                self.warped()?;
                self.require_certified()
            }
            "semi_slant_check" => {
                if self.scn.has_splits {
                    Ok(())
                } else {
                    Err("scenario declares no [splits] section".into())
                }
            }
            "theorem_3_1" => {
                let w = self.warped()?;
                if w.layout != FactorLayout::InvariantFirst {
                    return Err("needs the invariant-first layout N_T x_f N_theta".into());
                }
                if self.xi_in_nt == Some(true) {
                    return Err("xi is tangent to N_T, so the hypothesis xi tangent to N_theta does not hold".into());
                }
                Ok(())
            }
            "theorem_3_2" => {
                let w = self.warped()?;
                if w.layout != FactorLayout::SlantFirst {
                    return Err("needs the slant-first layout N_theta x_f N_T".into());
                }
                Ok(())
            }
            _ => {
                let w = self.warped()?;
                if w.layout != FactorLayout::InvariantFirst {
                    return Err("needs the invariant-first layout N_T x_f N_theta".into());
                }
                self.require_certified()?;
                if self.xi_in_nt != Some(true) {
                    return Err("xi is not tangent to N_T".into());
                }
                if name == "lemma_3_2" && self.approximate {
                    return Err("approximate scenario: the identities assume an exact semi-slant warped product".into());
                }
                Ok(())
            }
        }
    }

    fn require_certified(&self) -> std::result::Result<(), String> {
        match self.certified {
            Some(false) => Err("candidate scenario is not a certified warped product".into()),
            _ => Ok(()),
        }
    }

    fn execute(&mut self, name: &str) -> Result<CheckReport> {
        let scn = self.scn;
        let mut sampler = self.sampler(name);
        let (count, tol) = (self.count, self.tol);
        let warped = || scn.warped.as_ref().ok_or(GeomError::MissingSplit("factors"));
        match name {
            "validate_structure" => validate_structure(&scn.ambient, &mut sampler, count, tol.identity),
            "alpha_beta" => {
                let est = estimate_alpha_beta(&scn.ambient, &mut sampler, count)?;
                let mut report = CheckReport::new("alpha_beta");
                report.meta("alpha", est.alpha);
                report.meta("beta", est.beta);
                report.meta("samples", est.samples);
                let mut fit = Residuals::new();
                fit.push(est.residual);
                report.push(fit.identity("post-fit nearly trans-Sasakian defect", tol.inequality));
                if let Some((a, b)) = scn.declared_type {
                    let mut d = Residuals::new();
                    d.extend([est.alpha - a, est.beta - b]);
                    report.push(d.identity("fitted (alpha, beta) = declared type", TYPE_TOL));
                    report.meta("declared_alpha", a);
                    report.meta("declared_beta", b);
                }
                Ok(report)
            }
            "certify_warped" => {
                let w = warped()?;
                let points = w.points(&mut sampler, count);
                let mut report = certify_warped(w, &points, tol.identity)?;
                self.xi_in_nt = Some(xi_in_nt(&report));
                report.demote(XI_RECORD, "routing: selects the N_T checks or the obstruction checks");
                self.certified = Some(report.pass);
                if scn.candidate {
                    let failed: Vec<String> = report.failures().iter().map(|r| r.label.clone()).collect();
                    for label in failed {
                        report.demote(&label, "obstruction candidate: not being a warped product is the expected outcome");
                    }
                    report.meta("candidate", true);
                }
                Ok(report)
            }
            "semi_slant_check" => {
                let points = sampler.points(&scn.immersion.sample_box, count);
                let mut report = semi_slant_check(&scn.ambient, &scn.immersion, &points, tol.identity)?;
                if let (Some(declared), Some(Value::Number(found))) = (scn.theta, report.metadata.get("theta").cloned()) {
                    let mut r = Residuals::new();
                    r.push(found.as_f64().unwrap_or(f64::NAN) - declared);
                    report.push(r.identity("recovered theta = declared theta", ANGLE_TOL));
                }
                if self.approximate {
                    let failed: Vec<String> = report.failures().iter().map(|r| r.label.clone()).collect();
                    for label in failed {
                        report.demote(&label, "approximate scenario: the splits are not exactly semi-slant");
                    }
                }
                Ok(report)
            }
            "gauss_suite" => {
                let points = sampler.points(&scn.immersion.sample_box, count);
                check_gauss_suite_ordered(&scn.ambient.metric, &scn.immersion, &points, tol.identity, scn.frame_order.as_deref())
            }
            "lemma_3_1" => verify_lemma31_on(warped()?, &mut sampler, count, tol.identity),
            "corollary_3_1" => verify_corollary31(warped()?, &mut sampler, count, tol.identity),
            "lemma_3_2" => check_lemma32(warped()?, &mut sampler, count, &tol),
            "theorem_3_1" => check_theorem31(warped()?, &mut sampler, count, &tol),
            "theorem_3_2" => check_theorem32(warped()?, &mut sampler, count, &tol),
            "inequality_4_1" => check_inequality_41(warped()?, &mut sampler, count, &tol),
            "lemma_5_1" => check_lemma51(warped()?, &mut sampler, count, &tol),
            "inequality_5_1" => check_inequality_51(warped()?, &mut sampler, count, &tol),
            other => Err(GeomError::Validation(format!("unknown check `{other}`"))),
        }
    }
}

/// Run `names` (already selected and ordered) on a built scenario.
pub fn run_checks(cfg: &ScenarioConfig, scn: &Scenario, names: &[&str]) -> Vec<Outcome> {
    let approximate = scn.warped.as_ref().is_some_and(|w| w.approximate);
    let mut ctx = Context { scn, tol: cfg.tolerances, count: cfg.count, seed: cfg.seed, approximate, xi_in_nt: None, certified: None };
    let mut done: BTreeMap<&str, Outcome> = BTreeMap::new();
    let mut order = Vec::new();
    for &name in names {
        let blocked = gates(name).iter().find_map(|g| match done.get(g) {
            Some(o) if o.status == Status::Skipped => Some(format!("prerequisite `{g}` was skipped: {}", o.reason())),
            Some(o) if o.status != Status::Pass => Some(format!("prerequisite `{g}` did not pass")),
            _ => None,
        });
        let outcome = if let Some(reason) = blocked {
            Outcome::skipped(name, reason)
        } else if let Err(reason) = ctx.applicable(name) {
            Outcome::skipped(name, reason)
        } else {
            match ctx.execute(name) {
                Ok(report) => Outcome::finished(report),
                Err(GeomError::MissingXi(msg)) => Outcome::skipped(name, msg),
                Err(e) => Outcome::error(name, &e),
            }
        };
        done.insert(name, outcome);
        order.push(name);
    }
    order.into_iter().map(|n| done.remove(n).expect("recorded")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn provenance(command: &str, cfg: &ScenarioConfig, config_bytes: &[u8]) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("engine".into(), json!("warpgeom"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("config_sha256".into(), json!(sha256_hex(config_bytes)));
    m.insert("scenario".into(), json!(cfg.name));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("samples".into(), json!(cfg.count));
    m.insert("tolerances".into(), json!({"identity": cfg.tolerances.identity, "inequality": cfg.tolerances.inequality}));
    m
}

/// Machine report for a check run.
pub fn check_report_json(command: &str, cfg: &ScenarioConfig, config_bytes: &[u8], outcomes: &[Outcome]) -> Value {
    let mut m = provenance(command, cfg, config_bytes);
    m.insert("exit_code".into(), json!(exit_code(outcomes)));
    m.insert("checks".into(), Value::Array(outcomes.iter().map(|o| json!(o.report)).collect()));
    Value::Object(m)
}

pub fn write_report(out: &Path, report: &Value) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(out).map_err(|e| GeomError::Validation(format!("{}: {e}", out.display())))?;
    let path = out.join("report.json");
    let mut text = serde_json::to_string_pretty(report).map_err(|e| GeomError::Validation(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| GeomError::Validation(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// The record that decides a check's line in the table: the first counted
/// failure, else the counted record with the largest residual.
fn headline(report: &CheckReport) -> Option<&ResidualRecord> {
    report.failures().first().copied().or_else(|| {
        report.records.iter().filter(|r| r.counts()).max_by(|a, b| a.max_residual.total_cmp(&b.max_residual))
    })
}

/// Human-readable summary of a run.
pub fn table(outcomes: &[Outcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<20} {:<8} {:>12} {:>10}  detail", "check", "status", "max resid", "tol");
    for o in outcomes {
        let r = &o.report;
        let status = status_name(o.status);
        match o.status {
            Status::Skipped => {
                let _ = writeln!(s, "{:<20} {:<8} {:>12} {:>10}  {}", r.name, status, "-", "-", o.reason());
            }
            Status::Error => {
                let msg = r.metadata.get("error").and_then(Value::as_str).unwrap_or("");
                let _ = writeln!(s, "{:<20} {:<8} {:>12} {:>10}  {msg}", r.name, status, "-", "-");
            }
            _ => {
                let (resid, tol, label) = match headline(r) {
                    Some(h) => (format!("{:.3e}", h.max_residual), format!("{:.0e}", h.tolerance), h.label.as_str()),
                    None => ("-".into(), "-".into(), "diagnostics only"),
                };
                let _ = writeln!(s, "{:<20} {:<8} {:>12} {:>10}  {label}", r.name, status, resid, tol);
                if let (Some(m), Some(t)) = (r.min_margin(), r.inequality_tolerance) {
                    let _ = writeln!(s, "{:<20} {:<8} {:>12} {:>10}  min margin lhs - rhs", "", "", format!("{m:.3e}"), format!("{t:.0e}"));
                }
                if o.status == Status::Fail {
                    for f in r.failures() {
                        let _ = writeln!(s, "    FAILED {}: {:.3e} > {:.0e}", f.label, f.max_residual, f.tolerance);
                    }
                    if let (Some(m), Some(t)) = (r.min_margin(), r.inequality_tolerance) {
                        if m < -t {
                            let _ = writeln!(s, "    FAILED inequality margin: {m:.3e} < -{t:.0e}");
                        }
                    }
                }
            }
        }
    }
    let _ = writeln!(s, "exit code {}", exit_code(outcomes));
    s
}

/// Swept quantities and the scenario parameter each one sets.
pub const SWEEP_PARAMETERS: [(&str, &str); 3] = [("theta", "theta"), ("warping-scale", "scale"), ("epsilon-perturbation", "epsilon")];

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    /// `(2/9)cot²θ + 2csc²θ` at the row's angle.
    pub coefficient: Option<f64>,
    pub exit_code: i32,
    pub min_margin_4_1: Option<f64>,
    pub min_margin_5_1: Option<f64>,
    pub checks: Vec<CheckReport>,
}

pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub notes: Vec<String>,
    pub exit_code: i32,
}

/// Rerun the selected checks once per value, each with the configured seed.
pub fn sweep(cfg: &ScenarioConfig, parameter: &str, values: &[f64], names: &[&str]) -> Result<SweepOutput> {
    let key = SWEEP_PARAMETERS
        .iter()
        .find(|(p, _)| *p == parameter)
        .map(|(_, k)| *k)
        .ok_or_else(|| {
            let known: Vec<&str> = SWEEP_PARAMETERS.iter().map(|p| p.0).collect();
            GeomError::Validation(format!("unknown sweep parameter `{parameter}` (known: {})", known.join(", ")))
        })?;
    if values.is_empty() {
        return Err(GeomError::Validation("sweep needs at least one value".into()));
    }
    let mut configs = Vec::with_capacity(values.len());
    for &v in values {
        if !v.is_finite() {
            return Err(GeomError::Validation(format!("sweep value {v} is not finite")));
        }
        if key == "scale" && !(v > 0.0) {
            return Err(GeomError::Validation(format!("warping scale {v} must be positive")));
        }
        let mut c = cfg.clone();
        c.set_param(key, v)?;
        configs.push(c);
    }
    let mut rows = Vec::with_capacity(values.len());
    for (c, &v) in configs.iter().zip(values) {
        let (outcomes, code) = match c.build() {
            Ok(scn) => {
                let o = run_checks(c, &scn, names);
                let code = exit_code(&o);
                (o, code)
            }
            Err(e) => (vec![Outcome::error("build", &e)], 2),
        };
        let margin = |n: &str| outcomes.iter().find(|o| o.report.name == n).and_then(|o| o.report.min_margin());
        rows.push(SweepRow {
            value: v,
            seed: c.seed,
            coefficient: c.theta.filter(|t| *t > 0.0).map(slant_coefficient),
            exit_code: code,
            min_margin_4_1: margin("inequality_4_1"),
            min_margin_5_1: margin("inequality_5_1"),
            checks: outcomes.into_iter().map(|o| o.report).collect(),
        });
    }
    let mut notes = Vec::new();
    if key == "theta" && rows.len() > 1 {
        let mut by_theta: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.coefficient.map(|c| (r.value, c))).collect();
        by_theta.sort_by(|a, b| a.0.total_cmp(&b.0));
        let decreasing = by_theta.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 < w[0].1);
        notes.push(if decreasing {
            "coefficient (2/9)cot^2 theta + 2csc^2 theta decreases with theta over the swept values".to_string()
        } else {
            "coefficient is not monotone over the swept values".to_string()
        });
    }
    let exit_code = rows.iter().map(|r| r.exit_code).max().unwrap_or(0);
    Ok(SweepOutput { rows, notes, exit_code })
}

pub fn sweep_report_json(cfg: &ScenarioConfig, config_bytes: &[u8], parameter: &str, out: &SweepOutput) -> Value {
    let mut m = provenance("sweep", cfg, config_bytes);
    m.insert("exit_code".into(), json!(out.exit_code));
    m.insert("parameter".into(), json!(parameter));
    m.insert("notes".into(), json!(out.notes));
    m.insert("rows".into(), json!(out.rows));
    Value::Object(m)
}

pub fn sweep_table(parameter: &str, out: &SweepOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<14} {:>14} {:>12} {:>12} {:>5}", parameter, "coefficient", "margin 4.1", "margin 5.1", "exit");
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
    for r in &out.rows {
        let _ = writeln!(
            s,
            "{:<14.10} {:>14} {:>12} {:>12} {:>5}",
            r.value,
            r.coefficient.map_or("-".to_string(), |c| format!("{c:.10}")),
            opt(r.min_margin_4_1),
            opt(r.min_margin_5_1),
            r.exit_code
        );
    }
    for n in &out.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}
