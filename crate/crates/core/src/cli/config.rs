//! Scenario files: TOML with sections, expression strings in the
//! [`crate::jet::parse`] grammar.
//!
//! ```toml
//! name = "S1"
//! ambient = "kenmotsu"   # or "custom" with a [custom_ambient] section
//! m = 3
//! theta = 1.0471975512
//! warping = "scale*exp(x0)"
//! checks = ["all"]
//!
//! [immersion]
//! dim = 5
//! map = ["x0", "x1", "x2", "x3", "cos(theta)*x4", "epsilon*x3^2", "sin(theta)*x4"]
//!
//! [splits]
//! xi = ["1", "0", "0", "0", "0"]
//! invariant = [["0", "1", "0", "0", "0"], ["0", "0", "1", "0", "0"]]
//! slant = [["0", "0", "0", "1", "0"], ["0", "0", "0", "0", "1"]]
//!
//! [factors]
//! nt_indices = [0, 1, 2]
//! ntheta_indices = [3, 4]
//!
//! [sampling]
//! count = 40
//! seed = 7
//! box = { lo = [-1, -2, -2, -2, -2], hi = [1, 2, 2, 2, 2] }
//! ```
//!
//! `theta`, `epsilon` (default 0), `scale` (default 1) and any entry of
//! `[params]` are usable by name inside expressions.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::Deserialize;

use crate::almost_contact::{builtin_ambient, builtin_type, AlmostContactStructure};
use crate::error::{GeomError, Result};
use crate::immersion::{Immersion, Splits};
use crate::jet::{parse_expr_with, ScalarExpr};
use crate::manifold::MetricField;
use crate::sampling::SampleBox;
use crate::theorems::Tolerances;
use crate::warped::{FactorLayout, WarpedScenario};

pub const BUILTIN_MODELS: [&str; 3] = ["cosymplectic", "kenmotsu", "sasakian"];
pub const DEFAULT_SAMPLES: usize = 40;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    ambient: String,
    m: Option<usize>,
    theta: Option<f64>,
    epsilon: Option<f64>,
    scale: Option<f64>,
    warping: Option<String>,
    approximate: Option<bool>,
    candidate: Option<bool>,
    checks: Option<Vec<String>>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    custom_ambient: Option<RawAmbient>,
    immersion: RawImmersion,
    splits: Option<RawSplits>,
    factors: Option<RawFactors>,
    #[serde(rename = "type")]
    declared_type: Option<RawType>,
    sampling: RawSampling,
    tolerances: Option<RawTolerances>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAmbient {
    /// Rows of the metric matrix.
    metric: Vec<Vec<String>>,
    /// `phi[i][j]` is component `i` of `φ∂_j`.
    phi: Vec<Vec<String>>,
    xi: Vec<String>,
    eta: Vec<String>,
    #[serde(rename = "box")]
    sample_box: Option<RawBox>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImmersion {
    dim: usize,
    map: Vec<String>,
    frame_order: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplits {
    xi: Option<Vec<String>>,
    #[serde(default)]
    invariant: Vec<Vec<String>>,
    #[serde(default)]
    slant: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactors {
    nt_indices: Vec<usize>,
    ntheta_indices: Vec<usize>,
    layout: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawType {
    alpha: f64,
    beta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    count: Option<usize>,
    seed: Option<u64>,
    #[serde(rename = "box")]
    sample_box: Option<RawBox>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    identity: Option<f64>,
    inequality: Option<f64>,
}

/// Ambient given by name or by expression tables.
#[derive(Debug, Clone, PartialEq)]
pub enum AmbientSpec {
    Builtin { model: String, m: usize },
    Custom {
        metric: Vec<Vec<String>>,
        phi: Vec<Vec<String>>,
        xi: Vec<String>,
        eta: Vec<String>,
        sample_box: Option<(Vec<f64>, Vec<f64>)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub nt: Vec<usize>,
    pub ntheta: Vec<usize>,
    pub layout: FactorLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub xi: Option<Vec<String>>,
    pub invariant: Vec<Vec<String>>,
    pub slant: Vec<Vec<String>>,
}

/// A validated scenario file. Expressions stay as text so that sweeps can
/// rebuild the scenario with different parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub ambient: AmbientSpec,
    pub theta: Option<f64>,
    /// Named constants, including `theta`, `epsilon` and `scale`.
    pub params: BTreeMap<String, f64>,
    pub dim: usize,
    pub map: Vec<String>,
    pub frame_order: Option<Vec<usize>>,
    pub splits: Option<SplitSpec>,
    pub factors: Option<FactorSpec>,
    pub warping: String,
    pub approximate: Option<bool>,
    /// Obstruction candidate: failing warped-product certification is expected.
    pub candidate: bool,
    pub declared_type: Option<(f64, f64)>,
    pub count: usize,
    pub seed: u64,
    pub sample_box: (Vec<f64>, Vec<f64>),
    pub tolerances: Tolerances,
    pub checks: Vec<String>,
}

/// Everything the runner needs, built from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub ambient: AlmostContactStructure,
    pub immersion: Immersion,
    pub warped: Option<WarpedScenario>,
    pub frame_order: Option<Vec<usize>>,
    pub declared_type: Option<(f64, f64)>,
    pub theta: Option<f64>,
    pub has_splits: bool,
    pub candidate: bool,
}

/// 1-based line of `key` inside `[section]` (top level when `section` is empty).
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    /// Validation error naming the key and, when present in the file, its line.
    fn invalid(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> GeomError {
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        match locate(self.src, section, key) {
            Some(line) => GeomError::Validation(format!("line {line}, key `{full}`: {msg}")),
            None => GeomError::Validation(format!("key `{full}`: {msg}")),
        }
    }

    fn expr(&self, section: &str, key: &str, text: &str, dim: usize, params: &BTreeMap<String, f64>) -> Result<ScalarExpr> {
        parse_expr_with(text, dim, params).map_err(|e| self.invalid(section, key, e))
    }
}

fn bounds(ctx: &Ctx, section: &str, b: &RawBox, dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    SampleBox::new(b.lo.clone(), b.hi.clone()).map_err(|e| ctx.invalid(section, "box", e))?;
    if b.lo.len() != dim {
        return Err(ctx.invalid(section, "box", format!("box has {} coordinates, expected {dim}", b.lo.len())));
    }
    Ok((b.lo.clone(), b.hi.clone()))
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| GeomError::Parse(format!("{}: {e}", path.display())))?;
    parse_config_str(&src)
}

pub fn parse_config_str(src: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| GeomError::Parse(e.to_string().trim_end().to_string()))?;
    let ctx = Ctx { src };

    let ambient = if raw.ambient == "custom" {
        let c = raw.custom_ambient.ok_or_else(|| ctx.invalid("", "ambient", "`custom` needs a [custom_ambient] section"))?;
        let n = c.metric.len();
        if n % 2 == 0 {
            return Err(ctx.invalid("custom_ambient", "metric", format!("chart dimension {n} is not odd")));
        }
        let sample_box = c.sample_box.as_ref().map(|b| bounds(&ctx, "custom_ambient", b, n)).transpose()?;
        AmbientSpec::Custom { metric: c.metric, phi: c.phi, xi: c.xi, eta: c.eta, sample_box }
    } else if BUILTIN_MODELS.contains(&raw.ambient.as_str()) {
        if raw.custom_ambient.is_some() {
            return Err(ctx.invalid("", "ambient", "a [custom_ambient] section needs `ambient = \"custom\"`"));
        }
        let m = raw.m.ok_or_else(|| ctx.invalid("", "m", "built-in ambients need `m`"))?;
        if m == 0 {
            return Err(ctx.invalid("", "m", "m must be at least 1"));
        }
        AmbientSpec::Builtin { model: raw.ambient.clone(), m }
    } else {
        return Err(ctx.invalid(
            "",
            "ambient",
            format!("unknown model `{}` (expected one of {}, or custom)", raw.ambient, BUILTIN_MODELS.join(", ")),
        ));
    };

    if let Some(theta) = raw.theta {
        if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
            return Err(ctx.invalid("", "theta", format!("slant angle {theta} outside [0, pi/2]")));
        }
    }
    let seed = raw.sampling.seed.ok_or_else(|| ctx.invalid("sampling", "seed", "missing; a seed is required"))?;
    let count = raw.sampling.count.unwrap_or(DEFAULT_SAMPLES);
    if count == 0 {
        return Err(ctx.invalid("sampling", "count", "must be positive"));
    }
    let dim = raw.immersion.dim;
    if dim == 0 {
        return Err(ctx.invalid("immersion", "dim", "must be positive"));
    }
    let sample_box = match &raw.sampling.sample_box {
        Some(b) => bounds(&ctx, "sampling", b, dim)?,
        None => (vec![-1.0; dim], vec![1.0; dim]),
    };

    let mut tolerances = Tolerances::default();
    if let Some(t) = &raw.tolerances {
        for (key, v, slot) in [("identity", t.identity, &mut tolerances.identity), ("inequality", t.inequality, &mut tolerances.inequality)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(ctx.invalid("tolerances", key, format!("tolerance {v} must be finite and non-negative")));
                }
                *slot = v;
            }
        }
    }

    let mut params = raw.params.clone();
    for reserved in ["theta", "epsilon", "scale", "pi"] {
        if params.contains_key(reserved) {
            return Err(ctx.invalid("params", reserved, "reserved name; set it at the top level"));
        }
    }
    params.insert("theta".into(), raw.theta.unwrap_or(0.0));
    params.insert("epsilon".into(), raw.epsilon.unwrap_or(0.0));
    params.insert("scale".into(), raw.scale.unwrap_or(1.0));

    let factors = match raw.factors {
        Some(f) => {
            let layout = match f.layout.as_deref() {
                None | Some("invariant-first") => FactorLayout::InvariantFirst,
                Some("slant-first") => FactorLayout::SlantFirst,
                Some(other) => {
                    return Err(ctx.invalid("factors", "layout", format!("`{other}` is not invariant-first or slant-first")))
                }
            };
            let mut all: Vec<usize> = f.nt_indices.iter().chain(&f.ntheta_indices).copied().collect();
            if let Some(&bad) = all.iter().find(|&&i| i >= dim) {
                let key = if f.nt_indices.contains(&bad) { "nt_indices" } else { "ntheta_indices" };
                return Err(ctx.invalid("factors", key, format!("index {bad} beyond submanifold dimension {dim}")));
            }
            all.sort_unstable();
            if all != (0..dim).collect::<Vec<_>>() {
                return Err(ctx.invalid("factors", "nt_indices", "factor indices must partition the submanifold coordinates"));
            }
            Some(FactorSpec { nt: f.nt_indices, ntheta: f.ntheta_indices, layout })
        }
        None => None,
    };
    if let Some(order) = &raw.immersion.frame_order {
        if let Some(&bad) = order.iter().find(|&&i| i >= dim) {
            return Err(ctx.invalid("immersion", "frame_order", format!("index {bad} beyond submanifold dimension {dim}")));
        }
    }
    let splits = raw.splits.map(|s| SplitSpec { xi: s.xi, invariant: s.invariant, slant: s.slant });
    if splits.as_ref().is_some_and(|s| !s.slant.is_empty()) && raw.theta.is_none() {
        return Err(ctx.invalid("", "theta", "missing; declared slant distributions need a slant angle"));
    }

    let known = crate::cli::run::check_names();
    let checks = raw.checks.unwrap_or_else(|| vec!["all".to_string()]);
    if let Some(bad) = checks.iter().find(|c| c.as_str() != "all" && !known.contains(&c.as_str())) {
        return Err(ctx.invalid("", "checks", format!("unknown check `{bad}`")));
    }

    let cfg = ScenarioConfig {
        name: raw.name.unwrap_or_else(|| "scenario".into()),
        ambient,
        theta: raw.theta,
        params,
        dim,
        map: raw.immersion.map,
        frame_order: raw.immersion.frame_order,
        splits,
        factors,
        warping: raw.warping.unwrap_or_else(|| "1".into()),
        approximate: raw.approximate,
        candidate: raw.candidate.unwrap_or(false),
        declared_type: raw.declared_type.map(|t| (t.alpha, t.beta)),
        count,
        seed,
        sample_box,
        tolerances,
        checks,
    };
    cfg.build_in(&ctx)?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(0.0)
    }

    /// Set `theta`, `epsilon` or `scale`; `theta` also updates the declared angle.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        if name == "theta" {
            if !(0.0..=FRAC_PI_2 + 1e-12).contains(&value) {
                return Err(GeomError::Validation(format!("slant angle {value} outside [0, pi/2]")));
            }
            self.theta = Some(value);
        }
        self.params.insert(name.to_string(), value);
        Ok(())
    }

    pub fn build(&self) -> Result<Scenario> {
        self.build_in(&Ctx { src: "" })
    }

    fn build_in(&self, ctx: &Ctx) -> Result<Scenario> {
        let params = &self.params;
        let ambient = match &self.ambient {
            AmbientSpec::Builtin { model, m } => builtin_ambient(model, *m).map_err(|e| ctx.invalid("", "ambient", e))?,
            AmbientSpec::Custom { metric, phi, xi, eta, sample_box } => {
                let n = metric.len();
                let sec = "custom_ambient";
                let table = |key: &str, rows: &[Vec<String>]| -> Result<Vec<Vec<ScalarExpr>>> {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(ctx.invalid(sec, key, format!("expected a {n} x {n} table")));
                    }
                    rows.iter().map(|r| r.iter().map(|t| ctx.expr(sec, key, t, n, params)).collect()).collect()
                };
                let vector = |key: &str, v: &[String]| -> Result<Vec<ScalarExpr>> {
                    if v.len() != n {
                        return Err(ctx.invalid(sec, key, format!("expected {n} components")));
                    }
                    v.iter().map(|t| ctx.expr(sec, key, t, n, params)).collect()
                };
                let g = MetricField::from_matrix(table("metric", metric)?).map_err(|e| ctx.invalid(sec, "metric", e))?;
                let b = match sample_box {
                    Some((lo, hi)) => SampleBox::new(lo.clone(), hi.clone())?,
                    None => SampleBox::cube(n, 1.0),
                };
                AlmostContactStructure::new("custom", g, table("phi", phi)?, vector("xi", xi)?, vector("eta", eta)?, b)
                    .map_err(|e| ctx.invalid("", "ambient", e))?
            }
        };
        let big = ambient.dim();
        if self.map.len() != big {
            return Err(ctx.invalid("immersion", "map", format!("{} components for a {big}-dimensional ambient", self.map.len())));
        }
        if self.dim > big {
            return Err(ctx.invalid("immersion", "dim", format!("exceeds the ambient dimension {big}")));
        }
        let n = self.dim;
        let map: Vec<ScalarExpr> = self.map.iter().map(|t| ctx.expr("immersion", "map", t, n, params)).collect::<Result<_>>()?;
        let sbox = SampleBox::new(self.sample_box.0.clone(), self.sample_box.1.clone())?;
        let mut immersion = Immersion::new(self.name.clone(), n, map, sbox).map_err(|e| ctx.invalid("immersion", "map", e))?;
        if let Some(sp) = &self.splits {
            let field = |key: &str, v: &[String]| -> Result<Vec<ScalarExpr>> {
                if v.len() != n {
                    return Err(ctx.invalid("splits", key, format!("vector with {} components, expected {n}", v.len())));
                }
                v.iter().map(|t| ctx.expr("splits", key, t, n, params)).collect()
            };
            let splits = Splits {
                invariant: sp.invariant.iter().map(|v| field("invariant", v)).collect::<Result<_>>()?,
                slant: sp.slant.iter().map(|v| field("slant", v)).collect::<Result<_>>()?,
                xi: sp.xi.as_ref().map(|v| field("xi", v)).transpose()?,
            };
            immersion = immersion.with_splits(splits).map_err(|e| ctx.invalid("splits", "invariant", e))?;
        }
        let warping = ctx.expr("", "warping", &self.warping, n, params)?;
        let declared_type = self.declared_type.or(match &self.ambient {
            AmbientSpec::Builtin { model, .. } => builtin_type(model),
            AmbientSpec::Custom { .. } => None,
        });
        let warped = self.factors.as_ref().map(|f| WarpedScenario {
            name: self.name.clone(),
            ambient: ambient.clone(),
            immersion: immersion.clone(),
            nt: f.nt.clone(),
            ntheta: f.ntheta.clone(),
            layout: f.layout,
            warping: warping.clone(),
            theta: self.theta.unwrap_or(0.0),
            alpha_beta: declared_type,
            approximate: self.approximate.unwrap_or(self.param("epsilon") != 0.0),
        });
        Ok(Scenario {
            name: self.name.clone(),
            ambient,
            immersion,
            warped,
            frame_order: self.frame_order.clone(),
            declared_type,
            theta: self.theta,
            has_splits: self.splits.is_some(),
            candidate: self.candidate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S1: &str = include_str!("../../../../scenarios/s1_kenmotsu.cfg");

    fn err_text(src: &str) -> String {
        parse_config_str(src).unwrap_err().to_string()
    }

    #[test]
    fn shipped_s1_matches_builtin() {
        let cfg = parse_config_str(S1).unwrap();
        let scn = cfg.build().unwrap();
        let w = scn.warped.unwrap();
        let reference = crate::scenarios::s1();
        assert_eq!((w.nt.clone(), w.ntheta.clone()), (reference.nt.clone(), reference.ntheta.clone()));
        assert!((w.theta - reference.theta).abs() < 1e-10);
        assert!(!w.approximate);
        let mut sampler = crate::sampling::Sampler::new(3);
        for p in sampler.points(&reference.immersion.sample_box, 10) {
            let a = w.immersion.image(&p).unwrap();
            let b = reference.immersion.image(&p).unwrap();
            for (x, y) in a.coords.iter().zip(&b.coords) {
                assert!((x - y).abs() < 1e-10);
            }
            assert!((w.warping.eval(&p.coords).unwrap() - reference.warping.eval(&p.coords).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_seed() {
        let src = S1.replace("seed = ", "# seed = ");
        let e = parse_config_str(&src).unwrap_err();
        assert!(matches!(e, GeomError::Validation(_)));
        assert!(e.to_string().contains("sampling.seed"));
    }

    #[test]
    fn theta_out_of_range() {
        let src = S1.replace("theta = 1.0471975512", "theta = 2.0");
        let e = parse_config_str(&src).unwrap_err();
        assert!(matches!(e, GeomError::Validation(_)));
        let text = e.to_string();
        assert!(text.contains("key `theta`") && text.contains("line "), "{text}");
    }

    #[test]
    fn syntax_errors_name_the_line() {
        let src = S1.replace("dim = 5", "dim = = 5");
        let e = parse_config_str(&src).unwrap_err();
        assert!(matches!(e, GeomError::Parse(_)));
        assert!(e.to_string().contains("line"), "{e}");
        assert!(err_text(&S1.replace("[sampling]", "[sampling]\nbogus = 1")).contains("bogus"));
    }

    #[test]
    fn expression_and_index_errors() {
        let text = err_text(&S1.replace("\"x3\", \"cos", "\"x9\", \"cos"));
        assert!(text.contains("immersion.map"), "{text}");
        assert!(err_text(&S1.replace("nt_indices = [0, 1, 2]", "nt_indices = [0, 1, 7]")).contains("nt_indices"));
        assert!(err_text(&S1.replace("nt_indices = [0, 1, 2]", "nt_indices = [0, 1]")).contains("partition"));
        assert!(err_text(&S1.replace("ambient = \"kenmotsu\"", "ambient = \"hyperbolic\"")).contains("unknown model"));
        assert!(err_text(&S1.replace("checks = [\"all\"]", "checks = [\"nonsense\"]")).contains("unknown check"));
        assert!(err_text(&S1.replace("m = 3", "m = 2")).contains("immersion.map"));
    }

    #[test]
    fn sweep_parameters_rebuild() {
        let mut cfg = parse_config_str(S1).unwrap();
        cfg.set_param("epsilon", 0.1).unwrap();
        let w = cfg.build().unwrap().warped.unwrap();
        assert!(w.approximate);
        let p = crate::jet::Point::new(vec![0.1, 0.2, 0.3, 0.5, 0.7]);
        assert!((w.immersion.image(&p).unwrap().coords[5] - 0.025).abs() < 1e-14);
        assert!(cfg.set_param("theta", 2.0).is_err());
    }

    #[test]
    fn custom_ambient_table() {
        let src = r#"
ambient = "custom"
[custom_ambient]
metric = [["1", "0", "0"], ["0", "exp(2*x0)", "0"], ["0", "0", "exp(2*x0)"]]
phi = [["0", "0", "0"], ["0", "0", "-1"], ["0", "1", "0"]]
xi = ["1", "0", "0"]
eta = ["1", "0", "0"]
[immersion]
dim = 3
map = ["x0", "x1", "x2"]
[sampling]
seed = 1
"#;
        let cfg = parse_config_str(src).unwrap();
        let scn = cfg.build().unwrap();
        assert_eq!(scn.ambient.dim(), 3);
        assert!(scn.declared_type.is_none());
    }
}
