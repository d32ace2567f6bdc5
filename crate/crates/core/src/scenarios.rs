//! Built-in immersions and warped-product scenarios.

use std::f64::consts::FRAC_PI_3;

use crate::almost_contact::{builtin_ambient, builtin_type};
use crate::error::{GeomError, Result};
use crate::immersion::{Immersion, Splits};
use crate::jet::{constant, cos, exp, sin, var, ScalarExpr};
use crate::sampling::SampleBox;
use crate::warped::{FactorLayout, WarpedScenario};

/// Parameters of the affine semi-slant family in the Kenmotsu ambient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlantFamily {
    pub theta: f64,
    /// Coefficient of the `s₁²` bend in the `x₃` direction.
    pub epsilon: f64,
    /// Constant factor on the warping `e^t`.
    pub scale: f64,
    /// Half ambient dimension; at least 3.
    pub m: usize,
}

impl Default for SlantFamily {
    fn default() -> Self {
        SlantFamily { theta: FRAC_PI_3, epsilon: 0.0, scale: 1.0, m: 3 }
    }
}

fn unit_field(n: usize, i: usize) -> Vec<ScalarExpr> {
    (0..n).map(|k| if k == i { ScalarExpr::one() } else { ScalarExpr::zero() }).collect()
}

fn sub_box(n: usize) -> SampleBox {
    let mut b = SampleBox::cube(n, 2.0);
    b.lo[0] = -1.0;
    b.hi[0] = 1.0;
    b
}

/// `(t, u, v, s₁, s₂) ↦ (t, u, v, s₁, s₂ cos θ, ε s₁², s₂ sin θ, 0, …)` in
/// the Kenmotsu ambient `R ×_{e^t} Cᵐ`, as `N_T ×_f N_θ` with `f = c·e^t`.
pub fn slant_family(params: SlantFamily) -> Result<WarpedScenario> {
    let SlantFamily { theta, epsilon, scale, m } = params;
    if m < 3 {
        return Err(GeomError::Validation("the slant family needs m >= 3".into()));
    }
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(GeomError::Validation(format!("slant angle {theta} outside (0, pi/2)")));
    }
    if !(scale > 0.0) {
        return Err(GeomError::NonPositiveWarping(scale));
    }
    let ambient = builtin_ambient("kenmotsu", m)?;
    let big = ambient.dim();
    let mut map = vec![ScalarExpr::zero(); big];
    map[0] = var(0);
    map[1] = var(1);
    map[2] = var(2);
    map[3] = var(3);
    map[4] = theta.cos() * var(4);
    map[5] = if epsilon == 0.0 { ScalarExpr::zero() } else { epsilon * var(3).powi(2) };
    map[6] = theta.sin() * var(4);
    let name = match (epsilon != 0.0, m > 3) {
        (false, false) => "S1".to_string(),
        (true, false) => "S1-perturbed".to_string(),
        (false, true) => format!("S1-wide(m={m})"),
        (true, true) => format!("S1-perturbed-wide(m={m})"),
    };
    let splits = Splits {
        invariant: vec![unit_field(5, 1), unit_field(5, 2)],
        slant: vec![unit_field(5, 3), unit_field(5, 4)],
        xi: Some(unit_field(5, 0)),
    };
    let immersion = Immersion::new(name.clone(), 5, map, sub_box(5))?.with_splits(splits)?;
    let warping = if scale == 1.0 { exp(var(0)) } else { scale * exp(var(0)) };
    Ok(WarpedScenario {
        name,
        ambient,
        immersion,
        nt: vec![0, 1, 2],
        ntheta: vec![3, 4],
        layout: FactorLayout::InvariantFirst,
        warping,
        theta,
        alpha_beta: builtin_type("kenmotsu"),
        approximate: epsilon != 0.0,
    })
}

/// The canonical equality-case scenario, `θ = π/3`.
pub fn s1() -> WarpedScenario {
    slant_family(SlantFamily::default()).expect("default family is valid")
}

pub fn s1_theta(theta: f64) -> Result<WarpedScenario> {
    slant_family(SlantFamily { theta, ..SlantFamily::default() })
}

/// `S1` with the `ε·s₁²` bend, `ε = 0.1`.
pub fn s1_perturbed() -> WarpedScenario {
    slant_family(SlantFamily { epsilon: 0.1, ..SlantFamily::default() }).expect("perturbed family is valid")
}

/// `S1` inside a 9-dimensional ambient, leaving a 2-dimensional `ν`.
pub fn s1_wide() -> WarpedScenario {
    slant_family(SlantFamily { m: 4, ..SlantFamily::default() }).expect("wide family is valid")
}

/// `(u, w) ↦ (t = w, x₁ = u, y₁ = 0)` declared as `N₁ ×_1 N₂` with `N₁ = {u}`
/// and `ξ = ∂w` in the second factor.
pub fn xi_in_second_factor(ambient: &str) -> Result<WarpedScenario> {
    let amb = builtin_ambient(ambient, 1)?;
    let map = vec![var(1), var(0), ScalarExpr::zero()];
    let immersion = Immersion::new("xi-in-second-factor", 2, map, SampleBox::new(vec![-2.0, -1.0], vec![2.0, 1.0])?)?;
    Ok(WarpedScenario {
        name: format!("xi-in-second-factor({ambient})"),
        ambient: amb,
        immersion,
        nt: vec![0],
        ntheta: vec![1],
        layout: FactorLayout::InvariantFirst,
        warping: ScalarExpr::one(),
        theta: 0.0,
        alpha_beta: builtin_type(ambient),
        approximate: false,
    })
}

/// `(w, a, b) ↦ (z = w, x₁ = a, y₁ = b, 0, 0)` declared as `N_θ ×_1 N_T` with
/// `N_θ = {w}` carrying `ξ`.
pub fn slant_first_candidate(ambient: &str) -> Result<WarpedScenario> {
    let amb = builtin_ambient(ambient, 2)?;
    let map = vec![var(0), var(1), var(2), ScalarExpr::zero(), ScalarExpr::zero()];
    let b = if ambient == "kenmotsu" { sub_box(3) } else { SampleBox::cube(3, 2.0) };
    let immersion = Immersion::new("slant-first-candidate", 3, map, b)?;
    Ok(WarpedScenario {
        name: format!("slant-first-candidate({ambient})"),
        ambient: amb,
        immersion,
        nt: vec![1, 2],
        ntheta: vec![0],
        layout: FactorLayout::SlantFirst,
        warping: ScalarExpr::one(),
        theta: 0.0,
        alpha_beta: builtin_type(ambient),
        approximate: false,
    })
}

/// Unit sphere chart `(θ, φ) ↦ (sin θ cos φ, sin θ sin φ, cos θ)`.
pub fn sphere() -> Immersion {
    let (th, ph) = (var(0), var(1));
    let map = vec![sin(th.clone()) * cos(ph.clone()), sin(th.clone()) * sin(ph), cos(th)];
    Immersion::new("sphere", 2, map, SampleBox::new(vec![0.3, -3.0], vec![2.8, 3.0]).expect("valid box"))
        .expect("valid immersion")
}

/// Graph `z = a x² + b xy + c y²` over `[-1, 1]²`.
pub fn quadratic_graph(a: f64, b: f64, c: f64) -> Immersion {
    let (x, y) = (var(0), var(1));
    let z = a * x.clone().powi(2) + b * (x.clone() * y.clone()) + c * y.clone().powi(2);
    Immersion::new("quadratic-graph", 2, vec![x, y, z], SampleBox::cube(2, 1.0)).expect("valid immersion")
}

/// The plane `z = 0`.
pub fn plane() -> Immersion {
    Immersion::new("plane", 2, vec![var(0), var(1), constant(0.0)], SampleBox::cube(2, 2.0)).expect("valid immersion")
}
