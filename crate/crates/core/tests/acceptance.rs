//! Acceptance criteria 1–13. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::path::Path;

use nalgebra::DVector;
use warpgeom::almost_contact::{builtin_ambient, estimate_alpha_beta, validate_structure};
use warpgeom::immersion::{slant_report, Immersion, SlantClass};
use warpgeom::jet::{sin, var, ScalarExpr};
use warpgeom::manifold::{sectional_curvature, MetricField};
use warpgeom::report::{CheckReport, RecordKind};
use warpgeom::sampling::{SampleBox, Sampler};
use warpgeom::scenarios::{quadratic_graph, s1, s1_perturbed, s1_theta, slant_first_candidate, sphere, xi_in_second_factor};
use warpgeom::theorems::{
    check_gauss_suite, check_inequality_41, check_inequality_51, check_lemma32, check_lemma51, check_theorem31,
    check_theorem32, slant_coefficient, Tolerances,
};
use warpgeom::warped::{build_warped_metric, builtin_warped, verify_lemma31, verify_warped_laplacian, BUILTIN_WARPED};

type Outcome = (bool, String);

fn max_of(rep: &CheckReport, pred: impl Fn(&str) -> bool) -> f64 {
    rep.records.iter().filter(|r| pred(&r.label)).map(|r| r.max_residual).fold(0.0, f64::max)
}

fn counted_max(rep: &CheckReport) -> f64 {
    rep.records.iter().filter(|r| r.kind == RecordKind::Identity).map(|r| r.max_residual).fold(0.0, f64::max)
}

fn c1_structure() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for name in ["cosymplectic", "kenmotsu", "sasakian"] {
        for m in [1, 2] {
            let a = builtin_ambient(name, m).unwrap();
            let rep = validate_structure(&a, &mut Sampler::new(100 + m as u64), 100, 1e-9).unwrap();
            ok &= rep.pass && rep.records.iter().all(|r| r.samples >= 100);
            worst = worst.max(counted_max(&rep));
        }
    }
    (ok && worst < 1e-9, format!("max axiom residual {worst:.2e} over 100 points per model"))
}

fn c2_type_recovery() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, a0, b0) in [("cosymplectic", 0.0, 0.0), ("kenmotsu", 0.0, 1.0), ("sasakian", 1.0, 0.0)] {
        let est = estimate_alpha_beta(&builtin_ambient(name, 2).unwrap(), &mut Sampler::new(200), 100).unwrap();
        ok &= (est.alpha - a0).abs() < 1e-6 && (est.beta - b0).abs() < 1e-6 && est.residual < 1e-7;
        detail.push(format!("{name} ({:.2e}, {:.2e}) resid {:.1e}", est.alpha, est.beta, est.residual));
    }
    (ok, detail.join("; "))
}

fn c3_jets() -> Outcome {
    let (low, third) = common::jet_vs_fd(0xC3, 1000);
    (low < 1e-5 && third < 1e-3, format!("1000 ASTs: order<=2 rel err {low:.2e}, order 3 {third:.2e}"))
}

fn c4_curvature_anchors() -> Outcome {
    let g = MetricField::diagonal(vec![ScalarExpr::one(), sin(var(0)).powi(2)]);
    let e = |i: usize| DVector::from_fn(2, |k, _| if k == i { 1.0 } else { 0.0 });
    let mut sphere_err: f64 = 0.0;
    for p in Sampler::new(4).points(&SampleBox::new(vec![0.3, -3.0], vec![2.8, 3.0]).unwrap(), 50) {
        let s = g.sample(&p).unwrap();
        sphere_err = sphere_err.max((sectional_curvature(s.curvature().unwrap(), &e(0), &e(1)).unwrap() - 1.0).abs());
    }
    let spec = builtin_warped("exp-line").unwrap();
    let w = build_warped_metric(&spec).unwrap();
    let mut hyp_err: f64 = 0.0;
    for p in Sampler::new(5).points(&spec.sample_box, 50) {
        let s = w.metric.sample(&p).unwrap();
        hyp_err = hyp_err.max((sectional_curvature(s.curvature().unwrap(), &e(0), &e(1)).unwrap() + 1.0).abs());
    }
    let rep = verify_warped_laplacian(&spec, &mut Sampler::new(6), 50, 1e-7).unwrap();
    let lap = rep.metadata["first_sample_laplacian_over_f"].as_f64().unwrap();
    let lap_resid = counted_max(&rep);
    let ok = sphere_err < 1e-8 && hyp_err < 1e-8 && rep.pass && lap_resid < 1e-7 && (lap + 1.0).abs() < 1e-8;
    (ok, format!("|K_S2 - 1| {sphere_err:.1e}, |K + 1| {hyp_err:.1e}, (5.2) resid {lap_resid:.1e} with Delta f/f = {lap:.6}"))
}

fn c5_gauss() -> Outcome {
    let mut rng = Sampler::new(7);
    let (a, b, c) = (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    let e3 = MetricField::euclidean(3);
    let mut worst: f64 = 0.0;
    let mut duality: f64 = 0.0;
    let mut cases: Vec<(String, CheckReport)> = Vec::new();
    for imm in [sphere(), quadratic_graph(a, b, c)] {
        let pts = rng.points(&imm.sample_box, 40);
        cases.push((imm.name.clone(), check_gauss_suite(&e3, &imm, &pts, 1e-7).unwrap()));
    }
    let scn = s1();
    let pts = scn.points(&mut rng, 20);
    cases.push(("S1".into(), check_gauss_suite(&scn.ambient.metric, &scn.immersion, &pts, 1e-7).unwrap()));
    for (_, rep) in &cases {
        worst = worst.max(max_of(rep, |l| !l.starts_with("(2.3)")));
        duality = duality.max(max_of(rep, |l| l.starts_with("(2.3)")));
    }
    let ok = worst < 1e-7 && duality < 1e-8;
    (ok, format!("sphere, graph({a:.2},{b:.2},{c:.2}), S1: Gauss residual {worst:.1e}, duality {duality:.1e}"))
}

fn c6_slant() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
        let scn = s1_theta(theta).unwrap();
        let sp = scn.immersion.splits.clone().unwrap();
        let pts = scn.points(&mut Sampler::new(8), 30);
        let r = slant_report(&scn.ambient, &scn.immersion, &sp.slant, &pts).unwrap();
        ok &= (r.theta - theta).abs() < 1e-9 && r.residual < 1e-9 && r.classification == SlantClass::ProperSlant;
        detail.push(format!("dtheta {:.1e} resid {:.1e}", (r.theta - theta).abs(), r.residual));
        let inv = slant_report(&scn.ambient, &scn.immersion, &sp.invariant, &pts).unwrap();
        ok &= inv.classification == SlantClass::Invariant;
    }
    let amb = builtin_ambient("cosymplectic", 2).unwrap();
    let map = vec![ScalarExpr::zero(), var(0), ScalarExpr::zero(), var(1), ScalarExpr::zero()];
    let imm = Immersion::new("anti-invariant plane", 2, map, SampleBox::cube(2, 1.0)).unwrap();
    let basis = vec![vec![ScalarExpr::one(), ScalarExpr::zero()], vec![ScalarExpr::zero(), ScalarExpr::one()]];
    let pts = Sampler::new(9).points(&imm.sample_box, 10);
    let anti = slant_report(&amb, &imm, &basis, &pts).unwrap();
    ok &= anti.classification == SlantClass::AntiInvariant;
    detail.push(format!("D invariant, plane {}", anti.classification.name()));
    (ok, detail.join("; "))
}

fn c7_lemma31() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for name in BUILTIN_WARPED {
        let rep = verify_lemma31(&builtin_warped(name).unwrap(), &mut Sampler::new(10), 100, 1e-8).unwrap();
        ok &= rep.pass;
        worst = worst.max(max_of(&rep, |l| l.starts_with("(i)") || l.starts_with("(ii)") || l.starts_with("(iii)")));
    }
    (ok && worst < 1e-8, format!("(i)-(iii) max residual {worst:.1e} on {} warped metrics", BUILTIN_WARPED.len()))
}

fn c8_lemma32() -> Outcome {
    let rep = check_lemma32(&s1(), &mut Sampler::new(11), 50, &Tolerances::default()).unwrap();
    let worst = max_of(&rep, |_| true);
    let xi = max_of(&rep, |l| l.starts_with("(i) "));
    (rep.pass && worst < 1e-8 && xi <= 1e-12, format!("max residual {worst:.1e}, xi ln f - beta {xi:.1e}"))
}

fn obstruction_ratio(rep: &CheckReport) -> f64 {
    rep.records.iter().find(|r| r.kind == RecordKind::Obstruction).map_or(f64::NAN, |r| r.max_residual)
}

fn c9_obstructions() -> Outcome {
    let tol = Tolerances::default();
    let t31 = check_theorem31(&xi_in_second_factor("kenmotsu").unwrap(), &mut Sampler::new(12), 40, &tol).unwrap();
    let t32 = check_theorem32(&slant_first_candidate("sasakian").unwrap(), &mut Sampler::new(13), 40, &tol).unwrap();
    let v31 = check_theorem31(&xi_in_second_factor("cosymplectic").unwrap(), &mut Sampler::new(14), 40, &tol).unwrap();
    let v32 = check_theorem32(&slant_first_candidate("cosymplectic").unwrap(), &mut Sampler::new(15), 40, &tol).unwrap();
    let (r31, r32) = (obstruction_ratio(&t31), obstruction_ratio(&t32));
    let vacuous = |r: &CheckReport| r.metadata["verdict"].as_str().is_some_and(|v| v.starts_with("no constraint"));
    let ok = t31.pass && t32.pass && r31 >= 0.1 && r32 >= 0.1 && vacuous(&v31) && vacuous(&v32) && v31.pass && v32.pass;
    (ok, format!("min contradiction / |X|^2: thm 3.1 {r31:.3}, thm 3.2 {r32:.3}; cosymplectic vacuous"))
}

fn c10_inequality41() -> Outcome {
    let tol = Tolerances::default();
    let rep = check_inequality_41(&s1(), &mut Sampler::new(16), 50, &tol).unwrap();
    let sides = rep.inequality.iter().map(|r| r.lhs.abs().max(r.rhs.abs())).fold(0.0, f64::max);
    let eq47 = max_of(&rep, |l| l.starts_with("(4.7)"));
    let pert = check_inequality_41(&s1_perturbed(), &mut Sampler::new(17), 50, &tol).unwrap();
    let margin = pert.min_margin().unwrap();
    let limit = slant_coefficient(FRAC_PI_2);
    let ok = rep.pass && sides < 1e-9 && eq47 < 1e-7 && margin >= -1e-7 && limit == 2.0;
    (ok, format!("S1 |lhs|,|rhs| <= {sides:.1e}, (4.7) {eq47:.1e}; perturbed min margin {margin:.3e}; coefficient(pi/2) = {limit}"))
}

fn c11_lemma51() -> Outcome {
    let rep = check_lemma51(&s1(), &mut Sampler::new(18), 50, &Tolerances::default()).unwrap();
    let formula = max_of(&rep, |l| l.starts_with("|H|^2 = "));
    let partial = max_of(&rep, |l| l.starts_with("N_T partial"));
    (rep.pass && formula < 1e-8 && partial < 1e-8, format!("formula residual {formula:.1e}, N_T partial mean {partial:.1e}"))
}

fn c12_inequality51() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for scn in [s1(), s1_perturbed()] {
        let rep = check_inequality_51(&scn, &mut Sampler::new(19), 50, &Tolerances::default()).unwrap();
        let margin = rep.min_margin().unwrap();
        let cross = max_of(&rep, |l| l.starts_with("rhs agrees"));
        ok &= rep.pass && margin >= -1e-7 && cross < 1e-7;
        detail.push(format!("{} min margin {margin:.2e}, (2.9) cross-check {cross:.1e}", scn.name));
    }
    (ok, detail.join("; "))
}

fn c13_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/s1_kenmotsu.cfg");
    let c = cfg.to_str().unwrap().to_string();
    let run = |args: &[&str], out: &str| -> (i32, Vec<u8>) {
        let out = dir.path().join(out);
        let mut argv = vec!["warpgeom".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        argv.extend(["--config".to_string(), c.clone(), "--out".to_string(), out.to_str().unwrap().to_string()]);
        let code = warpgeom::cli::main_with(argv);
        (code, std::fs::read(out.join("report.json")).unwrap_or_default())
    };
    let (a, ra) = run(&["analyze"], "a");
    let (b, rb) = run(&["analyze"], "b");
    let (squeeze, _) = run(&["check", "all", "--tol-identity", "1e-15", "--tol-ineq", "1e-15"], "c");
    let (unknown, _) = run(&["check", "unknown_check"], "d");
    let identical = !ra.is_empty() && ra == rb;
    let ok = identical && a == 0 && b == 0 && squeeze == 1 && unknown == 2;
    (ok, format!("byte-identical reports: {identical}; exit codes S1 {a}, squeezed {squeeze}, unknown check {unknown}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("structure axioms", c1_structure),
        ("type recovery", c2_type_recovery),
        ("jet correctness", c3_jets),
        ("curvature anchors", c4_curvature_anchors),
        ("Gauss suite", c5_gauss),
        ("slant recovery", c6_slant),
        ("Lemma 3.1", c7_lemma31),
        ("Lemma 3.2", c8_lemma32),
        ("obstructions", c9_obstructions),
        ("Theorem 4.1", c10_inequality41),
        ("Lemma 5.1", c11_lemma51),
        ("Theorem 5.1", c12_inequality51),
        ("determinism and exit codes", c13_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        println!("criterion {:>2} {:<28} {}  {detail}", i + 1, name, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
