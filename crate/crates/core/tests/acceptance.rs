//! Acceptance suite: one PASS/RED line per criterion.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see the lines.

use std::f64::consts::PI;
use std::time::Instant;

use ns_carleman::experiments::{execute, ExperimentConfig, Outcome};
use ns_carleman::fields::field::{ScalarField, VectorField};
use ns_carleman::fields::grid::Grid;
use ns_carleman::fields::ops;
use ns_carleman::forward::{run_manufactured, Diffusion, ManufacturedSolution, StepperConfig};
use ns_carleman::geometry::constants::{compute_mu, select_beta, select_s_and_theta, BetaMode};

/// Criteria expected to stay red, with the reason recorded next to the result.
const KNOWN_RED: [(usize, &str); 1] = [(4, "H^-1 estimate: ratio decays like 1/s with the default decomposition g = grad w")];

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
    budget: f64,
}

fn criterion(id: usize, name: &'static str, budget: f64, f: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (passed, detail) = f();
    let seconds = t.elapsed().as_secs_f64();
    let line = Line { id, name, passed: passed && seconds < budget, detail, seconds, budget };
    println!(
        "[{}] {:>2} {:<28} {:>7.1} s / {:>5.0} s  {}",
        if line.passed { "PASS" } else { "RED " },
        line.id,
        line.name,
        line.seconds,
        line.budget,
        line.detail
    );
    line
}

fn run(name: &str) -> Outcome {
    execute(&ExperimentConfig::defaults_for(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn passed(o: &Outcome, names: &[&str]) -> bool {
    names.iter().all(|n| o.check(n).unwrap_or_else(|| panic!("no check {n}")).passed)
}

fn failed_checks(o: &Outcome) -> String {
    let bad: Vec<String> = o.checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    if bad.is_empty() {
        "all checks pass".into()
    } else {
        format!("failing: {}", bad.join(", "))
    }
}

fn orders(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn rms(values: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    let (s, n) = values.iter().enumerate().filter(|(i, _)| keep(*i)).fold((0.0, 0usize), |(s, n), (_, v)| (s + v * v, n + 1));
    (s / n as f64).sqrt()
}

fn calculus_suite() -> (bool, String) {
    let psi = |x: [f64; 3]| (2.0 * x[0]).sin() * (1.5 * x[1]).cos() + x[0] * x[1] * x[1];
    let mut dc = Vec::new();
    let mut cg = Vec::new();
    let mut id = Vec::new();
    let mut rounding: f64 = 0.0;
    for n in [32usize, 64, 128] {
        let g = Grid::new_box(&[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap();
        // orders are read on nodes at least two layers from the boundary
        // ∇^⊥ψ in closed form, its discrete divergence
        let perp = VectorField::from_fn(&g, 2, |x| {
            let p1 = -1.5 * (2.0 * x[0]).sin() * (1.5 * x[1]).sin() + 2.0 * x[0] * x[1];
            let p0 = 2.0 * (2.0 * x[0]).cos() * (1.5 * x[1]).cos() + x[1] * x[1];
            [p1, -p0, 0.0]
        });
        let nn = n + 1;
        let inner = |i: usize| {
            let (a, b) = (i % nn, i / nn);
            a >= 2 && b >= 2 && a + 2 < nn && b + 2 < nn
        };
        dc.push(rms(&ops::divergence(&perp).unwrap().values, inner));
        // ∇ψ in closed form, its discrete rotation
        let grad = VectorField::from_fn(&g, 2, |x| {
            [2.0 * (2.0 * x[0]).cos() * (1.5 * x[1]).cos() + x[1] * x[1], -1.5 * (2.0 * x[0]).sin() * (1.5 * x[1]).sin() + 2.0 * x[0] * x[1], 0.0]
        });
        cg.push(rms(&ops::curl2(&grad).unwrap().values, inner));
        let w = VectorField::from_fn(&g, 2, |x| [(PI * x[0]).sin() * (2.0 * x[1]).exp(), (x[0] * x[1]).cos(), 0.0]);
        let r = ops::vector_identity_residual(&w).unwrap();
        id.push(rms(&r.values, inner));
        let s = ScalarField::from_fn(&g, psi);
        let dd = ops::divergence(&ops::rot_scalar(&s).unwrap()).unwrap();
        let cc = ops::curl2(&ops::gradient(&s).unwrap()).unwrap();
        rounding = rounding.max(dd.max_abs()).max(cc.max_abs());
    }
    let all: Vec<f64> = [orders(&dc), orders(&cg), orders(&id)].concat();
    let ok = all.iter().all(|p| (p - 2.0).abs() <= 0.3) && rounding < 1e-8;
    (ok, format!("orders div∘curl {:.2?} curl∘grad {:.2?} identity {:.2?}; discrete composites {rounding:.1e}", orders(&dc), orders(&cg), orders(&id)))
}

fn mms_forward() -> (bool, String) {
    let sol = ManufacturedSolution::taylor_green(PI);
    let et: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&dt| run_manufactured(&sol, StepperConfig::new(64, dt, Diffusion::Implicit), 0.4, 0.6).unwrap().l2_error)
        .collect();
    let mut div: f64 = 0.0;
    let eh: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let h = 1.0 / n as f64;
            let steps = (0.2 / (h * h / 4.0)).ceil();
            let r = run_manufactured(&sol, StepperConfig::new(n, 0.2 / steps, Diffusion::Explicit), 0.4, 0.6).unwrap();
            div = div.max(r.max_divergence);
            r.l2_error
        })
        .collect();
    let (pt, ph) = (orders(&et), orders(&eh));
    let ok = pt.iter().all(|p| *p >= 1.0) && ph.iter().all(|p| *p >= 1.8) && div < 1e-8;
    (ok, format!("dt orders {pt:.2?}, h orders {ph:.2?}, max div {div:.1e}"))
}

fn constants() -> (bool, String) {
    let tol = 1e-9;
    let mode = BetaMode::Continuation { eps_tilde: 1.0, delta2: 5.0 };
    let b = select_beta(1.0, 4.0, mode).unwrap();
    let m = compute_mu(1.0, 1.0, 4.0, 0.5, mode).unwrap();
    let (c, mu0) = (1.3, 0.7);
    let s = select_s_and_theta(1.0, (-(c + mu0) as f64).exp(), c, mu0).unwrap();
    let half = select_s_and_theta(1.0, 0.1, 0.8, 0.8).unwrap();
    let ok = (b.lower - 0.125).abs() < tol
        && (b.upper - 1.0).abs() < tol
        && (m.mu0 - 0.64872).abs() < 1e-5
        && (m.mu0 - (0.5f64.exp() - 1.0)).abs() < tol
        && (s.s - 2.0).abs() < tol
        && (half.theta - 0.5).abs() < tol;
    (ok, format!("beta interval ({}, {}), mu0 {:.8}, s {}, theta {}", b.lower, b.upper, m.mu0, s.s, half.theta))
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();
    lines.push(criterion(1, "discrete calculus", 60.0, calculus_suite));
    lines.push(criterion(2, "forward MMS", 300.0, mms_forward));
    lines.push(criterion(3, "vorticity-velocity estimate", 300.0, || {
        let o = run("carleman_thm1");
        let r = &o.results["vorticity_velocity"];
        let ok = passed(&o, &["vorticity_velocity_finite", "vorticity_velocity_plateau", "vorticity_velocity_homogeneity"])
            && r["rho"].as_array().map(Vec::len) == Some(8);
        (ok, format!("C {:.3e}, last-3 spread {}, homogeneity {:.1e}", r["c_hat"].as_f64().unwrap(), r["plateau_spread"], r["homogeneity_difference"].as_f64().unwrap()))
    }));
    lines.push(criterion(4, "auxiliary estimates", 300.0, || {
        let o = run("carleman_lemmas");
        (o.checks.iter().all(|c| c.passed), failed_checks(&o))
    }));
    lines.push(criterion(5, "slice consistency", 120.0, || {
        let o = run("appendix_check");
        let ok = passed(&o, &["constant_relation", "beta_zero_agreement"]);
        let v = &o.results["verdict"];
        (ok, format!("C_spacetime {:.4e} vs factor * C_slice {:.4e}; beta -> 0 difference {:.1e}",
            v["c_spacetime"].as_f64().unwrap(), v["factor"].as_f64().unwrap() * v["c_slice"].as_f64().unwrap(),
            o.results["beta_zero_difference"].as_f64().unwrap()))
    }));
    lines.push(criterion(6, "constant calculators", 1.0, constants));
    lines.push(criterion(7, "continuation stability", 1200.0, || {
        let o = run("continuation_sweep");
        let th = o.results["theta_hat"].as_f64().unwrap();
        let ok = passed(&o, &["monotone"]) && th > 0.05 && th < 1.0;
        let errs: Vec<String> = o.results["levels"].as_array().unwrap().iter().map(|l| format!("{:.2e}", l["mean_error"].as_f64().unwrap())).collect();
        (ok, format!("mean errors [{}], theta_hat {th:.3}", errs.join(", ")))
    }));
    lines.push(criterion(8, "inverse source, rot F", 1200.0, || {
        let o = run("inverse_source_i");
        let floor = o.results["floor_error"].as_f64().unwrap();
        let ok = passed(&o, &["decreasing_with_sigma"]) && floor <= 1e-2;
        let errs: Vec<String> = o.results["levels"].as_array().unwrap().iter().map(|l| format!("{:.2e}", l["mean_error"].as_f64().unwrap())).collect();
        (ok, format!("rot F errors [{}], floor {floor:.2e}", errs.join(", ")))
    }));
    lines.push(criterion(9, "inverse source, F", 1200.0, || {
        let o = run("proposition1");
        let p = o.results["observed_order_finest"].as_f64().unwrap();
        let ok = passed(&o, &["source_dominance"]) && p >= 1.5;
        (ok, format!("H1 errors {}, order on finest pair {p:.2}", o.results["errors"]))
    }));
    lines.push(criterion(10, "gradient obstruction", 120.0, || {
        let o = run("obstruction_demo");
        let ok = o.results["datasets_identical"] == true && o.results["recovered_rot_F_norm"].as_f64().unwrap() <= 1e-8;
        (ok, format!("identical {}, rot F norm {:.1e}", o.results["datasets_identical"], o.results["recovered_rot_F_norm"].as_f64().unwrap()))
    }));
    lines.push(criterion(11, "condition checker", 120.0, || {
        let o = run("condition_report");
        (o.checks.iter().all(|c| c.passed), failed_checks(&o))
    }));

    let unexpected: Vec<usize> = lines.iter().filter(|l| !l.passed && !KNOWN_RED.iter().any(|(id, _)| *id == l.id)).map(|l| l.id).collect();
    for (id, why) in KNOWN_RED {
        if lines.iter().any(|l| l.id == id && !l.passed) {
            println!("known red {id}: {why}");
        }
    }
    let passed = lines.iter().filter(|l| l.passed).count();
    println!("{passed}/{} criteria pass", lines.len());
    assert!(unexpected.is_empty(), "criteria {unexpected:?} failed");
}
