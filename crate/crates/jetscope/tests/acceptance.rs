//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line with the measured quantity before asserting it.
//!
//! Wall-clock limits are asserted only in release builds (debug timings are
//! not meaningful); the measured times are always printed.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jetscope::classify;
use jetscope::demo::DemoSignal;
use jetscope::distribution::{Atom, DistributionRep};
use jetscope::field::SampledField;
use jetscope::grid::{Ball, Grid};
use jetscope::multi_index::MultiIndex;
use jetscope::norms::{self, DualMethod, NormSpec};
use jetscope::pde::{self, Rhs};
use jetscope::rescale;
use jetscope::testfn::TestFunction;
use jetscope::whitney;

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {n:>2} [{name}] {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

#[allow(unused_variables)]
fn assert_runtime(n: usize, elapsed_s: f64, limit_s: f64) {
    #[cfg(not(debug_assertions))]
    assert!(
        elapsed_s <= limit_s,
        "criterion {n}: runtime {elapsed_s:.2}s exceeds {limit_s}s"
    );
}

#[test]
fn criterion_01_duality_i0() {
    let start = Instant::now();
    let g = Grid::symmetric(1, 1.0, 4096).unwrap();
    let f = SampledField::from_fn(g, |x| (3.0 * x[0]).cos()).unwrap();
    let t = DistributionRep::from_field(f.clone());
    let ball = Ball::closed(vec![0.0], 1.0);
    let spec = NormSpec::new(0, 2.0).unwrap();
    let dual = norms::dual_norm(&t, &ball, &spec, DualMethod::Optimization).unwrap();
    let direct = norms::lp_norm(&f, &ball, 2.0).unwrap();
    let rel = (dual - direct).abs() / direct;
    let secs = start.elapsed().as_secs_f64();
    assert_runtime(1, secs, 5.0);
    report(
        1,
        "duality i=0",
        rel <= 1e-4,
        &format!("relative difference {rel:.3e} (limit 1e-4), {secs:.2}s"),
    );
}

#[test]
fn criterion_02_riesz_optimization_agreement() {
    let g = Grid::symmetric(1, 1.0, 1024).unwrap();
    let ball = Ball::closed(vec![0.0], 1.0);
    let spec = NormSpec::new(1, 2.0).unwrap();
    let t = DistributionRep::from_field(SampledField::constant(g.clone(), 1.0));
    let riesz = norms::dual_norm(&t, &ball, &spec, DualMethod::Riesz).unwrap();
    let opt = norms::dual_norm(&t, &ball, &spec, DualMethod::Optimization).unwrap();
    let agree_const = (riesz - opt).abs() <= 0.02 * riesz;

    let mut worst = 0.0f64;
    for &r in &[0.25f64, 0.5] {
        let atom = DistributionRep::from_atom(
            g.clone(),
            Atom {
                location: vec![0.0],
                weight: 1.0,
                derivative: MultiIndex::zero(1),
            },
        );
        let br = Ball::closed(vec![0.0], r);
        let riesz_d = norms::dual_norm(&atom, &br, &spec, DualMethod::Riesz).unwrap();
        let opt_d = norms::dual_norm(&atom, &br, &spec, DualMethod::Optimization).unwrap();
        let oracle = (r / 2.0).sqrt();
        worst = worst
            .max((riesz_d - oracle).abs() / oracle)
            .max((opt_d - oracle).abs() / oracle);
    }
    report(
        2,
        "Riesz/optimization p=2",
        agree_const && worst <= 0.02,
        &format!(
            "constant agreement {agree_const}, worst dirac deviation {worst:.3e} vs sqrt(r/2)"
        ),
    );
}

fn random_trig(grid: &Grid, rng: &mut ChaCha8Rng) -> SampledField {
    let n = grid.dim;
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                (0..n).map(|_| rng.gen_range(0.5..3.0)).collect(),
                rng.gen_range(0.0..6.28),
            )
        })
        .collect();
    SampledField::from_fn(grid.clone(), move |x| {
        terms
            .iter()
            .map(|(a, fr, ph)| {
                a * (x.iter().zip(fr.iter()).map(|(xi, fi)| xi * fi).sum::<f64>() + ph).sin()
            })
            .sum()
    })
    .unwrap()
}

#[test]
fn criterion_03_poincare_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for dim in [1usize, 2] {
        let cells = if dim == 1 { 512 } else { 64 };
        let grid = Grid::symmetric(dim, 1.0, cells).unwrap();
        let ball = Ball::closed(vec![0.0; dim], 0.7);
        for _ in 0..50 {
            let f = random_trig(&grid, &mut rng);
            for k in 1..=3usize {
                let rep = norms::verify_poincare(&f, &ball, k, 2.0).unwrap();
                checked += 1;
                if !rep.pass {
                    violations += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert_runtime(3, secs, 60.0);
    report(
        3,
        "Poincare suite",
        violations == 0,
        &format!(
            "{checked} inequalities over 100 random fields, {violations} violations, {secs:.2}s"
        ),
    );
}

#[test]
fn criterion_04_zero_boundary_poincare() {
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut members = Vec::new();
    for dim in [1usize, 2] {
        for m in 0..25 {
            let r = 0.4 + 0.03 * m as f64;
            let c = -0.2 + 0.015 * m as f64;
            let mut theta = TestFunction::bump_in(vec![c; dim], r).scale(1.0 + 0.1 * m as f64);
            if m % 2 == 1 {
                theta = theta.coordinate_multiply(0).unwrap();
            }
            members.push(theta);
        }
    }
    for theta in &members {
        for k in 1..=3usize {
            for j in 0..k {
                let rep = norms::verify_zero_boundary_poincare(theta, k, j, 2.0);
                checked += 1;
                if !rep.pass {
                    violations += 1;
                }
            }
        }
    }
    report(
        4,
        "zero-boundary Poincare",
        violations == 0,
        &format!(
            "{checked} inequalities over {} members, {violations} violations",
            members.len()
        ),
    );
}

#[test]
fn criterion_05_deformation_identity() {
    let grid = Grid::symmetric(1, 1.0, 2048).unwrap();
    let f = SampledField::from_fn(grid, |x| x[0] * x[0]).unwrap();
    let t = DistributionRep::from_field(f);
    let theta = TestFunction::standard_bump(1);
    let mut residuals = Vec::new();
    for nodes in [8usize, 16, 32, 64] {
        residuals
            .push(rescale::deformation_residual(&t, &[0.0], 0.5, 0.25, &theta, nodes).unwrap());
    }
    // Monotone up to the quadrature floor (machine-zero values count as
    // converged).
    let monotone = residuals
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
    let small = *residuals.last().unwrap() <= 1e-6;
    report(
        5,
        "deformation identity",
        monotone && small,
        &format!("residuals {} (limit 1e-6 at 64 nodes)", fmt_vec(&residuals)),
    );
}

#[test]
fn criterion_06_polylaplacian_closed_forms() {
    let start = Instant::now();
    // Closed forms: u'' = 1 -> (x^2-1)/2; u'''' = 24 -> (x^2-1)^2.
    let mut orders_ok = true;
    let mut details = String::new();
    for (i, rhs_val, exact) in [
        (
            1usize,
            1.0,
            (|x: f64| (x * x - 1.0) / 2.0) as fn(f64) -> f64,
        ),
        (2, 24.0, |x: f64| (x * x - 1.0) * (x * x - 1.0)),
    ] {
        let mut errs = Vec::new();
        for cells in [256usize, 512, 1024] {
            let g = Grid::symmetric(1, 1.0, cells).unwrap();
            let f = SampledField::constant(g.clone(), rhs_val);
            let u = pde::solve_polylaplacian(Rhs::Field(&f), &g, &Ball::closed(vec![0.0], 1.0), i)
                .unwrap();
            let mut err = 0.0f64;
            for flat in 0..g.node_count() {
                let x = g.point_flat(flat)[0];
                err = err.max((u.values[flat] - exact(x)).abs());
            }
            errs.push(err);
        }
        // The stencils are exact on these polynomial solutions, so the
        // error sits at the algebraic floor; treat floor-level errors as
        // converged, otherwise require observed order >= 1.8.
        let floor = errs.iter().all(|&e| e <= 1e-10);
        let order_ok = floor || errs.windows(2).all(|w| (w[0] / w[1]).log2() >= 1.8);
        orders_ok &= order_ok;
        details.push_str(&format!("i={i} errors {}; ", fmt_vec(&errs)));
    }

    // Largest solves.
    let g1 = Grid::symmetric(1, 1.0, 2048).unwrap();
    let f1 = SampledField::constant(g1.clone(), 1.0);
    pde::solve_polylaplacian(Rhs::Field(&f1), &g1, &Ball::closed(vec![0.0], 1.0), 1).unwrap();
    let cells_2d = if cfg!(debug_assertions) { 128 } else { 256 };
    let g2 = Grid::symmetric(2, 1.0, cells_2d).unwrap();
    let f2 = SampledField::constant(g2.clone(), 1.0);
    pde::solve_polylaplacian(Rhs::Field(&f2), &g2, &Ball::closed(vec![0.0, 0.0], 0.9), 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert_runtime(6, secs, 10.0);
    report(
        6,
        "poly-Laplacian closed forms",
        orders_ok,
        &format!("{details}largest solves (2048 | {cells_2d}^2) in {secs:.2}s total"),
    );
}

#[test]
fn criterion_07_classifier_ground_truths() {
    let spec = NormSpec::new(0, 2.0).unwrap();

    // Plateau of the (0,1) normalization for |x|: ladder 2^-3..2^-9.
    let g_fine = Grid::symmetric(1, 1.0, 16384).unwrap();
    let t_abs = DistributionRep::from_field(DemoSignal::AbsX.sample(&g_fine).unwrap());
    let ladder: Vec<f64> = (3..=9).map(|m| f64::powi(0.5, m)).collect();
    let prof = classify::residual_profile(&t_abs, &[0.0], 0, &spec, &ladder).unwrap();
    // The profile normalizes by r^{n/q+k}; the (0,1) plateau includes the
    // Hölder factor r^α as well.
    let plateau = *prof.normalized.last().unwrap() / *ladder.last().unwrap();
    let oracle = 1.0 / 6.0f64.sqrt();
    let plateau_ok = (plateau - oracle).abs() <= 0.10 * oracle;

    let g = Grid::symmetric(1, 1.0, 4096).unwrap();
    let mut truths = Vec::new();
    for (name, sig, k_exp) in [
        ("absx", DemoSignal::AbsX, 0i64),
        ("heaviside", DemoSignal::Heaviside, -1),
        ("xabsx", DemoSignal::XAbsX, 1),
        ("smooth", DemoSignal::Smooth, 3),
    ] {
        let t = DistributionRep::from_field(sig.sample(&g).unwrap());
        let rep = classify::classify_at(&t, &[0.0], &spec, 3).unwrap();
        let ok = rep.k_star == k_exp && (rep.alpha_star - 1.0).abs() < 1e-12;
        truths.push(format!("{name}:({},{})", rep.k_star, rep.alpha_star));
        assert!(ok, "{name}: got ({}, {})", rep.k_star, rep.alpha_star);
    }
    report(
        7,
        "classifier ground truths",
        plateau_ok,
        &format!(
            "plateau {plateau:.5} vs 6^-1/2 = {oracle:.5}; orders {}",
            truths.join(" ")
        ),
    );
}

#[test]
fn criterion_08_criterion_theorem_demo() {
    let g = Grid::symmetric(1, 1.0, 4096).unwrap();
    let t = DistributionRep::from_field(DemoSignal::XAbsX.sample(&g).unwrap());
    let spec = NormSpec::new(0, 2.0).unwrap();
    let finest = 16.0 * g.spacing(0);
    let points: Vec<Vec<f64>> = classify::sample_interior_points(&g, 60, 42, 0.2)
        .into_iter()
        .filter(|a| a[0].abs() > 2.0 * finest)
        .take(25)
        .collect();
    assert_eq!(points.len(), 25, "not enough interior sample points");
    let mut agree = 0usize;
    for a in &points {
        let rep = classify::verify_criterion(&t, a, 2, 0, &spec).unwrap();
        if rep.hypothesis_met && rep.conclusion_holds == Some(true) {
            agree += 1;
        }
    }
    report(
        8,
        "criterion demo x|x|",
        agree == points.len(),
        &format!(
            "{agree}/{} points: D^2 T order 0 coincides with T order >= 2",
            points.len()
        ),
    );
}

#[test]
fn criterion_09_rademacher_demo() {
    let g = Grid::symmetric(1, 1.0, 4096).unwrap();
    let spec = NormSpec::new(0, 2.0).unwrap();
    let pts = classify::sample_interior_points(&g, 200, 9, 0.15);
    let mut fractions = Vec::new();
    let mut pass = true;
    for (sig, k) in [(DemoSignal::AbsX, 1i64), (DemoSignal::XAbsX, 2)] {
        let t = DistributionRep::from_field(sig.sample(&g).unwrap());
        let rep = classify::verify_rademacher(&t, &pts, k, &spec, 0.95).unwrap();
        pass &= rep.pass;
        fractions.push(format!(
            "k={k}: {:.3} ({}/{})",
            rep.fraction, rep.upgraded, rep.eligible
        ));
    }
    report(
        9,
        "Rademacher upgrade",
        pass,
        &format!(
            "upgraded fractions {} (threshold 0.95)",
            fractions.join(", ")
        ),
    );
}

#[test]
fn criterion_10_apriori_probe_stability() {
    let region = Ball::closed(vec![0.0], 0.5);
    let zb_region = Ball::closed(vec![0.0], 1.0);
    let mut interior = Vec::new();
    let mut zero_boundary = Vec::new();
    for cells in [256usize, 512] {
        let grid = Grid::symmetric(1, 1.0, cells).unwrap();
        let family: Vec<SampledField> = (0..8)
            .map(|m| {
                let omega = 1.0 + m as f64;
                SampledField::from_fn(grid.clone(), move |x| {
                    (omega * x[0] + 0.37 * m as f64).sin()
                })
                .unwrap()
            })
            .collect();
        interior.push(
            pde::apriori_probe_interior(&family, &region, 1, 0, 2.0)
                .unwrap()
                .empirical_c,
        );
        let bumps: Vec<SampledField> = (0..3)
            .map(|m| {
                let b = TestFunction::bump_in(vec![0.0], 0.9);
                let c = 0.4 * m as f64 - 0.3;
                SampledField::from_fn(grid.clone(), move |x| b.eval(x) * (1.0 + c * x[0])).unwrap()
            })
            .collect();
        zero_boundary.push(
            pde::apriori_probe_zero_boundary(&bumps, &zb_region, 1, 0, 2.0)
                .unwrap()
                .empirical_c,
        );
    }
    let rel = |v: &[f64]| (v[0] - v[1]).abs() / v[1].max(v[0]);
    let ri = rel(&interior);
    let rz = rel(&zero_boundary);
    report(
        10,
        "a priori probe stability",
        ri <= 0.10 && rz <= 0.10,
        &format!(
            "interior C {interior:.4?} (rel {ri:.3}), zero-boundary C {zero_boundary:.4?} (rel {rz:.3})"
        ),
    );
}

#[test]
fn criterion_11_whitney() {
    let g = Grid::symmetric(1, 1.0, 512).unwrap();
    let mut mask = vec![false; g.node_count()];
    mask[g.nearest_node(&[0.0])] = true;
    let cover = whitney::build_cover(&g, &mask, 0.5).unwrap();
    let mut disjoint = true;
    for a in 0..cover.centers.len() {
        for b in (a + 1)..cover.centers.len() {
            let d = (cover.centers[a][0] - cover.centers[b][0]).abs();
            disjoint &= d >= cover.radii[a] + cover.radii[b];
        }
    }
    let part = whitney::build_partition(cover).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut max_dev = 0.0f64;
    let mut max_card = 0usize;
    for _ in 0..10_000 {
        let x = [rng.gen_range(-0.95..0.95)];
        let total: f64 = part.active(&x).iter().map(|(_, z)| z).sum();
        max_dev = max_dev.max((total - 1.0).abs());
        max_card = max_card.max(part.cover.members_near(&x).len());
    }

    let g_fine = Grid::symmetric(1, 1.0, 32768).unwrap();
    let u = SampledField::from_fn(g_fine.clone(), |x| x[0].abs().powf(3.5)).unwrap();
    let mut fine_mask = vec![false; g_fine.node_count()];
    fine_mask[g_fine.nearest_node(&[0.0])] = true;
    let local = whitney::polyharmonic_replacements(&u, 1);
    let out = whitney::glue(&u, &fine_mask, &local, 0.9, 2.5, 1, 2.0, 20.0, 5.0).unwrap();
    let mut slope_dev = 0.0f64;
    for row in &out.report.slopes {
        slope_dev = slope_dev.max((row.measured - row.expected).abs());
    }
    report(
        11,
        "Whitney machinery",
        disjoint && max_dev <= 1e-10 && max_card <= 129 && slope_dev <= 0.2,
        &format!(
            "partition deviation {max_dev:.2e}, max card {max_card}, glue slope deviation {slope_dev:.3}"
        ),
    );
}

#[test]
fn criterion_12_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_jetscope");
    let tmp = std::env::temp_dir().join("jetscope-acceptance");
    std::fs::create_dir_all(&tmp).unwrap();
    let analyze = |jobs: &str, out: &str| {
        Command::new(bin)
            .args([
                "analyze", "--demo", "xabsx", "--cells", "1024", "--points", "0.0;0.25", "--k-max",
                "2", "--jobs", jobs, "--out",
            ])
            .arg(tmp.join(out))
            .output()
            .unwrap()
    };
    let a1 = analyze("1", "a1");
    let a2 = analyze("1", "a2");
    let a4 = analyze("4", "a4");
    let analyze_ok = a1.stdout == a2.stdout && a1.stdout == a4.stdout && !a1.stdout.is_empty();
    let verify = |jobs: &str, out: &str| {
        Command::new(bin)
            .args(["verify", "whitney", "--jobs", jobs, "--out"])
            .arg(tmp.join(out))
            .output()
            .unwrap()
    };
    let v1 = verify("1", "v1");
    let v4 = verify("4", "v4");
    let verify_ok = v1.stdout == v4.stdout && !v1.stdout.is_empty();
    report(
        12,
        "determinism",
        analyze_ok && verify_ok,
        &format!("analyze byte-identical across runs/jobs: {analyze_ok}; verify: {verify_ok}"),
    );
}
