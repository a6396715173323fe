use num_complex::Complex64;
use oscint::lab::{
    dyadic_lambdas, fit_decay, oscillatory_1d, scalar_integral, simpson_grid, witness_pair, CutoffSpec,
    DiscretizedOperator, LabError,
};
use oscint::parser::parse_phase;
use oscint::series::BiSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn phase(s: &str) -> BiSeries {
    parse_phase(s).unwrap()
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
}

/// ∫ |u|^q with the operator's quadrature weights; q = ∞ gives the max.
fn lq_norm(u: &[f64], w: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        u.iter().cloned().fold(0.0, f64::max)
    } else {
        u.iter().zip(w).map(|(a, w)| w * a.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

#[test]
fn zero_frequency_apply_is_row_integral() {
    let cutoff = CutoffSpec::indicator((0.0, 0.0), 1.0);
    let op = DiscretizedOperator::new(&phase("x^3*y - x*y^2"), 0.0, cutoff, 65).unwrap();
    let f: Vec<Complex64> = op.ys.iter().map(|y| Complex64::new(y * y, 0.0)).collect();
    for v in op.apply(&f) {
        assert!((v - Complex64::new(2.0 / 3.0, 0.0)).norm() < 1e-12);
    }
    let zero = vec![Complex64::new(0.0, 0.0); 65];
    assert!(op.apply(&zero).iter().all(|v| v.norm() == 0.0));
}

#[test]
fn apply_matches_sinc() {
    // ∫_{-1}^{1} e^{iλxy} dy = 2 sin(λx)/(λx)
    let lambda = 32.0;
    let op = DiscretizedOperator::new(&phase("x*y"), lambda, CutoffSpec::indicator((0.0, 0.0), 1.0), 4096).unwrap();
    let ones = vec![Complex64::new(1.0, 0.0); 4096];
    let tf = op.apply(&ones);
    for (x, v) in op.xs.iter().zip(&tf) {
        let exact = if *x == 0.0 { 2.0 } else { 2.0 * (lambda * x).sin() / (lambda * x) };
        assert!((v - Complex64::new(exact, 0.0)).norm() <= 1e-6, "x = {x}: {v} vs {exact}");
    }
}

#[test]
fn rank_one_norm_at_zero_frequency() {
    let cutoff = CutoffSpec::bump((0.0, 0.0), 1.0);
    let op = DiscretizedOperator::new(&phase("x*y"), 0.0, cutoff, 257).unwrap();
    let (xs, w) = simpson_grid(-1.0, 1.0, 257);
    let chi_sq: f64 = xs.iter().zip(&w).map(|(x, w)| w * cutoff.x_factor(*x).powi(2)).sum();
    let norm = op.l2_norm_estimate(100).unwrap();
    assert!((norm / chi_sq - 1.0).abs() < 1e-6, "{norm} vs {chi_sq}");
}

#[test]
fn random_kernel_matches_dense_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [64, 128, 256] {
        let a: i32 = rng.gen_range(1..=16);
        let b: i32 = rng.gen_range(1..=16);
        let s = phase(&format!("{a}/8*x^2*y - {b}/8*x*y^3 + x*y"));
        let op = DiscretizedOperator::new(&s, rng.gen_range(10.0..200.0), CutoffSpec::bump((0.1, -0.1), 0.9), n).unwrap();
        let dense = op.weighted_matrix().singular_values().max();
        let est = op.l2_norm_estimate(300).unwrap();
        assert!(((est - dense) / dense).abs() < 1e-6, "n = {n}: {est} vs {dense}");
    }
}

#[test]
fn nonconvergence_reports_gap() {
    let op = DiscretizedOperator::new(&phase("x*y + x^2*y^3"), 300.0, CutoffSpec::unit_square(), 256).unwrap();
    match op.l2_norm_estimate(1) {
        Err(LabError::NonConvergence { gap }) => assert!(gap > 0.0, "{gap}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn adjoint_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = phase("x^2*y - 3*x*y^2 + x*y");
    for cutoff in [CutoffSpec::bump((0.2, -0.3), 0.7), CutoffSpec::rectangle((0.0, 1.0), (-0.5, 0.25))] {
        let op = DiscretizedOperator::new(&s, 57.0, cutoff, 129).unwrap();
        let adj = DiscretizedOperator::adjoint(&s, 57.0, cutoff, 129).unwrap();
        for _ in 0..5 {
            let f = random_vec(129, &mut rng);
            let g = random_vec(129, &mut rng);
            let lhs = op.inner_x(&op.apply(&f), &g);
            let rhs = adj.inner_x(&f, &adj.apply(&g)).conj();
            assert!((lhs - rhs.conj()).norm() <= 1e-10 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
            assert!((lhs - op.inner_y(&f, &op.apply_adjoint(&g))).norm() <= 1e-10 * lhs.norm().max(1.0));
        }
    }
}

#[test]
fn size_estimate_on_boxes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = phase("x^3*y^2 - x*y");
    for (sigma, rho) in [(1.0, 1.0), (0.25, 0.5), (0.125, 1.0 / 32.0)] {
        let op = DiscretizedOperator::new(&s, 40.0, CutoffSpec::rectangle((0.1, 0.1 + sigma), (0.2, 0.2 + rho)), 65).unwrap();
        for _ in 0..10 {
            let f: Vec<f64> = (0..65).map(|_| rng.gen::<f64>()).collect();
            let g: Vec<f64> = (0..65).map(|_| rng.gen::<f64>()).collect();
            let fc: Vec<Complex64> = f.iter().map(|v| Complex64::new(*v, 0.0)).collect();
            let gc: Vec<Complex64> = g.iter().map(|v| Complex64::new(*v, 0.0)).collect();
            let pairing = op.inner_x(&op.apply(&fc), &gc).norm();
            for q in [1.0, 2.0, f64::INFINITY] {
                let qq = if q == 1.0 { f64::INFINITY } else if q == 2.0 { 2.0 } else { 1.0 };
                let bound = sigma.powf(1.0 / q) * rho.powf(1.0 / qq) * lq_norm(&f, &op.wy, q) * lq_norm(&g, &op.wx, qq);
                assert!(pairing <= bound * (1.0 + 1e-12), "σ = {sigma}, ρ = {rho}, q = {q}: {pairing} > {bound}");
            }
        }
    }
}

#[test]
fn strip_norms_share_a_constant() {
    // ‖T‖ λ^{1/2} for xy on [0,1] × [0, δ₂] stays below the constant of the full square
    let s = phase("x*y");
    let lambdas = [64.0, 256.0, 1024.0];
    let mut worst: f64 = 0.0;
    for k in 0..=6 {
        let d = 2f64.powi(-k);
        for &l in &lambdas {
            let op = DiscretizedOperator::new(&s, l, CutoffSpec::rectangle((0.0, 1.0), (0.0, d)), 1024).unwrap();
            worst = worst.max(op.l2_norm_estimate(200).unwrap() * l.sqrt());
        }
    }
    assert!(worst <= 1.05 * (2.0 * std::f64::consts::PI).sqrt(), "{worst}");
}

#[test]
fn almost_orthogonal_blocks() {
    let s = phase("x^2*y + x*y^2");
    let domain = CutoffSpec::unit_square();
    let blocks = [((0.0, 0.3), (0.5, 1.0)), ((0.3, 0.55), (0.0, 0.2)), ((0.6, 1.0), (0.2, 0.45))];
    let inside = |(x0, x1): (f64, f64), (y0, y1): (f64, f64), x: f64, y: f64| x >= x0 && x < x1 && y >= y0 && y < y1;
    let mut max_single: f64 = 0.0;
    for &(bx, by) in &blocks {
        let op = DiscretizedOperator::from_fn(&s, 200.0, domain, 256, |x, y| if inside(bx, by, x, y) { 1.0 } else { 0.0 }).unwrap();
        max_single = max_single.max(op.l2_norm_estimate(200).unwrap());
    }
    let sum = DiscretizedOperator::from_fn(&s, 200.0, domain, 256, |x, y| {
        blocks.iter().filter(|(bx, by)| inside(*bx, *by, x, y)).count() as f64
    })
    .unwrap();
    let total = sum.l2_norm_estimate(200).unwrap();
    assert!(total <= 2.0 * max_single, "{total} vs {max_single}");
}

#[test]
fn shrinking_the_cutoff_never_raises_the_norm() {
    let s = phase("x*y^2 - x^3*y");
    let domain = CutoffSpec::indicator((0.0, 0.0), 1.0);
    let mut last = f64::INFINITY;
    for r in [1.0, 0.8, 0.6, 0.4, 0.2] {
        let op = DiscretizedOperator::from_fn(&s, 150.0, domain, 256, |x, y| if x.abs() <= r && y.abs() <= r { 1.0 } else { 0.0 }).unwrap();
        let n = op.l2_norm_estimate(200).unwrap();
        assert!(n <= last + 1e-8, "r = {r}: {n} > {last}");
        last = n;
    }
}

#[test]
fn scalar_integral_examples() {
    let cutoff = CutoffSpec::bump((0.0, 0.0), 1.0);
    let zero = scalar_integral(&phase("x*y"), &cutoff, 0.0, 257).unwrap();
    let (xs, w) = simpson_grid(-1.0, 1.0, 257);
    let one_d: f64 = xs.iter().zip(&w).map(|(x, w)| w * cutoff.x_factor(*x)).sum();
    assert!((zero.re - one_d * one_d).abs() < 1e-12 && zero.im.abs() < 1e-12);
    // x²y² decays at least like λ^{-1/4}
    let s = phase("x^2*y^2");
    let lambdas = dyadic_lambdas(6, 12);
    let values: Vec<f64> = lambdas.iter().map(|l| scalar_integral(&s, &cutoff, *l, (4 * *l as usize).max(512) | 1).unwrap().norm()).collect();
    let (slope, _) = fit_decay(&lambdas, &values).unwrap();
    assert!(slope <= -0.25, "{slope}");
}

#[test]
fn witness_examples() {
    let s = phase("x*y");
    let cutoff = CutoffSpec::unit_square();
    let delta = 1.0 / 64.0;
    for l in dyadic_lambdas(4, 14) {
        let w = witness_pair(&s, &cutoff, 1.0, 2.0, 0.5, l, delta).unwrap();
        let r = w.ratio / l.powf(-0.5);
        assert!(r >= delta / 2.0 && r <= 2.0 * delta, "λ = {l}: {r}");
    }
    let w = witness_pair(&s, &cutoff, 1.0, 2.0, 0.5, 1.0, 1e-4).unwrap();
    assert!((w.ratio / 1e-4 - 1.0).abs() < 1e-6);
    match witness_pair(&s, &cutoff, 1.0, 2.0, 0.5, 1e4, 0.5) {
        Err(LabError::DeltaTooLarge { suggest, .. }) => assert!(witness_pair(&s, &cutoff, 1.0, 2.0, 0.5, 1e4, suggest).is_ok()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn linear_phase_integral_is_exact() {
    for l in [3.0, 17.5, 400.0] {
        let i = oscillatory_1d(&[0.0, 1.0], (0.0, 1.0), l).norm();
        let exact = (Complex64::new(0.0, l).exp() - 1.0).norm() / l;
        assert!((i - exact).abs() < 1e-9 && i <= 2.0 / l);
    }
}

#[test]
fn fit_examples() {
    let l = dyadic_lambdas(4, 14);
    let v: Vec<f64> = l.iter().map(|x| x.powf(-0.5)).collect();
    let (s, r) = fit_decay(&l, &v).unwrap();
    assert!((s + 0.5).abs() < 1e-12 && r < 1e-12);
    let v: Vec<f64> = l.iter().map(|x| 3.0 * x.powf(-0.25)).collect();
    assert!((fit_decay(&l, &v).unwrap().0 + 0.25).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let v: Vec<f64> = l.iter().map(|x| x.powf(-1.0 / 3.0) * (1.0 + rng.gen_range(-0.05..0.05))).collect();
    assert!((fit_decay(&l, &v).unwrap().0 + 1.0 / 3.0).abs() <= 0.02);
    assert!(matches!(fit_decay(&l[..2], &v[..2]), Err(LabError::TooFewPoints(2))));
}
