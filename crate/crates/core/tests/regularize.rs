use kdvkam::nonlin::{LinearizedOperator, NonlinearitySpec};
use kdvkam::opalg::ToplitzOperator;
use kdvkam::regularize::*;
use kdvkam::scalar::ij_pow;
use kdvkam::spectral::{s0, Frequency, Truncation};
use kdvkam::{Error, Field, C};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn tr(n_phi: usize, n_x: usize) -> Truncation {
    Truncation::new(1, n_phi, n_x, 2).unwrap()
}

fn freq(n_phi: usize) -> Frequency<f64> {
    Frequency::preset(1, 1.0, n_phi).unwrap()
}

fn zeros(t: Truncation) -> [Field; 4] {
    [0; 4].map(|_| Field::zeros(t))
}

fn trapezoid(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    (0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).sum::<f64>() / n as f64
}

fn small_u(t: Truncation, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field::random(t, 3, 0.05, 0.3, &mut rng).even_part()
}

#[test]
fn step1_identity_conjugation() {
    let t = tr(3, 6);
    let f = freq(3);
    let mut a = zeros(t);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..3 {
        a[k] = Field::random(t, 3, 0.1, 0.0, &mut rng);
    }
    let st = step1_space_diffeo(&a, &f, false).unwrap();
    assert!(st.b.distance(&Field::one(t), 0.0).unwrap() < 1e-15);
    assert!(st.beta.max_coeff() < 1e-15, "{:e}", st.beta.max_coeff());
    for k in 0..3 {
        let d = st.coeffs[k].distance(&a[k], 0.0).unwrap();
        assert!(d < 1e-13, "{k} {d:e}");
    }

    a[3] = Field::constant(t, 0.2);
    let st = step1_space_diffeo(&a, &f, false).unwrap();
    assert!(st.b.distance(&Field::constant(t, 1.2), 0.0).unwrap() < 1e-14);
    assert!(st.beta.max_coeff() < 1e-15);
}

#[test]
fn step1_cosine_against_quadrature() {
    let t = tr(2, 16);
    let f = freq(2);
    let mut a = zeros(t);
    a[3] = Field::from_fn(t, |_, x| 0.05 * x.cos()).unwrap();
    let st = step1_space_diffeo(&a, &f, false).unwrap();
    let b = trapezoid(4000, |x| (1.0 + 0.05 * x.cos()).powf(-1.0 / 3.0)).powi(-3);
    assert!((st.b.mean() - b).abs() < 1e-11);
    assert!(st.b.is_phi_only(1e-15));
    assert!(st.b3_variance < 1e-9);
    // β_x = ρ₀ by construction
    let rho0 = Field::from_fn(t, |_, x| b.powf(1.0 / 3.0) * (1.0 + 0.05 * x.cos()).powf(-1.0 / 3.0) - 1.0).unwrap();
    assert!(st.beta.dx_pow(1).distance(&rho0, 0.0).unwrap() < 1e-12);
}

#[test]
fn step1_rejects_degenerate_coefficient() {
    let t = tr(1, 4);
    let mut a = zeros(t);
    a[3] = Field::from_fn(t, |_, x| -0.7 * x.cos()).unwrap();
    assert!(matches!(step1_space_diffeo(&a, &freq(1), false), Err(Error::DegenerateCoefficient(_))));
}

#[test]
fn step2_examples() {
    let t = tr(6, 4);
    let f = freq(6);
    let z = Field::zeros(t);
    let st = step2_time_reparam(&Field::constant(t, 1.3), [&z, &z, &z], &f).unwrap();
    assert!((st.m3 - 1.3).abs() < 1e-15);
    assert!(st.alpha.is_zero());
    assert!(st.rho.distance(&Field::one(t), 0.0).unwrap() < 1e-15);

    let delta = 0.1;
    let b3 = Field::from_fn(t, |p, _| 1.0 + delta * p[0].cos()).unwrap();
    let st = step2_time_reparam(&b3, [&z, &z, &z], &f).unwrap();
    assert!((st.m3 - 1.0).abs() < 1e-15);
    let want = Field::from_fn(t, |p, _| delta * p[0].sin()).unwrap();
    assert!(st.alpha.distance(&want, 0.0).unwrap() < 1e-12);
    assert!(st.diagnostic.identity_residual < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r = Field::random(t, 4, 0.05, 0.2, &mut rng).phi_average();
    let b3 = Field::from_fn(t, |p, _| 1.0 + r.eval_at(p, 0.0)).unwrap();
    let st = step2_time_reparam(&b3, [&z, &z, &z], &f).unwrap();
    let quad = trapezoid(512, |p| b3.eval_at(&[p], 0.0));
    assert!((st.m3 - quad).abs() < 1e-12);
}

#[test]
fn step3_examples() {
    let t = tr(2, 16);
    let f = freq(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c0 = Field::random(t, 4, 0.1, 0.0, &mut rng);
    let c1 = Field::random(t, 4, 0.1, 0.0, &mut rng);
    let st = step3_descent_zero(&[c0.clone(), c1.clone(), Field::zeros(t)], 1.0, &f, 1e-9).unwrap();
    assert!(st.v.distance(&Field::one(t), 0.0).unwrap() < 1e-15);
    let (e1, e0) = (st.d[1].distance(&c1, 0.0).unwrap(), st.d[0].distance(&c0, 0.0).unwrap());
    assert!(e1 < 1e-12 && e0 < 1e-12, "{e1:e} {e0:e}");

    let delta = 0.2;
    let c2 = Field::from_fn(t, |_, y| delta * y.cos()).unwrap();
    let st = step3_descent_zero(&[c0.clone(), c1.clone(), c2.clone()], 1.0, &f, 1e-9).unwrap();
    let v = Field::from_fn(t, |_, y| (-delta * y.sin() / 3.0).exp()).unwrap();
    assert!(st.v.distance(&v, 0.0).unwrap() < 1e-13);
    let t2 = st.v.dx_pow(1).scale(3.0).add(&c2.mul(&st.v).unwrap()).unwrap();
    assert!(t2.max_coeff() < 1e-12);

    let bad = Field::from_fn(t, |p, y| 0.1 + 0.01 * p[0].cos() + y.sin()).unwrap();
    assert!(matches!(step3_descent_zero(&[c0, c1, bad], 1.0, &f, 1e-9), Err(Error::ZeroMean { .. })));
}

#[test]
fn step4_examples() {
    let t = tr(4, 4);
    let f = Frequency::preset(1, 1.3, 4).unwrap();
    let z = Field::zeros(t);
    let st = step4_translation(&[z.clone(), Field::constant(t, 0.7)], &f).unwrap();
    assert!((st.m1 - 0.7).abs() < 1e-15);
    assert!(st.p.is_zero());
    assert!(st.e[1].distance(&Field::constant(t, 0.7), 0.0).unwrap() < 1e-15);

    // ω·∂_θ p = m₁ − avg_x d₁ = −cos θ
    let d1 = Field::from_fn(t, |p, _| p[0].cos()).unwrap();
    let st = step4_translation(&[z.clone(), d1], &f).unwrap();
    assert!(st.m1.abs() < 1e-15);
    let want = Field::from_fn(t, |p, _| -p[0].sin() / 1.3).unwrap();
    assert!(st.p.distance(&want, 0.0).unwrap() < 1e-14);
    assert!(st.e[1].x_average().max_coeff() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d1 = Field::random(t, 4, 0.2, 0.1, &mut rng);
    let st = step4_translation(&[z, d1.clone()], &f).unwrap();
    let quad = trapezoid(64, |p| trapezoid(64, |x| d1.eval_at(&[p], x)));
    assert!((st.m1 - quad).abs() < 1e-12);
    assert!(st.e1_defect < 1e-10);
}

#[test]
fn step5_examples() {
    let t = tr(3, 6);
    let wide = t.widened(2);
    let f = freq(3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let e0 = Field::random(wide, 4, 0.01, 0.2, &mut rng);
    let st = step5_pseudo_diff(&[e0.clone(), Field::constant(wide, 0.3)], 1.0, 0.3, &f, Mode::GenericQ, t, 1e-15).unwrap();
    assert!(st.w.is_zero());
    assert_eq!(st.s, ToplitzOperator::identity(t));
    let want = ToplitzOperator::from_multiplication(&e0, t).unwrap();
    assert!(st.r.sub(&want).unwrap().max_abs() < 1e-15);

    let e1 = Field::random(wide, 4, 0.01, 0.2, &mut rng);
    let e1 = e1.sub(&e1.x_average()).unwrap().add_constant(0.02);
    let st = step5_pseudo_diff(&[e0, e1], 1.01, 0.02, &f, Mode::GenericQ, t, 1e-15).unwrap();
    assert!(st.r1_max < 1e-12);
}

/// `L₄S − SD` formed directly from the operator algebra.
fn direct_commutator(st: &Step5<f64>, e: &[Field; 2], m3: f64, m1: f64, f: &Frequency<f64>, t: Truncation) -> ToplitzOperator<f64> {
    let sym = |j: i64| ij_pow::<f64>(j, 3) * m3 + ij_pow::<f64>(j, 1) * m1;
    let l4 = ToplitzOperator::from_multiplication(&e[1].add_constant(-m1), t)
        .unwrap()
        .right_diag(|j| ij_pow(j, 1))
        .add(&ToplitzOperator::from_multiplication(&e[0], t).unwrap())
        .unwrap();
    let comm = st.s.omega_dphi_commutator(f).add(&st.s.left_diag(sym).sub(&st.s.right_diag(sym)).unwrap()).unwrap();
    comm.add(&l4.compose(&st.s).unwrap()).unwrap()
}

#[test]
fn step5_remainder_matches_direct_conjugation() {
    let t = tr(3, 8);
    let wide = t.widened(2);
    let f = freq(3);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let e0 = Field::random(wide, 2, 1e-3, 0.0, &mut rng);
    let e1 = Field::random(wide, 2, 1e-3, 0.0, &mut rng);
    let m1 = 2e-4;
    // the translation step leaves ⟨e₁⟩_x ≡ m₁
    let e1 = e1.sub(&e1.x_average()).unwrap().add_constant(m1);
    let e = [e0, e1];
    let st = step5_pseudo_diff(&e, 1.0, m1, &f, Mode::GenericQ, t, 1e-15).unwrap();
    let direct = direct_commutator(&st, &e, 1.0, m1, &f, t);
    let sr = st.s.compose(&st.r).unwrap();
    // entries away from the cutoffs, where truncating the products is exact
    let mut worst = 0.0f64;
    for l in -3i64..=3 {
        for j1 in -4i64..=4 {
            for j2 in -8i64..=8 {
                let d = (sr.get(&[l], j1, j2) - direct.get(&[l], j1, j2)).norm();
                worst = worst.max(d);
            }
        }
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn zero_epsilon_is_trivial() {
    let t = tr(4, 4);
    let f = freq(4);
    let spec = NonlinearitySpec::builtin("quasilinear_cubic", 0.0).unwrap();
    let r = run_regularization(&spec, &f, &small_u(t, 7), &RegConfig::default()).unwrap();
    assert!((r.m3 - 1.0).abs() < 1e-15 && r.m1.abs() < 1e-15);
    assert!(r.r.max_abs() < 1e-13, "{:e}", r.r.max_abs());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z = Field::random(t, 4, 1.0, 0.0, &mut rng);
    assert!(r.phi1(&z).unwrap().distance(&z, 0.0).unwrap() < 1e-14);
    assert!(r.phi2_inv(&z).unwrap().distance(&z, 0.0).unwrap() < 1e-14);
}

#[test]
fn quasilinear_pipeline() {
    let t = tr(12, 12);
    let f = freq(12);
    let spec = NonlinearitySpec::builtin("quasilinear_cubic", 1e-3).unwrap();
    let u = small_u(t, 9);
    let r = run_regularization(&spec, &f, &u, &RegConfig::default()).unwrap();
    let c = &r.checks;
    assert!(c.b3_variance < 1e-9);
    assert!(c.c2_mean < 1e-10);
    assert!(c.t2_norm < 1e-10);
    assert!(c.e1_defect < 1e-10);
    assert!(c.r1_max < 1e-12);
    assert!((r.m3 - 1.0).abs() < 1e-3 && r.m1.abs() < 1e-3);
    for (name, d) in r.parity_defects() {
        assert!(d < 1e-12, "{name}: {d:e}");
    }
    assert!(r.r.is_real(1e-14));
    assert!(r.r.is_reversible(1e-12));

    let lin = LinearizedOperator::at(&spec, &f, &u, &t.widened(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..3 {
        let z = Field::random(t, 6, 1.0, 0.0, &mut rng);
        let z = z.scale(1.0 / z.sobolev_norm(s0(1)));
        assert!(r.conjugacy_residual(&lin, &z).unwrap() < 1e-6);
        assert!(r.phi1_inv(&r.phi1(&z).unwrap()).unwrap().distance(&z, s0(1)).unwrap() < 1e-8);
        assert!(r.phi2_inv(&r.phi2(&z).unwrap()).unwrap().distance(&z, s0(1)).unwrap() < 1e-8);
    }
}

#[test]
fn remainder_scales_linearly_in_epsilon() {
    let t = tr(8, 8);
    let f = freq(8);
    let u = small_u(t, 11);
    let run = |eps: f64| {
        let spec = NonlinearitySpec::builtin("quasilinear_cubic", eps).unwrap();
        run_regularization(&spec, &f, &u, &RegConfig::default()).unwrap()
    };
    let (a, b) = (run(1e-3), run(1e-4));
    let ratio = (a.checks.r_norm / 1e-3) / (b.checks.r_norm / 1e-4);
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    let ratio = ((a.m3 - 1.0).abs() / 1e-3) / ((b.m3 - 1.0).abs() / 1e-4);
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
}

#[test]
fn hamiltonian_mode_skips_descent() {
    let t = tr(8, 8);
    let f = freq(8);
    let spec = NonlinearitySpec::builtin("hamiltonian_cubic", 1e-3).unwrap();
    let u = small_u(t, 12);
    let r = run_regularization(&spec, &f, &u, &RegConfig::default()).unwrap();
    assert_eq!(r.mode, Mode::Hamiltonian);
    assert!(r.checks.b2_norm < 1e-10, "{:e}", r.checks.b2_norm);
    assert!(r.checks.steps[2].step.contains("skipped"));
    assert!(r.chain.v.distance(&Field::one(t.widened(2)), 0.0).unwrap() == 0.0);
    let lin = LinearizedOperator::at(&spec, &f, &u, &t.widened(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let z = Field::random(t, 4, 1.0, 0.0, &mut rng);
    let z = z.scale(1.0 / z.sobolev_norm(s0(1)));
    assert!(r.conjugacy_residual(&lin, &z).unwrap() < 1e-6);
}

#[test]
fn inadmissible_nonlinearity_is_rejected() {
    let t = tr(2, 2);
    // (F) and (Q) both fail
    let spec = NonlinearitySpec::parse("z2*z3^2", Default::default(), 1e-3).unwrap();
    let err = run_regularization(&spec, &freq(2), &Field::zeros(t), &RegConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    let _ = C::new(0.0, 0.0);
}
