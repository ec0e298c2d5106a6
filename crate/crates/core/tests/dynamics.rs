use kdvkam::dynamics::*;
use kdvkam::nonlin::{linearized_coefficients, NonlinearitySpec};
use kdvkam::opalg::DiagonalOperator;
use kdvkam::solver::{linearize, nash_moser, NashMoserConfig};
use kdvkam::spectral::{Frequency, Truncation};
use kdvkam::{Error, Field, C};
use rand::SeedableRng;

fn tr(n: usize) -> Truncation {
    Truncation::new(1, n, n, 2).unwrap()
}

fn freq(n: usize) -> Frequency<f64> {
    Frequency::preset(1, 1.118, n).unwrap()
}

fn state(n_x: usize, seed: u64) -> PhaseState<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    PhaseState::random(n_x, 3, 0.5, &mut rng)
}

fn zero_coeffs(t: Truncation) -> [Field; 4] {
    [0; 4].map(|_| Field::zeros(t))
}

fn random_coeffs(t: Truncation, amp: f64, seed: u64) -> [Field; 4] {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    [amp, amp, amp, amp * 0.1].map(|a| Field::random(t, 2, a, 0.5, &mut rng))
}

fn max_diff(a: &PhaseState<f64>, b: &PhaseState<f64>) -> f64 {
    a.h.iter().zip(&b.h).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

#[test]
fn reduced_flow_examples() {
    let v0 = state(6, 1);
    let airy = DiagonalOperator::dispersive(6, 1.0, 0.0);
    assert_eq!(reduced_flow(&airy, &v0, 0.0), v0);
    let t = 3.7;
    let v = reduced_flow(&airy, &v0, t);
    for j in -6i64..=6 {
        let want = v0.get(j) * C::new(0.0, (j * j * j) as f64 * t).exp();
        assert!((v.get(j) - want).norm() < 1e-13);
    }
    for s in [0.0, 1.0, 3.0] {
        assert!((v.norm(s) - v0.norm(s)).abs() < 1e-13 * v0.norm(s));
    }
    let mu = DiagonalOperator::from_fn(6, |j| C::new(0.0, -1.001 * (j * j * j) as f64 + 0.02 * j as f64));
    let two = reduced_flow(&mu, &reduced_flow(&mu, &v0, 1.3), 2.1);
    let one = reduced_flow(&mu, &v0, 3.4);
    assert!(max_diff(&two, &one) < 1e-13);
    assert!((two.t - 3.4).abs() < 1e-15);
}

#[test]
fn zero_coefficients_give_the_airy_flow() {
    let n = 6;
    let h0 = state(n, 2);
    let traj = integrate_linear(&zero_coeffs(tr(n)), &freq(n), &h0, 2.0, 1e-2, 4).unwrap();
    assert_eq!(traj.len(), 5);
    let airy = DiagonalOperator::dispersive(n, 1.0, 0.0);
    for h in &traj {
        let want = reduced_flow(&airy, &h0, h.t);
        assert!(max_diff(h, &want) < 1e-12, "t = {}", h.t);
    }
}

#[test]
fn self_convergence_order() {
    let n = 4;
    let t = tr(n);
    let coeffs = random_coeffs(t, 0.05, 3);
    let f = freq(n);
    let h0 = state(n, 4);
    let end = |dt: f64| integrate_linear(&coeffs, &f, &h0, 1.0, dt, 1).unwrap().pop().unwrap();
    let (a, b, c) = (end(4e-3), end(2e-3), end(1e-3));
    let order = (a.distance(&b, 0.0).unwrap() / b.distance(&c, 0.0).unwrap()).log2();
    assert!(order >= 3.5, "observed order {order}");
}

#[test]
fn time_translation_consistency() {
    let n = 5;
    let coeffs = random_coeffs(tr(n), 0.02, 5);
    let f = freq(n);
    let h0 = state(n, 6);
    let full = integrate_linear(&coeffs, &f, &h0, 2.0, 1e-3, 1).unwrap().pop().unwrap();
    let mid = integrate_linear(&coeffs, &f, &h0, 1.0, 1e-3, 1).unwrap().pop().unwrap();
    let two = integrate_linear(&coeffs, &f, &mid, 1.0, 1e-3, 1).unwrap().pop().unwrap();
    assert!(max_diff(&full, &two) < 1e-9 * full.norm(0.0));
    assert!(two.reality_defect() < 1e-13);
}

#[test]
fn growth_is_reported_as_instability() {
    let n = 3;
    let t = tr(n);
    let mut coeffs = zero_coeffs(t);
    coeffs[0] = Field::constant(t, -1.0);
    match integrate_linear(&coeffs, &freq(n), &state(n, 7), 20.0, 1e-2, 2) {
        Err(Error::Unstable { t, growth }) => assert!(growth > GROWTH_LIMIT && t < 20.0 && t > 13.0),
        other => panic!("expected instability, got {other:?}"),
    }
}

#[test]
fn zero_epsilon_is_exactly_stable() {
    let n = 5;
    let t = tr(n);
    let f = freq(n);
    let spec = NonlinearitySpec::builtin("quasilinear_cubic", 0.0).unwrap();
    let cfg = NashMoserConfig::default();
    let lin = linearize(&spec, &f, &Field::zeros(t), &cfg, cfg.gamma).unwrap();
    let rep = stability_report(
        &lin,
        &zero_coeffs(t.widened(2)),
        &f,
        &state(n, 8),
        &StabilityConfig { t_end: 5.0, dt: 1e-2, s: 1.0, n_samples: 5 },
    )
    .unwrap();
    assert!((rep.max_ratio - 1.0).abs() < 1e-12 && (rep.min_ratio - 1.0).abs() < 1e-12);
    assert!(rep.v_drift < 1e-12);
    assert!(rep.endpoint_discrepancy < 1e-12);
}

#[test]
fn perturbed_solution_is_stable() {
    let n = 6;
    let t = tr(n);
    let f = freq(n);
    let spec = NonlinearitySpec::builtin("strongly_forced_cubic", 1e-3).unwrap();
    let r = nash_moser(&spec, &f, t, &NashMoserConfig::default()).unwrap();
    let lin = r.linearization.unwrap();
    let coeffs = linearized_coefficients(&spec, &r.solution, &t.widened(2)).unwrap();
    let cfg = StabilityConfig { t_end: 10.0, dt: 1e-3, s: 1.0, n_samples: 10 };
    let h0s = [state(n, 9), state(n, 10)];
    for rep in stability_reports(&lin, &coeffs, &f, &h0s, &cfg).unwrap() {
        assert!(rep.v_drift < 1e-8, "{}", rep.v_drift);
        assert!(rep.min_ratio > 0.9 && rep.max_ratio < 1.1);
        assert!(rep.endpoint_discrepancy < 1e-4);
        assert!(rep.envelope.a < 1.1 && rep.envelope.w_inv < 1.1);
    }
    let chain = FrozenChain::new(&lin);
    for tau in [0.0, 0.7, 13.2] {
        let t = chain.psi_inv(&f, tau).unwrap();
        assert!((chain.psi(&f, t) - tau).abs() < 1e-13);
    }
    // halving dt leaves the endpoint unchanged to 1e-6
    let h0 = state(n, 11);
    let end = |dt: f64| integrate_linear(&coeffs, &f, &h0, 5.0, dt, 1).unwrap().pop().unwrap();
    let (a, b) = (end(2e-3), end(1e-3));
    assert!(a.distance(&b, 1.0).unwrap() < 1e-6 * b.norm(1.0));
}

#[test]
fn dissipative_spectrum_is_rejected() {
    let n = 4;
    let t = tr(n);
    let f = freq(n);
    let spec = NonlinearitySpec::builtin("drifting_cubic", 1e-3).unwrap();
    let cfg = NashMoserConfig::default();
    let u = Field::zeros(t);
    let lin = linearize(&spec, &f, &u, &cfg, cfg.gamma).unwrap();
    let coeffs = linearized_coefficients(&spec, &u, &t.widened(2)).unwrap();
    let r = stability_report(&lin, &coeffs, &f, &state(n, 12), &StabilityConfig::default());
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn random_states_are_real() {
    let s = state(7, 13);
    assert_eq!(s.reality_defect(), 0.0);
    assert!(s.get(0).im == 0.0);
    assert!(s.norm(2.0) >= s.norm(1.0));
    assert!(PhaseState::<f64>::new(vec![C::new(0.0, 0.0); 4], 0.0).is_err());
}
