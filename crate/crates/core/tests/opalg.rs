mod common;

use common::*;
use kdvkam::opalg::*;
use kdvkam::scalar::ij_pow;
use kdvkam::spectral::{s0, Frequency, Truncation};
use kdvkam::{Field, C};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tr(n_phi: usize, n_x: usize) -> Truncation {
    Truncation::new(1, n_phi, n_x, 2).unwrap()
}

#[test]
fn multiplication_examples() {
    let t = tr(3, 5);
    assert_eq!(Op::multiplication(&Field::one(t)), Op::identity(t));
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = Field::random(t, 3, 1.0, 0.2, &mut rng);
    let h = Field::random(t, 3, 1.0, 0.2, &mut rng);
    let op = Op::multiplication(&p);
    for s in [0.0, 1.0, 2.5] {
        let (a, b) = (op.decay_norm(s), p.sobolev_norm(s));
        assert!((a - b).abs() <= 1e-13 * b);
    }
    assert!(op.apply(&h).unwrap().distance(&p.mul(&h).unwrap(), 0.0).unwrap() < 1e-12);
    assert!(op.apply(&Field::one(t)).unwrap().distance(&p, 0.0).unwrap() < 1e-15);
}

#[test]
fn multiplier_examples() {
    let t = tr(2, 6);
    let d3 = Op::from_multiplier(t, |j| ij_pow(j, 3));
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let u = Field::random(t, 6, 1.0, 0.0, &mut rng);
    assert!(d3.apply(&u).unwrap().distance(&u.dx_pow(3), 0.0).unwrap() < 1e-12);
    for s in [0.0, 2.0] {
        assert!((d3.decay_norm(s) - 216.0).abs() < 1e-12);
    }
    assert_eq!(Op::from_multiplier(t, |_| C::new(1.0, 0.0)), Op::identity(t));
    assert!((Op::identity(t).decay_norm(3.0) - 1.0).abs() < 1e-15);
}

#[test]
fn apply_matches_dense_matvec() {
    let t = tr(3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let a = random_real_op(t, 1.0, 0.5, &mut rng);
    let u = Field::random(t, 4, 1.0, 0.0, &mut rng);
    let m = a.materialize(None, MATERIALIZE_CAP).unwrap();
    let want = m.matvec(u.coeffs()).unwrap();
    let got = a.apply(&u).unwrap();
    let err = want.iter().zip(got.coeffs()).fold(0.0f64, |w, (x, y)| w.max((x - y).norm()));
    assert!(err < 1e-13);
    assert!(got.structure().is_real);
    assert_eq!(Op::identity(t).apply(&u).unwrap(), u);
}

#[test]
fn compose_examples_and_dense_oracle() {
    let t = tr(4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let a = random_real_op(t, 1.0, 0.7, &mut rng);
    let b = random_real_op(t, 1.0, 0.7, &mut rng);
    assert_eq!(Op::identity(t).compose(&a).unwrap(), a);

    let p = Field::random(t, 2, 1.0, 0.1, &mut rng);
    let q = Field::random(t, 2, 1.0, 0.1, &mut rng);
    let pq = Op::multiplication(&p).compose(&Op::multiplication(&q)).unwrap();
    let want = Op::from_multiplication(&p.resized(t.widened(2)).mul(&q.resized(t.widened(2))).unwrap(), t).unwrap();
    // the x-sum of the product is cut at n_x, so only rows two modes inside agree
    for l in -8i64..=8 {
        for j1 in -2i64..=2 {
            for j2 in -4i64..=4 {
                assert!((pq.get(&[l], j1, j2) - want.get(&[l], j1, j2)).norm() < 1e-14);
            }
        }
    }

    // Restricted to interior rows the infinite Töplitz product agrees with
    // the truncated dense product once offsets beyond the support vanish.
    let a = a.smooth(2);
    let b = b.smooth(2);
    let ab = to_na(&a.compose(&b).unwrap().materialize(None, MATERIALIZE_CAP).unwrap());
    let dense = to_na(&a.materialize(None, MATERIALIZE_CAP).unwrap()) * to_na(&b.materialize(None, MATERIALIZE_CAP).unwrap());
    assert!(row_diff(&ab, &dense, &interior(&t, 2)) < 1e-12);
}

#[test]
fn compose_reports_lost_mass() {
    let t = tr(2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let a = random_real_op(t, 1.0, 0.2, &mut rng);
    let (_, lost) = a.compose_with_loss(&a).unwrap();
    assert!(lost > 0.0);
    let (_, lost) = a.smooth(2 * 2 / 2).smooth(1).compose_with_loss(&a.smooth(1)).unwrap();
    assert_eq!(lost, 0.0);
}

#[test]
fn decay_norm_properties() {
    let t = tr(3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..10 {
        let a = random_real_op(t, 1.0, 0.3, &mut rng);
        let mut prev = 0.0;
        for s in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let n = a.decay_norm(s);
            assert!(n >= prev);
            prev = n;
        }
        let n0 = a.decay_norm(0.0);
        for j in -4..=4 {
            assert!(a.get(&[0], j, j).norm() <= n0);
        }
    }
}

#[test]
fn smoothing_examples() {
    let t = tr(3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let a = random_real_op(t, 1.0, 0.3, &mut rng);
    assert_eq!(a.smooth(6), a);
    let a0 = a.smooth(0);
    for l in -6i64..=6 {
        for j in -4..=4 {
            for k in -4..=4 {
                let want = if l == 0 { a.get(&[0], j, k) } else { C::new(0.0, 0.0) };
                assert_eq!(a0.get(&[l], j, k), want);
            }
        }
    }
    for n in 1..6 {
        let perp = a.sub(&a.smooth(n)).unwrap();
        for beta in [1.0, 2.0] {
            for s in [0.0, 1.0, 1.5] {
                assert!(perp.decay_norm(s) <= (n as f64).powf(-beta) * a.decay_norm(s + beta) * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn neumann_examples() {
    let t = tr(6, 6);
    let id = Op::identity(t);
    assert_eq!(Op::zero(t).neumann_inverse(1e-14).unwrap(), id);

    let psi = Op::multiplication(&Field::from_fn(t, |_, x| 0.1 * x.cos()).unwrap());
    let inv = psi.neumann_inverse(1e-14).unwrap();
    let res = id.add(&psi).unwrap().compose(&inv).unwrap().sub(&id).unwrap();
    assert!(res.decay_norm(s0(1)) < 1e-10);

    // x-dependent Ψ: the truncated dense inverse is the exact oracle
    let psi = Op::multiplication(&Field::from_fn(t, |_, x| 0.1 * x.cos() + 0.05 * (2.0 * x).sin()).unwrap());
    let inv = to_na(&psi.neumann_inverse(1e-14).unwrap().materialize(None, MATERIALIZE_CAP).unwrap());
    let phi = to_na(&id.add(&psi).unwrap().materialize(None, MATERIALIZE_CAP).unwrap());
    let dense = phi.try_inverse().unwrap();
    assert!(max_diff(&inv, &dense) < 1e-9);

    let big = Op::multiplication(&Field::from_fn(t, |_, x| 1.5 * x.cos()).unwrap());
    assert!(matches!(big.neumann_inverse(1e-12), Err(kdvkam::Error::Contraction { .. })));
}

#[test]
fn neumann_with_time_dependence_matches_dense_in_the_interior() {
    let t = tr(8, 4);
    let id = Op::identity(t);
    let psi = Op::multiplication(&Field::from_fn(t, |p, x| 0.02 * (p[0] + x).cos()).unwrap());
    let (inv, rep) = psi.neumann_inverse_report(1e-15, true).unwrap();
    assert!(rep.residual < 1e-12 && rep.terms > 3);
    let inv = to_na(&inv.materialize(None, MATERIALIZE_CAP).unwrap());
    let dense = to_na(&id.add(&psi).unwrap().materialize(None, MATERIALIZE_CAP).unwrap()).try_inverse().unwrap();
    assert!(row_diff(&inv, &dense, &interior(&t, 4)) < 1e-6);
}

#[test]
fn exponential_examples() {
    let t = tr(3, 3);
    assert_eq!(Op::zero(t).exp().unwrap(), Op::identity(t));
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    let r = random_real_op(t, 1.0, 0.8, &mut rng);
    let psi = r.scale(1e-4 / r.decay_norm(s0(1)));
    let e = psi.exp().unwrap();
    let second = Op::identity(t).add(&psi).unwrap().add(&psi.compose(&psi).unwrap().scale(0.5)).unwrap();
    let d = e.sub(&second).unwrap().decay_norm(s0(1));
    assert!(d < 1e-11, "cubic remainder {d}");

    let r0 = r.smooth(0);
    let psi = r0.scale(0.3 / r0.decay_norm(s0(1)));
    let e = psi.exp().unwrap();
    let em = psi.scale(-1.0).exp().unwrap();
    assert!(e.compose(&em).unwrap().sub(&Op::identity(t)).unwrap().decay_norm(s0(1)) < 1e-11);
    assert!(r.scale(2.0 / r.decay_norm(s0(1))).exp().is_err());

    // l = 0 operator: the dense exponential of the truncated matrix is exact
    let psi = Op::multiplication(&Field::from_fn(t, |_, x| 0.2 * x.sin() + 0.1 * (2.0 * x).cos()).unwrap())
        .right_diag(|j| C::new(0.0, j as f64 / 4.0));
    let got = to_na(&psi.exp().unwrap().materialize(None, MATERIALIZE_CAP).unwrap());
    let want: DMatrix<_> = to_na(&psi.materialize(None, MATERIALIZE_CAP).unwrap()).exp();
    assert!(max_diff(&got, &want) < 1e-10);
}

#[test]
fn materialize_examples() {
    let t = Truncation::new(1, 0, 1, 2).unwrap();
    let m = Op::multiplication(&Field::from_fn(t, |_, x| x.cos()).unwrap()).materialize(None, MATERIALIZE_CAP).unwrap();
    let want = [[0.0, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((m.get(i, j) - C::new(want[i][j], 0.0)).norm() < 1e-15);
        }
    }
    let t = tr(2, 3);
    let f = Frequency::preset(1, 1.1, 2).unwrap();
    let id = Op::identity(t).materialize(None, MATERIALIZE_CAP).unwrap();
    assert_eq!(id, DenseMatrix::identity(t.len()));
    let airy = Op::from_multiplier(t, |j| ij_pow(j, 3)).materialize(Some(&f), MATERIALIZE_CAP).unwrap();
    let eig = to_na(&airy).eigenvalues().unwrap();
    let mut want: Vec<f64> = (0..t.len()).map(|k| { let (l, j) = t.mode(k); f.dot(&l) - (j * j * j) as f64 }).collect();
    let mut got: Vec<f64> = eig.iter().map(|v| { assert!(v.re.abs() < 1e-12); v.im }).collect();
    want.sort_by(f64::total_cmp);
    got.sort_by(f64::total_cmp);
    for (a, b) in want.iter().zip(&got) {
        assert!((a - b).abs() < 1e-10);
    }
    let big = Truncation::new(2, 20, 20, 2).unwrap();
    assert!(matches!(Op::identity(big).materialize(None, MATERIALIZE_CAP), Err(kdvkam::Error::CapExceeded { .. })));
}

#[test]
fn frozen_matches_multiplication() {
    let t = tr(2, 3);
    let p = Field::from_fn(t, |ph, x| (ph[0] + x).cos() + 0.3 * (2.0 * x).sin()).unwrap();
    let m = Op::multiplication(&p).frozen(&[0.7]);
    // (A(φ))_{j,k} = p_{j-k}(φ)
    let row = |j: i64, k: i64| m.get((j + 3) as usize, (k + 3) as usize);
    let pj = |d: i64| (-2i64..=2).fold(C::new(0.0, 0.0), |s, l| s + p.get(&[l], d) * C::from_polar(1.0, 0.7 * l as f64));
    for j in -3..=3 {
        for k in -3..=3 {
            assert!((row(j, k) - pj(j - k)).norm() < 1e-14);
        }
    }
}

#[test]
fn json_round_trip() {
    let t = tr(1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let a = random_real_op(t, 1.0, 0.3, &mut rng);
    let text = serde_json::to_string(&a.to_json()).unwrap();
    let back = Op::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert!(back.sub(&a).unwrap().max_abs() < 1e-15);
}

#[test]
fn diagonal_operator() {
    let t = tr(2, 4);
    let d = DiagonalOperator::dispersive(4, 1.0, 0.5);
    assert!(d.is_real(1e-15));
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let u = Field::random(t, 4, 1.0, 0.0, &mut rng);
    let want = u.dx_pow(3).add(&u.dx_pow(1).scale(0.5)).unwrap();
    assert!(d.apply(&u).unwrap().distance(&want, 0.0).unwrap() < 1e-12);
    assert!(d.to_toeplitz(t).unwrap().apply(&u).unwrap().distance(&want, 0.0).unwrap() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reality_is_closed(seed in any::<u64>()) {
        let t = tr(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_real_op(t, 0.2, 0.5, &mut rng);
        let b = random_real_op(t, 0.2, 0.5, &mut rng);
        let small = a.scale(0.3 / a.decay_norm(s0(1)));
        prop_assert!(a.is_real(1e-14));
        prop_assert!(a.compose(&b).unwrap().is_real(1e-13));
        prop_assert!(a.smooth(1).is_real(1e-14));
        prop_assert!(small.neumann_inverse(1e-14).unwrap().is_real(1e-12));
        prop_assert!(small.exp().unwrap().is_real(1e-12));
    }

    #[test]
    fn reversibility_preserving_is_closed(seed in any::<u64>()) {
        let t = tr(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = reversibility_part(&random_real_op(t, 0.2, 0.5, &mut rng));
        let b = reversibility_part(&random_real_op(t, 0.2, 0.5, &mut rng));
        prop_assert!(a.is_reversibility_preserving(1e-15));
        prop_assert!(a.compose(&b).unwrap().is_reversibility_preserving(1e-13));
        let small = a.scale(0.3 / a.decay_norm(s0(1)));
        prop_assert!(small.neumann_inverse(1e-14).unwrap().is_reversibility_preserving(1e-12));
        let u = Field::random(t, 3, 1.0, 0.0, &mut rng).even_part();
        prop_assert!(a.apply(&u).unwrap().structure().in_x);
    }

    #[test]
    fn apply_is_linear(seed in any::<u64>(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let t = tr(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_real_op(t, 1.0, 0.5, &mut rng);
        let u = Field::random(t, 3, 1.0, 0.0, &mut rng);
        let v = Field::random(t, 3, 1.0, 0.0, &mut rng);
        let lhs = a.apply(&u.scale(x).add(&v.scale(y)).unwrap()).unwrap();
        let rhs = a.apply(&u).unwrap().scale(x).add(&a.apply(&v).unwrap().scale(y)).unwrap();
        prop_assert!(lhs.distance(&rhs, 0.0).unwrap() < 1e-12);
    }
}
