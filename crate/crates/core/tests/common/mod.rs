//! Helpers shared by the integration tests: random operators and dense
//! oracles built on nalgebra.
#![allow(dead_code)]

use kdvkam::opalg::{DenseMatrix, ToplitzOperator};
use kdvkam::spectral::{lnorm, Truncation};
use kdvkam::nonlin::{linearized_coefficients, residual, NonlinearitySpec};
use kdvkam::opalg::MATERIALIZE_CAP;
use kdvkam::spectral::{s0, Frequency};
use kdvkam::{Field, C};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
type Complex64 = nalgebra::Complex<f64>;
use rand::Rng;

pub type Op = ToplitzOperator<f64>;

pub fn to_na(m: &DenseMatrix<f64>) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Random real operator with entries `amp · exp(-decay <l, j₁−j₂>)`.
pub fn random_real_op<R: Rng>(trunc: Truncation, amp: f64, decay: f64, rng: &mut R) -> Op {
    let mut op = Op::zero(trunc);
    let lat = trunc.offset_lattice();
    let n = trunc.n_x as i64;
    for o in 0..lat.len() {
        let l = lat.point_vec(o);
        for j1 in -n..=n {
            for j2 in -n..=n {
                let w = amp * (-decay * (lnorm(&l).max((j1 - j2).abs()).max(1)) as f64).exp();
                let v = C::new(w * rng.gen_range(-1.0..1.0), w * rng.gen_range(-1.0..1.0));
                op.set(&l, j1, j2, v).unwrap();
            }
        }
    }
    real_part(&op)
}

/// `(A + Ã)/2` with `Ã(l)[j][k] = conj(A(−l)[−j][−k])`.
pub fn real_part(a: &Op) -> Op {
    Op::from_fn(*a.trunc(), |l, j1, j2| {
        let neg: Vec<i64> = l.iter().map(|v| -v).collect();
        (a.get(l, j1, j2) + a.get(&neg, -j1, -j2).conj()) * 0.5
    })
}

/// `(A + Â)/2` with `Â(l)[j][k] = A(−l)[−j][−k]`.
pub fn reversibility_part(a: &Op) -> Op {
    Op::from_fn(*a.trunc(), |l, j1, j2| {
        let neg: Vec<i64> = l.iter().map(|v| -v).collect();
        (a.get(l, j1, j2) + a.get(&neg, -j1, -j2)) * 0.5
    })
}

/// Flat indices `(l, j)` with `|l| <= n_phi - margin`.
pub fn interior(trunc: &Truncation, margin: usize) -> Vec<usize> {
    (0..trunc.len())
        .filter(|&i| {
            let (l, _) = trunc.mode(i);
            (lnorm(&l) as usize) + margin <= trunc.n_phi
        })
        .collect()
}

/// Max entry difference over the given rows.
pub fn row_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, rows: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for &i in rows {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, v| m.max(v.norm()))
}

/// `(A − Â)/2`: maps X to Y.
pub fn reversible_part(a: &Op) -> Op {
    Op::from_fn(*a.trunc(), |l, j1, j2| {
        let neg: Vec<i64> = l.iter().map(|v| -v).collect();
        (a.get(l, j1, j2) - a.get(&neg, -j1, -j2)) * 0.5
    })
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(m: &DenseMatrix<f64>) -> Vec<C<f64>> {
    to_na(m).schur().eigenvalues().expect("complex Schur form").iter().copied().collect()
}

/// Dense Jacobian `ω·∂_φ + ∂_x³ + Σ_k a_k ∂_x^k` of the Galerkin system at `u`.
pub fn galerkin_jacobian(spec: &NonlinearitySpec, freq: &Frequency<f64>, u: &Field) -> DMatrix<Complex64> {
    let t = *u.trunc();
    let a = linearized_coefficients(spec, u, &t.widened(2)).unwrap();
    let mut op = Op::from_multiplier(t, |j| C::new(0.0, -((j * j * j) as f64)));
    for (k, ak) in a.iter().enumerate() {
        let m = Op::from_multiplication(ak, t).unwrap();
        let d = m.right_diag(|j| C::new(0.0, j as f64).powi(k as i32));
        op = op.add(&d).unwrap();
    }
    to_na(&op.materialize(Some(freq), MATERIALIZE_CAP).unwrap())
}

/// Damped Newton on the Galerkin system `Π F(u) = 0` with the `(0, 0)`
/// coefficient pinned to `u00` and its equation dropped.
pub fn galerkin_newton(spec: &NonlinearitySpec, freq: &Frequency<f64>, t: Truncation, u00: f64, tol: f64) -> Field {
    let z = t.zero_index();
    let keep: Vec<usize> = (0..t.len()).filter(|&i| i != z).collect();
    let s = s0(t.nu);
    let mut u = Field::constant(t, u00);
    let mut f = residual(spec, freq, &u).unwrap();
    for _ in 0..40 {
        let norm = reduced_norm(&f, z, s);
        if norm < tol {
            break;
        }
        let jac = galerkin_jacobian(spec, freq, &u).select_rows(&keep).select_columns(&keep);
        let rhs = DVector::from_iterator(keep.len(), keep.iter().map(|&i| -f.coeffs()[i]));
        let h = jac.lu().solve(&rhs).expect("nonsingular Galerkin Jacobian");
        let mut step = 1.0;
        loop {
            let mut c = u.coeffs().to_vec();
            for (k, &i) in keep.iter().enumerate() {
                c[i] += h[k] * step;
            }
            let mut cand = Field::from_coeffs(t, c).unwrap();
            cand.symmetrize();
            let fc = residual(spec, freq, &cand).unwrap();
            if reduced_norm(&fc, z, s) < norm || step < 1e-3 {
                u = cand;
                f = fc;
                break;
            }
            step *= 0.5;
        }
    }
    u
}

fn reduced_norm(f: &Field, z: usize, s: f64) -> f64 {
    let mut g = f.clone();
    g.coeffs_mut()[z] = C::new(0.0, 0.0);
    g.sobolev_norm(s)
}

/// Zero-mean Y field (odd in `(φ, x)`) with modes in the ball of radius `band`.
pub fn random_odd(t: Truncation, band: usize, seed: u64) -> Field {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Field::random(t, band, 1.0, 0.3, &mut rng).odd_part()
}
