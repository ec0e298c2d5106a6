//! Acceptance suite: one PASS/FAIL line per criterion, then a nonzero exit
//! status if any criterion failed. Runs without the libtest harness so the
//! table is always printed.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{eigenvalues, galerkin_jacobian, galerkin_newton, random_real_op};
use kdvkam::dynamics::{stability_reports, PhaseState, StabilityConfig};
use kdvkam::kamreduce::{eigenvalue_report, homological_residual, lambda_grid, match_eigenvalues, reduce, solve_homological, IterationSchedule};
use kdvkam::nonlin::{linearized_coefficients, LinearizedOperator, NonlinearitySpec};
use kdvkam::opalg::{DiagonalOperator, ToplitzOperator, MATERIALIZE_CAP};
use kdvkam::regularize::{run_regularization, RegConfig, RegularizationResult};
use kdvkam::solver::{cantor_measure, linearize, nash_moser, right_inverse, Admissible, NashMoserConfig};
use kdvkam::spectral::{analyze, synthesize, Frequency, GridShape, Truncation};
use kdvkam::{Field, C};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAMBDA: f64 = 1.118;
const S0: f64 = 1.5;

fn tr(n_phi: usize, n_x: usize) -> Truncation {
    Truncation::new(1, n_phi, n_x, 2).unwrap()
}

fn freq(n_phi: usize) -> Frequency<f64> {
    Frequency::preset(1, LAMBDA, n_phi).unwrap()
}

fn spec(name: &str, eps: f64) -> NonlinearitySpec {
    NonlinearitySpec::builtin(name, eps).unwrap()
}

/// Even probe field of amplitude 0.05 with modes up to 3.
fn probe(t: Truncation, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field::random(t, 3, 0.05, 0.3, &mut rng).even_part()
}

fn pipeline(name: &str, eps: f64, n: usize) -> (RegularizationResult<f64>, Frequency<f64>, Field) {
    let t = tr(n, n);
    let f = freq(n);
    let u = probe(t, 1);
    let reg = run_regularization(&spec(name, eps), &f, &u, &RegConfig::default()).unwrap();
    (reg, f, u)
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn spectral_identities() -> Verdict {
    let t = tr(12, 12);
    let shape = GridShape::of(&t);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut dx, mut trip, mut norm) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let u = Field::random(t, 12, 1.0, 0.2, &mut rng);
        dx = dx.max(u.dx_pow(1).dx_pow(-1).distance(&u.pi0(), 0.0).unwrap());
        dx = dx.max(u.dx_pow(-1).dx_pow(1).distance(&u.pi0(), 0.0).unwrap());
        let back = analyze(&synthesize(&u, &shape).unwrap(), &shape, &t).unwrap();
        trip = trip.max(back.distance(&u, 0.0).unwrap());
        let op = ToplitzOperator::multiplication(&u);
        for s in [0.0, S0, 3.0] {
            let p = u.sobolev_norm(s);
            norm = norm.max((op.decay_norm(s) - p).abs() / p);
        }
    }
    verdict(
        dx < 1e-12 && trip < 1e-12 && norm < 1e-12,
        format!("dx^-1 dx = pi0 {dx:.1e}, round trip {trip:.1e}, |T_p|_s vs |p|_s {norm:.1e} (relative)"),
    )
}

fn homological_equation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let mut violations = 0;
    for _ in 0..50 {
        let n_phi = rng.gen_range(1..=4);
        let n_x = rng.gen_range(2..=5);
        let t = tr(n_phi, n_x);
        let f = freq(n_phi);
        let shift: Vec<f64> = (0..t.nj()).map(|_| rng.gen_range(-0.05..0.05)).collect();
        let d = DiagonalOperator::from_fn(n_x, |j| C::new(0.0, -((j * j * j) as f64) + shift[(j + n_x as i64) as usize]));
        let r = random_real_op(t, 1e-2, 1.0, &mut rng);
        let n = rng.gen_range(0..=2 * n_phi);
        let sol = solve_homological(&d, &r, &f, n, 0.01, 3.0);
        if !sol.ok {
            violations += 1;
            continue;
        }
        worst = worst.max(homological_residual(&d, &r, &sol.psi, &f, n).max_abs());
    }
    verdict(worst < 1e-12 && violations == 0, format!("max entrywise residual {worst:.1e} over 50 instances, {violations} rejected"))
}

fn regularization_chain() -> Verdict {
    let n = 12;
    let t = tr(n, n);
    let sp = spec("quasilinear_cubic", 1e-3);
    let (reg, f, u) = pipeline("quasilinear_cubic", 1e-3, n);
    let c = &reg.checks;
    let lin = LinearizedOperator::at(&sp, &f, &u, &t.widened(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut conj = 0.0f64;
    for _ in 0..3 {
        let z = Field::random(t, n / 2, 1.0, 0.0, &mut rng);
        let z = z.scale(1.0 / z.sobolev_norm(S0));
        conj = conj.max(reg.conjugacy_residual(&lin, &z).unwrap());
    }
    let pass = c.b3_variance < 1e-9 && c.t2_norm < 1e-10 && c.e1_defect < 1e-10 && c.r1_max < 1e-12 && conj < 1e-6;
    verdict(
        pass,
        format!(
            "b3 variance {:.1e}, d_yy coefficient {:.1e}, e1 defect {:.1e}, r1 {:.1e}, semi-conjugacy {conj:.1e}",
            c.b3_variance, c.t2_norm, c.e1_defect, c.r1_max
        ),
    )
}

fn kam_reduction() -> Verdict {
    let (reg, f, _) = pipeline("quasilinear_cubic", 1e-3, 8);
    let red = reduce(&reg, &f, &IterationSchedule::for_nu(1)).unwrap();
    let norms: Vec<f64> = red.trace.iter().map(|r| r.r_norm).chain([red.r_final.decay_norm(S0)]).collect();
    let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
    let last = *norms.last().unwrap();
    let l5 = red.d0.to_toeplitz(*reg.trunc()).unwrap().add(&red.r0).unwrap();
    let computed = eigenvalues(&l5.materialize(Some(&f), MATERIALIZE_CAP).unwrap());
    let m = match_eigenvalues(&red.predicted_spectrum(&f), &computed);
    let pass = decreasing && last < 1e-10 && red.steps <= 8 && m.max_error < 1e-6 && m.collisions == 0 && m.unmatched == 0;
    verdict(
        pass,
        format!(
            "{} steps, |R| {:.1e} -> {last:.1e}, spectrum error {:.1e} over {} eigenvalues",
            red.steps,
            norms[0],
            m.max_error,
            computed.len()
        ),
    )
}

fn reversible_structure() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [1e-3, 1e-4] {
        let (reg, f, _) = pipeline("quasilinear_cubic", eps, 8);
        let red = reduce(&reg, &f, &IterationSchedule::for_nu(1)).unwrap();
        let rep = eigenvalue_report(&red.eigs, reg.m3, reg.m1, eps, reg.mode, true);
        let anti = rep.antisymmetry_defect.unwrap_or(f64::INFINITY);
        pass &= rep.max_re < 1e-10 && anti < 1e-10 && rep.mu0_abs < 1e-12;
        parts.push(format!("eps {eps:.0e}: Re {:.1e}, mu_j + mu_-j {anti:.1e}, mu_0 {:.1e}", rep.max_re, rep.mu0_abs));
    }
    verdict(pass, parts.join("; "))
}

fn eigenvalue_asymptotics() -> Verdict {
    let scaled = |eps: f64| {
        let (reg, f, _) = pipeline("drifting_cubic", eps, 8);
        let red = reduce(&reg, &f, &IterationSchedule::for_nu(1)).unwrap();
        let rep = eigenvalue_report(&red.eigs, reg.m3, reg.m1, eps, reg.mode, false);
        [rep.sup_rj / eps, (rep.m3 - 1.0).abs() / eps, rep.m1.abs() / eps]
    };
    let (a, b) = (scaled(1e-3), scaled(1e-4));
    let ratios: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y) / x.min(*y)).collect();
    let pass = ratios.iter().all(|r| r.is_finite() && *r <= 2.0);
    verdict(
        pass,
        format!(
            "ratios between eps 1e-3 and 1e-4: sup|r_j|/eps {:.3}, |m3-1|/eps {:.3}, |m1|/eps {:.3}",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn nash_moser_solve() -> Verdict {
    let n = 16;
    let t = tr(n, n);
    let f = freq(n);
    let sp = spec("strongly_forced_cubic", 1e-3);
    let r = match nash_moser(&sp, &f, t, &NashMoserConfig::default()) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("solve failed: {e}")),
    };
    let res = r.residuals();
    let last = *res.last().unwrap();
    let order = r.order_estimate().unwrap_or(f64::NAN);
    let u00 = r.solution.coeffs()[t.zero_index()].re;
    let oracle = galerkin_newton(&sp, &f, t, u00, 1e-13);
    let d = r.solution.distance(&oracle, S0).unwrap();
    let pass = r.converged && last < 1e-10 && order > 1.5 && d < 1e-8;
    verdict(pass, format!("residuals {}, order {order:.2}, Galerkin oracle distance {d:.1e}", res.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>().join(" -> ")))
}

fn measure_trend() -> Verdict {
    let n = 6;
    let sp = spec("strongly_forced_cubic", 1e-3);
    let rep = cantor_measure(&sp, &freq(n), tr(n, n), &[1e-3, 1e-5], &lambda_grid(201), 0.5, &NashMoserConfig::default()).unwrap();
    let (a, b) = (rep.fractions[0], rep.fractions[1]);
    verdict(
        b >= a && a >= 0.5 && b >= 0.5,
        format!("accepted fraction {a:.3} at eps 1e-3, {b:.3} at eps 1e-5 (baseline {:.3}, {:.3})", rep.baseline[0], rep.baseline[1]),
    )
}

fn linear_stability() -> Verdict {
    let n = 8;
    let t = tr(n, n);
    let f = freq(n);
    let sp = spec("strongly_forced_cubic", 1e-3);
    let r = nash_moser(&sp, &f, t, &NashMoserConfig::default()).unwrap();
    let Some(lin) = r.linearization else {
        return verdict(false, "no linearization at the solution".into());
    };
    let coeffs = linearized_coefficients(&sp, &r.solution, &t.widened(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let h0s: Vec<PhaseState<f64>> = (0..2).map(|_| PhaseState::random(n, 3, 0.5, &mut rng)).collect();
    let cfg = StabilityConfig { t_end: 100.0, dt: 1e-3, s: 1.0, n_samples: 100 };
    let reps = match stability_reports(&lin, &coeffs, &f, &h0s, &cfg) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("integration failed: {e}")),
    };
    let drift = reps.iter().fold(0.0f64, |m, r| m.max(r.v_drift));
    let lo = reps.iter().fold(f64::MAX, |m, r| m.min(r.min_ratio));
    let hi = reps.iter().fold(f64::MIN, |m, r| m.max(r.max_ratio));
    let end = reps.iter().fold(0.0f64, |m, r| m.max(r.endpoint_discrepancy));
    verdict(
        drift < 1e-8 && lo >= 0.9 && hi <= 1.1 && end < 1e-4,
        format!("reduced drift {drift:.1e}, h ratio in [{lo:.5}, {hi:.5}], endpoint {end:.1e}"),
    )
}

fn right_inverse_oracle() -> Verdict {
    let n = 6;
    let t = tr(n, n);
    let f = freq(n);
    let sp = spec("quasilinear_cubic", 1e-3);
    let cfg = NashMoserConfig::default();
    let u = probe(t, 11);
    let lin = linearize(&sp, &f, &u, &cfg, cfg.gamma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let rhs = Field::random(t, n / 2, 1.0, 0.3, &mut rng).odd_part();
    let (h, _) = right_inverse(&lin, &f, &rhs, Admissible::Reversible, cfg.gamma, cfg.tau).unwrap();
    // move the chain solution along the kernel direction to h_00 = 0
    let k = lin.w2(&Field::one(t)).unwrap();
    let z = t.zero_index();
    let c = h.coeffs()[z] / k.coeffs()[z];
    let h = h.sub(&k.map_coeffs(|_, _, v| v * c)).unwrap();
    let keep: Vec<usize> = (0..t.len()).filter(|&i| i != z).collect();
    let jac = galerkin_jacobian(&sp, &f, &u).select_rows(&keep).select_columns(&keep);
    let b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| rhs.coeffs()[i]));
    let Some(x) = jac.lu().solve(&b) else {
        return verdict(false, "singular restricted system".into());
    };
    let mut coeffs = vec![C::new(0.0, 0.0); t.len()];
    for (m, &i) in keep.iter().enumerate() {
        coeffs[i] = x[m];
    }
    let dense = Field::from_coeffs(t, coeffs).unwrap();
    let d = h.distance(&dense, S0).unwrap() / dense.sobolev_norm(S0);
    verdict(d < 1e-6, format!("relative distance {d:.1e}"))
}

type Criterion = (&'static str, Duration, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("spectral identities", Duration::from_secs(10), spectral_identities),
        ("homological equation", Duration::from_secs(10), homological_equation),
        ("regularization chain", Duration::from_secs(120), regularization_chain),
        ("KAM reduction", Duration::from_secs(120), kam_reduction),
        ("reversible spectrum", Duration::MAX, reversible_structure),
        ("eigenvalue asymptotics", Duration::MAX, eigenvalue_asymptotics),
        ("Nash-Moser", Duration::from_secs(600), nash_moser_solve),
        ("measure trend", Duration::from_secs(1800), measure_trend),
        ("linear stability", Duration::from_secs(300), linear_stability),
        ("right-inverse oracle", Duration::MAX, right_inverse_oracle),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        let time = if *budget == Duration::MAX {
            format!("{:.1}s", took.as_secs_f64())
        } else {
            format!("{:.1}s of {}s", took.as_secs_f64(), budget.as_secs())
        };
        println!("criterion {:>2} {:<23} {}  {}; {time}", i + 1, name, if pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
