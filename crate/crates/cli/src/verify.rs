//! Quick invariant checks of every module, printed as a pass/fail table.

use kdvkam::dynamics::{integrate_linear, reduced_flow, PhaseState};
use kdvkam::kamreduce::{eigenvalue_report, homological_residual, reduce, solve_homological, IterationSchedule};
use kdvkam::nonlin::{residual, LinearizedOperator, NonlinearitySpec};
use kdvkam::opalg::{DiagonalOperator, ToplitzOperator};
use kdvkam::regularize::{run_regularization, RegConfig};
use kdvkam::solver::{linearize, nash_moser, right_inverse, Admissible, NashMoserConfig};
use kdvkam::spectral::{analyze, s0, synthesize, Frequency, GridShape, Truncation};
use kdvkam::{Field, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    /// Measured quantity; `NaN` when the check errored.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

fn check(module: &'static str, name: &'static str, tolerance: f64, value: kdvkam::Result<f64>) -> Check {
    match value {
        Ok(v) => Check { module, name, value: v, tolerance, pass: v <= tolerance, error: None },
        Err(e) => Check { module, name, value: f64::NAN, tolerance, pass: false, error: Some(e.to_string()) },
    }
}

const LAMBDA: f64 = 1.118;

fn tr(n_phi: usize, n_x: usize) -> Truncation {
    Truncation::new(1, n_phi, n_x, 2).expect("valid truncation")
}

pub fn run_checks(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let s = s0(1);

    let t = tr(6, 6);
    let u = Field::random(t, 6, 1.0, 0.2, &mut rng);
    out.push(check("spectral", "grid round trip", 1e-12, {
        let shape = GridShape::of(&t);
        synthesize(&u, &shape).and_then(|g| analyze(&g, &shape, &t)).and_then(|b| b.distance(&u, 0.0))
    }));
    out.push(check("spectral", "dx^-1 dx = pi0", 1e-12, u.dx_pow(1).dx_pow(-1).distance(&u.pi0(), s)));
    out.push(check("opalg", "|T_p|_s = |p|_s (relative)", 1e-12, {
        ToplitzOperator::from_multiplication(&u, t.widened(2))
            .map(|op| (op.decay_norm(s) - u.sobolev_norm(s)).abs() / u.sobolev_norm(s))
    }));
    out.push(check("opalg", "Neumann inverse residual", 1e-10, {
        let psi = ToplitzOperator::multiplication(&u.scale(0.05 / u.sup_norm()));
        let id = ToplitzOperator::identity(*psi.trunc());
        psi.neumann_inverse(1e-14)
            .and_then(|inv| id.add(&psi)?.compose(&inv)?.sub(&id))
            .map(|r| r.decay_norm(s))
    }));

    let f = Frequency::preset(1, LAMBDA, 6).expect("preset frequency");
    out.push(check("nonlin", "Taylor remainder ratio |r(d)/r(d/2) - 4|", 0.5, {
        (|| {
            let sp = NonlinearitySpec::builtin("fully_nonlinear_F", 0.1)?;
            let u = Field::random(t, 2, 0.3, 0.3, &mut rng);
            let h = Field::random(t, 2, 1.0, 0.3, &mut rng);
            let lh = LinearizedOperator::at(&sp, &f, &u, &t.widened(2))?.apply(&h)?;
            let f0 = residual(&sp, &f, &u)?;
            let err = |d: f64| -> kdvkam::Result<f64> {
                let f1 = residual(&sp, &f, &u.add(&h.scale(d))?)?;
                Ok(f1.sub(&f0)?.sub(&lh.scale(d))?.sobolev_norm(s))
            };
            Ok((err(1e-3)? / err(5e-4)? - 4.0).abs())
        })()
    }));

    let probe = Field::random(tr(8, 8), 3, 0.05, 0.3, &mut rng).even_part();
    let f8 = Frequency::preset(1, LAMBDA, 8).expect("preset frequency");
    let sp = NonlinearitySpec::builtin("quasilinear_cubic", 1e-3).expect("builtin");
    let reg = run_regularization(&sp, &f8, &probe, &RegConfig::default());
    match &reg {
        Ok(reg) => {
            out.push(check("regularize", "r1 = 0", 1e-12, Ok(reg.checks.r1_max)));
            out.push(check("regularize", "second-order coefficient removed", 1e-10, Ok(reg.checks.t2_norm)));
            out.push(check("regularize", "e1 average constant", 1e-10, Ok(reg.checks.e1_defect)));
            out.push(check("regularize", "semi-conjugacy residual", 1e-6, {
                (|| {
                    let lin = LinearizedOperator::at(&sp, &f8, &probe, &probe.trunc().widened(2))?;
                    let z = Field::random(*probe.trunc(), 4, 1.0, 0.5, &mut rng);
                    let z = z.scale(1.0 / z.sobolev_norm(s));
                    reg.conjugacy_residual(&lin, &z)
                })()
            }));
        }
        Err(e) => out.push(check("regularize", "chain", 0.0, Err(kdvkam::Error::Precondition(e.to_string())))),
    }

    let tk = tr(3, 4);
    let fk = Frequency::preset(1, LAMBDA, 3).expect("preset frequency");
    let d = DiagonalOperator::from_fn(tk.n_x, |j| C::new(0.0, -((j * j * j) as f64) + 0.01 * j as f64));
    let r = ToplitzOperator::from_fn(tk, |l, j, k| {
        let w = 1e-2 * (-((l[0].abs() + (j - k).abs()) as f64)).exp();
        C::new(w * ((j + 2 * k + 3 * l[0]) as f64).cos(), 0.0)
    });
    let sol = solve_homological(&d, &r, &fk, 4, 0.01, 3.0);
    out.push(check("kamreduce", "homological residual", 1e-12, Ok(homological_residual(&d, &r, &sol.psi, &fk, 4).max_abs())));
    if let Ok(reg) = &reg {
        match reduce(reg, &f8, &IterationSchedule::for_nu(1)) {
            Ok(red) => {
                out.push(check("kamreduce", "final |R|_s0", 1e-10, Ok(red.r_final.decay_norm(s))));
                let rep = eigenvalue_report(&red.eigs, reg.m3, reg.m1, 1e-3, reg.mode, true);
                out.push(check("kamreduce", "max |Re mu_j|", 1e-10, Ok(rep.max_re)));
                out.push(check("kamreduce", "mu_j + mu_-j", 1e-10, Ok(rep.antisymmetry_defect.unwrap_or(f64::NAN))));
            }
            Err(e) => out.push(check("kamreduce", "reduction", 0.0, Err(e))),
        }
    }

    let cfg = NashMoserConfig::default();
    out.push(check("solver", "right-inverse residual (relative)", 1e-7, {
        (|| {
            let lin = linearize(&sp, &f8, &probe, &cfg, cfg.gamma)?;
            let op = LinearizedOperator::at(&sp, &f8, &probe, &probe.trunc().widened(2))?;
            let rhs = Field::random(*probe.trunc(), 4, 1.0, 0.3, &mut rng).odd_part();
            let rhs = rhs.sub(&rhs.x_average())?;
            let (h, _) = right_inverse(&lin, &f8, &rhs, Admissible::Reversible, cfg.gamma, cfg.tau)?;
            Ok(op.apply(&h)?.sub(&rhs)?.sobolev_norm(s) / rhs.sobolev_norm(s))
        })()
    }));
    out.push(check("solver", "Nash-Moser residual / tolerance", 1.0, {
        (|| {
            let sp = NonlinearitySpec::builtin("strongly_forced_cubic", 1e-3)?;
            let r = nash_moser(&sp, &Frequency::preset(1, LAMBDA, 6)?, tr(6, 6), &cfg)?;
            if !r.converged {
                return Err(kdvkam::Error::Precondition("not converged".into()));
            }
            Ok(r.residuals().last().copied().unwrap_or(f64::NAN) / r.tol_res)
        })()
    }));

    let h0: PhaseState<f64> = PhaseState::random(6, 3, 0.5, &mut rng);
    let airy = DiagonalOperator::dispersive(6, 1.0, 0.0);
    out.push(check("dynamics", "reduced flow norm drift", 1e-13, {
        let v = reduced_flow(&airy, &h0, rng.gen_range(1.0..10.0));
        Ok((v.norm(1.0) - h0.norm(1.0)).abs() / h0.norm(1.0))
    }));
    out.push(check("dynamics", "integrator vs Airy flow", 1e-12, {
        let zero = [0; 4].map(|_| Field::zeros(t.widened(2)));
        integrate_linear(&zero, &f, &h0, 1.0, 1e-2, 1).and_then(|traj| {
            let end = traj.last().expect("two samples");
            end.distance(&reduced_flow(&airy, &h0, end.t), 0.0)
        })
    }));
    out
}

pub fn print_table(checks: &[Check]) {
    let w = checks.iter().map(|c| c.name.len()).max().unwrap_or(10);
    println!("{:<11} {:<w$} {:>11} {:>9}  result", "module", "check", "value", "tol");
    for c in checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{:<11} {:<w$} {:>11.3e} {:>9.1e}  {verdict}", c.module, c.name, c.value, c.tolerance);
        if let Some(e) = &c.error {
            println!("{:<11} {:<w$}   error: {e}", "", "");
        }
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {} failed", checks.len(), failed);
}
