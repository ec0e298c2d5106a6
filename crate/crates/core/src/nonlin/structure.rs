//! Structural hypotheses on `f`: conditions (F) and (Q), reversibility,
//! total-derivative and Hamiltonian form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ast::{Expr, Point, Var};
use super::eval::Jet;
use super::spec::{DeclaredForm, NonlinearitySpec};
use crate::spectral::{FieldJson, FourierField, GridShape, Truncation};

/// Number of Monte-Carlo probe points.
pub const PROBES: usize = 64;
/// Relative tolerance of numerical identity checks.
pub const PROBE_TOL: f64 = 1e-10;
const SEED: u64 = 0x6b64_7631;
/// φ-modes used when fitting a φ-dependent `α`.
const ALPHA_MODES: usize = 8;

/// The function `α(φ)` of condition (Q).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Alpha {
    Zero,
    Constant(f64),
    PhiDependent(FieldJson),
}

impl Alpha {
    pub fn eval(&self, phi: &[f64]) -> f64 {
        match self {
            Alpha::Zero => 0.0,
            Alpha::Constant(a) => *a,
            Alpha::PhiDependent(js) => FourierField::<f64>::from_json(js, 2).map(|f| f.eval_at(phi, 0.0)).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureFlags {
    /// `∂_{z₂} f ≡ 0`.
    pub cond_f: bool,
    /// `∂²_{z₃z₃} f ≡ 0` and the (Q) identity holds with `alpha`.
    pub cond_q: bool,
    pub alpha: Option<Alpha>,
    /// `f(-φ, -x, z₀, -z₁, z₂, -z₃) = -f(φ, x, z₀, z₁, z₂, z₃)`.
    pub reversible: bool,
    /// The x-average of `f` vanishes along every `u`.
    pub total_derivative: bool,
    pub hamiltonian: bool,
    /// The expression divides; evaluation is guarded.
    pub has_division: bool,
    /// Failed checks with a sample point.
    pub diagnostics: Vec<String>,
}

impl StructureFlags {
    /// Hypothesis (F) or (Q) holds.
    pub fn admissible(&self) -> bool {
        self.cond_f || self.cond_q
    }
}

struct Probe {
    phi: Vec<f64>,
    x: f64,
    z: [f64; 4],
}

impl Probe {
    fn point(&self) -> Point<'_, f64> {
        Point { phi: &self.phi, x: self.x, z: self.z }
    }
}

fn probes(nu: usize) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let tau = std::f64::consts::TAU;
    (0..PROBES)
        .map(|_| Probe {
            phi: (0..nu).map(|_| rng.gen_range(0.0..tau)).collect(),
            x: rng.gen_range(0.0..tau),
            z: [0; 4].map(|_| rng.gen_range(-1.0..1.0)),
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= PROBE_TOL * a.abs().max(b.abs()).max(1.0)
}

fn show(p: &Probe) -> String {
    format!("phi = {:?}, x = {:.6}, z = {:?}", p.phi, p.x, p.z)
}

/// Checks `lhs ≡ rhs`: symbolically when the difference normalizes to zero,
/// otherwise on the probes. Returns the first failing probe.
fn identity(lhs: &Expr, rhs: &Expr, probes: &[Probe]) -> Result<(), String> {
    if Expr::sub(lhs.clone(), rhs.clone()).simplify().is_zero() {
        return Ok(());
    }
    for p in probes {
        match (lhs.eval(&p.point()), rhs.eval(&p.point())) {
            (Ok(a), Ok(b)) if close(a, b) => {}
            (Ok(a), Ok(b)) => return Err(format!("{a:e} != {b:e} at {}", show(p))),
            (Err(e), _) | (_, Err(e)) => return Err(format!("{e} at {}", show(p))),
        }
    }
    Ok(())
}

/// The right-hand factor of (Q):
/// `∂²_{z₃x}f + z₁∂²_{z₃z₀}f + z₂∂²_{z₃z₁}f + z₃∂²_{z₃z₂}f`.
fn q_factor(f3: &Expr) -> Expr {
    let mut q = f3.derivative(Var::X);
    for k in 0..3 {
        q = Expr::add(q, Expr::mul(Expr::z(k + 1), f3.derivative(Var::Z(k))));
    }
    q.simplify()
}

fn reflect(f: &Expr, nu: usize) -> Expr {
    let mut g = f.clone();
    for k in 0..nu {
        g = g.substitute(Var::Phi(k), &Expr::neg(Expr::var(Var::Phi(k))));
    }
    g = g.substitute(Var::X, &Expr::neg(Expr::var(Var::X)));
    for k in [1, 3] {
        g = g.substitute(Var::Z(k), &Expr::neg(Expr::z(k)));
    }
    g.simplify()
}

fn recover_alpha(f2: &Expr, q: &Expr, probes: &[Probe], nu: usize) -> Result<Alpha, String> {
    let ratio = |p: &Probe| -> Option<f64> {
        let a = f2.eval(&p.point()).ok()?;
        let b = q.eval(&p.point()).ok()?;
        (b.abs() > 1e-6).then_some(a / b)
    };
    let rs: Vec<f64> = probes.iter().filter_map(ratio).collect();
    if rs.is_empty() {
        return Err("(Q) factor vanishes at every probe".into());
    }
    let mean = rs.iter().sum::<f64>() / rs.len() as f64;
    let var = rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rs.len() as f64;
    if var < PROBE_TOL {
        let a = if mean.abs() < PROBE_TOL { 0.0 } else { mean };
        return Ok(if a == 0.0 { Alpha::Zero } else { Alpha::Constant(a) });
    }
    // φ-only: for fixed φ the ratio must not depend on (x, z).
    let trunc = Truncation::new(nu, ALPHA_MODES, 1, 2).map_err(|e| e.to_string())?;
    let shape = GridShape::of(&trunc);
    let mut samples = Vec::with_capacity(shape.total());
    let mut phi = vec![0.0; nu];
    for n in 0..shape.n_phi_nodes() {
        shape.phi_node(n, &mut phi);
        let at_phi: Vec<f64> = probes
            .iter()
            .filter_map(|p| ratio(&Probe { phi: phi.clone(), x: p.x, z: p.z }))
            .collect();
        if at_phi.is_empty() {
            return Err(format!("(Q) factor vanishes at phi = {phi:?}"));
        }
        let m = at_phi.iter().sum::<f64>() / at_phi.len() as f64;
        let v = at_phi.iter().map(|r| (r - m).powi(2)).sum::<f64>() / at_phi.len() as f64;
        if v >= PROBE_TOL {
            return Err(format!("(Q) ratio depends on (x, z) at phi = {phi:?} (variance {v:e})"));
        }
        samples.extend(std::iter::repeat(m).take(shape.m_x));
    }
    let field = crate::spectral::analyze(&samples, &shape, &trunc).map_err(|e| e.to_string())?;
    Ok(Alpha::PhiDependent(field.to_json()))
}

/// Whether the x-average of `f` vanishes along random `u`, checked on an
/// oversampled grid.
fn x_average_vanishes(spec: &NonlinearitySpec, nu: usize) -> Result<(), String> {
    let trunc = Truncation::new(nu, 2, 3, 8).map_err(|e| e.to_string())?;
    let out = Truncation::new(nu, 2, 3, 2).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    for _ in 0..4 {
        let u = FourierField::<f64>::random(trunc, 2, 0.5, 0.2, &mut rng);
        let jet = Jet::new(&u, GridShape::of(&trunc)).map_err(|e| e.to_string())?;
        let vals = spec.f().eval_columns(&jet.columns()).map_err(|e| e.to_string())?;
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let f = crate::spectral::analyze(&vals, jet.shape(), &out).map_err(|e| e.to_string())?;
        let avg = f.x_average().max_coeff();
        if avg > PROBE_TOL * scale {
            return Err(format!("x-average {avg:e} along a random u"));
        }
    }
    Ok(())
}

/// Verifies the structural hypotheses of `spec`.
pub fn structure_flags(spec: &NonlinearitySpec) -> StructureFlags {
    let f = spec.f();
    let nu = f.max_phi().map_or(1, |k| k + 1);
    let pr = probes(nu);
    let zero = Expr::num(0.0);
    let mut diagnostics = Vec::new();
    let mut note = |what: &str, r: Result<(), String>| match r {
        Ok(()) => true,
        Err(e) => {
            diagnostics.push(format!("{what}: {e}"));
            false
        }
    };

    let f2 = spec.df(2);
    let f3 = spec.df(3);
    let cond_f = note("(F)", identity(f2, &zero, &pr));
    let f33 = f3.derivative(Var::Z(3));
    let mut cond_q = note("(Q) d2f/dz3dz3", identity(&f33, &zero, &pr));
    let mut alpha = None;
    if cond_f {
        alpha = Some(Alpha::Zero);
    } else if cond_q {
        let q = q_factor(f3);
        match recover_alpha(f2, &q, &pr, nu) {
            Ok(a) => {
                let check = match &a {
                    Alpha::PhiDependent(_) => pr.iter().try_for_each(|p| {
                        let lhs = f2.eval(&p.point()).map_err(|e| e.to_string())?;
                        let rhs = a.eval(&p.phi) * q.eval(&p.point()).map_err(|e| e.to_string())?;
                        if close(lhs, rhs) {
                            Ok(())
                        } else {
                            Err(format!("{lhs:e} != {rhs:e} at {}", show(p)))
                        }
                    }),
                    Alpha::Zero => identity(f2, &zero, &pr),
                    Alpha::Constant(c) => identity(f2, &Expr::mul(Expr::num(*c), q.clone()), &pr),
                };
                cond_q = note("(Q) identity", check);
                alpha = cond_q.then_some(a);
            }
            Err(e) => {
                cond_q = note("(Q) alpha", Err(e));
            }
        }
    }
    if cond_f && cond_q {
        alpha = Some(Alpha::Zero);
    }
    let reversible = note("reversibility", identity(&reflect(f, nu), &Expr::neg(f.clone()), &pr));
    let total_derivative = match spec.form() {
        DeclaredForm::DxOfG | DeclaredForm::HamiltonianF => true,
        DeclaredForm::RawF => note("total derivative", x_average_vanishes(spec, nu)),
    };
    StructureFlags {
        cond_f,
        cond_q,
        alpha,
        reversible,
        total_derivative,
        hamiltonian: spec.form() == DeclaredForm::HamiltonianF,
        has_division: spec.generator().has_division(),
        diagnostics,
    }
}
