//! Parsed nonlinearities and the builtin registry.

use serde::{Deserialize, Serialize};

use super::ast::{Expr, Var};
use super::parser::parse;
use crate::error::{Error, Result};

/// How the source text relates to `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeclaredForm {
    /// The text is `f` itself.
    #[default]
    RawF,
    /// The text is `g(φ, x, z₀, z₁, z₂)` and `f = ∂_x g` (total derivative).
    DxOfG,
    /// The text is `F(φ, x, z₀, z₁)` and `f = -∂_x(∂_{z₀}F) + ∂_xx(∂_{z₁}F)`.
    HamiltonianF,
}

/// Named nonlinearities: `(name, text, form)`.
pub const BUILTINS: &[(&str, &str, DeclaredForm)] = &[
    ("quasilinear_cubic", "z0^2*z3", DeclaredForm::RawF),
    ("hamiltonian_cubic", "z1^3", DeclaredForm::HamiltonianF),
    ("fully_nonlinear_F", "cos(phi_1 + x)*z3 + z0^2*z1 + z3^3", DeclaredForm::RawF),
    ("forced_quasilinear_cubic", "z0^2*z3 + sin(phi_1 + 2*x)", DeclaredForm::RawF),
    ("drifting_cubic", "z0^2*z3 + z0^2*z1 + z0", DeclaredForm::RawF),
    ("strongly_forced_cubic", "z0^2*z3 + 3000*sin(phi_1 + 2*x)", DeclaredForm::RawF),
];

/// A nonlinearity `ε f(φ, x, z₀, z₁, z₂, z₃)` with its first partials in `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearitySpec {
    source: String,
    form: DeclaredForm,
    epsilon: f64,
    generator: Expr,
    f: Expr,
    df: [Expr; 4],
}

impl NonlinearitySpec {
    pub fn parse(text: &str, form: DeclaredForm, epsilon: f64) -> Result<Self> {
        let mut s = Self::from_expr(parse(text)?, form, epsilon)?;
        s.source = text.to_string();
        Ok(s)
    }

    /// Looks `name` up in [`BUILTINS`].
    pub fn builtin(name: &str, epsilon: f64) -> Result<Self> {
        let (_, text, form) = BUILTINS
            .iter()
            .find(|(n, ..)| *n == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown builtin nonlinearity '{name}'")))?;
        Self::parse(text, *form, epsilon)
    }

    pub fn from_expr(generator: Expr, form: DeclaredForm, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        let f = match form {
            DeclaredForm::RawF => generator.simplify(),
            DeclaredForm::DxOfG => {
                if generator.contains(Var::Z(3)) {
                    return Err(Error::InvalidParameter("g may depend on z0, z1, z2 only".into()));
                }
                generator.total_dx()?
            }
            DeclaredForm::HamiltonianF => {
                if generator.contains(Var::Z(2)) || generator.contains(Var::Z(3)) {
                    return Err(Error::InvalidParameter("Hamiltonian density may depend on z0, z1 only".into()));
                }
                let d0 = generator.derivative(Var::Z(0)).total_dx()?;
                let d1 = generator.derivative(Var::Z(1)).total_dx()?.total_dx()?;
                Expr::sub(d1, d0).simplify()
            }
        };
        let df = [0, 1, 2, 3].map(|k| f.derivative(Var::Z(k)));
        Ok(NonlinearitySpec { source: generator.to_string(), form, epsilon, generator, f, df })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut s = Self::from_expr(self.generator.clone(), self.form, epsilon)?;
        s.source = self.source.clone();
        Ok(s)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn form(&self) -> DeclaredForm {
        self.form
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The expression as given (`f`, `g` or `F` depending on the form).
    pub fn generator(&self) -> &Expr {
        &self.generator
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    /// `∂_{z_k} f`.
    pub fn df(&self, k: usize) -> &Expr {
        &self.df[k]
    }

    /// Fails if the expression references `phi_k` with `k > nu`.
    pub fn check_nu(&self, nu: usize) -> Result<()> {
        match self.f.max_phi() {
            Some(k) if k >= nu => Err(Error::Dimension(format!("nonlinearity uses phi_{} but nu = {nu}", k + 1))),
            _ => Ok(()),
        }
    }
}
