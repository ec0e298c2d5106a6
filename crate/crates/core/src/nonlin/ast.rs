//! Expression trees over `(φ, x, z₀, z₁, z₂, z₃)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest denominator magnitude accepted by evaluation.
pub const DIV_GUARD: f64 = 1e-14;

/// A free variable of a nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    /// `phi_{k+1}` (zero-based).
    Phi(usize),
    X,
    /// `z_k`, the k-th x-derivative slot.
    Z(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Phi(k) => write!(f, "phi_{}", k + 1),
            Var::X => write!(f, "x"),
            Var::Z(k) => write!(f, "z{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

use Expr::*;

/// Values of every variable at one point.
#[derive(Clone, Copy, Debug)]
pub struct Point<'a, T> {
    pub phi: &'a [T],
    pub x: T,
    pub z: [T; 4],
}

/// Columns of variable values over a grid; all slices have equal length.
#[derive(Clone, Debug)]
pub struct Columns<'a, T> {
    pub phi: Vec<&'a [T]>,
    pub x: &'a [T],
    pub z: [&'a [T]; 4],
}

impl<'a, T> Columns<'a, T> {
    fn len(&self) -> usize {
        self.x.len()
    }
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Var(v)
    }

    pub fn z(k: usize) -> Expr {
        Var(self::Var::Z(k))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Add(bx(a), bx(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Sub(bx(a), bx(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Mul(bx(a), bx(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Div(bx(a), bx(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Neg(bx(a))
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        Pow(bx(a), n)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Num(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Num(v) if *v == 1.0)
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Num(_) | Var(_) => vec![],
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => vec![a, b],
            Neg(a) | Pow(a, _) | Sin(a) | Cos(a) | Exp(a) => vec![a],
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        match self {
            Var(w) => *w == v,
            _ => self.children().iter().any(|c| c.contains(v)),
        }
    }

    /// Largest zero-based φ index used, if any.
    pub fn max_phi(&self) -> Option<usize> {
        match self {
            Var(self::Var::Phi(k)) => Some(*k),
            _ => self.children().iter().filter_map(|c| c.max_phi()).max(),
        }
    }

    pub fn has_division(&self) -> bool {
        match self {
            Div(..) => true,
            Pow(_, n) if *n < 0 => true,
            _ => self.children().iter().any(|c| c.has_division()),
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Partial derivative, simplified.
    pub fn derivative(&self, v: Var) -> Expr {
        self.diff(v).simplify()
    }

    fn diff(&self, v: Var) -> Expr {
        if !self.contains(v) {
            return Num(0.0);
        }
        match self {
            Num(_) => Num(0.0),
            Var(w) => Num(if *w == v { 1.0 } else { 0.0 }),
            Add(a, b) => Expr::add(a.diff(v), b.diff(v)),
            Sub(a, b) => Expr::sub(a.diff(v), b.diff(v)),
            Mul(a, b) => Expr::add(Expr::mul(a.diff(v), (**b).clone()), Expr::mul((**a).clone(), b.diff(v))),
            Div(a, b) => Expr::div(
                Expr::sub(Expr::mul(a.diff(v), (**b).clone()), Expr::mul((**a).clone(), b.diff(v))),
                Expr::pow((**b).clone(), 2),
            ),
            Neg(a) => Expr::neg(a.diff(v)),
            Pow(a, n) => Expr::mul(Expr::mul(Num(*n as f64), Expr::pow((**a).clone(), n - 1)), a.diff(v)),
            Sin(a) => Expr::mul(Cos(a.clone()), a.diff(v)),
            Cos(a) => Expr::neg(Expr::mul(Sin(a.clone()), a.diff(v))),
            Exp(a) => Expr::mul(Exp(a.clone()), a.diff(v)),
        }
    }

    /// Total x-derivative `∂_x + z₁∂_{z₀} + z₂∂_{z₁} + z₃∂_{z₂}`; the
    /// expression must not depend on `z₃`.
    pub fn total_dx(&self) -> Result<Expr> {
        if self.contains(self::Var::Z(3)) {
            return Err(Error::InvalidParameter("total x-derivative of an expression in z3 needs z4".into()));
        }
        let mut out = self.diff(self::Var::X);
        for k in 0..3 {
            out = Expr::add(out, Expr::mul(Expr::z(k + 1), self.diff(self::Var::Z(k))));
        }
        Ok(out.simplify())
    }

    /// Replaces every occurrence of a variable.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        match self {
            Var(w) if *w == v => with.clone(),
            Num(_) | Var(_) => self.clone(),
            Add(a, b) => Expr::add(a.substitute(v, with), b.substitute(v, with)),
            Sub(a, b) => Expr::sub(a.substitute(v, with), b.substitute(v, with)),
            Mul(a, b) => Expr::mul(a.substitute(v, with), b.substitute(v, with)),
            Div(a, b) => Expr::div(a.substitute(v, with), b.substitute(v, with)),
            Neg(a) => Expr::neg(a.substitute(v, with)),
            Pow(a, n) => Expr::pow(a.substitute(v, with), *n),
            Sin(a) => Sin(bx(a.substitute(v, with))),
            Cos(a) => Cos(bx(a.substitute(v, with))),
            Exp(a) => Exp(bx(a.substitute(v, with))),
        }
    }

    /// Local algebraic normalization: constant folding and the identities
    /// of 0 and 1. Sufficient to reduce derivatives of polynomials in absent
    /// variables to `0`.
    pub fn simplify(&self) -> Expr {
        match self {
            Num(_) | Var(_) => self.clone(),
            Add(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) => Num(x + y),
                    _ if a.is_zero() => b,
                    _ if b.is_zero() => a,
                    (_, Neg(c)) => Expr::sub(a.clone(), (**c).clone()).simplify(),
                    _ => Expr::add(a, b),
                }
            }
            Sub(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) => Num(x - y),
                    _ if b.is_zero() => a,
                    _ if a.is_zero() => Expr::neg(b).simplify(),
                    _ if a == b => Num(0.0),
                    _ => Expr::sub(a, b),
                }
            }
            Mul(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) => Num(x * y),
                    _ if a.is_zero() || b.is_zero() => Num(0.0),
                    _ if a.is_one() => b,
                    _ if b.is_one() => a,
                    (Num(x), Mul(c, d)) if matches!(**c, Num(_)) => {
                        let Num(y) = **c else { unreachable!() };
                        Expr::mul(Num(x * y), (**d).clone())
                    }
                    (_, Num(_)) => Expr::mul(b, a),
                    (Neg(c), _) => Expr::neg(Expr::mul((**c).clone(), b)).simplify(),
                    (_, Neg(c)) => Expr::neg(Expr::mul(a.clone(), (**c).clone())).simplify(),
                    _ => Expr::mul(a, b),
                }
            }
            Div(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(x), Num(y)) if *y != 0.0 => Num(x / y),
                    _ if a.is_zero() => Num(0.0),
                    _ if b.is_one() => a,
                    _ => Expr::div(a, b),
                }
            }
            Neg(a) => match a.simplify() {
                Num(x) => Num(-x),
                Neg(c) => *c,
                c => Expr::neg(c),
            },
            Pow(a, n) => {
                let a = a.simplify();
                match (&a, *n) {
                    (_, 0) => Num(1.0),
                    (_, 1) => a,
                    (Num(x), n) if *x != 0.0 || n > 0 => Num(x.powi(n)),
                    (Pow(c, m), n) => Expr::pow((**c).clone(), m * n),
                    _ => Expr::pow(a, *n),
                }
            }
            Sin(a) => match a.simplify() {
                Num(x) => Num(x.sin()),
                Neg(c) => Expr::neg(Sin(c)),
                c => Sin(bx(c)),
            },
            Cos(a) => match a.simplify() {
                Num(x) => Num(x.cos()),
                Neg(c) => Cos(c),
                c => Cos(bx(c)),
            },
            Exp(a) => match a.simplify() {
                Num(x) => Num(x.exp()),
                c => Exp(bx(c)),
            },
        }
    }

    /// Evaluates at a single point.
    pub fn eval<T: Real>(&self, p: &Point<'_, T>) -> Result<T> {
        Ok(match self {
            Num(v) => T::lit(*v),
            Var(v) => match v {
                self::Var::Phi(k) => *p.phi.get(*k).ok_or_else(|| phi_error(*k, p.phi.len()))?,
                self::Var::X => p.x,
                self::Var::Z(k) => p.z[*k],
            },
            Add(a, b) => a.eval(p)? + b.eval(p)?,
            Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Div(a, b) => guarded_div(a.eval(p)?, b.eval(p)?)?,
            Neg(a) => -a.eval(p)?,
            Pow(a, n) => guarded_powi(a.eval(p)?, *n)?,
            Sin(a) => a.eval(p)?.sin(),
            Cos(a) => a.eval(p)?.cos(),
            Exp(a) => a.eval(p)?.exp(),
        })
    }

    /// Evaluates over columns of variable values.
    pub fn eval_columns<T: Real>(&self, c: &Columns<'_, T>) -> Result<Vec<T>> {
        let n = c.len();
        Ok(match self {
            Num(v) => vec![T::lit(*v); n],
            Var(v) => match v {
                self::Var::Phi(k) => c.phi.get(*k).ok_or_else(|| phi_error(*k, c.phi.len()))?.to_vec(),
                self::Var::X => c.x.to_vec(),
                self::Var::Z(k) => c.z[*k].to_vec(),
            },
            Add(a, b) => zip(a.eval_columns(c)?, b.eval_columns(c)?, |x, y| Ok(x + y))?,
            Sub(a, b) => zip(a.eval_columns(c)?, b.eval_columns(c)?, |x, y| Ok(x - y))?,
            Mul(a, b) => zip(a.eval_columns(c)?, b.eval_columns(c)?, |x, y| Ok(x * y))?,
            Div(a, b) => zip(a.eval_columns(c)?, b.eval_columns(c)?, guarded_div)?,
            Neg(a) => a.eval_columns(c)?.into_iter().map(|x| -x).collect(),
            Pow(a, n) => a.eval_columns(c)?.into_iter().map(|x| guarded_powi(x, *n)).collect::<Result<_>>()?,
            Sin(a) => a.eval_columns(c)?.into_iter().map(|x| x.sin()).collect(),
            Cos(a) => a.eval_columns(c)?.into_iter().map(|x| x.cos()).collect(),
            Exp(a) => a.eval_columns(c)?.into_iter().map(|x| x.exp()).collect(),
        })
    }
}

fn phi_error(k: usize, nu: usize) -> Error {
    Error::Dimension(format!("phi_{} used with nu = {nu}", k + 1))
}

fn zip<T: Real>(a: Vec<T>, b: Vec<T>, f: impl Fn(T, T) -> Result<T>) -> Result<Vec<T>> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn guarded_div<T: Real>(a: T, b: T) -> Result<T> {
    if b.abs() < T::lit(DIV_GUARD) {
        return Err(Error::Domain(format!("division by {:e}", b.as_f64())));
    }
    Ok(a / b)
}

fn guarded_powi<T: Real>(a: T, n: i32) -> Result<T> {
    if n < 0 {
        guarded_div(T::one(), a.powi(-n))
    } else {
        Ok(a.powi(n))
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Add(..) | Sub(..) => 1,
        Mul(..) | Div(..) => 2,
        Neg(_) => 3,
        Pow(..) => 4,
        Num(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            Var(v) => write!(f, "{v}"),
            Add(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " + ")?;
                wrap(f, b, 2)
            }
            Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " - ")?;
                wrap(f, b, 2)
            }
            Mul(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "*")?;
                wrap(f, b, 3)
            }
            Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "/")?;
                wrap(f, b, 3)
            }
            Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 3)
            }
            Pow(a, n) => {
                wrap(f, a, 5)?;
                write!(f, "^{n}")
            }
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
        }
    }
}
