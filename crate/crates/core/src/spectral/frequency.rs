use serde::Serialize;

use super::truncation::{lnorm, Lattice};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Forcing frequency `ω = λ ω̄` together with its Diophantine constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Frequency<T: Real> {
    omega_bar: Vec<T>,
    lambda: T,
    gamma0: T,
    tau0: T,
    omega: Vec<T>,
}

impl<T: Real> Frequency<T> {
    /// Builds the frequency and checks the Diophantine witness
    /// `|ω̄·l| >= 3 γ0 / |l|^τ0` for `0 < |l| <= 2 n_phi`.
    pub fn new(omega_bar: Vec<T>, lambda: T, gamma0: T, tau0: T, n_phi: usize) -> Result<Self> {
        if omega_bar.is_empty() {
            return Err(Error::InvalidParameter("omega_bar must have at least one component".into()));
        }
        if !(lambda >= T::lit(0.5) && lambda <= T::lit(1.5)) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} outside [1/2, 3/2]")));
        }
        if !(gamma0 > T::zero()) {
            return Err(Error::InvalidParameter("gamma0 must be positive".into()));
        }
        let lat = Lattice::new(omega_bar.len(), 2 * n_phi);
        let mut l = vec![0i64; omega_bar.len()];
        for idx in 0..lat.len() {
            lat.point(idx, &mut l);
            let n = lnorm(&l);
            if n == 0 {
                continue;
            }
            let v = dot(&omega_bar, &l).abs();
            let bound = T::lit(3.0) * gamma0 / T::int(n).powf(tau0);
            if v < bound {
                return Err(Error::NotDiophantine { l: l.clone(), value: v.as_f64(), bound: bound.as_f64() });
            }
        }
        let omega = omega_bar.iter().map(|&w| w * lambda).collect();
        Ok(Frequency { omega_bar, lambda, gamma0, tau0, omega })
    }

    /// Preset `ω̄` with defaults `γ0 = 0.05`, `τ0 = ν`.
    pub fn preset(nu: usize, lambda: T, n_phi: usize) -> Result<Self> {
        Self::new(preset_omega_bar(nu), lambda, T::lit(0.05), T::int(nu as i64), n_phi)
    }

    /// Same `ω̄`, `γ0`, `τ0` with another `λ`.
    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        if !(lambda >= T::lit(0.5) && lambda <= T::lit(1.5)) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} outside [1/2, 3/2]")));
        }
        let omega = self.omega_bar.iter().map(|&w| w * lambda).collect();
        Ok(Frequency { omega, lambda, ..self.clone() })
    }

    pub fn nu(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn omega_bar(&self) -> &[T] {
        &self.omega_bar
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn gamma0(&self) -> T {
        self.gamma0
    }

    pub fn tau0(&self) -> T {
        self.tau0
    }

    /// `ω·l`.
    pub fn dot(&self, l: &[i64]) -> T {
        dot(&self.omega, l)
    }

    /// `ω̄·l`.
    pub fn dot_bar(&self, l: &[i64]) -> T {
        dot(&self.omega_bar, l)
    }

    /// Euclidean norm of `ω`.
    pub fn norm(&self) -> T {
        self.omega.iter().fold(T::zero(), |a, &w| a + w * w).sqrt()
    }

    /// Smallest admissible `|ω·l|` for `(ω·∂_φ)^{-1}`.
    pub fn divisor_floor(&self) -> T {
        T::lit(1e-10) * self.norm()
    }
}

/// `ν = 1: 1`; `ν = 2: (1, (√5-1)/2)`; higher components use fractional
/// parts of square roots of small primes.
pub fn preset_omega_bar<T: Real>(nu: usize) -> Vec<T> {
    let mut w = vec![T::one()];
    let extra = [
        (5f64.sqrt() - 1.0) / 2.0,
        2f64.sqrt() - 1.0,
        3f64.sqrt() - 1.0,
        7f64.sqrt() - 2.0,
        11f64.sqrt() - 3.0,
        13f64.sqrt() - 3.0,
        17f64.sqrt() - 4.0,
        19f64.sqrt() - 4.0,
    ];
    for k in 1..nu {
        w.push(T::lit(extra[(k - 1) % extra.len()]));
    }
    w
}

fn dot<T: Real>(w: &[T], l: &[i64]) -> T {
    w.iter().zip(l).fold(T::zero(), |a, (&wi, &li)| a + wi * T::int(li))
}
