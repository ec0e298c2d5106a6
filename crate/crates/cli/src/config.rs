//! Experiment configuration (TOML, schema version 1).

use std::path::Path;

use anyhow::{bail, Context, Result};
use kdvkam::dynamics::StabilityConfig;
use kdvkam::kamreduce::{lambda_grid, IterationSchedule};
use kdvkam::nonlin::{DeclaredForm, NonlinearitySpec};
use kdvkam::solver::NashMoserConfig;
use kdvkam::spectral::{preset_omega_bar, Frequency, Truncation};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub nonlinearity: NonlinearityConfig,
    pub epsilon: OneOrMany,
    pub frequency: FrequencyConfig,
    pub lambda: LambdaSpec,
    pub truncation: TruncationConfig,
    pub kam: KamConfig,
    pub nash_moser: NewtonConfig,
    pub dynamics: DynamicsConfig,
    pub reduce: ReduceConfig,
    pub seed: u64,
    /// Not echoed in reports, so that runs into different directories
    /// produce identical payloads.
    #[serde(skip_serializing)]
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: SCHEMA_VERSION,
            nonlinearity: NonlinearityConfig::default(),
            epsilon: OneOrMany::One(1e-3),
            frequency: FrequencyConfig::default(),
            lambda: LambdaSpec::Value(1.118),
            truncation: TruncationConfig::default(),
            kam: KamConfig::default(),
            nash_moser: NewtonConfig::default(),
            dynamics: DynamicsConfig::default(),
            reduce: ReduceConfig::default(),
            seed: 0,
            output_dir: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub builtin: Option<String>,
    pub text: Option<String>,
    pub declared_form: DeclaredForm,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        NonlinearityConfig { builtin: Some("quasilinear_cubic".into()), text: None, declared_form: DeclaredForm::RawF }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyConfig {
    /// Named preset `ω̄` for this `ν`.
    pub preset: Option<usize>,
    pub omega_bar: Option<Vec<f64>>,
    pub gamma0: f64,
    /// Defaults to `ν`.
    pub tau0: Option<f64>,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        FrequencyConfig { preset: Some(1), omega_bar: None, gamma0: 0.05, tau0: None }
    }
}

/// `1.1`, `[0.9, 1.1]` or `{ points = 201, min = 0.5, max = 1.5 }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Value(f64),
    List(Vec<f64>),
    Grid(GridSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl LambdaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaSpec::Value(v) => vec![*v],
            LambdaSpec::List(v) => v.clone(),
            LambdaSpec::Grid(g) => match (g.min, g.max) {
                (None, None) => lambda_grid(g.points),
                (lo, hi) => {
                    let (lo, hi) = (lo.unwrap_or(0.5), hi.unwrap_or(1.5));
                    match g.points {
                        0 => Vec::new(),
                        1 => vec![0.5 * (lo + hi)],
                        n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
                    }
                }
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    pub n_phi: usize,
    pub n_x: usize,
    pub oversample: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { n_phi: 8, n_x: 8, oversample: 2 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KamConfig {
    pub n0: usize,
    pub chi: f64,
    /// Fixed `γ`; exclusive with `a`.
    pub gamma: Option<f64>,
    /// `γ = ε^a`; `measure` defaults to `a = 1/2`.
    pub a: Option<f64>,
    /// Defaults to `ν + 2`.
    pub tau: Option<f64>,
    pub target_decay: f64,
    pub max_steps: usize,
}

impl Default for KamConfig {
    fn default() -> Self {
        let s = IterationSchedule::for_nu(1);
        KamConfig { n0: s.n0, chi: s.chi, gamma: None, a: None, tau: None, target_decay: s.target_decay, max_steps: s.max_steps }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    /// Defaults to `1e−10 (1 + ‖F(0)‖_{s₀})`.
    pub tol_res: Option<f64>,
    pub max_iters: usize,
    /// Upper bound on `ε/γ`.
    pub smallness: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol_res: None, max_iters: 12, smallness: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    pub s: f64,
    pub n_samples: usize,
    /// Number of random initial states `h₀`.
    pub initial_states: usize,
    pub band: usize,
    pub decay: f64,
    /// Overrides the global seed for `h₀`.
    pub seed: Option<u64>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let s = StabilityConfig::default();
        DynamicsConfig {
            t_end: s.t_end,
            dt: s.dt,
            s: s.s,
            n_samples: s.n_samples,
            initial_states: 1,
            band: 3,
            decay: 0.5,
            seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducePoint {
    Zero,
    /// Nash-Moser solution at the same `(ε, λ)`.
    Solution,
    /// Seeded random even field.
    Random,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceConfig {
    pub at: ReducePoint,
    pub probe_amplitude: f64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig { at: ReducePoint::Solution, probe_amplitude: 0.05 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// All problems, each prefixed with its field path, plus warnings.
    pub fn validate(&self) -> (Vec<String>, Vec<String>) {
        let mut errs = Vec::new();
        let mut warns = Vec::new();
        let mut err = |path: &str, msg: String| errs.push(format!("{path}: {msg}"));
        if self.version != SCHEMA_VERSION {
            err("version", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version));
        }
        let nl = &self.nonlinearity;
        match (&nl.builtin, &nl.text) {
            (Some(_), Some(_)) => err("nonlinearity", "set either builtin or text, not both".into()),
            (None, None) => err("nonlinearity", "one of builtin or text is required".into()),
            _ => {}
        }
        if let Err(e) = self.spec_at(0.0) {
            err(if nl.builtin.is_some() { "nonlinearity.builtin" } else { "nonlinearity.text" }, e.to_string());
        }
        let eps = self.epsilon.values();
        if eps.is_empty() {
            err("epsilon", "at least one value is required".into());
        }
        for (i, e) in eps.iter().enumerate() {
            if !(e.is_finite() && *e >= 0.0) {
                err(&format!("epsilon[{i}]"), format!("{e} is not a finite nonnegative number"));
            }
        }
        let fr = &self.frequency;
        match (&fr.preset, &fr.omega_bar) {
            (Some(_), Some(_)) => err("frequency", "set either preset or omega_bar, not both".into()),
            (None, None) => err("frequency", "one of preset or omega_bar is required".into()),
            (Some(0), _) => err("frequency.preset", "nu must be at least 1".into()),
            (_, Some(w)) if w.is_empty() => err("frequency.omega_bar", "must be nonempty".into()),
            _ => {}
        }
        if !(fr.gamma0 > 0.0) {
            err("frequency.gamma0", "must be positive".into());
        }
        let lambdas = self.lambda.values();
        if lambdas.is_empty() {
            err("lambda", "at least one value is required".into());
        }
        for (i, l) in lambdas.iter().enumerate() {
            if !(0.5..=1.5).contains(l) {
                err(&format!("lambda[{i}]"), format!("{l} outside [0.5, 1.5]"));
            }
        }
        let t = &self.truncation;
        if t.n_phi == 0 {
            err("truncation.n_phi", "must be at least 1".into());
        }
        if t.n_x == 0 {
            err("truncation.n_x", "must be at least 1".into());
        }
        if t.oversample < 2 {
            err("truncation.oversample", "must be at least 2".into());
        }
        let k = &self.kam;
        if k.n0 < 2 {
            err("kam.n0", "must be at least 2".into());
        }
        if !(k.chi > 1.0 && k.chi < 2.0) {
            err("kam.chi", format!("{} outside (1, 2)", k.chi));
        }
        match (k.gamma, k.a) {
            (Some(_), Some(_)) => err("kam", "set either gamma or a, not both".into()),
            (Some(g), None) if !(g > 0.0) => err("kam.gamma", "must be positive".into()),
            (None, Some(a)) if !(a > 0.0 && a < 1.0) => err("kam.a", format!("{a} outside (0, 1)")),
            _ => {}
        }
        let nu = self.nu();
        if let Some(tau) = k.tau {
            if !(tau > 0.0) {
                err("kam.tau", "must be positive".into());
            } else if tau <= nu as f64 + 1.0 {
                warns.push(format!("kam.tau: {tau} <= nu + 1 = {}; the Melnikov bounds are usually stated for tau > nu + 1", nu + 1));
            }
        }
        if !(k.target_decay > 0.0) {
            err("kam.target_decay", "must be positive".into());
        }
        if let Some(tol) = self.nash_moser.tol_res {
            if !(tol > 0.0) {
                err("nash_moser.tol_res", "must be positive".into());
            }
        }
        if self.nash_moser.max_iters == 0 {
            err("nash_moser.max_iters", "must be at least 1".into());
        }
        if !(self.nash_moser.smallness > 0.0) {
            err("nash_moser.smallness", "must be positive".into());
        }
        let d = &self.dynamics;
        if !(d.t_end >= 0.0 && d.t_end.is_finite()) {
            err("dynamics.T", "must be finite and nonnegative".into());
        }
        if !(d.dt > 0.0) {
            err("dynamics.dt", "must be positive".into());
        }
        if d.n_samples == 0 {
            err("dynamics.n_samples", "must be at least 1".into());
        }
        if d.initial_states == 0 {
            err("dynamics.initial_states", "must be at least 1".into());
        }
        if !(self.reduce.probe_amplitude >= 0.0) {
            err("reduce.probe_amplitude", "must be nonnegative".into());
        }
        (errs, warns)
    }

    pub fn nu(&self) -> usize {
        match (&self.frequency.omega_bar, self.frequency.preset) {
            (Some(w), _) => w.len(),
            (None, Some(nu)) => nu,
            _ => 1,
        }
    }

    pub fn spec_at(&self, epsilon: f64) -> kdvkam::Result<NonlinearitySpec> {
        let nl = &self.nonlinearity;
        let spec = match (&nl.builtin, &nl.text) {
            (Some(name), _) => NonlinearitySpec::builtin(name, epsilon)?,
            (None, Some(text)) => NonlinearitySpec::parse(text, nl.declared_form, epsilon)?,
            (None, None) => return Err(kdvkam::Error::InvalidParameter("no nonlinearity".into())),
        };
        spec.check_nu(self.nu())?;
        Ok(spec)
    }

    pub fn truncation(&self) -> Result<Truncation> {
        let t = &self.truncation;
        Ok(Truncation::new(self.nu(), t.n_phi, t.n_x, t.oversample)?)
    }

    /// Frequency at the first λ; others are obtained with `with_lambda`.
    pub fn frequency(&self) -> Result<Frequency<f64>> {
        let nu = self.nu();
        let omega_bar = self.frequency.omega_bar.clone().unwrap_or_else(|| preset_omega_bar(nu));
        let tau0 = self.frequency.tau0.unwrap_or(nu as f64);
        let lambda = self.lambda.values().first().copied().unwrap_or(1.0);
        Frequency::new(omega_bar, lambda, self.frequency.gamma0, tau0, self.truncation.n_phi)
            .context("frequency: Diophantine witness")
    }

    /// `γ` used at this `ε`: fixed, `ε^a`, or the schedule default.
    pub fn gamma_at(&self, epsilon: f64) -> f64 {
        match (self.kam.gamma, self.kam.a) {
            (Some(g), _) => g,
            (None, Some(a)) => epsilon.abs().powf(a),
            (None, None) => IterationSchedule::for_nu(self.nu()).gamma,
        }
    }

    pub fn newton_config(&self, epsilon: f64) -> NashMoserConfig {
        let nu = self.nu();
        let gamma = self.gamma_at(epsilon);
        let mut cfg = NashMoserConfig::for_nu(nu);
        let k = &self.kam;
        cfg.kam.n0 = k.n0;
        cfg.kam.chi = k.chi;
        cfg.kam.target_decay = k.target_decay;
        cfg.kam.max_steps = k.max_steps;
        if let Some(tau) = k.tau {
            cfg.kam.tau = tau;
            cfg.tau = tau;
        }
        cfg.kam.gamma = gamma;
        cfg.gamma = gamma;
        cfg.tol_res = self.nash_moser.tol_res;
        cfg.max_iters = self.nash_moser.max_iters;
        cfg.smallness = self.nash_moser.smallness;
        cfg
    }

    pub fn stability_config(&self) -> StabilityConfig {
        let d = &self.dynamics;
        StabilityConfig { t_end: d.t_end, dt: d.dt, s: d.s, n_samples: d.n_samples }
    }
}

/// Fails with every validation error, one per line.
pub fn validated(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let (errs, warns) = cfg.validate();
    if !errs.is_empty() {
        bail!("invalid configuration:\n  {}", errs.join("\n  "));
    }
    Ok(warns)
}
