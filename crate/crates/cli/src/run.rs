//! The solve, reduce, measure and stability subcommands.

use anyhow::{bail, Result};
use kdvkam::dynamics::{stability_reports, ChainEnvelope, PhaseState, StabilityReport};
use kdvkam::kamreduce::{eigenvalue_report, reduce, EigenvalueReport, StepTrace};
use kdvkam::nonlin::{linearized_coefficients, structure_flags};
use kdvkam::regularize::{run_regularization, Mode, RegChecks};
use kdvkam::solver::{cantor_measure, nash_moser, SolveReport, SolveSummary};
use kdvkam::{Field, Freq};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ReducePoint};
use crate::output::Artifacts;

/// Process exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Every failure was a λ exclusion.
    ExclusionOnly,
    Failed,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ExclusionOnly => 2,
            Outcome::Failed => 1,
        }
    }

    fn of(statuses: impl IntoIterator<Item = Status>) -> Outcome {
        statuses.into_iter().fold(Outcome::Success, |acc, s| match (acc, s) {
            (Outcome::Failed, _) | (_, Status::Failed | Status::NotConverged) => Outcome::Failed,
            (_, Status::Excluded) => Outcome::ExclusionOnly,
            (acc, Status::Converged) => acc,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Excluded,
    NotConverged,
    Failed,
}

fn solve_status(r: &SolveReport<f64>) -> Status {
    if r.converged {
        Status::Converged
    } else if r.excluded_lambda {
        Status::Excluded
    } else {
        Status::NotConverged
    }
}

fn error_status(e: &kdvkam::Error) -> Status {
    if e.is_exclusion() {
        Status::Excluded
    } else {
        Status::Failed
    }
}

/// `(ε index, λ index, ε, λ)` with ε outermost.
fn pairs(cfg: &ExperimentConfig) -> Vec<(usize, usize, f64, f64)> {
    let lambdas = cfg.lambda.values();
    cfg.epsilon
        .values()
        .into_iter()
        .enumerate()
        .flat_map(|(ie, e)| lambdas.iter().enumerate().map(move |(il, &l)| (ie, il, e, l)).collect::<Vec<_>>())
        .collect()
}

fn solve_at(cfg: &ExperimentConfig, base: &Freq, eps: f64, lambda: f64) -> kdvkam::Result<(Freq, SolveReport<f64>)> {
    let spec = cfg.spec_at(eps)?;
    let freq = base.with_lambda(lambda)?;
    let trunc = cfg.truncation().map_err(|e| kdvkam::Error::InvalidParameter(e.to_string()))?;
    let r = nash_moser(&spec, &freq, trunc, &cfg.newton_config(eps))?;
    Ok((freq, r))
}

#[derive(Serialize)]
struct SolveRun {
    epsilon: f64,
    lambda: f64,
    status: Status,
    error: Option<String>,
    summary: Option<SolveSummary>,
}

#[derive(Serialize)]
struct SolveTraceRow {
    epsilon: f64,
    lambda: f64,
    n: usize,
    n_proj: usize,
    gamma_n: f64,
    u_norm: f64,
    residual: f64,
}

pub fn solve(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome> {
    let base = cfg.frequency()?;
    let jobs = pairs(cfg);
    let results: Vec<_> = jobs.par_iter().map(|&(_, _, e, l)| solve_at(cfg, &base, e, l)).collect();
    let mut runs = Vec::new();
    let mut trace = Vec::new();
    for (&(ie, il, eps, lambda), r) in jobs.iter().zip(&results) {
        let status = match r {
            Ok((_, rep)) => solve_status(rep),
            Err(e) => error_status(e),
        };
        let mut run = SolveRun { epsilon: eps, lambda, status, error: None, summary: None };
        match r {
            Ok((freq, rep)) => {
                let mut s = rep.summary(freq, eps);
                s.solution_ref = Some(out.write_field(&format!("solution_e{ie}_l{il}"), &rep.solution)?);
                for it in &rep.iterates {
                    trace.push(SolveTraceRow {
                        epsilon: eps,
                        lambda,
                        n: it.n,
                        n_proj: it.n_proj,
                        gamma_n: it.gamma_n,
                        u_norm: it.u_norm,
                        residual: it.residual,
                    });
                }
                run.summary = Some(s);
            }
            Err(e) => run.error = Some(e.to_string()),
        }
        eprintln!("solve eps = {eps:e}, lambda = {lambda}: {status:?}");
        runs.push(run);
    }
    out.write_trace(&trace)?;
    let outcome = Outcome::of(runs.iter().map(|r| r.status));
    #[derive(Serialize)]
    struct Body {
        runs: Vec<SolveRun>,
    }
    out.write_report("solve", cfg, &Body { runs })?;
    Ok(outcome)
}

#[derive(Serialize)]
struct KamSummary {
    steps: usize,
    converged: bool,
    smallness_surrogate: f64,
    final_r_norm: f64,
}

#[derive(Serialize)]
struct ReduceRun {
    epsilon: f64,
    lambda: f64,
    status: Status,
    error: Option<String>,
    mode: Option<Mode>,
    point_ref: Option<String>,
    regularization: Option<RegChecks>,
    parity_defects: Option<Vec<(&'static str, f64)>>,
    kam: Option<KamSummary>,
    eigenvalues: Option<EigenvalueReport>,
    spectrum_ref: Option<String>,
}

#[derive(Serialize)]
struct ReduceTraceRow {
    epsilon: f64,
    lambda: f64,
    step: usize,
    n: usize,
    r_norm: f64,
    r_norm_high: f64,
    psi_norm: f64,
    sup_rj: f64,
    psi_reality_defect: f64,
    psi_reversibility_defect: f64,
    mask_fraction: Option<f64>,
}

impl ReduceTraceRow {
    fn new(epsilon: f64, lambda: f64, s: StepTrace) -> Self {
        ReduceTraceRow {
            epsilon,
            lambda,
            step: s.step,
            n: s.n,
            r_norm: s.r_norm,
            r_norm_high: s.r_norm_high,
            psi_norm: s.psi_norm,
            sup_rj: s.sup_rj,
            psi_reality_defect: s.psi_reality_defect,
            psi_reversibility_defect: s.psi_reversibility_defect,
            mask_fraction: s.mask_fraction,
        }
    }
}

/// `μ_j^∞` as `[j, re, im]` rows.
#[derive(Serialize)]
struct SpectrumJson {
    m3: f64,
    m1: f64,
    mu: Vec<[f64; 3]>,
}

pub fn reduce_cmd(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome> {
    let base = cfg.frequency()?;
    let trunc = cfg.truncation()?;
    let jobs = pairs(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let probes: Vec<Field> = jobs
        .iter()
        .map(|_| Field::random(trunc, 3, cfg.reduce.probe_amplitude, 0.3, &mut rng).even_part())
        .collect();
    let results: Vec<kdvkam::Result<_>> = jobs
        .par_iter()
        .zip(&probes)
        .map(|(&(_, _, eps, lambda), probe)| {
            let spec = cfg.spec_at(eps)?;
            let ncfg = cfg.newton_config(eps);
            let (freq, u) = match cfg.reduce.at {
                ReducePoint::Zero => (base.with_lambda(lambda)?, Field::zeros(trunc)),
                ReducePoint::Random => (base.with_lambda(lambda)?, probe.clone()),
                ReducePoint::Solution => {
                    let (freq, r) = solve_at(cfg, &base, eps, lambda)?;
                    if r.excluded_lambda {
                        return Err(kdvkam::Error::Excluded(r.exclusion.unwrap_or_default()));
                    }
                    if !r.converged {
                        return Err(kdvkam::Error::NoConvergence {
                            what: "Nash-Moser",
                            iterations: r.iterates.len().saturating_sub(1),
                            residual: r.residuals().last().copied().unwrap_or(f64::NAN),
                        });
                    }
                    (freq, r.solution)
                }
            };
            let reg = run_regularization(&spec, &freq, &u, &ncfg.reg)?;
            let red = reduce(&reg, &freq, &ncfg.kam)?;
            let reversible = structure_flags(&spec).reversible;
            Ok((u, reg, red, reversible))
        })
        .collect();
    let mut runs = Vec::new();
    let mut trace = Vec::new();
    for (&(ie, il, eps, lambda), r) in jobs.iter().zip(results) {
        let mut run = ReduceRun {
            epsilon: eps,
            lambda,
            status: Status::Converged,
            error: None,
            mode: None,
            point_ref: None,
            regularization: None,
            parity_defects: None,
            kam: None,
            eigenvalues: None,
            spectrum_ref: None,
        };
        match r {
            Ok((u, reg, red, reversible)) => {
                if !red.converged {
                    run.status = Status::NotConverged;
                }
                run.mode = Some(reg.mode);
                run.point_ref = Some(out.write_field(&format!("point_e{ie}_l{il}"), &u)?);
                run.parity_defects = reversible.then(|| reg.parity_defects());
                run.eigenvalues = Some(eigenvalue_report(&red.eigs, reg.m3, reg.m1, eps, reg.mode, reversible));
                let n = red.eigs.n_x() as i64;
                let spectrum = SpectrumJson {
                    m3: reg.m3,
                    m1: reg.m1,
                    mu: (-n..=n).map(|j| [j as f64, red.eigs.get(j).re, red.eigs.get(j).im]).collect(),
                };
                let rel = format!("fields/spectrum_e{ie}_l{il}.json");
                out.write_json(&rel, &spectrum)?;
                run.spectrum_ref = Some(rel);
                run.kam = Some(KamSummary {
                    steps: red.steps,
                    converged: red.converged,
                    smallness_surrogate: red.smallness_surrogate,
                    final_r_norm: red.r_final.decay_norm(kdvkam::spectral::s0(trunc.nu)),
                });
                trace.extend(red.trace.into_iter().map(|step| ReduceTraceRow::new(eps, lambda, step)));
                run.regularization = Some(reg.checks);
            }
            Err(e) => {
                run.status = error_status(&e);
                run.error = Some(e.to_string());
            }
        }
        eprintln!("reduce eps = {eps:e}, lambda = {lambda}: {:?}", run.status);
        runs.push(run);
    }
    out.write_trace(&trace)?;
    let outcome = Outcome::of(runs.iter().map(|r| r.status));
    #[derive(Serialize)]
    struct Body {
        runs: Vec<ReduceRun>,
    }
    out.write_report("reduce", cfg, &Body { runs })?;
    Ok(outcome)
}

#[derive(Serialize)]
struct MeasureTraceRow {
    epsilon: f64,
    gamma: f64,
    lambda: f64,
    accepted: bool,
    baseline: bool,
}

pub fn measure(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome> {
    if cfg.kam.gamma.is_some() {
        bail!("kam.gamma: measure uses gamma = eps^a; set kam.a instead");
    }
    let a = cfg.kam.a.unwrap_or(0.5);
    let eps = cfg.epsilon.values();
    let spec = cfg.spec_at(eps[0])?;
    let lambdas = cfg.lambda.values();
    let rep = cantor_measure(&spec, &cfg.frequency()?, cfg.truncation()?, &eps, &lambdas, a, &cfg.newton_config(eps[0]))?;
    let mut trace = Vec::new();
    for (ie, &e) in rep.epsilons.iter().enumerate() {
        for (il, &l) in rep.lambdas.iter().enumerate() {
            trace.push(MeasureTraceRow {
                epsilon: e,
                gamma: rep.gamma_rule.gammas[ie],
                lambda: l,
                accepted: rep.masks[ie][il],
                baseline: rep.baseline_masks[ie][il],
            });
        }
        eprintln!("measure eps = {e:e}: accepted fraction {}", rep.fractions[ie]);
    }
    out.write_trace(&trace)?;
    #[derive(Serialize)]
    struct Body<'a> {
        measure: &'a kdvkam::solver::MeasureReport,
    }
    out.write_report("measure", cfg, &Body { measure: &rep })?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct StabilitySummary {
    initial: usize,
    initial_ref: String,
    max_ratio: f64,
    min_ratio: f64,
    v_drift: f64,
    endpoint_discrepancy: f64,
    envelope: ChainEnvelope,
}

#[derive(Serialize)]
struct StabilityRun {
    epsilon: f64,
    lambda: f64,
    status: Status,
    error: Option<String>,
    solve: Option<SolveSummary>,
    trajectories: Vec<StabilitySummary>,
}

#[derive(Serialize)]
struct StabilityTraceRow {
    epsilon: f64,
    lambda: f64,
    initial: usize,
    t: f64,
    tau: f64,
    h_h1: f64,
    h_s: f64,
    v_s: f64,
    discrepancy: f64,
}

pub fn stability(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome> {
    let base = cfg.frequency()?;
    let trunc = cfg.truncation()?;
    let d = &cfg.dynamics;
    let mut rng = ChaCha8Rng::seed_from_u64(d.seed.unwrap_or(cfg.seed));
    let h0s: Vec<PhaseState<f64>> =
        (0..d.initial_states).map(|_| PhaseState::random(trunc.n_x, d.band, d.decay, &mut rng)).collect();
    let mut initial_refs = Vec::new();
    for (k, h0) in h0s.iter().enumerate() {
        let rel = format!("fields/h0_{k}.json");
        out.write_json(&rel, h0)?;
        initial_refs.push(rel);
    }
    let scfg = cfg.stability_config();
    let jobs = pairs(cfg);
    let mut runs = Vec::new();
    let mut trace = Vec::new();
    // pairs run one after another; the initial states run in parallel
    for &(_, _, eps, lambda) in &jobs {
        let mut run = StabilityRun { epsilon: eps, lambda, status: Status::Converged, error: None, solve: None, trajectories: Vec::new() };
        let reports: kdvkam::Result<Vec<StabilityReport>> = solve_at(cfg, &base, eps, lambda).and_then(|(freq, r)| {
            run.solve = Some(r.summary(&freq, eps));
            run.status = solve_status(&r);
            match r.linearization {
                Some(lin) if r.converged => {
                    let spec = cfg.spec_at(eps)?;
                    let widen = cfg.newton_config(eps).reg.coeff_widen;
                    let coeffs = linearized_coefficients(&spec, &r.solution, &trunc.widened(widen))?;
                    stability_reports(&lin, &coeffs, &freq, &h0s, &scfg)
                }
                _ => Ok(Vec::new()),
            }
        });
        match reports {
            Ok(reps) => {
                for (k, rep) in reps.into_iter().enumerate() {
                    trace.extend(rep.rows.iter().map(|row| StabilityTraceRow {
                        epsilon: eps,
                        lambda,
                        initial: k,
                        t: row.t,
                        tau: row.tau,
                        h_h1: row.h_h1,
                        h_s: row.h_s,
                        v_s: row.v_s,
                        discrepancy: row.discrepancy,
                    }));
                    run.trajectories.push(StabilitySummary {
                        initial: k,
                        initial_ref: initial_refs[k].clone(),
                        max_ratio: rep.max_ratio,
                        min_ratio: rep.min_ratio,
                        v_drift: rep.v_drift,
                        endpoint_discrepancy: rep.endpoint_discrepancy,
                        envelope: rep.envelope,
                    });
                }
            }
            Err(e) => {
                run.status = error_status(&e);
                run.error = Some(e.to_string());
            }
        }
        eprintln!("stability eps = {eps:e}, lambda = {lambda}: {:?}", run.status);
        runs.push(run);
    }
    out.write_trace(&trace)?;
    let outcome = Outcome::of(runs.iter().map(|r| r.status));
    #[derive(Serialize)]
    struct Body {
        runs: Vec<StabilityRun>,
    }
    out.write_report("stability", cfg, &Body { runs })?;
    Ok(outcome)
}
