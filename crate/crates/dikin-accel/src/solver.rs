//! The affine-scaling iteration loop and its accelerated variants.
//!
//! Three algorithms share one recurrence. The plain method steps along the
//! scaled steepest-descent direction; the generalized form first nudges the
//! iterate by a normalized momentum term built from the previous step; the
//! accelerated form additionally maintains an entrywise Aitken/Shanks
//! transform of the iterate stream and uses it for the stopping test and
//! the reported solution. The transform never feeds back into the
//! recurrence.

use std::collections::VecDeque;

use ndarray::Array1;
use thiserror::Error;

use crate::diagnostics::{lemma2_residual, TraceRecord};
use crate::linalg::{self, dual_estimates, DualEstimate, LinalgError, NormRule};
use crate::model::{phase1, LinearProgram};

/// Floating-point stand-in for the `s >= 0` part of the optimality test.
/// Exactly zero reduced costs come out of the normal equations with signs
/// set by rounding, so a literal sign test would never fire.
pub const S_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Plain affine scaling.
    Afs,
    /// Momentum (restart) term added to each iterate.
    Gafs,
    /// Momentum plus entrywise series transform for stopping/reporting.
    Aafs,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Afs => "afs",
            Algorithm::Gafs => "gafs",
            Algorithm::Aafs => "aafs",
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid starting point: {0}")]
    InvalidStartingPoint(String),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Step size, in (0, 1).
    pub alpha: f64,
    /// Momentum weight; zero recovers plain affine scaling exactly.
    pub beta: f64,
    /// Duality-gap tolerance of the stopping test.
    pub epsilon: f64,
    pub norm_rule: NormRule,
    pub max_iter: usize,
    /// Relative threshold under which the transform denominator counts as
    /// zero.
    pub shanks_guard_tau: f64,
    /// Restrict `(alpha, beta)` to the region with convergence guarantees:
    /// `0 < alpha < 1`, `0 <= beta < 1/phi`, `alpha + beta <= 2/3`.
    /// Disabling it permits exploratory (chaotic-regime) runs.
    pub enforce_q: bool,
    /// Retain every iterate in the outcome, for post-hoc diagnostics.
    pub keep_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Gafs,
            alpha: 0.55,
            beta: 0.1,
            epsilon: 1e-7,
            norm_rule: NormRule::Gamma,
            max_iter: 10_000,
            shanks_guard_tau: 1e-12,
            enforce_q: true,
            keep_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, alpha: f64, beta: f64) -> Self {
        Self {
            algorithm,
            alpha,
            beta: if algorithm == Algorithm::Afs { 0.0 } else { beta },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let err = |msg: String| Err(SolveError::InvalidConfig(msg));
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return err(format!("alpha must be positive, got {}", self.alpha));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return err(format!("beta must be nonnegative, got {}", self.beta));
        }
        if self.algorithm == Algorithm::Afs && self.beta != 0.0 {
            return err(format!(
                "plain affine scaling requires beta = 0, got {}",
                self.beta
            ));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iter == 0 {
            return err("max_iter must be at least 1".into());
        }
        if !(self.shanks_guard_tau > 0.0) {
            return err(format!(
                "shanks_guard_tau must be positive, got {}",
                self.shanks_guard_tau
            ));
        }
        if self.enforce_q {
            let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
            if self.alpha >= 1.0 {
                return err(format!("alpha must lie in (0,1), got {}", self.alpha));
            }
            if self.beta >= 1.0 / phi {
                return err(format!(
                    "beta must lie in [0, 1/phi) = [0, {:.6}), got {}",
                    1.0 / phi,
                    self.beta
                ));
            }
            if self.alpha + self.beta > 2.0 / 3.0 {
                return err(format!(
                    "alpha + beta = {} exceeds 2/3; pass enforce_q = false for \
                     exploratory runs",
                    self.alpha + self.beta
                ));
            }
        }
        Ok(())
    }
}

/// One solver iterate with its dual estimates.
#[derive(Clone, Debug)]
pub struct IterateState {
    pub k: usize,
    pub x: Array1<f64>,
    /// Momentum-shifted point the next step starts from.
    pub z: Array1<f64>,
    /// `x_k - x_{k-1}`; zero at `k = 0`.
    pub delta_x: Array1<f64>,
    pub est: DualEstimate,
    /// Duality gap `e'X s`.
    pub gap: f64,
    pub obj: f64,
}

impl IterateState {
    fn at(k: usize, x: Array1<f64>, delta_x: Array1<f64>, est: DualEstimate, c: &Array1<f64>) -> Self {
        let gap = est.gap();
        let obj = c.dot(&x);
        Self {
            k,
            z: x.clone(),
            x,
            delta_x,
            est,
            gap,
            obj,
        }
    }
}

/// `||X^-1 delta||_inf` for the momentum normalization.
fn scaled_delta_inf(x: &Array1<f64>, delta: &Array1<f64>) -> f64 {
    x.iter()
        .zip(delta.iter())
        .map(|(&xi, &di)| (di / xi).abs())
        .fold(0.0, f64::max)
}

/// Momentum-shifted iterate: `z = x + beta * delta / ||X^-1 delta||_inf`,
/// degenerating to `z = x` at `k = 0`, with `beta = 0`, or when the
/// previous step was zero.
pub fn update_z(state: &IterateState, beta: f64) -> Array1<f64> {
    match momentum(state, beta) {
        Some((z, _)) => z,
        None => state.x.clone(),
    }
}

fn momentum(state: &IterateState, beta: f64) -> Option<(Array1<f64>, f64)> {
    if state.k == 0 || beta == 0.0 || state.delta_x.iter().all(|&v| v == 0.0) {
        return None;
    }
    let norm = scaled_delta_inf(&state.x, &state.delta_x);
    if !(norm > 0.0) {
        return None;
    }
    let scale = beta / norm;
    Some((&state.x + &(&state.delta_x * scale), scale))
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("iterate left the positive orthant at coordinate {index}")]
    NonpositiveIterate { index: usize },
    #[error("objective increased from {from} to {to}")]
    ObjectiveIncrease { from: f64, to: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Take one step from `state.z` and recompute dual estimates at the new
/// iterate. Callers must have run the stopping tests first; the step
/// enforces positivity and monotone descent.
pub fn step(
    lp: &LinearProgram,
    state: &IterateState,
    config: &SolverConfig,
) -> Result<IterateState, StepError> {
    let d = linalg::eap_direction(&state.est, config.alpha, config.norm_rule)?;
    let x_next = &state.z + &d;
    if let Some((index, _)) = x_next.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(StepError::NonpositiveIterate { index });
    }
    let est = dual_estimates(&lp.a, &x_next, &lp.c)?;
    let obj_next = lp.c.dot(&x_next);
    if obj_next >= state.obj + 1e-10 * (1.0 + state.obj.abs()) {
        return Err(StepError::ObjectiveIncrease {
            from: state.obj,
            to: obj_next,
        });
    }
    let delta = &x_next - &state.x;
    Ok(IterateState::at(state.k + 1, x_next, delta, est, &lp.c))
}

/// Entrywise Aitken/Shanks transform of three consecutive iterates.
///
/// `b_j = x0_j - (x0_j - x1_j)^2 / (x0_j - 2 x1_j + x2_j)`, taken in
/// absolute value so that coordinates extrapolating to (numerically) zero
/// stay usable; near-zero denominators and exactly zero results fall back
/// to `x0_j`. Returns the transform and the per-entry fallback mask.
pub fn shanks_apply(
    x0: &Array1<f64>,
    x1: &Array1<f64>,
    x2: &Array1<f64>,
    tau: f64,
) -> (Array1<f64>, Vec<bool>) {
    let n = x0.len();
    let mut b = Array1::zeros(n);
    let mut fallback = vec![false; n];
    for j in 0..n {
        let (a0, a1, a2) = (x0[j], x1[j], x2[j]);
        let den = a0 - 2.0 * a1 + a2;
        let scale = a0.abs() + a1.abs() + a2.abs() + 1.0;
        if den.abs() <= tau * scale {
            b[j] = a0;
            fallback[j] = true;
            continue;
        }
        let raw = (a0 - (a0 - a1) * (a0 - a1) / den).abs();
        if raw > 0.0 {
            b[j] = raw;
        } else {
            b[j] = a0;
            fallback[j] = true;
        }
    }
    (b, fallback)
}

/// Rolling three-iterate buffer producing the entrywise transform.
#[derive(Clone, Debug)]
pub struct ShanksWindow {
    buf: VecDeque<Array1<f64>>,
    tau: f64,
    transform: Option<Array1<f64>>,
    fallback_mask: Vec<bool>,
}

impl ShanksWindow {
    pub fn new(tau: f64) -> Self {
        Self {
            buf: VecDeque::with_capacity(3),
            tau,
            transform: None,
            fallback_mask: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &Array1<f64>) {
        if self.buf.len() == 3 {
            self.buf.pop_front();
        }
        self.buf.push_back(x.clone());
        if self.buf.len() == 3 {
            let (b, mask) = shanks_apply(&self.buf[0], &self.buf[1], &self.buf[2], self.tau);
            debug_assert!(b.iter().all(|&v| v > 0.0));
            self.transform = Some(b);
            self.fallback_mask = mask;
        }
    }

    /// Transform of the oldest window entry, once three iterates are in.
    pub fn transform(&self) -> Option<&Array1<f64>> {
        self.transform.as_ref()
    }

    pub fn fallback_mask(&self) -> &[bool] {
        &self.fallback_mask
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Unbounded,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::IterationLimit => "IterationLimit",
            SolveStatus::NumericalFailure => "NumericalFailure",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopDecision {
    Continue,
    Optimal { gap: f64 },
    Unbounded,
}

/// Gap used by the stopping rule: `e'X s`, or `e'B s` once the transform
/// window is complete for the accelerated algorithm.
fn stop_gap(state: &IterateState, config: &SolverConfig, window: &ShanksWindow) -> f64 {
    if config.algorithm == Algorithm::Aafs {
        if let Some(b) = window.transform() {
            return b.dot(&state.est.s);
        }
    }
    state.gap
}

/// Fixed test order: optimality, then unboundedness.
pub fn check_stop(state: &IterateState, config: &SolverConfig, window: &ShanksWindow) -> StopDecision {
    let s_ok = state.est.s.iter().all(|&s| s >= -S_TOL);
    let gap = stop_gap(state, config, window);
    if s_ok && gap < config.epsilon {
        return StopDecision::Optimal { gap };
    }
    if state.est.x2s.iter().all(|&v| v <= 0.0) {
        return StopDecision::Unbounded;
    }
    StopDecision::Continue
}

/// Result of a solve. Vector fields are present when the status has a
/// meaningful point to report; for phase-I wrapped solves they are given in
/// the original column space (artificial stripped), while `trace` rows
/// describe the augmented problem.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub x_star: Option<Array1<f64>>,
    pub y_star: Option<Array1<f64>>,
    pub s_star: Option<Array1<f64>>,
    /// `c'x_star` against the original cost vector (artificial column
    /// excluded for phase-I wrapped solves).
    pub objective: Option<f64>,
    pub final_gap: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// Detail for `NumericalFailure`, with the failing iteration.
    pub failure: Option<String>,
    /// Every iterate of the run, when `keep_iterates` was set.
    pub iterates: Option<Vec<Array1<f64>>>,
}

fn validate_start(lp: &LinearProgram, x0: &Array1<f64>) -> Result<(), SolveError> {
    if x0.len() != lp.num_cols() {
        return Err(SolveError::InvalidStartingPoint(format!(
            "x0 has {} entries, problem has {} columns",
            x0.len(),
            lp.num_cols()
        )));
    }
    if !x0.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return Err(SolveError::InvalidStartingPoint(
            "x0 must be strictly positive and finite".into(),
        ));
    }
    let b_norm = lp.b.dot(&lp.b).sqrt();
    let resid = lp.primal_residual(x0);
    if resid > 1e-8 * (1.0 + b_norm) {
        return Err(SolveError::InvalidStartingPoint(format!(
            "||a x0 - b|| = {resid:.3e} too large"
        )));
    }
    Ok(())
}

/// Solve the LP. Without a starting point, a big-M phase-I augmentation is
/// applied automatically and the artificial column is stripped from the
/// reported solution; a run ending optimal with a still-large artificial
/// value is reclassified as `Infeasible`.
pub fn solve(
    lp: &LinearProgram,
    x0: Option<&Array1<f64>>,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolveError> {
    config.validate()?;
    match x0 {
        Some(x0) => {
            validate_start(lp, x0)?;
            Ok(run_loop(lp, x0.clone(), config))
        }
        None => {
            let ph = phase1(lp);
            let mut outcome = run_loop(&ph.augmented, ph.x0, config);
            if let Some(artificial) = ph.artificial_index {
                classify_phase1(&mut outcome, artificial, lp);
            }
            Ok(outcome)
        }
    }
}

fn strip_index(v: &Array1<f64>, index: usize) -> Array1<f64> {
    let vals: Vec<f64> = v
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, &x)| x)
        .collect();
    Array1::from(vals)
}

fn classify_phase1(outcome: &mut SolveOutcome, artificial: usize, lp: &LinearProgram) {
    let infeasible = match (&outcome.status, &outcome.x_star) {
        (SolveStatus::Optimal, Some(x)) => {
            let x_inf = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            x[artificial] > 1e-6 * (1.0 + x_inf)
        }
        _ => false,
    };
    if infeasible {
        outcome.status = SolveStatus::Infeasible;
        outcome.x_star = None;
        outcome.y_star = None;
        outcome.s_star = None;
        outcome.objective = None;
        return;
    }
    if let Some(x) = &outcome.x_star {
        let stripped = strip_index(x, artificial);
        outcome.objective = Some(lp.c.dot(&stripped));
        outcome.x_star = Some(stripped);
    }
    if let Some(s) = &outcome.s_star {
        outcome.s_star = Some(strip_index(s, artificial));
    }
}

fn run_loop(lp: &LinearProgram, x0: Array1<f64>, config: &SolverConfig) -> SolveOutcome {
    let n = lp.num_cols();
    let aafs = config.algorithm == Algorithm::Aafs;
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut kept: Vec<Array1<f64>> = Vec::new();
    let mut window = ShanksWindow::new(config.shanks_guard_tau);

    let est0 = match dual_estimates(&lp.a, &x0, &lp.c) {
        Ok(est) => est,
        Err(e) => {
            return SolveOutcome {
                status: SolveStatus::NumericalFailure,
                x_star: None,
                y_star: None,
                s_star: None,
                objective: None,
                final_gap: f64::NAN,
                iterations: 0,
                trace,
                failure: Some(format!("iteration 0: {e}")),
                iterates: config.keep_iterates.then_some(kept),
            }
        }
    };
    let mut state = IterateState::at(0, x0, Array1::zeros(n), est0, &lp.c);

    loop {
        if aafs {
            window.push(&state.x);
        }
        if config.keep_iterates {
            kept.push(state.x.clone());
        }

        let beta_eff = match momentum(&state, config.beta) {
            Some((z, scale)) => {
                state.z = z;
                scale
            }
            None => {
                state.z = state.x.clone();
                0.0
            }
        };

        let mut row = TraceRecord {
            k: state.k,
            obj: state.obj,
            gap: state.gap,
            shanks_gap: aafs.then(|| {
                window
                    .transform()
                    .map_or(state.gap, |b| b.dot(&state.est.s))
            }),
            primal_residual: lp.primal_residual(&state.x),
            min_x: state.x.iter().copied().fold(f64::INFINITY, f64::min),
            min_s: state.est.s.iter().copied().fold(f64::INFINITY, f64::min),
            lemma2_residual: lemma2_residual(&state.est, &lp.c),
            alpha_eff: None,
            beta_eff,
            ratio: None,
            rel_step_inf: None,
        };

        let decision = check_stop(&state, config, &window);
        match decision {
            StopDecision::Optimal { gap } => {
                trace.push(row);
                let x_star = if aafs {
                    window.transform().cloned().unwrap_or_else(|| state.x.clone())
                } else {
                    state.x.clone()
                };
                return SolveOutcome {
                    status: SolveStatus::Optimal,
                    objective: Some(lp.c.dot(&x_star)),
                    x_star: Some(x_star),
                    y_star: Some(state.est.y.clone()),
                    s_star: Some(state.est.s.clone()),
                    final_gap: gap,
                    iterations: state.k,
                    trace,
                    failure: None,
                    iterates: config.keep_iterates.then_some(kept),
                };
            }
            StopDecision::Unbounded => {
                trace.push(row);
                return SolveOutcome {
                    status: SolveStatus::Unbounded,
                    x_star: None,
                    y_star: None,
                    s_star: None,
                    objective: None,
                    final_gap: stop_gap(&state, config, &window),
                    iterations: state.k,
                    trace,
                    failure: None,
                    iterates: config.keep_iterates.then_some(kept),
                };
            }
            StopDecision::Continue => {}
        }

        if state.k >= config.max_iter {
            trace.push(row);
            return SolveOutcome {
                status: SolveStatus::IterationLimit,
                x_star: Some(state.x.clone()),
                y_star: Some(state.est.y.clone()),
                s_star: Some(state.est.s.clone()),
                objective: Some(state.obj),
                final_gap: stop_gap(&state, config, &window),
                iterations: state.k,
                trace,
                failure: None,
                iterates: config.keep_iterates.then_some(kept),
            };
        }

        let theta = match config.norm_rule {
            NormRule::Gamma => linalg::gamma(&state.est.xs),
            NormRule::L2 => {
                let norm = state.est.xs.dot(&state.est.xs).sqrt();
                (norm > 0.0).then_some(norm)
            }
        };
        row.alpha_eff = theta.map(|t| config.alpha / t);

        match step(lp, &state, config) {
            Ok(next) => {
                row.rel_step_inf = Some(scaled_delta_inf(&state.x, &next.delta_x));
                trace.push(row);
                state = next;
            }
            Err(e) => {
                let k = state.k;
                trace.push(row);
                return SolveOutcome {
                    status: SolveStatus::NumericalFailure,
                    x_star: Some(state.x.clone()),
                    y_star: Some(state.est.y.clone()),
                    s_star: Some(state.est.s.clone()),
                    objective: Some(state.obj),
                    final_gap: stop_gap(&state, config, &window),
                    iterations: k,
                    trace,
                    failure: Some(format!("iteration {k}: {e}")),
                    iterates: config.keep_iterates.then_some(kept),
                };
            }
        }
    }
}
