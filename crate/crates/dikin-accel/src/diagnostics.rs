//! Per-iteration measurements and post-hoc verification reports.

use ndarray::Array1;
use thiserror::Error;

use crate::linalg::DualEstimate;
use crate::model::LinearProgram;
use crate::solver::{SolveOutcome, SolveStatus};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("no coordinate of the reference solution is (near) zero")]
    EmptyN,
    #[error("objective gap is not positive")]
    NonpositiveGap,
    #[error("outcome is not Optimal or lacks solution vectors")]
    NotOptimal,
}

/// One row of the per-iteration trace.
///
/// `alpha_eff` and `beta_eff` are the effective step scales actually applied
/// when moving from this iterate to the next (`alpha / theta_k` and
/// `beta / ||X^-1 delta||_inf`), `rel_step_inf` is `||X_k^-1 (x_{k+1} -
/// x_k)||_inf`. Fields describing the outgoing step are absent on the
/// terminal row; `shanks_gap` is populated only by the transform-accelerated
/// algorithm; `ratio` is filled post hoc once a reference optimum is known.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub k: usize,
    pub obj: f64,
    pub gap: f64,
    pub shanks_gap: Option<f64>,
    pub primal_residual: f64,
    pub min_x: f64,
    pub min_s: f64,
    pub lemma2_residual: f64,
    pub alpha_eff: Option<f64>,
    pub beta_eff: f64,
    pub ratio: Option<f64>,
    pub rel_step_inf: Option<f64>,
}

/// Relative residual of the projection identity `c'X^2 s = ||X s||^2`,
/// i.e. `|c'X^2 s - ||Xs||^2| / (1 + ||Xs||^2)`. Zero (to rounding) for any
/// true normal-equations solve; strictly positive for inconsistent duals.
pub fn lemma2_residual(est: &DualEstimate, c: &Array1<f64>) -> f64 {
    let xs_sq = est.xs.dot(&est.xs);
    (c.dot(&est.x2s) - xs_sq).abs() / (1.0 + xs_sq)
}

/// The local potential `p log(c'x - c'x*) - sum_{j in N} log x_j`, where
/// `N` collects the (near) zero coordinates of `x_star`.
pub fn potential_fn(
    x: &Array1<f64>,
    x_star: &Array1<f64>,
    c: &Array1<f64>,
) -> Result<f64, DiagnosticsError> {
    let n_set = zero_set(x_star);
    if n_set.is_empty() {
        return Err(DiagnosticsError::EmptyN);
    }
    let gap = c.dot(x) - c.dot(x_star);
    if !(gap > 0.0) {
        return Err(DiagnosticsError::NonpositiveGap);
    }
    debug_assert!(x.iter().all(|&v| v > 0.0));
    let p = n_set.len() as f64;
    Ok(p * gap.ln() - n_set.iter().map(|&j| x[j].ln()).sum::<f64>())
}

/// Coordinates treated as zero in a reference solution. The exact-zero set
/// of the theory is unreachable in floating point, so a small absolute
/// threshold stands in.
pub fn zero_set(x_star: &Array1<f64>) -> Vec<usize> {
    x_star
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= 1e-8)
        .map(|(j, _)| j)
        .collect()
}

/// Potential-function values along a run.
#[derive(Clone, Debug)]
pub struct PotentialReport {
    pub values: Vec<f64>,
    pub n_set: Vec<usize>,
    pub p: usize,
}

impl PotentialReport {
    pub fn from_iterates(
        iterates: &[Array1<f64>],
        x_star: &Array1<f64>,
        c: &Array1<f64>,
    ) -> Result<Self, DiagnosticsError> {
        let n_set = zero_set(x_star);
        if n_set.is_empty() {
            return Err(DiagnosticsError::EmptyN);
        }
        let values = iterates
            .iter()
            .map(|x| potential_fn(x, x_star, c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            values,
            p: n_set.len(),
            n_set,
        })
    }
}

/// KKT residuals of a reported optimum.
#[derive(Clone, Copy, Debug)]
pub struct KktReport {
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub min_s: f64,
    pub comp_slack: f64,
}

pub fn kkt_report(outcome: &SolveOutcome, lp: &LinearProgram) -> Result<KktReport, DiagnosticsError> {
    if outcome.status != SolveStatus::Optimal {
        return Err(DiagnosticsError::NotOptimal);
    }
    let (Some(x), Some(y), Some(s)) = (&outcome.x_star, &outcome.y_star, &outcome.s_star) else {
        return Err(DiagnosticsError::NotOptimal);
    };
    let dual = &lp.a.t().dot(y) + s - &lp.c;
    Ok(KktReport {
        primal_infeas: lp.primal_residual(x),
        dual_infeas: dual.dot(&dual).sqrt(),
        min_s: s.iter().copied().fold(f64::INFINITY, f64::min),
        comp_slack: x.dot(s).abs(),
    })
}

/// Fill the `ratio` column from a reference optimum: `ratio_k =
/// (obj_{k+1} - v*) / (obj_k - v*)`, left empty where the denominator is
/// not positive.
pub fn fill_ratios(trace: &mut [TraceRecord], v_star: f64) {
    for k in 0..trace.len() {
        trace[k].ratio = if k + 1 < trace.len() {
            let den = trace[k].obj - v_star;
            let num = trace[k + 1].obj - v_star;
            (den > 0.0).then(|| num / den)
        } else {
            None
        };
    }
}
