//! Dense normal-equations kernel: factor `a X^2 a'`, produce dual estimates
//! and the ellipsoidal-subproblem step direction.

use ndarray::{Array1, Array2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    /// Rank-deficient `a`, or an iterate touching the boundary.
    #[error("matrix not positive definite at pivot {pivot} (ridge {ridge:.3e} already applied)")]
    NotPositiveDefinite { pivot: usize, ridge: f64 },
    #[error("gamma normalization undefined: scaled slack has no positive entry")]
    GammaUndefined,
    #[error("scaled slack is zero; the current iterate is already optimal")]
    ZeroScaledSlack,
}

/// Which scalar normalizes the step direction.
///
/// `Gamma` is the long-step rule (largest positive entry of `X s`); `L2`
/// divides by `||X s||_2` instead.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NormRule {
    #[default]
    Gamma,
    L2,
}

/// Largest positive entry of `u`, if any.
pub fn gamma(u: &Array1<f64>) -> Option<f64> {
    u.iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

/// Cholesky factor of a symmetric positive definite matrix, with a one-shot
/// diagonal ridge retry for borderline cases.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    l: Array2<f64>,
    ridge_used: f64,
}

impl SpdFactor {
    pub fn dimension(&self) -> usize {
        self.l.nrows()
    }

    pub fn ridge_used(&self) -> f64 {
        self.ridge_used
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.l
    }

    /// Solve `(L L') x = rhs` by forward and back substitution.
    pub fn solve(&self, rhs: &Array1<f64>) -> Array1<f64> {
        let n = self.dimension();
        assert_eq!(rhs.len(), n);
        let l = &self.l;
        let mut y = rhs.clone();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= l[(i, k)] * y[k];
            }
            y[i] = acc / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in i + 1..n {
                acc -= l[(k, i)] * y[k];
            }
            y[i] = acc / l[(i, i)];
        }
        y
    }
}

fn try_cholesky(m: &Array2<f64>, ridge: f64) -> Result<Array2<f64>, usize> {
    let n = m.nrows();
    let mut l = Array2::zeros((n, n));
    for j in 0..n {
        let mut d = m[(j, j)] + ridge;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let diag = d.sqrt();
        l[(j, j)] = diag;
        for i in j + 1..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / diag;
        }
    }
    Ok(l)
}

/// Factor a symmetric positive definite matrix. Only the lower triangle of
/// `m` is read. The first attempt uses no regularization; on failure one
/// retry with ridge `1e-10 trace(m)/n` is made before giving up.
pub fn cholesky_spd(m: &Array2<f64>) -> Result<SpdFactor, LinalgError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    match try_cholesky(m, 0.0) {
        Ok(l) => Ok(SpdFactor { l, ridge_used: 0.0 }),
        Err(_) => {
            let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
            let ridge = 1e-10 * trace / n as f64;
            if !(ridge > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { pivot: 0, ridge });
            }
            match try_cholesky(m, ridge) {
                Ok(l) => Ok(SpdFactor {
                    l,
                    ridge_used: ridge,
                }),
                Err(pivot) => Err(LinalgError::NotPositiveDefinite { pivot, ridge }),
            }
        }
    }
}

/// Dual quantities at a strictly positive iterate `x`:
/// `y = (a X^2 a')^{-1} a X^2 c`, `s = c - a'y`, plus the scaled slack
/// `xs = X s` and the direction numerator `x2s = X^2 s`.
#[derive(Clone, Debug)]
pub struct DualEstimate {
    pub y: Array1<f64>,
    pub s: Array1<f64>,
    pub xs: Array1<f64>,
    pub x2s: Array1<f64>,
}

impl DualEstimate {
    /// Duality gap `e'X s = x's`.
    pub fn gap(&self) -> f64 {
        self.xs.sum()
    }
}

pub fn dual_estimates(
    a: &Array2<f64>,
    x: &Array1<f64>,
    c: &Array1<f64>,
) -> Result<DualEstimate, LinalgError> {
    let (m, n) = a.dim();
    assert_eq!(x.len(), n);
    assert_eq!(c.len(), n);
    debug_assert!(x.iter().all(|&v| v > 0.0), "iterate must stay positive");

    // a X, so that a X^2 a' = (aX)(aX)' stays symmetric by construction
    let mut ax = a.clone();
    for j in 0..n {
        let xj = x[j];
        for i in 0..m {
            ax[(i, j)] *= xj;
        }
    }
    let w = ax.dot(&ax.t());
    let xc: Array1<f64> = x * c;
    let rhs = ax.dot(&xc);

    let factor = cholesky_spd(&w)?;
    let mut y = factor.solve(&rhs);
    // One residual-correction pass. The step direction divides by the
    // scaled-slack normalization, which vanishes with the duality gap, so
    // the solve residual of these equations is what ends up amplified into
    // constraint drift late in a run; one pass keeps it near round-off.
    let resid = &rhs - &w.dot(&y);
    y += &factor.solve(&resid);
    let s = c - &a.t().dot(&y);
    let xs = x * &s;
    let x2s = x * &xs;
    Ok(DualEstimate { y, s, xs, x2s })
}

/// Closed-form solution of the ellipsoidal approximating subproblem:
/// `d = -alpha X^2 s / theta` with `theta` given by the norm rule.
pub fn eap_direction(
    est: &DualEstimate,
    alpha: f64,
    rule: NormRule,
) -> Result<Array1<f64>, LinalgError> {
    let theta = match rule {
        NormRule::Gamma => gamma(&est.xs).ok_or(LinalgError::GammaUndefined)?,
        NormRule::L2 => {
            let norm = est.xs.dot(&est.xs).sqrt();
            if norm == 0.0 {
                return Err(LinalgError::ZeroScaledSlack);
            }
            norm
        }
    };
    Ok(&est.x2s * (-alpha / theta))
}
