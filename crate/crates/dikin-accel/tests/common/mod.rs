//! Shared test support: a brute-force vertex-enumeration oracle that is
//! independent of the solver's normal-equations path, plus fixtures and an
//! invariant checker applied to solver traces.

use dikin_accel::diagnostics::TraceRecord;
use dikin_accel::model::LinearProgram;
use dikin_accel::solver::{solve, SolveOutcome, SolverConfig};
use ndarray::{Array1, Array2};

#[derive(Clone, Debug, PartialEq)]
pub enum OracleResult {
    Infeasible,
    Unbounded,
    Optimal { objective: f64 },
}

/// Gaussian elimination with partial pivoting; `None` for (near) singular
/// systems. Deliberately not the solver's Cholesky path.
fn gauss_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut rhs = b.clone();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                m[(i, col)]
                    .abs()
                    .partial_cmp(&m[(j, col)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[(pivot_row, col)].abs() <= 1e-11 * scale {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot_row, j)];
                m[(pivot_row, j)] = tmp;
            }
            rhs.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let f = m[(row, col)] / m[(col, col)];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[(row, j)] -= f * m[(col, j)];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in row + 1..n {
            acc -= m[(row, j)] * x[j];
        }
        x[row] = acc / m[(row, row)];
    }
    Some(x)
}

/// Visit every size-k subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // rightmost position that can still advance
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn gather_columns(a: &Array2<f64>, cols: &[usize]) -> Array2<f64> {
    let m = a.nrows();
    let mut out = Array2::zeros((m, cols.len()));
    for (jj, &j) in cols.iter().enumerate() {
        for i in 0..m {
            out[(i, jj)] = a[(i, j)];
        }
    }
    out
}

/// Brute-force oracle for small standard-form LPs.
///
/// Enumerates all basic solutions for the best vertex and, separately, all
/// basic solutions of `{a d = 0, e'd = 1, d >= 0}` for an unboundedness
/// certificate (`c'd < 0`). Exponential in `n choose m`; fine up to roughly
/// `n = 20`.
pub fn vertex_oracle(a: &Array2<f64>, b: &Array1<f64>, c: &Array1<f64>) -> OracleResult {
    let (m, n) = a.dim();
    let b_scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut best: Option<f64> = None;
    for_each_subset(n, m, |cols| {
        let basis = gather_columns(a, cols);
        if let Some(xb) = gauss_solve(&basis, b) {
            let x_scale = 1.0 + xb.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let resid = (&basis.dot(&xb) - b)
                .iter()
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
            if resid > 1e-8 * b_scale {
                return;
            }
            if xb.iter().all(|&v| v >= -1e-9 * x_scale) {
                let obj: f64 = cols.iter().zip(xb.iter()).map(|(&j, &v)| c[j] * v).sum();
                best = Some(best.map_or(obj, |cur: f64| cur.min(obj)));
            }
        }
    });
    let Some(best) = best else {
        return OracleResult::Infeasible;
    };

    // ray test on the normalized recession cone
    let mut ext = Array2::zeros((m + 1, n));
    for i in 0..m {
        for j in 0..n {
            ext[(i, j)] = a[(i, j)];
        }
    }
    for j in 0..n {
        ext[(m, j)] = 1.0;
    }
    let mut rhs = Array1::zeros(m + 1);
    rhs[m] = 1.0;
    let c_scale = 1.0 + c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut unbounded = false;
    for_each_subset(n, m + 1, |cols| {
        if unbounded {
            return;
        }
        let basis = gather_columns(&ext, cols);
        if let Some(db) = gauss_solve(&basis, &rhs) {
            let resid = (&basis.dot(&db) - &rhs)
                .iter()
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
            if resid > 1e-8 {
                return;
            }
            if db.iter().all(|&v| v >= -1e-9) {
                let slope: f64 = cols.iter().zip(db.iter()).map(|(&j, &v)| c[j] * v).sum();
                if slope < -1e-7 * c_scale {
                    unbounded = true;
                }
            }
        }
    });
    if unbounded {
        OracleResult::Unbounded
    } else {
        OracleResult::Optimal { objective: best }
    }
}

/// Invariant suite applied to a finished run (the acceptance criteria pin
/// these bounds). The two-sided per-step bound is checked separately since
/// it only provably holds for the l2 normalization.
pub struct InvariantReport {
    pub worst_primal_residual: f64,
    pub min_x: f64,
    pub worst_descent_violation: f64,
    pub worst_lemma2: f64,
    pub worst_rel_step: f64,
}

pub fn invariant_report(lp: &LinearProgram, trace: &[TraceRecord]) -> InvariantReport {
    let b_norm = lp.b.dot(&lp.b).sqrt();
    let mut report = InvariantReport {
        worst_primal_residual: 0.0,
        min_x: f64::INFINITY,
        worst_descent_violation: f64::NEG_INFINITY,
        worst_lemma2: 0.0,
        worst_rel_step: 0.0,
    };
    for row in trace {
        report.worst_primal_residual = report
            .worst_primal_residual
            .max(row.primal_residual / (1.0 + b_norm));
        report.min_x = report.min_x.min(row.min_x);
        report.worst_lemma2 = report.worst_lemma2.max(row.lemma2_residual);
        if let Some(r) = row.rel_step_inf {
            report.worst_rel_step = report.worst_rel_step.max(r);
        }
    }
    for pair in trace.windows(2) {
        let allowed = 1e-10 * (1.0 + pair[0].obj.abs());
        report.worst_descent_violation = report
            .worst_descent_violation
            .max(pair[1].obj - pair[0].obj - allowed);
    }
    report
}

/// Assert the four norm-rule-independent invariants of the suite.
pub fn assert_core_invariants(lp: &LinearProgram, trace: &[TraceRecord], label: &str) {
    let rep = invariant_report(lp, trace);
    assert!(
        rep.worst_primal_residual <= 1e-7,
        "{label}: primal residual {:.3e} exceeds 1e-7 (1 + ||b||)",
        rep.worst_primal_residual
    );
    assert!(rep.min_x > 0.0, "{label}: iterate left the positive orthant");
    assert!(
        rep.worst_descent_violation <= 0.0,
        "{label}: objective ascent of {:.3e} beyond tolerance",
        rep.worst_descent_violation
    );
    assert!(
        rep.worst_lemma2 < 1e-8,
        "{label}: projection-identity residual {:.3e} not < 1e-8",
        rep.worst_lemma2
    );
}

/// Run the solver and apply the norm-rule-independent invariant suite.
pub fn solve_checked(
    lp: &LinearProgram,
    x0: Option<&Array1<f64>>,
    config: &SolverConfig,
    label: &str,
) -> SolveOutcome {
    let outcome = solve(lp, x0, config).expect(label);
    assert_core_invariants(lp, &outcome.trace, label);
    outcome
}

pub fn micro_lp() -> (LinearProgram, Array1<f64>) {
    let lp = LinearProgram::with_default_names(
        ndarray::array![[1.0, 1.0]],
        ndarray::array![2.0],
        ndarray::array![1.0, 2.0],
    )
    .unwrap();
    (lp, ndarray::array![1.0, 1.0])
}

pub fn unbounded_lp() -> (LinearProgram, Array1<f64>) {
    let lp = LinearProgram::with_default_names(
        ndarray::array![[1.0, -1.0]],
        ndarray::array![0.0],
        ndarray::array![-1.0, -1.0],
    )
    .unwrap();
    (lp, ndarray::array![1.0, 1.0])
}

pub fn infeasible_lp() -> LinearProgram {
    LinearProgram::with_default_names(
        ndarray::array![[1.0, 1.0], [1.0, 1.0]],
        ndarray::array![1.0, 2.0],
        ndarray::array![1.0, 1.0],
    )
    .unwrap()
}

pub fn zero_slack_lp() -> (LinearProgram, Array1<f64>) {
    let lp = LinearProgram::with_default_names(
        ndarray::array![[1.0, 1.0]],
        ndarray::array![2.0],
        ndarray::array![1.0, 1.0],
    )
    .unwrap();
    (lp, ndarray::array![1.0, 1.0])
}

/// Criterion-2 instance family: m in 3..=6, n in 7..=12, seeded.
pub fn small_instance_dims(seed: u64) -> (usize, usize) {
    (3 + (seed % 4) as usize, 7 + (seed % 6) as usize)
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}
