//! LP problem representation, standard-form conversion, seeded random
//! instance generation, and big-M phase-I construction.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid random LP spec: {0}")]
    InvalidSpec(String),
    #[error("column '{name}': lower bound {lower} exceeds upper bound {upper}")]
    InfeasibleBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
}

/// A linear program in standard equality form:
/// minimize `c'x` subject to `a x = b`, `x >= 0`.
///
/// `a` is dense `m x n`. Full row rank is assumed but only detected lazily,
/// when a normal-equations factorization fails.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub c: Array1<f64>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl LinearProgram {
    pub fn new(
        a: Array2<f64>,
        b: Array1<f64>,
        c: Array1<f64>,
        col_names: Vec<String>,
        row_names: Vec<String>,
    ) -> Result<Self, ModelError> {
        let (m, n) = a.dim();
        if b.len() != m || c.len() != n || col_names.len() != n || row_names.len() != m {
            return Err(ModelError::DimensionMismatch(format!(
                "a is {m}x{n}, b has {}, c has {}, {} column names, {} row names",
                b.len(),
                c.len(),
                col_names.len(),
                row_names.len()
            )));
        }
        if m == 0 || n == 0 {
            return Err(ModelError::DimensionMismatch(
                "problem must have at least one row and one column".into(),
            ));
        }
        Ok(Self {
            a,
            b,
            c,
            col_names,
            row_names,
        })
    }

    /// Construct with generated `x1..xn` / `r1..rm` names.
    pub fn with_default_names(
        a: Array2<f64>,
        b: Array1<f64>,
        c: Array1<f64>,
    ) -> Result<Self, ModelError> {
        let (m, n) = a.dim();
        let col_names = (1..=n).map(|j| format!("x{j}")).collect();
        let row_names = (1..=m).map(|i| format!("r{i}")).collect();
        Self::new(a, b, c, col_names, row_names)
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn objective(&self, x: &Array1<f64>) -> f64 {
        self.c.dot(x)
    }

    /// `||a x - b||_2`
    pub fn primal_residual(&self, x: &Array1<f64>) -> f64 {
        let r = &self.a.dot(x) - &self.b;
        r.dot(&r).sqrt()
    }
}

/// Row sense of a general-form constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// Per-column bounds; infinities encode one-sided or free columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnBounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ColumnBounds {
    fn default() -> Self {
        // MPS convention
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }
}

/// Pre-standardization LP with row senses and column bounds, as produced by
/// the MPS reader.
#[derive(Clone, Debug)]
pub struct GeneralLp {
    pub a: Array2<f64>,
    pub rhs: Array1<f64>,
    pub cost: Array1<f64>,
    pub senses: Vec<RowSense>,
    pub bounds: Vec<ColumnBounds>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl GeneralLp {
    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols()
    }

    fn check_dims(&self) -> Result<(), ModelError> {
        let (m, n) = self.a.dim();
        if self.rhs.len() != m
            || self.senses.len() != m
            || self.row_names.len() != m
            || self.cost.len() != n
            || self.bounds.len() != n
            || self.col_names.len() != n
        {
            return Err(ModelError::DimensionMismatch(
                "general LP fields disagree on m or n".into(),
            ));
        }
        Ok(())
    }
}

/// How one original column is recovered from a standard-form solution.
#[derive(Clone, Copy, Debug)]
pub enum VarRecovery {
    /// `x_orig = x_std[col] + shift`
    Shifted { col: usize, shift: f64 },
    /// `x_orig = x_std[pos] - x_std[neg]` (free variable split)
    Split { pos: usize, neg: usize },
}

/// Maps standard-form solutions back to the original variable space.
#[derive(Clone, Debug)]
pub struct ColumnMap {
    entries: Vec<VarRecovery>,
    std_cols: usize,
    /// Constant added to the standard-form objective by bound shifting.
    objective_offset: f64,
}

impl ColumnMap {
    pub fn num_original_cols(&self) -> usize {
        self.entries.len()
    }

    pub fn num_standard_cols(&self) -> usize {
        self.std_cols
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn recover(&self, x_std: &Array1<f64>) -> Array1<f64> {
        assert_eq!(x_std.len(), self.std_cols, "solution has wrong length");
        let vals: Vec<f64> = self
            .entries
            .iter()
            .map(|e| match *e {
                VarRecovery::Shifted { col, shift } => x_std[col] + shift,
                VarRecovery::Split { pos, neg } => x_std[pos] - x_std[neg],
            })
            .collect();
        Array1::from(vals)
    }
}

/// Convert a general-form LP to standard equality form.
///
/// Inequality rows get slack (`<=`, coefficient +1) or surplus (`>=`,
/// coefficient -1) columns. Finite lower bounds are shifted to zero, finite
/// upper bounds become extra rows with their own slack, and free columns are
/// split into positive and negative parts.
pub fn standardize(glp: &GeneralLp) -> Result<(LinearProgram, ColumnMap), ModelError> {
    glp.check_dims()?;
    let (m, n) = glp.a.dim();

    for (j, bd) in glp.bounds.iter().enumerate() {
        if bd.lower > bd.upper {
            return Err(ModelError::InfeasibleBounds {
                name: glp.col_names[j].clone(),
                lower: bd.lower,
                upper: bd.upper,
            });
        }
    }

    // Column layout: transformed structural columns first (splits are
    // adjacent), then row slack/surplus columns, then upper-bound slacks.
    let mut entries = Vec::with_capacity(n);
    let mut col_names = Vec::new();
    let mut cost = Vec::new();
    // (original column, shifted upper bound) pairs needing an extra row
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    let mut objective_offset = 0.0;

    for j in 0..n {
        let bd = glp.bounds[j];
        let name = &glp.col_names[j];
        if bd.lower.is_finite() {
            let col = col_names.len();
            entries.push(VarRecovery::Shifted {
                col,
                shift: bd.lower,
            });
            col_names.push(name.clone());
            cost.push(glp.cost[j]);
            objective_offset += glp.cost[j] * bd.lower;
            if bd.upper.is_finite() {
                upper_rows.push((j, bd.upper - bd.lower));
            }
        } else {
            let pos = col_names.len();
            entries.push(VarRecovery::Split { pos, neg: pos + 1 });
            col_names.push(format!("{name}_pos"));
            col_names.push(format!("{name}_neg"));
            cost.push(glp.cost[j]);
            cost.push(-glp.cost[j]);
            if bd.upper.is_finite() {
                // p - q <= u as an extra row below
                upper_rows.push((j, bd.upper));
            }
        }
    }

    let n_struct = col_names.len();
    let mut row_slacks = Vec::new();
    for (i, sense) in glp.senses.iter().enumerate() {
        match sense {
            RowSense::Eq => {}
            RowSense::Le => row_slacks.push((i, 1.0)),
            RowSense::Ge => row_slacks.push((i, -1.0)),
        }
    }

    let m_std = m + upper_rows.len();
    let n_std = n_struct + row_slacks.len() + upper_rows.len();
    let mut a = Array2::zeros((m_std, n_std));
    let mut b = Array1::zeros(m_std);
    let mut row_names = glp.row_names.clone();

    for i in 0..m {
        b[i] = glp.rhs[i];
        for j in 0..n {
            let v = glp.a[(i, j)];
            if v == 0.0 {
                continue;
            }
            match entries[j] {
                VarRecovery::Shifted { col, shift } => {
                    a[(i, col)] = v;
                    b[i] -= v * shift;
                }
                VarRecovery::Split { pos, neg } => {
                    a[(i, pos)] = v;
                    a[(i, neg)] = -v;
                }
            }
        }
    }
    for (k, &(row, coef)) in row_slacks.iter().enumerate() {
        let col = n_struct + k;
        a[(row, col)] = coef;
        col_names.push(format!("s_{}", glp.row_names[row]));
        cost.push(0.0);
    }
    for (k, &(orig, ub)) in upper_rows.iter().enumerate() {
        let row = m + k;
        let slack = n_struct + row_slacks.len() + k;
        match entries[orig] {
            VarRecovery::Shifted { col, .. } => a[(row, col)] = 1.0,
            VarRecovery::Split { pos, neg } => {
                a[(row, pos)] = 1.0;
                a[(row, neg)] = -1.0;
            }
        }
        a[(row, slack)] = 1.0;
        b[row] = ub;
        row_names.push(format!("ub_{}", glp.col_names[orig]));
        col_names.push(format!("s_ub_{}", glp.col_names[orig]));
        cost.push(0.0);
    }

    let lp = LinearProgram::new(a, b, Array1::from(cost), col_names, row_names)?;
    let map = ColumnMap {
        entries,
        std_cols: n_std,
        objective_offset,
    };
    Ok((lp, map))
}

/// Spec for a seeded random dense instance: `a` and `c` entries i.i.d.
/// Gaussian, `b` a convex combination of two images of strictly positive
/// vectors so that a strictly interior starting point is known.
#[derive(Clone, Copy, Debug)]
pub struct RandomLpSpec {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub convex_lambda: f64,
}

impl RandomLpSpec {
    pub fn new(m: usize, n: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            seed,
            mean: -9.0,
            variance: 9.0,
            convex_lambda: 0.5,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.m == 0 || self.n <= self.m {
            return Err(ModelError::InvalidSpec(format!(
                "need n > m >= 1, got m={} n={}",
                self.m, self.n
            )));
        }
        if !(self.variance > 0.0) {
            return Err(ModelError::InvalidSpec(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if !(0.0..=1.0).contains(&self.convex_lambda) {
            return Err(ModelError::InvalidSpec(format!(
                "convex_lambda must lie in [0,1], got {}",
                self.convex_lambda
            )));
        }
        Ok(())
    }
}

/// Generate a random dense LP together with a strictly interior feasible
/// point. Deterministic for a fixed seed.
pub fn random_dense_lp(spec: &RandomLpSpec) -> Result<(LinearProgram, Array1<f64>), ModelError> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(spec.mean, spec.variance.sqrt())
        .map_err(|e| ModelError::InvalidSpec(e.to_string()))?;

    let a_data: Vec<f64> = (0..m * n).map(|_| normal.sample(&mut rng)).collect();
    let a = Array2::from_shape_vec((m, n), a_data).expect("shape matches data");
    let c: Array1<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();

    // |N(0,1)| + 0.1 keeps both vectors strictly positive, so any convex
    // combination is a strictly interior point of the generated problem.
    let mut positive = |_: usize| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v.abs() + 0.1
    };
    let x1: Array1<f64> = (0..n).map(&mut positive).collect();
    let x2: Array1<f64> = (0..n).map(&mut positive).collect();

    let lambda = spec.convex_lambda;
    let b = lambda * &a.dot(&x1) + (1.0 - lambda) * &a.dot(&x2);
    let x0 = lambda * &x1 + (1.0 - lambda) * &x2;

    let lp = LinearProgram::with_default_names(a, b, c)?;
    Ok((lp, x0))
}

/// Big-M augmentation that manufactures a strictly interior starting point.
///
/// The artificial column is `b - a e`, so `x0 = (e, 1)` satisfies the
/// augmented constraints exactly. When `b - a e` is identically zero the
/// all-ones vector is already feasible and no artificial column is added.
#[derive(Clone, Debug)]
pub struct Phase1Problem {
    pub augmented: LinearProgram,
    pub artificial_index: Option<usize>,
    pub big_m: f64,
    pub x0: Array1<f64>,
}

pub fn phase1(lp: &LinearProgram) -> Phase1Problem {
    let (m, n) = lp.a.dim();
    let e = Array1::ones(n);
    let r = &lp.b - &lp.a.dot(&e);
    let c_inf = lp.c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let big_m = 1e6 * c_inf.max(1.0);

    if r.iter().all(|&v| v == 0.0) {
        return Phase1Problem {
            augmented: lp.clone(),
            artificial_index: None,
            big_m,
            x0: e,
        };
    }

    let mut a = Array2::zeros((m, n + 1));
    a.slice_mut(ndarray::s![.., ..n]).assign(&lp.a);
    a.slice_mut(ndarray::s![.., n]).assign(&r);
    let mut c = Array1::zeros(n + 1);
    c.slice_mut(ndarray::s![..n]).assign(&lp.c);
    c[n] = big_m;
    let mut col_names = lp.col_names.clone();
    col_names.push("artificial".into());

    let mut x0 = Array1::ones(n + 1);
    x0[n] = 1.0;

    Phase1Problem {
        augmented: LinearProgram::new(a, lp.b.clone(), c, col_names, lp.row_names.clone())
            .expect("augmented dimensions are consistent"),
        artificial_index: Some(n),
        big_m,
        x0,
    }
}
