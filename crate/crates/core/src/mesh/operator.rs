//! The assembled interior operator and the linear solvers built on it.

use std::sync::Arc;

use super::krylov::{bicgstab, pcg, KrylovStats};
use super::multigrid::{Multigrid, MultigridPlan};
use super::sparse::Csr;
use crate::{Error, Result};

/// Relative asymmetry below which an operator is treated as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Unknown count above which [`Preconditioner::Auto`] switches to multigrid.
const MULTIGRID_THRESHOLD: usize = 4096;

/// The discrete `−Δ` restricted to interior unknowns.
///
/// The matrix is stored pre-multiplied by positive row weights `W` that make
/// it symmetric whenever the stencil admits such a scaling (uniform and
/// graded polar meshes, regular Cartesian meshes). [`LinearOperator::apply`]
/// always returns the unscaled product `A x`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    scaled: Csr,
    weight: Arc<Vec<f64>>,
    diag_pos: Arc<Vec<usize>>,
    symmetric: bool,
    tridiagonal: bool,
    plan: Option<Arc<MultigridPlan>>,
}

impl LinearOperator {
    /// Wraps `W·A`. Fails if some row has no diagonal entry.
    pub fn new(scaled: Csr, weight: Vec<f64>, plan: Option<Arc<MultigridPlan>>) -> Result<Self> {
        if scaled.nrows != scaled.ncols || weight.len() != scaled.nrows {
            return Err(Error::invalid("operator must be square with one weight per row"));
        }
        let diag_pos = scaled.diagonal_positions();
        if diag_pos.contains(&usize::MAX) {
            return Err(Error::invalid("operator row without diagonal entry"));
        }
        let symmetric = scaled.asymmetry() <= SYMMETRY_TOL;
        let tridiagonal = (0..scaled.nrows).all(|i| scaled.row(i).all(|(j, _)| j + 1 >= i && j <= i + 1));
        Ok(Self {
            scaled,
            weight: Arc::new(weight),
            diag_pos: Arc::new(diag_pos),
            symmetric,
            tridiagonal,
            plan,
        })
    }

    /// Unit-weight operator from a plain matrix.
    pub fn from_matrix(a: Csr) -> Result<Self> {
        let n = a.nrows;
        Self::new(a, vec![1.0; n], None)
    }

    pub fn dim(&self) -> usize {
        self.scaled.nrows
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// The symmetrized matrix `W·A`.
    pub fn scaled_matrix(&self) -> &Csr {
        &self.scaled
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.scaled.matvec(x, y);
        for (yi, w) in y.iter_mut().zip(self.weight.iter()) {
            *yi /= w;
        }
    }

    /// Diagonal entry `a_ii` of the unscaled operator.
    pub fn diagonal(&self, i: usize) -> f64 {
        self.scaled.val[self.diag_pos[i]] / self.weight[i]
    }

    /// `A + diag(d)`.
    pub fn with_diagonal_shift(&self, d: &[f64]) -> LinearOperator {
        assert_eq!(d.len(), self.dim());
        let mut scaled = self.scaled.clone();
        for (i, di) in d.iter().enumerate() {
            scaled.val[self.diag_pos[i]] += self.weight[i] * di;
        }
        LinearOperator {
            scaled,
            weight: Arc::clone(&self.weight),
            diag_pos: Arc::clone(&self.diag_pos),
            symmetric: self.symmetric,
            tridiagonal: self.tridiagonal,
            plan: self.plan.clone(),
        }
    }

    /// Checks positive diagonal, nonpositive off-diagonals and nonnegative
    /// row sums (up to `1e-10` of the diagonal).
    pub fn check_m_matrix(&self) -> Result<()> {
        for i in 0..self.dim() {
            let mut diag = 0.0;
            let mut sum = 0.0;
            for (j, v) in self.scaled.row(i) {
                sum += v;
                if i == j {
                    diag = v;
                } else if v > 0.0 {
                    return Err(Error::InvariantViolation(format!(
                        "positive off-diagonal entry in row {i}"
                    )));
                }
            }
            if !(diag > 0.0) {
                return Err(Error::InvariantViolation(format!("nonpositive diagonal in row {i}")));
            }
            if sum < -1e-10 * diag {
                return Err(Error::InvariantViolation(format!("negative row sum in row {i}")));
            }
        }
        Ok(())
    }
}

/// Preconditioner choice for [`solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    Jacobi,
    Multigrid,
    /// Multigrid for large operators that carry a grid hierarchy, Jacobi
    /// otherwise.
    #[default]
    Auto,
}

/// Options for [`solve_with`].
#[derive(Debug, Clone, Copy)]
pub struct LinearSolveOptions {
    pub tol: f64,
    /// Iteration cap; `None` means `10·dim`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for LinearSolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::Auto,
        }
    }
}

/// Solves `A x = rhs` by Jacobi-preconditioned conjugate gradients on the
/// symmetrized system (BiCGSTAB if the operator is not symmetric).
pub fn solve_linear(a: &LinearOperator, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let opts = LinearSolveOptions {
        tol,
        max_iter: None,
        preconditioner: Preconditioner::Jacobi,
    };
    let mut x = vec![0.0; a.dim()];
    solve_with(a, rhs, &mut x, &opts)?;
    Ok(x)
}

/// Solves `A x = rhs` starting from the contents of `x`.
pub fn solve_with(
    a: &LinearOperator,
    rhs: &[f64],
    x: &mut [f64],
    opts: &LinearSolveOptions,
) -> Result<KrylovStats> {
    if !(opts.tol > 0.0 && opts.tol <= 1e-6) {
        return Err(Error::invalid(format!("linear tolerance {} outside (0, 1e-6]", opts.tol)));
    }
    if rhs.len() != a.dim() || x.len() != a.dim() {
        return Err(Error::invalid("right-hand side length differs from operator dimension"));
    }
    let n = a.dim();
    let b: Vec<f64> = rhs.iter().zip(a.weight.iter()).map(|(r, w)| r * w).collect();
    if a.tridiagonal {
        return thomas(&a.scaled, &b, x);
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let m = &a.scaled;
    let apply = |v: &[f64], y: &mut [f64]| m.matvec(v, y);
    let use_mg = match opts.preconditioner {
        Preconditioner::Jacobi => false,
        Preconditioner::Multigrid => a.plan.is_some(),
        Preconditioner::Auto => a.plan.is_some() && n > MULTIGRID_THRESHOLD,
    };
    if use_mg {
        let plan = a.plan.as_ref().expect("multigrid plan");
        let mg = Multigrid::new(plan, m);
        let pre = |r: &[f64], z: &mut [f64]| mg.apply(r, z);
        if a.symmetric {
            pcg(apply, pre, &b, x, opts.tol, max_iter)
        } else {
            bicgstab(apply, pre, &b, x, opts.tol, max_iter)
        }
    } else {
        let inv_diag: Vec<f64> = a.diag_pos.iter().map(|&p| 1.0 / m.val[p]).collect();
        let pre = |r: &[f64], z: &mut [f64]| {
            for i in 0..r.len() {
                z[i] = r[i] * inv_diag[i];
            }
        };
        if a.symmetric {
            pcg(apply, pre, &b, x, opts.tol, max_iter)
        } else {
            bicgstab(apply, pre, &b, x, opts.tol, max_iter)
        }
    }
}

/// Direct elimination for tridiagonal M-matrices (no pivoting needed).
fn thomas(m: &Csr, b: &[f64], x: &mut [f64]) -> Result<KrylovStats> {
    let n = b.len();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        for (j, v) in m.row(i) {
            if j + 1 == i {
                lower[i] = v;
            } else if j == i {
                diag[i] = v;
            } else {
                upper[i] = v;
            }
        }
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let denom = diag[i] - if i > 0 { lower[i] * c[i - 1] } else { 0.0 };
        if !(denom.abs() > 0.0) {
            return Err(Error::IllConditioned(format!("zero pivot in row {i}")));
        }
        c[i] = upper[i] / denom;
        d[i] = (b[i] - if i > 0 { lower[i] * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n).rev() {
        x[i] = d[i] - if i + 1 < n { c[i] * x[i + 1] } else { 0.0 };
    }
    let mut r = vec![0.0; n];
    m.matvec(x, &mut r);
    let num: f64 = r.iter().zip(b).map(|(ri, bi)| (ri - bi) * (ri - bi)).sum::<f64>().sqrt();
    let den = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    Ok(KrylovStats {
        iterations: 1,
        relative_residual: num / den,
    })
}
