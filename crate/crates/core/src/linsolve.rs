//! Exact dense linear solver over `Scalar` with nullspace reporting.
//!
//! Rank deficiency is not an error: the solver returns a particular solution
//! (free unknowns set to zero) together with a basis of the homogeneous
//! solution space. Inconsistency is the only failure mode.

use std::collections::BTreeMap;

use crate::error::AlgebraError;
use crate::scalar::{abs2_cmp, Backend, Scalar};

/// One linear equation: sparse coefficients over unknown indices, and a
/// right-hand side.
#[derive(Debug, Clone)]
pub struct LinearEquation {
    pub coeffs: Vec<(usize, Scalar)>,
    pub rhs: Scalar,
}

/// Particular solution plus homogeneous basis.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub particular: Vec<Scalar>,
    pub nullspace: Vec<Vec<Scalar>>,
    /// Indices of unknowns that were free (one per nullspace vector, aligned).
    pub free_unknowns: Vec<usize>,
}

/// Gaussian elimination with exact (or effectively-exact float) pivoting.
pub fn solve_linear(
    equations: &[LinearEquation],
    n_unknowns: usize,
    backend: Backend,
) -> Result<LinearSolution, AlgebraError> {
    let zero = Scalar::zero(backend);
    let one = Scalar::one(backend);
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(equations.len());
    for eq in equations {
        let mut row = vec![zero.clone(); n_unknowns + 1];
        for (j, c) in &eq.coeffs {
            if c.backend() != backend {
                return Err(AlgebraError::BackendMismatch(
                    backend.to_string(),
                    c.backend().to_string(),
                ));
            }
            row[*j] = row[*j].try_add(c)?;
        }
        row[n_unknowns] = eq.rhs.clone();
        rows.push(row);
    }

    let m = rows.len();
    let mut pivot_col_of_row: Vec<Option<usize>> = vec![None; m];
    let mut pivot_row_of_col: Vec<Option<usize>> = vec![None; n_unknowns];
    let mut rank = 0usize;

    for col in 0..n_unknowns {
        // Choose the pivot: largest magnitude among unused rows (stabilizes
        // the float backend; for the exact backend any nonzero entry works).
        let mut best: Option<usize> = None;
        for (r, row) in rows.iter().enumerate().skip(rank) {
            if row[col].is_effectively_zero() {
                continue;
            }
            best = match best {
                None => Some(r),
                Some(b) => {
                    if abs2_cmp(&row[col], &rows[b][col]) == std::cmp::Ordering::Greater {
                        Some(r)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let Some(prow) = best else { continue };
        rows.swap(rank, prow);
        let pinv = rows[rank][col].inv()?;
        for j in col..=n_unknowns {
            rows[rank][j] = rows[rank][j].try_mul(&pinv)?;
        }
        rows[rank][col] = one.clone();
        for r in 0..m {
            if r == rank || rows[r][col].is_zero() {
                continue;
            }
            let factor = rows[r][col].clone();
            for j in col..=n_unknowns {
                let delta = factor.try_mul(&rows[rank][j])?;
                rows[r][j] = rows[r][j].try_sub(&delta)?;
            }
            rows[r][col] = zero.clone();
        }
        pivot_col_of_row[rank] = Some(col);
        pivot_row_of_col[col] = Some(rank);
        rank += 1;
    }

    // Inconsistency: a row with all-zero coefficients but nonzero rhs.
    for row in rows.iter().skip(rank) {
        if !row[n_unknowns].is_effectively_zero() {
            return Err(AlgebraError::Infeasible);
        }
    }

    let mut particular = vec![zero.clone(); n_unknowns];
    for r in 0..rank {
        let col = pivot_col_of_row[r].expect("pivot recorded");
        particular[col] = rows[r][n_unknowns].clone();
    }

    let mut nullspace = Vec::new();
    let mut free_unknowns = Vec::new();
    for j in 0..n_unknowns {
        if pivot_row_of_col[j].is_some() {
            continue;
        }
        let mut vec_j = vec![zero.clone(); n_unknowns];
        vec_j[j] = one.clone();
        for r in 0..rank {
            let col = pivot_col_of_row[r].expect("pivot recorded");
            vec_j[col] = rows[r][j].neg();
        }
        nullspace.push(vec_j);
        free_unknowns.push(j);
    }

    Ok(LinearSolution { particular, nullspace, free_unknowns })
}

/// Convenience builder for systems with string-named unknowns.
#[derive(Debug, Default)]
pub struct NamedSystem {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    equations: Vec<LinearEquation>,
}

impl NamedSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unknown(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn equation(&mut self, coeffs: Vec<(usize, Scalar)>, rhs: Scalar) {
        self.equations.push(LinearEquation { coeffs, rhs });
    }

    pub fn solve(&self, backend: Backend) -> Result<BTreeMap<String, Scalar>, AlgebraError> {
        let sol = solve_linear(&self.equations, self.names.len(), backend)?;
        Ok(self
            .names
            .iter()
            .cloned()
            .zip(sol.particular)
            .collect())
    }

    pub fn solve_full(&self, backend: Backend) -> Result<LinearSolution, AlgebraError> {
        solve_linear(&self.equations, self.names.len(), backend)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}
