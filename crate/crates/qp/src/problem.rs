//! Problem data for a convex QP in maximisation form.

use crate::SolveError;

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    /// `a'x <= b`
    Le,
    /// `a'x == b`
    Eq,
}

/// A single linear constraint `Σ a_j x_j (<= | ==) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Convex quadratic program
///
/// ```text
///     maximize    ½ x'Qx + q'x + constant
///     subject to  a_i'x <= b_i   (Sense::Le)
///                 a_i'x == b_i   (Sense::Eq)
///                 0 <= x <= u
/// ```
///
/// `Q` must be negative semidefinite. It is stored as lower-triangle
/// triplets `(i, j, v)` with `i >= j`; an off-diagonal triplet stands for
/// both `Q_ij` and `Q_ji`. Duplicate triplets are summed.
///
/// A `Le` row whose right-hand side is `+inf` is kept in the program but
/// never binds; its dual is reported as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvexQP {
    pub linear: Vec<f64>,
    pub quadratic: Vec<(usize, usize, f64)>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub constant: f64,
}

impl ConvexQP {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    /// Adds a variable with objective coefficient `linear` and upper bound
    /// `upper` (`f64::INFINITY` for none). Returns its index.
    pub fn add_var(&mut self, linear: f64, upper: f64) -> usize {
        self.linear.push(linear);
        self.upper.push(upper);
        self.linear.len() - 1
    }

    /// Adds `½ coef x_i x_j` (for `i == j`) or `coef x_i x_j` (for `i != j`)
    /// to the objective.
    pub fn add_quadratic(&mut self, i: usize, j: usize, coef: f64) {
        if i == j {
            self.quadratic.push((i, i, coef));
        } else {
            let (r, c) = if i > j { (i, j) } else { (j, i) };
            self.quadratic.push((r, c, coef));
        }
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.constraints.push(Constraint { terms, sense, rhs });
        self.constraints.len() - 1
    }

    /// Objective value at `x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().zip(x).map(|(c, v)| c * v).sum();
        self.constant + lin + 0.5 * self.quad_form(x)
    }

    /// `x'Qx`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.quadratic
            .iter()
            .map(|&(i, j, v)| if i == j { v * x[i] * x[i] } else { 2.0 * v * x[i] * x[j] })
            .sum()
    }

    /// Gradient `Qx + q`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.linear.clone();
        for &(i, j, v) in &self.quadratic {
            g[i] += v * x[j];
            if i != j {
                g[j] += v * x[i];
            }
        }
        g
    }

    /// True when the objective has no quadratic part.
    pub fn is_linear(&self) -> bool {
        self.quadratic.iter().all(|t| t.2 == 0.0)
    }

    pub(crate) fn check(&self) -> Result<(), SolveError> {
        let n = self.num_vars();
        if self.upper.len() != n {
            return Err(SolveError::Dimension(format!(
                "{} upper bounds for {} variables",
                self.upper.len(),
                n
            )));
        }
        for (k, &(i, j, v)) in self.quadratic.iter().enumerate() {
            if i >= n || j >= n {
                return Err(SolveError::Dimension(format!(
                    "quadratic triplet {k} refers to ({i}, {j}) with {n} variables"
                )));
            }
            if !v.is_finite() {
                return Err(SolveError::Data(format!("quadratic triplet {k} is not finite")));
            }
        }
        for (j, (&c, &u)) in self.linear.iter().zip(&self.upper).enumerate() {
            if !c.is_finite() {
                return Err(SolveError::Data(format!("objective coefficient {j} is not finite")));
            }
            if u.is_nan() || u < 0.0 {
                return Err(SolveError::Data(format!("upper bound {u} of variable {j} is below zero")));
            }
        }
        for (r, row) in self.constraints.iter().enumerate() {
            for &(j, a) in &row.terms {
                if j >= n {
                    return Err(SolveError::Dimension(format!(
                        "row {r} refers to variable {j} with {n} variables"
                    )));
                }
                if !a.is_finite() {
                    return Err(SolveError::Data(format!("row {r} has a non-finite coefficient")));
                }
            }
            let ok = match row.sense {
                Sense::Eq => row.rhs.is_finite(),
                Sense::Le => !row.rhs.is_nan() && row.rhs != f64::NEG_INFINITY,
            };
            if !ok {
                return Err(SolveError::Data(format!("row {r} has right-hand side {}", row.rhs)));
            }
        }
        // Only the diagonal is checked; off-diagonal concavity is the caller's contract.
        let mut diag = vec![0.0; n];
        for &(i, j, v) in &self.quadratic {
            if i == j {
                diag[i] += v;
            }
        }
        if let Some(j) = diag.iter().position(|&d| d > 0.0) {
            return Err(SolveError::NotConcave(j));
        }
        Ok(())
    }
}
