//! Independent KKT check of a primal-dual point.
//!
//! Everything here is recomputed from the row lists of [`ConvexQP`]; no
//! state of the interior-point iteration is reused.

use crate::ipm::{Residuals, SolveResult};
use crate::problem::{ConvexQP, Sense};

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub residuals: Residuals,
    pub objective: f64,
    pub dual_objective: f64,
    /// `|objective - dual_objective| / (1 + |objective|)`
    pub gap: f64,
    /// Rows with relative slack above the flag threshold that still carry a
    /// dual above it.
    pub slack_rows_with_dual: Vec<usize>,
    /// Variables off both bounds with a nonzero reduced cost.
    pub interior_vars_with_reduced_cost: Vec<usize>,
}

impl KktReport {
    /// All three residuals within `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.residuals.max() <= tol
    }

    /// True when each recomputed residual is within a factor of ten of the
    /// self-reported one. Values below `floor` are treated as `floor`.
    pub fn agrees_with(&self, reported: &Residuals, floor: f64) -> bool {
        let close = |a: f64, b: f64| {
            let (a, b) = (a.max(floor), b.max(floor));
            a <= 10.0 * b && b <= 10.0 * a
        };
        close(self.residuals.primal, reported.primal)
            && close(self.residuals.dual, reported.dual)
            && close(self.residuals.complementarity, reported.complementarity)
    }
}

const FLAG: f64 = 1e-7;

/// Recomputes stationarity, primal feasibility and complementarity for the
/// point stored in `result`.
pub fn verify_kkt(qp: &ConvexQP, result: &SolveResult) -> KktReport {
    let x = &result.primal;
    let y = &result.duals;
    let r = &result.reduced_costs;
    let n = qp.num_vars();

    let g = qp.gradient(x);
    let mut aty = vec![0.0; n];
    let mut worst_p = 0.0f64;
    let mut ax_norm = 0.0f64;
    let mut b_norm = 0.0f64;
    let mut comp = 0.0;
    let mut worst_dual_sign = 0.0f64;
    let mut slack_rows_with_dual = Vec::new();
    let mut dual_obj = qp.constant - 0.5 * qp.quad_form(x);

    for (i, row) in qp.constraints.iter().enumerate() {
        let ax: f64 = row.terms.iter().map(|&(j, a)| a * x[j]).sum();
        ax_norm = ax_norm.max(ax.abs());
        let active = row.sense == Sense::Eq || row.rhs.is_finite();
        if !active {
            // non-binding by construction
            worst_dual_sign = worst_dual_sign.max(y[i].abs());
            continue;
        }
        b_norm = b_norm.max(row.rhs.abs());
        for &(j, a) in &row.terms {
            aty[j] += a * y[i];
        }
        dual_obj += row.rhs * y[i];
        match row.sense {
            Sense::Eq => worst_p = worst_p.max((ax - row.rhs).abs()),
            Sense::Le => {
                worst_p = worst_p.max(ax - row.rhs);
                worst_dual_sign = worst_dual_sign.max(-y[i]);
                let slack = row.rhs - ax;
                comp += y[i].abs() * slack.abs();
                let scale = 1.0 + row.rhs.abs().max(ax.abs());
                if slack > FLAG * scale && y[i].abs() > FLAG {
                    slack_rows_with_dual.push(i);
                }
            }
        }
    }
    let mut interior_vars_with_reduced_cost = Vec::new();
    let mut worst_stat = 0.0f64;
    for j in 0..n {
        worst_p = worst_p.max(-x[j]).max(x[j] - qp.upper[j]);
        worst_stat = worst_stat.max((g[j] - aty[j] + r[j]).abs());
        let u = qp.upper[j];
        if r[j] > 0.0 {
            comp += r[j] * x[j].abs();
        } else if r[j] < 0.0 {
            if u.is_finite() {
                comp += -r[j] * (u - x[j]).abs();
                dual_obj += -r[j] * u;
            } else {
                worst_dual_sign = worst_dual_sign.max(-r[j]);
            }
        }
        let off_lower = x[j] > FLAG * (1.0 + x[j].abs());
        let off_upper = !u.is_finite() || u - x[j] > FLAG * (1.0 + u.abs());
        if off_lower && off_upper && r[j].abs() > FLAG {
            interior_vars_with_reduced_cost.push(j);
        }
    }
    let g_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let aty_norm = aty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let objective = qp.objective(x);
    let residuals = Residuals {
        primal: worst_p.max(0.0) / (1.0 + ax_norm.max(b_norm)),
        dual: worst_stat.max(worst_dual_sign) / (1.0 + g_norm.max(aty_norm)),
        complementarity: comp / (1.0 + objective.abs()),
    };
    KktReport {
        residuals,
        objective,
        dual_objective: dual_obj,
        gap: (objective - dual_obj).abs() / (1.0 + objective.abs()),
        slack_rows_with_dual,
        interior_vars_with_reduced_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{solve, SolveOptions, Status};

    fn capped() -> ConvexQP {
        let mut qp = ConvexQP::new();
        let x = qp.add_var(1.0, f64::INFINITY);
        qp.add_constraint(vec![(x, 1.0)], Sense::Le, 5.0);
        qp
    }

    #[test]
    fn optimal_point_passes() {
        let qp = capped();
        let res = solve(&qp, &SolveOptions::default()).unwrap();
        assert_eq!(res.status, Status::Optimal);
        let rep = verify_kkt(&qp, &res);
        assert!(rep.passes(1e-8), "{rep:?}");
        assert!(rep.agrees_with(&res.residuals, 1e-13));
    }

    #[test]
    fn perturbed_primal_is_detected() {
        let qp = capped();
        let mut res = solve(&qp, &SolveOptions::default()).unwrap();
        res.primal[0] += 1e-3;
        let rep = verify_kkt(&qp, &res);
        assert!(!rep.passes(1e-8));
        assert!(rep.residuals.primal > 1e-8);
    }

    #[test]
    fn zero_candidate_flags_slack_row() {
        let qp = capped();
        let mut res = solve(&qp, &SolveOptions::default()).unwrap();
        res.primal[0] = 0.0;
        let rep = verify_kkt(&qp, &res);
        assert_eq!(rep.slack_rows_with_dual, vec![0]);
        assert!(rep.residuals.complementarity > 1e-8);
    }
}
