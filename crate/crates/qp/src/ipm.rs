//! Mehrotra predictor-corrector interior-point method.
//!
//! Internally the problem is the minimisation
//!
//! ```text
//!     min ½ x'Px + c'x   s.t.  A_E x = b_E,  A_I x + s = b_I,  x + t = u,
//!                              x, s, t >= 0
//! ```
//!
//! with `P = -Q`, `c = -q`. Stationarity reads `Px + c + A'y - z + w = 0`
//! where `y` collects the row duals (nonnegative on inequality rows), `z`
//! the lower-bound duals and `w` the upper-bound duals.

use crate::ldl::Ldl;
use crate::problem::{ConvexQP, Sense};
use crate::sparse::{dot, inf_norm, Csc};
use crate::SolveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NotConverged,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "OPTIMAL",
            Status::Infeasible => "INFEASIBLE",
            Status::Unbounded => "UNBOUNDED",
            Status::NotConverged => "NOT_CONVERGED",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative tolerance on primal, dual and complementarity residuals.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Ruiz equilibration of the KKT matrix and objective scaling.
    pub scaling: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tolerance: 1e-8, max_iterations: 200, scaling: true }
    }
}

/// Relative residual norms of a primal-dual point.
///
/// * `primal`: worst row or bound violation over `1 + max(‖Ax‖∞, ‖b‖∞)`.
/// * `dual`: worst stationarity error `Qx + q - A'y + r` or dual sign
///   violation over `1 + max(‖Qx + q‖∞, ‖A'y‖∞)`.
/// * `complementarity`: `Σ |y_i| slack_i + Σ |r_j| gap_j` over
///   `1 + |objective|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl Residuals {
    /// Largest of the three; NaN if any of them is NaN.
    pub fn max(&self) -> f64 {
        let v = [self.primal, self.dual, self.complementarity];
        if v.iter().any(|x| x.is_nan()) {
            return f64::NAN;
        }
        v.into_iter().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub primal: Vec<f64>,
    /// Shadow price of each row (derivative of the optimum w.r.t. its rhs).
    pub duals: Vec<f64>,
    /// Bound multipliers `z - w`: positive at the lower bound, negative at
    /// the upper bound.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

/// Unscaled data in internal (minimisation) form.
struct Model {
    n: usize,
    m: usize,
    /// lower triangle of P incl. diagonal
    p_trip: Vec<(usize, usize, f64)>,
    c: Vec<f64>,
    a: Csc,
    b: Vec<f64>,
    is_eq: Vec<bool>,
    u: Vec<f64>,
    /// original row index for each internal row
    row_of: Vec<usize>,
}

impl Model {
    fn from_qp(qp: &ConvexQP) -> Self {
        let n = qp.num_vars();
        let mut trip = Vec::new();
        let mut b = Vec::new();
        let mut is_eq = Vec::new();
        let mut row_of = Vec::new();
        for (r, row) in qp.constraints.iter().enumerate() {
            if row.sense == Sense::Le && row.rhs == f64::INFINITY {
                continue;
            }
            let k = b.len();
            for &(j, v) in &row.terms {
                trip.push((k, j, v));
            }
            b.push(row.rhs);
            is_eq.push(row.sense == Sense::Eq);
            row_of.push(r);
        }
        let m = b.len();
        let a = Csc::from_triplets(n, &trip);
        let p_trip = qp.quadratic.iter().map(|&(i, j, v)| (i, j, -v)).collect();
        Model {
            n,
            m,
            p_trip,
            c: qp.linear.iter().map(|v| -v).collect(),
            a,
            b,
            is_eq,
            u: qp.upper.clone(),
            row_of,
        }
    }

    /// y += P x
    fn p_mul_add(&self, x: &[f64], y: &mut [f64]) {
        for &(i, j, v) in &self.p_trip {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
    }
}

struct Scaling {
    d: Vec<f64>,
    e: Vec<f64>,
    cost: f64,
}

fn ruiz(model: &mut Model, iters: usize) -> Scaling {
    let (n, m) = (model.n, model.m);
    let mut d = vec![1.0; n];
    let mut e = vec![1.0; m];
    for _ in 0..iters {
        let mut cn = vec![0.0f64; n];
        let mut rn = vec![0.0f64; m];
        for &(i, j, v) in &model.p_trip {
            let a = v.abs();
            cn[i] = cn[i].max(a);
            cn[j] = cn[j].max(a);
        }
        for j in 0..n {
            for (r, v) in model.a.col(j) {
                let a = v.abs();
                cn[j] = cn[j].max(a);
                rn[r] = rn[r].max(a);
            }
        }
        let sd: Vec<f64> = cn.iter().map(|&x| if x > 1e-12 { 1.0 / x.sqrt() } else { 1.0 }).collect();
        let se: Vec<f64> = rn.iter().map(|&x| if x > 1e-12 { 1.0 / x.sqrt() } else { 1.0 }).collect();
        for t in model.p_trip.iter_mut() {
            t.2 *= sd[t.0] * sd[t.1];
        }
        model.a.scale(&se, &sd);
        for j in 0..n {
            d[j] *= sd[j];
        }
        for r in 0..m {
            e[r] *= se[r];
        }
    }
    for j in 0..n {
        model.c[j] *= d[j];
        model.u[j] /= d[j];
    }
    for r in 0..m {
        model.b[r] *= e[r];
    }
    // objective scaling
    let mut pn = vec![0.0f64; n];
    for &(i, j, v) in &model.p_trip {
        pn[i] = pn[i].max(v.abs());
        pn[j] = pn[j].max(v.abs());
    }
    let mean_p = if n > 0 { pn.iter().sum::<f64>() / n as f64 } else { 0.0 };
    let denom = mean_p.max(inf_norm(&model.c));
    let cost = if denom > 1e-12 { (1.0 / denom).clamp(1e-6, 1e6) } else { 1.0 };
    for t in model.p_trip.iter_mut() {
        t.2 *= cost;
    }
    for c in model.c.iter_mut() {
        *c *= cost;
    }
    Scaling { d, e, cost }
}

/// The reduced KKT system `[P + Θx + ρI, A'; A, -Θy - δI]`.
struct Kkt {
    ldl: Ldl,
    p_slots: Vec<usize>,
    a_slots: Vec<usize>,
    n: usize,
    rho: f64,
    delta: f64,
    work: Vec<f64>,
}

impl Kkt {
    fn new(model: &Model) -> Self {
        let (n, m) = (model.n, model.m);
        let mut entries = Vec::with_capacity(model.p_trip.len() + model.a.nnz());
        for &(i, j, _) in &model.p_trip {
            entries.push((j, i));
        }
        let np = entries.len();
        for j in 0..n {
            for (r, _) in model.a.col(j) {
                entries.push((j, n + r));
            }
        }
        let mut signs = vec![1.0; n + m];
        for s in signs.iter_mut().skip(n) {
            *s = -1.0;
        }
        let (ldl, slots) = Ldl::analyze(n + m, &entries, &signs);
        let a_slots = slots[np..].to_vec();
        let p_slots = slots[..np].to_vec();
        Kkt { ldl, p_slots, a_slots, n, rho: 1e-9, delta: 1e-9, work: vec![0.0; n + m] }
    }

    fn factor(&mut self, model: &Model, theta_x: &[f64], theta_y: &[f64]) {
        let ax = &mut self.ldl.ax;
        ax.iter_mut().for_each(|v| *v = 0.0);
        for (k, &(_, _, v)) in model.p_trip.iter().enumerate() {
            ax[self.p_slots[k]] += v;
        }
        for (k, &v) in model.a.values.iter().enumerate() {
            ax[self.a_slots[k]] += v;
        }
        for j in 0..self.n {
            let s = self.ldl.diag_slot(j);
            self.ldl.ax[s] += theta_x[j] + self.rho;
        }
        for r in 0..model.m {
            let s = self.ldl.diag_slot(self.n + r);
            self.ldl.ax[s] -= theta_y[r] + self.delta;
        }
        self.ldl.factor();
    }

    fn true_mul(&self, model: &Model, theta_x: &[f64], theta_y: &[f64], v: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|o| *o = 0.0);
        let (top, bot) = out.split_at_mut(n);
        let (vx, vy) = v.split_at(n);
        model.p_mul_add(vx, top);
        for j in 0..n {
            top[j] += theta_x[j] * vx[j];
        }
        model.a.tmul_add(vy, top);
        model.a.mul_add(vx, bot);
        for r in 0..model.m {
            bot[r] -= theta_y[r] * vy[r];
        }
    }

    fn solve(&mut self, model: &Model, theta_x: &[f64], theta_y: &[f64], rhs: &[f64], sol: &mut [f64]) {
        sol.copy_from_slice(rhs);
        self.ldl.solve(sol, &mut self.work);
        let dim = rhs.len();
        let mut res = vec![0.0; dim];
        let mut corr = vec![0.0; dim];
        let rn = inf_norm(rhs).max(1.0);
        for _ in 0..4 {
            self.true_mul(model, theta_x, theta_y, sol, &mut res);
            for k in 0..dim {
                res[k] = rhs[k] - res[k];
            }
            if inf_norm(&res) <= 1e-14 * rn {
                break;
            }
            corr.copy_from_slice(&res);
            self.ldl.solve(&mut corr, &mut self.work);
            for k in 0..dim {
                sol[k] += corr[k];
            }
        }
    }
}

/// Internal iterate in scaled space.
#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    z: Vec<f64>,
    t: Vec<f64>,
    w: Vec<f64>,
    s: Vec<f64>,
    y: Vec<f64>,
}

/// Residuals and objective of an unscaled primal-dual point, computed in
/// solver space (internal rows only).
fn unscaled_report(
    qp: &ConvexQP,
    orig: &Model,
    x: &[f64],
    y_int: &[f64],
    r: &[f64],
) -> (Residuals, f64, f64) {
    let (n, m) = (orig.n, orig.m);
    let mut ax = vec![0.0; m];
    orig.a.mul_add(x, &mut ax);
    let mut pviol = 0.0f64;
    for i in 0..m {
        let v = ax[i] - orig.b[i];
        let viol = if orig.is_eq[i] { v.abs() } else { v.max(0.0) };
        pviol = pviol.max(viol);
    }
    for j in 0..n {
        pviol = pviol.max(-x[j]).max(x[j] - orig.u[j]);
    }
    let pnorm = 1.0 + inf_norm(&ax).max(inf_norm(&orig.b));

    // gradient of the maximisation objective
    let mut g: Vec<f64> = orig.c.iter().map(|v| -v).collect();
    let mut px = vec![0.0; n];
    orig.p_mul_add(x, &mut px);
    for j in 0..n {
        g[j] -= px[j];
    }
    let mut aty = vec![0.0; n];
    orig.a.tmul_add(y_int, &mut aty);
    let mut dviol = 0.0f64;
    for j in 0..n {
        dviol = dviol.max((g[j] - aty[j] + r[j]).abs());
        if orig.u[j] == f64::INFINITY {
            dviol = dviol.max(-r[j]);
        }
    }
    for i in 0..m {
        if !orig.is_eq[i] {
            dviol = dviol.max(-y_int[i]);
        }
    }
    let dnorm = 1.0 + inf_norm(&g).max(inf_norm(&aty));

    let obj = qp.objective(x);
    let mut comp = 0.0;
    for i in 0..m {
        if !orig.is_eq[i] {
            comp += y_int[i].abs() * (orig.b[i] - ax[i]).abs();
        }
    }
    for j in 0..n {
        if r[j] > 0.0 {
            comp += r[j] * x[j].abs();
        } else if r[j] < 0.0 && orig.u[j].is_finite() {
            comp += -r[j] * (orig.u[j] - x[j]).abs();
        }
    }
    // dual objective of the maximisation
    let xpx = dot(x, &px);
    let mut dobj = qp.constant + 0.5 * xpx + dot(&orig.b, y_int);
    for j in 0..n {
        if r[j] < 0.0 && orig.u[j].is_finite() {
            dobj += -r[j] * orig.u[j];
        }
    }
    (
        Residuals {
            primal: pviol / pnorm,
            dual: dviol / dnorm,
            complementarity: comp / (1.0 + obj.abs()),
        },
        obj,
        dobj,
    )
}

/// Solves `qp` to the requested tolerance.
pub fn solve(qp: &ConvexQP, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    qp.check()?;
    let orig = Model::from_qp(qp);
    let (n, m) = (orig.n, orig.m);
    let nrows_total = qp.num_rows();
    if n == 0 {
        let infeasible = orig.b.iter().zip(&orig.is_eq).any(|(&b, &eq)| if eq { b != 0.0 } else { b < 0.0 });
        return Ok(SolveResult {
            status: if infeasible { Status::Infeasible } else { Status::Optimal },
            primal: vec![],
            duals: vec![0.0; nrows_total],
            reduced_costs: vec![],
            objective: qp.constant,
            dual_objective: qp.constant,
            residuals: Residuals::default(),
            iterations: 0,
        });
    }

    let mut model = Model::from_qp(qp);
    let scaling = if opts.scaling {
        ruiz(&mut model, 15)
    } else {
        Scaling { d: vec![1.0; n], e: vec![1.0; m], cost: 1.0 }
    };
    let has_ub: Vec<bool> = model.u.iter().map(|u| u.is_finite()).collect();
    let is_lp = model.p_trip.iter().all(|t| t.2 == 0.0);
    let n_pairs = n + has_ub.iter().filter(|&&b| b).count() + model.is_eq.iter().filter(|&&e| !e).count();

    let mut kkt = Kkt::new(&model);
    let dim = n + m;
    let mut theta_x = vec![0.0; n];
    let mut theta_y = vec![0.0; m];
    let mut rhs = vec![0.0; dim];
    let mut sol = vec![0.0; dim];
    let mut it = initial_point(&model, &has_ub, &mut kkt, &mut rhs, &mut sol);

    let unscale = |it: &Iterate| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..n).map(|j| it.x[j] * scaling.d[j]).collect();
        let y: Vec<f64> = (0..m).map(|i| it.y[i] * scaling.e[i] / scaling.cost).collect();
        let r: Vec<f64> = (0..n)
            .map(|j| {
                let w = if has_ub[j] { it.w[j] } else { 0.0 };
                (it.z[j] - w) / (scaling.d[j] * scaling.cost)
            })
            .collect();
        (x, y, r)
    };

    let mut best: Option<(f64, Iterate, usize)> = None;
    let mut status = Status::NotConverged;
    let mut iterations = 0;

    for iter in 0..=opts.max_iterations {
        iterations = iter;
        // convergence on the unscaled problem
        let (xu, yu, ru) = unscale(&it);
        let (res, pobj, dobj) = unscaled_report(qp, &orig, &xu, &yu, &ru);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        let score = if res.max().is_finite() && gap.is_finite() { res.max().max(gap) } else { f64::INFINITY };
        if best.as_ref().map_or(true, |b| score < b.0) {
            best = Some((score, it.clone(), iter));
        }
        if res.max() <= opts.tolerance && gap <= opts.tolerance {
            status = Status::Optimal;
            best = Some((score, it.clone(), iter));
            break;
        }
        if iter == opts.max_iterations {
            break;
        }
        let xn = inf_norm(&it.x);
        let dn = inf_norm(&it.y).max(inf_norm(&it.z)).max(inf_norm(&it.w));
        if !xn.is_finite() || !dn.is_finite() {
            break;
        }
        if xn > 1e12 || (xn > 1e6 && primal_ray(&model, &it, &has_ub)) {
            status = Status::Unbounded;
            break;
        }
        if dn > 1e12 || (dn > 1e6 && dual_ray(&model, &it, &has_ub)) {
            status = Status::Infeasible;
            break;
        }

        // scaled residuals
        let mut rd = model.c.clone();
        model.p_mul_add(&it.x, &mut rd);
        model.a.tmul_add(&it.y, &mut rd);
        for j in 0..n {
            rd[j] += -it.z[j] + if has_ub[j] { it.w[j] } else { 0.0 };
        }
        let mut rp = vec![0.0; m];
        model.a.mul_add(&it.x, &mut rp);
        for i in 0..m {
            rp[i] += it.s[i] - model.b[i];
        }
        let ru: Vec<f64> = (0..n)
            .map(|j| if has_ub[j] { it.x[j] + it.t[j] - model.u[j] } else { 0.0 })
            .collect();
        let mut mu = dot(&it.x, &it.z);
        for j in 0..n {
            if has_ub[j] {
                mu += it.t[j] * it.w[j];
            }
        }
        for i in 0..m {
            if !model.is_eq[i] {
                mu += it.s[i] * it.y[i];
            }
        }
        mu /= n_pairs.max(1) as f64;

        for j in 0..n {
            theta_x[j] = it.z[j] / it.x[j] + if has_ub[j] { it.w[j] / it.t[j] } else { 0.0 };
        }
        for i in 0..m {
            theta_y[i] = if model.is_eq[i] { 0.0 } else { it.s[i] / it.y[i] };
        }
        kkt.factor(&model, &theta_x, &theta_y);

        // predictor
        let rxz_a: Vec<f64> = (0..n).map(|j| -it.x[j] * it.z[j]).collect();
        let rtw_a: Vec<f64> = (0..n).map(|j| if has_ub[j] { -it.t[j] * it.w[j] } else { 0.0 }).collect();
        let rsv_a: Vec<f64> = (0..m).map(|i| if model.is_eq[i] { 0.0 } else { -it.s[i] * it.y[i] }).collect();
        let step_a = newton(
            &model, &it, &has_ub, &rd, &rp, &ru, &rxz_a, &rtw_a, &rsv_a, &mut kkt, &theta_x, &theta_y, &mut rhs,
            &mut sol,
        );
        let (ap_a, ad_a) = step_lengths(&it, &step_a, &has_ub, &model.is_eq, 1.0);
        let (ap_a, ad_a) = if is_lp { (ap_a, ad_a) } else { (ap_a.min(ad_a), ap_a.min(ad_a)) };
        let mut mu_a = 0.0;
        for j in 0..n {
            mu_a += (it.x[j] + ap_a * step_a.dx[j]) * (it.z[j] + ad_a * step_a.dz[j]);
            if has_ub[j] {
                mu_a += (it.t[j] + ap_a * step_a.dt[j]) * (it.w[j] + ad_a * step_a.dw[j]);
            }
        }
        for i in 0..m {
            if !model.is_eq[i] {
                mu_a += (it.s[i] + ap_a * step_a.ds[i]) * (it.y[i] + ad_a * step_a.dy[i]);
            }
        }
        mu_a /= n_pairs.max(1) as f64;
        let sigma = if mu > 0.0 { (mu_a / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // corrector
        let sm = sigma * mu;
        let rxz: Vec<f64> = (0..n).map(|j| sm - it.x[j] * it.z[j] - step_a.dx[j] * step_a.dz[j]).collect();
        let rtw: Vec<f64> = (0..n)
            .map(|j| if has_ub[j] { sm - it.t[j] * it.w[j] - step_a.dt[j] * step_a.dw[j] } else { 0.0 })
            .collect();
        let rsv: Vec<f64> = (0..m)
            .map(|i| {
                if model.is_eq[i] {
                    0.0
                } else {
                    sm - it.s[i] * it.y[i] - step_a.ds[i] * step_a.dy[i]
                }
            })
            .collect();
        let step = newton(
            &model, &it, &has_ub, &rd, &rp, &ru, &rxz, &rtw, &rsv, &mut kkt, &theta_x, &theta_y, &mut rhs, &mut sol,
        );
        let tau = (1.0 - mu).clamp(0.99, 0.9999);
        let (ap, ad) = step_lengths(&it, &step, &has_ub, &model.is_eq, tau);
        let (ap, ad) = if is_lp { (ap, ad) } else { (ap.min(ad), ap.min(ad)) };
        for j in 0..n {
            it.x[j] += ap * step.dx[j];
            it.z[j] += ad * step.dz[j];
            if has_ub[j] {
                it.t[j] += ap * step.dt[j];
                it.w[j] += ad * step.dw[j];
            }
        }
        for i in 0..m {
            it.y[i] += ad * step.dy[i];
            if !model.is_eq[i] {
                it.s[i] += ap * step.ds[i];
            }
        }
    }

    let (_, fin, _) = best.expect("at least one iterate");
    let (x, y_int, r) = unscale(&fin);
    let (residuals, objective, dual_objective) = unscaled_report(qp, &orig, &x, &y_int, &r);
    let mut duals = vec![0.0; nrows_total];
    for (k, &row) in orig.row_of.iter().enumerate() {
        duals[row] = y_int[k];
    }
    if status == Status::NotConverged && residuals.max() <= opts.tolerance {
        status = Status::Optimal;
    }
    if !objective.is_finite() || x.iter().any(|v| !v.is_finite()) {
        status = Status::NotConverged;
    }
    Ok(SolveResult {
        status,
        primal: x,
        duals,
        reduced_costs: r,
        objective,
        dual_objective,
        residuals,
        iterations,
    })
}

/// Least-norm primal and dual estimates shifted into the interior.
fn initial_point(model: &Model, has_ub: &[bool], kkt: &mut Kkt, rhs: &mut [f64], sol: &mut [f64]) -> Iterate {
    let (n, m) = (model.n, model.m);
    let ones_x = vec![1.0; n];
    let theta_y: Vec<f64> = model.is_eq.iter().map(|&e| if e { 0.0 } else { 1.0 }).collect();
    kkt.factor(model, &ones_x, &theta_y);

    // min |x|^2 + |s|^2  s.t.  Ax + s = b, with upper bounds folded in as t = u - x
    rhs[..n].iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        if has_ub[j] {
            rhs[j] = 0.5 * model.u[j];
        }
    }
    rhs[n..].copy_from_slice(&model.b);
    kkt.solve(model, &ones_x, &theta_y, rhs, sol);
    let mut x = sol[..n].to_vec();
    let mut ax = vec![0.0; m];
    model.a.mul_add(&x, &mut ax);
    let mut s: Vec<f64> = (0..m).map(|i| if model.is_eq[i] { 0.0 } else { model.b[i] - ax[i] }).collect();
    let mut t: Vec<f64> = (0..n).map(|j| if has_ub[j] { model.u[j] - x[j] } else { 0.0 }).collect();

    // min |z|^2 + |y|^2  s.t.  c + Px + A'y - z + w = 0
    for j in 0..n {
        rhs[j] = -model.c[j];
    }
    rhs[n..].iter_mut().for_each(|v| *v = 0.0);
    kkt.solve(model, &ones_x, &theta_y, rhs, sol);
    let mut y = sol[n..].to_vec();
    let mut zf = model.c.clone();
    model.p_mul_add(&x, &mut zf);
    model.a.tmul_add(&y, &mut zf);
    let mut z: Vec<f64> = zf.iter().map(|&v| v.max(0.0)).collect();
    let mut w: Vec<f64> = (0..n).map(|j| if has_ub[j] { (-zf[j]).max(0.0) } else { 0.0 }).collect();
    for j in 0..n {
        if !has_ub[j] && zf[j] < 0.0 {
            // no upper bound to absorb a negative multiplier
            z[j] = -zf[j];
        }
    }

    let pmin = x
        .iter()
        .copied()
        .chain((0..n).filter(|&j| has_ub[j]).map(|j| t[j]))
        .chain((0..m).filter(|&i| !model.is_eq[i]).map(|i| s[i]))
        .fold(f64::INFINITY, f64::min);
    let dmin = z
        .iter()
        .copied()
        .chain((0..n).filter(|&j| has_ub[j]).map(|j| w[j]))
        .chain((0..m).filter(|&i| !model.is_eq[i]).map(|i| y[i]))
        .fold(f64::INFINITY, f64::min);
    let dp = (-1.5 * pmin).max(0.0);
    let dd = (-1.5 * dmin).max(0.0);
    let bump = |v: &mut f64, d: f64| *v += d;
    for j in 0..n {
        bump(&mut x[j], dp);
        bump(&mut z[j], dd);
        if has_ub[j] {
            bump(&mut t[j], dp);
            bump(&mut w[j], dd);
        }
    }
    for i in 0..m {
        if !model.is_eq[i] {
            bump(&mut s[i], dp);
            bump(&mut y[i], dd);
        }
    }
    // balance the complementarity products
    let mut xz = 0.0;
    let (mut sp, mut sd) = (0.0, 0.0);
    for j in 0..n {
        xz += x[j] * z[j];
        sp += x[j];
        sd += z[j];
        if has_ub[j] {
            xz += t[j] * w[j];
            sp += t[j];
            sd += w[j];
        }
    }
    for i in 0..m {
        if !model.is_eq[i] {
            xz += s[i] * y[i];
            sp += s[i];
            sd += y[i];
        }
    }
    let dp2 = if sd > 0.0 { 0.5 * xz / sd } else { 0.0 };
    let dd2 = if sp > 0.0 { 0.5 * xz / sp } else { 0.0 };
    let floor = 1e-2;
    for j in 0..n {
        x[j] = (x[j] + dp2).max(floor);
        z[j] = (z[j] + dd2).max(floor);
        if has_ub[j] {
            t[j] = (t[j] + dp2).max(floor);
            w[j] = (w[j] + dd2).max(floor);
        }
    }
    for i in 0..m {
        if !model.is_eq[i] {
            s[i] = (s[i] + dp2).max(floor);
            y[i] = (y[i] + dd2).max(floor);
        }
    }
    Iterate { x, z, t, w, s, y }
}

/// Whether the normalised primal iterate is a direction of unbounded descent.
fn primal_ray(model: &Model, it: &Iterate, has_ub: &[bool]) -> bool {
    let xn = inf_norm(&it.x);
    let d: Vec<f64> = it.x.iter().map(|v| v / xn).collect();
    if (0..model.n).any(|j| has_ub[j] && d[j] > 1e-9) {
        return false;
    }
    let mut pd = vec![0.0; model.n];
    model.p_mul_add(&d, &mut pd);
    let mut ad = vec![0.0; model.m];
    model.a.mul_add(&d, &mut ad);
    let rows_ok = (0..model.m).all(|i| if model.is_eq[i] { ad[i].abs() <= 1e-8 } else { ad[i] <= 1e-8 });
    rows_ok && inf_norm(&pd) <= 1e-8 && dot(&model.c, &d) < -1e-8
}

/// Whether the normalised dual iterate certifies primal infeasibility.
fn dual_ray(model: &Model, it: &Iterate, has_ub: &[bool]) -> bool {
    let dn = inf_norm(&it.y).max(inf_norm(&it.z)).max(inf_norm(&it.w));
    let mut r = vec![0.0; model.n];
    model.a.tmul_add(&it.y, &mut r);
    let mut by = dot(&model.b, &it.y);
    for j in 0..model.n {
        r[j] -= it.z[j];
        if has_ub[j] {
            r[j] += it.w[j];
            by += model.u[j] * it.w[j];
        }
    }
    inf_norm(&r) / dn <= 1e-8 && by / dn < -1e-8
}

struct Step {
    dx: Vec<f64>,
    dz: Vec<f64>,
    dt: Vec<f64>,
    dw: Vec<f64>,
    ds: Vec<f64>,
    dy: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn newton(
    model: &Model,
    it: &Iterate,
    has_ub: &[bool],
    rd: &[f64],
    rp: &[f64],
    ru: &[f64],
    rxz: &[f64],
    rtw: &[f64],
    rsv: &[f64],
    kkt: &mut Kkt,
    theta_x: &[f64],
    theta_y: &[f64],
    rhs: &mut [f64],
    sol: &mut [f64],
) -> Step {
    let (n, m) = (model.n, model.m);
    for j in 0..n {
        let mut v = -rd[j] + rxz[j] / it.x[j];
        if has_ub[j] {
            v -= (rtw[j] + it.w[j] * ru[j]) / it.t[j];
        }
        rhs[j] = v;
    }
    for i in 0..m {
        rhs[n + i] = if model.is_eq[i] { -rp[i] } else { -rp[i] - rsv[i] / it.y[i] };
    }
    kkt.solve(model, theta_x, theta_y, rhs, sol);
    let dx = sol[..n].to_vec();
    let dy = sol[n..].to_vec();
    let dz: Vec<f64> = (0..n).map(|j| (rxz[j] - it.z[j] * dx[j]) / it.x[j]).collect();
    let mut dt = vec![0.0; n];
    let mut dw = vec![0.0; n];
    for j in 0..n {
        if has_ub[j] {
            dt[j] = -ru[j] - dx[j];
            dw[j] = (rtw[j] - it.w[j] * dt[j]) / it.t[j];
        }
    }
    // from the complementarity row: stays accurate when s is tiny
    let ds: Vec<f64> = (0..m).map(|i| if model.is_eq[i] { 0.0 } else { (rsv[i] - it.s[i] * dy[i]) / it.y[i] }).collect();
    Step { dx, dz, dt, dw, ds, dy }
}

fn max_step(v: &[f64], dv: &[f64], mask: impl Fn(usize) -> bool) -> f64 {
    let mut a = f64::INFINITY;
    for k in 0..v.len() {
        if mask(k) && dv[k] < 0.0 {
            a = a.min(-v[k] / dv[k]);
        }
    }
    a
}

fn step_lengths(it: &Iterate, st: &Step, has_ub: &[bool], is_eq: &[bool], tau: f64) -> (f64, f64) {
    let ap = max_step(&it.x, &st.dx, |_| true)
        .min(max_step(&it.t, &st.dt, |j| has_ub[j]))
        .min(max_step(&it.s, &st.ds, |i| !is_eq[i]));
    let ad = max_step(&it.z, &st.dz, |_| true)
        .min(max_step(&it.w, &st.dw, |j| has_ub[j]))
        .min(max_step(&it.y, &st.dy, |i| !is_eq[i]));
    ((tau * ap).min(1.0), (tau * ad).min(1.0))
}
