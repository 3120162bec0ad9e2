//! Oracles that share no code with the interior-point path: a dense
//! Bland's-rule simplex for LPs and exhaustive active-set enumeration for
//! small strictly concave QPs.

#![allow(dead_code)]

use ldesmarket_qp::{solve, verify_kkt, ConvexQP, Sense, SolveOptions, SolveResult, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// max c'x s.t. Ax <= b, x >= 0 with b >= 0. Returns (objective, row duals).
pub fn simplex(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> (f64, Vec<f64>) {
    let (m, n) = (a.len(), c.len());
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        // Bland: lowest index with negative reduced cost
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -1e-12) else { break };
        let mut leave = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > 1e-12 {
                let ratio = t[i][width - 1] / t[i][enter];
                if ratio < best - 1e-12 || (ratio <= best + 1e-12 && leave.map_or(true, |l: usize| basis[i] < basis[l])) {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let r = leave.expect("bounded instance");
        let p = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        for i in 0..=m {
            if i != r {
                let f = t[i][enter];
                if f != 0.0 {
                    for j in 0..width {
                        t[i][j] -= f * t[r][j];
                    }
                }
            }
        }
        basis[r] = enter;
    }
    let duals = (0..m).map(|i| t[m][n + i]).collect();
    (t[m][width - 1], duals)
}

pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for j in col..n {
                a[i][j] -= f * a[col][j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

pub struct SmallQp {
    pub qdiag: Vec<f64>,
    pub q: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
}

/// Exhaustive active-set search for max ½x'diag(Q)x + q'x.
pub fn enumerate(p: &SmallQp) -> f64 {
    let n = p.q.len();
    let ineq: Vec<usize> = (0..p.rows.len()).filter(|&i| p.rows[i].1 == Sense::Le).collect();
    let eq: Vec<usize> = (0..p.rows.len()).filter(|&i| p.rows[i].1 == Sense::Eq).collect();
    let k = ineq.len() + n;
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << k) {
        // active generic constraints g_l' x = h_l with multiplier sign rule
        let mut g: Vec<(Vec<f64>, f64, bool)> = Vec::new(); // (coef, rhs, signed)
        for (bit, &i) in ineq.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                g.push((p.rows[i].0.clone(), p.rows[i].2, true));
            }
        }
        for j in 0..n {
            if mask & (1 << (ineq.len() + j)) != 0 {
                let mut e = vec![0.0; n];
                e[j] = -1.0;
                g.push((e, 0.0, true));
            }
        }
        for &i in &eq {
            g.push((p.rows[i].0.clone(), p.rows[i].2, false));
        }
        let na = g.len();
        if na > n {
            continue;
        }
        // [Q  -G'; G 0] [x; lam] = [-q; h]
        let dim = n + na;
        let mut mat = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for j in 0..n {
            mat[j][j] = p.qdiag[j];
            rhs[j] = -p.q[j];
            for (l, gl) in g.iter().enumerate() {
                mat[j][n + l] = -gl.0[j];
            }
        }
        for (l, gl) in g.iter().enumerate() {
            for j in 0..n {
                mat[n + l][j] = gl.0[j];
            }
            rhs[n + l] = gl.1;
        }
        let Some(sol) = gauss(mat, rhs) else { continue };
        let x = &sol[..n];
        let feasible = x.iter().all(|&v| v >= -1e-9)
            && p.rows.iter().all(|(a, s, b)| {
                let ax: f64 = a.iter().zip(x).map(|(u, v)| u * v).sum();
                match s {
                    Sense::Le => ax <= b + 1e-9,
                    Sense::Eq => (ax - b).abs() <= 1e-9,
                }
            });
        let signs_ok = g.iter().enumerate().all(|(l, gl)| !gl.2 || sol[n + l] >= -1e-9);
        if feasible && signs_ok {
            let obj: f64 = (0..n).map(|j| 0.5 * p.qdiag[j] * x[j] * x[j] + p.q[j] * x[j]).sum();
            best = best.max(obj);
        }
    }
    best
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.gen_range(2..=20);
    let m = rng.gen_range(1..=10);
    let c = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
    let mut a: Vec<Vec<f64>> =
        (0..m).map(|_| (0..n).map(|_| if rng.gen_bool(0.7) { rng.gen_range(0.1..2.0) } else { 0.0 }).collect()).collect();
    // every column needs a positive entry for boundedness
    for j in 0..n {
        if a.iter().all(|r| r[j] == 0.0) {
            let i = rng.gen_range(0..m);
            a[i][j] = rng.gen_range(0.5..1.5);
        }
    }
    let b = (0..m).map(|_| rng.gen_range(1.0..10.0)).collect();
    (c, a, b)
}

pub fn random_qp(rng: &mut ChaCha8Rng) -> SmallQp {
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(1..=3);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mut rows = Vec::new();
    for i in 0..m {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let ax: f64 = a.iter().zip(&x0).map(|(u, v)| u * v).sum();
        if i == 0 && rng.gen_bool(0.5) {
            rows.push((a, Sense::Eq, ax));
        } else {
            rows.push((a, Sense::Le, ax + rng.gen_range(0.0..2.0)));
        }
    }
    SmallQp {
        qdiag: (0..n).map(|_| rng.gen_range(-3.0..-0.1)).collect(),
        q: (0..n).map(|_| rng.gen_range(-2.0..4.0)).collect(),
        rows,
    }
}

pub fn lp_program(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> ConvexQP {
    let mut qp = ConvexQP::new();
    for &cj in c {
        qp.add_var(cj, f64::INFINITY);
    }
    for (row, &bi) in a.iter().zip(b) {
        let terms = row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        qp.add_constraint(terms, Sense::Le, bi);
    }
    qp
}

pub fn qp_program(p: &SmallQp, upper: f64) -> ConvexQP {
    let mut qp = ConvexQP::new();
    for (j, &qj) in p.q.iter().enumerate() {
        let v = qp.add_var(qj, upper);
        qp.add_quadratic(v, v, p.qdiag[j]);
    }
    for (a, s, b) in &p.rows {
        qp.add_constraint(a.iter().cloned().enumerate().collect(), *s, *b);
    }
    qp
}

/// One random instance solved by the interior-point method and by an oracle.
pub struct OracleCase {
    pub kind: &'static str,
    pub oracle: f64,
    /// LP only: simplex row duals.
    pub oracle_duals: Vec<f64>,
    pub program: ConvexQP,
    pub result: SolveResult,
    pub kkt_passes: bool,
}

impl OracleCase {
    pub fn objective_matches(&self, rel: f64) -> bool {
        self.result.status == Status::Optimal && (self.result.objective - self.oracle).abs() <= rel * self.oracle.abs().max(1.0)
    }
}

/// 25 random LPs and 25 random QPs with at most 20 variables.
pub fn random_cases(seed: u64, opts: &SolveOptions) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(50);
    for _ in 0..25 {
        let (c, a, b) = random_lp(&mut rng);
        let (oracle, oracle_duals) = simplex(&c, &a, &b);
        let program = lp_program(&c, &a, &b);
        let result = solve(&program, opts).expect("well-formed LP");
        let kkt_passes = verify_kkt(&program, &result).passes(opts.tolerance);
        out.push(OracleCase { kind: "LP", oracle, oracle_duals, program, result, kkt_passes });
    }
    for _ in 0..25 {
        let p = random_qp(&mut rng);
        let oracle = enumerate(&p);
        let program = qp_program(&p, f64::INFINITY);
        let result = solve(&program, opts).expect("well-formed QP");
        let kkt_passes = verify_kkt(&program, &result).passes(opts.tolerance);
        out.push(OracleCase { kind: "QP", oracle, oracle_duals: Vec::new(), program, result, kkt_passes });
    }
    out
}
