//! Plain-text dump of a [`ConvexQP`] for cross-checking with other solvers.
//!
//! ```text
//! # ldesmarket-qp v1
//! maximize
//! vars <n>
//! rows <m>
//! constant <c>
//! var <j> <linear> <upper|inf>
//! quad <i> <j> <value>           (lower triangle, objective ½ x'Qx)
//! row <i> <le|eq> <rhs|inf>
//! coef <i> <j> <value>
//! ```
//!
//! Lines appear in the order above; `#` starts a comment. Numbers use
//! Rust's shortest round-trip formatting so a dump parses back bit-exactly.

use crate::problem::{Constraint, ConvexQP, Sense};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:?}")
    }
}

pub fn write(qp: &ConvexQP) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# ldesmarket-qp v1");
    let _ = writeln!(s, "maximize");
    let _ = writeln!(s, "vars {}", qp.num_vars());
    let _ = writeln!(s, "rows {}", qp.num_rows());
    let _ = writeln!(s, "constant {}", num(qp.constant));
    for (j, (c, u)) in qp.linear.iter().zip(&qp.upper).enumerate() {
        let _ = writeln!(s, "var {j} {} {}", num(*c), num(*u));
    }
    for &(i, j, v) in &qp.quadratic {
        let _ = writeln!(s, "quad {i} {j} {}", num(v));
    }
    for (i, row) in qp.constraints.iter().enumerate() {
        let sense = match row.sense {
            Sense::Le => "le",
            Sense::Eq => "eq",
        };
        let _ = writeln!(s, "row {i} {sense} {}", num(row.rhs));
        for &(j, a) in &row.terms {
            let _ = writeln!(s, "coef {i} {j} {}", num(a));
        }
    }
    s
}

pub fn parse(text: &str) -> Result<ConvexQP, ParseError> {
    let mut qp = ConvexQP::new();
    let mut nvars = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let err = |msg: &str| ParseError { line, msg: msg.to_string() };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tok: Vec<&str> = body.split_whitespace().collect();
        let f = |k: usize| -> Result<f64, ParseError> {
            let t = tok.get(k).ok_or_else(|| err("missing field"))?;
            if *t == "inf" {
                Ok(f64::INFINITY)
            } else {
                t.parse::<f64>().map_err(|_| err(&format!("bad number '{t}'")))
            }
        };
        let u = |k: usize| -> Result<usize, ParseError> {
            let t = tok.get(k).ok_or_else(|| err("missing field"))?;
            t.parse::<usize>().map_err(|_| err(&format!("bad index '{t}'")))
        };
        match tok[0] {
            "maximize" => {}
            "vars" => {
                let n = u(1)?;
                nvars = Some(n);
                qp.linear = vec![0.0; n];
                qp.upper = vec![f64::INFINITY; n];
            }
            "rows" => {
                let m = u(1)?;
                qp.constraints = vec![Constraint { terms: vec![], sense: Sense::Le, rhs: 0.0 }; m];
            }
            "constant" => qp.constant = f(1)?,
            "var" => {
                let j = u(1)?;
                if Some(j) >= nvars {
                    return Err(err("variable index out of range"));
                }
                qp.linear[j] = f(2)?;
                qp.upper[j] = f(3)?;
            }
            "quad" => qp.quadratic.push((u(1)?, u(2)?, f(3)?)),
            "row" => {
                let i = u(1)?;
                let row = qp.constraints.get_mut(i).ok_or_else(|| err("row index out of range"))?;
                row.sense = match tok.get(2) {
                    Some(&"le") => Sense::Le,
                    Some(&"eq") => Sense::Eq,
                    _ => return Err(err("row sense must be le or eq")),
                };
                row.rhs = f(3)?;
            }
            "coef" => {
                let (i, j, v) = (u(1)?, u(2)?, f(3)?);
                let row = qp.constraints.get_mut(i).ok_or_else(|| err("row index out of range"))?;
                row.terms.push((j, v));
            }
            other => return Err(err(&format!("unknown record '{other}'"))),
        }
    }
    Ok(qp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(
            lin in prop::collection::vec(-1e6f64..1e6, 1..6),
            diag in prop::collection::vec(-10.0f64..0.0, 1..6),
            rhs in prop::collection::vec(-100.0f64..100.0, 0..4),
        ) {
            let mut qp = ConvexQP::new();
            for (k, c) in lin.iter().enumerate() {
                qp.add_var(*c, if k % 2 == 0 { f64::INFINITY } else { 3.5 });
            }
            for (k, d) in diag.iter().enumerate() {
                qp.add_quadratic(k % lin.len(), k % lin.len(), *d);
            }
            for (i, b) in rhs.iter().enumerate() {
                let sense = if i % 2 == 0 { Sense::Le } else { Sense::Eq };
                qp.add_constraint(vec![(i % lin.len(), 1.0 / 3.0)], sense, *b);
            }
            qp.constant = 0.1;
            prop_assert_eq!(parse(&write(&qp)).unwrap(), qp);
        }
    }

    #[test]
    fn rejects_unknown_records() {
        let e = parse("vars 1\nbogus 1\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
