//! Fill-reducing symmetric ordering.
//!
//! Plain minimum degree on the explicit elimination graph. The KKT systems
//! produced by the market model are chains of small per-interval blocks
//! bordered by a handful of dense first-stage columns; minimum degree keeps
//! the dense nodes to the end, which bounds the fill by
//! `(#dense + local bandwidth)` per column.

use std::collections::BTreeSet;

/// Returns a permutation `perm` such that node `perm[k]` is eliminated k-th.
/// `adj[v]` lists the neighbours of `v` (self loops are ignored).
pub(crate) fn minimum_degree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut graph: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(v, nb)| {
            let mut s: Vec<usize> = nb.iter().copied().filter(|&u| u != v).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut degree: Vec<usize> = graph.iter().map(Vec::len).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (degree[v], v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut nbrs: Vec<usize> = Vec::new();

    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        nbrs.clear();
        nbrs.append(&mut graph[v]);
        for &a in &nbrs {
            remove_sorted(&mut graph[a], v);
        }
        for (k, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[k + 1..] {
                if insert_sorted(&mut graph[a], b) {
                    insert_sorted(&mut graph[b], a);
                }
            }
        }
        for &a in &nbrs {
            let d = graph[a].len();
            if d != degree[a] {
                queue.remove(&(degree[a], a));
                degree[a] = d;
                queue.insert((d, a));
            }
        }
    }
    order
}

fn insert_sorted(v: &mut Vec<usize>, x: usize) -> bool {
    match v.binary_search(&x) {
        Ok(_) => false,
        Err(p) => {
            v.insert(p, x);
            true
        }
    }
}

fn remove_sorted(v: &mut Vec<usize>, x: usize) {
    if let Ok(p) = v.binary_search(&x) {
        v.remove(p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_center_goes_late() {
        // node 0 connected to all others
        let n = 6;
        let mut adj = vec![Vec::new(); n];
        for v in 1..n {
            adj[0].push(v);
            adj[v].push(0);
        }
        let p = minimum_degree(&adj);
        // the centre only becomes eligible once a single leaf remains
        let pos = p.iter().position(|&v| v == 0).unwrap();
        assert!(pos >= n - 2);
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn path_is_a_permutation() {
        let n = 50;
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                let mut a = Vec::new();
                if v > 0 {
                    a.push(v - 1);
                }
                if v + 1 < n {
                    a.push(v + 1);
                }
                a
            })
            .collect();
        let mut p = minimum_degree(&adj);
        p.sort_unstable();
        assert_eq!(p, (0..n).collect::<Vec<_>>());
    }
}
