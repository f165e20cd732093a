use serde::{Deserialize, Serialize};

use super::EdgeWeightMatrix;
use crate::error::{Error, Result};

/// Largest node count accepted by [`brute_force_arborescence`].
pub const BRUTE_FORCE_MAX_NODES: usize = 8;

/// A rooted directed spanning tree, edges oriented away from `root`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arborescence {
    pub root: usize,
    /// `parents[i]` is the parent of node `i`; `None` only at the root.
    pub parents: Vec<Option<usize>>,
    pub total_weight: f64,
}

impl Arborescence {
    /// Builds and validates a tree from a parent map, summing `w[parent(i)][i]`
    /// in node order.
    pub fn from_parents(parents: Vec<Option<usize>>, w: &EdgeWeightMatrix) -> Result<Self> {
        if parents.len() != w.node_count() {
            return Err(Error::DimensionMismatch {
                expected: w.node_count(),
                found: parents.len(),
            });
        }
        let root = check_tree(&parents)?;
        let total_weight = total(&parents, w);
        Ok(Self {
            root,
            parents,
            total_weight,
        })
    }

    /// A tree without weights (ground truths); `total_weight` is 0.
    pub fn unweighted(parents: Vec<Option<usize>>) -> Result<Self> {
        let root = check_tree(&parents)?;
        Ok(Self {
            root,
            parents,
            total_weight: 0.0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.parents.len()
    }

    /// Directed edges `(parent, child)` in child order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (p, c)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let root = check_tree(&self.parents)?;
        if root != self.root {
            return Err(Error::invalid("root field disagrees with the parent map"));
        }
        Ok(())
    }
}

/// Checks that `parents` describes a spanning arborescence and returns its
/// root.
fn check_tree(parents: &[Option<usize>]) -> Result<usize> {
    let m = parents.len();
    if m == 0 {
        return Err(Error::invalid("empty tree"));
    }
    let roots: Vec<usize> = (0..m).filter(|&i| parents[i].is_none()).collect();
    let [root] = roots[..] else {
        return Err(Error::invalid(format!("expected exactly one root, found {}", roots.len())));
    };
    for (i, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            if p >= m || p == i {
                return Err(Error::invalid(format!("node {i} has invalid parent {p}")));
            }
        }
    }
    if !reaches_root(parents, root) {
        return Err(Error::invalid("parent map contains a cycle"));
    }
    Ok(root)
}

fn reaches_root(parents: &[Option<usize>], root: usize) -> bool {
    let m = parents.len();
    (0..m).all(|start| {
        let mut v = start;
        for _ in 0..m {
            match parents[v] {
                None => return v == root,
                Some(p) => v = p,
            }
        }
        false
    })
}

fn total(parents: &[Option<usize>], w: &EdgeWeightMatrix) -> f64 {
    parents
        .iter()
        .enumerate()
        .filter_map(|(c, p)| p.map(|p| w.get(p, c)))
        .sum()
}

#[derive(Clone, Copy, Debug)]
struct Edge {
    from: usize,
    to: usize,
    weight: f64,
}

/// Chu–Liu/Edmonds for a fixed root. Returns, per node, the index into
/// `edges` of its incoming tree edge (`None` at the root).
///
/// Every non-root node must have at least one incoming edge. Ties between
/// incoming edges go to the lower source index.
fn chu_liu_edmonds(n: usize, root: usize, edges: &[Edge]) -> Vec<Option<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (k, e) in edges.iter().enumerate() {
        if e.to == root || e.from == e.to {
            continue;
        }
        let better = match best[e.to] {
            None => true,
            Some(b) => {
                let cur = edges[b];
                e.weight > cur.weight || (e.weight == cur.weight && e.from < cur.from)
            }
        };
        if better {
            best[e.to] = Some(k);
        }
    }
    let parent_of = |v: usize| edges[best[v].expect("every non-root node has an incoming edge")].from;

    // Contract every cycle of the best-incoming graph.
    const UNSET: usize = usize::MAX;
    let mut comp = vec![UNSET; n];
    let mut stamp = vec![UNSET; n];
    let mut in_cycle = vec![false; n];
    let mut next_id = 0;
    for start in 0..n {
        let mut v = start;
        while v != root && stamp[v] == UNSET {
            stamp[v] = start;
            v = parent_of(v);
        }
        if v != root && stamp[v] == start && comp[v] == UNSET {
            let id = next_id;
            next_id += 1;
            let mut u = v;
            loop {
                comp[u] = id;
                in_cycle[u] = true;
                u = parent_of(u);
                if u == v {
                    break;
                }
            }
        }
    }
    if next_id == 0 {
        return best;
    }
    for c in comp.iter_mut().filter(|c| **c == UNSET) {
        *c = next_id;
        next_id += 1;
    }

    let mut sub_edges = Vec::with_capacity(edges.len());
    let mut origin = Vec::with_capacity(edges.len());
    for (k, e) in edges.iter().enumerate() {
        let (u, v) = (comp[e.from], comp[e.to]);
        if u == v {
            continue;
        }
        let weight = if in_cycle[e.to] {
            e.weight - edges[best[e.to].expect("cycle node")].weight
        } else {
            e.weight
        };
        sub_edges.push(Edge { from: u, to: v, weight });
        origin.push(k);
    }
    let sub = chu_liu_edmonds(next_id, comp[root], &sub_edges);

    // Expand: keep cycle edges except where the contracted solution enters.
    let mut result: Vec<Option<usize>> = (0..n).map(|v| if in_cycle[v] { best[v] } else { None }).collect();
    for s in sub.into_iter().flatten() {
        let k = origin[s];
        result[edges[k].to] = Some(k);
    }
    result
}

fn best_tree_for_root(w: &EdgeWeightMatrix, root: usize) -> Vec<Option<usize>> {
    let m = w.node_count();
    let edges: Vec<Edge> = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| Edge {
            from: i,
            to: j,
            weight: w.get(i, j),
        })
        .collect();
    chu_liu_edmonds(m, root, &edges)
        .into_iter()
        .map(|k| k.map(|k| edges[k].from))
        .collect()
}

/// Maximum-weight spanning arborescence over all roots.
///
/// Runs Chu–Liu/Edmonds once per candidate root and keeps the heaviest tree;
/// equal totals keep the lower root. Weights may be negative.
pub fn max_arborescence(w: &EdgeWeightMatrix) -> Arborescence {
    let mut best: Option<Arborescence> = None;
    for root in 0..w.node_count() {
        let parents = best_tree_for_root(w, root);
        let tree = Arborescence {
            root,
            total_weight: total(&parents, w),
            parents,
        };
        if best.as_ref().is_none_or(|b| tree.total_weight > b.total_weight) {
            best = Some(tree);
        }
    }
    best.expect("at least two nodes")
}

/// Exhaustive search over every parent map of every root.
///
/// Exact reference for [`max_arborescence`]; among equal totals the
/// lexicographically smallest `(root, parents)` wins.
pub fn brute_force_arborescence(w: &EdgeWeightMatrix) -> Result<Arborescence> {
    let m = w.node_count();
    if m > BRUTE_FORCE_MAX_NODES {
        return Err(Error::invalid(format!(
            "brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, got {m}"
        )));
    }
    let mut best: Option<Arborescence> = None;
    for root in 0..m {
        let others: Vec<usize> = (0..m).filter(|&v| v != root).collect();
        // Candidate parents of each non-root node, ascending.
        let choices: Vec<Vec<usize>> = others
            .iter()
            .map(|&v| (0..m).filter(|&p| p != v).collect())
            .collect();
        let mut digits = vec![0usize; others.len()];
        let mut parents = vec![None; m];
        loop {
            for (slot, &v) in others.iter().enumerate() {
                parents[v] = Some(choices[slot][digits[slot]]);
            }
            if reaches_root(&parents, root) {
                let t = total(&parents, w);
                if best.as_ref().is_none_or(|b| t > b.total_weight) {
                    best = Some(Arborescence {
                        root,
                        parents: parents.clone(),
                        total_weight: t,
                    });
                }
            }
            // Odometer, last node fastest: lexicographic order on parents.
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < choices[pos].len() {
                    break;
                }
                digits[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || digits.is_empty() {
                break;
            }
        }
    }
    best.ok_or_else(|| Error::invalid("no spanning arborescence"))
}
