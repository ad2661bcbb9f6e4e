//! Explicit constructions: alternating strings, loose paths in complete
//! k-partite k-graphs, the extremal graph without Hamilton cycles and the
//! A_k gadget.
//!
//! Class and character indices are 0-based throughout.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycles::LoosePath;
use crate::hypergraph::{KGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConstructError> {
    Err(ConstructError::InvalidInput(msg.into()))
}

/// A string of length `a.iter().sum()` with character `i` occurring `a[i]`
/// times, no two equal neighbours, first character not `s` and last not `t`.
///
/// Positions are filled odd-first (0, 2, 4, ... then 1, 3, ...) one whole
/// character block at a time. Block order: if `s != t`, `t` first, `s`
/// last, the rest ascending; if `s == t` and the length is odd, the others
/// ascending then `s`; if even, the smallest nonempty `i != s`, then `s`,
/// then the rest ascending.
pub fn build_string(ell: usize, a: &[usize], s: usize, t: usize) -> Result<Vec<usize>, ConstructError> {
    let k = a.len();
    if s >= k || t >= k {
        return invalid(format!("s={s}, t={t} out of range for {k} characters"));
    }
    if a.iter().sum::<usize>() != ell {
        return invalid(format!("counts sum to {}, expected {ell}", a.iter().sum::<usize>()));
    }
    if let Some(i) = (0..k).find(|&i| 2 * a[i] >= ell) {
        return invalid(format!("a[{i}] = {} is not below {ell}/2", a[i]));
    }
    let mut blocks: Vec<usize> = Vec::with_capacity(k);
    if s != t {
        blocks.push(t);
        blocks.extend((0..k).filter(|&i| i != s && i != t));
        blocks.push(s);
    } else if ell % 2 == 1 {
        blocks.extend((0..k).filter(|&i| i != s));
        blocks.push(s);
    } else {
        let first = (0..k)
            .find(|&i| i != s && a[i] > 0)
            .expect("some other character is nonempty");
        blocks.push(first);
        blocks.push(s);
        blocks.extend((0..k).filter(|&i| i != s && i != first));
    }
    let positions = (0..ell).step_by(2).chain((1..ell).step_by(2));
    let chars = blocks
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, a[c]));
    let mut out = vec![usize::MAX; ell];
    for (p, c) in positions.zip(chars) {
        out[p] = c;
    }
    Ok(out)
}

/// Disjoint vertex classes `V_0, ..., V_{k-1}`; each class keeps its own
/// order, which is the order vertices are drawn in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionedVertexSet {
    classes: Vec<Vec<Vertex>>,
}

impl PartitionedVertexSet {
    pub fn new(classes: Vec<Vec<Vertex>>) -> Result<Self, ConstructError> {
        let mut seen = BTreeSet::new();
        for v in classes.iter().flatten() {
            if !seen.insert(*v) {
                return invalid(format!("vertex {v} is in two classes"));
            }
        }
        Ok(PartitionedVertexSet { classes })
    }

    /// Classes of the given sizes over consecutive ids starting at 0.
    pub fn consecutive(sizes: &[usize]) -> Self {
        let mut next = 0;
        let classes = sizes
            .iter()
            .map(|&s| {
                let c = (next..next + s).collect();
                next += s;
                c
            })
            .collect();
        PartitionedVertexSet { classes }
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, i: usize) -> &[Vertex] {
        &self.classes[i]
    }

    pub fn classes(&self) -> &[Vec<Vertex>] {
        &self.classes
    }

    /// Smallest vertex count containing every class member.
    pub fn universe(&self) -> usize {
        self.classes.iter().flatten().max().map_or(0, |m| m + 1)
    }

    pub fn class_of(&self, v: Vertex) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&v))
    }

    /// The complete k-partite k-graph on these classes, on `universe()`
    /// vertices.
    pub fn complete_kpartite(&self) -> KGraph {
        let mut edges: Vec<Vec<Vertex>> = self
            .classes
            .iter()
            .map(|c| c.iter().copied())
            .multi_cartesian_product()
            .map(|mut e| {
                e.sort_unstable();
                e
            })
            .collect();
        edges.sort_unstable();
        KGraph::from_sorted_unique(self.universe(), self.k(), edges)
    }
}

/// A loose path with `b[i]` vertices from class `i`, its first vertex in
/// `V_s` and its last in `V_t`, all of whose edges are k-partite.
///
/// With `m = (sum b - 1)/(k-1)` edges, every `b[i]` must lie in
/// `[m/2 + 1, m]`. Link vertices follow `build_string(m-1, m - b, s, t)`,
/// then each edge receives one filler from every class it lacks.
pub fn build_loose_path_complete(
    classes: &PartitionedVertexSet,
    b: &[usize],
    s: usize,
    t: usize,
) -> Result<LoosePath, ConstructError> {
    let k = classes.k();
    if k < 2 || b.len() != k {
        return invalid(format!("need {k} >= 2 class counts, got {}", b.len()));
    }
    if s >= k || t >= k {
        return invalid(format!("s={s}, t={t} out of range for {k} classes"));
    }
    if let Some(i) = (0..k).find(|&i| b[i] > classes.class(i).len()) {
        return invalid(format!("b[{i}] = {} exceeds |V_{i}| = {}", b[i], classes.class(i).len()));
    }
    let total: usize = b.iter().sum();
    if total == 0 || !(total - 1).is_multiple_of(k - 1) {
        return invalid(format!("sum of b minus one ({}) is not divisible by {}", total as i64 - 1, k - 1));
    }
    let m = (total - 1) / (k - 1);
    if let Some(i) = (0..k).find(|&i| 2 * b[i] < m + 2 || b[i] > m) {
        return invalid(format!("b[{i}] = {} outside [{m}/2 + 1, {m}]", b[i]));
    }
    let a: Vec<usize> = b.iter().map(|&bi| m - bi).collect();
    let links_classes = build_string(m - 1, &a, s, t)?;

    let mut cursor = vec![0usize; k];
    let mut draw = |c: usize| {
        let v = classes.class(c)[cursor[c]];
        cursor[c] += 1;
        v
    };
    let initial = draw(s);
    let last = draw(t);
    let links: Vec<Vertex> = links_classes.iter().map(|&c| draw(c)).collect();

    let mut order = vec![initial];
    let mut edges = Vec::with_capacity(m);
    for j in 0..m {
        let (left, left_class) = if j == 0 {
            (initial, s)
        } else {
            (links[j - 1], links_classes[j - 1])
        };
        let (right, right_class) = if j + 1 == m {
            (last, t)
        } else {
            (links[j], links_classes[j])
        };
        let fillers: Vec<Vertex> = (0..k)
            .filter(|&c| c != left_class && c != right_class)
            .map(&mut draw)
            .collect();
        order.extend(&fillers);
        order.push(right);
        let mut e = fillers;
        e.push(left);
        e.push(right);
        e.sort_unstable();
        edges.push(e);
    }
    Ok(LoosePath { order, edges })
}

/// The extremal graph: `V_1 = {0, ..., c-2}` with `c = ceil(n/(2k-2))`,
/// edges all k-sets meeting `V_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalGraph {
    pub graph: KGraph,
    pub v1: Vec<Vertex>,
    pub v2: Vec<Vertex>,
}

pub fn extremal_v1_size(n: usize, k: usize) -> usize {
    n.div_ceil(2 * k - 2) - 1
}

pub fn extremal_construction(n: usize, k: usize) -> Result<ExtremalGraph, ConstructError> {
    if k < 3 {
        return invalid(format!("k = {k} must be at least 3"));
    }
    if n < 2 * k - 1 {
        return invalid(format!("n = {n} must be at least 2k - 1 = {}", 2 * k - 1));
    }
    let c = extremal_v1_size(n, k);
    let edges: Vec<Vec<Vertex>> = (0..n).combinations(k).filter(|e| e[0] < c).collect();
    Ok(ExtremalGraph {
        graph: KGraph::from_sorted_unique(n, k, edges),
        v1: (0..c).collect(),
        v2: (c..n).collect(),
    })
}

/// The A_k gadget: parts `U_0..U_{2k-3}` of size k-1, with
/// `U_i = {i(k-1), ..., (i+1)(k-1) - 1}`, and edges `U_i + {x}` for
/// `i >= 1`, `x` in `U_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AkGadget {
    pub graph: KGraph,
    pub parts: Vec<Vec<Vertex>>,
}

pub fn build_ak(k: usize) -> Result<AkGadget, ConstructError> {
    if k < 3 {
        return invalid(format!("k = {k} must be at least 3"));
    }
    let parts: Vec<Vec<Vertex>> = (0..2 * k - 2)
        .map(|i| (i * (k - 1)..(i + 1) * (k - 1)).collect())
        .collect();
    let mut edges: Vec<Vec<Vertex>> = parts[1..]
        .iter()
        .flat_map(|u| {
            parts[0].iter().map(move |&x| {
                let mut e = vec![x];
                e.extend(u);
                e
            })
        })
        .collect();
    edges.sort_unstable();
    let n = 2 * (k - 1) * (k - 1);
    Ok(AkGadget {
        graph: KGraph::from_sorted_unique(n, k, edges),
        parts,
    })
}
