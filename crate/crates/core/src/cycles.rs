//! Cycles and paths in k-graphs, their validators, and the gluing of
//! prepaths and connecting paths into one loose cycle.
//!
//! Every structure carries its vertex order together with an explicit edge
//! list, so a certificate can be re-checked without any search. Validators
//! return the first violation found as a machine-readable record.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{KGraph, Vertex};

/// Cyclic order plus covering edges; each edge is k cyclically consecutive
/// vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericCycle {
    pub order: Vec<Vertex>,
    pub cover: Vec<Vec<Vertex>>,
}

/// Cyclic order whose every k-window is an edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightCycle {
    pub order: Vec<Vertex>,
}

/// Loose cycle: edges listed in cyclic order, adjacent edges sharing exactly
/// one vertex except for at most one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LooseCycle {
    pub order: Vec<Vertex>,
    pub edges: Vec<Vec<Vertex>>,
}

/// Linear order with its edges; consecutive edges share one link vertex.
///
/// A path with one edge is valid and has every vertex as both initial and
/// final vertex. The exceptional path produced while absorbing leftover
/// vertices uses the same type and is validated with [`PathRules::relaxed`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoosePath {
    pub order: Vec<Vertex>,
    pub edges: Vec<Vec<Vertex>>,
}

/// A path together with two disjoint (k-2)-sets: adding a vertex `x` with
/// `{x, first} + initial_set` an edge (and symmetrically at the end) gives a
/// longer path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prepath {
    pub core: LoosePath,
    pub initial_set: Vec<Vertex>,
    pub final_set: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    #[error("structure has no vertices or no edges")]
    Empty,
    #[error("a loose cycle needs at least 3 edges, found {edges}")]
    TooFewEdges { edges: usize },
    #[error("vertex {vertex} appears more than once in the order")]
    RepeatedVertex { vertex: Vertex },
    #[error("vertex {vertex} is not a vertex of the host")]
    UnknownVertex { vertex: Vertex },
    #[error("edge {edge} does not have k vertices")]
    WrongEdgeSize { edge: usize },
    #[error("edge {edge} is not an edge of the host")]
    MissingEdge { edge: usize },
    #[error("edge {edge} is not k consecutive vertices of the order")]
    NotConsecutive { edge: usize },
    #[error("edge {edge} is out of sequence")]
    EdgesOutOfOrder { edge: usize },
    #[error("consecutive vertices at positions {position} and {position}+1 share no edge")]
    UncoveredPair { position: usize },
    #[error("path edges do not span the order from end to end")]
    PathEnds,
    #[error("edges {first} and {second} share {overlap} vertices")]
    BadOverlap {
        first: usize,
        second: usize,
        overlap: usize,
    },
    #[error("more than one exceptional pair: {pairs:?}")]
    MultipleExceptionalPairs { pairs: Vec<[usize; 2]> },
    #[error("exceptional pair {found:?} inconsistent with order {order} (k - 1 = {modulus})")]
    ExceptionalPairMismatch {
        found: Option<[usize; 2]>,
        order: usize,
        modulus: usize,
    },
    #[error("declared exceptional pair {declared:?} differs from actual {actual:?}")]
    DeclaredExceptionalPair {
        declared: Option<[usize; 2]>,
        actual: Option<[usize; 2]>,
    },
    #[error("{vertices} vertices is inconsistent with {edges} edges")]
    VertexCount { vertices: usize, edges: usize },
    #[error("order covers {covered} of the host's {n} vertices")]
    NotSpanning { covered: usize, n: usize },
    #[error("prepath end set has {got} vertices, expected {expected}")]
    PrepathSetSize { expected: usize, got: usize },
    #[error("prepath vertex {vertex} is used twice")]
    PrepathOverlap { vertex: Vertex },
}

/// Which adjacent edge pairs of a path may overlap in more than one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PathRules {
    pub relaxed_first_pair: bool,
}

impl PathRules {
    pub const STRICT: PathRules = PathRules {
        relaxed_first_pair: false,
    };

    pub fn relaxed() -> Self {
        PathRules {
            relaxed_first_pair: true,
        }
    }
}

fn check_order(g: &KGraph, order: &[Vertex]) -> Result<Vec<usize>, Violation> {
    let mut position = vec![usize::MAX; g.n()];
    for (i, &v) in order.iter().enumerate() {
        if v >= g.n() {
            return Err(Violation::UnknownVertex { vertex: v });
        }
        if position[v] != usize::MAX {
            return Err(Violation::RepeatedVertex { vertex: v });
        }
        position[v] = i;
    }
    Ok(position)
}

/// Checks size, membership in `g` and that each edge is a window of the
/// order; returns the window start of every edge.
fn window_starts(
    g: &KGraph,
    position: &[usize],
    len: usize,
    edges: &[Vec<Vertex>],
    cyclic: bool,
) -> Result<Vec<usize>, Violation> {
    let k = g.k();
    let mut starts = Vec::with_capacity(edges.len());
    for (idx, e) in edges.iter().enumerate() {
        let distinct: BTreeSet<_> = e.iter().collect();
        if e.len() != k || distinct.len() != k {
            return Err(Violation::WrongEdgeSize { edge: idx });
        }
        if e.iter().any(|&v| v >= g.n() || position[v] == usize::MAX) {
            return Err(Violation::NotConsecutive { edge: idx });
        }
        if !g.contains_edge(e) {
            return Err(Violation::MissingEdge { edge: idx });
        }
        let pos: BTreeSet<usize> = e.iter().map(|&v| position[v]).collect();
        let start = if !cyclic {
            let lo = *pos.first().unwrap();
            (*pos.last().unwrap() == lo + k - 1).then_some(lo)
        } else if k == len {
            Some(0)
        } else {
            // The start is the unique position whose cyclic predecessor is
            // outside the edge.
            let mut found = pos
                .iter()
                .copied()
                .filter(|&p| !pos.contains(&((p + len - 1) % len)));
            match (found.next(), found.next()) {
                (Some(p), None) => Some(p),
                _ => None,
            }
        };
        match start {
            Some(s) => starts.push(s),
            None => return Err(Violation::NotConsecutive { edge: idx }),
        }
    }
    Ok(starts)
}

fn overlap(a: &[Vertex], b: &[Vertex]) -> usize {
    a.iter().filter(|v| b.contains(v)).count()
}

/// Marks the consecutive pairs covered by windows starting at `starts`.
fn covered_pairs(len: usize, k: usize, starts: &[usize], cyclic: bool) -> Vec<bool> {
    let pairs = if cyclic { len } else { len.saturating_sub(1) };
    let mut covered = vec![false; pairs];
    for &s in starts {
        if cyclic && k == len {
            covered.iter_mut().for_each(|c| *c = true);
            continue;
        }
        for p in s..s + k - 1 {
            if cyclic {
                covered[p % len] = true;
            } else if p < pairs {
                covered[p] = true;
            }
        }
    }
    covered
}

pub fn validate_generic_cycle(
    g: &KGraph,
    c: &GenericCycle,
    hamilton: bool,
) -> Result<(), Violation> {
    if c.order.is_empty() || c.cover.is_empty() {
        return Err(Violation::Empty);
    }
    let position = check_order(g, &c.order)?;
    let starts = window_starts(g, &position, c.order.len(), &c.cover, true)?;
    let covered = covered_pairs(c.order.len(), g.k(), &starts, true);
    if let Some(p) = covered.iter().position(|&c| !c) {
        return Err(Violation::UncoveredPair { position: p });
    }
    check_spanning(g, c.order.len(), hamilton)
}

pub fn validate_tight_cycle(g: &KGraph, c: &TightCycle, hamilton: bool) -> Result<(), Violation> {
    validate_generic_cycle(g, &c.to_generic(g.k()), hamilton)
}

fn check_spanning(g: &KGraph, covered: usize, hamilton: bool) -> Result<(), Violation> {
    if hamilton && covered != g.n() {
        return Err(Violation::NotSpanning { covered, n: g.n() });
    }
    Ok(())
}

pub fn validate_loose_path(g: &KGraph, p: &LoosePath) -> Result<(), Violation> {
    validate_path_with(g, p, PathRules::STRICT)
}

/// Path validation; with relaxed rules the first two edges may share
/// anywhere from 1 to k-1 vertices.
pub fn validate_path_with(g: &KGraph, p: &LoosePath, rules: PathRules) -> Result<(), Violation> {
    if p.order.is_empty() || p.edges.is_empty() {
        return Err(Violation::Empty);
    }
    let k = g.k();
    let position = check_order(g, &p.order)?;
    let starts = window_starts(g, &position, p.order.len(), &p.edges, false)?;
    if let Some(i) = (1..starts.len()).find(|&i| starts[i] <= starts[i - 1]) {
        return Err(Violation::EdgesOutOfOrder { edge: i });
    }
    if starts[0] != 0 || starts[starts.len() - 1] + k != p.order.len() {
        return Err(Violation::PathEnds);
    }
    let mut extra = 0;
    for i in 1..p.edges.len() {
        let o = overlap(&p.edges[i - 1], &p.edges[i]);
        let allowed = if i == 1 && rules.relaxed_first_pair {
            (1..k).contains(&o)
        } else {
            o == 1
        };
        if !allowed {
            return Err(Violation::BadOverlap {
                first: i - 1,
                second: i,
                overlap: o,
            });
        }
        extra += o - 1;
    }
    let e = p.edges.len();
    if p.order.len() + extra != e * (k - 1) + 1 {
        return Err(Violation::VertexCount {
            vertices: p.order.len(),
            edges: e,
        });
    }
    Ok(())
}

pub fn validate_loose_cycle(g: &KGraph, c: &LooseCycle, hamilton: bool) -> Result<(), Violation> {
    if c.order.is_empty() || c.edges.is_empty() {
        return Err(Violation::Empty);
    }
    let m = c.edges.len();
    if m < 3 {
        return Err(Violation::TooFewEdges { edges: m });
    }
    let (n, k) = (c.order.len(), g.k());
    let position = check_order(g, &c.order)?;
    let starts = window_starts(g, &position, n, &c.edges, true)?;
    let descents: Vec<usize> = (0..m)
        .filter(|&i| starts[(i + 1) % m] <= starts[i])
        .collect();
    if descents.len() != 1 {
        let edge = descents.get(1).map_or(0, |&i| (i + 1) % m);
        return Err(Violation::EdgesOutOfOrder { edge });
    }
    let covered = covered_pairs(n, k, &starts, true);
    if let Some(p) = covered.iter().position(|&c| !c) {
        return Err(Violation::UncoveredPair { position: p });
    }
    let mut exceptional = Vec::new();
    let mut extra = 0;
    for i in 0..m {
        let j = (i + 1) % m;
        let o = overlap(&c.edges[i], &c.edges[j]);
        if o == 0 || o >= k {
            return Err(Violation::BadOverlap {
                first: i,
                second: j,
                overlap: o,
            });
        }
        if o > 1 {
            exceptional.push([i, j]);
            extra += o - 1;
        }
    }
    if exceptional.len() > 1 {
        return Err(Violation::MultipleExceptionalPairs { pairs: exceptional });
    }
    let found = exceptional.first().copied();
    if found.is_some() != (n % (k - 1) != 0) {
        return Err(Violation::ExceptionalPairMismatch {
            found,
            order: n,
            modulus: k - 1,
        });
    }
    if m * (k - 1) != n + extra {
        return Err(Violation::VertexCount { vertices: n, edges: m });
    }
    check_spanning(g, n, hamilton)
}

impl TightCycle {
    pub fn windows(&self, k: usize) -> Vec<Vec<Vertex>> {
        let n = self.order.len();
        if n < k {
            return Vec::new();
        }
        let count = if n == k { 1 } else { n };
        (0..count)
            .map(|s| (0..k).map(|i| self.order[(s + i) % n]).collect())
            .collect()
    }

    pub fn to_generic(&self, k: usize) -> GenericCycle {
        GenericCycle {
            order: self.order.clone(),
            cover: self.windows(k),
        }
    }
}

impl LooseCycle {
    /// The adjacent pair sharing more than one vertex, if any.
    pub fn exceptional_pair(&self) -> Option<[usize; 2]> {
        let m = self.edges.len();
        (0..m)
            .map(|i| [i, (i + 1) % m])
            .find(|&[i, j]| m >= 2 && overlap(&self.edges[i], &self.edges[j]) > 1)
    }

    /// Canonical edge set, independent of rotation and direction.
    pub fn edge_set(&self) -> BTreeSet<Vec<Vertex>> {
        self.edges
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.sort_unstable();
                e
            })
            .collect()
    }
}

impl LoosePath {
    pub fn first(&self) -> Option<Vertex> {
        self.order.first().copied()
    }

    pub fn last(&self) -> Option<Vertex> {
        self.order.last().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn reversed(&self) -> LoosePath {
        LoosePath {
            order: self.order.iter().rev().copied().collect(),
            edges: self.edges.iter().rev().cloned().collect(),
        }
    }
}

impl Prepath {
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.initial_set
            .iter()
            .chain(&self.core.order)
            .chain(&self.final_set)
            .copied()
    }

    /// Checks the set sizes and disjointness, and that the core path is valid
    /// under the given rules.
    pub fn validate(&self, g: &KGraph, rules: PathRules) -> Result<(), Violation> {
        for set in [&self.initial_set, &self.final_set] {
            if set.len() + 2 != g.k() {
                return Err(Violation::PrepathSetSize {
                    expected: g.k() - 2,
                    got: set.len(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for v in self.vertices() {
            if !seen.insert(v) {
                return Err(Violation::PrepathOverlap { vertex: v });
            }
        }
        validate_path_with(g, &self.core, rules)
    }

    /// Vertices `x` outside the prepath for which `{x, first} + I` is an edge.
    pub fn possible_initial(&self, g: &KGraph) -> Vec<Vertex> {
        self.possible_ends(g, self.core.first(), &self.initial_set)
    }

    pub fn possible_final(&self, g: &KGraph) -> Vec<Vertex> {
        self.possible_ends(g, self.core.last(), &self.final_set)
    }

    fn possible_ends(&self, g: &KGraph, end: Option<Vertex>, set: &[Vertex]) -> Vec<Vertex> {
        let Some(end) = end else { return Vec::new() };
        let used: BTreeSet<Vertex> = self.vertices().collect();
        let mut t = set.to_vec();
        t.push(end);
        g.neighbourhood(&t)
            .unwrap_or_default()
            .into_iter()
            .filter(|v| !used.contains(v))
            .collect()
    }
}

/// Initial, final and link vertices of a path, each sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extremities {
    pub initial: Vec<Vertex>,
    pub final_vertices: Vec<Vertex>,
    pub links: Vec<Vertex>,
}

pub fn extremities(p: &LoosePath) -> Extremities {
    let sorted = |it: &mut dyn Iterator<Item = Vertex>| {
        let mut v: Vec<Vertex> = it.collect();
        v.sort_unstable();
        v
    };
    let e = &p.edges;
    match e.len() {
        0 => Extremities {
            initial: Vec::new(),
            final_vertices: Vec::new(),
            links: Vec::new(),
        },
        1 => Extremities {
            initial: sorted(&mut e[0].iter().copied()),
            final_vertices: sorted(&mut e[0].iter().copied()),
            links: Vec::new(),
        },
        m => {
            let initial = sorted(&mut e[0].iter().copied().filter(|v| !e[1].contains(v)));
            let final_vertices =
                sorted(&mut e[m - 1].iter().copied().filter(|v| !e[m - 2].contains(v)));
            let links = sorted(
                &mut p
                    .order
                    .iter()
                    .copied()
                    .filter(|v| e.iter().filter(|edge| edge.contains(v)).count() >= 2),
            );
            Extremities {
                initial,
                final_vertices,
                links,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConcatError {
    #[error("need equally many prepaths and connecting paths, at least one each")]
    Shape,
    #[error("gluing edge {edge:?} before prepath {junction} is missing")]
    MissingInitialGlue { junction: usize, edge: Vec<Vertex> },
    #[error("gluing edge {edge:?} after prepath {junction} is missing")]
    MissingFinalGlue { junction: usize, edge: Vec<Vertex> },
    #[error("concatenation is not a loose cycle: {0}")]
    Invalid(Violation),
}

/// Joins `prepaths[0], connectors[0], prepaths[1], ..., connectors[l]` into
/// a cycle. The final set of each prepath is glued to the first vertex of
/// the following connector, and the last vertex of each connector to the
/// initial set of the next prepath (cyclically).
pub fn concatenate(
    g: &KGraph,
    prepaths: &[Prepath],
    connectors: &[LoosePath],
) -> Result<LooseCycle, ConcatError> {
    let parts = prepaths.len();
    if parts == 0 || connectors.len() != parts {
        return Err(ConcatError::Shape);
    }
    if prepaths.iter().any(|p| p.core.is_empty()) || connectors.iter().any(|c| c.is_empty()) {
        return Err(ConcatError::Shape);
    }
    let mut order = Vec::new();
    let mut edges = Vec::new();
    for j in 0..parts {
        let pre = &prepaths[j];
        let before = connectors[(j + parts - 1) % parts].last().unwrap();
        let after = connectors[j].first().unwrap();
        let mut glue_in = vec![before];
        glue_in.extend(&pre.initial_set);
        glue_in.push(pre.core.first().unwrap());
        if !g.contains_edge(&glue_in) {
            return Err(ConcatError::MissingInitialGlue {
                junction: j,
                edge: glue_in,
            });
        }
        let mut glue_out = vec![pre.core.last().unwrap()];
        glue_out.extend(&pre.final_set);
        glue_out.push(after);
        if !g.contains_edge(&glue_out) {
            return Err(ConcatError::MissingFinalGlue {
                junction: j,
                edge: glue_out,
            });
        }
        order.extend(&pre.initial_set);
        order.extend(&pre.core.order);
        order.extend(&pre.final_set);
        order.extend(&connectors[j].order);
        edges.push(glue_in);
        edges.extend(pre.core.edges.iter().cloned());
        edges.push(glue_out);
        edges.extend(connectors[j].edges.iter().cloned());
    }
    let cycle = LooseCycle { order, edges };
    validate_loose_cycle(g, &cycle, false).map_err(ConcatError::Invalid)?;
    Ok(cycle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    LoosePath,
    LooseCycle,
    GenericCycle,
    TightCycle,
}

/// Self-contained witness that can be re-checked against a host graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub order: Vec<Vertex>,
    pub edges: Vec<Vec<Vertex>>,
    pub exceptional_pair: Option<[usize; 2]>,
}

impl Certificate {
    pub fn loose_cycle(c: &LooseCycle) -> Self {
        Certificate {
            kind: CertificateKind::LooseCycle,
            order: c.order.clone(),
            edges: c.edges.clone(),
            exceptional_pair: c.exceptional_pair(),
        }
    }

    pub fn loose_path(p: &LoosePath) -> Self {
        Certificate {
            kind: CertificateKind::LoosePath,
            order: p.order.clone(),
            edges: p.edges.clone(),
            exceptional_pair: None,
        }
    }

    pub fn generic_cycle(c: &GenericCycle) -> Self {
        Certificate {
            kind: CertificateKind::GenericCycle,
            order: c.order.clone(),
            edges: c.cover.clone(),
            exceptional_pair: None,
        }
    }

    pub fn tight_cycle(c: &TightCycle, k: usize) -> Self {
        Certificate {
            kind: CertificateKind::TightCycle,
            order: c.order.clone(),
            edges: c.windows(k),
            exceptional_pair: None,
        }
    }

    /// Re-checks the witness against `g`.
    pub fn check(&self, g: &KGraph, hamilton: bool) -> Result<(), Violation> {
        match self.kind {
            CertificateKind::LoosePath => {
                let p = LoosePath {
                    order: self.order.clone(),
                    edges: self.edges.clone(),
                };
                validate_loose_path(g, &p)?;
                check_spanning(g, p.order.len(), hamilton)
            }
            CertificateKind::LooseCycle => {
                let c = LooseCycle {
                    order: self.order.clone(),
                    edges: self.edges.clone(),
                };
                validate_loose_cycle(g, &c, hamilton)?;
                let actual = c.exceptional_pair();
                let same = match (self.exceptional_pair, actual) {
                    (None, None) => true,
                    (Some([a, b]), Some([c, d])) => (a == c && b == d) || (a == d && b == c),
                    _ => false,
                };
                if !same {
                    return Err(Violation::DeclaredExceptionalPair {
                        declared: self.exceptional_pair,
                        actual,
                    });
                }
                Ok(())
            }
            CertificateKind::GenericCycle => validate_generic_cycle(
                g,
                &GenericCycle {
                    order: self.order.clone(),
                    cover: self.edges.clone(),
                },
                hamilton,
            ),
            CertificateKind::TightCycle => {
                let t = TightCycle {
                    order: self.order.clone(),
                };
                validate_tight_cycle(g, &t, hamilton)?;
                if !self.edges.is_empty() {
                    validate_generic_cycle(
                        g,
                        &GenericCycle {
                            order: self.order.clone(),
                            cover: self.edges.clone(),
                        },
                        hamilton,
                    )?;
                }
                Ok(())
            }
        }
    }

    /// JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("certificate serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(order: &[Vertex], edges: &[&[Vertex]]) -> LoosePath {
        LoosePath {
            order: order.to_vec(),
            edges: edges.iter().map(|e| e.to_vec()).collect(),
        }
    }

    #[test]
    fn single_edge_path_is_valid() {
        let g = KGraph::complete(3, 3).unwrap();
        let p = path(&[0, 1, 2], &[&[0, 1, 2]]);
        assert_eq!(validate_loose_path(&g, &p), Ok(()));
        let x = extremities(&p);
        assert_eq!(x.initial, vec![0, 1, 2]);
        assert_eq!(x.final_vertices, vec![0, 1, 2]);
        assert!(x.links.is_empty());
    }

    #[test]
    fn two_edge_path_extremities() {
        let g = KGraph::complete(5, 3).unwrap();
        let p = path(&[0, 1, 2, 3, 4], &[&[0, 1, 2], &[2, 3, 4]]);
        assert_eq!(validate_loose_path(&g, &p), Ok(()));
        let x = extremities(&p);
        assert_eq!(x.initial, vec![0, 1]);
        assert_eq!(x.final_vertices, vec![3, 4]);
        assert_eq!(x.links, vec![2]);
    }

    #[test]
    fn path_overlap_two_is_rejected_unless_relaxed() {
        let g = KGraph::complete(4, 3).unwrap();
        let p = path(&[0, 1, 2, 3], &[&[0, 1, 2], &[1, 2, 3]]);
        assert_eq!(
            validate_loose_path(&g, &p),
            Err(Violation::BadOverlap {
                first: 0,
                second: 1,
                overlap: 2
            })
        );
        assert_eq!(validate_path_with(&g, &p, PathRules::relaxed()), Ok(()));
    }

    #[test]
    fn path_missing_edge_and_bad_windows() {
        let g = KGraph::new(5, 3, [[0, 1, 2]]).unwrap();
        let p = path(&[0, 1, 2, 3, 4], &[&[0, 1, 2], &[2, 3, 4]]);
        assert_eq!(validate_loose_path(&g, &p), Err(Violation::MissingEdge { edge: 1 }));
        let g = KGraph::complete(5, 3).unwrap();
        let p = path(&[0, 1, 2, 3, 4], &[&[0, 1, 3], &[2, 3, 4]]);
        assert_eq!(validate_loose_path(&g, &p), Err(Violation::NotConsecutive { edge: 0 }));
        let p = path(&[0, 1, 2, 3, 4, 5], &[&[0, 1, 2], &[2, 3, 4]]);
        let g6 = KGraph::complete(6, 3).unwrap();
        assert_eq!(validate_loose_path(&g6, &p), Err(Violation::PathEnds));
        let p = path(&[0, 1, 2, 3, 4], &[&[2, 3, 4], &[0, 1, 2]]);
        assert_eq!(validate_loose_path(&g, &p), Err(Violation::EdgesOutOfOrder { edge: 1 }));
        let p = path(&[0, 1, 1], &[&[0, 1, 2]]);
        assert_eq!(validate_loose_path(&g, &p), Err(Violation::RepeatedVertex { vertex: 1 }));
    }

    #[test]
    fn loose_cycle_without_exception() {
        let g = KGraph::complete(8, 3).unwrap();
        let c = LooseCycle {
            order: (0..8).collect(),
            edges: vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 6], vec![6, 7, 0]],
        };
        assert_eq!(validate_loose_cycle(&g, &c, true), Ok(()));
        assert_eq!(c.exceptional_pair(), None);
    }

    #[test]
    fn loose_cycle_with_one_exceptional_pair() {
        let g = KGraph::complete(9, 3).unwrap();
        // 5 edges, 5 * 2 - (2 - 1) = 9.
        let c = LooseCycle {
            order: (0..9).collect(),
            edges: vec![
                vec![0, 1, 2],
                vec![2, 3, 4],
                vec![4, 5, 6],
                vec![6, 7, 8],
                vec![7, 8, 0],
            ],
        };
        assert_eq!(validate_loose_cycle(&g, &c, true), Ok(()));
        assert_eq!(c.exceptional_pair(), Some([3, 4]));
        let cert = Certificate::loose_cycle(&c);
        assert_eq!(cert.check(&g, true), Ok(()));
        let mut lying = cert.clone();
        lying.exceptional_pair = None;
        assert!(matches!(
            lying.check(&g, true),
            Err(Violation::DeclaredExceptionalPair { .. })
        ));
    }

    #[test]
    fn loose_cycle_rejects_two_exceptional_pairs() {
        let g = KGraph::complete(8, 3).unwrap();
        let c = LooseCycle {
            order: (0..8).collect(),
            edges: vec![
                vec![0, 1, 2],
                vec![1, 2, 3],
                vec![3, 4, 5],
                vec![5, 6, 7],
                vec![6, 7, 0],
            ],
        };
        assert!(matches!(
            validate_loose_cycle(&g, &c, true),
            Err(Violation::MultipleExceptionalPairs { .. })
        ));
    }

    #[test]
    fn loose_cycle_hamilton_flag() {
        let g = KGraph::complete(9, 3).unwrap();
        let c = LooseCycle {
            order: (0..8).collect(),
            edges: vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 6], vec![6, 7, 0]],
        };
        assert_eq!(validate_loose_cycle(&g, &c, false), Ok(()));
        assert_eq!(
            validate_loose_cycle(&g, &c, true),
            Err(Violation::NotSpanning { covered: 8, n: 9 })
        );
    }

    #[test]
    fn generic_cycle_checks() {
        let g = KGraph::complete(6, 3).unwrap();
        let ok = GenericCycle {
            order: (0..6).collect(),
            cover: vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 0]],
        };
        assert_eq!(validate_generic_cycle(&g, &ok, true), Ok(()));
        let gap = GenericCycle {
            order: (0..6).collect(),
            cover: vec![vec![0, 1, 2], vec![3, 4, 5]],
        };
        assert_eq!(
            validate_generic_cycle(&g, &gap, true),
            Err(Violation::UncoveredPair { position: 2 })
        );
        let skew = GenericCycle {
            order: (0..6).collect(),
            cover: vec![vec![0, 2, 4]],
        };
        assert_eq!(
            validate_generic_cycle(&g, &skew, false),
            Err(Violation::NotConsecutive { edge: 0 })
        );
    }

    #[test]
    fn tight_cycle_windows() {
        let g = KGraph::complete(5, 3).unwrap();
        let t = TightCycle { order: vec![4, 2, 0, 1, 3] };
        assert_eq!(t.windows(3).len(), 5);
        assert_eq!(validate_tight_cycle(&g, &t, true), Ok(()));
        let sparse = KGraph::new(5, 3, [[0, 1, 2]]).unwrap();
        assert!(validate_tight_cycle(&sparse, &t, true).is_err());
    }

    #[test]
    fn concatenate_single_junction() {
        let g = KGraph::complete(8, 3).unwrap();
        let pre = Prepath {
            core: path(&[1, 2, 3], &[&[1, 2, 3]]),
            initial_set: vec![0],
            final_set: vec![4],
        };
        let bare = path(&[5, 6, 7], &[]);
        assert_eq!(concatenate(&g, std::slice::from_ref(&pre), &[bare]), Err(ConcatError::Shape));
        let conn = path(&[5, 6, 7], &[&[5, 6, 7]]);
        let c = concatenate(&g, &[pre], &[conn]).unwrap();
        assert_eq!(c.order, vec![0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(validate_loose_cycle(&g, &c, true), Ok(()));
    }

    #[test]
    fn concatenate_reports_missing_glue() {
        let edges: Vec<Vec<usize>> = vec![vec![1, 2, 3], vec![5, 6, 7], vec![3, 4, 5]];
        let g = KGraph::new(8, 3, &edges).unwrap();
        let pre = Prepath {
            core: path(&[1, 2, 3], &[&[1, 2, 3]]),
            initial_set: vec![0],
            final_set: vec![4],
        };
        let conn = path(&[5, 6, 7], &[&[5, 6, 7]]);
        assert_eq!(
            concatenate(&g, &[pre], &[conn]),
            Err(ConcatError::MissingInitialGlue {
                junction: 0,
                edge: vec![7, 0, 1]
            })
        );
    }

    #[test]
    fn certificate_json_has_sorted_keys() {
        let p = path(&[0, 1, 2], &[&[0, 1, 2]]);
        let json = Certificate::loose_path(&p).to_json();
        let keys: Vec<usize> = ["edges", "exceptional_pair", "kind", "order"]
            .iter()
            .map(|k| json.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back.kind, CertificateKind::LoosePath);
    }
}
