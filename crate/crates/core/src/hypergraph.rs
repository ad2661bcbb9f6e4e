//! k-uniform hypergraphs on dense vertex ids.
//!
//! Edges are kept in one flat buffer, each edge sorted ascending and the edge
//! list sorted lexicographically, so iteration order is canonical and edge
//! membership is a binary search. Codegree queries go through a lazily built
//! index from (k-1)-sets to their neighbourhoods.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("uniformity must be at least 2, got {0}")]
    BadUniformity(usize),
    #[error("edge {edge:?} must consist of exactly {k} distinct vertices")]
    BadEdge { edge: Vec<Vertex>, k: usize },
    #[error("vertex {vertex} is outside 0..{n}")]
    UnknownVertex { vertex: Vertex, n: usize },
    #[error("duplicate edge {0:?}")]
    DuplicateEdge(Vec<Vertex>),
    #[error("expected {expected} distinct vertices, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("{n} vertices is fewer than k - 1 = {needed}")]
    TooFewVertices { n: usize, needed: usize },
    #[error("walk endpoints must differ")]
    SameEndpoints,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A k-uniform hypergraph on the vertex set `0..n`.
#[derive(Clone)]
pub struct KGraph {
    n: usize,
    k: usize,
    flat: Vec<Vertex>,
    incidence: Vec<Vec<usize>>,
    links: OnceLock<HashMap<Vec<Vertex>, Vec<Vertex>>>,
}

impl fmt::Debug for KGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KGraph")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl PartialEq for KGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.flat == other.flat
    }
}

impl Eq for KGraph {}

impl KGraph {
    /// Builds a graph, rejecting malformed and duplicate edges.
    pub fn new<I, E>(n: usize, k: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[Vertex]>,
    {
        if k < 2 {
            return Err(GraphError::BadUniformity(k));
        }
        let mut sorted: Vec<Vec<Vertex>> = Vec::new();
        for e in edges {
            let mut e = e.as_ref().to_vec();
            e.sort_unstable();
            if e.len() != k || e.windows(2).any(|w| w[0] == w[1]) {
                return Err(GraphError::BadEdge { edge: e, k });
            }
            if let Some(&v) = e.iter().find(|&&v| v >= n) {
                return Err(GraphError::UnknownVertex { vertex: v, n });
            }
            sorted.push(e);
        }
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].clone()));
        }
        Ok(Self::from_sorted_unique(n, k, sorted))
    }

    /// Internal constructor for edge lists already known to be valid,
    /// sorted and duplicate free.
    pub(crate) fn from_sorted_unique(n: usize, k: usize, edges: Vec<Vec<Vertex>>) -> Self {
        let mut flat = Vec::with_capacity(edges.len() * k);
        let mut incidence = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            for &v in e {
                incidence[v].push(idx);
            }
            flat.extend_from_slice(e);
        }
        KGraph {
            n,
            k,
            flat,
            incidence,
            links: OnceLock::new(),
        }
    }

    pub fn empty(n: usize, k: usize) -> Result<Self, GraphError> {
        Self::new(n, k, std::iter::empty::<Vec<Vertex>>())
    }

    /// Binomial random k-graph: every k-set is an edge independently with
    /// probability `p`, drawn from a ChaCha stream seeded by `seed`.
    pub fn random(n: usize, k: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if k < 2 {
            return Err(GraphError::BadUniformity(k));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = p.clamp(0.0, 1.0);
        let edges = (0..n).combinations(k).filter(|_| rng.gen_bool(p)).collect();
        Ok(Self::from_sorted_unique(n, k, edges))
    }

    /// The complete k-graph on `n` vertices.
    pub fn complete(n: usize, k: usize) -> Result<Self, GraphError> {
        if k < 2 {
            return Err(GraphError::BadUniformity(k));
        }
        let edges = (0..n).combinations(k).collect();
        Ok(Self::from_sorted_unique(n, k, edges))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.flat.len() / self.k
    }

    pub fn edge(&self, idx: usize) -> &[Vertex] {
        &self.flat[idx * self.k..(idx + 1) * self.k]
    }

    /// Edges in canonical (lexicographic) order.
    pub fn edges(&self) -> impl Iterator<Item = &[Vertex]> + '_ {
        self.flat.chunks_exact(self.k)
    }

    /// Indices of the edges containing `v`.
    pub fn incident(&self, v: Vertex) -> &[usize] {
        &self.incidence[v]
    }

    /// Number of edges containing `v`.
    pub fn vertex_degree(&self, v: Vertex) -> usize {
        self.incidence[v].len()
    }

    /// Index of the edge with exactly these vertices (in any order).
    pub fn edge_index(&self, vertices: &[Vertex]) -> Option<usize> {
        if vertices.len() != self.k {
            return None;
        }
        let mut key = vertices.to_vec();
        key.sort_unstable();
        let (mut lo, mut hi) = (0, self.edge_count());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.edge(mid).cmp(&key[..]) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains_edge(&self, vertices: &[Vertex]) -> bool {
        self.edge_index(vertices).is_some()
    }

    fn check_vertices(&self, vs: &[Vertex]) -> Result<(), GraphError> {
        match vs.iter().find(|&&v| v >= self.n) {
            Some(&v) => Err(GraphError::UnknownVertex { vertex: v, n: self.n }),
            None => Ok(()),
        }
    }

    fn link_index(&self) -> &HashMap<Vec<Vertex>, Vec<Vertex>> {
        self.links.get_or_init(|| {
            let mut map: HashMap<Vec<Vertex>, Vec<Vertex>> = HashMap::new();
            for e in self.edges() {
                for skip in 0..self.k {
                    let key: Vec<Vertex> = e
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    map.entry(key).or_default().push(e[skip]);
                }
            }
            for nb in map.values_mut() {
                nb.sort_unstable();
            }
            map
        })
    }

    /// `N(T) = {x : T + x is an edge}` for a (k-1)-set `T`, ascending.
    pub fn neighbourhood(&self, t: &[Vertex]) -> Result<Vec<Vertex>, GraphError> {
        let mut key = t.to_vec();
        key.sort_unstable();
        key.dedup();
        if key.len() != self.k - 1 || t.len() != self.k - 1 {
            return Err(GraphError::SizeMismatch {
                expected: self.k - 1,
                got: key.len(),
            });
        }
        self.check_vertices(&key)?;
        Ok(self.link_index().get(&key).cloned().unwrap_or_default())
    }

    /// Codegree of a (k-1)-set without allocating the neighbourhood.
    pub fn codegree(&self, t: &[Vertex]) -> Result<usize, GraphError> {
        self.neighbourhood(t).map(|nb| nb.len())
    }

    /// Minimum over all (k-1)-sets of the neighbourhood size.
    pub fn min_codegree(&self) -> Result<usize, GraphError> {
        let hist = self.codegree_histogram()?;
        Ok(hist.keys().next().copied().unwrap_or(0))
    }

    /// Map from codegree value to the number of (k-1)-sets attaining it.
    pub fn codegree_histogram(&self) -> Result<BTreeMap<usize, u128>, GraphError> {
        if self.n + 1 < self.k {
            return Err(GraphError::TooFewVertices {
                n: self.n,
                needed: self.k - 1,
            });
        }
        let total = binomial(self.n as u128, (self.k - 1) as u128);
        let index = self.link_index();
        let mut hist = BTreeMap::new();
        for nb in index.values() {
            *hist.entry(nb.len()).or_insert(0u128) += 1;
        }
        let zero = total - index.len() as u128;
        if zero > 0 {
            hist.insert(0, zero);
        }
        Ok(hist)
    }

    /// Induced subgraph on `w`, relabelled to `0..|w|`. The returned map sends
    /// new ids to old ids.
    pub fn restrict(&self, w: &[Vertex]) -> Result<(KGraph, Vec<Vertex>), GraphError> {
        self.check_vertices(w)?;
        let mut map = w.to_vec();
        map.sort_unstable();
        map.dedup();
        let mut position = vec![usize::MAX; self.n];
        for (new, &old) in map.iter().enumerate() {
            position[old] = new;
        }
        // Relabelling is monotone, so the filtered edges stay sorted.
        let edges = self
            .edges()
            .filter(|e| e.iter().all(|&v| position[v] != usize::MAX))
            .map(|e| e.iter().map(|&v| position[v]).collect())
            .collect();
        Ok((KGraph::from_sorted_unique(map.len(), self.k, edges), map))
    }

    /// Vertex classes of the reachability relation, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<Vertex>> {
        components_of(self.n, self.edges())
    }

    /// A shortest walk from `x` to `y`, or `None` if they lie in different
    /// components.
    pub fn find_walk(&self, x: Vertex, y: Vertex) -> Result<Option<Walk>, GraphError> {
        self.check_vertices(&[x, y])?;
        if x == y {
            return Err(GraphError::SameEndpoints);
        }
        let mut parent: Vec<Option<(Vertex, usize)>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        seen[x] = true;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            if u == y {
                break;
            }
            for &ei in &self.incidence[u] {
                for &v in self.edge(ei) {
                    if !seen[v] {
                        seen[v] = true;
                        parent[v] = Some((u, ei));
                        queue.push_back(v);
                    }
                }
            }
        }
        if !seen[y] {
            return Ok(None);
        }
        let mut vertices = vec![y];
        let mut edges = Vec::new();
        let mut cur = y;
        while let Some((prev, ei)) = parent[cur] {
            edges.push(self.edge(ei).to_vec());
            vertices.push(prev);
            cur = prev;
        }
        vertices.reverse();
        edges.reverse();
        Ok(Some(Walk { vertices, edges }))
    }

    /// Edge vertex sets as bitmasks, available when `n <= 64`.
    pub fn edge_masks(&self) -> Option<Vec<u64>> {
        (self.n <= 64).then(|| self.edges().map(mask_of).collect())
    }

    /// Canonical text form: `n k` then one ascending edge per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.k);
        for e in self.edges() {
            out.push_str(&e.iter().join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, GraphError> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges: Vec<Vec<Vertex>> = Vec::new();
        let mut seen: HashMap<Vec<Vertex>, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| GraphError::Parse {
                        line: line_no,
                        msg: format!("not a vertex id: {tok:?}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            let Some((n, k)) = header else {
                if nums.len() != 2 {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: "header must be \"n k\"".into(),
                    });
                }
                if nums[1] < 2 {
                    return Err(GraphError::BadUniformity(nums[1]));
                }
                header = Some((nums[0], nums[1]));
                continue;
            };
            if nums.len() != k {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("expected {k} vertex ids, found {}", nums.len()),
                });
            }
            if nums.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: "vertex ids must be strictly ascending".into(),
                });
            }
            if let Some(&v) = nums.iter().find(|&&v| v >= n) {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("vertex {v} is outside 0..{n}"),
                });
            }
            if let Some(first) = seen.insert(nums.clone(), line_no) {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("duplicate of the edge on line {first}"),
                });
            }
            edges.push(nums);
        }
        let (n, k) = header.ok_or(GraphError::Parse {
            line: 0,
            msg: "missing \"n k\" header".into(),
        })?;
        edges.sort_unstable();
        Ok(Self::from_sorted_unique(n, k, edges))
    }
}

impl FromStr for KGraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_text(s)
    }
}

/// A walk `x_0, e_1, x_1, ..., e_l, x_l`; edges are stored as vertex sets so
/// the same type serves non-uniform hypergraphs.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Walk {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Vec<Vertex>>,
}

impl Walk {
    /// Number of edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn start(&self) -> Option<Vertex> {
        self.vertices.first().copied()
    }

    pub fn end(&self) -> Option<Vertex> {
        self.vertices.last().copied()
    }

    /// Checks the walk axioms, with `is_edge` deciding edge membership.
    pub fn is_valid_with(&self, is_edge: impl Fn(&[Vertex]) -> bool) -> bool {
        let l = self.edges.len();
        if l == 0 || self.vertices.len() != l + 1 {
            return false;
        }
        self.edges.iter().all(|e| is_edge(e))
            && (1..=l).all(|i| self.vertices[i - 1] != self.vertices[i])
            && self.edges.iter().enumerate().all(|(i, e)| {
                e.contains(&self.vertices[i]) && e.contains(&self.vertices[i + 1])
            })
    }

    pub fn is_valid_in(&self, g: &KGraph) -> bool {
        self.is_valid_with(|e| g.contains_edge(e))
    }
}

/// Components of the hypergraph on `0..n` with the given edges (any sizes).
pub fn components_of<'a, I>(n: usize, edges: I) -> Vec<Vec<Vertex>>
where
    I: IntoIterator<Item = &'a [Vertex]>,
{
    let mut dsu = DisjointSets::new(n);
    for e in edges {
        for w in e.windows(2) {
            dsu.union(w[0], w[1]);
        }
    }
    let mut by_root: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    let mut root_of_min: HashMap<Vertex, Vertex> = HashMap::new();
    for v in 0..n {
        let r = dsu.find(v);
        let key = *root_of_min.entry(r).or_insert(v);
        by_root.entry(key).or_default().push(v);
    }
    by_root.into_values().collect()
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

pub fn mask_of(vs: &[Vertex]) -> u64 {
    vs.iter().fold(0u64, |m, &v| m | (1u64 << v))
}

pub fn binomial(n: u128, r: u128) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> KGraph {
        KGraph::new(6, 3, [[0, 1, 2], [2, 3, 4]]).unwrap()
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(matches!(
            KGraph::new(4, 3, [[0, 1, 1]]),
            Err(GraphError::BadEdge { .. })
        ));
        assert!(matches!(
            KGraph::new(4, 3, [[0, 1, 4]]),
            Err(GraphError::UnknownVertex { vertex: 4, .. })
        ));
        assert!(matches!(
            KGraph::new(4, 3, [[0, 1, 2], [2, 1, 0]]),
            Err(GraphError::DuplicateEdge(_))
        ));
        assert_eq!(KGraph::empty(3, 1), Err(GraphError::BadUniformity(1)));
    }

    #[test]
    fn neighbourhood_in_complete_graph() {
        let g = KGraph::complete(5, 3).unwrap();
        assert_eq!(g.neighbourhood(&[0, 1]).unwrap(), vec![2, 3, 4]);
        assert_eq!(g.neighbourhood(&[1, 0]).unwrap(), vec![2, 3, 4]);
    }

    #[test]
    fn neighbourhood_errors() {
        let g = KGraph::complete(5, 3).unwrap();
        assert!(matches!(
            g.neighbourhood(&[0]),
            Err(GraphError::SizeMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            g.neighbourhood(&[0, 0]),
            Err(GraphError::SizeMismatch { .. })
        ));
        assert!(matches!(
            g.neighbourhood(&[0, 7]),
            Err(GraphError::UnknownVertex { vertex: 7, .. })
        ));
        let empty = KGraph::empty(5, 3).unwrap();
        assert!(empty.neighbourhood(&[3, 4]).unwrap().is_empty());
    }

    #[test]
    fn codegree_statistics() {
        assert_eq!(KGraph::complete(6, 3).unwrap().min_codegree().unwrap(), 4);
        let empty = KGraph::empty(4, 3).unwrap();
        assert_eq!(empty.codegree_histogram().unwrap(), BTreeMap::from([(0, 6)]));
        assert_eq!(empty.min_codegree().unwrap(), 0);
        let one = KGraph::new(3, 3, [[0, 1, 2]]).unwrap();
        assert_eq!(one.codegree_histogram().unwrap(), BTreeMap::from([(1, 3)]));
        // n = k - 1: a single (k-1)-set with an empty neighbourhood.
        let tiny = KGraph::empty(2, 3).unwrap();
        assert_eq!(tiny.min_codegree().unwrap(), 0);
        assert!(matches!(
            KGraph::empty(1, 3).unwrap().min_codegree(),
            Err(GraphError::TooFewVertices { .. })
        ));
    }

    #[test]
    fn restrict_relabels() {
        let g = KGraph::complete(5, 3).unwrap();
        let (h, map) = g.restrict(&[4, 1, 3]).unwrap();
        assert_eq!(map, vec![1, 3, 4]);
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![&[0, 1, 2][..]]);
        let (full, id) = g.restrict(&[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(full, g);
        assert_eq!(id, vec![0, 1, 2, 3, 4]);
        assert!(g.restrict(&[9]).is_err());
    }

    #[test]
    fn components_and_walks() {
        let g = path_graph();
        assert_eq!(g.components(), vec![vec![0, 1, 2, 3, 4], vec![5]]);
        let w = g.find_walk(0, 4).unwrap().unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.vertices, vec![0, 2, 4]);
        assert!(w.is_valid_in(&g));
        assert_eq!(g.find_walk(0, 5).unwrap(), None);
        assert_eq!(g.find_walk(0, 0), Err(GraphError::SameEndpoints));
        let empty = KGraph::empty(5, 3).unwrap();
        assert_eq!(empty.components().len(), 5);
        let complete = KGraph::complete(6, 3).unwrap();
        for (x, y) in [(0, 5), (3, 1), (2, 4)] {
            assert_eq!(complete.find_walk(x, y).unwrap().unwrap().len(), 1);
        }
    }

    #[test]
    fn text_round_trip_and_errors() {
        let g = path_graph();
        let text = g.to_text();
        assert_eq!(text, "6 3\n0 1 2\n2 3 4\n");
        assert_eq!(KGraph::parse_text(&text).unwrap().to_text(), text);
        let with_comments = "# comment\n6 3\n\n2 3 4\n# more\n0 1 2\n";
        assert_eq!(KGraph::parse_text(with_comments).unwrap(), g);
        for bad in ["6 3\n0 1 2\n0 1 2\n", "6 3\n2 1 0\n", "6 3\n0 1\n", "6 3\n0 1 9\n", ""] {
            assert!(KGraph::parse_text(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 2), 36);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(40, 20), 137846528820);
    }
}
