//! Exact backtracking deciders for small hosts.
//!
//! Every search runs under a [`SearchBudget`]; running out of nodes or time
//! yields [`Outcome::BudgetExhausted`], never a silent "none". Hamiltonicity
//! searches use 64-bit vertex masks and so require `n <= 64`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycles::{GenericCycle, LooseCycle, LoosePath};
use crate::hypergraph::{components_of, mask_of, KGraph, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_nodes: u64,
    pub time_limit: Option<Duration>,
    /// Explore branches sequentially in canonical order so the reported
    /// witness is the first one in that order.
    pub deterministic: bool,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: 200_000_000,
            time_limit: None,
            deterministic: true,
        }
    }
}

impl SearchBudget {
    pub fn nodes(max_nodes: u64) -> Self {
        SearchBudget {
            max_nodes,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome<T> {
    Found(T),
    None,
    BudgetExhausted,
}

impl<T> Outcome<T> {
    pub fn found(self) -> Option<T> {
        match self {
            Outcome::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Outcome::None)
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Outcome::Found(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("exact search supports at most 64 vertices, got {0}")]
    TooLarge(usize),
    #[error("host has {n} vertices, fewer than k = {k}")]
    TooFewVertices { n: usize, k: usize },
    #[error("invalid connecting-path constraints: {0}")]
    InvalidSpec(String),
}

/// Shared node counter and stop flag.
struct Meter {
    max_nodes: u64,
    deadline: Option<Instant>,
    nodes: AtomicU64,
    exhausted: AtomicBool,
    stop: AtomicBool,
}

impl Meter {
    fn new(b: &SearchBudget) -> Self {
        Meter {
            max_nodes: b.max_nodes,
            deadline: b.time_limit.map(|d| Instant::now() + d),
            nodes: AtomicU64::new(0),
            exhausted: AtomicBool::new(false),
            stop: AtomicBool::new(false),
        }
    }

    /// Counts a node; false once the search must stop.
    fn tick(&self) -> bool {
        if self.stop.load(Ordering::Relaxed) || self.exhausted.load(Ordering::Relaxed) {
            return false;
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        let late = n.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() >= d);
        if n > self.max_nodes || late {
            self.exhausted.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    fn outcome<T>(&self, found: Option<T>) -> Outcome<T> {
        match found {
            Some(t) => Outcome::Found(t),
            None if self.exhausted.load(Ordering::Relaxed) => Outcome::BudgetExhausted,
            None => Outcome::None,
        }
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = Vertex> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let v = m.trailing_zeros() as Vertex;
            m &= m - 1;
            v
        })
    })
}

fn check_small(g: &KGraph) -> Result<(), SearchError> {
    if g.n() > 64 {
        return Err(SearchError::TooLarge(g.n()));
    }
    if g.n() < g.k() {
        return Err(SearchError::TooFewVertices { n: g.n(), k: g.k() });
    }
    Ok(())
}

/// Edge count and exceptional overlap of a loose Hamilton cycle on `n`
/// vertices; overlap 1 means no exceptional pair.
pub fn loose_cycle_shape(n: usize, k: usize) -> (usize, usize) {
    let m = n.div_ceil(k - 1);
    (m, m * (k - 1) + 1 - n)
}

/// Root of the loose search: first edge, the overlap set it shares with the
/// last edge, and its link to the second edge.
#[derive(Debug, Clone, Copy)]
struct LooseRoot {
    first: u64,
    back: u64,
    link: Vertex,
}

struct LooseSearch<'a> {
    m: usize,
    all: u64,
    incident: Vec<Vec<u64>>,
    edge_set: HashSet<u64>,
    meter: &'a Meter,
}

impl<'a> LooseSearch<'a> {
    fn new(g: &KGraph, meter: &'a Meter) -> Self {
        let masks = g.edge_masks().expect("n <= 64");
        let mut incident = vec![Vec::new(); g.n()];
        for &e in &masks {
            for v in bits(e) {
                incident[v].push(e);
            }
        }
        LooseSearch {
            m: loose_cycle_shape(g.n(), g.k()).0,
            all: if g.n() == 64 { u64::MAX } else { (1u64 << g.n()) - 1 },
            incident,
            edge_set: masks.into_iter().collect(),
            meter,
        }
    }

    fn roots(&self, g: &KGraph) -> Vec<LooseRoot> {
        let (_, o) = loose_cycle_shape(g.n(), g.k());
        let mut roots = Vec::new();
        // Without an exceptional pair every rotation is equivalent, so the
        // first edge may be taken through vertex 0.
        let firsts: Vec<u64> = if o == 1 {
            self.incident[0].clone()
        } else {
            g.edges().map(mask_of).collect()
        };
        for e in firsts {
            let members: Vec<Vertex> = bits(e).collect();
            for back in itertools::Itertools::combinations(members.iter().copied(), o) {
                let back = mask_of(&back);
                for link in bits(e & !back) {
                    roots.push(LooseRoot { first: e, back, link });
                }
            }
        }
        roots
    }

    /// Every unused vertex still needs an edge meeting the used set only
    /// in the current link or the overlap set.
    fn viable(&self, used: u64, open: u64) -> bool {
        let closed = used & !open;
        bits(self.all & !used).all(|v| self.incident[v].iter().any(|&e| e & closed == 0))
    }

    /// Depth-first extension; `visit` returns true to stop.
    fn extend(
        &self,
        root: &LooseRoot,
        used: u64,
        link: Vertex,
        chain: &mut Vec<(u64, Vertex)>,
        visit: &mut dyn FnMut(&[(u64, Vertex)], u64) -> bool,
    ) -> bool {
        if !self.meter.tick() {
            return true;
        }
        let lb = 1u64 << link;
        if chain.len() + 1 == self.m {
            let last = (self.all & !used) | root.back | lb;
            return self.edge_set.contains(&last) && visit(chain, last);
        }
        if !self.viable(used, lb | root.back) {
            return false;
        }
        for &e in &self.incident[link] {
            if e & used != lb {
                continue;
            }
            for next in bits(e & !lb) {
                chain.push((e, next));
                let stop = self.extend(root, used | e, next, chain, visit);
                chain.pop();
                if stop {
                    return true;
                }
            }
        }
        false
    }

    fn run_root(
        &self,
        root: &LooseRoot,
        visit: &mut dyn FnMut(&[(u64, Vertex)], u64) -> bool,
    ) -> bool {
        let mut chain = vec![(root.first, root.link)];
        self.extend(root, root.first, root.link, &mut chain, visit)
    }
}

fn assemble_loose(back: u64, chain: &[(u64, Vertex)], last: u64) -> LooseCycle {
    let mut order: Vec<Vertex> = bits(back).collect();
    let mut edges = Vec::with_capacity(chain.len() + 1);
    let mut prev_link = 0u64;
    for (i, &(e, link)) in chain.iter().enumerate() {
        let skip = if i == 0 { back } else { prev_link };
        order.extend(bits(e & !skip & !(1u64 << link)));
        order.push(link);
        edges.push(bits(e).collect());
        prev_link = 1u64 << link;
    }
    order.extend(bits(last & !prev_link & !back));
    edges.push(bits(last).collect());
    LooseCycle { order, edges }
}

/// A loose Hamilton cycle with at least three edges, or an exact "none".
pub fn find_loose_hamilton(
    g: &KGraph,
    budget: &SearchBudget,
) -> Result<Outcome<LooseCycle>, SearchError> {
    check_small(g)?;
    let meter = Meter::new(budget);
    if loose_cycle_shape(g.n(), g.k()).0 < 3 {
        return Ok(Outcome::None);
    }
    let search = LooseSearch::new(g, &meter);
    let roots = search.roots(g);
    let solve = |root: &LooseRoot| {
        let mut found = None;
        search.run_root(root, &mut |chain, last| {
            found = Some(assemble_loose(root.back, chain, last));
            true
        });
        found
    };
    let found = run_roots(&roots, budget.deterministic, &meter, solve);
    Ok(meter.outcome(found))
}

#[cfg(feature = "parallel")]
fn run_roots<R: Sync, T: Send>(
    roots: &[R],
    deterministic: bool,
    meter: &Meter,
    solve: impl Fn(&R) -> Option<T> + Sync,
) -> Option<T> {
    use rayon::prelude::*;
    if deterministic {
        return roots.iter().find_map(solve);
    }
    let found = roots.par_iter().find_map_any(&solve);
    if found.is_some() {
        meter.stop.store(true, Ordering::Relaxed);
    }
    found
}

#[cfg(not(feature = "parallel"))]
fn run_roots<R, T>(
    roots: &[R],
    _deterministic: bool,
    _meter: &Meter,
    solve: impl Fn(&R) -> Option<T>,
) -> Option<T> {
    roots.iter().find_map(solve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Exact(u64),
    BudgetExhausted,
}

/// Number of distinct loose Hamilton cycles, two cycles being equal when
/// they have the same edge set.
pub fn count_loose_hamilton(g: &KGraph, budget: &SearchBudget) -> Result<Count, SearchError> {
    check_small(g)?;
    let meter = Meter::new(budget);
    if loose_cycle_shape(g.n(), g.k()).0 < 3 {
        return Ok(Count::Exact(0));
    }
    let search = LooseSearch::new(g, &meter);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for root in search.roots(g) {
        search.run_root(&root, &mut |chain, last| {
            let mut key: Vec<u64> = chain.iter().map(|&(e, _)| e).collect();
            key.push(last);
            key.sort_unstable();
            seen.insert(key);
            false
        });
        if meter.exhausted.load(Ordering::Relaxed) {
            return Ok(Count::BudgetExhausted);
        }
    }
    Ok(Count::Exact(seen.len() as u64))
}

/// Minimum circular cover of the pairs `(i, i+1 mod n)` by the windows
/// flagged in `is_edge` (window `s` covers pairs `s..s+k-2`). Returns the
/// chosen window starts, or `None` if some pair lies in no edge window.
pub fn min_window_cover(n: usize, k: usize, is_edge: &[bool]) -> Option<Vec<usize>> {
    if n == k {
        return is_edge[0].then(|| vec![0]);
    }
    let span = k - 1;
    let covers_zero = (0..span).map(|d| (n - d) % n);
    let mut best: Option<Vec<usize>> = None;
    for first in covers_zero.filter(|&s| is_edge[s]) {
        // Pairs are indexed relative to `first`.
        let mut chosen = vec![first];
        let mut reach = span;
        let mut ok = true;
        while reach < n {
            // Largest start covering the first uncovered pair `reach`.
            let pick = (0..span)
                .map(|d| reach - d)
                .filter(|&r| r > 0 && r <= reach)
                .find(|&r| is_edge[(r + first) % n]);
            match pick {
                Some(r) => {
                    chosen.push((r + first) % n);
                    reach = r + span;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.as_ref().is_none_or(|b| chosen.len() < b.len()) {
            best = Some(chosen);
        }
    }
    best
}

struct GenericSearch<'a> {
    n: usize,
    k: usize,
    edge_set: HashSet<u64>,
    meter: &'a Meter,
}

impl GenericSearch<'_> {
    fn window(&self, order: &[Vertex], s: usize) -> u64 {
        (0..self.k).fold(0, |m, i| m | 1u64 << order[(s + i) % self.n])
    }

    /// Linear pairs `(q, q+1)` become decidable once position `q + k - 1`
    /// is placed, provided no covering window wraps.
    fn pair_dead(&self, order: &[Vertex], q: usize) -> bool {
        (q + 2 - self.k..=q).all(|s| !self.edge_set.contains(&self.window(order, s)))
    }

    fn extend(&self, order: &mut Vec<Vertex>, free: u64) -> Option<GenericCycle> {
        if !self.meter.tick() {
            return None;
        }
        let p = order.len();
        if p == self.n {
            if order[1] > order[self.n - 1] {
                return None;
            }
            let flags: Vec<bool> = (0..self.n)
                .map(|s| self.edge_set.contains(&self.window(order, s)))
                .collect();
            let starts = min_window_cover(self.n, self.k, &flags)?;
            let cover = starts
                .into_iter()
                .map(|s| {
                    let mut e: Vec<Vertex> = (0..self.k).map(|i| order[(s + i) % self.n]).collect();
                    e.sort_unstable();
                    e
                })
                .collect();
            return Some(GenericCycle {
                order: order.clone(),
                cover,
            });
        }
        for v in bits(free) {
            order.push(v);
            let q = (p + 1).checked_sub(self.k);
            let dead = q.is_some_and(|q| q + 2 >= self.k && self.pair_dead(order, q));
            if !dead {
                if let Some(c) = self.extend(order, free & !(1u64 << v)) {
                    return Some(c);
                }
            }
            order.pop();
            if self.meter.exhausted.load(Ordering::Relaxed) {
                return None;
            }
        }
        None
    }
}

/// A cyclic ordering whose consecutive pairs are all covered by edge
/// windows. Orderings start at vertex 0 with the second vertex smaller than
/// the last, one per rotation/reflection class.
pub fn find_generic_hamilton(
    g: &KGraph,
    budget: &SearchBudget,
) -> Result<Outcome<GenericCycle>, SearchError> {
    check_small(g)?;
    let meter = Meter::new(budget);
    let search = GenericSearch {
        n: g.n(),
        k: g.k(),
        edge_set: g.edge_masks().expect("n <= 64").into_iter().collect(),
        meter: &meter,
    };
    let all = if g.n() == 64 { u64::MAX } else { (1u64 << g.n()) - 1 };
    let found = if g.n() <= 2 {
        None
    } else {
        search.extend(&mut vec![0], all & !1)
    };
    Ok(meter.outcome(found))
}

/// Side constraints for a short connecting loose path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectSpec {
    /// Cluster of each vertex; vertices without a cluster are never used.
    pub class_map: Vec<Option<usize>>,
    /// Required residue of `|V(L) ∩ X^i|` modulo k-1, per usable cluster.
    pub residues: BTreeMap<usize, usize>,
    pub forbidden: BTreeSet<Vertex>,
    pub start_cluster: usize,
    pub end_cluster: usize,
    pub max_vertices: usize,
    /// Minimum number of edges inside its own cluster an endpoint must lie in.
    pub endpoint_min_degree: BTreeMap<usize, f64>,
    /// Optional per-vertex rank; lower-ranked starts and edges are tried
    /// first. Without it the order is canonical.
    pub vertex_rank: Option<Vec<usize>>,
}

impl ConnectSpec {
    /// Spec with the default vertex cap `4k^3` and no degree thresholds.
    pub fn new(
        k: usize,
        class_map: Vec<Option<usize>>,
        residues: BTreeMap<usize, usize>,
        start_cluster: usize,
        end_cluster: usize,
    ) -> Self {
        ConnectSpec {
            class_map,
            residues,
            forbidden: BTreeSet::new(),
            start_cluster,
            end_cluster,
            max_vertices: 4 * k * k * k,
            endpoint_min_degree: BTreeMap::new(),
            vertex_rank: None,
        }
    }

    fn validate(&self, g: &KGraph) -> Result<(), SearchError> {
        let k = g.k();
        let bad = |m: String| Err(SearchError::InvalidSpec(m));
        if k < 3 {
            return bad(format!("k = {k} is below 3"));
        }
        if self.class_map.len() != g.n() {
            return bad(format!("class map covers {} of {} vertices", self.class_map.len(), g.n()));
        }
        if self.vertex_rank.as_ref().is_some_and(|r| r.len() != g.n()) {
            return bad("vertex rank must cover every vertex".into());
        }
        if self.start_cluster == self.end_cluster {
            return bad("start and end clusters coincide".into());
        }
        for c in [self.start_cluster, self.end_cluster] {
            if !self.residues.contains_key(&c) {
                return bad(format!("cluster {c} has no residue"));
            }
        }
        if let Some((c, r)) = self.residues.iter().find(|(_, &r)| r >= k) {
            return bad(format!("residue {r} of cluster {c} exceeds k - 1"));
        }
        let sum: usize = self.residues.values().sum();
        if sum % (k - 1) != 1 % (k - 1) {
            return bad(format!("residues sum to {sum}, not 1 modulo {}", k - 1));
        }
        Ok(())
    }
}

/// Per-cluster thresholds `|H[X^i]| / (2|X^i|)`, where `H[X^i]` is the
/// subgraph induced by cluster `i`.
pub fn default_endpoint_thresholds(g: &KGraph, class_map: &[Option<usize>]) -> BTreeMap<usize, f64> {
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for c in class_map.iter().flatten() {
        *sizes.entry(*c).or_default() += 1;
    }
    let mut inside: BTreeMap<usize, usize> = BTreeMap::new();
    for e in g.edges() {
        if let Some(c) = class_map[e[0]] {
            if e.iter().all(|&v| class_map[v] == Some(c)) {
                *inside.entry(c).or_default() += 1;
            }
        }
    }
    sizes
        .into_iter()
        .map(|(c, s)| (c, inside.get(&c).copied().unwrap_or(0) as f64 / (2.0 * s as f64)))
        .collect()
}

/// Number of edges inside the cluster of `v` that contain `v`.
pub fn cluster_degree(g: &KGraph, class_map: &[Option<usize>], v: Vertex) -> usize {
    let c = class_map[v];
    g.incident(v)
        .iter()
        .filter(|&&ei| g.edge(ei).iter().all(|&u| class_map[u] == c))
        .count()
}

struct ConnectSearch<'a> {
    g: &'a KGraph,
    spec: &'a ConnectSpec,
    /// Edges of each vertex lying entirely inside the usable vertices.
    incident: Vec<Vec<usize>>,
    end_ok: Vec<bool>,
    meter: &'a Meter,
}

impl ConnectSearch<'_> {
    fn residues_hold(&self, counts: &BTreeMap<usize, usize>) -> bool {
        let q = self.g.k() - 1;
        self.spec
            .residues
            .iter()
            .all(|(c, &r)| counts.get(c).copied().unwrap_or(0) % q == r % q)
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(
        &self,
        edges_left: usize,
        cur: Vertex,
        used: &mut Vec<bool>,
        counts: &mut BTreeMap<usize, usize>,
        chain: &mut Vec<(Vec<Vertex>, Vertex)>,
    ) -> Option<Vec<(Vec<Vertex>, Vertex)>> {
        if !self.meter.tick() {
            return None;
        }
        for &ei in &self.incident[cur] {
            let e = self.g.edge(ei);
            if e.iter().any(|&v| v != cur && used[v]) {
                continue;
            }
            if !self.meter.tick() {
                return None;
            }
            let fresh: Vec<Vertex> = e.iter().copied().filter(|&v| v != cur).collect();
            for &v in &fresh {
                used[v] = true;
                *counts.entry(self.spec.class_map[v].unwrap()).or_default() += 1;
            }
            for &next in &fresh {
                chain.push((e.to_vec(), next));
                let done = if edges_left == 1 {
                    (self.end_ok[next] && self.residues_hold(counts)).then(|| chain.clone())
                } else {
                    self.extend(edges_left - 1, next, used, counts, chain)
                };
                chain.pop();
                if done.is_some() {
                    return done;
                }
                if self.meter.exhausted.load(Ordering::Relaxed) {
                    break;
                }
            }
            for &v in &fresh {
                used[v] = false;
                *counts.get_mut(&self.spec.class_map[v].unwrap()).unwrap() -= 1;
            }
            if self.meter.exhausted.load(Ordering::Relaxed) {
                return None;
            }
        }
        None
    }
}

/// A loose path meeting the ConnectSpec residue, endpoint, degree and
/// forbidden-vertex constraints, using as few edges as possible.
///
/// "None" is exact only with respect to the vertex cap `max_vertices`.
pub fn find_loose_path_constrained(
    g: &KGraph,
    spec: &ConnectSpec,
    budget: &SearchBudget,
) -> Result<Outcome<LoosePath>, SearchError> {
    spec.validate(g)?;
    let meter = Meter::new(budget);
    let n = g.n();
    let usable: Vec<bool> = (0..n)
        .map(|v| {
            !spec.forbidden.contains(&v)
                && spec.class_map[v].is_some_and(|c| spec.residues.contains_key(&c))
        })
        .collect();
    let degree_ok = |v: Vertex, c: usize| {
        let t = spec.endpoint_min_degree.get(&c).copied().unwrap_or(0.0);
        cluster_degree(g, &spec.class_map, v) as f64 >= t
    };
    let end_ok: Vec<bool> = (0..n)
        .map(|v| usable[v] && spec.class_map[v] == Some(spec.end_cluster) && degree_ok(v, spec.end_cluster))
        .collect();
    let starts: Vec<Vertex> = (0..n)
        .filter(|&v| {
            usable[v] && spec.class_map[v] == Some(spec.start_cluster) && degree_ok(v, spec.start_cluster)
        })
        .collect();
    // Starts that cannot reach a valid end through usable edges are dropped.
    let usable_edges: Vec<&[Vertex]> = g.edges().filter(|e| e.iter().all(|&v| usable[v])).collect();
    let mut incident = vec![Vec::new(); n];
    for (ei, e) in g.edges().enumerate() {
        if e.iter().all(|&v| usable[v]) {
            e.iter().for_each(|&v| incident[v].push(ei));
        }
    }
    let mut comp = vec![usize::MAX; n];
    for (id, c) in components_of(n, usable_edges.iter().copied()).iter().enumerate() {
        c.iter().for_each(|&v| comp[v] = id);
    }
    let reachable: BTreeSet<usize> = (0..n).filter(|&v| end_ok[v]).map(|v| comp[v]).collect();
    let mut starts: Vec<Vertex> = starts.into_iter().filter(|&v| reachable.contains(&comp[v])).collect();
    if let Some(rank) = &spec.vertex_rank {
        starts.sort_by_key(|&v| (rank[v], v));
        for list in &mut incident {
            list.sort_by_key(|&ei| (g.edge(ei).iter().map(|&v| rank[v]).sum::<usize>(), ei));
        }
    }
    let search = ConnectSearch {
        g,
        spec,
        incident,
        end_ok,
        meter: &meter,
    };
    let k = g.k();
    let max_edges = spec.max_vertices.saturating_sub(1) / (k - 1);
    for edges in 1..=max_edges {
        for &u in &starts {
            let mut used = vec![false; n];
            used[u] = true;
            let mut counts = BTreeMap::from([(spec.start_cluster, 1usize)]);
            let mut chain = Vec::new();
            if let Some(chain) = search.extend(edges, u, &mut used, &mut counts, &mut chain) {
                return Ok(Outcome::Found(path_from_chain(u, &chain)));
            }
            if meter.exhausted.load(Ordering::Relaxed) {
                return Ok(Outcome::BudgetExhausted);
            }
        }
    }
    Ok(meter.outcome(None))
}

/// Builds the path order from a start vertex and (edge, exit vertex) steps.
fn path_from_chain(start: Vertex, chain: &[(Vec<Vertex>, Vertex)]) -> LoosePath {
    let mut order = vec![start];
    let mut cur = start;
    for (e, next) in chain {
        order.extend(e.iter().copied().filter(|&v| v != cur && v != *next));
        order.push(*next);
        cur = *next;
    }
    LoosePath {
        order,
        edges: chain.iter().map(|(e, _)| e.clone()).collect(),
    }
}

/// A loose path covering exactly `vertices`, starting at `u` and ending at
/// `v`.
pub fn find_spanning_loose_path(
    g: &KGraph,
    vertices: &[Vertex],
    u: Vertex,
    v: Vertex,
    budget: &SearchBudget,
) -> Result<Outcome<LoosePath>, SearchError> {
    let k = g.k();
    let set: BTreeSet<Vertex> = vertices.iter().copied().collect();
    if set.len() != vertices.len() || !set.contains(&u) || !set.contains(&v) || u == v {
        return Err(SearchError::InvalidSpec("endpoints must be distinct members of the vertex set".into()));
    }
    if let Some(&x) = set.iter().find(|&&x| x >= g.n()) {
        return Err(SearchError::InvalidSpec(format!("vertex {x} outside the host")));
    }
    if set.len() < k || !(set.len() - 1).is_multiple_of(k - 1) {
        return Ok(Outcome::None);
    }
    let meter = Meter::new(budget);
    let mut inside = vec![false; g.n()];
    set.iter().for_each(|&x| inside[x] = true);
    let mut used = vec![false; g.n()];
    used[u] = true;
    let edges = (set.len() - 1) / (k - 1);
    let mut chain = Vec::new();
    let ctx = SpanSearch {
        g,
        inside: &inside,
        target: v,
        meter: &meter,
    };
    let found = ctx.extend(edges, u, &mut used, &mut chain);
    Ok(meter.outcome(found.map(|c| path_from_chain(u, &c))))
}

struct SpanSearch<'a> {
    g: &'a KGraph,
    inside: &'a [bool],
    target: Vertex,
    meter: &'a Meter,
}

impl SpanSearch<'_> {
    fn viable(&self, used: &[bool], cur: Vertex) -> bool {
        (0..self.g.n()).filter(|&x| self.inside[x] && !used[x]).all(|x| {
            self.g.incident(x).iter().any(|&ei| {
                self.g
                    .edge(ei)
                    .iter()
                    .all(|&y| self.inside[y] && (!used[y] || y == cur))
            })
        })
    }

    fn extend(
        &self,
        edges_left: usize,
        cur: Vertex,
        used: &mut Vec<bool>,
        chain: &mut Vec<(Vec<Vertex>, Vertex)>,
    ) -> Option<Vec<(Vec<Vertex>, Vertex)>> {
        if !self.meter.tick() || !self.viable(used, cur) {
            return None;
        }
        for &ei in self.g.incident(cur) {
            let e = self.g.edge(ei);
            if e.iter().any(|&y| y != cur && (used[y] || !self.inside[y])) {
                continue;
            }
            let holds_target = e.contains(&self.target);
            if holds_target != (edges_left == 1) {
                continue;
            }
            let fresh: Vec<Vertex> = e.iter().copied().filter(|&y| y != cur).collect();
            fresh.iter().for_each(|&y| used[y] = true);
            let exits: Vec<Vertex> = if edges_left == 1 {
                vec![self.target]
            } else {
                fresh.clone()
            };
            for next in exits {
                chain.push((e.to_vec(), next));
                let done = if edges_left == 1 {
                    Some(chain.clone())
                } else {
                    self.extend(edges_left - 1, next, used, chain)
                };
                chain.pop();
                if done.is_some() {
                    return done;
                }
            }
            fresh.iter().for_each(|&y| used[y] = false);
            if self.meter.exhausted.load(Ordering::Relaxed) {
                return None;
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructive::extremal_construction;
    use crate::cycles::{validate_generic_cycle, validate_loose_cycle, validate_loose_path};
    use itertools::Itertools;
    use proptest::prelude::*;

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    #[test]
    fn complete_eight_has_loose_cycle() {
        let g = KGraph::complete(8, 3).unwrap();
        let c = find_loose_hamilton(&g, &budget()).unwrap().found().unwrap();
        assert_eq!(validate_loose_cycle(&g, &c, true), Ok(()));
        assert_eq!(c.edges.len(), 4);
        assert_eq!(c.exceptional_pair(), None);
    }

    #[test]
    fn odd_order_uses_exceptional_pair() {
        for (n, k) in [(9, 3), (7, 3), (10, 4), (11, 4), (9, 4)] {
            let g = KGraph::complete(n, k).unwrap();
            let c = find_loose_hamilton(&g, &budget()).unwrap().found().unwrap();
            assert_eq!(validate_loose_cycle(&g, &c, true), Ok(()), "n={n} k={k}");
            assert_eq!(c.exceptional_pair().is_some(), n % (k - 1) != 0);
        }
    }

    #[test]
    fn negative_loose_cases() {
        let x = extremal_construction(9, 3).unwrap();
        assert!(find_loose_hamilton(&x.graph, &budget()).unwrap().is_none());
        let single = KGraph::new(5, 3, [[0, 1, 2]]).unwrap();
        assert!(find_loose_hamilton(&single, &budget()).unwrap().is_none());
        assert!(find_loose_hamilton(&KGraph::complete(4, 3).unwrap(), &budget()).unwrap().is_none());
        assert!(find_loose_hamilton(&KGraph::complete(2, 3).unwrap(), &budget()).is_err());
    }

    #[test]
    fn tiny_budget_is_reported() {
        let x = extremal_construction(11, 3).unwrap();
        let b = SearchBudget::nodes(10);
        assert_eq!(find_generic_hamilton(&x.graph, &b).unwrap(), Outcome::BudgetExhausted);
        assert_eq!(find_loose_hamilton(&x.graph, &b).unwrap(), Outcome::BudgetExhausted);
        assert_eq!(count_loose_hamilton(&x.graph, &b).unwrap(), Count::BudgetExhausted);
    }

    #[test]
    fn generic_search_cases() {
        for n in 7..=9 {
            let x = extremal_construction(n, 3).unwrap();
            assert!(find_generic_hamilton(&x.graph, &budget()).unwrap().is_none(), "n={n}");
        }
        let g = KGraph::complete(6, 3).unwrap();
        let c = find_generic_hamilton(&g, &budget()).unwrap().found().unwrap();
        assert_eq!(validate_generic_cycle(&g, &c, true), Ok(()));
        assert_eq!(c.cover.len(), 3);
    }

    #[test]
    fn generic_search_finds_tight_instance() {
        let order = [0usize, 4, 2, 6, 1, 5, 3];
        let edges: Vec<Vec<usize>> = (0..7).map(|s| (0..3).map(|i| order[(s + i) % 7]).collect()).collect();
        let g = KGraph::new(7, 3, &edges).unwrap();
        let c = find_generic_hamilton(&g, &budget()).unwrap().found().unwrap();
        assert_eq!(validate_generic_cycle(&g, &c, true), Ok(()));
    }

    fn brute_cover(n: usize, k: usize, flags: &[bool]) -> Option<usize> {
        let windows: Vec<usize> = (0..n).filter(|&s| flags[s]).collect();
        (1..=windows.len()).find(|&size| {
            windows.iter().combinations(size).any(|ch| {
                (0..n).all(|p| ch.iter().any(|&&s| (0..k - 1).any(|d| (s + d) % n == p)))
            })
        })
    }

    #[test]
    fn window_cover_matches_brute_force() {
        for n in 4..=12usize {
            for k in 3..=4usize.min(n - 1) {
                for mask in 0u32..(1 << n) {
                    if n > 9 && mask % 7 != 0 {
                        continue;
                    }
                    let flags: Vec<bool> = (0..n).map(|s| mask >> s & 1 == 1).collect();
                    let got = min_window_cover(n, k, &flags);
                    if let Some(ch) = &got {
                        assert!((0..n).all(|p| ch.iter().any(|&s| (0..k - 1).any(|d| (s + d) % n == p))));
                        assert!(ch.iter().all(|&s| flags[s]));
                    }
                    assert_eq!(got.map(|c| c.len()), brute_cover(n, k, &flags), "n={n} k={k} mask={mask:b}");
                }
            }
        }
    }

    #[test]
    fn count_pins() {
        assert_eq!(count_loose_hamilton(&KGraph::empty(8, 3).unwrap(), &budget()).unwrap(), Count::Exact(0));
        let x = extremal_construction(9, 3).unwrap();
        assert_eq!(count_loose_hamilton(&x.graph, &budget()).unwrap(), Count::Exact(0));
        // Links and interior vertices alternate around the cycle; an edge set
        // corresponds to 2m orderings of that pattern, so K_6 gives 6!/6 and
        // K_8 gives 8!/8.
        let g6 = KGraph::complete(6, 3).unwrap();
        assert_eq!(count_loose_hamilton(&g6, &budget()).unwrap(), Count::Exact(naive_count(&g6)));
        assert_eq!(naive_count(&g6), 120);
        let g8 = KGraph::complete(8, 3).unwrap();
        let c8 = count_loose_hamilton(&g8, &budget()).unwrap();
        assert_eq!(c8, Count::Exact(naive_count(&g8)));
        assert_eq!(c8, Count::Exact(5040));
    }

    /// Distinct edge sets over all orderings from vertex 0 and all window
    /// offsets, windows spaced k-1 apart.
    fn naive_count(g: &KGraph) -> u64 {
        let (n, k) = (g.n(), g.k());
        let (m, _) = loose_cycle_shape(n, k);
        let mut seen = HashSet::new();
        for perm in (1..n).permutations(n - 1) {
            let order: Vec<usize> = std::iter::once(0).chain(perm).collect();
            for offset in 0..n {
                let edges: Option<Vec<Vec<usize>>> = (0..m)
                    .map(|i| {
                        let mut e: Vec<usize> =
                            (0..k).map(|d| order[(offset + i * (k - 1) + d) % n]).collect();
                        e.sort_unstable();
                        g.contains_edge(&e).then_some(e)
                    })
                    .collect();
                if let Some(mut e) = edges {
                    e.sort();
                    seen.insert(e);
                }
            }
        }
        seen.len() as u64
    }

    fn two_cluster_host(seed: u64) -> (KGraph, Vec<Option<usize>>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<Vec<usize>> = (0..24).combinations(3).filter(|_| rng.gen_bool(0.5)).collect();
        let g = KGraph::new(24, 3, &edges).unwrap();
        let map = (0..24).map(|v| Some(v / 12)).collect();
        (g, map)
    }

    #[test]
    fn constrained_path_on_dense_two_cluster_host() {
        let (g, map) = two_cluster_host(7);
        let spec = ConnectSpec::new(3, map.clone(), BTreeMap::from([(0, 1), (1, 0)]), 0, 1);
        let p = find_loose_path_constrained(&g, &spec, &budget()).unwrap().found().unwrap();
        assert_eq!(validate_loose_path(&g, &p), Ok(()));
        assert!(p.order.len() <= spec.max_vertices);
        assert_eq!(map[p.order[0]], Some(0));
        assert_eq!(map[*p.order.last().unwrap()], Some(1));
        let in0 = p.order.iter().filter(|&&v| map[v] == Some(0)).count();
        let in1 = p.order.iter().filter(|&&v| map[v] == Some(1)).count();
        assert_eq!((in0 % 2, in1 % 2), (1, 0));
    }

    #[test]
    fn constrained_path_follows_vertex_rank() {
        let (g, map) = two_cluster_host(7);
        let mut spec = ConnectSpec::new(3, map.clone(), BTreeMap::from([(0, 1), (1, 0)]), 0, 1);
        let plain = find_loose_path_constrained(&g, &spec, &budget()).unwrap().found().unwrap();
        let rank: Vec<usize> = (0..g.n()).rev().collect();
        spec.vertex_rank = Some(rank.clone());
        let ranked = find_loose_path_constrained(&g, &spec, &budget()).unwrap().found().unwrap();
        assert_eq!(validate_loose_path(&g, &ranked), Ok(()));
        assert_eq!(ranked.edges.len(), plain.edges.len());
        assert!(ranked.order[0] > plain.order[0]);
        spec.vertex_rank = Some(rank[1..].to_vec());
        assert!(find_loose_path_constrained(&g, &spec, &budget()).is_err());
    }

    #[test]
    fn constrained_path_negative_and_invalid() {
        let (g, map) = two_cluster_host(3);
        let mut spec = ConnectSpec::new(3, map, BTreeMap::from([(0, 1), (1, 0)]), 0, 1);
        spec.forbidden = (0..12).collect();
        assert!(find_loose_path_constrained(&g, &spec, &budget()).unwrap().is_none());
        spec.forbidden.clear();
        spec.residues = BTreeMap::from([(0, 1), (1, 1)]);
        assert!(matches!(
            find_loose_path_constrained(&g, &spec, &budget()),
            Err(SearchError::InvalidSpec(_))
        ));
    }

    #[test]
    fn constrained_path_degree_threshold() {
        let (g, map) = two_cluster_host(11);
        let mut spec = ConnectSpec::new(3, map.clone(), BTreeMap::from([(0, 0), (1, 1)]), 0, 1);
        spec.endpoint_min_degree = default_endpoint_thresholds(&g, &map);
        let p = find_loose_path_constrained(&g, &spec, &budget()).unwrap().found().unwrap();
        let (u, v) = (p.order[0], *p.order.last().unwrap());
        assert!(cluster_degree(&g, &map, u) as f64 >= spec.endpoint_min_degree[&0]);
        assert!(cluster_degree(&g, &map, v) as f64 >= spec.endpoint_min_degree[&1]);
    }

    #[test]
    fn spanning_path_in_complete_host() {
        let g = KGraph::complete(12, 3).unwrap();
        let vs = [1, 3, 4, 5, 7, 8, 10];
        let p = find_spanning_loose_path(&g, &vs, 3, 8, &budget()).unwrap().found().unwrap();
        assert_eq!(validate_loose_path(&g, &p), Ok(()));
        assert_eq!((p.order[0], *p.order.last().unwrap()), (3, 8));
        assert_eq!(p.order.iter().copied().sorted().collect::<Vec<_>>(), vs.to_vec());
        let even = [1, 3, 4, 5];
        assert!(find_spanning_loose_path(&g, &even, 1, 5, &budget()).unwrap().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn adding_edges_keeps_cycles(seed in any::<u64>(), n in 5usize..=8) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let all: Vec<Vec<usize>> = (0..n).combinations(3).collect();
            let mut chosen: Vec<Vec<usize>> = all.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
            let mut was_found = false;
            for extra in all.iter() {
                let g = KGraph::new(n, 3, &chosen).unwrap();
                let out = find_loose_hamilton(&g, &budget()).unwrap();
                if let Outcome::Found(c) = &out {
                    prop_assert_eq!(validate_loose_cycle(&g, c, true), Ok(()));
                }
                prop_assert!(!(was_found && out.is_none()));
                was_found |= out.is_found();
                if !chosen.contains(extra) {
                    chosen.push(extra.clone());
                }
            }
        }
    }
}
