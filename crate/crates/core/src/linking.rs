//! Linking groups of clusters into one loose Hamilton cycle.
//!
//! A [`ClusterSystem`] describes `t'` groups, each made of k classes hosted
//! in clusters of a reduced k-graph `R`. Groups are joined through the
//! supplementary hypergraph, a walk covering all groups fixes the order of
//! connecting paths, and the congruence plan chooses how many vertices (mod
//! k-1) each connecting path takes from each group so that what is left in
//! every group splits into the required number of loose paths.
//!
//! [`assemble_pipeline`] runs every step on an explicit host: exceptional
//! path, prepaths, connecting paths, per-group paths and the final
//! concatenation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constructive::{build_loose_path_complete, PartitionedVertexSet};
use crate::cycles::{
    concatenate, validate_loose_cycle, validate_loose_path, validate_path_with, LooseCycle,
    LoosePath, PathRules, Prepath,
};
use crate::hypergraph::{components_of, KGraph, Vertex, Walk};
use crate::search::{
    default_endpoint_thresholds, find_loose_path_constrained, find_spanning_loose_path,
    ConnectSpec, Outcome, SearchBudget,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("invalid cluster system: {0}")]
    InvalidSystem(String),
    #[error("supplementary graph is not connected")]
    NotConnected,
    #[error("invalid walk: {0}")]
    InvalidWalk(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("congruence check failed: {0}")]
    CongruenceFailure(String),
    #[error("stuck after absorbing {absorbed} of {total} chunks")]
    Stuck { absorbed: usize, total: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no choice of end sets gives a possible end vertex")]
    NoExtension,
}

/// One group `X^i`: the sizes of its k classes and the cluster hosting each.
/// Empty classes are allowed but host nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterGroup {
    pub classes: Vec<usize>,
    pub clusters: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSystem {
    pub k: usize,
    pub groups: Vec<ClusterGroup>,
    pub reduced_edges: Vec<Vec<usize>>,
}

impl ClusterSystem {
    pub fn t(&self) -> usize {
        self.groups.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.groups
            .iter()
            .flat_map(|g| g.clusters.iter())
            .chain(self.reduced_edges.iter().flatten())
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn group_size(&self, i: usize) -> usize {
        self.groups[i].classes.iter().sum()
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: String| Err(LinkError::InvalidSystem(m));
        if self.k < 3 {
            return bad(format!("k = {} is below 3", self.k));
        }
        if self.groups.is_empty() {
            return bad("no groups".into());
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.classes.len() != self.k || g.clusters.len() != self.k {
                return bad(format!("group {i} must have {} classes and clusters", self.k));
            }
        }
        self.reduced().map(|_| ())
    }

    pub fn reduced(&self) -> Result<KGraph, LinkError> {
        KGraph::new(self.num_clusters(), self.k, &self.reduced_edges)
            .map_err(|e| LinkError::InvalidSystem(format!("reduced graph: {e}")))
    }
}

/// Edge of the supplementary hypergraph with its witness: the reduced edge
/// `S` and, for every cluster of `S`, the (group, class) it hosts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuppEdge {
    pub groups: Vec<usize>,
    pub witness: Vec<usize>,
    pub assignment: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplementaryGraph {
    pub t: usize,
    pub edges: Vec<SuppEdge>,
}

impl SupplementaryGraph {
    pub fn contains(&self, groups: &[usize]) -> bool {
        let mut key = groups.to_vec();
        key.sort_unstable();
        self.edges.iter().any(|e| e.groups == key)
    }
}

/// Sets `e` of at least two groups such that some reduced edge `S` has, for
/// each cluster `j` of `S`, a class of a group in `e` hosted in `j`, with
/// every group of `e` used. The recorded witness is the lexicographically
/// smallest such `S`.
pub fn build_supplementary(cs: &ClusterSystem) -> Result<SupplementaryGraph, LinkError> {
    cs.validate()?;
    let mut hosted: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (i, g) in cs.groups.iter().enumerate() {
        for (l, &c) in g.clusters.iter().enumerate() {
            if g.classes[l] > 0 {
                hosted.entry(c).or_default().push((i, l));
            }
        }
    }
    let reduced = cs.reduced()?;
    let mut found: BTreeMap<Vec<usize>, SuppEdge> = BTreeMap::new();
    for s in reduced.edges() {
        let options: Vec<Vec<(usize, usize)>> =
            s.iter().map(|j| hosted.get(j).cloned().unwrap_or_default()).collect();
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        for assignment in options.into_iter().multi_cartesian_product() {
            let groups: Vec<usize> = assignment.iter().map(|&(i, _)| i).sorted().dedup().collect();
            if groups.len() >= 2 && !found.contains_key(&groups) {
                found.insert(
                    groups.clone(),
                    SuppEdge {
                        groups,
                        witness: s.to_vec(),
                        assignment,
                    },
                );
            }
        }
    }
    Ok(SupplementaryGraph {
        t: cs.t(),
        edges: found.into_values().collect(),
    })
}

/// Re-checks a supplementary edge against the system's definition.
pub fn verify_witness(cs: &ClusterSystem, e: &SuppEdge) -> bool {
    let Ok(reduced) = cs.reduced() else { return false };
    if !reduced.contains_edge(&e.witness) || e.assignment.len() != e.witness.len() {
        return false;
    }
    let hosts_ok = e.witness.iter().zip(&e.assignment).all(|(&j, &(i, l))| {
        cs.groups.get(i).and_then(|g| g.clusters.get(l)) == Some(&j)
    });
    let groups: Vec<usize> = e.assignment.iter().map(|&(i, _)| i).sorted().dedup().collect();
    hosts_ok && groups == e.groups && groups.len() >= 2
}

pub fn check_connected(sg: &SupplementaryGraph) -> bool {
    sg.t >= 1 && components_of(sg.t, sg.edges.iter().map(|e| e.groups.as_slice())).len() == 1
}

/// A walk from `b` to `a` through every group, of length at most
/// `2(t'-1)`: a depth-first tour of a BFS tree rooted at `b` that leaves
/// the branch towards `a` for last and does not return from it.
///
/// With a single group the walk is empty (one vertex, no edges).
pub fn cover_walk(sg: &SupplementaryGraph, b: usize, a: usize) -> Result<Walk, LinkError> {
    let t = sg.t;
    if a >= t || b >= t {
        return Err(LinkError::InvalidWalk(format!("endpoints {b}, {a} outside 0..{t}")));
    }
    if !check_connected(sg) {
        return Err(LinkError::NotConnected);
    }
    if t == 1 {
        return Ok(Walk {
            vertices: vec![a],
            edges: Vec::new(),
        });
    }
    // First edge (in sorted order) through each adjacent pair.
    let mut via: BTreeMap<(usize, usize), &[usize]> = BTreeMap::new();
    for e in &sg.edges {
        for (&u, &v) in e.groups.iter().tuple_combinations() {
            via.entry((u, v)).or_insert(&e.groups);
            via.entry((v, u)).or_insert(&e.groups);
        }
    }
    let mut parent = vec![usize::MAX; t];
    let mut children = vec![Vec::new(); t];
    parent[b] = b;
    let mut queue = VecDeque::from([b]);
    while let Some(u) = queue.pop_front() {
        for v in 0..t {
            if parent[v] == usize::MAX && via.contains_key(&(u, v)) {
                parent[v] = u;
                children[u].push(v);
                queue.push_back(v);
            }
        }
    }
    let mut spine = vec![a];
    while *spine.last().unwrap() != b {
        spine.push(parent[*spine.last().unwrap()]);
    }
    spine.reverse();

    let mut walk = Walk {
        vertices: vec![b],
        edges: Vec::new(),
    };
    let step = |walk: &mut Walk, u: usize, v: usize| {
        walk.edges.push(via[&(u, v)].to_vec());
        walk.vertices.push(v);
    };
    fn excursion(
        u: usize,
        children: &[Vec<usize>],
        walk: &mut Walk,
        step: &dyn Fn(&mut Walk, usize, usize),
    ) {
        for &c in &children[u] {
            step(walk, u, c);
            excursion(c, children, walk, step);
            step(walk, c, u);
        }
    }
    for (idx, &u) in spine.iter().enumerate() {
        let next = spine.get(idx + 1).copied();
        for &c in children[u].iter().filter(|&&c| Some(c) != next) {
            step(&mut walk, u, c);
            excursion(c, &children, &mut walk, &step);
            step(&mut walk, c, u);
        }
        if let Some(v) = next {
            step(&mut walk, u, v);
        }
    }
    Ok(walk)
}

/// Vertex and edge budget of a group's remaining vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSplit {
    pub group: usize,
    pub paths: usize,
    pub short_paths: usize,
    pub short_path_vertices: usize,
    /// Vertices left for the last path, assuming each connecting path uses
    /// exactly its minimal residue from the group.
    pub remainder_vertices: i64,
    pub remaining_vertices: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkPlan {
    pub k: usize,
    pub initial_excess: usize,
    /// Groups `r_1, ..., r_{l+1}` visited by the walk.
    pub walk_groups: Vec<usize>,
    pub walk_edges: Vec<Vec<usize>>,
    /// Number of occurrences of each group in the walk.
    pub d: Vec<usize>,
    pub initial_sizes: Vec<usize>,
    /// Per step, the residue each group of the step's edge must contribute.
    pub targets: Vec<BTreeMap<usize, usize>>,
    /// `|X^i(j)| mod (k-1)` for `j = 0..=l`.
    pub running_residues: Vec<Vec<usize>>,
    /// `|X^i(l)| mod (k-1)`, certified to equal `-d_i`.
    pub final_residues: Vec<usize>,
    /// `|Y^i| mod (k-1)` after removing the `2(k-2)d_i` end-set vertices,
    /// certified to equal `d_i`.
    pub remainder_residues: Vec<usize>,
    pub splits: Vec<GroupSplit>,
}

fn modq(x: i64, q: usize) -> usize {
    x.rem_euclid(q as i64) as usize
}

/// Computes the residue targets along `walk` and certifies the congruences
/// of the leftover group sizes.
///
/// `initial_excess` is the number of host vertices outside the exceptional
/// path, modulo k-1; it must be `-1` and must agree with the total group
/// size.
pub fn plan_congruences(cs: &ClusterSystem, walk: &Walk, initial_excess: usize) -> Result<LinkPlan, LinkError> {
    let sg = build_supplementary(cs)?;
    let (k, t) = (cs.k, cs.t());
    let q = k - 1;
    if initial_excess % q != q - 1 {
        return Err(LinkError::Infeasible(format!(
            "{initial_excess} vertices outside the exceptional path is not -1 modulo {q}"
        )));
    }
    let total: usize = (0..t).map(|i| cs.group_size(i)).sum();
    if total % q != initial_excess % q {
        return Err(LinkError::Infeasible(format!(
            "group sizes sum to {total}, inconsistent with excess {initial_excess} modulo {q}"
        )));
    }
    check_walk(&sg, walk)?;
    let r = &walk.vertices;
    let ell = walk.edges.len();
    let mut d = vec![0usize; t];
    r.iter().for_each(|&i| d[i] += 1);

    let sizes: Vec<usize> = (0..t).map(|i| cs.group_size(i)).collect();
    let mut res: Vec<usize> = sizes.iter().map(|&s| s % q).collect();
    let mut consumed = vec![0i64; t];
    let mut targets = Vec::with_capacity(ell);
    let mut running = vec![res.clone()];
    for j in 0..ell {
        let next = r[j + 1];
        let mut step = BTreeMap::new();
        let mut sum = 0i64;
        for &i in walk.edges[j].iter().filter(|&&i| i != next) {
            let ti = (res[i] + d[i]) % q;
            step.insert(i, ti);
            sum += ti as i64;
        }
        step.insert(next, modq(1 - sum, q));
        for (&i, &ti) in &step {
            res[i] = modq(res[i] as i64 - ti as i64, q);
            consumed[i] += ti as i64;
        }
        targets.push(step);
        running.push(res.clone());
    }
    let end_sets = |i: usize| (2 * (k - 2) * d[i]) as i64;
    let remainder: Vec<usize> = (0..t).map(|i| modq(res[i] as i64 - end_sets(i), q)).collect();
    for i in 0..t {
        if res[i] != modq(-(d[i] as i64), q) {
            return Err(LinkError::CongruenceFailure(format!(
                "group {i}: |X(l)| = {} mod {q}, expected -{}",
                res[i], d[i]
            )));
        }
        if remainder[i] != d[i] % q {
            return Err(LinkError::CongruenceFailure(format!(
                "group {i}: |Y| = {} mod {q}, expected {}",
                remainder[i], d[i]
            )));
        }
    }
    let short = 2 * k - 1;
    let splits = (0..t)
        .map(|i| {
            let remaining = sizes[i] as i64 - consumed[i] - end_sets(i);
            let rest = remaining - ((d[i] - 1) * short) as i64;
            GroupSplit {
                group: i,
                paths: d[i],
                short_paths: d[i] - 1,
                short_path_vertices: short,
                remainder_vertices: rest,
                remaining_vertices: remaining,
            }
        })
        .collect::<Vec<_>>();
    if let Some(s) = splits.iter().find(|s| modq(s.remainder_vertices, q) != 1 % q) {
        return Err(LinkError::CongruenceFailure(format!(
            "group {}: last path would use {} vertices",
            s.group, s.remainder_vertices
        )));
    }
    Ok(LinkPlan {
        k,
        initial_excess,
        walk_groups: r.clone(),
        walk_edges: walk.edges.clone(),
        d,
        initial_sizes: sizes,
        targets,
        running_residues: running,
        final_residues: res,
        remainder_residues: remainder,
        splits,
    })
}

fn check_walk(sg: &SupplementaryGraph, walk: &Walk) -> Result<(), LinkError> {
    let t = sg.t;
    let bad = |m: String| Err(LinkError::InvalidWalk(m));
    if walk.vertices.iter().any(|&i| i >= t) {
        return bad("walk leaves the group set".into());
    }
    if walk.edges.is_empty() {
        if t == 1 && walk.vertices.len() == 1 {
            return Ok(());
        }
        return bad("empty walk with more than one group".into());
    }
    if !walk.is_valid_with(|e| sg.contains(e)) {
        return bad("walk axioms or supplementary edges violated".into());
    }
    let seen: BTreeSet<usize> = walk.vertices.iter().copied().collect();
    if seen.len() != t {
        return bad(format!("walk visits {} of {t} groups", seen.len()));
    }
    if walk.edges.len() > t * t {
        return bad(format!("length {} exceeds {}", walk.edges.len(), t * t));
    }
    Ok(())
}

/// The two sets `A`, `B` of size k-1 opening the exceptional path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbSpec {
    pub a: Vec<Vertex>,
    pub b: Vec<Vertex>,
}

/// Finds `A`, `B` in `pool` with `|A ∩ B| = overlap` such that some
/// `x_0 + A` and `B + x_1` are edges with `x_0 != x_1` outside `A ∪ B`.
pub fn choose_ab(g: &KGraph, pool: &[Vertex], overlap: usize) -> Option<AbSpec> {
    let k = g.k();
    if overlap == 0 || overlap >= k {
        return None;
    }
    let inside: BTreeSet<Vertex> = pool.iter().copied().collect();
    let within = |e: &[Vertex]| e.iter().all(|v| inside.contains(v));
    for e1 in g.edges().filter(|e| within(e)) {
        for &x0 in e1 {
            let a: Vec<Vertex> = e1.iter().copied().filter(|&v| v != x0).collect();
            let common = &a[..overlap];
            for &ei in g.incident(common[0]) {
                let e2 = g.edge(ei);
                if !within(e2) || e2.contains(&x0) || !common.iter().all(|v| e2.contains(v)) {
                    continue;
                }
                if e2.iter().filter(|v| a.contains(v)).count() != overlap {
                    continue;
                }
                let x1 = *e2.iter().rev().find(|v| !common.contains(v)).unwrap();
                let b: Vec<Vertex> = e2.iter().copied().filter(|&v| v != x1).collect();
                return Some(AbSpec { a: a.clone(), b });
            }
        }
    }
    None
}

/// Greedy exceptional path absorbing `v0` in chunks of k-2 vertices.
///
/// With `ab`, the path opens with `x_0 + A` and `B + x_1` (overlapping in
/// `A ∩ B`); then every chunk `Z_i` gets the edge `Z_i + {x_i, x_{i+1}}`,
/// `x_{i+1}` being the first unused vertex of `pool` that completes it.
/// Without `ab` and with `v0` empty the result is the empty path.
pub fn absorb_exceptional(
    g: &KGraph,
    v0: &[Vertex],
    pool: &[Vertex],
    ab: Option<&AbSpec>,
) -> Result<LoosePath, LinkError> {
    let k = g.k();
    let q = k - 1;
    let bad = |m: String| Err(LinkError::InvalidInput(m));
    if k < 3 {
        return bad(format!("k = {k} is below 3"));
    }
    if !v0.len().is_multiple_of(k - 2) {
        return bad(format!("{} vertices do not split into chunks of {}", v0.len(), k - 2));
    }
    let v0_set: BTreeSet<Vertex> = v0.iter().copied().collect();
    if v0_set.len() != v0.len() || pool.iter().any(|v| v0_set.contains(v)) {
        return bad("v0 must be duplicate free and disjoint from the pool".into());
    }
    if let Some(&v) = v0.iter().chain(pool).find(|&&v| v >= g.n()) {
        return bad(format!("vertex {v} outside the host"));
    }
    let mut used: BTreeSet<Vertex> = v0_set.clone();
    let mut order = Vec::new();
    let mut edges = Vec::new();
    let chunks: Vec<&[Vertex]> = v0.chunks(k - 2).collect();
    let edge_with = |extra: &[Vertex], x: Vertex| {
        let mut e = extra.to_vec();
        e.push(x);
        g.contains_edge(&e)
    };

    let mut current = match ab {
        Some(ab) => {
            let (a, b) = (&ab.a, &ab.b);
            let common: Vec<Vertex> = a.iter().copied().filter(|v| b.contains(v)).collect();
            let o = common.len();
            if a.len() != q || b.len() != q || o == 0 || a.iter().chain(b).any(|v| v0_set.contains(v)) {
                return bad("A and B must be (k-1)-sets outside v0 sharing a vertex".into());
            }
            if o % q != modq(1 - g.n() as i64, q) {
                return bad(format!("|A ∩ B| = {o} is not 1 - n modulo {q}"));
            }
            used.extend(a.iter().chain(b));
            let x0 = pool.iter().copied().find(|&x| !used.contains(&x) && edge_with(a, x));
            let Some(x0) = x0 else {
                return Err(LinkError::Stuck { absorbed: 0, total: chunks.len() });
            };
            used.insert(x0);
            let x1 = pool.iter().copied().find(|&x| !used.contains(&x) && edge_with(b, x));
            let Some(x1) = x1 else {
                return Err(LinkError::Stuck { absorbed: 0, total: chunks.len() });
            };
            used.insert(x1);
            order.push(x0);
            order.extend(a.iter().filter(|v| !b.contains(v)));
            order.extend(&common);
            order.extend(b.iter().filter(|v| !a.contains(v)));
            order.push(x1);
            let mut e1 = a.clone();
            e1.push(x0);
            let mut e2 = b.clone();
            e2.push(x1);
            edges.push(e1.into_iter().sorted().collect());
            edges.push(e2.into_iter().sorted().collect());
            Some(x1)
        }
        None => None,
    };

    for (i, z) in chunks.iter().enumerate() {
        let start = match current {
            Some(x) => x,
            None => {
                let first = pool.iter().copied().find(|&x| {
                    let mut zx = z.to_vec();
                    zx.push(x);
                    pool.iter().any(|&y| y != x && edge_with(&zx, y))
                });
                let Some(x) = first else {
                    return Err(LinkError::Stuck { absorbed: 0, total: chunks.len() });
                };
                used.insert(x);
                order.push(x);
                x
            }
        };
        let mut zx = z.to_vec();
        zx.push(start);
        let next = pool.iter().copied().find(|&y| !used.contains(&y) && edge_with(&zx, y));
        let Some(next) = next else {
            return Err(LinkError::Stuck { absorbed: i, total: chunks.len() });
        };
        used.insert(next);
        order.extend(z.iter());
        order.push(next);
        zx.push(next);
        edges.push(zx.into_iter().sorted().collect());
        current = Some(next);
    }
    let path = LoosePath { order, edges };
    if !path.is_empty() {
        validate_path_with(g, &path, PathRules::relaxed())
            .map_err(|v| LinkError::InvalidInput(format!("built path is invalid: {v}")))?;
        if ab.is_some() && modq(g.n() as i64 - path.order.len() as i64, q) != q - 1 {
            return Err(LinkError::CongruenceFailure(format!(
                "{} vertices remain outside the exceptional path",
                g.n() - path.order.len()
            )));
        }
    }
    Ok(path)
}

/// A prepath with its sets of possible initial and final vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedPrepath {
    pub prepath: Prepath,
    pub possible_initial: Vec<Vertex>,
    pub possible_final: Vec<Vertex>,
}

/// Chooses `I` from `initial_pool` maximising the number of possible
/// initial vertices inside the pool (ties broken lexicographically), then
/// `F` likewise from `final_pool` minus `I`.
pub fn extend_to_prepath(
    g: &KGraph,
    p: &LoosePath,
    initial_pool: &[Vertex],
    final_pool: &[Vertex],
) -> Result<ExtendedPrepath, LinkError> {
    let k = g.k();
    let (Some(first), Some(last)) = (p.first(), p.last()) else {
        return Err(LinkError::InvalidInput("empty path".into()));
    };
    let on_path: BTreeSet<Vertex> = p.order.iter().copied().collect();
    if initial_pool.iter().chain(final_pool).any(|v| on_path.contains(v)) {
        return Err(LinkError::InvalidInput("pools must avoid the path".into()));
    }
    let best = |pool: &[Vertex], end: Vertex, avoid: &BTreeSet<Vertex>| {
        let pool: Vec<Vertex> = pool.iter().copied().filter(|v| !avoid.contains(v)).sorted().dedup().collect();
        let mut top: Option<(Vec<Vertex>, Vec<Vertex>)> = None;
        for set in pool.iter().copied().combinations(k - 2) {
            let mut base = set.clone();
            base.push(end);
            let ends: Vec<Vertex> = pool
                .iter()
                .copied()
                .filter(|x| !set.contains(x))
                .filter(|&x| {
                    let mut e = base.clone();
                    e.push(x);
                    g.contains_edge(&e)
                })
                .collect();
            if !ends.is_empty() && top.as_ref().is_none_or(|(_, t)| ends.len() > t.len()) {
                top = Some((set, ends));
            }
        }
        top
    };
    let (iset, mut ipos) = best(initial_pool, first, &BTreeSet::new()).ok_or(LinkError::NoExtension)?;
    let taken: BTreeSet<Vertex> = iset.iter().copied().collect();
    let (fset, mut fpos) = best(final_pool, last, &taken).ok_or(LinkError::NoExtension)?;
    ipos.retain(|v| !fset.contains(v));
    fpos.retain(|v| !iset.contains(v));
    Ok(ExtendedPrepath {
        prepath: Prepath {
            core: p.clone(),
            initial_set: iset,
            final_set: fset,
        },
        possible_initial: ipos,
        possible_final: fpos,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostKind {
    Complete,
    /// Every k-set kept independently with this probability.
    Random(f64),
    /// Only k-sets inside one group together with the exceptional vertices.
    GroupLocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub k: usize,
    pub groups: usize,
    /// Total number of host vertices, exceptional ones included.
    pub vertices: usize,
    pub exceptional: usize,
    pub host: HostKind,
    pub seed: u64,
}

/// Explicit host with groups laid out consecutively: group `i`, class `l`
/// is hosted in cluster `i*k + l` and class sizes differ by at most one;
/// exceptional vertices come last. The reduced graph has every k-set of
/// clusters as an edge.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub system: ClusterSystem,
    pub host: KGraph,
    pub members: Vec<Vec<Vec<Vertex>>>,
    pub exceptional: Vec<Vertex>,
}

impl SyntheticInstance {
    pub fn generate(cfg: &SyntheticConfig) -> Result<Self, LinkError> {
        let k = cfg.k;
        let classes = cfg.groups * k;
        let grouped = cfg.vertices.saturating_sub(cfg.exceptional);
        if k < 3 || cfg.groups == 0 || grouped < classes {
            return Err(LinkError::InvalidInput("need k >= 3, a group and nonempty classes".into()));
        }
        if !cfg.exceptional.is_multiple_of(k - 2) {
            return Err(LinkError::InvalidInput(format!(
                "{} exceptional vertices do not split into chunks of {}",
                cfg.exceptional,
                k - 2
            )));
        }
        let mut next = 0;
        let mut group_of = vec![None; cfg.vertices];
        let members: Vec<Vec<Vec<Vertex>>> = (0..cfg.groups)
            .map(|i| {
                (0..k)
                    .map(|l| {
                        let size = grouped / classes + usize::from(i * k + l < grouped % classes);
                        let c: Vec<Vertex> = (next..next + size).collect();
                        c.iter().for_each(|&v| group_of[v] = Some(i));
                        next += size;
                        c
                    })
                    .collect()
            })
            .collect();
        let exceptional: Vec<Vertex> = (next..next + cfg.exceptional).collect();
        let n = next + cfg.exceptional;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let edges: Vec<Vec<Vertex>> = match cfg.host {
            HostKind::Complete => (0..n).combinations(k).collect(),
            HostKind::Random(p) => (0..n).combinations(k).filter(|_| rng.gen_bool(p)).collect(),
            HostKind::GroupLocal => (0..n)
                .combinations(k)
                .filter(|e| e.iter().filter_map(|&v| group_of[v]).all_equal())
                .collect(),
        };
        let host = KGraph::new(n, k, &edges).expect("generated edges are valid");
        let system = ClusterSystem {
            k,
            groups: (0..cfg.groups)
                .map(|i| ClusterGroup {
                    classes: members[i].iter().map(Vec::len).collect(),
                    clusters: (0..k).map(|l| i * k + l).collect(),
                })
                .collect(),
            reduced_edges: (0..cfg.groups * k).combinations(k).collect(),
        };
        Ok(SyntheticInstance {
            system,
            host,
            members,
            exceptional,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStage {
    ExceptionalPath,
    Prepath,
    Walk,
    Plan,
    ConnectingPath,
    Split,
    Concatenate,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("pipeline failed at {stage:?}: {detail}")]
pub struct PipelineFailure {
    pub stage: PipelineStage,
    pub detail: String,
}

fn fail<T>(stage: PipelineStage, detail: impl ToString) -> Result<T, PipelineFailure> {
    Err(PipelineFailure {
        stage,
        detail: detail.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub cycle: LooseCycle,
    pub plan: LinkPlan,
    pub exceptional_path: LoosePath,
    pub connecting_paths: Vec<LoosePath>,
    /// Group paths that needed exact search instead of the explicit
    /// k-partite construction.
    pub search_fallbacks: usize,
}

/// Runs the full linking skeleton on `inst` and returns a loose Hamilton
/// cycle of its host. `seed` fixes the order in which candidate vertices
/// are tried.
pub fn assemble_pipeline(
    inst: &SyntheticInstance,
    seed: u64,
    budget: &SearchBudget,
) -> Result<PipelineOutput, PipelineFailure> {
    let g = &inst.host;
    let (n, k) = (g.n(), g.k());
    let q = k - 1;
    let t = inst.members.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut group_of: Vec<Option<usize>> = vec![None; n];
    let mut class_of: Vec<Option<usize>> = vec![None; n];
    for (i, classes) in inst.members.iter().enumerate() {
        for (l, c) in classes.iter().enumerate() {
            for &v in c {
                group_of[v] = Some(i);
                class_of[v] = Some(l);
            }
        }
    }

    // Exceptional path, drawing alternately from the groups.
    let mut per_group: Vec<Vec<Vertex>> = inst
        .members
        .iter()
        .map(|cl| {
            // Round-robin over the classes so none is drained first.
            let shuffled: Vec<Vec<Vertex>> = cl
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    c.shuffle(&mut rng);
                    c
                })
                .collect();
            let rounds = shuffled.iter().map(Vec::len).max().unwrap_or(0);
            (0..rounds).flat_map(|r| shuffled.iter().filter_map(move |c| c.get(r).copied())).collect()
        })
        .collect();
    let longest = per_group.iter().map(Vec::len).max().unwrap_or(0);
    let pool: Vec<Vertex> = (0..longest)
        .flat_map(|r| per_group.iter().filter_map(move |g| g.get(r).copied()))
        .collect();
    let overlap = match modq(1 - n as i64, q) {
        0 => q,
        o => o,
    };
    let Some(ab) = choose_ab(g, &pool, overlap) else {
        return fail(PipelineStage::ExceptionalPath, "no opening pair of edges");
    };
    let mut v0 = inst.exceptional.clone();
    v0.shuffle(&mut rng);
    let le = absorb_exceptional(g, &v0, &pool, Some(&ab)).or_else(|e| fail(PipelineStage::ExceptionalPath, e))?;
    let mut used: BTreeSet<Vertex> = le.order.iter().copied().collect();
    per_group.iter_mut().for_each(|vs| vs.retain(|v| !used.contains(v)));

    let group_at = |v: Vertex| group_of[v];
    let (Some(a), Some(b)) = (group_at(le.order[0]), group_at(*le.order.last().unwrap())) else {
        return fail(PipelineStage::ExceptionalPath, "path ends outside the groups");
    };
    let avail = |i: usize, used: &BTreeSet<Vertex>| -> Vec<Vertex> {
        balanced_order(per_group[i].iter().copied().filter(|v| !used.contains(v)), &class_of)
    };
    let ext0 = extend_to_prepath(g, &le, &avail(a, &used), &avail(b, &used)).or_else(|e| fail(PipelineStage::Prepath, e))?;
    let mut prepaths = vec![ext0];
    used.extend(prepaths[0].prepath.initial_set.iter().chain(&prepaths[0].prepath.final_set));

    // Group sizes after the exceptional path; the end sets stay counted.
    let mut sizes = vec![vec![0usize; k]; t];
    for v in 0..n {
        if let (Some(i), Some(l)) = (group_of[v], class_of[v]) {
            if !le.order.contains(&v) {
                sizes[i][l] += 1;
            }
        }
    }
    let system = ClusterSystem {
        k,
        groups: inst
            .system
            .groups
            .iter()
            .zip(&sizes)
            .map(|(gr, s)| ClusterGroup {
                classes: s.clone(),
                clusters: gr.clusters.clone(),
            })
            .collect(),
        reduced_edges: inst.system.reduced_edges.clone(),
    };
    let sg = build_supplementary(&system).or_else(|e| fail(PipelineStage::Walk, e))?;
    let walk = cover_walk(&sg, b, a).or_else(|e| fail(PipelineStage::Walk, e))?;
    let excess = (n - le.order.len()) % q;
    let plan = plan_congruences(&system, &walk, excess).or_else(|e| fail(PipelineStage::Plan, e))?;

    // Connecting paths along the walk.
    let thresholds = default_endpoint_thresholds(g, &group_of);
    let mut connecting = Vec::new();
    for (j, step) in plan.targets.iter().enumerate() {
        let (from, to) = (plan.walk_groups[j], plan.walk_groups[j + 1]);
        let class_map: Vec<Option<usize>> = group_of
            .iter()
            .map(|c| c.filter(|i| step.contains_key(i)))
            .collect();
        let mut spec = ConnectSpec::new(k, class_map, step.clone(), from, to);
        spec.forbidden = used.clone();
        spec.endpoint_min_degree = thresholds.clone();
        let mut rank = vec![usize::MAX; n];
        for i in 0..t {
            avail(i, &used).into_iter().enumerate().for_each(|(r, v)| rank[v] = r);
        }
        spec.vertex_rank = Some(rank);
        let path = match find_loose_path_constrained(g, &spec, budget) {
            Ok(Outcome::Found(p)) => p,
            Ok(Outcome::None) => return fail(PipelineStage::ConnectingPath, format!("no path for step {}", j + 1)),
            Ok(Outcome::BudgetExhausted) => {
                return fail(PipelineStage::ConnectingPath, format!("budget exhausted at step {}", j + 1))
            }
            Err(e) => return fail(PipelineStage::ConnectingPath, e),
        };
        used.extend(path.order.iter().copied());
        let ext = extend_to_prepath(g, &path, &avail(from, &used), &avail(to, &used))
            .or_else(|e| fail(PipelineStage::Prepath, e))?;
        used.extend(ext.prepath.initial_set.iter().chain(&ext.prepath.final_set));
        connecting.push(path);
        prepaths.push(ext);
    }

    // Split what is left of each group into d_i paths.
    let ell = plan.targets.len();
    let mut connectors: Vec<Option<LoosePath>> = vec![None; ell + 1];
    let mut fallbacks = 0;
    for i in 0..t {
        let mut left: Vec<Vertex> = avail(i, &used);
        left.sort_unstable();
        if left.len() % q != plan.d[i] % q {
            return fail(PipelineStage::Split, format!("group {i} has {} vertices left, d = {}", left.len(), plan.d[i]));
        }
        let slots: Vec<usize> = (1..=ell + 1).filter(|&j| plan.walk_groups[j - 1] == i).collect();
        let mut taken: BTreeSet<Vertex> = BTreeSet::new();
        let mut ends = Vec::new();
        for &j in &slots {
            let starts = &prepaths[j - 1].possible_final;
            let finals = &prepaths[j % (ell + 1)].possible_initial;
            let pick = |set: &[Vertex], taken: &BTreeSet<Vertex>| {
                let rest = left.iter().copied().filter(|v| !taken.contains(v));
                balanced_order(rest, &class_of).into_iter().find(|v| set.contains(v))
            };
            let Some(u) = pick(starts, &taken) else {
                return fail(PipelineStage::Split, format!("no free start for connector {j}"));
            };
            taken.insert(u);
            let Some(v) = pick(finals, &taken) else {
                return fail(PipelineStage::Split, format!("no free end for connector {j}"));
            };
            taken.insert(v);
            ends.push((j, u, v));
        }
        let mut free: BTreeSet<Vertex> = left.iter().copied().filter(|v| !taken.contains(v)).collect();
        let (last, short) = ends.split_last().expect("every group is visited");
        for &(j, u, v) in short {
            let Some(p) = two_edge_path(g, &balanced_order(free.iter().copied(), &class_of), u, v) else {
                return fail(PipelineStage::Split, format!("no two-edge path for connector {j}"));
            };
            p.order.iter().for_each(|x| {
                free.remove(x);
            });
            connectors[j - 1] = Some(p);
        }
        let &(j, u, v) = last;
        let mut rest: Vec<Vertex> = free.into_iter().collect();
        rest.extend([u, v]);
        if rest.len() < k {
            return fail(PipelineStage::Split, format!("only {} vertices left for connector {j}", rest.len()));
        }
        let p = match embed_complete(g, &rest, &class_of, u, v) {
            Some(p) => p,
            None => {
                fallbacks += 1;
                match find_spanning_loose_path(g, &rest, u, v, budget) {
                    Ok(Outcome::Found(p)) => p,
                    other => return fail(PipelineStage::Split, format!("no spanning path for connector {j}: {other:?}")),
                }
            }
        };
        connectors[j - 1] = Some(p);
    }

    let connectors: Vec<LoosePath> = connectors.into_iter().map(|c| c.expect("all slots filled")).collect();
    let pre: Vec<Prepath> = prepaths.into_iter().map(|e| e.prepath).collect();
    let cycle = concatenate(g, &pre, &connectors).or_else(|e| fail(PipelineStage::Concatenate, e))?;
    validate_loose_cycle(g, &cycle, true).or_else(|e| fail(PipelineStage::Concatenate, e))?;
    Ok(PipelineOutput {
        cycle,
        plan,
        exceptional_path: le,
        connecting_paths: connecting,
        search_fallbacks: fallbacks,
    })
}

/// Interleaves the classes of `vs`, largest class first, so that greedy
/// choices drain the classes evenly.
fn balanced_order(vs: impl Iterator<Item = Vertex>, class_of: &[Option<usize>]) -> Vec<Vertex> {
    let mut by_class: BTreeMap<Option<usize>, Vec<Vertex>> = BTreeMap::new();
    for v in vs {
        by_class.entry(class_of[v]).or_default().push(v);
    }
    let mut classes: Vec<Vec<Vertex>> = by_class.into_values().collect();
    classes.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let rounds = classes.first().map_or(0, Vec::len);
    (0..rounds).flat_map(|r| classes.iter().filter_map(move |c| c.get(r).copied())).collect()
}

/// A loose path `u, ..., v` with two edges inside `free + {u, v}`, trying
/// the vertices of `free` in the given order.
fn two_edge_path(g: &KGraph, free: &[Vertex], u: Vertex, v: Vertex) -> Option<LoosePath> {
    let k = g.k();
    if free.len() < 2 * k - 3 {
        return None;
    }
    let with = |base: &[Vertex], extra: &[Vertex]| -> Vec<Vertex> {
        base.iter().chain(extra).copied().sorted().collect()
    };
    for first in free.iter().copied().combinations(k - 1) {
        let e1 = with(&[u], &first);
        if !g.contains_edge(&e1) {
            continue;
        }
        for &w in &first {
            let rest = free.iter().copied().filter(|x| !first.contains(x));
            for second in rest.combinations(k - 2) {
                let e2 = with(&[w, v], &second);
                if g.contains_edge(&e2) {
                    let mut order = vec![u];
                    order.extend(first.iter().filter(|&&x| x != w));
                    order.push(w);
                    order.extend(&second);
                    order.push(v);
                    let p = LoosePath {
                        order,
                        edges: vec![e1, e2],
                    };
                    debug_assert_eq!(validate_loose_path(g, &p), Ok(()));
                    return Some(p);
                }
            }
        }
    }
    None
}

/// The explicit k-partite construction on the class structure of `rest`,
/// accepted only if every edge it uses is present in `g`.
fn embed_complete(
    g: &KGraph,
    rest: &[Vertex],
    class_of: &[Option<usize>],
    u: Vertex,
    v: Vertex,
) -> Option<LoosePath> {
    let k = g.k();
    let mut classes = vec![Vec::new(); k];
    for &x in rest.iter().filter(|&&x| x != u && x != v).sorted() {
        classes[class_of[x]?].push(x);
    }
    let (s, t) = (class_of[u]?, class_of[v]?);
    classes[t].insert(0, v);
    classes[s].insert(0, u);
    let b: Vec<usize> = classes.iter().map(Vec::len).collect();
    let parts = PartitionedVertexSet::new(classes).ok()?;
    let p = build_loose_path_complete(&parts, &b, s, t).ok()?;
    p.edges.iter().all(|e| g.contains_edge(e)).then_some(p)
}
