//! Packings of vertex-disjoint A_k copies.
//!
//! A copy is stored as its parts `U_0, ..., U_{2k-3}`; its edges are
//! `U_i + {x}` for `i >= 1` and `x` in `U_0`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::hypergraph::{KGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AkCopy {
    pub parts: Vec<Vec<Vertex>>,
}

impl AkCopy {
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.parts.iter().flatten().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = Vec<Vertex>> + '_ {
        self.parts[1..].iter().flat_map(move |u| {
            self.parts[0].iter().map(move |&x| {
                let mut e = u.clone();
                e.push(x);
                e.sort_unstable();
                e
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Packing {
    pub copies: Vec<AkCopy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PackingError {
    #[error("invalid packing: {0}")]
    InvalidPacking(String),
    #[error("k = {0} must be at least 3")]
    BadUniformity(usize),
    #[error("malformed packing JSON: {0}")]
    Json(String),
}

impl Packing {
    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    pub fn covered(&self) -> BTreeSet<Vertex> {
        self.copies.iter().flat_map(|c| c.vertices()).collect()
    }

    pub fn uncovered(&self, n: usize) -> Vec<Vertex> {
        let covered = self.covered();
        (0..n).filter(|v| !covered.contains(v)).collect()
    }

    /// Checks part shapes, disjointness and that every gadget edge is in `g`.
    pub fn validate(&self, g: &KGraph) -> Result<(), PackingError> {
        let k = g.k();
        let bad = |m: String| Err(PackingError::InvalidPacking(m));
        let mut seen = BTreeSet::new();
        for (ci, c) in self.copies.iter().enumerate() {
            if c.parts.len() != 2 * k - 2 || c.parts.iter().any(|u| u.len() != k - 1) {
                return bad(format!("copy {ci} does not have {} parts of size {}", 2 * k - 2, k - 1));
            }
            for v in c.vertices() {
                if v >= g.n() {
                    return bad(format!("copy {ci} uses unknown vertex {v}"));
                }
                if !seen.insert(v) {
                    return bad(format!("vertex {v} is used twice"));
                }
            }
            if let Some(e) = c.edges().find(|e| !g.contains_edge(e)) {
                return bad(format!("copy {ci} needs missing edge {e:?}"));
            }
        }
        Ok(())
    }

    /// `{"copies": [{"parts": {"U0": [...], ...}}], "uncovered": [...]}`.
    pub fn to_json(&self, n: usize) -> Value {
        let copies: Vec<Value> = self
            .copies
            .iter()
            .map(|c| {
                let parts: serde_json::Map<String, Value> = c
                    .parts
                    .iter()
                    .enumerate()
                    .map(|(i, u)| (format!("U{i}"), json!(u)))
                    .collect();
                json!({ "parts": parts })
            })
            .collect();
        json!({ "copies": copies, "uncovered": self.uncovered(n) })
    }

    pub fn from_json(v: &Value) -> Result<Self, PackingError> {
        let err = |m: &str| PackingError::Json(m.to_string());
        let copies = v
            .get("copies")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing \"copies\" array"))?;
        let mut out = Vec::with_capacity(copies.len());
        for c in copies {
            let parts = c
                .get("parts")
                .and_then(Value::as_object)
                .ok_or_else(|| err("copy without \"parts\" object"))?;
            let mut indexed: BTreeMap<usize, Vec<Vertex>> = BTreeMap::new();
            for (key, ids) in parts {
                let idx = key
                    .strip_prefix('U')
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| err("part keys must look like U0, U1, ..."))?;
                let ids: Vec<Vertex> =
                    serde_json::from_value(ids.clone()).map_err(|e| PackingError::Json(e.to_string()))?;
                indexed.insert(idx, ids);
            }
            if indexed.keys().copied().ne(0..indexed.len()) {
                return Err(err("part indices must be 0..parts"));
            }
            out.push(AkCopy {
                parts: indexed.into_values().collect(),
            });
        }
        Ok(Packing { copies: out })
    }
}

/// Lexicographically first A_k copy inside `allowed`, found by exhaustive
/// backtracking: `U_0` in lex order, then increasing tuples of disjoint
/// (k-1)-sets `T` with `T + {x}` an edge for every `x` in `U_0`.
pub fn embed_ak(g: &KGraph, allowed: &[bool]) -> Option<AkCopy> {
    let k = g.k();
    if k < 3 {
        return None;
    }
    let pool: Vec<Vertex> = (0..g.n()).filter(|&v| allowed[v]).collect();
    if pool.len() < 2 * (k - 1) * (k - 1) {
        return None;
    }
    for u0 in pool.iter().copied().combinations(k - 1) {
        let anchor = u0[0];
        let mut candidates: Vec<Vec<Vertex>> = g
            .incident(anchor)
            .iter()
            .map(|&ei| g.edge(ei))
            .filter(|e| e.iter().all(|&v| allowed[v] && (v == anchor || !u0.contains(&v))))
            .map(|e| e.iter().copied().filter(|&v| v != anchor).collect::<Vec<_>>())
            .filter(|t| {
                u0[1..].iter().all(|&x| {
                    let mut e = t.clone();
                    e.push(x);
                    g.contains_edge(&e)
                })
            })
            .collect();
        candidates.sort_unstable();
        let mut chosen = Vec::with_capacity(2 * k - 3);
        if pick_disjoint(&candidates, 0, 2 * k - 3, &mut chosen, &mut BTreeSet::new()) {
            let mut parts = vec![u0];
            parts.extend(chosen.into_iter().map(|i| candidates[i].clone()));
            return Some(AkCopy { parts });
        }
    }
    None
}

fn pick_disjoint(
    cands: &[Vec<Vertex>],
    from: usize,
    need: usize,
    chosen: &mut Vec<usize>,
    used: &mut BTreeSet<Vertex>,
) -> bool {
    if chosen.len() == need {
        return true;
    }
    for i in from..cands.len() {
        if cands.len() - i < need - chosen.len() {
            break;
        }
        if cands[i].iter().any(|v| used.contains(v)) {
            continue;
        }
        used.extend(&cands[i]);
        chosen.push(i);
        if pick_disjoint(cands, i + 1, need, chosen, used) {
            return true;
        }
        chosen.pop();
        cands[i].iter().for_each(|v| {
            used.remove(v);
        });
    }
    false
}

/// Repeatedly embeds A_k in the uncovered vertices until none fits.
pub fn greedy_pack(g: &KGraph) -> Packing {
    let mut allowed = vec![true; g.n()];
    let mut packing = Packing::default();
    while let Some(c) = embed_ak(g, &allowed) {
        c.vertices().for_each(|v| allowed[v] = false);
        packing.copies.push(c);
    }
    packing
}

/// Limits for the exchange search in [`augment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentBudget {
    /// Uncovered (k-1)-sets examined.
    pub max_sets: usize,
    /// Distinct (copies, k-sets) keys indexed.
    pub max_keys: usize,
}

impl Default for AugmentBudget {
    fn default() -> Self {
        AugmentBudget {
            max_sets: 200_000,
            max_keys: 2_000_000,
        }
    }
}

type ExchangeKey = Vec<(usize, Vec<Vertex>)>;

/// Tries to grow `p` by one copy.
///
/// First looks for a free copy among the uncovered vertices. Otherwise
/// indexes uncovered (k-1)-sets `S` by a set `Q` of k-1 copies each meeting
/// `N(S)` in at least k vertices together with a k-set `K^q` from each, and
/// once k(2k-3) disjoint sets share a key, replaces the copies in `Q` by k
/// new copies: copy `i` has `U_0 = {i-th vertex of K^q : q in Q}` and 2k-3
/// of the sets as its other parts.
pub fn augment(g: &KGraph, p: &Packing, budget: &AugmentBudget) -> Result<Option<Packing>, PackingError> {
    let k = g.k();
    if k < 3 {
        return Err(PackingError::BadUniformity(k));
    }
    p.validate(g)?;
    let covered = p.covered();
    let allowed: Vec<bool> = (0..g.n()).map(|v| !covered.contains(&v)).collect();
    if let Some(c) = embed_ak(g, &allowed) {
        let mut out = p.clone();
        out.copies.push(c);
        return Ok(Some(out));
    }
    if p.copies.len() < k - 1 {
        return Ok(None);
    }
    let owner: HashMap<Vertex, usize> = p
        .copies
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.vertices().map(move |v| (v, i)))
        .collect();
    let uncovered: Vec<Vertex> = (0..g.n()).filter(|&v| allowed[v]).collect();
    let need = k * (2 * k - 3);
    let mut index: HashMap<ExchangeKey, Vec<Vec<Vertex>>> = HashMap::new();
    for s in uncovered.iter().copied().combinations(k - 1).take(budget.max_sets) {
        let nb = g.neighbourhood(&s).unwrap_or_default();
        let mut hits: BTreeMap<usize, Vec<Vertex>> = BTreeMap::new();
        for v in nb {
            if let Some(&q) = owner.get(&v) {
                hits.entry(q).or_default().push(v);
            }
        }
        hits.retain(|_, vs| vs.len() >= k);
        for qs in hits.keys().copied().combinations(k - 1) {
            let choices = qs.iter().map(|q| hits[q].iter().copied().combinations(k));
            for ks in choices.multi_cartesian_product() {
                let key: ExchangeKey = qs.iter().copied().zip(ks).collect();
                if !index.contains_key(&key) && index.len() >= budget.max_keys {
                    continue;
                }
                let group = index.entry(key.clone()).or_default();
                if group.iter().any(|t| t.iter().any(|v| s.contains(v))) {
                    continue;
                }
                group.push(s.clone());
                if group.len() == need {
                    let out = exchange(p, &key, group, k);
                    out.validate(g)?;
                    return Ok(Some(out));
                }
            }
        }
    }
    Ok(None)
}

fn exchange(p: &Packing, key: &ExchangeKey, sets: &[Vec<Vertex>], k: usize) -> Packing {
    let removed: BTreeSet<usize> = key.iter().map(|(q, _)| *q).collect();
    let mut copies: Vec<AkCopy> = p
        .copies
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, c)| c.clone())
        .collect();
    for (i, group) in sets.chunks(2 * k - 3).enumerate() {
        let mut u0: Vec<Vertex> = key.iter().map(|(_, kq)| kq[i]).collect();
        u0.sort_unstable();
        let mut parts = vec![u0];
        parts.extend(group.iter().cloned());
        copies.push(AkCopy { parts });
    }
    Packing { copies }
}

/// Keeps the copies inside the largest component of the subgraph induced by
/// the covered vertices; ties go to the component with the smallest vertex.
pub fn connected_filter(g: &KGraph, p: &Packing) -> Packing {
    let covered: Vec<Vertex> = p.covered().into_iter().collect();
    if covered.is_empty() {
        return Packing::default();
    }
    let (sub, map) = g.restrict(&covered).expect("covered vertices lie in the host");
    let best = sub
        .components()
        .into_iter()
        .enumerate()
        .max_by_key(|(i, c)| (c.len(), std::cmp::Reverse(*i)))
        .map(|(_, c)| c)
        .unwrap();
    let keep: BTreeSet<Vertex> = best.into_iter().map(|v| map[v]).collect();
    Packing {
        copies: p
            .copies
            .iter()
            .filter(|c| c.vertices().all(|v| keep.contains(&v)))
            .cloned()
            .collect(),
    }
}

/// A k = 3 host holding two A_3 copies on `0..16` plus nine disjoint pairs
/// on `16..34`, each pair completing to an edge with three chosen vertices
/// of each copy. Returns the host and the two-copy packing.
pub fn planted_exchange_instance() -> (KGraph, Packing) {
    let copy = |base: usize| AkCopy {
        parts: (0..4).map(|i| vec![base + 2 * i, base + 2 * i + 1]).collect(),
    };
    let packing = Packing {
        copies: vec![copy(0), copy(8)],
    };
    let hubs = [0, 2, 4, 8, 10, 12];
    let mut edges: Vec<Vec<Vertex>> = packing.copies.iter().flat_map(|c| c.edges()).collect();
    for r in 0..9 {
        let (a, b) = (16 + 2 * r, 17 + 2 * r);
        edges.extend(hubs.iter().map(|&x| vec![x, a, b]));
    }
    (KGraph::new(34, 3, &edges).expect("planted edges are distinct"), packing)
}
