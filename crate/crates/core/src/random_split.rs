//! Martingale tail bounds and Monte Carlo experiments on the density of
//! randomly chosen sub-k-graphs of a k-partite k-graph.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{KGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("bound needs at least one difference constant")]
    EmptyConstants,
    #[error("all difference constants are zero while t > 0")]
    DivisionByZero,
    #[error("negative or non-finite argument")]
    BadArgument,
    #[error("edge {0:?} does not have one vertex in each class")]
    NonPartiteEdge(Vec<Vertex>),
    #[error("expected {expected} classes, got {got}")]
    ClassCount { expected: usize, got: usize },
    #[error("target {target} for class {class} is outside 1..={size}")]
    BadTarget { class: usize, target: usize, size: usize },
    #[error("at least one trial is required")]
    NoTrials,
}

/// `2 exp(-t^2 / (2 sum c_i^2))`.
pub fn azuma_bound(t: f64, c: &[f64]) -> Result<f64, SplitError> {
    if c.is_empty() {
        return Err(SplitError::EmptyConstants);
    }
    if !t.is_finite() || t < 0.0 || c.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(SplitError::BadArgument);
    }
    let s: f64 = c.iter().map(|x| x * x).sum();
    if t == 0.0 {
        return Ok(2.0);
    }
    if s == 0.0 {
        return Err(SplitError::DivisionByZero);
    }
    Ok(2.0 * (-t * t / (2.0 * s)).exp())
}

fn class_lookup(n: usize, classes: &[Vec<Vertex>]) -> Vec<Option<(usize, usize)>> {
    let mut at = vec![None; n];
    for (i, c) in classes.iter().enumerate() {
        for (j, &v) in c.iter().enumerate() {
            if v < n {
                at[v] = Some((i, j));
            }
        }
    }
    at
}

/// `|E| / prod |X_i|`; every edge must meet each class once.
pub fn kpartite_density(g: &KGraph, classes: &[Vec<Vertex>]) -> Result<f64, SplitError> {
    if classes.len() != g.k() {
        return Err(SplitError::ClassCount {
            expected: g.k(),
            got: classes.len(),
        });
    }
    let at = class_lookup(g.n(), classes);
    for e in g.edges() {
        let mut hit = vec![false; g.k()];
        for &v in e {
            match at[v] {
                Some((i, _)) if !hit[i] => hit[i] = true,
                _ => return Err(SplitError::NonPartiteEdge(e.to_vec())),
            }
        }
    }
    let total: f64 = classes.iter().map(|c| c.len() as f64).product();
    Ok(if total == 0.0 { 0.0 } else { g.edge_count() as f64 / total })
}

/// Random k-partite host on consecutive classes, each crossing k-set kept
/// with probability `p`.
pub fn random_kpartite_host(sizes: &[usize], p: f64, seed: u64) -> (KGraph, Vec<Vec<Vertex>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = 0;
    let classes: Vec<Vec<Vertex>> = sizes
        .iter()
        .map(|&s| {
            let c: Vec<Vertex> = (next..next + s).collect();
            next += s;
            c
        })
        .collect();
    let mut edges = Vec::new();
    let mut idx = vec![0usize; sizes.len()];
    if sizes.iter().all(|&s| s > 0) {
        'outer: loop {
            if rng.gen_bool(p) {
                edges.push(idx.iter().enumerate().map(|(i, &j)| classes[i][j]).collect());
            }
            for d in (0..sizes.len()).rev() {
                idx[d] += 1;
                if idx[d] < sizes[d] {
                    continue 'outer;
                }
                idx[d] = 0;
            }
            break;
        }
    }
    // Mixed-radix order over consecutive classes is already lexicographic.
    (KGraph::from_sorted_unique(next, sizes.len(), edges), classes)
}

/// Edges of a k-partite host as bitsets over the last class, keyed by the
/// positions of the other k-1 vertices within their classes.
pub struct PartiteIndex {
    sizes: Vec<usize>,
    words: usize,
    bits: Vec<u64>,
}

impl PartiteIndex {
    pub fn new(g: &KGraph, classes: &[Vec<Vertex>]) -> Result<Self, SplitError> {
        kpartite_density(g, classes)?;
        let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
        let k = sizes.len();
        let words = sizes[k - 1].div_ceil(64).max(1);
        let prefixes: usize = sizes[..k - 1].iter().product();
        let mut bits = vec![0u64; prefixes * words];
        let at = class_lookup(g.n(), classes);
        let mut pos = vec![0usize; k];
        for e in g.edges() {
            for &v in e {
                let (i, j) = at[v].unwrap();
                pos[i] = j;
            }
            let row = Self::row_of(&sizes, &pos[..k - 1]);
            let last = pos[k - 1];
            bits[row * words + last / 64] |= 1u64 << (last % 64);
        }
        Ok(PartiteIndex { sizes, words, bits })
    }

    fn row_of(sizes: &[usize], pos: &[usize]) -> usize {
        pos.iter().zip(sizes).fold(0, |r, (&p, &s)| r * s + p)
    }

    /// Number of edges with the i-th vertex at a position listed in
    /// `picks[i]` (positions within class i).
    pub fn count_inside(&self, picks: &[Vec<usize>]) -> u64 {
        let k = self.sizes.len();
        let mut mask = vec![0u64; self.words];
        for &p in &picks[k - 1] {
            mask[p / 64] |= 1u64 << (p % 64);
        }
        let mut total = 0u64;
        let mut cursor = vec![0usize; k - 1];
        if picks[..k - 1].iter().any(Vec::is_empty) {
            return 0;
        }
        let mut pos = vec![0usize; k - 1];
        loop {
            for i in 0..k - 1 {
                pos[i] = picks[i][cursor[i]];
            }
            let row = Self::row_of(&self.sizes, &pos) * self.words;
            total += (0..self.words)
                .map(|w| (self.bits[row + w] & mask[w]).count_ones() as u64)
                .sum::<u64>();
            let mut d = k - 1;
            loop {
                if d == 0 {
                    return total;
                }
                d -= 1;
                cursor[d] += 1;
                if cursor[d] < picks[d].len() {
                    break;
                }
                cursor[d] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitVariant {
    /// Each `W_i` is a uniform `t_i`-subset of `X_i`.
    ExactSize,
    /// Each vertex of `X_i` joins `W_i` independently with probability
    /// `t_i / |X_i|`.
    IndependentInclusion,
}

#[derive(Debug, Clone)]
pub struct SplitExperimentConfig {
    pub host: KGraph,
    pub classes: Vec<Vec<Vertex>>,
    pub targets: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub variant: SplitVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub variant: SplitVariant,
    pub seed: u64,
    pub trials: usize,
    pub threshold: f64,
    pub failures: usize,
    pub failure_rate: f64,
    pub host_density: f64,
    pub density_min: f64,
    pub density_max: f64,
    pub density_mean: f64,
    pub density_std: f64,
    pub total_vertices: usize,
    pub class_sizes: Vec<usize>,
    pub targets: Vec<usize>,
    pub mean_sample_sizes: Vec<f64>,
    /// Some class's mean sample size is more than three standard errors
    /// from its target (independent inclusion only).
    pub size_flag: bool,
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    // splitmix64 finaliser over the pair.
    let mut z = seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_trial(cfg: &SplitExperimentConfig, index: &PartiteIndex, trial: usize) -> (f64, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, trial));
    let picks: Vec<Vec<usize>> = cfg
        .classes
        .iter()
        .zip(&cfg.targets)
        .map(|(c, &t)| match cfg.variant {
            SplitVariant::ExactSize => sample(&mut rng, c.len(), t).into_vec(),
            SplitVariant::IndependentInclusion => {
                let p = t as f64 / c.len() as f64;
                (0..c.len()).filter(|_| rng.gen_bool(p)).collect()
            }
        })
        .collect();
    let sizes: Vec<usize> = picks.iter().map(Vec::len).collect();
    let cells: f64 = sizes.iter().map(|&s| s as f64).product();
    let density = if cells == 0.0 {
        0.0
    } else {
        index.count_inside(&picks) as f64 / cells
    };
    (density, sizes)
}

/// Runs the trials, counting those whose sample density is at most
/// `threshold`. Trial `i` draws from a generator seeded by `(seed, i)`, so
/// the report does not depend on scheduling.
pub fn run_split_experiment(cfg: &SplitExperimentConfig, threshold: f64) -> Result<SplitReport, SplitError> {
    if cfg.trials == 0 {
        return Err(SplitError::NoTrials);
    }
    if cfg.targets.len() != cfg.classes.len() {
        return Err(SplitError::ClassCount {
            expected: cfg.classes.len(),
            got: cfg.targets.len(),
        });
    }
    for (i, (c, &t)) in cfg.classes.iter().zip(&cfg.targets).enumerate() {
        if t == 0 || t > c.len() {
            return Err(SplitError::BadTarget {
                class: i,
                target: t,
                size: c.len(),
            });
        }
    }
    let host_density = kpartite_density(&cfg.host, &cfg.classes)?;
    let index = PartiteIndex::new(&cfg.host, &cfg.classes)?;
    let results = collect_trials(cfg, &index);

    let densities: Vec<f64> = results.iter().map(|(d, _)| *d).collect();
    let failures = densities.iter().filter(|&&d| d <= threshold).count();
    let t = cfg.trials as f64;
    let mean = densities.iter().sum::<f64>() / t;
    let var = densities.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / t;
    let k = cfg.classes.len();
    let mean_sample_sizes: Vec<f64> = (0..k)
        .map(|i| results.iter().map(|(_, s)| s[i] as f64).sum::<f64>() / t)
        .collect();
    let size_flag = cfg.variant == SplitVariant::IndependentInclusion
        && (0..k).any(|i| {
            let n = cfg.classes[i].len() as f64;
            let p = cfg.targets[i] as f64 / n;
            let se = (n * p * (1.0 - p) / t).sqrt();
            (mean_sample_sizes[i] - cfg.targets[i] as f64).abs() > 3.0 * se.max(f64::EPSILON)
        });
    Ok(SplitReport {
        variant: cfg.variant,
        seed: cfg.seed,
        trials: cfg.trials,
        threshold,
        failures,
        failure_rate: failures as f64 / t,
        host_density,
        density_min: densities.iter().copied().fold(f64::INFINITY, f64::min),
        density_max: densities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        density_mean: mean,
        density_std: var.sqrt(),
        total_vertices: cfg.classes.iter().map(Vec::len).sum(),
        class_sizes: cfg.classes.iter().map(Vec::len).collect(),
        targets: cfg.targets.clone(),
        mean_sample_sizes,
        size_flag,
    })
}

#[cfg(feature = "parallel")]
fn collect_trials(cfg: &SplitExperimentConfig, index: &PartiteIndex) -> Vec<(f64, Vec<usize>)> {
    use rayon::prelude::*;
    (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, index, i)).collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_trials(cfg: &SplitExperimentConfig, index: &PartiteIndex) -> Vec<(f64, Vec<usize>)> {
    (0..cfg.trials).map(|i| run_trial(cfg, index, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn azuma_values() {
        assert_eq!(azuma_bound(0.0, &[3.0]).unwrap(), 2.0);
        let v = azuma_bound(4.0, &[1.0; 8]).unwrap();
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((v - 0.735_758_88).abs() < 1e-6);
        assert_eq!(azuma_bound(1.0, &[0.0, 0.0]), Err(SplitError::DivisionByZero));
        assert_eq!(azuma_bound(1.0, &[]), Err(SplitError::EmptyConstants));
        assert!(azuma_bound(1e6, &[1.0]).unwrap() < 1e-300);
    }

    #[test]
    fn density_examples() {
        let classes = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        let one = KGraph::new(6, 3, [[0, 2, 4]]).unwrap();
        assert_eq!(kpartite_density(&one, &classes).unwrap(), 0.125);
        assert_eq!(kpartite_density(&KGraph::empty(6, 3).unwrap(), &classes).unwrap(), 0.0);
        let (full, cl) = random_kpartite_host(&[3, 4, 2], 1.0, 0);
        assert_eq!(kpartite_density(&full, &cl).unwrap(), 1.0);
        let bad = KGraph::new(6, 3, [[0, 1, 4]]).unwrap();
        assert!(matches!(kpartite_density(&bad, &classes), Err(SplitError::NonPartiteEdge(_))));
    }

    #[test]
    fn complete_host_never_fails() {
        // Classes large enough that an empty independent sample is
        // practically impossible; an empty sample counts as density 0.
        let (host, classes) = random_kpartite_host(&[40, 42, 39], 1.0, 1);
        for variant in [SplitVariant::ExactSize, SplitVariant::IndependentInclusion] {
            let cfg = SplitExperimentConfig {
                host: host.clone(),
                classes: classes.clone(),
                targets: vec![20, 21, 19],
                trials: 200,
                seed: 3,
                variant,
            };
            let r = run_split_experiment(&cfg, 0.5).unwrap();
            assert_eq!(r.failures, 0);
            assert_eq!(r.density_min, 1.0);
        }
    }

    #[test]
    fn identity_split_preserves_density() {
        let (host, classes) = random_kpartite_host(&[7, 8, 9], 0.3, 2);
        let d = kpartite_density(&host, &classes).unwrap();
        let cfg = SplitExperimentConfig {
            host,
            classes,
            targets: vec![7, 8, 9],
            trials: 20,
            seed: 0,
            variant: SplitVariant::ExactSize,
        };
        let r = run_split_experiment(&cfg, d / 2.0).unwrap();
        assert_eq!(r.failures, 0);
        assert_eq!(r.density_min, d);
        assert_eq!(r.density_max, d);
        assert_eq!(r.mean_sample_sizes, vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn index_counts_match_direct_enumeration() {
        let (host, classes) = random_kpartite_host(&[5, 70, 67], 0.2, 9);
        let index = PartiteIndex::new(&host, &classes).unwrap();
        let picks = vec![vec![0, 3], vec![1, 5, 64, 69], (0..67).step_by(3).collect::<Vec<_>>()];
        let direct = host
            .edges()
            .filter(|e| {
                picks.iter().zip(&classes).zip(e.iter()).all(|((p, c), v)| {
                    p.iter().any(|&j| c[j] == *v)
                })
            })
            .count() as u64;
        assert_eq!(index.count_inside(&picks), direct);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn azuma_is_monotone(t in 0.0f64..50.0, dt in 0.0f64..10.0, c in proptest::collection::vec(0.1f64..5.0, 1..10), bump in 0.0f64..3.0) {
            let base = azuma_bound(t, &c).unwrap();
            prop_assert!((0.0..=2.0).contains(&base));
            prop_assert!(azuma_bound(t + dt, &c).unwrap() <= base);
            let mut larger = c.clone();
            larger[0] += bump;
            prop_assert!(azuma_bound(t, &larger).unwrap() >= base);
        }

        #[test]
        fn exact_size_samples_have_target_size(seed in any::<u64>(), t0 in 1usize..6, t1 in 1usize..7) {
            let (host, classes) = random_kpartite_host(&[6, 7, 5], 0.5, seed);
            let cfg = SplitExperimentConfig {
                host, classes, targets: vec![t0, t1, 3], trials: 10, seed, variant: SplitVariant::ExactSize,
            };
            let r = run_split_experiment(&cfg, 0.0).unwrap();
            prop_assert_eq!(r.mean_sample_sizes, vec![t0 as f64, t1 as f64, 3.0]);
            prop_assert!(r.density_min >= 0.0 && r.density_max <= 1.0);
            prop_assert_eq!(run_split_experiment(&cfg, 0.0).unwrap().failures, r.failures);
        }
    }
}
