//! Two-stage cluster acquisition over sample embeddings.
//!
//! Embeddings are L2-normalized and partitioned with a balanced k-means whose
//! cluster sizes never differ by more than one. Each acquisition step picks a
//! cluster uniformly among those with samples left, then draws a sample from
//! the entropy-proportional PMF restricted to that cluster. The inclusion
//! probability `π_t = P(x|c) · P(c)` is recorded as the step's `q_m`.

use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcqConfig, AcquisitionStep, AcquisitionTrace, FunctionKind};
use crate::error::{Error, Result};
use crate::sampler::WeightTree;
use crate::seed::{self, SeededRng};

pub const DEFAULT_MAX_ITERS: usize = 100;

/// `⌈√N⌉`, at least 1 and at most `N`.
pub fn default_k(n: usize) -> usize {
    let mut k = (n as f64).sqrt().ceil() as usize;
    while k > 1 && (k - 1) * (k - 1) >= n {
        k -= 1;
    }
    k.clamp(1, n.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster index of every sample, by pool position.
    pub cluster_of: Vec<usize>,
    pub k: usize,
    pub sizes: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterAssignment {
    pub fn from_labels(cluster_of: Vec<usize>, k: usize) -> Result<Self> {
        if cluster_of.is_empty() {
            return Err(Error::EmptyInput);
        }
        if k == 0 || k > cluster_of.len() {
            return Err(Error::BadK { k, n: cluster_of.len() });
        }
        let mut sizes = vec![0; k];
        for &c in &cluster_of {
            if c >= k {
                return Err(Error::BadK { k, n: cluster_of.len() });
            }
            sizes[c] += 1;
        }
        Ok(ClusterAssignment {
            cluster_of,
            k,
            sizes,
            iterations: 0,
            converged: true,
        })
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        self.cluster_of
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == c)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_balanced(&self) -> bool {
        let max = self.sizes.iter().max().copied().unwrap_or(0);
        let min = self.sizes.iter().min().copied().unwrap_or(0);
        max - min <= 1
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn l2_normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

fn validate_embeddings(embeddings: &[Vec<f64>], k: usize) -> Result<usize> {
    let n = embeddings.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    let dim = embeddings[0].len();
    if dim == 0 {
        return Err(Error::EmptyInput);
    }
    for (i, e) in embeddings.iter().enumerate() {
        if e.len() != dim {
            return Err(Error::DimensionMismatch(dim, e.len()));
        }
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(dim)
}

/// k-means++ seeding.
fn init_centroids(points: &[Vec<f64>], k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = Vec::with_capacity(k);
    let first = ((seed::unit(rng) * n as f64) as usize).min(n - 1);
    chosen.push(first);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = seed::unit(rng) * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            // Every point coincides with a chosen centroid.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[((seed::unit(rng) * free.len() as f64) as usize).min(free.len() - 1)]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.iter().map(|&i| points[i].clone()).collect()
}

/// Greedy capacity-constrained assignment. Points with the largest gap
/// between their best and second-best centroid are placed first; each takes
/// its nearest centroid with room. `N mod k` clusters may hold `⌈N/k⌉`
/// points, the rest hold `⌊N/k⌋`.
fn balanced_assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    let n = points.len();
    let k = centroids.len();
    let base = n / k;
    let extra = n % k;

    let prefs: Vec<Vec<(f64, usize)>> = points
        .iter()
        .map(|p| {
            let mut d: Vec<(f64, usize)> = centroids
                .iter()
                .enumerate()
                .map(|(c, cent)| (sq_dist(p, cent), c))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d
        })
        .collect();
    let margin = |i: usize| -> f64 {
        if k == 1 {
            0.0
        } else {
            prefs[i][1].0 - prefs[i][0].0
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| margin(b).total_cmp(&margin(a)).then(a.cmp(&b)));

    let mut sizes = vec![0usize; k];
    let mut extra_used = 0;
    let mut out = vec![0usize; n];
    for i in order {
        for &(_, c) in &prefs[i] {
            if sizes[c] < base {
                sizes[c] += 1;
                out[i] = c;
                break;
            }
            if sizes[c] == base && extra_used < extra {
                sizes[c] += 1;
                extra_used += 1;
                out[i] = c;
                break;
            }
        }
    }
    out
}

fn centroids_of(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(labels) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            for x in s.iter_mut() {
                *x /= n as f64;
            }
        }
    }
    sums
}

/// Balanced k-means over L2-normalized embeddings. Deterministic given `seed`.
pub fn balanced_kmeans(
    embeddings: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<ClusterAssignment> {
    balanced_kmeans_observed(embeddings, k, seed, max_iters, |_| {})
}

/// As [`balanced_kmeans`], calling `observe` with the labels produced by
/// every assignment pass.
pub fn balanced_kmeans_observed(
    embeddings: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
    mut observe: impl FnMut(&[usize]),
) -> Result<ClusterAssignment> {
    validate_embeddings(embeddings, k)?;
    let points: Vec<Vec<f64>> = embeddings.iter().map(|e| l2_normalized(e)).collect();
    let mut rng = seed::rng_from_seed(seed);
    let mut centroids = init_centroids(&points, k, &mut rng);
    let mut labels = balanced_assign(&points, &centroids);
    observe(&labels);
    let mut iterations = 1;
    let mut converged = false;
    while iterations < max_iters.max(1) {
        centroids = centroids_of(&points, &labels, k);
        let next = balanced_assign(&points, &centroids);
        observe(&next);
        iterations += 1;
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    let mut assignment = ClusterAssignment::from_labels(labels, k)?;
    assignment.iterations = iterations;
    assignment.converged = converged;
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStep {
    pub cluster: usize,
    /// `P(x|c)`.
    pub local_prob: f64,
    /// `P(c) = 1 / |C_valid|`.
    pub cluster_prob: f64,
    /// `π_t = P(x|c) · P(c)`.
    pub inclusion_prob: f64,
}

/// Stateful two-stage sampler. Sample weights are the floored entropy PMF
/// over the whole pool; within a cluster they are renormalized over the
/// members still remaining.
#[derive(Debug, Clone)]
pub struct ClusterSampler {
    members: Vec<Vec<usize>>,
    trees: Vec<WeightTree>,
    /// `(cluster, position within cluster)` for every sample.
    slot: Vec<(usize, usize)>,
    remaining: Vec<bool>,
}

impl ClusterSampler {
    pub fn new(assignment: &ClusterAssignment, entropies: &[f64], pmf_floor: f64) -> Result<Self> {
        let n = assignment.cluster_of.len();
        if entropies.len() != n {
            return Err(Error::DimensionMismatch(n, entropies.len()));
        }
        let weights = acquisition::pmf_with_floor(entropies, pmf_floor)?;
        let mut members = vec![Vec::new(); assignment.k];
        let mut slot = vec![(0, 0); n];
        for (i, &c) in assignment.cluster_of.iter().enumerate() {
            slot[i] = (c, members[c].len());
            members[c].push(i);
        }
        let trees = members
            .iter()
            .map(|m| WeightTree::new(&m.iter().map(|&i| weights[i]).collect::<Vec<_>>()))
            .collect();
        Ok(ClusterSampler {
            members,
            trees,
            slot,
            remaining: vec![true; n],
        })
    }

    pub fn remaining(&self) -> usize {
        self.trees.iter().map(|t| t.live()).sum()
    }

    pub fn is_remaining(&self, sample: usize) -> bool {
        self.remaining[sample]
    }

    /// Clusters that still hold at least one sample.
    pub fn valid_clusters(&self) -> Vec<usize> {
        (0..self.trees.len())
            .filter(|&c| self.trees[c].live() > 0)
            .collect()
    }

    /// `π_t` every remaining sample would have if drawn at the current step.
    pub fn inclusion_probabilities(&self) -> Vec<(usize, f64)> {
        let valid = self.valid_clusters();
        let pc = 1.0 / valid.len() as f64;
        let mut out = Vec::new();
        for c in valid {
            let tree = &self.trees[c];
            let total = tree.total();
            for (j, &i) in self.members[c].iter().enumerate() {
                if self.remaining[i] {
                    out.push((i, tree.weight(j) / total * pc));
                }
            }
        }
        out.sort_by_key(|&(i, _)| i);
        out
    }

    /// Removes `sample` from the pool without drawing it.
    pub fn remove(&mut self, sample: usize) {
        if self.remaining[sample] {
            let (c, j) = self.slot[sample];
            self.trees[c].remove(j);
            self.remaining[sample] = false;
        }
    }

    /// One acquisition step. A cluster draw consumes one uniform variate only
    /// when more than one cluster is valid; the local draw always consumes one.
    pub fn step(&mut self, rng: &mut SeededRng) -> Result<(usize, ClusterStep)> {
        let valid = self.valid_clusters();
        if valid.is_empty() {
            return Err(Error::Exhausted);
        }
        let cluster = if valid.len() == 1 {
            valid[0]
        } else {
            let idx = (seed::unit(rng) * valid.len() as f64) as usize;
            valid[idx.min(valid.len() - 1)]
        };
        let tree = &self.trees[cluster];
        let total = tree.total();
        let j = tree.find(seed::unit(rng) * total).ok_or(Error::Exhausted)?;
        let local_prob = (tree.weight(j) / total).min(1.0);
        let cluster_prob = 1.0 / valid.len() as f64;
        let sample = self.members[cluster][j];
        self.remove(sample);
        Ok((
            sample,
            ClusterStep {
                cluster,
                local_prob,
                cluster_prob,
                inclusion_prob: local_prob * cluster_prob,
            },
        ))
    }
}

/// A cluster acquisition trace: `q_m = π_t` in `trace`, with the two-stage
/// breakdown alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTrace {
    pub trace: AcquisitionTrace,
    pub cluster_steps: Vec<ClusterStep>,
}

pub fn acquire_clustered(
    assignment: &ClusterAssignment,
    entropies: &[f64],
    config: &AcqConfig,
    budget: usize,
    seed: u64,
) -> Result<ClusterTrace> {
    config.validate()?;
    let n = entropies.len();
    if budget == 0 || budget > n {
        return Err(Error::BudgetExceedsPool { budget, pool: n });
    }
    let mut sampler = ClusterSampler::new(assignment, entropies, config.pmf_floor)?;
    let mut rng = seed::rng_from_seed(seed);
    let mut steps = Vec::with_capacity(budget);
    let mut cluster_steps = Vec::with_capacity(budget);
    for m in 1..=budget {
        let (sample, cs) = sampler.step(&mut rng)?;
        steps.push(AcquisitionStep {
            step: m,
            sample,
            acq_prob: cs.inclusion_prob,
            utility: entropies[sample],
        });
        cluster_steps.push(cs);
    }
    Ok(ClusterTrace {
        trace: AcquisitionTrace {
            kind: Some(FunctionKind::LmCluster),
            seed,
            pool_size: n,
            steps,
        },
        cluster_steps,
    })
}
