//! Deterministic generators for the graph families used in the experiments.
//!
//! Random families draw from a [`SimRng`](crate::rng::SimRng) derived from
//! `(seed, attempt)`, so the same parameters and seed always produce the
//! same arc list.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{Graph, GraphError};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Regeneration attempts before giving up on strong connectivity.
pub const MAX_CONNECT_ATTEMPTS: usize = 100;

/// Largest torus (in nodes) the generator will build.
pub const MAX_TORUS_NODES: usize = 1 << 24;

const SWITCH_ATTEMPTS: usize = 1000;

/// Complete digraph on `n` nodes, optionally with a self-loop at every node.
pub fn gen_complete(n: usize, with_self_loops: bool) -> Result<Graph, GraphError> {
    let arcs = (0..n).flat_map(move |u| {
        (0..n)
            .filter(move |&v| with_self_loops || v != u)
            .map(move |v| (u, v))
    });
    Graph::build_from_arcs(n, arcs)
}

/// Erdős–Rényi `G(n, p)` realised as a symmetric digraph, regenerated until
/// strongly connected.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "Erdős–Rényi needs n >= 2, got {n}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::InvalidParameter(format!(
            "edge probability must lie in (0, 1], got {p}"
        )));
    }
    retry_connected(seed, |rng| {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_undirected_edges(n, edges).map(Some)
    })
}

/// Degree distribution `q_d` for the configuration model.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    entries: Vec<(usize, f64)>,
}

impl DegreeDistribution {
    /// Validates support in `[3, ∞)`, non-negative weights summing to one.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self, GraphError> {
        if entries.is_empty() {
            return Err(GraphError::InfeasibleDistribution("empty support".into()));
        }
        entries.sort_by_key(|&(d, _)| d);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(GraphError::InfeasibleDistribution(
                "degree listed twice".into(),
            ));
        }
        for &(d, q) in &entries {
            if !(q >= 0.0) || !q.is_finite() {
                return Err(GraphError::InfeasibleDistribution(format!(
                    "probability for degree {d} is {q}"
                )));
            }
            if d <= 2 && q > 0.0 {
                return Err(GraphError::InfeasibleDistribution(format!(
                    "degree {d} has positive mass; support must lie in [3, d_max]"
                )));
            }
        }
        let sum: f64 = entries.iter().map(|&(_, q)| q).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GraphError::InfeasibleDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        entries.retain(|&(_, q)| q > 0.0);
        Ok(Self { entries })
    }

    pub fn point_mass(d: usize) -> Result<Self, GraphError> {
        Self::new(vec![(d, 1.0)])
    }

    pub fn max_degree(&self) -> usize {
        self.entries.last().map(|&(d, _)| d).unwrap_or(0)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    fn has_both_parities(&self) -> bool {
        let odd = self.entries.iter().any(|&(d, _)| d % 2 == 1);
        let even = self.entries.iter().any(|&(d, _)| d % 2 == 0);
        odd && even
    }
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(d, q)| format!("{d}:{q}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for DegreeDistribution {
    type Err = GraphError;

    /// Parses `"d:q,d:q,..."`, or a bare degree `"20"` for a point mass.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(d) = s.parse::<usize>() {
            return Self::point_mass(d);
        }
        let mut entries = Vec::new();
        for part in s.split(',') {
            let (d, q) = part
                .split_once(':')
                .ok_or_else(|| GraphError::Parse(format!("expected d:q, got {part:?}")))?;
            let d = d
                .trim()
                .parse()
                .map_err(|_| GraphError::Parse(format!("bad degree {d:?}")))?;
            let q = q
                .trim()
                .parse()
                .map_err(|_| GraphError::Parse(format!("bad probability {q:?}")))?;
            entries.push((d, q));
        }
        Self::new(entries)
    }
}

/// Configuration model: i.i.d. degrees from `q`, uniform stub matching, then
/// degree-preserving switches to remove self-loops and multi-edges.
pub fn gen_config_model(
    n: usize,
    dist: &DegreeDistribution,
    seed: u64,
) -> Result<Graph, GraphError> {
    if dist.max_degree() >= n {
        return Err(GraphError::InfeasibleDistribution(format!(
            "degree {} impossible in a simple graph on {n} nodes",
            dist.max_degree()
        )));
    }
    let support: Vec<usize> = dist.entries.iter().map(|&(d, _)| d).collect();
    let sampler = WeightedIndex::new(dist.entries.iter().map(|&(_, q)| q))
        .map_err(|e| GraphError::InfeasibleDistribution(e.to_string()))?;
    retry_connected(seed, |rng| {
        let mut degrees: Vec<usize> = (0..n).map(|_| support[sampler.sample(rng)]).collect();
        fix_parity(&mut degrees, &support, &sampler, dist.has_both_parities(), rng);
        let Some(edges) = match_stubs(&degrees, rng) else {
            return Ok(None);
        };
        Graph::from_undirected_edges(n, edges.into_iter().map(|(u, v)| (u as usize, v as usize)))
            .map(Some)
    })
}

fn fix_parity(
    degrees: &mut [usize],
    support: &[usize],
    sampler: &WeightedIndex<f64>,
    resample: bool,
    rng: &mut SimRng,
) {
    if degrees.iter().sum::<usize>() % 2 == 0 {
        return;
    }
    let n = degrees.len();
    if resample {
        for _ in 0..MAX_CONNECT_ATTEMPTS {
            let i = rng.random_range(0..n);
            let d = support[sampler.sample(rng)];
            if (d + degrees[i]) % 2 == 1 {
                degrees[i] = d;
                return;
            }
        }
    }
    // every support value has the same parity: bump one node by one
    let i = rng.random_range(0..n);
    degrees[i] += 1;
}

fn normalize(u: u32, v: u32) -> (u32, u32) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

fn match_stubs(degrees: &[usize], rng: &mut SimRng) -> Option<Vec<(u32, u32)>> {
    let mut stubs: Vec<u32> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v as u32, d))
        .collect();
    stubs.shuffle(rng);
    let mut edges = Vec::with_capacity(stubs.len() / 2);
    let mut present = HashSet::with_capacity(stubs.len() / 2);
    let mut bad = Vec::new();
    for pair in stubs.chunks_exact(2) {
        let e = normalize(pair[0], pair[1]);
        if e.0 == e.1 || !present.insert(e) {
            bad.push(e);
        } else {
            edges.push(e);
        }
    }
    for (u, v) in bad {
        let mut fixed = false;
        for _ in 0..SWITCH_ATTEMPTS {
            if edges.is_empty() {
                break;
            }
            let idx = rng.random_range(0..edges.len());
            let (mut x, mut y) = edges[idx];
            if rng.random_bool(0.5) {
                std::mem::swap(&mut x, &mut y);
            }
            let e1 = normalize(u, x);
            let e2 = normalize(v, y);
            if u == x || v == y || e1 == e2 || present.contains(&e1) || present.contains(&e2) {
                continue;
            }
            present.remove(&edges[idx]);
            edges.swap_remove(idx);
            present.insert(e1);
            present.insert(e2);
            edges.push(e1);
            edges.push(e2);
            fixed = true;
            break;
        }
        if !fixed {
            return None;
        }
    }
    Some(edges)
}

/// Barabási–Albert preferential attachment, seeded with the complete graph on
/// `m + 1` nodes. Each new node picks `m` distinct targets with probability
/// proportional to degree.
pub fn gen_ba(n: usize, m: usize, seed: u64) -> Result<Graph, GraphError> {
    if m < 1 {
        return Err(GraphError::InvalidParameter("m must be at least 1".into()));
    }
    if n < m + 2 {
        return Err(GraphError::InvalidParameter(format!(
            "Barabási–Albert needs n >= m + 2, got n={n}, m={m}"
        )));
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * m);
    // each entry is one edge endpoint, so uniform picks are degree-weighted
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * n * m);
    for u in 0..=m {
        for v in (u + 1)..=m {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for v in (m + 1)..n {
        chosen.clear();
        while chosen.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((v, t));
            endpoints.push(v);
            endpoints.push(t);
        }
    }
    Graph::from_undirected_edges(n, edges)
}

/// The `k`-dimensional torus `C_n × … × C_n`. Node `(c_0, …, c_{k-1})` has
/// index `Σ c_i n^{k-1-i}` (lexicographic, first coordinate most significant).
pub fn gen_torus(k: usize, n: usize) -> Result<Graph, GraphError> {
    if k < 1 {
        return Err(GraphError::InvalidParameter("dimension must be >= 1".into()));
    }
    if n < 3 {
        return Err(GraphError::InvalidParameter(format!(
            "side length must be >= 3, got {n}"
        )));
    }
    let total = u32::try_from(k)
        .ok()
        .and_then(|k| n.checked_pow(k))
        .filter(|&t| t <= MAX_TORUS_NODES)
        .ok_or(GraphError::TooLarge {
            n: usize::MAX,
            cap: MAX_TORUS_NODES,
        })?;
    let mut arcs = Vec::with_capacity(total * 2 * k);
    for v in 0..total {
        let mut stride = 1;
        for _ in 0..k {
            let c = (v / stride) % n;
            let up = v - c * stride + ((c + 1) % n) * stride;
            let down = v - c * stride + ((c + n - 1) % n) * stride;
            arcs.push((v, up));
            arcs.push((v, down));
            stride *= n;
        }
    }
    Graph::build_from_arcs(total, arcs)
}

fn retry_connected<F>(seed: u64, mut attempt: F) -> Result<Graph, GraphError>
where
    F: FnMut(&mut SimRng) -> Result<Option<Graph>, GraphError>,
{
    for a in 0..MAX_CONNECT_ATTEMPTS {
        let mut rng = rng_from_seed(derive_seed(seed, &[a as u64]));
        if let Some(g) = attempt(&mut rng)? {
            if g.is_strongly_connected() {
                return Ok(g);
            }
        }
    }
    Err(GraphError::ConnectivityFailure {
        attempts: MAX_CONNECT_ATTEMPTS,
    })
}
