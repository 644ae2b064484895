//! Directed interaction graphs.
//!
//! An arc `(v, w)` means that agent `v` is influenced by agent `w`; the
//! out-neighbourhood of `v` is the set of agents that can persuade it.
//! Undirected families are stored as symmetric digraphs, one arc per
//! direction.

mod generators;
mod io;
mod metrics;

pub use generators::{
    gen_ba, gen_complete, gen_config_model, gen_er, gen_torus, DegreeDistribution,
    MAX_CONNECT_ATTEMPTS, MAX_TORUS_NODES,
};
pub use io::{read_edge_list, write_edge_list};
pub use metrics::{
    cheeger_exact, cheeger_spectral_lower_bound, spectral_radius, Cheeger, FamilyParams,
    GammaSource, GraphMetrics, InequalityViolation, SpectralRadius, CHEEGER_MAX_NODES,
    DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL,
};

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("arc ({from}, {to}) has an endpoint outside [0, {n})")]
    OutOfRange { from: usize, to: usize, n: usize },
    #[error("duplicate arc ({from}, {to})")]
    DuplicateArc { from: usize, to: usize },
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("no strongly connected instance after {attempts} attempts")]
    ConnectivityFailure { attempts: usize },
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible degree distribution: {0}")]
    InfeasibleDistribution(String),
    #[error("graph with {n} nodes exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("malformed edge list: {0}")]
    Parse(String),
    #[error("operation requires a symmetric graph")]
    NotSymmetric,
}

/// Immutable directed graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    max_degree: usize,
    max_in_degree: usize,
    has_self_loops: bool,
    strongly_connected: bool,
    symmetric: bool,
}

impl Graph {
    /// Build a graph from an arc list. Self-loops are accepted; duplicates
    /// and out-of-range endpoints are rejected.
    pub fn build_from_arcs<I>(n: usize, arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if n > u32::MAX as usize {
            return Err(GraphError::TooLarge {
                n,
                cap: u32::MAX as usize,
            });
        }
        let mut list: Vec<(u32, u32)> = Vec::new();
        for (from, to) in arcs {
            if from >= n || to >= n {
                return Err(GraphError::OutOfRange { from, to, n });
            }
            list.push((from as u32, to as u32));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateArc {
                from: w[0].0 as usize,
                to: w[0].1 as usize,
            });
        }
        Ok(Self::from_sorted_unique(n, list))
    }

    /// Build a symmetric digraph: each undirected edge `{u, v}` becomes the
    /// arcs `(u, v)` and `(v, u)`; an edge `{u, u}` becomes one self-loop.
    pub fn from_undirected_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut arcs = Vec::new();
        for (u, v) in edges {
            arcs.push((u, v));
            if u != v {
                arcs.push((v, u));
            }
        }
        Self::build_from_arcs(n, arcs)
    }

    fn from_sorted_unique(n: usize, arcs: Vec<(u32, u32)>) -> Self {
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_counts = vec![0usize; n + 1];
        let mut has_self_loops = false;
        for &(u, v) in &arcs {
            out_offsets[u as usize + 1] += 1;
            in_counts[v as usize + 1] += 1;
            has_self_loops |= u == v;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_counts[i + 1] += in_counts[i];
        }
        let in_offsets = in_counts;
        let out_targets: Vec<u32> = arcs.iter().map(|&(_, v)| v).collect();
        let mut fill = in_offsets.clone();
        let mut in_sources = vec![0u32; arcs.len()];
        // arcs are sorted by source, so each in-list comes out sorted too
        for &(u, v) in &arcs {
            in_sources[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        let max_degree = (0..n)
            .map(|v| out_offsets[v + 1] - out_offsets[v])
            .max()
            .unwrap_or(0);
        let max_in_degree = (0..n)
            .map(|v| in_offsets[v + 1] - in_offsets[v])
            .max()
            .unwrap_or(0);
        let symmetric = out_offsets == in_offsets && out_targets == in_sources;
        let mut g = Self {
            n,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            max_degree,
            max_in_degree,
            has_self_loops,
            strongly_connected: false,
            symmetric,
        };
        g.strongly_connected = g.reaches_all(true) && g.reaches_all(false);
        g
    }

    fn reaches_all(&self, forward: bool) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            let next = if forward {
                self.out_neighbors(v)
            } else {
                self.in_neighbors(v)
            };
            for &w in next {
                let w = w as usize;
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.out_targets.len()
    }

    /// Average degree `|E| / N`.
    pub fn avg_degree(&self) -> f64 {
        self.arc_count() as f64 / self.n as f64
    }

    /// Maximum out-degree `max_v |N_v|`.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn max_in_degree(&self) -> usize {
        self.max_in_degree
    }

    pub fn has_self_loops(&self) -> bool {
        self.has_self_loops
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected
    }

    /// True when every arc `(u, v)` has its reverse `(v, u)`.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn require_strongly_connected(&self) -> Result<(), GraphError> {
        if self.strongly_connected {
            Ok(())
        } else {
            Err(GraphError::NotStronglyConnected)
        }
    }

    /// Nodes that influence `v`, sorted.
    pub fn out_neighbors(&self, v: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    /// Nodes influenced by `v`, sorted.
    pub fn in_neighbors(&self, v: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.out_neighbors(from).binary_search(&(to as u32)).is_ok()
    }

    /// All arcs in lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |v| self.out_neighbors(v).iter().map(move |&w| (v, w as usize)))
    }

    /// `y = A x` with `A[v][w] = 1` iff `(v, w)` is an arc.
    pub fn adjacency_mul(&self, x: &[f64], y: &mut [f64]) {
        for (v, yv) in y.iter_mut().enumerate() {
            *yv = self.out_neighbors(v).iter().map(|&w| x[w as usize]).sum();
        }
    }
}
