//! Success-probability sweeps over `β` or `z0`.
//!
//! A run succeeds when it is still alive at the horizon. Every replica draws
//! its seeds from the master seed, the grid-point index and the replica
//! index, so results do not depend on scheduling or thread count.

use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::birthdeath::{rates_meanfield, simulate_bd, BirthDeathChain, ChainError};
use crate::dynamics::{init_config, simulate, DynamicsError};
use crate::graph::{gen_ba, gen_complete, gen_config_model, gen_er, gen_torus, DegreeDistribution, Graph, GraphError};
use crate::persuasion::Persuasion;
use crate::rng::derive_seed;
use crate::trajectory::{SampleOptions, Trajectory};

/// Seed-path tag for graph generation, distinct from any grid-point index.
pub const GRAPH_STREAM: u64 = u64::MAX;
const INIT_STREAM: u64 = u64::MAX - 1;

pub const DEFAULT_REPLICAS: usize = 500;
pub const DEFAULT_HORIZON: f64 = 100.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("trajectory ends at {horizon} without absorption, before the required {required}")]
    InsufficientHorizon { horizon: f64, required: f64 },
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphFamily {
    Complete { n: usize, self_loops: bool },
    Er { n: usize, p: f64 },
    ConfigModel { n: usize, degrees: DegreeDistribution },
    Ba { n: usize, m: usize },
    Torus { k: usize, n: usize },
}

impl GraphFamily {
    pub fn generate(&self, seed: u64) -> Result<Graph, GraphError> {
        match self {
            GraphFamily::Complete { n, self_loops } => gen_complete(*n, *self_loops),
            GraphFamily::Er { n, p } => gen_er(*n, *p, seed),
            GraphFamily::ConfigModel { n, degrees } => gen_config_model(*n, degrees, seed),
            GraphFamily::Ba { n, m } => gen_ba(*n, *m, seed),
            GraphFamily::Torus { k, n } => gen_torus(*k, *n),
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, GraphFamily::Complete { .. } | GraphFamily::Torus { .. })
    }

    pub fn describe(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            GraphFamily::Complete { n, self_loops } => json!({"family": "complete", "n": n, "self_loops": self_loops}),
            GraphFamily::Er { n, p } => json!({"family": "er", "n": n, "p": p}),
            GraphFamily::ConfigModel { n, degrees } => {
                json!({"family": "config", "n": n, "degrees": degrees.to_string()})
            }
            GraphFamily::Ba { n, m } => json!({"family": "ba", "n": n, "m": m}),
            GraphFamily::Torus { k, n } => json!({"family": "torus", "k": k, "n": n}),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Substrate {
    /// Aggregated chain of the complete graph with self-loops on `n` nodes.
    MeanField { n: usize },
    Family {
        family: GraphFamily,
        /// Draw a fresh instance for each replica; otherwise one instance
        /// serves every replica.
        regenerate_per_replica: bool,
    },
    Fixed(Arc<Graph>),
}

impl Substrate {
    fn describe(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Substrate::MeanField { n } => json!({"kind": "meanfield", "n": n}),
            Substrate::Family {
                family,
                regenerate_per_replica,
            } => json!({
                "kind": "family",
                "graph": family.describe(),
                "regenerate_per_replica": regenerate_per_replica,
            }),
            Substrate::Fixed(g) => json!({
                "kind": "fixed",
                "n": g.node_count(),
                "arcs": g.arc_count(),
                "self_loops": g.has_self_loops(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Beta,
    Z0,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::Z0 => "z0",
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "beta" => Ok(SweepAxis::Beta),
            "z0" => Ok(SweepAxis::Z0),
            _ => Err(format!("unknown sweep axis {s:?}; expected beta or z0")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub substrate: Substrate,
    pub phi: Persuasion,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    /// The parameter not swept: `z0` for a `β` sweep and vice versa.
    pub fixed: f64,
    pub replicas: usize,
    pub horizon: f64,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidSpec(m));
        if self.grid.is_empty() || self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("grid must be nonempty and strictly increasing".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        for i in 0..self.grid.len() {
            let (beta, z0) = self.point(i);
            if !(beta >= 0.0 && beta.is_finite()) {
                return bad(format!("beta = {beta} must be finite and nonnegative"));
            }
            if !(0.0..=1.0).contains(&z0) {
                return bad(format!("z0 = {z0} outside [0, 1]"));
            }
        }
        if let Substrate::MeanField { n: 0 } = self.substrate {
            return bad("mean-field population must be positive".into());
        }
        Ok(())
    }

    /// `(β, z0)` at grid point `i`.
    pub fn point(&self, i: usize) -> (f64, f64) {
        match self.axis {
            SweepAxis::Beta => (self.grid[i], self.fixed),
            SweepAxis::Z0 => (self.fixed, self.grid[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub successes: usize,
    /// Completed runs; replicas whose graph could not be generated are
    /// counted in `graph_failures` instead.
    pub replicas: usize,
    pub mean_survivor_z: Option<f64>,
    pub mean_absorb_time: Option<f64>,
    pub graph_failures: usize,
}

impl SweepRow {
    pub fn success_fraction(&self) -> f64 {
        if self.replicas == 0 {
            0.0
        } else {
            self.successes as f64 / self.replicas as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Smallest survivor `Z(T)` per row, for threshold-level checks.
    pub min_survivor_z: Vec<Option<f64>>,
    metadata: serde_json::Value,
}

pub const CSV_HEADER: &str = "axis,value,successes,replicas,mean_survivor_z,mean_absorb_time";

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.axis.name(),
                r.value,
                r.successes,
                r.replicas,
                opt(r.mean_survivor_z),
                opt(r.mean_absorb_time)
            )?;
        }
        w.flush()
    }

    /// Full spec, seeding scheme and per-row failure counts.
    pub fn metadata(&self) -> &serde_json::Value {
        &self.metadata
    }

    pub fn write_metadata<W: Write>(&self, mut w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.metadata)?;
        writeln!(w)?;
        w.flush()
    }
}

/// True iff the path is alive at `horizon`; absorption exactly at the
/// horizon counts as failure.
pub fn is_success(traj: &Trajectory, horizon: f64) -> Result<bool, ExperimentError> {
    match traj.absorbed_at {
        Some(a) => Ok(a > horizon),
        None if traj.horizon < horizon || traj.truncated => Err(ExperimentError::InsufficientHorizon {
            horizon: traj.horizon,
            required: horizon,
        }),
        None => Ok(true),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivorStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
}

/// `Z(T)` over the successful paths; `None` when every path was absorbed.
pub fn survivor_final_z(trajs: &[Trajectory], horizon: f64) -> Result<Option<SurvivorStats>, ExperimentError> {
    let mut zs = Vec::new();
    for t in trajs {
        if is_success(t, horizon)? {
            zs.push(t.value_at(horizon));
        }
    }
    if zs.is_empty() {
        return Ok(None);
    }
    Ok(Some(SurvivorStats {
        count: zs.len(),
        mean: zs.iter().sum::<f64>() / zs.len() as f64,
        min: zs.iter().cloned().fold(f64::INFINITY, f64::min),
    }))
}

/// The axis value where the success fraction first climbs through 1/2,
/// interpolated linearly between the bracketing grid points.
pub fn transition_midpoint(rows: &[SweepRow]) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let (a, b) = (w[0].success_fraction(), w[1].success_fraction());
        (a < 0.5 && b >= 0.5).then(|| w[0].value + (0.5 - a) / (b - a) * (w[1].value - w[0].value))
    })
}

pub fn default_beta_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
    g.extend([6.0, 7.0, 8.0, 10.0, 12.0, 15.0, 20.0]);
    g
}

pub fn default_z0_grid() -> Vec<f64> {
    (0..=60).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    success: bool,
    final_z: f64,
    absorbed_at: Option<f64>,
}

fn outcome(traj: &Trajectory, horizon: f64) -> Result<Outcome, ExperimentError> {
    Ok(Outcome {
        success: is_success(traj, horizon)?,
        final_z: traj.value_at(horizon),
        absorbed_at: traj.absorbed_at,
    })
}

const SWEEP_SAMPLING: SampleOptions = SampleOptions {
    stride: crate::trajectory::Stride::Never,
    grid_intervals: 1,
};

fn run_replica(
    spec: &SweepSpec,
    chains: &[Option<BirthDeathChain>],
    shared: Option<&Graph>,
    r: usize,
) -> Result<Vec<Outcome>, ExperimentError> {
    let owned;
    let graph = match (&spec.substrate, shared) {
        (_, Some(g)) => Some(g),
        (Substrate::Family { family, .. }, None) => {
            owned = family.generate(derive_seed(spec.master_seed, &[GRAPH_STREAM, r as u64]))?;
            Some(&owned)
        }
        _ => None,
    };
    (0..spec.grid.len())
        .map(|i| {
            let (beta, z0) = spec.point(i);
            let seed = derive_seed(spec.master_seed, &[i as u64, r as u64]);
            let traj = match graph {
                Some(g) => {
                    let init = init_config(g.node_count(), z0, derive_seed(seed, &[INIT_STREAM]))?;
                    simulate(g, &spec.phi, beta, init, spec.horizon, seed, SWEEP_SAMPLING)?
                }
                None => {
                    let chain = chains[i].as_ref().expect("chain per point");
                    let n = chain.n();
                    let k = ((z0 * n as f64 + 1e-9).floor() as usize).min(n);
                    simulate_bd(chain, k as f64 / n as f64, spec.horizon, seed, SWEEP_SAMPLING)?
                }
            };
            outcome(&traj, spec.horizon)
        })
        .collect()
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let chains: Vec<Option<BirthDeathChain>> = match spec.substrate {
        Substrate::MeanField { n } => (0..spec.grid.len())
            .map(|i| rates_meanfield(n, spec.point(i).0, &spec.phi).map(Some))
            .collect::<Result<_, _>>()?,
        _ => vec![None; spec.grid.len()],
    };
    let shared: Option<Arc<Graph>> = match &spec.substrate {
        Substrate::Fixed(g) => Some(g.clone()),
        Substrate::Family {
            family,
            regenerate_per_replica: false,
        } => Some(Arc::new(family.generate(derive_seed(spec.master_seed, &[GRAPH_STREAM]))?)),
        _ => None,
    };
    let per_replica: Vec<Result<Vec<Outcome>, ExperimentError>> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| run_replica(spec, &chains, shared.as_deref(), r))
        .collect();

    let mut rows = Vec::with_capacity(spec.grid.len());
    let mut mins = Vec::with_capacity(spec.grid.len());
    let mut graph_failures = 0;
    let mut outcomes = Vec::new();
    for res in per_replica {
        match res {
            Ok(o) => outcomes.push(o),
            Err(ExperimentError::Graph(_)) => graph_failures += 1,
            Err(e) => return Err(e),
        }
    }
    for (i, &value) in spec.grid.iter().enumerate() {
        let (mut successes, mut z_sum, mut t_sum) = (0usize, 0.0, 0.0);
        let mut min_z: Option<f64> = None;
        for o in outcomes.iter().map(|o| o[i]) {
            if o.success {
                successes += 1;
                z_sum += o.final_z;
                min_z = Some(min_z.map_or(o.final_z, |m| m.min(o.final_z)));
            } else {
                t_sum += o.absorbed_at.expect("failures are absorbed");
            }
        }
        let failures = outcomes.len() - successes;
        rows.push(SweepRow {
            value,
            successes,
            replicas: outcomes.len(),
            mean_survivor_z: (successes > 0).then(|| z_sum / successes as f64),
            mean_absorb_time: (failures > 0).then(|| t_sum / failures as f64),
            graph_failures,
        });
        mins.push(min_z);
    }
    let metadata = serde_json::json!({
        "substrate": spec.substrate.describe(),
        "phi": spec.phi.to_string(),
        "axis": spec.axis.name(),
        "grid": spec.grid,
        "fixed": {
            "name": match spec.axis { SweepAxis::Beta => "z0", SweepAxis::Z0 => "beta" },
            "value": spec.fixed,
        },
        "replicas": spec.replicas,
        "horizon": spec.horizon,
        "master_seed": spec.master_seed,
        "seeding": "run seed = derive(master, [point, replica]); graph seed = derive(master, [2^64-1, replica]) or derive(master, [2^64-1]) for a single instance",
        "graph_failures": graph_failures,
        "success_rule": "alive at the horizon; absorption at exactly T is a failure",
        "version": env!("CARGO_PKG_VERSION"),
    });
    Ok(SweepResult {
        axis: spec.axis,
        rows,
        min_survivor_z: mins,
        metadata,
    })
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: usize) -> Result<SweepResult, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    pool.install(|| run_sweep(spec))
}
