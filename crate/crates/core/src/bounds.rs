//! Bounds for general graphs.
//!
//! The linear process `Y` on `ℕ^V` has births at `v` at rate `μ Σ_{w∈N_v} y_w`
//! and deaths at rate `y_v`. With `μ = βφ(1)/d̄` it dominates the node
//! process, and its first two moments solve closed linear ODEs. The
//! threshold functions turn graph metrics into the levels that separate
//! extinction from persistence.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::fenwick::Fenwick;
use crate::graph::{spectral_radius, GammaSource, Graph, GraphMetrics, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL};
use crate::meanfield::{beta_star, equilibria, ROOT_TOL};
use crate::persuasion::{Persuasion, PersuasionError};
use crate::rng::rng_from_seed;
use crate::trajectory::{Recorder, SampleOptions, Trajectory};

pub const LINEAR_EVENT_CAP: u64 = 10_000_000;
pub const COVARIANCE_MAX_NODES: usize = 200;
/// Moment trajectories are stored at this many uniform intervals of `[0, T]`.
pub const MOMENT_RECORD_INTERVALS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dense covariance limited to {cap} nodes, graph has {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("variance bound needs mu * rho < 1, got {rho_mu}")]
    Supercritical { rho_mu: f64 },
    #[error("initial vector has {got} entries, graph has {expected} nodes")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Persuasion(#[from] PersuasionError),
}

#[derive(Debug, Clone)]
pub struct LinearProcessParams<'a> {
    pub mu: f64,
    graph: &'a Graph,
    rho: f64,
    pub event_cap: u64,
}

impl<'a> LinearProcessParams<'a> {
    /// Computes `ρ_A` by power iteration.
    pub fn new(graph: &'a Graph, mu: f64) -> Result<Self, BoundsError> {
        let rho = spectral_radius(graph, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).value;
        Self::with_rho(graph, mu, rho)
    }

    pub fn with_rho(graph: &'a Graph, mu: f64, rho: f64) -> Result<Self, BoundsError> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(BoundsError::InvalidParameter(format!(
                "mu must be finite and nonnegative, got {mu}"
            )));
        }
        Ok(Self {
            mu,
            graph,
            rho,
            event_cap: LINEAR_EVENT_CAP,
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rho_mu(&self) -> f64 {
        self.mu * self.rho
    }
}

fn check_len(params: &LinearProcessParams, len: usize) -> Result<(), BoundsError> {
    let n = params.graph.node_count();
    if len != n {
        return Err(BoundsError::SizeMismatch { expected: n, got: len });
    }
    Ok(())
}

fn check_horizon(horizon: f64) -> Result<(), BoundsError> {
    if horizon >= 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::InvalidParameter(format!(
            "horizon must be finite and nonnegative, got {horizon}"
        )))
    }
}

/// Exact simulation of `Y`, reporting `Z_Y = Σ y_v / N`. Stops after
/// `event_cap` events with the truncation flag set.
pub fn simulate_linear(
    params: &LinearProcessParams,
    init: &[u64],
    horizon: f64,
    seed: u64,
    opts: SampleOptions,
) -> Result<Trajectory, BoundsError> {
    check_len(params, init.len())?;
    check_horizon(horizon)?;
    let g = params.graph;
    let n = g.node_count();
    let nf = n as f64;
    let indeg: Vec<u64> = (0..n).map(|v| g.in_degree(v) as u64).collect();
    let mut counts = init.to_vec();
    // births: pick a source w with weight y_w * indeg(w), then one of the
    // nodes it influences
    let mut sources = Fenwick::from_weights(&counts.iter().zip(&indeg).map(|(y, d)| y * d).collect::<Vec<_>>());
    let mut alive = Fenwick::from_weights(&counts);
    let mut rng = rng_from_seed(seed);
    let mut rec = Recorder::new(opts, n, horizon, alive.total() as f64 / nf, None);
    if alive.total() == 0 {
        return Ok(rec.absorbed(0.0, None, seed));
    }
    let mut t = 0.0;
    loop {
        let z = alive.total() as f64 / nf;
        if rec.events() >= params.event_cap {
            return Ok(rec.truncated(t, z, None, seed));
        }
        let births = params.mu * sources.total() as f64;
        let total = births + alive.total() as f64;
        t += rng.sample::<f64, _>(Exp1) / total;
        if t > horizon {
            return Ok(rec.reached_horizon(z, None, seed));
        }
        rec.advance_to(t, z, None);
        if rng.random::<f64>() * total < births {
            let w = sources.find(rng.random_range(0..sources.total()));
            let targets = g.in_neighbors(w);
            let v = targets[rng.random_range(0..targets.len())] as usize;
            counts[v] += 1;
            sources.add(v, indeg[v] as i64);
            alive.add(v, 1);
        } else {
            let v = alive.find(rng.random_range(0..alive.total()));
            counts[v] -= 1;
            sources.add(v, -(indeg[v] as i64));
            alive.add(v, -1);
        }
        rec.event(t, alive.total() as f64 / nf, None);
        if alive.total() == 0 {
            return Ok(rec.absorbed(t, None, seed));
        }
    }
}

/// Integrate `y' = f(y)` with RK4, landing exactly on each of
/// `intervals` uniform record times.
fn rk4_recorded<S: Clone>(
    y0: S,
    horizon: f64,
    step: f64,
    intervals: usize,
    f: impl Fn(&S) -> S,
    axpy: impl Fn(&S, f64, &S) -> S,
) -> (Vec<f64>, Vec<S>) {
    let mut times = vec![0.0];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    for r in 0..intervals {
        let t0 = horizon * r as f64 / intervals as f64;
        let t1 = if r + 1 == intervals {
            horizon
        } else {
            horizon * (r + 1) as f64 / intervals as f64
        };
        let sub = ((t1 - t0) / step).ceil().max(1.0) as usize;
        let h = (t1 - t0) / sub as f64;
        for _ in 0..sub {
            let k1 = f(&y);
            let k2 = f(&axpy(&y, 0.5 * h, &k1));
            let k3 = f(&axpy(&y, 0.5 * h, &k2));
            let k4 = f(&axpy(&y, h, &k3));
            let y1 = axpy(&y, h / 6.0, &k1);
            let y1 = axpy(&y1, h / 3.0, &k2);
            let y1 = axpy(&y1, h / 3.0, &k3);
            y = axpy(&y1, h / 6.0, &k4);
        }
        times.push(t1);
        states.push(y.clone());
    }
    (times, states)
}

fn check_step(step: f64) -> Result<(), BoundsError> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::InvalidParameter(format!("step must be positive, got {step}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub means: Vec<Vec<f64>>,
}

impl MomentTrajectory {
    /// `N⁻¹ 𝟙ᵀ M(t_i)`.
    pub fn mean_z(&self, i: usize) -> f64 {
        let m = &self.means[i];
        m.iter().sum::<f64>() / m.len() as f64
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

/// `M' = (μA − I)M`, recorded at [`MOMENT_RECORD_INTERVALS`] uniform times.
pub fn integrate_first_moment(
    params: &LinearProcessParams,
    m0: &[f64],
    horizon: f64,
    step: f64,
) -> Result<MomentTrajectory, BoundsError> {
    check_len(params, m0.len())?;
    check_horizon(horizon)?;
    check_step(step)?;
    let g = params.graph;
    let mu = params.mu;
    let f = |m: &Vec<f64>| {
        let mut am = vec![0.0; m.len()];
        g.adjacency_mul(m, &mut am);
        am.iter().zip(m).map(|(a, x)| mu * a - x).collect::<Vec<_>>()
    };
    let axpy = |y: &Vec<f64>, a: f64, x: &Vec<f64>| y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect();
    let (times, means) = rk4_recorded(m0.to_vec(), horizon, step, MOMENT_RECORD_INTERVALS, f, axpy);
    Ok(MomentTrajectory { times, means })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTrajectory {
    pub times: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

impl CovarianceTrajectory {
    /// `Var(Z_Y(t_i)) = N⁻² 𝟙ᵀ Ω 𝟙`.
    pub fn var_z(&self, i: usize) -> f64 {
        let omega = &self.covariances[i];
        let n = omega.nrows() as f64;
        omega.sum() / (n * n)
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

pub fn adjacency_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for (v, w) in g.arcs() {
        a[(v, w)] = 1.0;
    }
    a
}

/// Covariance `Ω` of `Y`, coupled with the first moment:
/// `Ω' = μ(AΩ + ΩAᵀ) − 2Ω + diag(μAM + M)`, `Ω(0) = 0`. Dense, so capped at
/// [`COVARIANCE_MAX_NODES`].
pub fn integrate_covariance(
    params: &LinearProcessParams,
    m0: &[f64],
    horizon: f64,
    step: f64,
) -> Result<CovarianceTrajectory, BoundsError> {
    check_len(params, m0.len())?;
    check_horizon(horizon)?;
    check_step(step)?;
    let n = m0.len();
    if n > COVARIANCE_MAX_NODES {
        return Err(BoundsError::TooLarge {
            n,
            cap: COVARIANCE_MAX_NODES,
        });
    }
    let a = adjacency_matrix(params.graph);
    let mu = params.mu;
    let f = |(m, omega): &(DVector<f64>, DMatrix<f64>)| {
        let am = &a * m;
        let dm = &am * mu - m;
        let x = &a * omega;
        // X + Xᵀ keeps the derivative exactly symmetric
        let mut domega = (&x + x.transpose()) * mu - omega * 2.0;
        for v in 0..n {
            domega[(v, v)] += mu * am[v] + m[v];
        }
        (dm, domega)
    };
    let axpy = |(ym, yo): &(DVector<f64>, DMatrix<f64>), s: f64, (xm, xo): &(DVector<f64>, DMatrix<f64>)| {
        (ym + xm * s, yo + xo * s)
    };
    let y0 = (DVector::from_column_slice(m0), DMatrix::zeros(n, n));
    let (times, states) = rk4_recorded(y0, horizon, step, MOMENT_RECORD_INTERVALS, f, axpy);
    let (means, covariances) = states.into_iter().unzip();
    Ok(CovarianceTrajectory {
        times,
        means,
        covariances,
    })
}

/// `N^{-1/2} (μρ+1)/(1−μρ) e^{(μρ−1)t} √Z0`, valid for `μρ < 1`.
pub fn variance_bound(params: &LinearProcessParams, z0: f64, t: f64) -> Result<f64, BoundsError> {
    let rm = params.rho_mu();
    if rm >= 1.0 {
        return Err(BoundsError::Supercritical { rho_mu: rm });
    }
    if !(z0 >= 0.0) || !(t >= 0.0) {
        return Err(BoundsError::InvalidParameter(format!(
            "need z0 >= 0 and t >= 0, got z0 = {z0}, t = {t}"
        )));
    }
    let n = params.graph.node_count() as f64;
    Ok(n.powf(-0.5) * (rm + 1.0) / (1.0 - rm) * ((rm - 1.0) * t).exp() * z0.sqrt())
}

/// Which case of the general-graph classification applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassificationCase {
    /// `β < d̄/(Δ φ(1))`: extinction.
    Item1,
    /// `β < d̄/(ρ φ(1))`: extinction, relaxed condition.
    Item1Bis,
    /// `d̄β*/γ < β < d̄/(ρ φ(0))`: initial-condition dependent.
    Item2,
    /// `β > d̄/(γ φ(0))`: persistence.
    Item3,
    NoConclusion,
}

impl std::fmt::Display for ClassificationCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassificationCase::Item1 => "1",
            ClassificationCase::Item1Bis => "1bis",
            ClassificationCase::Item2 => "2",
            ClassificationCase::Item3 => "3",
            ClassificationCase::NoConclusion => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralThresholds {
    /// Solves `φ(√z) = d̄/(βρ)`.
    pub z_u_prime: Option<f64>,
    /// `z_u` at the upper-chain rate `βΔ/d̄`.
    pub z_u_dprime: Option<f64>,
    /// `z_s` at the upper-chain rate `βΔ/d̄`.
    pub z_s_general: Option<f64>,
    /// `z_u` at the lower-chain rate `βγ/d̄`.
    pub z_u_gamma: Option<f64>,
    /// `z_s` at the lower-chain rate `βγ/d̄`.
    pub z_s_gamma: Option<f64>,
    pub item: ClassificationCase,
    /// The item-2 interval is empty for this graph; `None` without `γ`.
    pub item2_band_empty: Option<bool>,
    pub gamma_source: Option<GammaSource>,
}

fn solve_z_u_prime(phi: &Persuasion, level: f64) -> Option<f64> {
    let psi = |s: f64| phi.eval(s.sqrt()) - level;
    if psi(0.0) > 0.0 || psi(1.0) < 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if psi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn inv(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

pub fn general_thresholds(
    metrics: &GraphMetrics,
    beta: f64,
    phi: &Persuasion,
) -> Result<GeneralThresholds, BoundsError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(BoundsError::InvalidParameter(format!(
            "rate parameter must be positive and finite, got {beta}"
        )));
    }
    phi.require_standard()?;
    let dbar = metrics.avg_degree;
    let delta = metrics.max_in_degree as f64;
    let rho = metrics.spectral_radius();
    let gamma = metrics.gamma();

    let z_u_prime = solve_z_u_prime(phi, dbar / (beta * rho));
    let upper = equilibria(beta * (delta / dbar), phi);
    let lower = gamma.map(|(g, _)| equilibria(beta * (g / dbar), phi));

    let phi1_inv = inv(phi.eval(1.0));
    let phi0_inv = inv(phi.eval(0.0));
    let bstar = beta_star(phi).beta_star;
    let item2_band = gamma.map(|(g, _)| (dbar / g * bstar, dbar / rho * phi0_inv));
    let item = if beta < dbar / delta * phi1_inv {
        ClassificationCase::Item1
    } else if beta < dbar / rho * phi1_inv {
        ClassificationCase::Item1Bis
    } else if item2_band.is_some_and(|(lo, hi)| lo < beta && beta < hi) {
        ClassificationCase::Item2
    } else if gamma.is_some_and(|(g, _)| dbar / g * phi0_inv < beta) {
        ClassificationCase::Item3
    } else {
        ClassificationCase::NoConclusion
    };
    Ok(GeneralThresholds {
        z_u_prime,
        z_u_dprime: upper.z_u,
        z_s_general: upper.z_s,
        z_u_gamma: lower.and_then(|e| e.z_u),
        z_s_gamma: lower.and_then(|e| e.z_s),
        item,
        item2_band_empty: item2_band.map(|(lo, hi)| lo >= hi),
        gamma_source: gamma.map(|(_, s)| s),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansiveRegime {
    Extinction,
    InitialConditionDependent,
    NoConclusion,
}

impl std::fmt::Display for ExpansiveRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExpansiveRegime::Extinction => "extinction",
            ExpansiveRegime::InitialConditionDependent => "initial-condition-dependent",
            ExpansiveRegime::NoConclusion => "no-conclusion",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansiveThresholds {
    pub z_u_prime: Option<f64>,
    pub z_u_dprime: Option<f64>,
    pub z_s: Option<f64>,
    pub regime: ExpansiveRegime,
}

/// Closed-form thresholds for a family with `d̄/Δ ≥ a` and
/// `e1 ≤ d̄/ρ ≤ d̄/γ ≤ e2`, with `φ(z) = z`.
pub fn expansive_thresholds(e1: f64, e2: f64, a: f64, beta: f64) -> Result<ExpansiveThresholds, BoundsError> {
    if !(0.0 <= a && a <= e1 && e1 <= e2 && e2.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(BoundsError::InvalidParameter(format!(
            "need 0 <= a <= e1 <= e2 and beta > 0, got a = {a}, e1 = {e1}, e2 = {e2}, beta = {beta}"
        )));
    }
    if beta < a {
        return Ok(ExpansiveThresholds {
            z_u_prime: None,
            z_u_dprime: None,
            z_s: None,
            regime: ExpansiveRegime::Extinction,
        });
    }
    let disc = |e: f64| (beta >= 4.0 * e).then(|| (1.0 - 4.0 * e / beta).max(0.0).sqrt());
    let regime = if beta > 4.0 * e2 {
        ExpansiveRegime::InitialConditionDependent
    } else {
        ExpansiveRegime::NoConclusion
    };
    Ok(ExpansiveThresholds {
        z_u_prime: Some(e1 * e1 / (beta * beta)),
        z_u_dprime: disc(e2).map(|r| 0.5 - 0.5 * r),
        z_s: disc(e1).map(|r| 0.5 + 0.5 * r),
        regime,
    })
}
