//! Exact event-driven simulation of the node process on a graph.
//!
//! A non-adopter `v` adopts at rate `β/d̄ · φ(Z) · #{w ∈ N_v : X_w = 1}` and
//! an adopter reverts at rate 1. Summed over nodes the birth rate is
//! `β/d̄ · φ(Z)` times the number of active arcs, so a birth picks an active
//! arc uniformly. Per-node counts of adopting out-neighbours live in a
//! Fenwick tree weighted by `(1 − X_v)`, which keeps both the sampling and
//! the update after a flip at `O(deg · log N)`.

use rand::seq::IteratorRandom;
use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::fenwick::Fenwick;
use crate::graph::{Graph, GraphError};
use crate::persuasion::{validate_assumptions, Persuasion, PersuasionError};
use crate::rng::{rng_from_seed, SimRng};
use crate::trajectory::{Recorder, SampleOptions, Trajectory};

/// Brute-force cross-checks run on every event below this size in debug builds.
const DEBUG_CHECK_MAX_NODES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("configuration has {got} nodes, graph has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Persuasion(#[from] PersuasionError),
}

/// Node states with an index of the adopters for uniform death sampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStateConfig {
    states: Vec<bool>,
    ones: Vec<u32>,
    // position of each adopter in `ones`; meaningless for non-adopters
    pos: Vec<u32>,
}

impl NodeStateConfig {
    pub fn from_states(states: Vec<bool>) -> Self {
        let mut ones = Vec::new();
        let mut pos = vec![u32::MAX; states.len()];
        for (v, &s) in states.iter().enumerate() {
            if s {
                pos[v] = ones.len() as u32;
                ones.push(v as u32);
            }
        }
        Self { states, ones, pos }
    }

    pub fn all_zeros(n: usize) -> Self {
        Self::from_states(vec![false; n])
    }

    pub fn all_ones(n: usize) -> Self {
        Self::from_states(vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[bool] {
        &self.states
    }

    pub fn is_one(&self, v: usize) -> bool {
        self.states[v]
    }

    pub fn ones_count(&self) -> usize {
        self.ones.len()
    }

    pub fn z(&self) -> f64 {
        self.ones.len() as f64 / self.states.len() as f64
    }

    fn set_one(&mut self, v: usize) {
        debug_assert!(!self.states[v]);
        self.states[v] = true;
        self.pos[v] = self.ones.len() as u32;
        self.ones.push(v as u32);
    }

    fn set_zero(&mut self, v: usize) {
        debug_assert!(self.states[v]);
        self.states[v] = false;
        let i = self.pos[v] as usize;
        self.ones.swap_remove(i);
        if let Some(&moved) = self.ones.get(i) {
            self.pos[moved as usize] = i as u32;
        }
        self.pos[v] = u32::MAX;
    }
}

/// Exactly `⌊z0·N⌋` adopters at uniformly random positions.
pub fn init_config(n: usize, z0: f64, seed: u64) -> Result<NodeStateConfig, DynamicsError> {
    if !(0.0..=1.0).contains(&z0) {
        return Err(DynamicsError::InvalidParameter(format!(
            "initial fraction {z0} outside [0, 1]"
        )));
    }
    // the epsilon keeps fractions like 0.29 * 100 from rounding down to 28
    let k = ((z0 * n as f64 + 1e-9).floor() as usize).min(n);
    let mut rng = rng_from_seed(seed);
    let chosen = (0..n).choose_multiple(&mut rng, k);
    let mut states = vec![false; n];
    for v in chosen {
        states[v] = true;
    }
    Ok(NodeStateConfig::from_states(states))
}

/// Number of arcs `(v, w)` with `X_v = 0` and `X_w = 1`, by a full scan.
pub fn active_arc_count(config: &NodeStateConfig, g: &Graph) -> Result<u64, DynamicsError> {
    check_size(config, g)?;
    Ok(g
        .arcs()
        .filter(|&(v, w)| !config.states[v] && config.states[w])
        .count() as u64)
}

fn check_size(config: &NodeStateConfig, g: &Graph) -> Result<(), DynamicsError> {
    if config.len() != g.node_count() {
        return Err(DynamicsError::SizeMismatch {
            expected: g.node_count(),
            got: config.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Birth(usize),
    Death(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Step-level simulator state. [`simulate`] is a thin driver around it.
pub struct Engine<'a> {
    g: &'a Graph,
    phi: &'a Persuasion,
    birth_coef: f64,
    config: NodeStateConfig,
    // adopting out-neighbours of each node
    adopting: Vec<u64>,
    // weights adopting[v] * (1 - X_v); the total is the active-arc count
    active: Fenwick,
    time: f64,
    events: u64,
    rng: SimRng,
}

impl<'a> Engine<'a> {
    pub fn new(
        g: &'a Graph,
        phi: &'a Persuasion,
        beta: f64,
        init: NodeStateConfig,
        seed: u64,
    ) -> Result<Self, DynamicsError> {
        check_size(&init, g)?;
        g.require_strongly_connected()?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(DynamicsError::InvalidParameter(format!(
                "rate parameter must be finite and nonnegative, got {beta}"
            )));
        }
        validate_assumptions(phi, 101)?;
        let n = g.node_count();
        let adopting: Vec<u64> = (0..n)
            .map(|v| {
                g.out_neighbors(v)
                    .iter()
                    .filter(|&&w| init.states[w as usize])
                    .count() as u64
            })
            .collect();
        let weights: Vec<u64> = (0..n)
            .map(|v| if init.states[v] { 0 } else { adopting[v] })
            .collect();
        let birth_coef = if g.arc_count() == 0 {
            0.0
        } else {
            beta / g.avg_degree()
        };
        Ok(Self {
            g,
            phi,
            birth_coef,
            config: init,
            adopting,
            active: Fenwick::from_weights(&weights),
            time: 0.0,
            events: 0,
            rng: rng_from_seed(seed),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn config(&self) -> &NodeStateConfig {
        &self.config
    }

    pub fn ones_count(&self) -> usize {
        self.config.ones_count()
    }

    pub fn active_arc_count(&self) -> u64 {
        self.active.total()
    }

    pub fn z(&self) -> f64 {
        self.config.z()
    }

    pub fn xi(&self) -> f64 {
        let m = self.g.arc_count();
        if m == 0 {
            0.0
        } else {
            self.active.total() as f64 / m as f64
        }
    }

    pub fn is_absorbed(&self) -> bool {
        self.config.ones_count() == 0
    }

    fn birth_rate(&self) -> f64 {
        self.birth_coef * self.phi.eval(self.z()) * self.active.total() as f64
    }

    /// Advance by one event, unless it would land after `horizon`. Returns
    /// `None` at absorption or when the next event falls past the horizon;
    /// the state is then left untouched.
    pub fn step(&mut self, horizon: f64) -> Option<Event> {
        let deaths = self.config.ones_count() as f64;
        if deaths == 0.0 {
            return None;
        }
        let births = self.birth_rate();
        let total = births + deaths;
        let dt: f64 = self.rng.sample::<f64, _>(Exp1) / total;
        let t = self.time + dt;
        if t > horizon {
            return None;
        }
        self.time = t;
        self.events += 1;
        let kind = if self.rng.random::<f64>() * total < births {
            let v = self.active.find(self.rng.random_range(0..self.active.total()));
            self.flip_to_one(v);
            EventKind::Birth(v)
        } else {
            let i = self.rng.random_range(0..self.config.ones.len());
            let v = self.config.ones[i] as usize;
            self.flip_to_zero(v);
            EventKind::Death(v)
        };
        if cfg!(debug_assertions) && self.g.node_count() <= DEBUG_CHECK_MAX_NODES {
            self.check_counters();
        }
        Some(Event { time: t, kind })
    }

    fn flip_to_one(&mut self, w: usize) {
        self.config.set_one(w);
        self.active.add(w, -(self.adopting[w] as i64));
        for &v in self.g.in_neighbors(w) {
            let v = v as usize;
            self.adopting[v] += 1;
            if !self.config.states[v] {
                self.active.add(v, 1);
            }
        }
    }

    fn flip_to_zero(&mut self, w: usize) {
        // w is still marked as an adopter here, so its own self-loop is skipped
        for &v in self.g.in_neighbors(w) {
            let v = v as usize;
            self.adopting[v] -= 1;
            if !self.config.states[v] {
                self.active.add(v, -1);
            }
        }
        self.config.set_zero(w);
        self.active.add(w, self.adopting[w] as i64);
    }

    fn check_counters(&self) {
        let brute = active_arc_count(&self.config, self.g).expect("sizes match");
        assert_eq!(brute, self.active.total(), "active-arc counter drifted");
        let popcount = self.config.states.iter().filter(|&&s| s).count();
        assert_eq!(popcount, self.config.ones_count(), "adopter index drifted");
    }
}

/// Simulate up to `horizon` or absorption, whichever comes first.
pub fn simulate(
    g: &Graph,
    phi: &Persuasion,
    beta: f64,
    init: NodeStateConfig,
    horizon: f64,
    seed: u64,
    opts: SampleOptions,
) -> Result<Trajectory, DynamicsError> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(DynamicsError::InvalidParameter(format!(
            "horizon must be finite and nonnegative, got {horizon}"
        )));
    }
    let mut engine = Engine::new(g, phi, beta, init, seed)?;
    let mut rec = Recorder::new(opts, g.node_count(), horizon, engine.z(), Some(engine.xi()));
    if engine.is_absorbed() {
        return Ok(rec.absorbed(0.0, Some(0.0), seed));
    }
    loop {
        let (z, xi) = (engine.z(), engine.xi());
        match engine.step(horizon) {
            Some(ev) => {
                rec.advance_to(ev.time, z, Some(xi));
                rec.event(ev.time, engine.z(), Some(engine.xi()));
                if engine.is_absorbed() {
                    return Ok(rec.absorbed(ev.time, Some(0.0), seed));
                }
            }
            None => return Ok(rec.reached_horizon(z, Some(xi), seed)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete, gen_er, gen_torus};
    use proptest::prelude::*;

    #[test]
    fn triangle_active_arcs() {
        let g = gen_complete(3, false).unwrap();
        let c = NodeStateConfig::from_states(vec![true, false, false]);
        assert_eq!(active_arc_count(&c, &g).unwrap(), 2);
        assert_eq!(active_arc_count(&NodeStateConfig::all_zeros(3), &g).unwrap(), 0);
        assert_eq!(
            active_arc_count(&NodeStateConfig::all_zeros(4), &g),
            Err(DynamicsError::SizeMismatch { expected: 3, got: 4 })
        );
    }

    #[test]
    fn complete_with_loops_counts_k_times_n_minus_k() {
        let n = 12;
        let g = gen_complete(n, true).unwrap();
        for k in 0..=n {
            let states = (0..n).map(|v| v < k).collect();
            let c = NodeStateConfig::from_states(states);
            assert_eq!(active_arc_count(&c, &g).unwrap(), (k * (n - k)) as u64);
        }
    }

    #[test]
    fn init_config_counts() {
        assert_eq!(init_config(10, 0.0, 1).unwrap().ones_count(), 0);
        assert_eq!(init_config(10, 1.0, 1).unwrap().ones_count(), 10);
        assert_eq!(init_config(10, 0.25, 1).unwrap().ones_count(), 2);
        assert_eq!(init_config(100, 0.29, 1).unwrap().ones_count(), 29);
        assert_eq!(init_config(10, 0.3, 5), init_config(10, 0.3, 5));
        assert!(init_config(10, 1.5, 1).is_err());
    }

    #[test]
    fn zero_start_is_absorbed_immediately() {
        let g = gen_complete(5, true).unwrap();
        let traj = simulate(
            &g,
            &Persuasion::linear(),
            3.0,
            NodeStateConfig::all_zeros(5),
            10.0,
            1,
            SampleOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.absorbed_at, Some(0.0));
        assert_eq!(traj.event_count, 0);
        assert_eq!(traj.final_z(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = gen_complete(4, false).unwrap();
        let phi = Persuasion::linear();
        let init = NodeStateConfig::all_ones(4);
        assert!(simulate(&g, &phi, -1.0, init.clone(), 1.0, 0, SampleOptions::default()).is_err());
        assert!(simulate(&g, &phi, 1.0, init.clone(), f64::NAN, 0, SampleOptions::default()).is_err());
        let path = Graph::build_from_arcs(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(
            simulate(&path, &phi, 1.0, NodeStateConfig::all_ones(3), 1.0, 0, SampleOptions::default()),
            Err(DynamicsError::Graph(GraphError::NotStronglyConnected))
        );
        let bad = Persuasion::constant(1.5);
        assert!(matches!(
            simulate(&g, &bad, 1.0, init, 1.0, 0, SampleOptions::default()),
            Err(DynamicsError::Persuasion(_))
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let g = gen_er(60, 0.1, 3).unwrap();
        let phi = Persuasion::linear();
        let run = |seed| {
            let init = init_config(60, 0.5, 11).unwrap();
            simulate(&g, &phi, 6.0, init, 5.0, seed, SampleOptions::every_event()).unwrap()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }

    #[test]
    fn complete_with_loops_xi_is_z_one_minus_z() {
        let n = 40;
        let g = gen_complete(n, true).unwrap();
        let phi = Persuasion::linear();
        let init = init_config(n, 0.5, 2).unwrap();
        let traj = simulate(&g, &phi, 8.0, init, 10.0, 9, SampleOptions::every_event()).unwrap();
        for s in &traj.samples {
            let k = (s.z * n as f64).round();
            let expected = k * (n as f64 - k) / (n * n) as f64;
            assert_eq!(s.xi.unwrap(), expected);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn counters_match_brute_force(seed in any::<u64>(), beta in 0.0f64..12.0, z0 in 0.0f64..=1.0) {
            let g = gen_torus(2, 5).unwrap();
            let phi = Persuasion::linear();
            let init = init_config(25, z0, seed).unwrap();
            let mut engine = Engine::new(&g, &phi, beta, init, seed ^ 1).unwrap();
            let mut last_ones = engine.ones_count() as i64;
            while let Some(ev) = engine.step(20.0) {
                let ones = engine.ones_count() as i64;
                prop_assert_eq!((ones - last_ones).abs(), 1);
                match ev.kind {
                    EventKind::Birth(v) => prop_assert!(engine.config().is_one(v)),
                    EventKind::Death(v) => prop_assert!(!engine.config().is_one(v)),
                }
                last_ones = ones;
                prop_assert_eq!(
                    engine.active_arc_count(),
                    active_arc_count(engine.config(), &g).unwrap()
                );
                prop_assert!((0.0..=1.0).contains(&engine.xi()));
            }
        }

        #[test]
        fn samples_are_ordered_and_bounded(seed in any::<u64>(), beta in 0.0f64..12.0) {
            let g = gen_complete(15, false).unwrap();
            let phi = Persuasion::linear();
            let init = init_config(15, 0.6, seed).unwrap();
            let traj = simulate(&g, &phi, beta, init, 8.0, seed, SampleOptions::default()).unwrap();
            prop_assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
            prop_assert!(traj.samples.last().unwrap().t <= 8.0);
            if let Some(a) = traj.absorbed_at {
                prop_assert_eq!(traj.samples.last().unwrap().t, a);
                prop_assert_eq!(traj.final_z(), 0.0);
            } else {
                prop_assert_eq!(traj.samples.last().unwrap().t, 8.0);
            }
        }
    }
}
