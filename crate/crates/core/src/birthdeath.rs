//! Birth–death chains on the lattice `{0, 1/N, …, 1}`.
//!
//! Rates are stored per lattice index `k` and always in whole-population
//! units (expected jumps per unit time), so chains built from different
//! families can be compared on the same clock.

use std::fmt;

use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::persuasion::Persuasion;
use crate::rng::rng_from_seed;
use crate::trajectory::{Recorder, SampleOptions, Trajectory};

/// Initial fractions within this distance of a lattice point are snapped to it.
const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("invalid rate table: {0}")]
    InvalidRates(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial fraction {z0} is not on the lattice of size {n}")]
    OffLattice { z0: f64, n: usize },
    #[error("need 0 <= k <= M <= N, got k = {k}, M = {m}, N = {n}")]
    OutOfRange { k: usize, m: usize, n: usize },
    #[error("birth rate vanishes at state {state}, so the target cannot be reached")]
    Unreachable { state: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    MeanField,
    /// Mean-field rates with `β` scaled by `γ / d̄`.
    Lower,
    /// Linear-in-`z` birth rate with `β` scaled by `Δ / d̄`.
    Upper,
    Custom,
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainKind::MeanField => "meanfield",
            ChainKind::Lower => "lower",
            ChainKind::Upper => "upper",
            ChainKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathChain {
    birth: Vec<f64>,
    death: Vec<f64>,
    kind: ChainKind,
}

impl BirthDeathChain {
    /// Tables indexed by `k = 0..=N`. Requires `λ⁺(N) = 0`, `λ⁻(0) = 0` and
    /// finite nonnegative entries.
    pub fn new(birth: Vec<f64>, death: Vec<f64>, kind: ChainKind) -> Result<Self, ChainError> {
        if birth.len() != death.len() || birth.len() < 2 {
            return Err(ChainError::InvalidRates(
                "birth and death tables must have the same length N + 1 >= 2".into(),
            ));
        }
        if let Some(k) = birth
            .iter()
            .chain(&death)
            .position(|r| !(r.is_finite() && *r >= 0.0))
        {
            return Err(ChainError::InvalidRates(format!(
                "entry {} is negative or not finite",
                k % birth.len()
            )));
        }
        if birth[birth.len() - 1] != 0.0 || death[0] != 0.0 {
            return Err(ChainError::InvalidRates(
                "the chain must not leave [0, 1]".into(),
            ));
        }
        Ok(Self { birth, death, kind })
    }

    pub fn n(&self) -> usize {
        self.birth.len() - 1
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn birth_rate(&self, k: usize) -> f64 {
        self.birth[k]
    }

    pub fn death_rate(&self, k: usize) -> f64 {
        self.death[k]
    }

    pub fn birth_rates(&self) -> &[f64] {
        &self.birth
    }

    pub fn death_rates(&self) -> &[f64] {
        &self.death
    }

    /// `max_k λ⁺(k) + λ⁻(k)`, a uniformization constant.
    pub fn max_total_rate(&self) -> f64 {
        self.birth
            .iter()
            .zip(&self.death)
            .map(|(b, d)| b + d)
            .fold(0.0, f64::max)
    }

    /// Lattice index of `z0`, if it is on the lattice.
    pub fn lattice_index(&self, z0: f64) -> Result<usize, ChainError> {
        let n = self.n();
        let k = (z0 * n as f64).round();
        if !(0.0..=1.0).contains(&z0) || (k / n as f64 - z0).abs() > LATTICE_TOL {
            return Err(ChainError::OffLattice { z0, n });
        }
        Ok(k as usize)
    }
}

fn check_beta(beta: f64) -> Result<(), ChainError> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(ChainError::InvalidParameter(format!(
            "rate parameter must be finite and nonnegative, got {beta}"
        )))
    }
}

fn lattice_tables(n: usize, birth_at: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let birth = (0..=n)
        .map(|k| if k == n { 0.0 } else { birth_at(k as f64 / nf) })
        .collect();
    let death = (0..=n).map(|k| nf * (k as f64 / nf)).collect();
    (birth, death)
}

fn meanfield_tables(n: usize, beta: f64, phi: &Persuasion) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    lattice_tables(n, |z| nf * beta * z * (1.0 - z) * phi.eval(z))
}

fn build(n: usize, tables: (Vec<f64>, Vec<f64>), kind: ChainKind) -> Result<BirthDeathChain, ChainError> {
    if n == 0 {
        return Err(ChainError::InvalidParameter("lattice size must be positive".into()));
    }
    BirthDeathChain::new(tables.0, tables.1, kind)
}

/// Aggregated chain of the complete graph with self-loops:
/// `λ⁺(z) = Nβz(1−z)φ(z)`, `λ⁻(z) = Nz`.
pub fn rates_meanfield(n: usize, beta: f64, phi: &Persuasion) -> Result<BirthDeathChain, ChainError> {
    check_beta(beta)?;
    build(n, meanfield_tables(n, beta, phi), ChainKind::MeanField)
}

/// Mean-field chain with `β` replaced by `βγ/d̄`; dominated by the graph
/// process whenever `γ` is at most the bottleneck ratio.
pub fn rates_lower(
    n: usize,
    beta: f64,
    phi: &Persuasion,
    gamma: f64,
    dbar: f64,
) -> Result<BirthDeathChain, ChainError> {
    check_beta(beta)?;
    if !(dbar > 0.0) || !(gamma >= 0.0) || gamma > dbar {
        return Err(ChainError::InvalidParameter(format!(
            "need 0 <= gamma <= dbar with dbar > 0, got gamma = {gamma}, dbar = {dbar}"
        )));
    }
    // γ = d̄ must give exactly the mean-field table
    let scaled = beta * (gamma / dbar);
    build(n, meanfield_tables(n, scaled, phi), ChainKind::Lower)
}

/// `λ⁺(z) = N(Δ/d̄)βzφ(z)`, `λ⁻(z) = Nz`, with `λ⁺(1)` forced to 0 so the
/// chain stays on the lattice.
pub fn rates_upper(
    n: usize,
    beta: f64,
    phi: &Persuasion,
    delta: f64,
    dbar: f64,
) -> Result<BirthDeathChain, ChainError> {
    check_beta(beta)?;
    if !(dbar > 0.0) || delta < dbar {
        return Err(ChainError::InvalidParameter(format!(
            "need delta >= dbar > 0, got delta = {delta}, dbar = {dbar}"
        )));
    }
    let nf = n as f64;
    let ratio = delta / dbar;
    build(
        n,
        lattice_tables(n, |z| nf * ratio * beta * z * phi.eval(z)),
        ChainKind::Upper,
    )
}

/// Exact event-driven path of the chain started at `z0`.
pub fn simulate_bd(
    chain: &BirthDeathChain,
    z0: f64,
    horizon: f64,
    seed: u64,
    opts: SampleOptions,
) -> Result<Trajectory, ChainError> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(ChainError::InvalidParameter(format!(
            "horizon must be finite and nonnegative, got {horizon}"
        )));
    }
    let n = chain.n();
    let nf = n as f64;
    let mut k = chain.lattice_index(z0)?;
    let mut rng = rng_from_seed(seed);
    let mut rec = Recorder::new(opts, n, horizon, k as f64 / nf, None);
    if k == 0 {
        return Ok(rec.absorbed(0.0, None, seed));
    }
    let mut t = 0.0;
    loop {
        let (b, d) = (chain.birth[k], chain.death[k]);
        let total = b + d;
        let z = k as f64 / nf;
        if total == 0.0 {
            return Ok(rec.reached_horizon(z, None, seed));
        }
        t += rng.sample::<f64, _>(Exp1) / total;
        if t > horizon {
            return Ok(rec.reached_horizon(z, None, seed));
        }
        rec.advance_to(t, z, None);
        if rng.random::<f64>() * total < b {
            k += 1;
        } else {
            k -= 1;
        }
        rec.event(t, k as f64 / nf, None);
        if k == 0 {
            return Ok(rec.absorbed(t, None, seed));
        }
    }
}

/// One run of the embedded jump chain from `k` until it hits `0` or `m`;
/// true when `m` is reached first.
pub fn sample_hit<R: Rng + ?Sized>(chain: &BirthDeathChain, k: usize, m: usize, rng: &mut R) -> bool {
    let mut k = k;
    while k != 0 && k != m {
        let (b, d) = (chain.birth[k], chain.death[k]);
        if rng.random::<f64>() * (b + d) < b {
            k += 1;
        } else {
            k -= 1;
        }
    }
    k == m
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Probability of reaching `m` before 0 from `k`:
/// `e_k = Σ_{i<k} P_i / Σ_{i<m} P_i` with `P_i = Π_{j=1..i} λ⁻(j)/λ⁺(j)`,
/// accumulated in log space.
pub fn hitting_prob(chain: &BirthDeathChain, k: usize, m: usize) -> Result<f64, ChainError> {
    let n = chain.n();
    if k > m || m > n {
        return Err(ChainError::OutOfRange { k, m, n });
    }
    if k == m {
        return Ok(1.0);
    }
    if k == 0 {
        return Ok(0.0);
    }
    if let Some(state) = (1..m).find(|&j| chain.birth[j] <= 0.0) {
        return Err(ChainError::Unreachable { state });
    }
    let mut log_p = Vec::with_capacity(m);
    let mut acc = 0.0;
    log_p.push(acc);
    for j in 1..m {
        acc += chain.death[j].ln() - chain.birth[j].ln();
        log_p.push(acc);
    }
    let num = log_sum_exp(&log_p[..k]);
    let den = log_sum_exp(&log_p);
    Ok((num - den).exp().min(1.0))
}
