//! Deterministic limit `z' = F(z)` with `F(z) = βz(1−z)φ(z) − z`.
//!
//! Positive equilibria solve `β(1−z)φ(z) = 1`. Under the standard
//! assumptions `g(z) = (1−z)φ(z)` is concave with a unique maximiser
//! `z_max`, so each side of `z_max` holds at most one root.

use std::fmt;

use thiserror::Error;

use crate::persuasion::{Persuasion, PersuasionError};
use crate::trajectory::Trajectory;

pub const ROOT_TOL: f64 = 1e-12;
pub const DEFAULT_ODE_STEP: f64 = 1e-3;
/// Maximum change allowed when the ODE step is halved.
pub const STEP_CHECK_TOL: f64 = 1e-6;

const MAX_GRID: usize = 10_000;
const HORIZON_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanFieldError {
    #[error(transparent)]
    Persuasion(#[from] PersuasionError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("horizons differ: {stochastic} vs {deterministic}")]
    HorizonMismatch { stochastic: f64, deterministic: f64 },
    #[error("halving the step changed the solution by {diff:e}")]
    StepCheck { diff: f64 },
}

pub fn drift(z: f64, beta: f64, phi: &Persuasion) -> f64 {
    beta * z * (1.0 - z) * phi.eval(z) - z
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRate {
    /// `1 / max (1−z)φ(z)`, infinite when `φ ≡ 0`.
    pub beta_star: f64,
    pub z_max: f64,
    pub g_max: f64,
}

fn g(phi: &Persuasion, z: f64) -> f64 {
    (1.0 - z) * phi.eval(z)
}

/// Maximise `(1−z)φ(z)` on a grid, then refine by golden-section search
/// around the best grid point.
pub fn beta_star(phi: &Persuasion) -> CriticalRate {
    let h = 1.0 / MAX_GRID as f64;
    let (mut best, mut best_val) = (0usize, f64::NEG_INFINITY);
    for i in 0..=MAX_GRID {
        let v = g(phi, i as f64 * h);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    let lo = best.saturating_sub(1) as f64 * h;
    let hi = ((best + 1).min(MAX_GRID)) as f64 * h;
    let (z_max, g_max) = golden_max(|z| g(phi, z), lo, hi, best as f64 * h, best_val);
    let beta_star = if g_max > 0.0 { 1.0 / g_max } else { f64::INFINITY };
    CriticalRate {
        beta_star,
        z_max,
        g_max,
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, seed_z: f64, seed_v: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > ROOT_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = (seed_z, seed_v);
    for z in [a, b, 0.5 * (a + b)] {
        let v = f(z);
        if v > best.1 {
            best = (z, v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibria {
    /// Unstable root, the adoption threshold.
    pub z_u: Option<f64>,
    /// Stable root, the persistent adoption level.
    pub z_s: Option<f64>,
    /// `β = β*` up to root tolerance: both roots coincide at `z_max`.
    pub tangent: bool,
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let increasing = f(lo) < f(hi);
    for _ in 0..200 {
        if hi - lo <= ROOT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub(crate) fn equilibria_with(beta: f64, phi: &Persuasion, crit: &CriticalRate) -> Equilibria {
    let f = |z: f64| beta * g(phi, z) - 1.0;
    let peak = f(crit.z_max);
    if peak.abs() <= ROOT_TOL {
        return Equilibria {
            z_u: Some(crit.z_max),
            z_s: Some(crit.z_max),
            tangent: true,
        };
    }
    if peak < 0.0 {
        return Equilibria {
            z_u: None,
            z_s: None,
            tangent: false,
        };
    }
    // f(0) >= 0 means zero itself is unstable and no threshold exists
    let z_u = (f(0.0) < 0.0).then(|| bisect(f, 0.0, crit.z_max));
    let z_s = Some(bisect(f, crit.z_max, 1.0));
    Equilibria {
        z_u,
        z_s,
        tangent: false,
    }
}

pub fn equilibria(beta: f64, phi: &Persuasion) -> Equilibria {
    equilibria_with(beta, phi, &beta_star(phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `z(t) → 0` from every start.
    Extinction,
    /// `z(t) → z_s` above `z_u`, `→ 0` below.
    Bistable,
    /// `z(t) → z_s` from every positive start.
    Persistence,
}

impl Regime {
    pub fn number(self) -> u8 {
        match self {
            Regime::Extinction => 1,
            Regime::Bistable => 2,
            Regime::Persistence => 3,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub beta_star: f64,
    /// `1/φ(0)`, infinite when `φ(0) = 0`.
    pub phi0_inv: f64,
    pub z_u: Option<f64>,
    pub z_s: Option<f64>,
    /// `β = β*` within root tolerance; reported as extinction.
    pub tangent: bool,
}

pub fn classify_regime(beta: f64, phi: &Persuasion) -> Result<RegimeReport, MeanFieldError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(MeanFieldError::InvalidParameter(format!(
            "rate parameter must be positive and finite, got {beta}"
        )));
    }
    phi.require_standard()?;
    let crit = beta_star(phi);
    let eq = equilibria_with(beta, phi, &crit);
    let phi0 = phi.eval(0.0);
    let phi0_inv = if phi0 > 0.0 { 1.0 / phi0 } else { f64::INFINITY };
    let regime = if eq.tangent || eq.z_s.is_none() {
        Regime::Extinction
    } else if eq.z_u.is_some() {
        Regime::Bistable
    } else {
        Regime::Persistence
    };
    Ok(RegimeReport {
        regime,
        beta_star: crit.beta_star,
        phi0_inv,
        z_u: eq.z_u,
        z_s: eq.z_s,
        tangent: eq.tangent,
    })
}

/// Piecewise-linear deterministic path.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl OdeTrajectory {
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.times.len() {
            return self.final_value();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.values[i - 1] + w * (self.values[i] - self.values[i - 1])
    }
}

/// Classical RK4 with a fixed step (the last one shortened to land on the
/// horizon), clamped to `[0, 1]` after every step.
pub fn integrate_ode(
    beta: f64,
    phi: &Persuasion,
    z0: f64,
    horizon: f64,
    step: f64,
) -> Result<OdeTrajectory, MeanFieldError> {
    if !(0.0..=1.0).contains(&z0) {
        return Err(MeanFieldError::InvalidParameter(format!("z0 = {z0} outside [0, 1]")));
    }
    if !(step > 0.0) || !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(MeanFieldError::InvalidParameter(format!(
            "need step > 0 and a finite horizon >= 0, got step = {step}, horizon = {horizon}"
        )));
    }
    let f = |z: f64| drift(z, beta, phi);
    let steps = (horizon / step).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut z = z0;
    times.push(0.0);
    values.push(z);
    for i in 0..steps {
        let t0 = i as f64 * step;
        let t1 = if i + 1 == steps { horizon } else { (i + 1) as f64 * step };
        let h = t1 - t0;
        let k1 = f(z);
        let k2 = f(z + 0.5 * h * k1);
        let k3 = f(z + 0.5 * h * k2);
        let k4 = f(z + h * k3);
        z = (z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0);
        times.push(t1);
        values.push(z);
    }
    Ok(OdeTrajectory { times, values })
}

/// [`integrate_ode`] plus a step-halving check: fails if the solution moves
/// by [`STEP_CHECK_TOL`] or more at any coarse time point.
pub fn integrate_ode_checked(
    beta: f64,
    phi: &Persuasion,
    z0: f64,
    horizon: f64,
    step: f64,
) -> Result<OdeTrajectory, MeanFieldError> {
    let coarse = integrate_ode(beta, phi, z0, horizon, step)?;
    let fine = integrate_ode(beta, phi, z0, horizon, step / 2.0)?;
    let diff = coarse
        .times
        .iter()
        .zip(&coarse.values)
        .map(|(&t, &v)| (fine.value_at(t) - v).abs())
        .fold(0.0, f64::max);
    if diff >= STEP_CHECK_TOL {
        return Err(MeanFieldError::StepCheck { diff });
    }
    Ok(coarse)
}

/// `sup_t |Z(t) − z(t)|` with `Z` a step function and `z` piecewise linear.
///
/// The supremum of the difference over each piece is attained at a
/// breakpoint of one of the two paths, so it is enough to compare at every
/// sample time of both, taking left limits of `Z` at its jumps.
pub fn kurtz_gap(stochastic: &Trajectory, deterministic: &OdeTrajectory) -> Result<f64, MeanFieldError> {
    let (ts, td) = (stochastic.horizon, deterministic.horizon());
    if (ts - td).abs() > HORIZON_TOL {
        return Err(MeanFieldError::HorizonMismatch {
            stochastic: ts,
            deterministic: td,
        });
    }
    let mut gap: f64 = 0.0;
    for (&t, &v) in deterministic.times.iter().zip(&deterministic.values) {
        gap = gap.max((stochastic.value_at(t) - v).abs());
    }
    let mut prev: Option<f64> = None;
    for s in &stochastic.samples {
        let v = deterministic.value_at(s.t);
        gap = gap.max((s.z - v).abs());
        if let Some(p) = prev {
            gap = gap.max((p - v).abs());
        }
        prev = Some(s.z);
    }
    Ok(gap)
}
