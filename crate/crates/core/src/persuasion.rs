//! The persuasion function `φ : [0, 1] → [0, 1]`.
//!
//! `φ(z)` is the probability that a gossip contact converts a non-adopter
//! when a fraction `z` of the whole population has adopted. Downstream
//! analysis needs `φ` nondecreasing and concave (the *standard* class); the
//! *strong* class additionally asks `φ'(0) < φ(0)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

pub const DEFAULT_GRID_SIZE: usize = 1001;

/// Tolerance on finite-difference sign tests.
pub const SIGN_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersuasionError {
    #[error("cannot parse persuasion spec {0:?}")]
    Parse(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("phi({z}) = {value} lies outside [0, 1]")]
    OutOfRange { z: f64, value: f64 },
    #[error("grid size must be at least 3, got {0}")]
    GridTooSmall(usize),
    #[error("persuasion function is not nondecreasing and concave (first violation at z = {z})")]
    NotStandard { z: f64 },
}

#[derive(Clone)]
pub enum PersuasionKind {
    /// `φ(z) = z`.
    Linear,
    /// `φ(z) = c`.
    Constant(f64),
    /// `φ(z) = Σ a_i z^i`, coefficients from the constant term up.
    Polynomial(Vec<f64>),
    /// Piecewise-linear interpolation through `(z_i, v_i)`, `z` strictly
    /// increasing from 0 to 1.
    Tabulated { z: Vec<f64>, v: Vec<f64> },
    /// Arbitrary evaluator, identified by `name` in metadata.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

#[derive(Clone)]
pub struct Persuasion {
    kind: PersuasionKind,
}

impl fmt::Debug for Persuasion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Persuasion({self})")
    }
}

impl Persuasion {
    pub fn linear() -> Self {
        Self {
            kind: PersuasionKind::Linear,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            kind: PersuasionKind::Constant(c),
        }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self {
            kind: PersuasionKind::Polynomial(coefficients),
        }
    }

    pub fn tabulated(z: Vec<f64>, v: Vec<f64>) -> Result<Self, PersuasionError> {
        if z.len() != v.len() || z.len() < 2 {
            return Err(PersuasionError::InvalidTable(
                "need at least two (z, value) pairs".into(),
            ));
        }
        if z.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(PersuasionError::InvalidTable(
                "grid must be strictly increasing".into(),
            ));
        }
        if z[0] != 0.0 || z[z.len() - 1] != 1.0 {
            return Err(PersuasionError::InvalidTable(
                "grid must start at 0 and end at 1".into(),
            ));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(PersuasionError::InvalidTable("non-finite value".into()));
        }
        Ok(Self {
            kind: PersuasionKind::Tabulated { z, v },
        })
    }

    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: PersuasionKind::Custom {
                name: name.into(),
                f: Arc::new(f),
            },
        }
    }

    pub fn kind(&self) -> &PersuasionKind {
        &self.kind
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        match &self.kind {
            PersuasionKind::Linear => z,
            PersuasionKind::Constant(c) => *c,
            PersuasionKind::Polynomial(a) => a.iter().rev().fold(0.0, |acc, &c| acc * z + c),
            PersuasionKind::Tabulated { z: grid, v } => {
                let i = grid.partition_point(|&g| g <= z);
                if i == 0 {
                    v[0]
                } else if i == grid.len() {
                    v[v.len() - 1]
                } else {
                    let t = (z - grid[i - 1]) / (grid[i] - grid[i - 1]);
                    v[i - 1] + t * (v[i] - v[i - 1])
                }
            }
            PersuasionKind::Custom { f, .. } => f(z),
        }
    }

    /// Run [`validate_assumptions`] and fail unless the standard class holds.
    /// A failed strong check is only logged.
    pub fn require_standard(&self) -> Result<SsaReport, PersuasionError> {
        let report = validate_assumptions(self, DEFAULT_GRID_SIZE)?;
        if !report.standard {
            let z = report.first_violation.map_or(f64::NAN, |v| v.z);
            return Err(PersuasionError::NotStandard { z });
        }
        if !report.strong {
            log::info!("{self}: phi'(0) < phi(0) does not hold; continuing with the standard class");
        }
        Ok(report)
    }
}

impl fmt::Display for Persuasion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            PersuasionKind::Linear => f.write_str("linear"),
            PersuasionKind::Constant(c) => write!(f, "constant:{c}"),
            PersuasionKind::Polynomial(a) => write!(f, "poly:{}", join(a)),
            PersuasionKind::Tabulated { z, v } => {
                let parts: Vec<String> = z.iter().zip(v).map(|(a, b)| format!("{a}:{b}")).collect();
                write!(f, "table:{}", parts.join(","))
            }
            PersuasionKind::Custom { name, .. } => write!(f, "custom:{name}"),
        }
    }
}

impl FromStr for Persuasion {
    type Err = PersuasionError;

    /// Accepts `linear`, `constant:c`, `poly:a0,a1,...` and
    /// `table:z0:v0,z1:v1,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || PersuasionError::Parse(s.to_string());
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        if s == "linear" {
            return Ok(Self::linear());
        }
        let (head, rest) = s.split_once(':').ok_or_else(bad)?;
        match head {
            "constant" => Ok(Self::constant(num(rest)?)),
            "poly" => {
                let a = rest.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
                Ok(Self::polynomial(a))
            }
            "table" => {
                let mut z = Vec::new();
                let mut v = Vec::new();
                for pair in rest.split(',') {
                    let (a, b) = pair.split_once(':').ok_or_else(bad)?;
                    z.push(num(a)?);
                    v.push(num(b)?);
                }
                Self::tabulated(z, v)
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Monotone,
    Concave,
    SlopeBelowValueAtZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsaReport {
    /// `φ' ≥ 0` and `φ'' ≤ 0` on the grid.
    pub standard: bool,
    /// Standard plus `φ'(0) < φ(0)`.
    pub strong: bool,
    pub first_violation: Option<Violation>,
}

/// Check range, monotonicity and concavity of `φ` by finite differences on a
/// uniform grid of `grid_size` points.
pub fn validate_assumptions(phi: &Persuasion, grid_size: usize) -> Result<SsaReport, PersuasionError> {
    if grid_size < 3 {
        return Err(PersuasionError::GridTooSmall(grid_size));
    }
    let h = 1.0 / (grid_size - 1) as f64;
    let zs: Vec<f64> = (0..grid_size).map(|i| i as f64 * h).collect();
    let vals: Vec<f64> = zs.iter().map(|&z| phi.eval(z)).collect();
    for (&z, &value) in zs.iter().zip(&vals) {
        if !(0.0..=1.0).contains(&value) {
            return Err(PersuasionError::OutOfRange { z, value });
        }
    }

    let mut first_violation = None;
    for i in 0..grid_size - 1 {
        if (vals[i + 1] - vals[i]) / h < -SIGN_TOL {
            first_violation = Some(Violation {
                condition: Condition::Monotone,
                z: zs[i],
            });
            break;
        }
    }
    if first_violation.is_none() {
        for i in 1..grid_size - 1 {
            if (vals[i + 1] - 2.0 * vals[i] + vals[i - 1]) / (h * h) > SIGN_TOL {
                first_violation = Some(Violation {
                    condition: Condition::Concave,
                    z: zs[i],
                });
                break;
            }
        }
    }
    let standard = first_violation.is_none();

    // second-order one-sided difference at the left boundary
    let slope0 = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h);
    let origin_ok = vals[0] - slope0 > SIGN_TOL;
    if standard && !origin_ok {
        first_violation = Some(Violation {
            condition: Condition::SlopeBelowValueAtZero,
            z: 0.0,
        });
    }
    Ok(SsaReport {
        standard,
        strong: standard && origin_ok,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_is_standard_not_strong() {
        let r = validate_assumptions(&Persuasion::linear(), DEFAULT_GRID_SIZE).unwrap();
        assert!(r.standard);
        assert!(!r.strong);
        assert_eq!(r.first_violation.unwrap().condition, Condition::SlopeBelowValueAtZero);
    }

    #[test]
    fn constant_is_strong() {
        let r = validate_assumptions(&Persuasion::constant(0.3), DEFAULT_GRID_SIZE).unwrap();
        assert!(r.standard && r.strong);
        assert!(r.first_violation.is_none());
    }

    #[test]
    fn decreasing_fails_standard() {
        let phi = Persuasion::polynomial(vec![1.0, -1.0]);
        let r = validate_assumptions(&phi, DEFAULT_GRID_SIZE).unwrap();
        assert!(!r.standard && !r.strong);
        assert_eq!(r.first_violation.unwrap().condition, Condition::Monotone);
    }

    #[test]
    fn convex_fails_standard() {
        let phi = Persuasion::polynomial(vec![0.0, 0.0, 1.0]);
        let r = validate_assumptions(&phi, 101).unwrap();
        assert!(!r.standard);
        assert_eq!(r.first_violation.unwrap().condition, Condition::Concave);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let phi = Persuasion::polynomial(vec![0.5, 1.0]);
        assert!(matches!(
            validate_assumptions(&phi, 11),
            Err(PersuasionError::OutOfRange { .. })
        ));
        assert_eq!(
            validate_assumptions(&Persuasion::linear(), 2),
            Err(PersuasionError::GridTooSmall(2))
        );
    }

    #[test]
    fn concave_strong_polynomial() {
        // 0.2 + 0.1 z - 0.05 z^2: phi'(0) = 0.1 < 0.2
        let phi = Persuasion::polynomial(vec![0.2, 0.1, -0.05]);
        let r = validate_assumptions(&phi, DEFAULT_GRID_SIZE).unwrap();
        assert!(r.strong);
    }

    #[test]
    fn require_standard_errors() {
        assert!(Persuasion::linear().require_standard().is_ok());
        assert!(matches!(
            Persuasion::polynomial(vec![1.0, -1.0]).require_standard(),
            Err(PersuasionError::NotStandard { .. })
        ));
    }

    #[test]
    fn parse_and_display() {
        for s in ["linear", "constant:0.3", "poly:0.1,0.5,-0.1", "table:0:0.1,0.5:0.6,1:0.8"] {
            let phi: Persuasion = s.parse().unwrap();
            assert_eq!(phi.to_string(), s);
        }
        assert!("quadratic".parse::<Persuasion>().is_err());
        assert!("constant:abc".parse::<Persuasion>().is_err());
        assert!("table:0:0.1,0.5:0.6".parse::<Persuasion>().is_err());
        assert!("table:0:0.1,0.7:0.2,0.5:0.6,1:1".parse::<Persuasion>().is_err());
    }

    #[test]
    fn table_interpolates_linearly() {
        let phi: Persuasion = "table:0:0,0.5:0.8,1:1".parse().unwrap();
        assert_eq!(phi.eval(0.25), 0.4);
        assert_eq!(phi.eval(0.75), 0.9);
        assert_eq!(phi.eval(1.0), 1.0);
        assert!(validate_assumptions(&phi, DEFAULT_GRID_SIZE).unwrap().standard);
    }

    proptest! {
        #[test]
        fn closed_form_outcomes_any_grid(grid in 3usize..3000, c in 0.001f64..1.0) {
            let lin = validate_assumptions(&Persuasion::linear(), grid).unwrap();
            prop_assert!(lin.standard && !lin.strong);
            let cst = validate_assumptions(&Persuasion::constant(c), grid).unwrap();
            prop_assert!(cst.standard && cst.strong);
        }

        #[test]
        fn table_stays_within_hull(vals in proptest::collection::vec(0.0f64..=1.0, 2..12), z in 0.0f64..=1.0) {
            let k = vals.len();
            let grid: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
            let phi = Persuasion::tabulated(grid, vals.clone()).unwrap();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let y = phi.eval(z);
            prop_assert!(y >= lo - 1e-15 && y <= hi + 1e-15);
        }
    }
}
