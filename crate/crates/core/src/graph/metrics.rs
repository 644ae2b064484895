//! Spectral radius, bottleneck ratio and the inequalities tying them to the
//! degree statistics.

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Ratio;

use super::{Graph, GraphError};

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITER: usize = 100_000;

/// Largest graph on which [`cheeger_exact`] enumerates subsets.
pub const CHEEGER_MAX_NODES: usize = 20;

const SPECTRAL_BOUND_MAX_NODES: usize = 2000;

/// Result of power iteration on the adjacency matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRadius {
    pub value: f64,
    /// `‖A x − ρ x‖ / ‖x‖` at the returned estimate.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Perron root of the adjacency matrix by power iteration.
///
/// Iterates on `A + I` from the all-ones vector; the shift makes the Perron
/// root strictly dominant even on bipartite graphs. Returns the best
/// estimate with `converged == false` when `max_iter` is exhausted.
pub fn spectral_radius(g: &Graph, tol: f64, max_iter: usize) -> SpectralRadius {
    let n = g.node_count();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    let mut best = SpectralRadius {
        value: 0.0,
        residual: f64::INFINITY,
        iterations: 0,
        converged: false,
    };
    for it in 0..=max_iter {
        g.adjacency_mul(&x, &mut ax);
        let theta: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&ax)
            .map(|(xv, av)| (av - theta * xv).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual < best.residual {
            best = SpectralRadius {
                value: theta,
                residual,
                iterations: it,
                converged: false,
            };
        }
        if residual <= tol {
            best.converged = true;
            return best;
        }
        let mut norm = 0.0;
        for (xv, av) in x.iter_mut().zip(&ax) {
            *xv += av;
            norm += *xv * *xv;
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    best
}

/// Exact bottleneck ratio with a minimising subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cheeger {
    /// Arcs leaving `subset`.
    pub boundary: u64,
    /// `min(|U|, |V \ U|)`.
    pub smaller_side: u64,
    pub subset: Vec<usize>,
}

impl Cheeger {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.boundary, self.smaller_side)
    }

    pub fn value(&self) -> f64 {
        self.boundary as f64 / self.smaller_side as f64
    }
}

/// `min_U |{(u, v) : u ∈ U, v ∉ U}| / min(|U|, |V \ U|)` by Gray-code
/// enumeration of subsets. Symmetric graphs only enumerate subsets avoiding
/// the last node, since a cut and its complement have the same size there.
pub fn cheeger_exact(g: &Graph) -> Result<Cheeger, GraphError> {
    let n = g.node_count();
    if n > CHEEGER_MAX_NODES {
        return Err(GraphError::TooLarge {
            n,
            cap: CHEEGER_MAX_NODES,
        });
    }
    if n < 2 {
        return Err(GraphError::InvalidParameter(
            "bottleneck ratio needs at least two nodes".into(),
        ));
    }
    let free = if g.is_symmetric() { n - 1 } else { n };
    let full: u32 = (1u32 << n) - 1;
    let mut member: u32 = 0;
    let mut cut: i64 = 0;
    let mut best: Option<(u64, u64, u32)> = None;
    for i in 1u64..(1u64 << free) {
        let x = i.trailing_zeros() as usize;
        let bit = 1u32 << x;
        let leaving_out = g
            .out_neighbors(x)
            .iter()
            .filter(|&&y| y as usize != x && member & (1 << y) == 0)
            .count() as i64;
        let entering_in = g
            .in_neighbors(x)
            .iter()
            .filter(|&&u| u as usize != x && member & (1 << u) != 0)
            .count() as i64;
        if member & bit == 0 {
            cut += leaving_out - entering_in;
        } else {
            cut -= leaving_out - entering_in;
        }
        member ^= bit;
        if member == full {
            continue;
        }
        let size = member.count_ones() as u64;
        let side = size.min(n as u64 - size);
        let c = cut as u64;
        let better = match best {
            None => true,
            Some((bc, bs, _)) => (c as u128) * (bs as u128) < (bc as u128) * (side as u128),
        };
        if better {
            best = Some((c, side, member));
        }
    }
    let (boundary, smaller_side, mask) = best.expect("at least one proper subset");
    Ok(Cheeger {
        boundary,
        smaller_side,
        subset: (0..n).filter(|&v| mask & (1 << v) != 0).collect(),
    })
}

/// Certified lower bound `λ₂(L) / 2` on the bottleneck ratio of a symmetric
/// graph, where `L = D − A` ignores self-loops.
pub fn cheeger_spectral_lower_bound(g: &Graph) -> Result<f64, GraphError> {
    if !g.is_symmetric() {
        return Err(GraphError::NotSymmetric);
    }
    let n = g.node_count();
    if n > SPECTRAL_BOUND_MAX_NODES {
        return Err(GraphError::TooLarge {
            n,
            cap: SPECTRAL_BOUND_MAX_NODES,
        });
    }
    if n < 2 {
        return Err(GraphError::InvalidParameter(
            "bottleneck ratio needs at least two nodes".into(),
        ));
    }
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for (u, v) in g.arcs().filter(|(u, v)| u != v) {
        lap[(u, v)] -= 1.0;
        lap[(u, u)] += 1.0;
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(lap).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok((eig[1] / 2.0).max(0.0))
}

/// Analytic `(a, e₁, e₂)` parameters of a regularly expansive family:
/// `d̄/Δ ≥ a` and `e₁ ≤ d̄/ρ_A ≤ d̄/γ ≤ e₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub a: f64,
    pub e1: f64,
    pub e2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaSource {
    /// Brute-force enumeration.
    Exact,
    /// `d̄ / e₂` from family parameters.
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityViolation {
    pub relation: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetrics {
    pub avg_degree: f64,
    pub max_degree: usize,
    pub max_in_degree: usize,
    pub spectral: SpectralRadius,
    pub cheeger: Option<Cheeger>,
    pub family: Option<FamilyParams>,
}

impl GraphMetrics {
    /// Degree statistics and spectral radius; the bottleneck ratio too when
    /// the graph is small enough to enumerate.
    pub fn compute(g: &Graph) -> Self {
        let cheeger = if (2..=CHEEGER_MAX_NODES).contains(&g.node_count()) {
            cheeger_exact(g).ok()
        } else {
            None
        };
        Self {
            avg_degree: g.avg_degree(),
            max_degree: g.max_degree(),
            max_in_degree: g.max_in_degree(),
            spectral: spectral_radius(g, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER),
            cheeger,
            family: None,
        }
    }

    pub fn with_family(mut self, family: FamilyParams) -> Self {
        self.family = Some(family);
        self
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral.value
    }

    pub fn gamma(&self) -> Option<(f64, GammaSource)> {
        if let Some(c) = &self.cheeger {
            return Some((c.value(), GammaSource::Exact));
        }
        self.family
            .filter(|f| f.e2 > 0.0)
            .map(|f| (self.avg_degree / f.e2, GammaSource::Analytic))
    }

    /// `γ ≤ ρ_A ≤ Δ` and `γ ≤ d̄ ≤ Δ`, with a relative slack of `1e-9` for the
    /// iterative spectral estimate. Only exact γ enters the check.
    pub fn check_inequalities(&self) -> Result<(), InequalityViolation> {
        let slack = |x: f64| 1e-9 * x.abs().max(1.0);
        let rho = self.spectral.value;
        let delta = self.max_degree as f64;
        let dbar = self.avg_degree;
        let mut checks = vec![("rho <= Delta", rho, delta), ("dbar <= Delta", dbar, delta)];
        if let Some(c) = &self.cheeger {
            checks.push(("gamma <= rho", c.value(), rho));
            checks.push(("gamma <= dbar", c.value(), dbar));
        }
        for (relation, lhs, rhs) in checks {
            if lhs > rhs + slack(rhs) {
                return Err(InequalityViolation { relation, lhs, rhs });
            }
        }
        Ok(())
    }
}
