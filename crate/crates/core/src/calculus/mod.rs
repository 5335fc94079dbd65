//! Nonsmooth calculus on functionals over the state space.
//!
//! Limits `τ → t + 0` are replaced by finite step sequences on the time grid:
//! lower and upper right directional derivatives are the min and max of the
//! last `K` difference quotients, and sub/superdifferential membership is
//! tested over a finite set of directions. Both are necessary conditions
//! only, and the quotients are kept in the result for auditing.

mod mu;
mod mvi;

pub use mu::{chain_rule_check, decay_inequality, difference, DecayReport, Mu};
pub use mvi::{mvi_search, MviConfig, MviIncumbent, MviReport};

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::histories::{History, TimeGrid, Trajectory};
use crate::math;
use crate::problem::ProblemSpec;

/// A functional `φ(t, z, w)` on the state space.
pub trait Functional {
    fn eval(&self, t: f64, z: &[f64], w: &History) -> Result<f64>;

    /// Closed-form `(∂^{ci}_{t,w} φ, ∇_z φ)` where available.
    fn ci_derivatives(&self, _t: f64, _z: &[f64], _w: &History) -> Option<(f64, Vec<f64>)> {
        None
    }

    /// Lipschitz constant in `(z, w)` on `P(α)` with respect to `‖·‖ + ‖·‖₁`.
    fn lipschitz_bound(&self, _alpha: f64) -> Option<f64> {
        None
    }
}

impl<T: Functional + ?Sized> Functional for &T {
    fn eval(&self, t: f64, z: &[f64], w: &History) -> Result<f64> {
        (**self).eval(t, z, w)
    }
    fn ci_derivatives(&self, t: f64, z: &[f64], w: &History) -> Option<(f64, Vec<f64>)> {
        (**self).ci_derivatives(t, z, w)
    }
    fn lipschitz_bound(&self, alpha: f64) -> Option<f64> {
        (**self).lipschitz_bound(alpha)
    }
}

impl<T: Functional + ?Sized> Functional for Box<T> {
    fn eval(&self, t: f64, z: &[f64], w: &History) -> Result<f64> {
        (**self).eval(t, z, w)
    }
    fn ci_derivatives(&self, t: f64, z: &[f64], w: &History) -> Option<(f64, Vec<f64>)> {
        (**self).ci_derivatives(t, z, w)
    }
    fn lipschitz_bound(&self, alpha: f64) -> Option<f64> {
        (**self).lipschitz_bound(alpha)
    }
}

/// A functional given by a closure, with no derivative information.
pub struct FromFn<F>(pub F);

impl<F: Fn(f64, &[f64], &History) -> f64> Functional for FromFn<F> {
    fn eval(&self, t: f64, z: &[f64], w: &History) -> Result<f64> {
        Ok((self.0)(t, z, w))
    }
}

/// A ci-smooth functional given by closures for the value and the pair
/// `(∂^{ci} φ, ∇_z φ)`.
pub struct Smooth<F, D> {
    pub eval: F,
    pub derivs: D,
    pub lipschitz: Option<f64>,
}

impl<F, D> Smooth<F, D>
where
    F: Fn(f64, &[f64], &History) -> f64,
    D: Fn(f64, &[f64], &History) -> (f64, Vec<f64>),
{
    pub fn new(eval: F, derivs: D) -> Self {
        Self { eval, derivs, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Self {
        self.lipschitz = Some(bound);
        self
    }
}

impl<F, D> Functional for Smooth<F, D>
where
    F: Fn(f64, &[f64], &History) -> f64,
    D: Fn(f64, &[f64], &History) -> (f64, Vec<f64>),
{
    fn eval(&self, t: f64, z: &[f64], w: &History) -> Result<f64> {
        Ok((self.eval)(t, z, w))
    }
    fn ci_derivatives(&self, t: f64, z: &[f64], w: &History) -> Option<(f64, Vec<f64>)> {
        Some((self.derivs)(t, z, w))
    }
    fn lipschitz_bound(&self, _alpha: f64) -> Option<f64> {
        self.lipschitz
    }
}

/// `scale · φ(t, z, w) + time_slope · (ϑ - t)`.
pub struct Affine<F> {
    pub base: F,
    pub scale: f64,
    pub time_slope: f64,
    pub theta: f64,
}

impl<F: Functional> Functional for Affine<F> {
    fn eval(&self, t: f64, z: &[f64], w: &History) -> Result<f64> {
        Ok(self.scale * self.base.eval(t, z, w)? + self.time_slope * (self.theta - t))
    }
    fn ci_derivatives(&self, t: f64, z: &[f64], w: &History) -> Option<(f64, Vec<f64>)> {
        let (ci, grad) = self.base.ci_derivatives(t, z, w)?;
        Some((self.scale * ci - self.time_slope, math::scale(&grad, self.scale)))
    }
    fn lipschitz_bound(&self, alpha: f64) -> Option<f64> {
        self.base.lipschitz_bound(alpha).map(|l| l * self.scale.abs())
    }
}

/// Finite surrogate for `∂⁻_l φ` and `∂⁺_l φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimate {
    pub lower: f64,
    pub upper: f64,
    /// Step lengths `δ_j`, in the order given.
    pub steps: Vec<f64>,
    pub quotients: Vec<f64>,
}

/// Geometric steps `Δ·2^j` (in nodes), largest first, capped at `max_nodes`
/// and at the remaining horizon.
pub fn default_steps(grid: &TimeGrid, t_node: usize, max_nodes: usize) -> Vec<usize> {
    let room = grid.last_node().saturating_sub(t_node).min(max_nodes.max(1));
    let mut steps = Vec::new();
    let mut s = 1;
    while s <= room {
        steps.push(s);
        s *= 2;
    }
    steps.reverse();
    steps
}

/// Difference quotients `[φ(t+δ, x^l(t+δ), x^l_{t+δ}) - φ(t, z, w)] / δ`
/// along the ray `x^l(τ) = z + l(τ - t)`. `steps` are in grid nodes and
/// should decrease; the estimate uses the last `tail` quotients (all if 0).
pub fn dir_deriv(
    phi: &dyn Functional,
    grid: &TimeGrid,
    t_node: usize,
    z: &[f64],
    w: &History,
    l: &[f64],
    steps: &[usize],
    tail: usize,
) -> Result<DerivativeEstimate> {
    if steps.is_empty() {
        return Err(Error::Empty("step sequence"));
    }
    let t = grid.node_time(t_node);
    let base = phi.eval(t, z, w)?;
    let ray = Trajectory::extend_linear(grid, t_node, z, w, l)?;
    let mut deltas = Vec::with_capacity(steps.len());
    let mut quotients = Vec::with_capacity(steps.len());
    for &s in steps {
        if s == 0 || t_node + s > grid.last_node() {
            return Err(Error::Domain(alloc::format!("step of {s} nodes leaves (0, ϑ - t]")));
        }
        let node = t_node + s;
        let tau = grid.node_time(node);
        let seg = ray.segment(node)?;
        let delta = tau - t;
        quotients.push((phi.eval(tau, ray.at(node as isize), &seg)? - base) / delta);
        deltas.push(delta);
    }
    let k = if tail == 0 { quotients.len() } else { tail.min(quotients.len()) };
    let tail_q = &quotients[quotients.len() - k..];
    let lower = tail_q.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = tail_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DerivativeEstimate { lower, upper, steps: deltas, quotients })
}

/// `∇_z φ` by central differences with step `√ε_mach (1 + ‖z‖)`, `w` fixed.
pub fn gradient_z(phi: &dyn Functional, t: f64, z: &[f64], w: &History) -> Result<Vec<f64>> {
    let h = math::sqrt(f64::EPSILON) * (1.0 + math::norm(z));
    let mut zp = z.to_vec();
    let mut grad = vec![0.0; z.len()];
    for i in 0..z.len() {
        zp[i] = z[i] + h;
        let up = phi.eval(t, &zp, w)?;
        zp[i] = z[i] - h;
        let down = phi.eval(t, &zp, w)?;
        zp[i] = z[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// `(∂^{ci} φ, ∇_z φ)`: closed forms when declared, otherwise the
/// smallest-step quotient along `l = 0` and central differences in `z`.
pub fn ci_estimate(phi: &dyn Functional, grid: &TimeGrid, t_node: usize, z: &[f64], w: &History) -> Result<(f64, Vec<f64>)> {
    let t = grid.node_time(t_node);
    if let Some(d) = phi.ci_derivatives(t, z, w) {
        return Ok(d);
    }
    if t_node >= grid.last_node() {
        return Err(Error::Domain("coinvariant derivative needs t < ϑ".into()));
    }
    let zero = vec![0.0; z.len()];
    let est = dir_deriv(phi, grid, t_node, z, w, &zero, &[1], 0)?;
    Ok((est.quotients[0], gradient_z(phi, t, z, w)?))
}

/// Outcome of a sub- or superdifferential membership test.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Minimum slack over the directions; negative means violated.
    pub margin: f64,
    pub worst_direction: usize,
}

/// Directional derivative estimates for a batch of directions, reused by
/// several membership tests at the same point.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionTable {
    pub directions: Vec<Vec<f64>>,
    pub estimates: Vec<DerivativeEstimate>,
}

impl DirectionTable {
    pub fn build(
        phi: &dyn Functional,
        grid: &TimeGrid,
        t_node: usize,
        z: &[f64],
        w: &History,
        directions: &[Vec<f64>],
        steps: &[usize],
        tail: usize,
    ) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::Empty("direction set"));
        }
        let estimates = directions.iter().map(|l| dir_deriv(phi, grid, t_node, z, w, l, steps, tail)).collect::<Result<Vec<_>>>()?;
        Ok(Self { directions: directions.to_vec(), estimates })
    }

    /// `p₀ + ⟨l, p⟩ ≤ ∂⁻_l φ` for every direction, up to `tol`.
    pub fn subdiff(&self, p0: f64, p: &[f64], tol: f64) -> Membership {
        self.membership(tol, |l, e| e.lower - p0 - math::dot(l, p))
    }

    /// `∂⁺_l φ ≤ p₀ + ⟨l, p⟩` for every direction, up to `tol`.
    pub fn superdiff(&self, p0: f64, p: &[f64], tol: f64) -> Membership {
        self.membership(tol, |l, e| p0 + math::dot(l, p) - e.upper)
    }

    fn membership(&self, tol: f64, slack: impl Fn(&[f64], &DerivativeEstimate) -> f64) -> Membership {
        let (worst_direction, margin) = self
            .directions
            .iter()
            .zip(&self.estimates)
            .map(|(l, e)| slack(l, e))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
        Membership { member: margin >= -tol, margin, worst_direction }
    }
}

/// Subdifferential membership of `(p₀, p)` over a finite direction set.
pub fn subdiff_member(
    phi: &dyn Functional,
    grid: &TimeGrid,
    t_node: usize,
    z: &[f64],
    w: &History,
    p0: f64,
    p: &[f64],
    directions: &[Vec<f64>],
    tol: f64,
) -> Result<Membership> {
    let steps = default_steps(grid, t_node, 8);
    Ok(DirectionTable::build(phi, grid, t_node, z, w, directions, &steps, 0)?.subdiff(p0, p, tol))
}

/// Superdifferential membership of `(p₀, p)` over a finite direction set.
pub fn superdiff_member(
    phi: &dyn Functional,
    grid: &TimeGrid,
    t_node: usize,
    z: &[f64],
    w: &History,
    p0: f64,
    p: &[f64],
    directions: &[Vec<f64>],
    tol: f64,
) -> Result<Membership> {
    let steps = default_steps(grid, t_node, 8);
    Ok(DirectionTable::build(phi, grid, t_node, z, w, directions, &steps, 0)?.superdiff(p0, p, tol))
}

/// `|∂^{ci} φ + H(t, z, w(-h), ∇_z φ)|` and the derivatives used.
#[derive(Debug, Clone, PartialEq)]
pub struct HjbResidual {
    pub residual: f64,
    pub ci: f64,
    pub grad: Vec<f64>,
    pub hamiltonian: f64,
}

pub fn hjb_residual(spec: &ProblemSpec, phi: &dyn Functional, grid: &TimeGrid, t_node: usize, z: &[f64], w: &History) -> Result<HjbResidual> {
    let t = grid.node_time(t_node);
    let (ci, grad) = ci_estimate(phi, grid, t_node, z, w)?;
    let hamiltonian = spec.hamiltonian(t, z, w.sample(0), &grad).0;
    Ok(HjbResidual { residual: (ci + hamiltonian).abs(), ci, grad, hamiltonian })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 1.0, 1.0, 1024).unwrap()
    }

    fn square() -> impl Functional {
        Smooth::new(|_t, z: &[f64], _w: &History| math::dot(z, z), |_t, z: &[f64], _w: &History| (0.0, math::scale(z, 2.0)))
    }

    #[test]
    fn smooth_square_directional_derivative() {
        let g = grid();
        let w = History::constant(1.0, 1024, &[0.0]).unwrap();
        let est = dir_deriv(&square(), &g, 0, &[1.0], &w, &[3.0], &[4, 2, 1], 0).unwrap();
        assert!((est.lower - 6.0).abs() < 0.05 && (est.upper - 6.0).abs() < 0.05);
        assert!(est.lower <= est.upper);
    }

    #[test]
    fn time_functional_has_unit_derivative() {
        let g = grid();
        let w = History::constant(1.0, 1024, &[0.0]).unwrap();
        let phi = FromFn(|t, _z: &[f64], _w: &History| t);
        let est = dir_deriv(&phi, &g, 3, &[0.2], &w, &[1.0], &[8, 4, 2, 1], 0).unwrap();
        assert!((est.lower - 1.0).abs() < 1e-9 && (est.upper - 1.0).abs() < 1e-9);
        assert!(dir_deriv(&phi, &g, 3, &[0.2], &w, &[1.0], &[], 0).is_err());
    }

    #[test]
    fn smooth_membership_examples() {
        let g = grid();
        let w = History::constant(1.0, 1024, &[0.0]).unwrap();
        let dirs: Vec<Vec<f64>> = vec![vec![1.0], vec![-1.0], vec![2.5], vec![-0.3]];
        let z = [0.7];
        let steps = [4, 2, 1];
        let table = DirectionTable::build(&square(), &g, 0, &z, &w, &dirs, &steps, 0).unwrap();
        let ok = table.subdiff(0.0, &[1.4], 1e-2);
        assert!(ok.member, "{ok:?}");
        let bad = table.subdiff(1.0, &[1.4], 1e-2);
        assert!(!bad.member && (bad.margin + 1.0).abs() < 0.05);
        // The second-order term `l²δ` biases quotients upward; keep the finest step only.
        let fine = DirectionTable::build(&square(), &g, 0, &z, &w, &dirs, &steps, 1).unwrap();
        assert!(fine.superdiff(0.0, &[1.4], 1e-2).member);
    }

    #[test]
    fn norm_kink_subdifferential() {
        let g = grid();
        let w = History::constant(1.0, 1024, &[0.0]).unwrap();
        let phi = FromFn(|_t, z: &[f64], _w: &History| math::norm(z));
        let dirs: Vec<Vec<f64>> = vec![vec![1.0], vec![-1.0], vec![0.5], vec![-2.0]];
        for p in [-1.0, -0.4, 0.0, 0.9, 1.0] {
            let m = subdiff_member(&phi, &g, 0, &[0.0], &w, 0.0, &[p], &dirs, 1e-9).unwrap();
            assert!(m.member, "p = {p}: {m:?}");
        }
        let m = subdiff_member(&phi, &g, 0, &[0.0], &w, 0.0, &[1.5], &dirs, 1e-9).unwrap();
        assert!(!m.member);
    }

    #[test]
    fn affine_shift_derivatives() {
        let phi = Affine { base: square(), scale: 1.2, time_slope: 0.5, theta: 1.0 };
        let w = History::constant(1.0, 4, &[0.0]).unwrap();
        assert!((phi.eval(0.5, &[1.0], &w).unwrap() - (1.2 + 0.25)).abs() < 1e-15);
        let (ci, grad) = phi.ci_derivatives(0.5, &[1.0], &w).unwrap();
        assert_eq!(ci, -0.5);
        assert!((grad[0] - 2.4).abs() < 1e-15);
    }

    #[test]
    fn central_difference_gradient() {
        let w = History::constant(1.0, 4, &[0.0]).unwrap();
        let phi = FromFn(|_t, z: &[f64], _w: &History| z[0] * z[0] * z[1] + 3.0 * z[1]);
        let g = gradient_z(&phi, 0.0, &[1.5, -2.0], &w).unwrap();
        assert!((g[0] + 6.0).abs() < 1e-6 && (g[1] - 5.25).abs() < 1e-6);
    }
}
