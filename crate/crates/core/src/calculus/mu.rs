//! The comparison functional `μ = ν(t)·η(z, w)` and the two checks built
//! around it: the chain rule along Lipschitz paths and the decay inequality
//! along differences of characteristics.

use alloc::format;
use alloc::vec::Vec;

use super::Functional;
use crate::error::{Error, Result};
use crate::histories::{History, Trajectory};
use crate::math;
use crate::problem::ProblemSpec;

/// `μ(t, z, w) = ν(t)·(√(ε⁴ + ‖z‖²) + λ‖w‖₁)` with
/// `ν(t) = (e^{-2λ(t - t₀)} - ε)/ε`, defined for `λ > 1` and
/// `0 < ε < e^{-2λ(ϑ - t₀)}`, which keeps `ν > 0` on `[t₀, ϑ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mu {
    lambda: f64,
    epsilon: f64,
    t0: f64,
    theta: f64,
}

impl Mu {
    pub fn new(lambda: f64, epsilon: f64, t0: f64, theta: f64) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("λ = {lambda} must exceed 1")));
        }
        let star = Self::epsilon_star(lambda, t0, theta);
        if !(epsilon > 0.0 && epsilon < star) {
            return Err(Error::Domain(format!("ε = {epsilon} must lie in (0, {star})")));
        }
        Ok(Self { lambda, epsilon, t0, theta })
    }

    /// `ε_*(λ) = e^{-2λ(ϑ - t₀)}`.
    pub fn epsilon_star(lambda: f64, t0: f64, theta: f64) -> f64 {
        math::exp(-2.0 * lambda * (theta - t0))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nu(&self, t: f64) -> f64 {
        (math::exp(-2.0 * self.lambda * (t - self.t0)) - self.epsilon) / self.epsilon
    }

    /// `√(ε⁴ + ‖z‖²)`, the smoothed norm.
    pub fn soft_norm(&self, z: &[f64]) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        math::sqrt(e2 * e2 + math::dot(z, z))
    }

    pub fn eta(&self, z: &[f64], w: &History) -> f64 {
        self.soft_norm(z) + self.lambda * w.norm_l1()
    }

    pub fn value(&self, t: f64, z: &[f64], w: &History) -> f64 {
        self.nu(t) * self.eta(z, w)
    }

    pub fn gradient_z(&self, t: f64, z: &[f64]) -> Vec<f64> {
        math::scale(z, self.nu(t) / self.soft_norm(z))
    }

    /// `∂^{ci} μ = -2λ(ν + 1)η + νλ(‖z‖ - ‖w(-h)‖)`.
    pub fn ci_derivative(&self, t: f64, z: &[f64], w: &History) -> f64 {
        let nu = self.nu(t);
        -2.0 * self.lambda * (nu + 1.0) * self.eta(z, w) + nu * self.lambda * (math::norm(z) - math::norm(w.sample(0)))
    }

    pub fn horizon(&self) -> (f64, f64) {
        (self.t0, self.theta)
    }
}

impl Functional for Mu {
    fn eval(&self, t: f64, z: &[f64], w: &History) -> Result<f64> {
        Ok(self.value(t, z, w))
    }

    fn ci_derivatives(&self, t: f64, z: &[f64], w: &History) -> Option<(f64, Vec<f64>)> {
        Some((self.ci_derivative(t, z, w), self.gradient_z(t, z)))
    }

    fn lipschitz_bound(&self, _alpha: f64) -> Option<f64> {
        Some(self.nu(self.t0) * self.lambda)
    }
}

/// `p = x - y` on `[t - h, ϑ]` for two trajectories on the same grid and
/// start node.
pub fn difference(x: &Trajectory, y: &Trajectory) -> Result<Trajectory> {
    if x.grid() != y.grid() || x.start() != y.start() || x.dim() != y.dim() {
        return Err(Error::Problem("trajectories differ in grid, start or dimension".into()));
    }
    let history = x.history().sub(y.history())?;
    let forward = x.forward_flat().iter().zip(y.forward_flat()).map(|(a, b)| a - b).collect();
    Ok(Trajectory::from_parts(*x.grid(), x.start(), history, forward))
}

/// Largest gap between the centered difference of `ω(τ) = φ(τ, p(τ), p_τ)`
/// and `∂^{ci}φ + ⟨ṗ, ∇_zφ⟩` over interior nodes, with `ṗ` the right slope.
pub fn chain_rule_check(phi: &dyn Functional, p: &Trajectory) -> Result<f64> {
    let grid = p.grid();
    let (first, last) = (p.start(), grid.last_node());
    if last < first + 2 {
        return Err(Error::Domain("chain rule check needs at least two intervals".into()));
    }
    let omega = (first..=last).map(|k| phi.eval(grid.node_time(k), p.at(k as isize), &p.segment(k)?)).collect::<Result<Vec<f64>>>()?;
    let step = grid.step();
    let mut worst: f64 = 0.0;
    for k in first + 1..last {
        let t = grid.node_time(k);
        let seg = p.segment(k)?;
        let (ci, grad) = phi.ci_derivatives(t, p.at(k as isize), &seg).ok_or_else(|| Error::Domain("chain rule check needs closed-form derivatives".into()))?;
        let i = k - first;
        let fd = (omega[i + 1] - omega[i - 1]) / (2.0 * step);
        worst = worst.max((fd - ci - math::dot(&p.slope(k), &grad)).abs());
    }
    Ok(worst)
}

/// Interval-wise defect of the decay inequality for `ω(τ) = μ(τ, p(τ), p_τ)`,
/// `p = x - y`, on `[t, min(t + h, ϑ)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// `max_j D_j / (1 + ν(τ_j))`; non-positive when the inequality holds.
    pub max_violation: f64,
    /// `max_j D_j` before normalization.
    pub raw_max: f64,
    pub defects: Vec<f64>,
    /// `λ_H(α) + 1` for the `α` of the base point.
    pub recipe_lambda: f64,
}

/// Evaluates `ω̇ - ⟨ṗ, s⟩ + |H(x, κ, s) - H(y, κ, s)|` per interval, with
/// `s = ∇_zμ(τ, p, p_τ)` and `κ(τ) = w(τ - t - h)`. The `⟨ṗ, s⟩` term is
/// integrated exactly as `ν · Δ√(ε⁴ + ‖p‖²)` with `ν` at the midpoint.
pub fn decay_inequality(spec: &ProblemSpec, mu: &Mu, x: &Trajectory, y: &Trajectory) -> Result<DecayReport> {
    if x.history() != y.history() || x.z() != y.z() {
        return Err(Error::Problem("motions must share the base point".into()));
    }
    let p = difference(x, y)?;
    let grid = *spec.grid();
    if *x.grid() != grid {
        return Err(Error::Problem("motions are not on the problem grid".into()));
    }
    let start = x.start();
    let end = (start + grid.m()).min(grid.last_node());
    let alpha = math::norm(x.z()).max(x.history().norm_sup()).max(1e-12);
    let recipe_lambda = spec.lambda_h(spec.growth_bounds(alpha).alpha_x) + 1.0;

    let omega = |k: usize| -> Result<f64> { Ok(mu.value(grid.node_time(k), p.at(k as isize), &p.segment(k)?)) };
    let step = grid.step();
    let n = spec.dim();
    let mut defects = Vec::with_capacity(end - start);
    let mut raw_max = f64::NEG_INFINITY;
    let mut max_violation = f64::NEG_INFINITY;
    let mut w_prev = omega(start)?;
    let mut buf = alloc::vec![0.0; n];
    for k in start..end {
        let w_next = omega(k + 1)?;
        let (t0, t1) = (grid.node_time(k), grid.node_time(k + 1));
        let tm = 0.5 * (t0 + t1);
        let (p0, p1) = (p.at(k as isize), p.at(k as isize + 1));
        let nu_mid = mu.nu(tm);
        let transport = nu_mid * (mu.soft_norm(p1) - mu.soft_norm(p0));

        let lag = k as isize - grid.m() as isize;
        let mid = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect() };
        let kappa = mid(x.at(lag), x.left_at(lag + 1));
        let xm = mid(x.at(k as isize), x.at(k as isize + 1));
        let ym = mid(y.at(k as isize), y.at(k as isize + 1));
        let pm = mid(p0, p1);
        let s = mu.gradient_z(tm, &pm);
        let hx = spec.hamiltonian_with(tm, &xm, &kappa, &s, &mut buf).0;
        let hy = spec.hamiltonian_with(tm, &ym, &kappa, &s, &mut buf).0;

        let d = (w_next - w_prev - transport) / step + (hx - hy).abs();
        raw_max = raw_max.max(d);
        max_violation = max_violation.max(d / (1.0 + mu.nu(t0)));
        defects.push(d);
        w_prev = w_next;
    }
    Ok(DecayReport { max_violation, raw_max, defects, recipe_lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::TimeGrid;

    #[test]
    fn mu_at_origin() {
        let mu = Mu::new(2.0, 0.01, 0.0, 1.0).unwrap();
        let w = History::constant(1.0, 8, &[0.0]).unwrap();
        let nu = mu.nu(0.3);
        assert!((mu.value(0.3, &[0.0], &w) - nu * 1e-4).abs() < 1e-15);
        assert_eq!(mu.gradient_z(0.3, &[0.0]), alloc::vec![0.0]);
        assert!((mu.nu(0.0) - 0.99 / 0.01).abs() < 1e-9);
    }

    #[test]
    fn mu_domain() {
        assert!(Mu::new(1.0, 1e-3, 0.0, 1.0).is_err());
        assert!(Mu::new(2.0, 0.02, 0.0, 1.0).is_err());
        assert!(Mu::new(2.0, 0.0, 0.0, 1.0).is_err());
        assert!(Mu::new(2.0, 0.018, 0.0, 1.0).is_ok());
    }

    #[test]
    fn mu_matches_independent_quadrature() {
        let mu = Mu::new(2.0, 0.01, 0.0, 1.0).unwrap();
        let w = History::constant(1.0, 16, &[0.5]).unwrap();
        let direct = mu.nu(0.1) * (math::sqrt(1e-8 + 0.09) + 2.0 * 0.5);
        assert!((mu.value(0.1, &[0.3], &w) - direct).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_trivial_cases() {
        let grid = TimeGrid::new(0.0, 1.0, 1.0, 32).unwrap();
        let w = History::constant(1.0, 32, &[0.0]).unwrap();
        let p = Trajectory::extend_linear(&grid, 0, &[0.0], &w, &[1.0]).unwrap();
        let time = super::super::Smooth::new(|t, _z: &[f64], _w: &History| t, |_t, z: &[f64], _w: &History| (1.0, alloc::vec![0.0; z.len()]));
        assert!(chain_rule_check(&time, &p).unwrap() < 1e-12);
        let sq = super::super::Smooth::new(|_t, z: &[f64], _w: &History| math::dot(z, z), |_t, z: &[f64], _w: &History| (0.0, math::scale(z, 2.0)));
        // ω(τ) = τ², right slope 1: centered difference equals 2τ exactly
        assert!(chain_rule_check(&sq, &p).unwrap() < 1e-10);
    }

    #[test]
    fn identical_motions_decay() {
        use crate::integrator::{integrate, ControlSignal};
        use crate::math::Matrix;
        use crate::problem::{ControlSet, Dynamics, RunningCost, TerminalCost};
        let grid = TimeGrid::new(0.0, 1.0, 0.5, 16).unwrap();
        let one = Matrix::new(1, 1, alloc::vec![1.0]).unwrap();
        let zero = Matrix::new(1, 1, alloc::vec![0.0]).unwrap();
        let spec = ProblemSpec::new(
            grid,
            Dynamics::LinearDelay { a: zero, b: one.clone(), c: one },
            RunningCost::quadratic(1.0),
            TerminalCost::quadratic(1, 1.0),
            ControlSet::interval(-1.0, 1.0, 3).unwrap(),
        )
        .unwrap();
        let w = History::constant(0.5, 16, &[1.0]).unwrap();
        let x = integrate(&spec, 0.0, &[1.0], &w, &ControlSignal::constant(&spec, 0, 0)).unwrap().trajectory;
        let mu = Mu::new(4.0, 1e-4, 0.0, 1.0).unwrap();
        let rep = decay_inequality(&spec, &mu, &x, &x).unwrap();
        assert!(rep.raw_max < 0.0);
    }
}
