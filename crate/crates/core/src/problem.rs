//! Problem data: dynamics, running and terminal costs, the control set, the
//! Hamiltonian, the characteristic bound set and the a-priori constants.
//!
//! Every built-in family is control-affine, `f(t, x, y, u) = g(x, y) + C u`,
//! and every running cost splits as `f0 = c0 + q‖x‖ + r·κ(u)`. The
//! Hamiltonian therefore reduces to one drift evaluation plus a scan over
//! precomputed `Cᵀ`-pairings of `U_d`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::histories::{History, TimeGrid};
use crate::math::{self, Matrix};

/// The admissible set `𝕌` as declared, used for containment and bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlDomain {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `𝕌` is exactly the listed points.
    Finite,
}

/// A compact control set together with the finite discretization `U_d`
/// that every search enumerates, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    dim: usize,
    domain: ControlDomain,
    points: Vec<f64>,
}

impl ControlSet {
    pub fn finite(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        let set = Self { dim, domain: ControlDomain::Finite, points: flatten(points, dim)? };
        set.validate()?;
        Ok(set)
    }

    /// A box `[lo, hi]` with an explicit discretization inside it.
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>, points: &[Vec<f64>]) -> Result<Self> {
        let dim = lo.len();
        let set = Self { dim, domain: ControlDomain::Box { lo, hi }, points: flatten(points, dim)? };
        set.validate()?;
        Ok(set)
    }

    /// A box discretized by a uniform lattice with `per_axis` points per
    /// coordinate, ordered lexicographically with the first axis slowest.
    pub fn box_lattice(lo: Vec<f64>, hi: Vec<f64>, per_axis: usize) -> Result<Self> {
        if per_axis == 0 || lo.len() != hi.len() {
            return Err(Error::Problem(format!("box lattice needs matching bounds and per_axis ≥ 1 (got {per_axis})")));
        }
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(&hi)
            .map(|(&a, &b)| if per_axis == 1 { vec![0.5 * (a + b)] } else { (0..per_axis).map(|i| a + (b - a) * i as f64 / (per_axis - 1) as f64).collect() })
            .collect();
        let mut points: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            points = points
                .iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Self::boxed(lo, hi, &points)
    }

    /// `[lo, hi] ⊂ ℝ` with `count` equally spaced points.
    pub fn interval(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::box_lattice(vec![lo], vec![hi], count)
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.dim == 0 {
            return Err(Error::Empty("control discretization"));
        }
        if !math::all_finite(&self.points) {
            return Err(Error::Problem("non-finite control value".into()));
        }
        if let ControlDomain::Box { lo, hi } = &self.domain {
            if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
                return Err(Error::Problem("control box needs lo ≤ hi componentwise".into()));
            }
            for i in 0..self.len() {
                if !self.contains(self.get(i)) {
                    return Err(Error::Problem(format!("control point {:?} lies outside the box", self.get(i))));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &ControlDomain {
        &self.domain
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Membership in `𝕌` (not only in `U_d`).
    pub fn contains(&self, u: &[f64]) -> bool {
        match &self.domain {
            ControlDomain::Box { lo, hi } => u.len() == lo.len() && u.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b),
            ControlDomain::Finite => self.iter().any(|p| p == u),
        }
    }

    /// Index of `u` in `U_d`.
    pub fn index_of(&self, u: &[f64]) -> Option<usize> {
        self.iter().position(|p| p == u)
    }

    fn extreme(&self, measure: impl Fn(&[f64]) -> f64) -> f64 {
        match &self.domain {
            ControlDomain::Box { lo, hi } => {
                let corner: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs())).collect();
                measure(&corner)
            }
            ControlDomain::Finite => self.iter().map(measure).fold(0.0, f64::max),
        }
    }

    /// `max ‖u‖` over `𝕌`.
    pub fn bound(&self) -> f64 {
        self.extreme(math::norm)
    }

    /// `max ‖u‖₁` over `𝕌`.
    pub fn bound_l1(&self) -> f64 {
        self.extreme(|u| u.iter().map(|v| v.abs()).sum())
    }
}

fn flatten(points: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::Dimension { expected: dim, found: p.len() });
    }
    Ok(points.iter().flatten().copied().collect())
}

/// The built-in dynamics families; each is `g(x, y) + C u`.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// `A x + B y + C u`.
    LinearDelay { a: Matrix, b: Matrix, c: Matrix },
    /// Scalar `a x̂ (1 - ŷ) + c u` with `x̂, ŷ` clipped to `[-r_max, r_max]`;
    /// the clip keeps the growth bound global.
    Logistic { a: f64, c: f64, r_max: f64 },
    /// `tanh(A x + B y) + C u`, componentwise `tanh`.
    Saturated { a: Matrix, b: Matrix, c: Matrix },
}

impl Dynamics {
    pub fn family(&self) -> &'static str {
        match self {
            Self::LinearDelay { .. } => "linear_delay",
            Self::Logistic { .. } => "scalar_logistic_delay",
            Self::Saturated { .. } => "saturated",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::LinearDelay { a, .. } | Self::Saturated { a, .. } => a.rows,
            Self::Logistic { .. } => 1,
        }
    }

    pub fn control_matrix(&self) -> Matrix {
        match self {
            Self::LinearDelay { c, .. } | Self::Saturated { c, .. } => c.clone(),
            Self::Logistic { c, .. } => Matrix::new(1, 1, vec![*c]).expect("1x1"),
        }
    }

    /// `out = g(x, y)`.
    #[inline]
    pub fn drift_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match self {
            Self::LinearDelay { a, b, .. } => {
                out.fill(0.0);
                a.mul_add_into(x, out);
                b.mul_add_into(y, out);
            }
            Self::Logistic { a, r_max, .. } => {
                let xc = x[0].clamp(-r_max, *r_max);
                let yc = y[0].clamp(-r_max, *r_max);
                out[0] = a * xc * (1.0 - yc);
            }
            Self::Saturated { a, b, .. } => {
                out.fill(0.0);
                a.mul_add_into(x, out);
                b.mul_add_into(y, out);
                for v in out.iter_mut() {
                    *v = math::tanh(*v);
                }
            }
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        let n = self.dim();
        let check = |name: &str, m: &Matrix, rows: usize, cols: usize| -> Result<()> {
            if m.rows != rows || m.cols != cols || m.data.len() != rows * cols {
                return Err(Error::Problem(format!("{name} must be {rows}x{cols}, got {}x{}", m.rows, m.cols)));
            }
            if !math::all_finite(&m.data) {
                return Err(Error::Problem(format!("{name} has non-finite entries")));
            }
            Ok(())
        };
        match self {
            Self::LinearDelay { a, b, c } | Self::Saturated { a, b, c } => {
                check("A", a, n, n)?;
                check("B", b, n, n)?;
                check("C", c, n, k)
            }
            Self::Logistic { a, c, r_max } => {
                if k != 1 {
                    return Err(Error::Problem(format!("logistic family takes scalar controls, got dimension {k}")));
                }
                if !(a.is_finite() && c.is_finite() && *r_max > 0.0 && r_max.is_finite()) {
                    return Err(Error::Problem("logistic parameters must be finite with r_max > 0".into()));
                }
                Ok(())
            }
        }
    }
}

/// Control penalty shape in the running cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// `r‖u‖²`
    Quadratic,
    /// `r‖u‖₁`
    Absolute,
}

/// `f0 = offset + q‖x‖ + r·κ(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningCost {
    pub kind: CostKind,
    pub r: f64,
    pub q: f64,
    pub offset: f64,
}

impl RunningCost {
    pub fn zero() -> Self {
        Self { kind: CostKind::Quadratic, r: 0.0, q: 0.0, offset: 0.0 }
    }

    pub fn quadratic(r: f64) -> Self {
        Self { kind: CostKind::Quadratic, r, q: 0.0, offset: 0.0 }
    }

    pub fn constant(offset: f64) -> Self {
        Self { offset, ..Self::zero() }
    }

    fn control_part(&self, u: &[f64]) -> f64 {
        self.r
            * match self.kind {
                CostKind::Quadratic => math::dot(u, u),
                CostKind::Absolute => u.iter().map(|v| v.abs()).sum(),
            }
    }
}

/// `σ(z, w) = ⟨Qz, z⟩ + c‖z‖ + q_w‖w‖₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalCost {
    pub quad: Matrix,
    pub lin: f64,
    pub qw: f64,
}

impl TerminalCost {
    pub fn zero(n: usize) -> Self {
        Self { quad: Matrix::zeros(n, n), lin: 0.0, qw: 0.0 }
    }

    pub fn quadratic(n: usize, weight: f64) -> Self {
        let mut quad = Matrix::identity(n);
        quad.data.iter_mut().for_each(|v| *v *= weight);
        Self { quad, lin: 0.0, qw: 0.0 }
    }

    pub fn eval(&self, z: &[f64], w: &History) -> f64 {
        let mut v = self.quad.quadratic_form(z) + self.lin * math::norm(z);
        if self.qw != 0.0 {
            v += self.qw * w.norm_l1();
        }
        v
    }

    /// Lipschitz constant in `(z, w)` on `‖z‖ ≤ α`.
    pub fn lipschitz(&self, alpha: f64) -> f64 {
        2.0 * self.quad.frobenius() * alpha + self.lin.abs() + self.qw.abs()
    }
}

/// `α*`, `α_X`, `λ_X` of the a-priori bound on motions from `P(α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBounds {
    pub alpha_star: f64,
    pub alpha_x: f64,
    pub lambda_x: f64,
}

/// An optimal control problem on a fixed grid. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    grid: TimeGrid,
    dynamics: Dynamics,
    running: RunningCost,
    terminal: TerminalCost,
    controls: ControlSet,
    // derived
    cu: Vec<f64>,
    kappa: Vec<f64>,
    ctrl: Matrix,
    c_f: f64,
    lambda_f: f64,
}

impl ProblemSpec {
    pub fn new(grid: TimeGrid, dynamics: Dynamics, running: RunningCost, terminal: TerminalCost, controls: ControlSet) -> Result<Self> {
        dynamics.validate(controls.dim())?;
        let n = dynamics.dim();
        if terminal.quad.rows != n || terminal.quad.cols != n {
            return Err(Error::Problem(format!("terminal Q must be {n}x{n}")));
        }
        let scalars = [running.r, running.q, running.offset, terminal.lin, terminal.qw];
        if !math::all_finite(&scalars) || !math::all_finite(&terminal.quad.data) {
            return Err(Error::Problem("non-finite cost coefficient".into()));
        }
        let ctrl = dynamics.control_matrix();
        let mut cu = vec![0.0; controls.len() * n];
        for (i, u) in controls.iter().enumerate() {
            ctrl.mul_add_into(u, &mut cu[i * n..(i + 1) * n]);
        }
        let kappa = controls.iter().map(|u| running.control_part(u)).collect();

        let u_cost = running.r.abs()
            * match running.kind {
                CostKind::Quadratic => controls.bound() * controls.bound(),
                CostKind::Absolute => controls.bound_l1(),
            };
        let constant = ctrl.frobenius() * controls.bound() + u_cost + running.offset.abs();
        let q = running.q.abs();
        let (c_f, lambda_f) = match &dynamics {
            Dynamics::LinearDelay { a, b, .. } => {
                let (la, lb) = (a.frobenius() + q, b.frobenius());
                (constant.max(la).max(lb), la.max(lb))
            }
            Dynamics::Logistic { a, r_max, .. } => {
                let lx = a.abs() * (1.0 + r_max) + q;
                (constant.max(lx), lx)
            }
            Dynamics::Saturated { a, b, .. } => {
                let sat = math::sqrt(n as f64);
                ((constant + sat).max(q), (a.frobenius() + q).max(b.frobenius()))
            }
        };
        Ok(Self { grid, dynamics, running, terminal, controls, cu, kappa, ctrl, c_f, lambda_f })
    }

    /// The same problem on another grid (same horizon semantics).
    pub fn with_grid(&self, grid: TimeGrid) -> Result<Self> {
        Self::new(grid, self.dynamics.clone(), self.running, self.terminal.clone(), self.controls.clone())
    }

    pub fn with_controls(&self, controls: ControlSet) -> Result<Self> {
        Self::new(self.grid, self.dynamics.clone(), self.running, self.terminal.clone(), controls)
    }

    pub fn with_terminal(&self, terminal: TerminalCost) -> Result<Self> {
        Self::new(self.grid, self.dynamics.clone(), self.running, terminal, self.controls.clone())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dynamics.dim()
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn running(&self) -> &RunningCost {
        &self.running
    }

    pub fn terminal(&self) -> &TerminalCost {
        &self.terminal
    }

    pub fn controls(&self) -> &ControlSet {
        &self.controls
    }

    pub fn describe(&self) -> String {
        format!("{} (n = {}, |U_d| = {})", self.dynamics.family(), self.dim(), self.controls.len())
    }

    /// `f(t, x, y, u)` for an arbitrary control vector.
    pub fn f(&self, _t: f64, x: &[f64], y: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.dynamics.drift_into(x, y, &mut out);
        self.ctrl.mul_add_into(u, &mut out);
        out
    }

    pub fn f0(&self, _t: f64, x: &[f64], _y: &[f64], u: &[f64]) -> f64 {
        self.state_cost(x) + self.running.control_part(u)
    }

    /// `f(t, x, y, u_i)` for the `i`-th element of `U_d`, written into `out`.
    #[inline]
    pub fn f_indexed_into(&self, _t: f64, x: &[f64], y: &[f64], i: usize, out: &mut [f64]) {
        let n = self.dim();
        self.dynamics.drift_into(x, y, out);
        for (o, c) in out.iter_mut().zip(&self.cu[i * n..(i + 1) * n]) {
            *o += c;
        }
    }

    #[inline]
    pub fn f0_indexed(&self, _t: f64, x: &[f64], _y: &[f64], i: usize) -> f64 {
        self.state_cost(x) + self.kappa[i]
    }

    #[inline]
    fn state_cost(&self, x: &[f64]) -> f64 {
        let mut v = self.running.offset;
        if self.running.q != 0.0 {
            v += self.running.q * math::norm(x);
        }
        v
    }

    pub fn sigma(&self, z: &[f64], w: &History) -> f64 {
        self.terminal.eval(z, w)
    }

    /// `H(t, x, y, s) = min_{u ∈ U_d} ⟨f, s⟩ + f0` and the lowest minimizing index.
    pub fn hamiltonian(&self, t: f64, x: &[f64], y: &[f64], s: &[f64]) -> (f64, usize) {
        let mut g = vec![0.0; self.dim()];
        self.hamiltonian_with(t, x, y, s, &mut g)
    }

    /// [`Self::hamiltonian`] with a caller-provided drift buffer.
    #[inline]
    pub fn hamiltonian_with(&self, _t: f64, x: &[f64], y: &[f64], s: &[f64], g: &mut [f64]) -> (f64, usize) {
        self.dynamics.drift_into(x, y, g);
        let base = math::dot(g, s) + self.state_cost(x);
        let (best, idx) = self.control_min(s);
        (base + best, idx)
    }

    /// `min_i ⟨C u_i, s⟩ + r κ(u_i)`, lowest index on ties.
    #[inline]
    fn control_min(&self, s: &[f64]) -> (f64, usize) {
        let n = self.dim();
        let mut best = f64::INFINITY;
        let mut idx = 0;
        for (i, k) in self.kappa.iter().enumerate() {
            let v = math::dot(&self.cu[i * n..(i + 1) * n], s) + k;
            if v < best {
                best = v;
                idx = i;
            }
        }
        (best, idx)
    }

    /// The growth constant `c_f`: `‖f‖ + |f0| ≤ c_f (1 + ‖x‖ + ‖y‖)`.
    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    /// Lipschitz constant of `(f, f0)` in `(x, y)` on the `α`-ball; the
    /// built-in families have global constants.
    pub fn lambda_f(&self, _alpha: f64) -> f64 {
        self.lambda_f
    }

    pub fn lambda_sigma(&self, alpha: f64) -> f64 {
        self.terminal.lipschitz(alpha)
    }

    /// Lipschitz constant of `H` in `(x, y)`, per unit `(1 + ‖s‖)`.
    pub fn lambda_h(&self, alpha: f64) -> f64 {
        self.lambda_f(alpha) * (1.0 + self.c_f.max(1.0))
    }

    /// Radius of `F(x, y)`: `c_f (1 + ‖x‖ + ‖y‖)`.
    pub fn char_radius(&self, x: &[f64], y: &[f64]) -> f64 {
        self.c_f * (1.0 + math::norm(x) + math::norm(y))
    }

    /// Membership of `l` in the closed `η`-neighbourhood of `F(x, y)`.
    pub fn char_set_contains(&self, x: &[f64], y: &[f64], l: &[f64], eta: f64) -> bool {
        math::norm(l) <= self.char_radius(x, y) + eta
    }

    pub fn horizon(&self) -> f64 {
        self.grid.theta() - self.grid.t0()
    }

    pub fn growth_bounds(&self, alpha: f64) -> GrowthBounds {
        growth_bounds(self.c_f, self.grid.delay(), self.horizon(), alpha)
    }

    /// `λ_*(α)`: Lipschitz constant of endpoint, final segment and running
    /// cost in the initial data over `P(α)`.
    pub fn lipschitz_bound(&self, alpha: f64) -> f64 {
        let lf = self.lambda_f(self.growth_bounds(alpha).alpha_x);
        lipschitz_star(lf, self.horizon())
    }

    /// Gap between `H(s)` and the max-min / min-max forms over `F(x, y)`:
    /// `max_q [H(q) - r‖s - q‖]` and `min_q [H(q) + r‖s - q‖]`. The inner
    /// extremum over the ball is attained at `∓r (s - q)/‖s - q‖`.
    pub fn check_h3(&self, t: f64, x: &[f64], y: &[f64], s: &[f64], q_grid: &[Vec<f64>]) -> f64 {
        let h = self.hamiltonian(t, x, y, s).0;
        let r = self.char_radius(x, y);
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for q in q_grid {
            let hq = self.hamiltonian(t, x, y, q).0;
            let d = math::dist(s, q);
            lower = lower.max(hq - r * d);
            upper = upper.min(hq + r * d);
        }
        (lower - h).abs().max((upper - h).abs())
    }
}

/// Explicit constants of the a-priori estimate.
pub fn growth_bounds(c_f: f64, h: f64, horizon: f64, alpha: f64) -> GrowthBounds {
    let alpha_star = (1.0 + c_f * h) * alpha + c_f * horizon;
    let alpha_x = alpha_star * math::exp(2.0 * c_f * horizon);
    GrowthBounds { alpha_star, alpha_x, lambda_x: c_f * (1.0 + 2.0 * alpha_x) }
}

/// `λ_* = (1 + λ_f)(2 + (1 + 2λ_f) T e^{2λ_f T})`.
pub fn lipschitz_star(lambda_f: f64, horizon: f64) -> f64 {
    (1.0 + lambda_f) * (2.0 + (1.0 + 2.0 * lambda_f) * horizon * math::exp(2.0 * lambda_f * horizon))
}
