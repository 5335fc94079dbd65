//! The state space: a uniform time grid, piecewise-continuous histories on
//! `[-h, 0]` and trajectories on `[t - h, ϑ]`.
//!
//! Histories are sampled at the `m + 1` nodes `ξ_j = -h + jΔ`, `Δ = h / m`.
//! Between nodes they are linear. A node may carry a jump: the node value is
//! the right-continuous value and the left limit is stored separately, so the
//! function is continuous on every `[ξ_j, ξ_{j+1})`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Relative tolerance used when snapping times to grid nodes.
const NODE_TOL: f64 = 1e-9;

/// Uniform grid on `[t0, ϑ]` whose step divides both `h` and `ϑ - t0`, so
/// that `τ - h` is a node whenever `τ` is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    theta: f64,
    h: f64,
    m: usize,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, theta: f64, h: f64, m: usize) -> Result<Self> {
        if !(t0.is_finite() && theta.is_finite() && h.is_finite()) {
            return Err(Error::Grid(format!("non-finite parameters t0={t0}, theta={theta}, h={h}")));
        }
        if t0 >= theta {
            return Err(Error::Grid(format!("t0 = {t0} must be below theta = {theta}")));
        }
        if h <= 0.0 {
            return Err(Error::Grid(format!("delay h = {h} must be positive")));
        }
        if m < 2 {
            return Err(Error::Grid(format!("m = {m} must be at least 2")));
        }
        let step = h / m as f64;
        let ratio = (theta - t0) / step;
        let intervals = libm::round(ratio);
        if (ratio - intervals).abs() > NODE_TOL * ratio.max(1.0) || intervals < 1.0 {
            return Err(Error::Grid(format!("horizon {} is not an integer multiple of the step h/m = {step}", theta - t0)));
        }
        Ok(Self { t0, theta, h, m, intervals: intervals as usize })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn delay(&self) -> f64 {
        self.h
    }

    /// Samples per delay window.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> f64 {
        self.h / self.m as f64
    }

    /// Number of intervals on `[t0, ϑ]`; nodes are `0..=intervals()`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn last_node(&self) -> usize {
        self.intervals
    }

    pub fn node_time(&self, node: usize) -> f64 {
        if node == self.intervals {
            self.theta
        } else {
            self.t0 + node as f64 * self.step()
        }
    }

    /// Index of the node at time `t`, or an error if `t` is off-grid.
    pub fn node_of(&self, t: f64) -> Result<usize> {
        let ratio = (t - self.t0) / self.step();
        let k = libm::round(ratio);
        let off = Error::NotANode { time: t, lo: self.t0, hi: self.theta };
        if !(0.0..=self.intervals as f64).contains(&k) || (ratio - k).abs() > NODE_TOL * ratio.abs().max(1.0) {
            return Err(off);
        }
        Ok(k as usize)
    }

    /// Same horizon and delay with `factor` times as many samples.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.t0, self.theta, self.h, self.m * factor.max(1))
    }
}

/// How a history is interpreted between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Linear between nodes, except across explicit jumps.
    Linear,
    /// Holds the left node's value on each `[ξ_j, ξ_{j+1})`.
    ConstantLeft,
}

#[derive(Debug, Clone, PartialEq)]
struct Jump {
    node: usize,
    left: Vec<f64>,
}

/// A piecewise-continuous function `w: [-h, 0] → ℝⁿ` sampled on `m + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    n: usize,
    m: usize,
    h: f64,
    samples: Vec<f64>,
    jumps: Vec<Jump>,
    interpolation: Interpolation,
}

impl History {
    /// Builds a history from `(m + 1) * n` row-major samples.
    pub fn from_flat(h: f64, m: usize, n: usize, samples: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if h <= 0.0 || m < 1 || n == 0 {
            return Err(Error::History(format!("bad shape h={h}, m={m}, n={n}")));
        }
        if samples.len() != (m + 1) * n {
            return Err(Error::History(format!("expected {} samples of dimension {n}, got {} values", m + 1, samples.len())));
        }
        if !math::all_finite(&samples) {
            return Err(Error::History("non-finite sample".into()));
        }
        Ok(Self { n, m, h, samples, jumps: Vec::new(), interpolation })
    }

    pub fn from_samples(h: f64, m: usize, samples: &[Vec<f64>], interpolation: Interpolation) -> Result<Self> {
        let n = samples.first().map_or(0, |s| s.len());
        if samples.iter().any(|s| s.len() != n) {
            return Err(Error::History("ragged samples".into()));
        }
        Self::from_flat(h, m, n, samples.iter().flatten().copied().collect(), interpolation)
    }

    pub fn constant(h: f64, m: usize, value: &[f64]) -> Result<Self> {
        let samples = (0..=m).flat_map(|_| value.iter().copied()).collect();
        Self::from_flat(h, m, value.len(), samples, Interpolation::Linear)
    }

    /// Linear from `from` at `ξ = -h` to `to` at `ξ = 0`.
    pub fn linear(h: f64, m: usize, from: &[f64], to: &[f64]) -> Result<Self> {
        if from.len() != to.len() {
            return Err(Error::Dimension { expected: from.len(), found: to.len() });
        }
        let samples = (0..=m)
            .flat_map(|j| {
                let s = j as f64 / m as f64;
                from.iter().zip(to).map(move |(a, b)| a + s * (b - a))
            })
            .collect();
        Self::from_flat(h, m, from.len(), samples, Interpolation::Linear)
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(h: f64, m: usize, n: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let step = h / m as f64;
        let mut samples = Vec::with_capacity((m + 1) * n);
        for j in 0..=m {
            let v = f(-h + j as f64 * step);
            if v.len() != n {
                return Err(Error::Dimension { expected: n, found: v.len() });
            }
            samples.extend(v);
        }
        Self::from_flat(h, m, n, samples, Interpolation::Linear)
    }

    /// Marks node `node` as a jump whose left limit holds the previous
    /// node's value, i.e. the piece on `[ξ_{j-1}, ξ_j)` is constant.
    pub fn with_jump(self, node: usize) -> Result<Self> {
        if node == 0 || node > self.m {
            return Err(Error::History(format!("jump node {node} outside 1..={}", self.m)));
        }
        let left = self.sample(node - 1).to_vec();
        self.with_jump_left(node, left)
    }

    /// Marks node `node` as a jump with an explicit left limit.
    pub fn with_jump_left(mut self, node: usize, left: Vec<f64>) -> Result<Self> {
        if node == 0 || node > self.m {
            return Err(Error::History(format!("jump node {node} outside 1..={}", self.m)));
        }
        if left.len() != self.n {
            return Err(Error::Dimension { expected: self.n, found: left.len() });
        }
        if !math::all_finite(&left) {
            return Err(Error::History("non-finite left limit".into()));
        }
        match self.jumps.binary_search_by_key(&node, |j| j.node) {
            Ok(i) => self.jumps[i].left = left,
            Err(i) => self.jumps.insert(i, Jump { node, left }),
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delay(&self) -> f64 {
        self.h
    }

    pub fn step(&self) -> f64 {
        self.h / self.m as f64
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn samples_flat(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample(&self, j: usize) -> &[f64] {
        &self.samples[j * self.n..(j + 1) * self.n]
    }

    /// Nodes whose left limit differs from the node value.
    pub fn jump_nodes(&self) -> Vec<usize> {
        (1..=self.m).filter(|&j| self.is_jump(j)).collect()
    }

    pub fn is_jump(&self, j: usize) -> bool {
        j >= 1 && j <= self.m && self.left_limit(j) != self.sample(j)
    }

    /// `w(ξ_j⁻)` for `j ≥ 1`.
    pub fn left_limit(&self, j: usize) -> &[f64] {
        debug_assert!(j >= 1 && j <= self.m);
        if self.interpolation == Interpolation::ConstantLeft {
            return self.sample(j - 1);
        }
        match self.jumps.binary_search_by_key(&j, |jp| jp.node) {
            Ok(i) => &self.jumps[i].left,
            Err(_) => self.sample(j),
        }
    }

    /// `w(0⁻)`, the value the history approaches at its right end.
    pub fn end_left(&self) -> &[f64] {
        self.left_limit(self.m)
    }

    /// `w(ξ)` with the right-continuous convention at jump nodes.
    pub fn eval(&self, xi: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_into(xi, &mut out);
        out
    }

    pub fn eval_into(&self, xi: f64, out: &mut [f64]) {
        let step = self.step();
        let pos = ((xi + self.h) / step).clamp(0.0, self.m as f64);
        let j = libm::floor(pos) as usize;
        if j >= self.m {
            out.copy_from_slice(self.sample(self.m));
            return;
        }
        let s = pos - j as f64;
        let a = self.sample(j);
        let b = self.left_limit(j + 1);
        for i in 0..self.n {
            out[i] = a[i] + s * (b[i] - a[i]);
        }
    }

    /// `‖w‖₁ = ∫ ‖w(ξ)‖ dξ`: trapezoid on each continuous piece, which
    /// reduces to the left rectangle on constant pieces.
    pub fn norm_l1(&self) -> f64 {
        let step = self.step();
        (1..=self.m).map(|j| 0.5 * step * (math::norm(self.sample(j - 1)) + math::norm(self.left_limit(j)))).sum()
    }

    /// `‖w‖_∞` over node values and left limits.
    pub fn norm_sup(&self) -> f64 {
        let nodes = (0..=self.m).map(|j| math::norm(self.sample(j)));
        let lefts = (1..=self.m).map(|j| math::norm(self.left_limit(j)));
        nodes.chain(lefts).fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension { expected: self.n, found: other.n });
        }
        if self.m != other.m || (self.h - other.h).abs() > NODE_TOL * self.h {
            return Err(Error::History(format!("incompatible grids (h={}, m={}) vs (h={}, m={})", self.h, self.m, other.h, other.m)));
        }
        Ok(())
    }

    /// Pointwise linear combination `a·self + b·other`, including left limits.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(x, y)| a * x + b * y).collect();
        let mut out = Self::from_flat(self.h, self.m, self.n, samples, Interpolation::Linear)?;
        for j in 1..=self.m {
            if self.is_jump(j) || other.is_jump(j) {
                let left = self.left_limit(j).iter().zip(other.left_limit(j)).map(|(x, y)| a * x + b * y).collect();
                out = out.with_jump_left(j, left)?;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    /// The same function on a grid with `factor` times as many nodes.
    /// Exact: refinement keeps every jump on a node.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        let factor = factor.max(1);
        let m = self.m * factor;
        let mut samples = Vec::with_capacity((m + 1) * self.n);
        let mut jumps = Vec::new();
        for j in 0..self.m {
            let a = self.sample(j);
            let b = self.left_limit(j + 1);
            for r in 0..factor {
                let s = r as f64 / factor as f64;
                samples.extend(a.iter().zip(b).map(|(x, y)| x + s * (y - x)));
            }
            if self.is_jump(j + 1) {
                jumps.push(((j + 1) * factor, b.to_vec()));
            }
        }
        samples.extend_from_slice(self.sample(self.m));
        let mut out = Self::from_flat(self.h, m, self.n, samples, Interpolation::Linear)?;
        for (node, left) in jumps {
            out = out.with_jump_left(node, left)?;
        }
        Ok(out)
    }
}

/// A function on `[t - h, ϑ]`: the history `w` on `[t - h, t)` followed by a
/// continuous, piecewise-linear forward part with `x(t) = z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    start: usize,
    history: History,
    forward: Vec<f64>,
    lipschitz: f64,
}

impl Trajectory {
    /// Concatenates `w` with forward node values starting at node `start`.
    pub fn extend(grid: &TimeGrid, start: usize, z: &[f64], w: &History, forward: &[Vec<f64>]) -> Result<Self> {
        let flat: Vec<f64> = forward.iter().flatten().copied().collect();
        if forward.iter().any(|v| v.len() != z.len()) {
            return Err(Error::Dimension { expected: z.len(), found: forward.iter().map(|v| v.len()).find(|&l| l != z.len()).unwrap_or(0) });
        }
        Self::extend_flat(grid, start, z, w, flat)
    }

    pub fn extend_flat(grid: &TimeGrid, start: usize, z: &[f64], w: &History, forward: Vec<f64>) -> Result<Self> {
        let n = z.len();
        check_history(grid, w, n)?;
        if start > grid.last_node() {
            return Err(Error::NotANode { time: grid.node_time(start), lo: grid.t0(), hi: grid.theta() });
        }
        let expected = (grid.last_node() - start + 1) * n;
        if forward.len() != expected {
            return Err(Error::Dimension { expected, found: forward.len() });
        }
        if !math::all_finite(&forward) {
            return Err(Error::History("non-finite forward value".into()));
        }
        if forward[..n] != *z {
            return Err(Error::StartMismatch { expected: z.to_vec(), found: forward[..n].to_vec() });
        }
        Ok(Self::from_parts(*grid, start, w.clone(), forward))
    }

    /// The ray `x(τ) = z + l (τ - t)` on `[t, ϑ]`.
    pub fn extend_linear(grid: &TimeGrid, start: usize, z: &[f64], w: &History, l: &[f64]) -> Result<Self> {
        if l.len() != z.len() {
            return Err(Error::Dimension { expected: z.len(), found: l.len() });
        }
        let count = grid.last_node().saturating_sub(start) + 1;
        let t = grid.node_time(start);
        let mut forward = Vec::with_capacity(count * z.len());
        for k in 0..count {
            let dt = grid.node_time(start + k) - t;
            forward.extend(z.iter().zip(l).map(|(zi, li)| zi + li * dt));
        }
        Self::extend_flat(grid, start, z, w, forward)
    }

    /// Unchecked constructor for callers that built a consistent forward part.
    pub(crate) fn from_parts(grid: TimeGrid, start: usize, history: History, forward: Vec<f64>) -> Self {
        let n = history.dim();
        let step = grid.step();
        let lipschitz = forward.chunks_exact(n).zip(forward.chunks_exact(n).skip(1)).map(|(a, b)| math::dist(a, b) / step).fold(0.0, f64::max);
        Self { grid, start, history, forward, lipschitz }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.history.dim()
    }

    /// Absolute index of the start node `t`.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn start_time(&self) -> f64 {
        self.grid.node_time(self.start)
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn z(&self) -> &[f64] {
        &self.forward[..self.dim()]
    }

    /// Maximum node-to-node slope of the forward part.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    pub fn forward_flat(&self) -> &[f64] {
        &self.forward
    }

    /// First absolute node covered, `start - m` (may be negative).
    pub fn first_node(&self) -> isize {
        self.start as isize - self.grid.m() as isize
    }

    /// `x(τ_k)` for any node `k ≥ start - m`, right-continuous at jumps.
    pub fn at(&self, k: isize) -> &[f64] {
        let n = self.dim();
        if k >= self.start as isize {
            let i = k as usize - self.start;
            &self.forward[i * n..(i + 1) * n]
        } else {
            let j = k - self.first_node();
            debug_assert!(j >= 0, "node {k} before the trajectory's history");
            self.history.sample(j as usize)
        }
    }

    /// `x(τ_k⁻)` for `k > start - m`.
    pub fn left_at(&self, k: isize) -> &[f64] {
        if k > self.start as isize {
            self.at(k)
        } else {
            let j = k - self.first_node();
            self.history.left_limit(j as usize)
        }
    }

    /// Constant slope of the forward part on `[τ_k, τ_{k+1}]`, `k ≥ start`.
    pub fn slope(&self, k: usize) -> Vec<f64> {
        let step = self.grid.step();
        self.at(k as isize + 1).iter().zip(self.at(k as isize)).map(|(b, a)| (b - a) / step).collect()
    }

    /// The segment `x_τ(ξ) = x(τ + ξ)`, `ξ ∈ [-h, 0]`, at node `tau`.
    pub fn segment(&self, tau: usize) -> Result<History> {
        if tau < self.start || tau > self.grid.last_node() {
            return Err(Error::NotANode { time: self.grid.node_time(tau), lo: self.start_time(), hi: self.grid.theta() });
        }
        let n = self.dim();
        let m = self.grid.m();
        let base = tau as isize - m as isize;
        let mut samples = Vec::with_capacity((m + 1) * n);
        for j in 0..=m {
            samples.extend_from_slice(self.at(base + j as isize));
        }
        let mut out = History::from_flat(self.grid.delay(), m, n, samples, Interpolation::Linear)?;
        for j in 1..=m {
            let k = base + j as isize;
            if k <= self.start as isize {
                let left = self.left_at(k);
                if left != self.at(k) {
                    out = out.with_jump_left(j, left.to_vec())?;
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_history(grid: &TimeGrid, w: &History, n: usize) -> Result<()> {
    if w.dim() != n {
        return Err(Error::Dimension { expected: n, found: w.dim() });
    }
    if w.m() != grid.m() || (w.delay() - grid.delay()).abs() > NODE_TOL * grid.delay() {
        return Err(Error::History(format!("history grid (h={}, m={}) does not match time grid (h={}, m={})", w.delay(), w.m(), grid.delay(), grid.m())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn grid_rejects_misaligned_horizon() {
        assert!(TimeGrid::new(0.0, 1.0, 0.5, 4).is_ok());
        assert!(TimeGrid::new(0.0, 1.0, 0.3, 2).is_err());
        assert!(TimeGrid::new(1.0, 0.0, 0.5, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.5, 1).is_err());
        let g = TimeGrid::new(0.0, 1.0, 0.5, 4).unwrap();
        assert_eq!(g.intervals(), 8);
        assert_eq!(g.node_of(0.375).unwrap(), 3);
        assert!(g.node_of(0.3).is_err());
        assert!(g.node_of(1.5).is_err());
    }

    #[test]
    fn l1_norm_examples() {
        let zero = History::constant(1.0, 8, &[0.0, 0.0]).unwrap();
        assert_eq!(zero.norm_l1(), 0.0);
        let c = History::constant(0.5, 8, &[2.0]).unwrap();
        assert!(close(c.norm_l1(), 1.0, 1e-15));
        let ramp = History::from_fn(1.0, 64, 1, |xi| vec![xi]).unwrap();
        assert!(close(ramp.norm_l1(), 0.5, 1e-12));
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(History::constant(1.0, 4, &[0.0]).unwrap().norm_sup(), 0.0);
        let w = History::from_samples(1.0, 2, &[vec![1.0], vec![-3.0], vec![2.0]], Interpolation::Linear).unwrap();
        assert_eq!(w.norm_sup(), 3.0);
        let ramp = History::from_fn(1.0, 16, 1, |xi| vec![xi]).unwrap();
        assert_eq!(ramp.norm_sup(), 1.0);
    }

    #[test]
    fn sup_norm_sees_left_limits() {
        let w = History::constant(1.0, 4, &[1.0]).unwrap().with_jump_left(2, vec![-5.0]).unwrap();
        assert_eq!(w.norm_sup(), 5.0);
    }

    #[test]
    fn jump_evaluation_is_right_continuous() {
        let w = History::from_samples(1.0, 2, &[vec![0.0], vec![1.0], vec![2.0]], Interpolation::Linear).unwrap().with_jump(1).unwrap();
        // left piece holds w(-1) = 0 up to the jump node
        assert_eq!(w.eval(-0.75)[0], 0.0);
        assert_eq!(w.eval(-0.5)[0], 1.0);
        assert_eq!(w.eval(-0.25)[0], 1.5);
        assert_eq!(w.left_limit(1), &[0.0]);
        // rectangle on the constant piece, trapezoid on the linear one
        assert!(close(w.norm_l1(), 0.0 + 0.5 * 1.5, 1e-15));
    }

    #[test]
    fn constant_left_interpolation() {
        let w = History::from_samples(1.0, 2, &[vec![1.0], vec![3.0], vec![5.0]], Interpolation::ConstantLeft).unwrap();
        assert_eq!(w.eval(-0.6)[0], 1.0);
        assert_eq!(w.eval(-0.4)[0], 3.0);
        assert!(close(w.norm_l1(), 0.5 * 1.0 + 0.5 * 3.0, 1e-15));
        assert_eq!(w.jump_nodes(), vec![1, 2]);
    }

    #[test]
    fn extend_examples() {
        let g = TimeGrid::new(0.0, 1.0, 1.0, 4).unwrap();
        let w = History::constant(1.0, 4, &[0.0]).unwrap();
        let zeros = vec![vec![0.0]; 5];
        let x = Trajectory::extend(&g, 0, &[0.0], &w, &zeros).unwrap();
        assert_eq!(x.lipschitz_bound(), 0.0);

        let w1 = History::constant(1.0, 4, &[1.0]).unwrap();
        let fwd: Vec<Vec<f64>> = (0..5).map(|k| vec![1.0 - 0.25 * k as f64]).collect();
        let x = Trajectory::extend(&g, 0, &[1.0], &w1, &fwd).unwrap();
        assert!(close(x.lipschitz_bound(), 1.0, 1e-12));

        let mut bad = fwd.clone();
        bad[0] = vec![2.0];
        assert!(matches!(Trajectory::extend(&g, 0, &[1.0], &w1, &bad), Err(Error::StartMismatch { .. })));
    }

    #[test]
    fn segment_at_start_replaces_right_end() {
        let g = TimeGrid::new(0.0, 1.0, 1.0, 4).unwrap();
        let w = History::constant(1.0, 4, &[1.0]).unwrap();
        let x = Trajectory::extend_linear(&g, 0, &[3.0], &w, &[0.0]).unwrap();
        let seg = x.segment(0).unwrap();
        assert_eq!(seg.sample(4), &[3.0]);
        assert_eq!(seg.left_limit(4), &[1.0]);
        assert_eq!(seg.jump_nodes(), vec![4]);
        for xi in [-1.0, -0.8, -0.3, -0.01] {
            assert_eq!(seg.eval(xi), w.eval(xi));
        }
        // no jump when w(0⁻) = z
        let y = Trajectory::extend_linear(&g, 0, &[1.0], &w, &[0.0]).unwrap();
        assert!(y.segment(0).unwrap().jump_nodes().is_empty());
    }

    #[test]
    fn segment_reads_across_history_and_forward() {
        // x(τ) = τ on [-1, 1], h = 1
        let g = TimeGrid::new(0.0, 1.0, 1.0, 8).unwrap();
        let w = History::from_fn(1.0, 8, 1, |xi| vec![xi]).unwrap();
        let x = Trajectory::extend_linear(&g, 0, &[0.0], &w, &[1.0]).unwrap();
        let seg = x.segment(8).unwrap();
        for j in 0..=8 {
            let xi = -1.0 + j as f64 / 8.0;
            assert!(close(seg.sample(j)[0], 1.0 + xi, 1e-12));
        }
        let mid = x.segment(4).unwrap();
        assert!(close(mid.sample(0)[0], -0.5, 1e-12));
        assert!(close(mid.sample(8)[0], 0.5, 1e-12));
        assert!(x.segment(9).is_err());
    }

    #[test]
    fn extend_linear_examples() {
        let g = TimeGrid::new(0.0, 1.0, 0.5, 2).unwrap();
        let w = History::constant(0.5, 2, &[0.0]).unwrap();
        let x = Trajectory::extend_linear(&g, 0, &[0.0], &w, &[1.0]).unwrap();
        let vals: Vec<f64> = (0..=4).map(|k| x.at(k)[0]).collect();
        assert_eq!(vals, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let c = Trajectory::extend_linear(&g, 1, &[2.0], &w, &[0.0]).unwrap();
        assert!((1..=4).all(|k| c.at(k) == [2.0]));
        // x(t) = z seen at lag h
        let seg = c.segment(3).unwrap();
        assert_eq!(seg.sample(0), &[2.0]);
    }

    #[test]
    fn refine_preserves_values_and_norms() {
        let w = History::from_samples(1.0, 2, &[vec![0.0], vec![1.0], vec![-2.0]], Interpolation::Linear).unwrap().with_jump_left(1, vec![4.0]).unwrap();
        let r = w.refine(4).unwrap();
        for xi in [-1.0, -0.9, -0.51, -0.5, -0.2, 0.0] {
            let (a, b) = (w.eval(xi)[0], r.eval(xi)[0]);
            assert!(close(a, b, 1e-12), "{xi}: {a} vs {b}");
        }
        assert_eq!(r.jump_nodes(), vec![4]);
        assert!(close(r.norm_sup(), w.norm_sup(), 0.0));
    }
}
