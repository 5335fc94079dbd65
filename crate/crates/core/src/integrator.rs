//! Heun stepping of the controlled delay equation and explicit Euler
//! stepping of characteristic-inclusion selections.
//!
//! The step divides `h`, so the delayed argument `τ - h` of every node is
//! itself a node: delayed values are read, never interpolated. The first
//! stage reads the right value `x(τ_k - h)`, the second the left limit
//! `x(τ_{k+1} - h⁻)`, which keeps every stage inside one continuous piece.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::histories::{check_history, History, Trajectory};
use crate::math;
use crate::problem::ProblemSpec;

/// Piecewise-constant control on `[τ_start, ϑ]`, stored as indices into
/// `U_d`, one per grid interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ControlSignal {
    start: usize,
    indices: Vec<usize>,
}

impl ControlSignal {
    pub fn new(start: usize, indices: Vec<usize>) -> Self {
        Self { start, indices }
    }

    pub fn constant(spec: &ProblemSpec, start: usize, index: usize) -> Self {
        Self { start, indices: vec![index; spec.grid().last_node().saturating_sub(start)] }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Control index on the interval starting at absolute node `k`.
    pub fn at(&self, k: usize) -> usize {
        self.indices[k - self.start]
    }

    pub fn values<'a>(&'a self, spec: &'a ProblemSpec) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.indices.iter().map(move |&i| spec.controls().get(i))
    }

    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        let expected = spec.grid().last_node().saturating_sub(self.start);
        if self.indices.len() != expected {
            return Err(Error::Dimension { expected, found: self.indices.len() });
        }
        if let Some(&bad) = self.indices.iter().find(|&&i| i >= spec.controls().len()) {
            return Err(Error::Problem(alloc::format!("control index {bad} outside U_d of size {}", spec.controls().len())));
        }
        Ok(())
    }
}

/// A controlled motion: the trajectory and the running cost accumulated up
/// to each node of `[t, ϑ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    pub trajectory: Trajectory,
    pub running: Vec<f64>,
}

impl Motion {
    pub fn running_total(&self) -> f64 {
        *self.running.last().unwrap_or(&0.0)
    }

    /// Bolza cost `σ(x(ϑ), x_ϑ) + ∫ f0`.
    pub fn cost(&self, spec: &ProblemSpec) -> Result<f64> {
        cost(spec, &self.trajectory, self.running_total())
    }
}

/// `σ(x(ϑ), x_ϑ) + running` for a trajectory that reaches `ϑ`.
pub fn cost(spec: &ProblemSpec, trajectory: &Trajectory, running: f64) -> Result<f64> {
    let last = spec.grid().last_node();
    let segment = trajectory.segment(last)?;
    Ok(spec.sigma(trajectory.at(last as isize), &segment) + running)
}

/// Integrates `ẋ = f(τ, x, x(τ - h), u)` from `(t, z, w)` over `[t, ϑ]`.
pub fn integrate(spec: &ProblemSpec, t: f64, z: &[f64], w: &History, u: &ControlSignal) -> Result<Motion> {
    let start = spec.grid().node_of(t)?;
    if u.start() != start {
        return Err(Error::Problem(alloc::format!("control starts at node {}, state at node {start}", u.start())));
    }
    u.validate(spec)?;
    let mut roll = Rollout::new(spec, start, z, w)?;
    for &i in u.indices() {
        roll.step(i)?;
    }
    Ok(roll.into_motion())
}

/// Incremental Heun rollout on flat buffers. Nodes can be dropped from the
/// end and re-stepped, which lets tree searches share prefixes.
#[derive(Debug, Clone)]
pub(crate) struct Rollout<'a> {
    spec: &'a ProblemSpec,
    history: &'a History,
    start: usize,
    n: usize,
    m: usize,
    forward: Vec<f64>,
    running: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    xt: Vec<f64>,
}

impl<'a> Rollout<'a> {
    pub(crate) fn new(spec: &'a ProblemSpec, start: usize, z: &[f64], w: &'a History) -> Result<Self> {
        let n = spec.dim();
        check_history(spec.grid(), w, n)?;
        if z.len() != n {
            return Err(Error::Dimension { expected: n, found: z.len() });
        }
        if !math::all_finite(z) {
            return Err(Error::NonFinite { time: spec.grid().node_time(start), node: start });
        }
        if start > spec.grid().last_node() {
            return Err(Error::NotANode { time: spec.grid().node_time(start), lo: spec.grid().t0(), hi: spec.grid().theta() });
        }
        let nodes = spec.grid().last_node() - start + 1;
        let mut forward = Vec::with_capacity(nodes * n);
        forward.extend_from_slice(z);
        let mut running = Vec::with_capacity(nodes);
        running.push(0.0);
        Ok(Self { spec, history: w, start, n, m: spec.grid().m(), forward, running, k1: vec![0.0; n], k2: vec![0.0; n], xt: vec![0.0; n] })
    }

    /// Absolute index of the current last node.
    #[inline]
    pub(crate) fn node(&self) -> usize {
        self.start + self.running.len() - 1
    }

    #[inline]
    pub(crate) fn running_total(&self) -> f64 {
        *self.running.last().expect("at least one node")
    }

    pub(crate) fn truncate(&mut self, node: usize) {
        let keep = node - self.start + 1;
        self.running.truncate(keep);
        self.forward.truncate(keep * self.n);
    }

    #[inline]
    fn right(&self, k: isize) -> &[f64] {
        read_right(&self.forward, self.history, self.start, self.n, self.m, k)
    }

    #[inline]
    fn left(&self, k: isize) -> &[f64] {
        if k > self.start as isize {
            self.right(k)
        } else {
            self.history.left_limit((k - self.start as isize + self.m as isize) as usize)
        }
    }

    /// One Heun step with control index `i` from the current last node.
    pub(crate) fn step(&mut self, i: usize) -> Result<()> {
        let spec = self.spec;
        let k = self.node();
        let n = self.n;
        let step = spec.grid().step();
        let (t0, t1) = (spec.grid().node_time(k), spec.grid().node_time(k + 1));
        let lag = k as isize - self.m as isize;
        let base = (k - self.start) * n;

        let mut k1 = core::mem::take(&mut self.k1);
        let mut k2 = core::mem::take(&mut self.k2);
        let mut xt = core::mem::take(&mut self.xt);
        let x = &self.forward[base..base + n];
        let y_right = self.right(lag);
        spec.f_indexed_into(t0, x, y_right, i, &mut k1);
        let c1 = spec.f0_indexed(t0, x, y_right, i);
        for j in 0..n {
            xt[j] = x[j] + step * k1[j];
        }
        let y_left = self.left(lag + 1);
        spec.f_indexed_into(t1, &xt, y_left, i, &mut k2);
        let c2 = spec.f0_indexed(t1, &xt, y_left, i);
        for j in 0..n {
            xt[j] = self.forward[base + j] + 0.5 * step * (k1[j] + k2[j]);
        }
        let finite = math::all_finite(&xt) && c1.is_finite() && c2.is_finite();
        self.forward.extend_from_slice(&xt);
        let total = self.running_total() + 0.5 * step * (c1 + c2);
        self.running.push(total);
        self.k1 = k1;
        self.k2 = k2;
        self.xt = xt;
        if !finite {
            return Err(Error::NonFinite { time: t1, node: k + 1 });
        }
        Ok(())
    }

    /// `σ(x(ϑ), x_ϑ)` once the rollout reached `ϑ`, without building the segment.
    pub(crate) fn terminal_cost(&self) -> f64 {
        let last = self.node() as isize;
        let terminal = self.spec.terminal();
        let z = self.right(last);
        let l1 = if terminal.qw != 0.0 {
            let step = self.spec.grid().step();
            let base = last - self.m as isize;
            (1..=self.m as isize).map(|j| 0.5 * step * (math::norm(self.right(base + j - 1)) + math::norm(self.left(base + j)))).sum()
        } else {
            0.0
        };
        terminal.quad.quadratic_form(z) + terminal.lin * math::norm(z) + terminal.qw * l1
    }

    /// Bolza cost of the completed rollout.
    pub(crate) fn total_cost(&self) -> f64 {
        self.terminal_cost() + self.running_total()
    }

    /// `(x(τ), x_τ)` at the current last node.
    pub(crate) fn state(&self) -> Result<(Vec<f64>, History)> {
        let node = self.node();
        let partial = Trajectory::from_parts(*self.spec.grid(), self.start, self.history.clone(), self.forward.clone());
        Ok((partial.at(node as isize).to_vec(), partial.segment(node)?))
    }

    pub(crate) fn into_motion(self) -> Motion {
        let trajectory = Trajectory::from_parts(*self.spec.grid(), self.start, self.history.clone(), self.forward);
        Motion { trajectory, running: self.running }
    }
}

#[inline]
fn read_right<'b>(forward: &'b [f64], history: &'b History, start: usize, n: usize, m: usize, k: isize) -> &'b [f64] {
    if k >= start as isize {
        let i = (k as usize - start) * n;
        &forward[i..i + n]
    } else {
        history.sample((k - start as isize + m as isize) as usize)
    }
}

/// Piecewise-constant velocity `l_j` per interval of `[τ_start, ϑ]` for the
/// inclusion `ẋ ∈ F_η(x, x(τ - h))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub start: usize,
    pub values: Vec<Vec<f64>>,
    pub eta: f64,
}

impl Selection {
    pub fn constant(spec: &ProblemSpec, start: usize, l: &[f64], eta: f64) -> Self {
        let count = spec.grid().last_node().saturating_sub(start);
        Self { start, values: vec![l.to_vec(); count], eta }
    }

    /// Node slopes of a trajectory read as a selection.
    pub fn from_trajectory(trajectory: &Trajectory, eta: f64) -> Self {
        let values = (trajectory.start()..trajectory.grid().last_node()).map(|k| trajectory.slope(k)).collect();
        Self { start: trajectory.start(), values, eta }
    }
}

/// A motion of the inclusion and the intervals whose velocity was clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMotion {
    pub trajectory: Trajectory,
    pub clipped: Vec<usize>,
}

/// Integrates `ẋ = l_j` interval-wise, radially clipping every `l_j` that
/// leaves the ball of radius `c_f(1 + ‖x(τ_j)‖ + ‖x(τ_j - h)‖) + η`.
pub fn integrate_selection(spec: &ProblemSpec, t: f64, z: &[f64], w: &History, sel: &Selection) -> Result<SelectionMotion> {
    let start = spec.grid().node_of(t)?;
    let n = spec.dim();
    check_history(spec.grid(), w, n)?;
    if z.len() != n {
        return Err(Error::Dimension { expected: n, found: z.len() });
    }
    let count = spec.grid().last_node() - start;
    if sel.start != start || sel.values.len() != count {
        return Err(Error::Dimension { expected: count, found: sel.values.len() });
    }
    let m = spec.grid().m();
    let step = spec.grid().step();
    let mut forward = Vec::with_capacity((count + 1) * n);
    forward.extend_from_slice(z);
    let mut clipped = Vec::new();
    let mut l = vec![0.0; n];
    for (j, lj) in sel.values.iter().enumerate() {
        if lj.len() != n {
            return Err(Error::Dimension { expected: n, found: lj.len() });
        }
        let k = start + j;
        let x = &forward[j * n..(j + 1) * n];
        let y = read_right(&forward, w, start, n, m, k as isize - m as isize);
        let bound = spec.char_radius(x, y) + sel.eta;
        let norm = math::norm(lj);
        l.copy_from_slice(lj);
        if norm > bound {
            clipped.push(j);
            let c = bound / norm;
            l.iter_mut().for_each(|v| *v *= c);
        }
        let next: Vec<f64> = x.iter().zip(&l).map(|(a, b)| a + step * b).collect();
        if !math::all_finite(&next) {
            return Err(Error::NonFinite { time: spec.grid().node_time(k + 1), node: k + 1 });
        }
        forward.extend(next);
    }
    Ok(SelectionMotion { trajectory: Trajectory::from_parts(*spec.grid(), start, w.clone(), forward), clipped })
}
