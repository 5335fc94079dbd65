//! Closed-loop control by extremal shift: on each partition interval the
//! control minimizes `⟨f, s_i⟩ + f⁰` at the interval's left node and is held
//! to the next node.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{Functional, Mu};
use crate::error::{Error, Result};
use crate::histories::{History, Trajectory};
use crate::integrator::{integrate, ControlSignal, Rollout};
use crate::math;
use crate::problem::ProblemSpec;
use crate::solutions::{sample_characteristics, CharacteristicFamily};
use crate::value::{psi_minus, value, SearchConfig};

/// Where the shift vector `s_i` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftSource {
    /// Central differences of `φ` in `z` with step `δ`.
    ValueGradient { delta: f64 },
    /// `s_i = ∇_zμ(τ_i, x(τ_i) - y(τ_i))` with `y` attaining `ψ₋(τ_i, x(τ_i), x_{τ_i})`
    /// over a characteristic family sampled at the start of each segment.
    Envelope { lambda: f64, epsilon: f64, eta: f64, members: usize, seed: u64 },
    /// `s_i ≡ 0`: the myopic running-cost minimizer.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackConfig {
    /// Node offsets `0 = o₁ < … < o_{k+1}` of one segment from its start.
    /// Segments are chained until `ϑ`; the last one is cut at `ϑ`.
    pub partition: Vec<usize>,
    pub shift_source: ShiftSource,
}

impl FeedbackConfig {
    /// `k` intervals of (near) equal node count covering `[t, ϑ]` in one segment.
    pub fn uniform(spec: &ProblemSpec, t: f64, k: usize, shift_source: ShiftSource) -> Result<Self> {
        let grid = spec.grid();
        let span = grid.last_node() - grid.node_of(t)?;
        if k == 0 || k > span {
            return Err(Error::PartitionTooFine(alloc::format!("{k} intervals over {span} grid steps")));
        }
        Ok(Self { partition: (0..=k).map(|i| i * span / k).collect(), shift_source })
    }

    fn validate(&self) -> Result<()> {
        let p = &self.partition;
        if p.len() < 2 || p[0] != 0 || p.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("partition offsets must start at 0 and increase strictly".into()));
        }
        if let ShiftSource::Envelope { members, .. } = self.shift_source {
            if members == 0 {
                return Err(Error::Empty("envelope family"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub control: ControlSignal,
    pub trajectory: Trajectory,
    pub cost: f64,
    /// Absolute partition nodes, the final node `ϑ` included.
    pub nodes: Vec<usize>,
    pub shifts: Vec<Vec<f64>>,
    /// Envelope mode only: `ψ₋(τ_{i+1}) + ∫_{τ_i}^{τ_{i+1}} f⁰ - ψ₋(τ_i)` per interval.
    pub envelope_defects: Vec<f64>,
}

/// Family and comparison functional of one envelope segment.
struct EnvelopeSegment {
    family: Vec<Trajectory>,
    mu: Mu,
}

impl EnvelopeSegment {
    fn new(spec: &ProblemSpec, start: usize, end: usize, z: &[f64], w: &History, source: ShiftSource) -> Result<Self> {
        let ShiftSource::Envelope { lambda, epsilon, eta, members, seed } = source else { unreachable!("envelope segment in a non-envelope mode") };
        let grid = spec.grid();
        let (t0, t1) = (grid.node_time(start), grid.node_time(end));
        let mu = Mu::new(lambda, epsilon, t0, t1)?;
        let mut family: CharacteristicFamily = sample_characteristics(spec, t0, z, w, eta, members.max(3), seed)?;
        let constants: Vec<ControlSignal> = (0..spec.controls().len()).map(|i| ControlSignal::constant(spec, start, i)).collect();
        family.add_controls(spec, &constants)?;
        Ok(Self { family: family.trajectories(), mu })
    }

    fn psi(&self, phi: &dyn Functional, node: usize, z: &[f64], w: &History) -> Result<(f64, usize)> {
        let e = psi_minus(phi, &self.mu, &self.family, node, z, w)?;
        Ok((e.value, e.index))
    }

    fn shift(&self, phi: &dyn Functional, spec: &ProblemSpec, node: usize, z: &[f64], w: &History) -> Result<Vec<f64>> {
        let (_, index) = self.psi(phi, node, z, w)?;
        let y = self.family[index].at(node as isize);
        let p: Vec<f64> = z.iter().zip(y).map(|(a, b)| a - b).collect();
        Ok(self.mu.gradient_z(spec.grid().node_time(node), &p))
    }
}

fn central_gradient(phi: &dyn Functional, t: f64, z: &[f64], w: &History, delta: f64) -> Result<Vec<f64>> {
    let mut probe = z.to_vec();
    let mut g = vec![0.0; z.len()];
    for j in 0..z.len() {
        probe[j] = z[j] + delta;
        let hi = phi.eval(t, &probe, w)?;
        probe[j] = z[j] - delta;
        let lo = phi.eval(t, &probe, w)?;
        probe[j] = z[j];
        g[j] = (hi - lo) / (2.0 * delta);
    }
    Ok(g)
}

/// Closed-loop synthesis from `(t, z, w)` to `ϑ`. Ties in the extremal
/// choice go to the lowest control index, so equal inputs give identical
/// control sequences.
pub fn synthesize(spec: &ProblemSpec, phi: &dyn Functional, t: f64, z: &[f64], w: &History, config: &FeedbackConfig) -> Result<Synthesis> {
    config.validate()?;
    let grid = spec.grid();
    let start = grid.node_of(t)?;
    let last = grid.last_node();
    if start >= last {
        return Err(Error::Domain("synthesis needs t < ϑ".into()));
    }
    let mut roll = Rollout::new(spec, start, z, w)?;
    let mut indices = Vec::with_capacity(last - start);
    let mut nodes = Vec::new();
    let mut shifts = Vec::new();
    let mut envelope_defects = Vec::new();
    let seg_len = *config.partition.last().expect("validated");

    let mut seg_start = start;
    while seg_start < last {
        let seg_end = (seg_start + seg_len).min(last);
        let (x0, w0) = roll.state()?;
        let envelope = match config.shift_source {
            ShiftSource::Envelope { .. } => Some(EnvelopeSegment::new(spec, seg_start, seg_end, &x0, &w0, config.shift_source)?),
            _ => None,
        };
        let mut psi_prev = match &envelope {
            Some(env) => Some(env.psi(phi, seg_start, &x0, &w0)?.0),
            None => None,
        };
        let offsets = config.partition.iter().map(|o| seg_start + o).take_while(|&k| k < seg_end).chain([seg_end]);
        let mut bounds: Vec<usize> = offsets.collect();
        bounds.dedup();
        for pair in bounds.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (x, seg) = roll.state()?;
            let ta = grid.node_time(a);
            let s = match config.shift_source {
                ShiftSource::ValueGradient { delta } => central_gradient(phi, ta, &x, &seg, delta)?,
                ShiftSource::Envelope { .. } => envelope.as_ref().expect("envelope mode").shift(phi, spec, a, &x, &seg)?,
                ShiftSource::Zero => vec![0.0; spec.dim()],
            };
            let u = spec.hamiltonian(ta, &x, seg.sample(0), &s).1;
            let running_before = roll.running_total();
            for _ in a..b {
                roll.step(u)?;
                indices.push(u);
            }
            if let (Some(env), Some(prev)) = (&envelope, psi_prev) {
                let (xb, segb) = roll.state()?;
                let next = env.psi(phi, b, &xb, &segb)?.0;
                envelope_defects.push(next + roll.running_total() - running_before - prev);
                psi_prev = Some(next);
            }
            nodes.push(a);
            shifts.push(s);
        }
        seg_start = seg_end;
    }
    nodes.push(last);
    let cost = roll.total_cost();
    let control = ControlSignal::new(start, indices);
    let trajectory = roll.into_motion().trajectory;
    Ok(Synthesis { control, trajectory, cost, nodes, shifts, envelope_defects })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub synthesized: f64,
    pub value: f64,
    /// Signed: the value is itself an upper estimate when the search is not exhaustive.
    pub gap: f64,
    pub relative: f64,
    pub exhaustive: bool,
    pub synthesis: Synthesis,
}

/// Synthesized cost against the searched value at the same initial state.
pub fn optimality_gap(
    spec: &ProblemSpec,
    phi: &dyn Functional,
    t: f64,
    z: &[f64],
    w: &History,
    config: &FeedbackConfig,
    search: &SearchConfig,
) -> Result<GapReport> {
    let synthesis = synthesize(spec, phi, t, z, w, config)?;
    let reference = value(spec, t, z, w, search)?;
    let gap = synthesis.cost - reference.value;
    Ok(GapReport {
        synthesized: synthesis.cost,
        value: reference.value,
        gap,
        relative: gap / reference.value.abs().max(1e-9),
        exhaustive: reference.exhaustive,
        synthesis,
    })
}

/// Largest of the integral moduli of one interval `[a, b]` over the family,
/// the control set and the given constant shifts: the variation of `f⁰`, of
/// `⟨f, s⟩` and of `H(·, s)` against their values at `a`. With a constant
/// shift the moduli in the variation of `s` vanish.
fn interval_modulus(spec: &ProblemSpec, family: &[Trajectory], shifts: &[Vec<f64>], a: usize, b: usize) -> f64 {
    let grid = spec.grid();
    let (m, step, n) = (grid.m() as isize, grid.step(), spec.dim());
    let mut fa = vec![0.0; n];
    let mut fk = vec![0.0; n];
    let mut worst = 0.0f64;
    for x in family {
        let read = |k: usize| -> (&[f64], &[f64]) {
            let ki = k as isize;
            let y = if k == a { x.at(ki - m) } else { x.left_at(ki - m) };
            (x.at(ki), y)
        };
        let (xa, ya) = read(a);
        let ta = grid.node_time(a);
        for u in 0..spec.controls().len() {
            spec.f_indexed_into(ta, xa, ya, u, &mut fa);
            let f0a = spec.f0_indexed(ta, xa, ya, u);
            let mut cost_var = vec![0.0; b - a + 1];
            let mut drift_var = vec![vec![0.0; b - a + 1]; shifts.len()];
            for k in a + 1..=b {
                let (xk, yk) = read(k);
                let tk = grid.node_time(k);
                spec.f_indexed_into(tk, xk, yk, u, &mut fk);
                cost_var[k - a] = (spec.f0_indexed(tk, xk, yk, u) - f0a).abs();
                for (si, s) in shifts.iter().enumerate() {
                    drift_var[si][k - a] = (math::dot(&fk, s) - math::dot(&fa, s)).abs();
                }
            }
            worst = worst.max(trapezoid(&cost_var, step));
            for d in &drift_var {
                worst = worst.max(trapezoid(d, step));
            }
        }
        for s in shifts {
            let ha = spec.hamiltonian(ta, xa, ya, s).0;
            let var: Vec<f64> = (a..=b)
                .map(|k| {
                    let (xk, yk) = read(k);
                    (spec.hamiltonian(grid.node_time(k), xk, yk, s).0 - ha).abs()
                })
                .collect();
            worst = worst.max(trapezoid(&var, step));
        }
    }
    worst
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    values.windows(2).map(|w| 0.5 * step * (w[0] + w[1])).sum()
}

/// Greedy partition of `[t, τ̄]` whose intervals keep every integral modulus
/// below `ζ_* = ζ / (30(τ̄ - t))`, measured over `family`, the control set and
/// `shifts`. Returns absolute nodes `t = τ₁ < … < τ_{k+1} = τ̄`.
pub fn partition_moduli(spec: &ProblemSpec, family: &CharacteristicFamily, shifts: &[Vec<f64>], tau_bar: usize, zeta: f64) -> Result<Vec<usize>> {
    if !(zeta > 0.0) {
        return Err(Error::Domain(alloc::format!("ζ = {zeta} must be positive")));
    }
    if family.is_empty() {
        return Err(Error::Empty("characteristic family"));
    }
    let grid = spec.grid();
    let t = family.start;
    if tau_bar <= t || tau_bar > grid.last_node() {
        return Err(Error::Domain(alloc::format!("τ̄ node {tau_bar} must lie in (t, ϑ] with t node {t}")));
    }
    let zeta_star = zeta / (30.0 * (grid.node_time(tau_bar) - grid.node_time(t)));
    let members = family.trajectories();
    let mut nodes = vec![t];
    let mut a = t;
    while a < tau_bar {
        if interval_modulus(spec, &members, shifts, a, a + 1) > zeta_star {
            return Err(Error::PartitionTooFine(alloc::format!("a single step from node {a} exceeds ζ_* = {zeta_star:.3e}")));
        }
        let mut b = a + 1;
        while b < tau_bar && interval_modulus(spec, &members, shifts, a, b + 1) <= zeta_star {
            b += 1;
        }
        nodes.push(b);
        a = b;
    }
    Ok(nodes)
}

/// Same as [`partition_moduli`] with the family sampled from `(t, z, w)`.
pub fn partition_from(spec: &ProblemSpec, t: f64, z: &[f64], w: &History, shifts: &[Vec<f64>], tau_bar: usize, zeta: f64, seed: u64) -> Result<Vec<usize>> {
    let mut family = sample_characteristics(spec, t, z, w, 0.0, 8, seed)?;
    let start = spec.grid().node_of(t)?;
    let constants: Vec<ControlSignal> = (0..spec.controls().len()).map(|i| ControlSignal::constant(spec, start, i)).collect();
    family.add_controls(spec, &constants)?;
    partition_moduli(spec, &family, shifts, tau_bar, zeta)
}

/// Realized cost of holding `indices` from `(t, z, w)`; the reference for a
/// hand-made control.
pub fn control_cost(spec: &ProblemSpec, t: f64, z: &[f64], w: &History, indices: Vec<usize>) -> Result<f64> {
    let start = spec.grid().node_of(t)?;
    integrate(spec, t, z, w, &ControlSignal::new(start, indices))?.cost(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::FromFn;
    use crate::histories::TimeGrid;
    use crate::math::Matrix;
    use crate::problem::{ControlSet, Dynamics, RunningCost, TerminalCost};
    use crate::value::ValueFunctional;

    fn scalar(v: f64) -> Matrix {
        Matrix::new(1, 1, vec![v]).unwrap()
    }

    fn spec(a: f64, b: f64, m: usize, running: RunningCost, terminal: TerminalCost, count: usize) -> ProblemSpec {
        let grid = TimeGrid::new(0.0, 1.0, 0.5, m).unwrap();
        let dynamics = Dynamics::LinearDelay { a: scalar(a), b: scalar(b), c: scalar(1.0) };
        ProblemSpec::new(grid, dynamics, running, terminal, ControlSet::interval(-1.0, 1.0, count).unwrap()).unwrap()
    }

    #[test]
    fn full_deceleration_reaches_zero() {
        let p = spec(0.0, 0.0, 8, RunningCost::zero(), TerminalCost::quadratic(1, 1.0), 3);
        let phi = ValueFunctional { spec: &p, config: SearchConfig { block_len: 4, ..SearchConfig::default() } };
        let w = History::constant(0.5, 8, &[1.0]).unwrap();
        let cfg = FeedbackConfig::uniform(&p, 0.0, 8, ShiftSource::ValueGradient { delta: 1e-2 }).unwrap();
        let r = synthesize(&p, &phi, 0.0, &[1.0], &w, &cfg).unwrap();
        assert!(r.control.indices().iter().all(|&i| i == 0), "{:?}", r.control);
        assert!(r.cost.abs() < 1e-12);
        assert!(r.trajectory.at(16)[0].abs() < 1e-12);
    }

    #[test]
    fn constant_running_cost_is_the_horizon() {
        let p = spec(0.0, 0.0, 8, RunningCost::constant(1.0), TerminalCost::zero(1), 3);
        let zero = FromFn(|_t, _z: &[f64], _w: &History| 0.0);
        let w = History::constant(0.5, 8, &[0.3]).unwrap();
        let cfg = FeedbackConfig::uniform(&p, 0.0, 4, ShiftSource::ValueGradient { delta: 1e-2 }).unwrap();
        let g = optimality_gap(&p, &zero, 0.0, &[0.3], &w, &cfg, &SearchConfig { block_len: 4, ..SearchConfig::default() }).unwrap();
        assert!((g.synthesized - 1.0).abs() < 1e-12 && g.gap.abs() < 1e-12);
    }

    #[test]
    fn chained_segments_cover_the_horizon() {
        let p = spec(-1.0, 0.5, 8, RunningCost::quadratic(1.0), TerminalCost::quadratic(1, 1.0), 3);
        let phi = FromFn(|_t, z: &[f64], _w: &History| z[0] * z[0]);
        let w = History::constant(0.5, 8, &[1.0]).unwrap();
        let cfg = FeedbackConfig { partition: vec![0, 2, 5], shift_source: ShiftSource::ValueGradient { delta: 1e-3 } };
        let r = synthesize(&p, &phi, 0.0, &[1.0], &w, &cfg).unwrap();
        assert_eq!(r.nodes, vec![0, 2, 5, 7, 10, 12, 15, 16]);
        assert_eq!(r.control.len(), 16);
        let again = synthesize(&p, &phi, 0.0, &[1.0], &w, &cfg).unwrap();
        assert_eq!(r, again);
        assert!((control_cost(&p, 0.0, &[1.0], &w, r.control.indices().to_vec()).unwrap() - r.cost).abs() < 1e-15);
    }

    #[test]
    fn myopic_control_is_worse() {
        let p = spec(0.0, 1.0, 8, RunningCost::quadratic(1.0), TerminalCost::quadratic(1, 1.0), 3);
        let search = SearchConfig { block_len: 2, ..SearchConfig::default() };
        let phi = ValueFunctional { spec: &p, config: search };
        let w = History::constant(0.5, 8, &[1.0]).unwrap();
        let myopic = FeedbackConfig::uniform(&p, 0.0, 8, ShiftSource::Zero).unwrap();
        let smart = FeedbackConfig::uniform(&p, 0.0, 8, ShiftSource::ValueGradient { delta: 1e-2 }).unwrap();
        let g0 = optimality_gap(&p, &phi, 0.0, &[1.0], &w, &myopic, &search).unwrap();
        let g1 = optimality_gap(&p, &phi, 0.0, &[1.0], &w, &smart, &search).unwrap();
        assert!(g0.gap > 1e-2, "{}", g0.gap);
        assert!(g1.gap < g0.gap);
    }

    #[test]
    fn envelope_mode_runs_and_reports_defects() {
        let p = spec(0.0, 0.0, 8, RunningCost::zero(), TerminalCost::quadratic(1, 1.0), 3);
        let phi = ValueFunctional { spec: &p, config: SearchConfig { block_len: 4, ..SearchConfig::default() } };
        let w = History::constant(0.5, 8, &[1.0]).unwrap();
        let source = ShiftSource::Envelope { lambda: 2.0, epsilon: 0.5 * Mu::epsilon_star(2.0, 0.0, 1.0), eta: 0.0, members: 5, seed: 0 };
        let cfg = FeedbackConfig::uniform(&p, 0.0, 4, source).unwrap();
        let r = synthesize(&p, &phi, 0.0, &[1.0], &w, &cfg).unwrap();
        assert_eq!(r.envelope_defects.len(), 4);
        assert!(r.cost < 1.0);
        let bad = FeedbackConfig { shift_source: ShiftSource::Envelope { lambda: 2.0, epsilon: 0.005, eta: 0.0, members: 0, seed: 0 }, ..cfg };
        assert!(matches!(synthesize(&p, &phi, 0.0, &[1.0], &w, &bad), Err(Error::Empty(_))));
    }

    #[test]
    fn partition_extremes() {
        let p = spec(-1.0, 0.5, 16, RunningCost::quadratic(1.0), TerminalCost::quadratic(1, 1.0), 3);
        let w = History::constant(0.5, 16, &[1.0]).unwrap();
        let s = [vec![1.0]];
        assert_eq!(partition_from(&p, 0.0, &[1.0], &w, &s, 15, 1e12, 0).unwrap(), vec![0, 15]);
        assert!(matches!(partition_from(&p, 0.0, &[1.0], &w, &s, 15, 1e-9, 0), Err(Error::PartitionTooFine(_))));
        let fine = partition_from(&p, 0.0, &[1.0], &w, &s, 15, 0.5, 0).unwrap();
        let coarse = partition_from(&p, 0.0, &[1.0], &w, &s, 15, 2.0, 0).unwrap();
        assert!(fine.len() >= coarse.len());
    }

    #[test]
    fn partition_refines_at_a_history_jump() {
        // Dynamics read only the delayed state, so the moduli see the jump
        // once the lag crosses it at t + h/2 and a node lands there.
        let p = spec(0.0, 1.0, 16, RunningCost::zero(), TerminalCost::zero(1), 3);
        let w = History::from_fn(0.5, 16, 1, |xi| vec![if xi < -0.25 { 0.0 } else { 2.0 }]).unwrap().with_jump(8).unwrap();
        let nodes = partition_from(&p, 0.0, &[0.0], &w, &[vec![1.0]], 15, 1.0, 0).unwrap();
        assert!(nodes.len() > 2 && nodes.iter().any(|k| (8..=10).contains(k)), "{nodes:?}");
        let flat = History::constant(0.5, 16, &[2.0]).unwrap();
        assert_eq!(partition_from(&p, 0.0, &[0.0], &flat, &[vec![1.0]], 15, 1.0, 0).unwrap(), vec![0, 15]);
    }
}
