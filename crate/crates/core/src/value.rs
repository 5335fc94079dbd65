//! Pointwise upper estimates of the value functional by searching
//! piecewise-constant `U_d`-valued controls.
//!
//! Controls are constant on blocks whose boundaries are multiples of the
//! block length counted from node 0, not from the query node. Block families
//! at lengths `L` and `L/2` are therefore nested, and the family seen from an
//! intermediate block boundary `τ` is exactly the tail of the family seen
//! from `t`, which makes the dynamic programming principle hold exactly under
//! exhaustive search.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{Functional, Mu};
use crate::error::{Error, Result};
use crate::histories::{History, TimeGrid, Trajectory};
use crate::integrator::{integrate, ControlSignal, Motion, Rollout};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum number of control sequences evaluated.
    pub budget: u64,
    /// Finest block length, in grid intervals.
    pub block_len: usize,
    /// Incumbents carried through beam refinement.
    pub beam_width: usize,
    /// Coordinate-descent sweeps per refinement level.
    pub sweeps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { budget: 1_000_000, block_len: 1, beam_width: 4, sweeps: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueResult {
    /// Cost of the re-integrated `control`.
    pub value: f64,
    pub control: ControlSignal,
    pub motion: Motion,
    /// The whole block family at `block_len` was enumerated.
    pub exhaustive: bool,
    pub evaluated: u64,
}

/// Block boundaries `[lo, hi)` covering `[start, last)`, aligned to absolute
/// multiples of `len`.
pub fn blocks(grid: &TimeGrid, start: usize, len: usize) -> Vec<(usize, usize)> {
    blocks_until(start, grid.last_node(), len)
}

fn blocks_until(start: usize, end: usize, len: usize) -> Vec<(usize, usize)> {
    let len = len.max(1);
    let mut out = Vec::new();
    let mut lo = start;
    while lo < end {
        let hi = ((lo / len + 1) * len).min(end);
        out.push((lo, hi));
        lo = hi;
    }
    out
}

/// `base^exp`, saturating.
fn family_size(base: usize, exp: usize) -> u64 {
    (base as u64).checked_pow(exp as u32).filter(|_| exp <= u32::MAX as usize).unwrap_or(u64::MAX)
}

/// Rollout that re-steps only past the first interval where the requested
/// sequence differs from the one already loaded.
struct Evaluator<'a> {
    roll: Rollout<'a>,
    start: usize,
    loaded: Vec<usize>,
    evaluated: u64,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a ProblemSpec, start: usize, z: &[f64], w: &'a History) -> Result<Self> {
        Ok(Self { roll: Rollout::new(spec, start, z, w)?, start, loaded: Vec::new(), evaluated: 0 })
    }

    /// Loads `seq` (intervals from `start`) and returns the running cost, or
    /// `None` if the state overflowed.
    fn load(&mut self, seq: &[usize]) -> Result<Option<f64>> {
        let shared = self.loaded.iter().zip(seq).take_while(|(a, b)| a == b).count();
        self.roll.truncate(self.start + shared);
        self.loaded.truncate(shared);
        for &i in &seq[shared..] {
            self.loaded.push(i);
            match self.roll.step(i) {
                Ok(()) => {}
                Err(Error::NonFinite { .. }) => {
                    // Drop the poisoned node so later loads re-step it.
                    self.loaded.pop();
                    self.roll.truncate(self.start + self.loaded.len());
                    return Ok(None);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Some(self.roll.running_total()))
    }

    /// Bolza cost of a full sequence; overflow counts as `+∞`.
    fn cost(&mut self, seq: &[usize]) -> Result<f64> {
        self.evaluated += 1;
        Ok(match self.load(seq)? {
            Some(_) => self.roll.total_cost(),
            None => f64::INFINITY,
        })
    }
}

/// Bounded list of the best `(cost, sequence)` pairs; earlier entries win ties.
struct Beam {
    width: usize,
    items: Vec<(f64, Vec<usize>)>,
}

impl Beam {
    fn new(width: usize) -> Self {
        Self { width: width.max(1), items: Vec::new() }
    }

    fn offer(&mut self, cost: f64, seq: &[usize]) {
        if self.items.iter().any(|(_, s)| s == seq) {
            return;
        }
        let pos = self.items.iter().position(|(c, _)| cost < *c).unwrap_or(self.items.len());
        if pos < self.width {
            self.items.insert(pos, (cost, seq.to_vec()));
            self.items.truncate(self.width);
        }
    }
}

fn write_block(seq: &mut [usize], start: usize, block: (usize, usize), u: usize) {
    seq[block.0 - start..block.1 - start].iter_mut().for_each(|v| *v = u);
}

/// Lexicographic enumeration of block assignments (first block slowest),
/// stopping after `cap` sequences.
fn enumerate(eval: &mut Evaluator, blocks: &[(usize, usize)], count: usize, cap: u64, beam: &mut Beam) -> Result<()> {
    let start = eval.start;
    let len = blocks.last().map_or(0, |b| b.1 - start);
    let mut digits = vec![0usize; blocks.len()];
    let mut seq = vec![0usize; len];
    let mut done = 0u64;
    loop {
        if done >= cap {
            return Ok(());
        }
        let c = eval.cost(&seq)?;
        done += 1;
        beam.offer(c, &seq);
        let mut j = blocks.len();
        loop {
            if j == 0 {
                return Ok(());
            }
            j -= 1;
            digits[j] += 1;
            if digits[j] < count {
                write_block(&mut seq, start, blocks[j], digits[j]);
                break;
            }
            digits[j] = 0;
            write_block(&mut seq, start, blocks[j], 0);
        }
    }
}

/// Upper estimate of `ρ(t, z, w)`: exhaustive over blocks of `block_len`
/// when `|U_d|^blocks ≤ budget`, otherwise an exhaustive pass over coarser
/// blocks within half the budget followed by beam refinement that halves the
/// blocks down to `block_len` and accepts only strict improvements.
pub fn value(spec: &ProblemSpec, t: f64, z: &[f64], w: &History, cfg: &SearchConfig) -> Result<ValueResult> {
    if cfg.budget == 0 {
        return Err(Error::Budget(0));
    }
    let grid = spec.grid();
    let start = grid.node_of(t)?;
    let count = spec.controls().len();
    let base = cfg.block_len.max(1);
    let mut eval = Evaluator::new(spec, start, z, w)?;
    let intervals = grid.last_node() - start;

    let fine = blocks(grid, start, base);
    let exhaustive = family_size(count, fine.len()) <= cfg.budget;
    let best = if intervals == 0 {
        eval.cost(&[])?;
        Vec::new()
    } else if exhaustive {
        let mut beam = Beam::new(1);
        enumerate(&mut eval, &fine, count, cfg.budget, &mut beam)?;
        beam.items.swap_remove(0).1
    } else {
        coarse_then_refine(&mut eval, grid, start, count, cfg)?
    };

    let control = ControlSignal::new(start, best);
    let motion = integrate(spec, t, z, w, &control)?;
    let value = motion.cost(spec)?;
    Ok(ValueResult { value, control, motion, exhaustive, evaluated: eval.evaluated })
}

fn coarse_then_refine(eval: &mut Evaluator, grid: &TimeGrid, start: usize, count: usize, cfg: &SearchConfig) -> Result<Vec<usize>> {
    let base = cfg.block_len.max(1);
    let half = (cfg.budget / 2).max(1);
    let mut len = base;
    loop {
        let nb = blocks(grid, start, len).len();
        if family_size(count, nb) <= half || nb == 1 {
            break;
        }
        len *= 2;
    }
    let mut beam = Beam::new(cfg.beam_width);
    enumerate(eval, &blocks(grid, start, len), count, half, &mut beam)?;

    while len > base && eval.evaluated < cfg.budget {
        len = (len / 2).max(base);
        let level = blocks(grid, start, len);
        let mut pool = Beam::new(cfg.beam_width);
        for (cost, seq) in &beam.items {
            pool.offer(*cost, seq);
        }
        let incumbents = core::mem::take(&mut beam.items);
        for (mut cur_cost, mut cur) in incumbents {
            'sweeps: for _ in 0..cfg.sweeps.max(1) {
                let mut improved = false;
                for &block in &level {
                    let current = cur[block.0 - start];
                    for u in (0..count).filter(|&u| u != current) {
                        if eval.evaluated >= cfg.budget {
                            break 'sweeps;
                        }
                        let mut cand = cur.clone();
                        write_block(&mut cand, start, block, u);
                        let c = eval.cost(&cand)?;
                        pool.offer(c, &cand);
                        if c < cur_cost {
                            cur_cost = c;
                            cur = cand;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            pool.offer(cur_cost, &cur);
        }
        beam = pool;
    }
    Ok(beam.items.swap_remove(0).1)
}

/// The two sides of the dynamic programming principle at node `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct DppReport {
    pub left: f64,
    /// `min` over first-leg block controls of `∫_t^τ f0 + ρ(τ, x(τ), x_τ)`.
    pub right: f64,
    pub residual: f64,
    /// First leg attaining `right`.
    pub first_leg: Vec<usize>,
}

/// `|ρ(t, z, w) - min_u [∫_t^τ f0 + ρ(τ, x(τ), x_τ)]|` with the first leg
/// enumerated exhaustively over the same blocks and the inner value searched
/// with the same configuration.
pub fn dpp_residual(spec: &ProblemSpec, t: f64, z: &[f64], w: &History, tau: f64, cfg: &SearchConfig) -> Result<DppReport> {
    let grid = spec.grid();
    let start = grid.node_of(t)?;
    let mid = grid.node_of(tau)?;
    if mid <= start {
        return Err(Error::Domain(alloc::format!("τ = {tau} must lie after t = {t}")));
    }
    let left = value(spec, t, z, w, cfg)?.value;

    let count = spec.controls().len();
    let leg = blocks_until(start, mid, cfg.block_len);
    if family_size(count, leg.len()) > cfg.budget {
        return Err(Error::Budget(cfg.budget));
    }
    let mut eval = Evaluator::new(spec, start, z, w)?;
    let mut digits = vec![0usize; leg.len()];
    let mut seq = vec![0usize; mid - start];
    let mut right = f64::INFINITY;
    let mut first_leg = seq.clone();
    loop {
        if let Some(running) = eval.load(&seq)? {
            let (x, seg) = eval.roll.state()?;
            let inner = if mid == grid.last_node() { spec.sigma(&x, &seg) } else { value(spec, grid.node_time(mid), &x, &seg, cfg)?.value };
            if running + inner < right {
                right = running + inner;
                first_leg.copy_from_slice(&seq);
            }
        }
        let mut j = leg.len();
        loop {
            if j == 0 {
                return Ok(DppReport { left, right, residual: (left - right).abs(), first_leg });
            }
            j -= 1;
            digits[j] += 1;
            if digits[j] < count {
                write_block(&mut seq, start, leg[j], digits[j]);
                break;
            }
            digits[j] = 0;
            write_block(&mut seq, start, leg[j], 0);
        }
    }
}

/// `ρ` as a [`Functional`], searched afresh at every evaluation.
pub struct ValueFunctional<'a> {
    pub spec: &'a ProblemSpec,
    pub config: SearchConfig,
}

impl Functional for ValueFunctional<'_> {
    fn eval(&self, t: f64, z: &[f64], w: &History) -> Result<f64> {
        Ok(value(self.spec, t, z, w, &self.config)?.value)
    }

    fn lipschitz_bound(&self, alpha: f64) -> Option<f64> {
        Some(value_lipschitz(self.spec, alpha))
    }
}

/// Lipschitz constant of `ρ` in `(z, w)` on `P(α)`: the cost difference of
/// one control from two initial pairs is at most `max(1, λ_σ(α_X)) · λ_*(α)`
/// times their distance.
pub fn value_lipschitz(spec: &ProblemSpec, alpha: f64) -> f64 {
    let alpha_x = spec.growth_bounds(alpha).alpha_x;
    spec.lambda_sigma(alpha_x).max(1.0) * spec.lipschitz_bound(alpha)
}

/// Attained envelope value and the index of the attaining family member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub value: f64,
    pub index: usize,
}

/// `ψ₋(τ, v, r) = min_y [φ(τ, y(τ), y_τ) + μ(τ, v - y(τ), r - y_τ)]` over a
/// finite family of trajectories. Ties go to the lowest index.
pub fn psi_minus(phi: &dyn Functional, mu: &Mu, family: &[Trajectory], tau: usize, v: &[f64], r: &History) -> Result<Envelope> {
    envelope(phi, mu, family, tau, v, r, 1.0)
}

/// `ψ₊(τ, v, r) = max_y [φ(τ, y(τ), y_τ) - μ(τ, v - y(τ), r - y_τ)]`.
pub fn psi_plus(phi: &dyn Functional, mu: &Mu, family: &[Trajectory], tau: usize, v: &[f64], r: &History) -> Result<Envelope> {
    envelope(phi, mu, family, tau, v, r, -1.0).map(|e| Envelope { value: -e.value, index: e.index })
}

/// `min_y sign · φ(y) + μ(v - y)`; `ψ₊` is the negated minimum with `sign = -1`.
fn envelope(phi: &dyn Functional, mu: &Mu, family: &[Trajectory], tau: usize, v: &[f64], r: &History, sign: f64) -> Result<Envelope> {
    if family.is_empty() {
        return Err(Error::Empty("trajectory family"));
    }
    let mut best = Envelope { value: f64::INFINITY, index: 0 };
    for (index, y) in family.iter().enumerate() {
        let t = y.grid().node_time(tau);
        let seg = y.segment(tau)?;
        let yt = y.at(tau as isize);
        let dz: Vec<f64> = v.iter().zip(yt).map(|(a, b)| a - b).collect();
        let val = sign * phi.eval(t, yt, &seg)? + mu.value(t, &dz, &r.sub(&seg)?);
        if val < best.value {
            best = Envelope { value: val, index };
        }
    }
    Ok(best)
}

/// Maps a control on `[t, ϑ]` to one on `[t', ϑ]`: the restriction when
/// `t' ≥ t`, otherwise `u(t)` held on `[t', t)` followed by `u`.
pub fn control_transplant(u: &ControlSignal, t_prime: usize) -> Result<ControlSignal> {
    let t = u.start();
    if t_prime >= t {
        let drop = t_prime - t;
        if drop > u.len() {
            return Err(Error::Domain(alloc::format!("node {t_prime} lies past the control's end")));
        }
        return Ok(ControlSignal::new(t_prime, u.indices()[drop..].to_vec()));
    }
    let first = *u.indices().first().ok_or(Error::Empty("control has no value at its start"))?;
    let mut indices = vec![first; t - t_prime];
    indices.extend_from_slice(u.indices());
    Ok(ControlSignal::new(t_prime, indices))
}
