//! Numerical checks of the minimax, directional-derivative and viscosity
//! characterizations of solutions.
//!
//! Every quantifier over an infinite set is replaced by a finite sample: the
//! characteristic inclusion by a structured trajectory family, the direction
//! space by a finite direction set, `ℝⁿ ∋ s` by a bounded draw. An infimum
//! over a subfamily bounds the true infimum from above and a supremum bounds
//! it from below, so a *pass* of either stability inequality is evidence
//! that carries over to the full set, while a *fail* may be an artifact of
//! the sample. Reports record which side each verdict came from.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{ci_estimate, default_steps, dir_deriv, Affine, DirectionTable, Functional, Membership};
use crate::error::{Error, Result};
use crate::histories::{History, Trajectory};
use crate::integrator::{integrate, integrate_selection, ControlSignal, Selection};
use crate::math;
use crate::problem::ProblemSpec;
use crate::value::{value, SearchConfig};

/// Keeps boundary velocities strictly inside the ball against rounding.
const INSIDE: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberKind {
    /// `ẋ ≡ 0`.
    Zero,
    /// `ẋ` on the boundary of `F` along a fixed axis direction.
    Ray,
    /// Same as `Ray` on the boundary of the `η`-enlarged ball.
    EnlargedRay,
    /// Random direction and fraction of the radius, constant per block.
    Random,
    /// Node slopes of a motion of the controlled system.
    ControlInduced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub kind: MemberKind,
    pub selection: Selection,
    pub trajectory: Trajectory,
    /// Intervals where the selection left the admissible ball and was clipped.
    pub clipped: Vec<usize>,
}

/// A finite subfamily of the (η-enlarged) characteristic inclusion from a
/// base point.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicFamily {
    pub start: usize,
    pub z: Vec<f64>,
    pub w: History,
    pub eta: f64,
    pub seed: u64,
    pub members: Vec<Member>,
}

impl CharacteristicFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn trajectories(&self) -> Vec<Trajectory> {
        self.members.iter().map(|m| m.trajectory.clone()).collect()
    }

    /// Adds the motions of `controls` from the base point, read as selections.
    pub fn add_controls(&mut self, spec: &ProblemSpec, controls: &[ControlSignal]) -> Result<()> {
        let t = spec.grid().node_time(self.start);
        for u in controls {
            let motion = integrate(spec, t, &self.z, &self.w, u)?;
            let selection = Selection::from_trajectory(&motion.trajectory, self.eta);
            self.push(spec, MemberKind::ControlInduced, selection)?;
        }
        Ok(())
    }

    fn push(&mut self, spec: &ProblemSpec, kind: MemberKind, selection: Selection) -> Result<()> {
        let t = spec.grid().node_time(self.start);
        let m = integrate_selection(spec, t, &self.z, &self.w, &selection)?;
        self.members.push(Member { kind, selection, trajectory: m.trajectory, clipped: m.clipped });
        Ok(())
    }
}

/// Euler stepping of a feedback velocity `l(k, x, y, r)`, `r` the radius of
/// `F(x, y)`, recorded as an open-loop selection.
fn feedback_selection(
    spec: &ProblemSpec,
    start: usize,
    z: &[f64],
    w: &History,
    eta: f64,
    mut velocity: impl FnMut(usize, &[f64], f64) -> Vec<f64>,
) -> Selection {
    let grid = spec.grid();
    let (n, m, step) = (spec.dim(), grid.m(), grid.step());
    let mut forward = z.to_vec();
    let mut values = Vec::with_capacity(grid.last_node() - start);
    for k in start..grid.last_node() {
        let j = k - start;
        let x = forward[j * n..(j + 1) * n].to_vec();
        let lag = k as isize - m as isize;
        let y = if lag >= start as isize {
            let i = (lag as usize - start) * n;
            forward[i..i + n].to_vec()
        } else {
            w.sample((lag - start as isize + m as isize) as usize).to_vec()
        };
        let l = velocity(k, &x, spec.char_radius(&x, &y));
        forward.extend(x.iter().zip(&l).map(|(a, b)| a + step * b));
        values.push(l);
    }
    Selection { start, values, eta }
}

fn unit_axis(n: usize, i: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = sign;
    e
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = math::norm(&v);
        if norm > 1e-3 && norm <= 1.0 {
            return math::scale(&v, 1.0 / norm);
        }
    }
}

/// Deterministic family from `(t, z, w)`: the zero selection, boundary rays
/// along `±e_i` (taken in that order), then random block-constant
/// selections, `count` members in all; when `η > 0` the rays are repeated on
/// the boundary of the enlarged ball, so families for `η = 0` are contained
/// in those for `η > 0` under the same seed.
pub fn sample_characteristics(spec: &ProblemSpec, t: f64, z: &[f64], w: &History, eta: f64, count: usize, seed: u64) -> Result<CharacteristicFamily> {
    if count < 3 {
        return Err(Error::Domain(alloc::format!("a characteristic family needs at least 3 members, got {count}")));
    }
    if !(eta >= 0.0) {
        return Err(Error::Domain(alloc::format!("η = {eta} must be nonnegative")));
    }
    let start = spec.grid().node_of(t)?;
    let n = spec.dim();
    let mut family = CharacteristicFamily { start, z: z.to_vec(), w: w.clone(), eta, seed, members: Vec::new() };
    let zero = Selection::constant(spec, start, &vec![0.0; n], eta);
    family.push(spec, MemberKind::Zero, zero)?;

    let axes: Vec<Vec<f64>> = (0..n).flat_map(|i| [unit_axis(n, i, 1.0), unit_axis(n, i, -1.0)]).collect();
    for dir in axes.iter().take(count - 1) {
        let sel = feedback_selection(spec, start, z, w, eta, |_, _, r| math::scale(dir, r * INSIDE));
        family.push(spec, MemberKind::Ray, sel)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = (spec.grid().m() / 4).max(1);
    for _ in family.members.len()..count {
        let blocks = (spec.grid().last_node() - start).div_ceil(block).max(1);
        let draws: Vec<(Vec<f64>, f64)> = (0..blocks).map(|_| (random_unit(&mut rng, n), rng.gen_range(0.0..1.0))).collect();
        let sel = feedback_selection(spec, start, z, w, eta, |k, _, r| {
            let (dir, frac) = &draws[(k - start) / block];
            math::scale(dir, frac * r)
        });
        family.push(spec, MemberKind::Random, sel)?;
    }

    if eta > 0.0 {
        for dir in &axes {
            let sel = feedback_selection(spec, start, z, w, eta, |_, _, r| math::scale(dir, (r + eta) * INSIDE));
            family.push(spec, MemberKind::EnlargedRay, sel)?;
        }
    }
    Ok(family)
}

/// `∫_t^τ [H(ξ, x, x(ξ - h), s) - ⟨ẋ, s⟩] dξ` by the trapezoid rule, reading
/// the delayed state as the right value at the left end of each interval and
/// the left limit at the right end.
pub fn omega_integral(spec: &ProblemSpec, x: &Trajectory, t: usize, tau: usize, s: &[f64]) -> f64 {
    let grid = spec.grid();
    let m = grid.m() as isize;
    let step = grid.step();
    let mut buf = vec![0.0; spec.dim()];
    let mut total = 0.0;
    for k in t..tau {
        let (a, b) = (k as isize, k as isize + 1);
        let h0 = spec.hamiltonian_with(grid.node_time(k), x.at(a), x.at(a - m), s, &mut buf).0;
        let h1 = spec.hamiltonian_with(grid.node_time(k + 1), x.at(b), x.left_at(b - m), s, &mut buf).0;
        let slope: f64 = x.at(b).iter().zip(x.at(a)).zip(s).map(|((p, q), si)| (p - q) * si).sum::<f64>() / step;
        total += step * (0.5 * (h0 + h1) - slope);
    }
    total
}

/// `ω(t, x, τ, s) = φ(τ, x(τ), x_τ) - φ(t, x(t), x_t) + ∫_t^τ [H - ⟨ẋ, s⟩]`.
pub fn omega(spec: &ProblemSpec, phi: &dyn Functional, x: &Trajectory, t: usize, tau: usize, s: &[f64]) -> Result<f64> {
    if t > tau || t < x.start() || tau > spec.grid().last_node() {
        return Err(Error::Domain(alloc::format!("ω needs start ≤ t ≤ τ ≤ ϑ, got nodes {t}, {tau}")));
    }
    let grid = spec.grid();
    let at = |k: usize| -> Result<f64> { phi.eval(grid.node_time(k), x.at(k as isize), &x.segment(k)?) };
    if t == tau {
        return Ok(0.0);
    }
    Ok(at(tau)? - at(t)? + omega_integral(spec, x, t, tau, s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxConfig {
    pub zeta_tol: f64,
    /// Coordinate-descent sweeps when a side does not pass on the family.
    pub sweeps: usize,
    /// Blocks of `[t, τ)` changed by the local improvement.
    pub max_blocks: usize,
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        Self { zeta_tol: 5e-2, sweeps: 2, max_blocks: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub tau: f64,
    pub s: Vec<f64>,
    pub inf_omega: f64,
    pub sup_omega: f64,
    /// Family member the local improvement started from.
    pub inf_member: usize,
    pub sup_member: usize,
    pub inf_trajectory: Trajectory,
    pub sup_trajectory: Trajectory,
    /// `inf ω ≤ ζ_tol`; a pass holds for the whole inclusion.
    pub upper_pass: bool,
    /// `sup ω ≥ -ζ_tol`; a pass holds for the whole inclusion.
    pub lower_pass: bool,
    pub zeta_tol: f64,
    /// `ω` evaluations including the local improvement.
    pub evaluations: usize,
}

/// Both stability inequalities at `(τ, s)` over `family`, with a local
/// coordinate-descent improvement of the selection on whichever side does
/// not pass outright.
pub fn minimax_check(
    spec: &ProblemSpec,
    phi: &dyn Functional,
    family: &CharacteristicFamily,
    tau: usize,
    s: &[f64],
    cfg: &MinimaxConfig,
) -> Result<StabilityReport> {
    if family.is_empty() {
        return Err(Error::Empty("characteristic family"));
    }
    let t = family.start;
    if tau <= t || tau > spec.grid().last_node() {
        return Err(Error::Domain(alloc::format!("τ node {tau} must lie in (t, ϑ] with t node {t}")));
    }
    let grid = spec.grid();
    let base = family.members[0].trajectory.segment(t)?;
    let phi_t = phi.eval(grid.node_time(t), &family.z, &base)?;
    let eval = |x: &Trajectory| -> Result<f64> {
        let seg = x.segment(tau)?;
        Ok(phi.eval(grid.node_time(tau), x.at(tau as isize), &seg)? - phi_t + omega_integral(spec, x, t, tau, s))
    };
    let values = family.members.iter().map(|m| eval(&m.trajectory)).collect::<Result<Vec<f64>>>()?;
    let mut evaluations = values.len();
    let argmin = (0..values.len()).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    let argmax = (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });

    let mut improve = |start: usize, sign: f64| -> Result<(f64, Trajectory)> {
        let mut best = sign * values[start];
        let mut sel = family.members[start].selection.clone();
        let mut traj = family.members[start].trajectory.clone();
        let threshold = cfg.zeta_tol;
        if best <= threshold {
            return Ok((sign * best, traj));
        }
        let dirs = candidate_directions(spec.dim(), s);
        let span = tau - t;
        let nb = cfg.max_blocks.clamp(1, span);
        let time = grid.node_time(t);
        'outer: for _ in 0..cfg.sweeps {
            let mut improved = false;
            for b in 0..nb {
                let (lo, hi) = (b * span / nb, (b + 1) * span / nb);
                for dir in &dirs {
                    let mut cand = sel.clone();
                    for v in &mut cand.values[lo..hi] {
                        *v = dir.clone();
                    }
                    if cand == sel {
                        continue;
                    }
                    let motion = integrate_selection(spec, time, &family.z, &family.w, &cand)?;
                    let val = sign * eval(&motion.trajectory)?;
                    evaluations += 1;
                    if val < best {
                        best = val;
                        sel = cand;
                        traj = motion.trajectory;
                        improved = true;
                        if best <= threshold {
                            break 'outer;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        Ok((sign * best, traj))
    };
    let (inf_omega, inf_trajectory) = improve(argmin, 1.0)?;
    let (sup_omega, sup_trajectory) = improve(argmax, -1.0)?;
    Ok(StabilityReport {
        tau: grid.node_time(tau),
        s: s.to_vec(),
        inf_omega,
        sup_omega,
        inf_member: argmin,
        sup_member: argmax,
        inf_trajectory,
        sup_trajectory,
        upper_pass: inf_omega <= cfg.zeta_tol,
        lower_pass: sup_omega >= -cfg.zeta_tol,
        zeta_tol: cfg.zeta_tol,
        evaluations,
    })
}

/// Zero, `±e_i` and `±s/‖s‖` pushed far outside every ball, so that the
/// selection integrator clips them onto the boundary.
fn candidate_directions(n: usize, s: &[f64]) -> Vec<Vec<f64>> {
    const FAR: f64 = 1e12;
    let mut dirs = vec![vec![0.0; n]];
    for i in 0..n {
        dirs.push(unit_axis(n, i, FAR));
        dirs.push(unit_axis(n, i, -FAR));
    }
    let norm = math::norm(s);
    if norm > 0.0 {
        dirs.push(math::scale(s, FAR / norm));
        dirs.push(math::scale(s, -FAR / norm));
    }
    dirs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivConfig {
    /// Random directions drawn in the ball `F(z, w(-h))`.
    pub random: usize,
    pub seed: u64,
    /// Largest difference-quotient step, in grid nodes.
    pub max_step: usize,
    /// Quotients kept for the min/max; 0 keeps all.
    pub tail: usize,
    pub tol: f64,
}

impl Default for DerivConfig {
    fn default() -> Self {
        Self { random: 8, seed: 0, max_step: 4, tail: 0, tol: 5e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivReport {
    pub hamiltonian: f64,
    /// `min_l [∂⁻_l φ + H(t, z, w(-h), s) - ⟨l, s⟩]`.
    pub inf_margin: f64,
    /// `max_l [∂⁺_l φ + H(t, z, w(-h), s) - ⟨l, s⟩]`.
    pub sup_margin: f64,
    pub inf_direction: Vec<f64>,
    pub sup_direction: Vec<f64>,
    pub upper_pass: bool,
    pub lower_pass: bool,
}

/// The directional-derivative inequalities over a finite sample of
/// `F(z, w(-h))`: boundary points along `±e_i` and `±s`, the origin, and
/// random points of the ball.
pub fn deriv_check(spec: &ProblemSpec, phi: &dyn Functional, t: f64, z: &[f64], w: &History, s: &[f64], cfg: &DerivConfig) -> Result<DerivReport> {
    let grid = spec.grid();
    let node = grid.node_of(t)?;
    if node >= grid.last_node() {
        return Err(Error::Domain("directional derivatives need t < ϑ".into()));
    }
    let n = spec.dim();
    let y = w.sample(0);
    let r = spec.char_radius(z, y) * INSIDE;
    let mut directions = vec![vec![0.0; n]];
    for i in 0..n {
        directions.push(unit_axis(n, i, r));
        directions.push(unit_axis(n, i, -r));
    }
    let sn = math::norm(s);
    if sn > 0.0 {
        directions.push(math::scale(s, r / sn));
        directions.push(math::scale(s, -r / sn));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.random {
        let dir = random_unit(&mut rng, n);
        let radius = r * rng.gen_range(0.0..1.0);
        directions.push(math::scale(&dir, radius));
    }
    let hamiltonian = spec.hamiltonian(t, z, y, s).0;
    let steps = default_steps(grid, node, cfg.max_step);
    let mut inf = (f64::INFINITY, 0);
    let mut sup = (f64::NEG_INFINITY, 0);
    for (i, l) in directions.iter().enumerate() {
        let est = dir_deriv(phi, grid, node, z, w, l, &steps, cfg.tail)?;
        let ls = math::dot(l, s);
        let lo = est.lower + hamiltonian - ls;
        let hi = est.upper + hamiltonian - ls;
        if lo < inf.0 {
            inf = (lo, i);
        }
        if hi > sup.0 {
            sup = (hi, i);
        }
    }
    Ok(DerivReport {
        hamiltonian,
        inf_margin: inf.0,
        sup_margin: sup.0,
        inf_direction: directions[inf.1].clone(),
        sup_direction: directions[sup.1].clone(),
        upper_pass: inf.0 <= cfg.tol,
        lower_pass: sup.0 >= -cfg.tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityConfig {
    pub random: usize,
    pub seed: u64,
    pub max_step: usize,
    pub tail: usize,
    /// Membership tolerance.
    pub member_tol: f64,
    /// Tolerance on `p₀ + H(p)`.
    pub tol: f64,
}

impl Default for ViscosityConfig {
    fn default() -> Self {
        Self { random: 6, seed: 0, max_step: 4, tail: 1, member_tol: 2e-2, tol: 5e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityEntry {
    pub p0: f64,
    pub p: Vec<f64>,
    pub sub: Membership,
    pub sup: Membership,
    /// `p₀ + H(t, z, w(-h), p)`.
    pub hamiltonian_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityReport {
    pub entries: Vec<ViscosityEntry>,
    pub sub_admitted: usize,
    pub sup_admitted: usize,
    /// Admitted subdifferential members with `p₀ + H > tol`.
    pub sub_violations: Vec<usize>,
    /// Admitted superdifferential members with `p₀ + H < -tol`.
    pub sup_violations: Vec<usize>,
    pub pass: bool,
}

/// `(∂^{ci}φ, ∇_zφ)` estimates plus `p₀` shifted by `±k·spread`, `k = 1..=levels`.
pub fn default_candidates(
    phi: &dyn Functional,
    spec: &ProblemSpec,
    t: f64,
    z: &[f64],
    w: &History,
    spread: f64,
    levels: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let node = spec.grid().node_of(t)?;
    let (p0, p) = ci_estimate(phi, spec.grid(), node, z, w)?;
    let mut out = vec![(p0, p.clone())];
    for k in 1..=levels {
        let d = spread * k as f64;
        out.push((p0 - d, p.clone()));
        out.push((p0 + d, p.clone()));
    }
    Ok(out)
}

/// Viscosity inequalities for every candidate admitted to the sub- or
/// superdifferential by the finite direction test. With no admitted
/// candidate the check passes vacuously.
pub fn viscosity_check(
    spec: &ProblemSpec,
    phi: &dyn Functional,
    t: f64,
    z: &[f64],
    w: &History,
    candidates: &[(f64, Vec<f64>)],
    cfg: &ViscosityConfig,
) -> Result<ViscosityReport> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate list"));
    }
    let grid = spec.grid();
    let node = grid.node_of(t)?;
    if node >= grid.last_node() {
        return Err(Error::Domain("sub/superdifferentials need t < ϑ".into()));
    }
    let n = spec.dim();
    let y = w.sample(0);
    let r = spec.char_radius(z, y);
    let mut directions = Vec::new();
    for i in 0..n {
        directions.push(unit_axis(n, i, 1.0));
        directions.push(unit_axis(n, i, -1.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.random {
        let dir = random_unit(&mut rng, n);
        directions.push(math::scale(&dir, r * rng.gen_range(0.0..1.0)));
    }
    let steps = default_steps(grid, node, cfg.max_step);
    let table = DirectionTable::build(phi, grid, node, z, w, &directions, &steps, cfg.tail)?;
    let mut entries = Vec::with_capacity(candidates.len());
    let (mut sub_admitted, mut sup_admitted) = (0, 0);
    let (mut sub_violations, mut sup_violations) = (Vec::new(), Vec::new());
    for (i, (p0, p)) in candidates.iter().enumerate() {
        let sub = table.subdiff(*p0, p, cfg.member_tol);
        let sup = table.superdiff(*p0, p, cfg.member_tol);
        let hamiltonian_sum = p0 + spec.hamiltonian(t, z, y, p).0;
        if sub.member {
            sub_admitted += 1;
            if hamiltonian_sum > cfg.tol {
                sub_violations.push(i);
            }
        }
        if sup.member {
            sup_admitted += 1;
            if hamiltonian_sum < -cfg.tol {
                sup_violations.push(i);
            }
        }
        entries.push(ViscosityEntry { p0: *p0, p: p.clone(), sub, sup, hamiltonian_sum });
    }
    let pass = sub_violations.is_empty() && sup_violations.is_empty();
    Ok(ViscosityReport { entries, sub_admitted, sup_admitted, sub_violations, sup_violations, pass })
}

/// `max |φ(ϑ, z, w) - σ(z, w)|` over the given terminal states.
pub fn terminal_check(spec: &ProblemSpec, phi: &dyn Functional, points: &[(Vec<f64>, History)]) -> Result<f64> {
    let theta = spec.grid().theta();
    points.iter().try_fold(0.0f64, |acc, (z, w)| Ok(acc.max((phi.eval(theta, z, w)? - spec.sigma(z, w)).abs())))
}

/// `φ + c(ϑ - t)`.
pub fn time_shifted<F: Functional>(phi: F, c: f64, theta: f64) -> Affine<F> {
    Affine { base: phi, scale: 1.0, time_slope: c, theta }
}

/// `k·φ`.
pub fn scaled<F: Functional>(phi: F, k: f64) -> Affine<F> {
    Affine { base: phi, scale: k, time_slope: 0.0, theta: 0.0 }
}

/// A base point used by the check batteries.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub label: &'static str,
    pub node: usize,
    pub z: Vec<f64>,
    pub w: History,
}

/// Up to ten probe points derived from the initial state `(t₀, z₀, w₀)`:
/// the initial state, the origin at mid-horizon, states along the searched
/// optimal motion and along two constant-control motions, and states whose
/// history jumps at `ξ = -h/2`.
pub fn probe_catalog(spec: &ProblemSpec, z0: &[f64], w0: &History, cfg: &SearchConfig) -> Result<Vec<Probe>> {
    let grid = spec.grid();
    let (n, m, last) = (spec.dim(), grid.m(), grid.last_node());
    let t0 = grid.t0();
    let node_at = |frac: f64| -> usize { (((last as f64) * frac) as usize).clamp(1, last - 1) };
    let state_of = |traj: &Trajectory, k: usize| -> Result<(Vec<f64>, History)> { Ok((traj.at(k as isize).to_vec(), traj.segment(k)?)) };
    let zeros = vec![0.0; n];

    let mut out = vec![Probe { label: "initial", node: 0, z: z0.to_vec(), w: w0.clone() }];
    out.push(Probe { label: "origin at mid-horizon", node: node_at(0.5), z: zeros.clone(), w: History::constant(grid.delay(), m, &zeros)? });

    let optimal = value(spec, t0, z0, w0, cfg)?.motion.trajectory;
    for (label, frac) in [("optimal at T/4", 0.25), ("optimal at T/2", 0.5), ("optimal at 3T/4", 0.75)] {
        let k = node_at(frac);
        let (z, w) = state_of(&optimal, k)?;
        out.push(Probe { label, node: k, z, w });
    }
    let count = spec.controls().len();
    for (label, idx, frac) in [("first control at T/4", 0, 0.25), ("last control at T/2", count - 1, 0.5)] {
        let traj = integrate(spec, t0, z0, w0, &ControlSignal::constant(spec, 0, idx))?.trajectory;
        let k = node_at(frac);
        let (z, w) = state_of(&traj, k)?;
        out.push(Probe { label, node: k, z, w });
    }
    let bumped: Vec<f64> = w0.left_limit(m / 2).iter().map(|v| v + 0.5).collect();
    out.push(Probe { label: "initial, jump in history", node: 0, z: z0.to_vec(), w: w0.clone().with_jump_left(m / 2, bumped)? });
    let half: Vec<f64> = z0.iter().map(|v| 0.5 * v).collect();
    let ramp = History::linear(grid.delay(), m, z0, &half)?;
    let dropped: Vec<f64> = ramp.sample(m / 2).iter().map(|v| v - 0.5).collect();
    out.push(Probe { label: "mid-horizon, jump in history", node: node_at(0.5), z: half, w: ramp.with_jump_left(m / 2, dropped)? });
    let neg: Vec<f64> = z0.iter().map(|v| -v).collect();
    out.push(Probe { label: "negated initial", node: 0, z: neg, w: w0.combine(-1.0, w0, 0.0)? });
    Ok(out)
}

/// `(τ, s)` draws for a probe at `node`: first `τ = min(t + h/2, ϑ)` with
/// `s = 0`, then alternately a point of the `[-s_box, s_box]ⁿ` lattice with
/// spacing 1/2 and a uniform point of the box, each with a uniform `τ`.
pub fn probe_draws(spec: &ProblemSpec, node: usize, count: usize, s_box: f64, seed: u64) -> Vec<(usize, Vec<f64>)> {
    let grid = spec.grid();
    let (n, last) = (spec.dim(), grid.last_node());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (node as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut out = Vec::with_capacity(count);
    if count == 0 || node >= last {
        return out;
    }
    out.push(((node + grid.m() / 2).min(last), vec![0.0; n]));
    let lattice = libm::floor(2.0 * s_box / 0.5) as i64;
    while out.len() < count {
        let tau = rng.gen_range(node + 1..=last);
        let s = if out.len() % 2 == 1 {
            (0..n).map(|_| -s_box + 0.5 * rng.gen_range(0..=lattice) as f64).collect()
        } else {
            (0..n).map(|_| rng.gen_range(-s_box..=s_box)).collect()
        };
        out.push((tau, s));
    }
    out
}
