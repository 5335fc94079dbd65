//! Mean-value-inequality search: penalized minimization of
//!
//! `γ_k(τ, v, g, ξ, l) = φ(τ, v, x^g_τ) + k‖v - z - l(ξ - t)‖² + k(τ - ξ)² - ε_*(ξ - t)`
//!
//! over `Ω_δ × L × [t, t + δ] × L`, followed by extraction of a lower
//! subgradient `(p₀, p)` whose pairing with every `l ∈ L` should be positive.
//!
//! `τ` runs over nodes of the supplied grid, `g` and `l` over barycentric
//! lattices of the generators of `L`, `v` over shrinking boxes, and `ξ` is
//! eliminated exactly: for fixed `(τ, v, l)` the penalty is a quadratic in `ξ`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{default_steps, dir_deriv, Functional};
use crate::error::{Error, Result};
use crate::histories::{History, TimeGrid, Trajectory};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct MviConfig {
    pub k_schedule: Vec<f64>,
    /// Requested `δ`; shrunk if it violates `δ < ε_* / (λ_φ (1 + 2λ_L))`.
    pub delta: f64,
    /// `v` boxes shrink until their half-width is below `tol_factor · ε_* / (2k)`.
    pub tol_factor: f64,
    pub max_rounds: usize,
    /// Barycentric lattice resolution for `g` and `l`.
    pub lattice: usize,
    /// Largest step (in nodes) for the hypothesis gate's quotients.
    pub gate_nodes: usize,
    /// Overrides the functional's declared Lipschitz bound.
    pub lambda_phi: Option<f64>,
    pub seed: u64,
}

impl Default for MviConfig {
    fn default() -> Self {
        Self { k_schedule: vec![1e2, 1e3, 1e4], delta: 0.1, tol_factor: 1e-3, max_rounds: 60, lattice: 4, gate_nodes: 4, lambda_phi: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MviIncumbent {
    pub k: f64,
    pub tau: f64,
    pub v: Vec<f64>,
    pub g: Vec<f64>,
    pub xi: f64,
    pub l: Vec<f64>,
    pub gamma: f64,
    pub p0: f64,
    pub p: Vec<f64>,
    /// `p₀ + ⟨l_i, p⟩` per generator.
    pub margins: Vec<f64>,
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MviReport {
    /// Lower directional derivative estimates over the sampled `l ∈ L`.
    pub gate: Vec<f64>,
    pub epsilon_star: f64,
    pub delta: f64,
    pub lambda_phi: f64,
    pub lambda_phi_estimated: bool,
    pub incumbents: Vec<MviIncumbent>,
}

impl MviReport {
    pub fn final_margin(&self) -> f64 {
        self.incumbents.last().map_or(f64::NEG_INFINITY, |i| i.min_margin)
    }
}

pub fn mvi_search(phi: &dyn Functional, grid: &TimeGrid, t_node: usize, z: &[f64], w: &History, generators: &[Vec<f64>], cfg: &MviConfig) -> Result<MviReport> {
    if generators.is_empty() {
        return Err(Error::Empty("direction set L"));
    }
    let n = z.len();
    if let Some(g) = generators.iter().find(|g| g.len() != n) {
        return Err(Error::Dimension { expected: n, found: g.len() });
    }
    if t_node >= grid.last_node() {
        return Err(Error::Domain("mean value search needs t < ϑ".into()));
    }
    let t = grid.node_time(t_node);
    if !(cfg.delta > 0.0 && cfg.delta < grid.theta() - t) {
        return Err(Error::Domain(alloc::format!("δ = {} must lie in (0, ϑ - t)", cfg.delta)));
    }

    // hypothesis gate over the generators and their pairwise midpoints
    let steps = default_steps(grid, t_node, cfg.gate_nodes);
    let mut samples: Vec<Vec<f64>> = generators.to_vec();
    for i in 0..generators.len() {
        for j in i + 1..generators.len() {
            samples.push(generators[i].iter().zip(&generators[j]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    let gate = samples.iter().map(|l| dir_deriv(phi, grid, t_node, z, w, l, &steps, 0).map(|e| e.lower)).collect::<Result<Vec<f64>>>()?;
    let min_gate = gate.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_gate > 0.0) {
        return Err(Error::Hypothesis(alloc::format!("lower directional derivative {min_gate} is not positive on L")));
    }
    let epsilon_star = 0.49 * min_gate;

    let lambda_l = generators.iter().map(|g| math::norm(g)).fold(0.0, f64::max);
    let alpha = math::norm(z).max(w.norm_sup()) + lambda_l * (grid.theta() - t) + cfg.delta;
    let (lambda_phi, estimated) = match cfg.lambda_phi.or_else(|| phi.lipschitz_bound(alpha)) {
        Some(l) => (l, false),
        None => (estimate_lipschitz(phi, t, z, w, cfg.seed)?, true),
    };
    let delta = cfg.delta.min(0.9 * epsilon_star / (lambda_phi * (1.0 + 2.0 * lambda_l)).max(f64::MIN_POSITIVE));
    let tau_nodes = ((delta / grid.step() + 1e-9) as usize).min(grid.last_node() - t_node);

    let search = Search { phi, grid, t_node, t, z, w, generators, delta, epsilon_star, cfg };
    let mut incumbents = Vec::with_capacity(cfg.k_schedule.len());
    for &k in &cfg.k_schedule {
        let best = search.minimize(k, tau_nodes)?;
        let tau = grid.node_time(best.tau_node);
        let l = combine(generators, &best.lw);
        let g = combine(generators, &best.gw);
        let xi = t + best.s;
        let resid: Vec<f64> = best.v.iter().zip(z).zip(&l).map(|((v, z), l)| v - z - l * best.s).collect();
        let g_resid: Vec<f64> = best.v.iter().zip(z).zip(&g).map(|((v, z), g)| v - z - g * (tau - t)).collect();
        let p0 = -lambda_phi * math::norm(&g_resid) - 2.0 * k * (tau - xi);
        let p = math::scale(&resid, -2.0 * k);
        let margins: Vec<f64> = generators.iter().map(|li| p0 + math::dot(li, &p)).collect();
        let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
        incumbents.push(MviIncumbent { k, tau, v: best.v, g, xi, l, gamma: best.gamma, p0, p, margins, min_margin });
    }
    Ok(MviReport { gate, epsilon_star, delta, lambda_phi, lambda_phi_estimated: estimated, incumbents })
}

/// Largest observed ratio `|Δφ| / (‖Δz‖ + ‖Δw‖₁)` over random probes,
/// inflated by half as a safety margin.
fn estimate_lipschitz(phi: &dyn Functional, t: f64, z: &[f64], w: &History, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = phi.eval(t, z, w)?;
    let mut best: f64 = 0.0;
    for _ in 0..64 {
        let scale = libm::pow(10.0, -(rng.gen_range(1..5) as f64));
        let dz: Vec<f64> = z.iter().map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let dw: Vec<f64> = (0..w.dim()).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let shift = History::constant(w.delay(), w.m(), &dw)?;
        let w2 = w.combine(1.0, &shift, 1.0)?;
        let z2 = math::add(z, &dz);
        let denom = math::norm(&dz) + shift.norm_l1();
        if denom > 0.0 {
            best = best.max((phi.eval(t, &z2, &w2)? - base).abs() / denom);
        }
    }
    Ok(1.5 * best.max(f64::EPSILON))
}

fn combine(generators: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; generators[0].len()];
    for (g, &a) in generators.iter().zip(weights) {
        math::axpy(&mut out, a, g);
    }
    out
}

/// All weight vectors with entries in `{0, 1/r, …, 1}` summing to one, in
/// lexicographic order.
fn simplex_lattice(dim: usize, r: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / r as f64).collect());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(dim, left - c, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, r.max(1), r.max(1), &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone)]
struct Best {
    gamma: f64,
    tau_node: usize,
    v: Vec<f64>,
    s: f64,
    gw: Vec<f64>,
    lw: Vec<f64>,
}

struct Search<'a> {
    phi: &'a dyn Functional,
    grid: &'a TimeGrid,
    t_node: usize,
    t: f64,
    z: &'a [f64],
    w: &'a History,
    generators: &'a [Vec<f64>],
    delta: f64,
    epsilon_star: f64,
    cfg: &'a MviConfig,
}

impl Search<'_> {
    fn segment(&self, tau_node: usize, g: &[f64]) -> Result<History> {
        Trajectory::extend_linear(self.grid, self.t_node, self.z, self.w, g)?.segment(tau_node)
    }

    /// `min_{s ∈ [0, δ]} k‖v - z - l s‖² + k(τ - t - s)² - ε_* s`.
    fn penalty(&self, k: f64, dt: f64, v: &[f64], l: &[f64]) -> (f64, f64) {
        let a: Vec<f64> = v.iter().zip(self.z).map(|(v, z)| v - z).collect();
        let ll = math::dot(l, l);
        let s = ((math::dot(l, &a) + dt + self.epsilon_star / (2.0 * k)) / (ll + 1.0)).clamp(0.0, self.delta);
        let r: f64 = a.iter().zip(l).map(|(a, l)| (a - l * s) * (a - l * s)).sum();
        (k * r + k * (dt - s) * (dt - s) - self.epsilon_star * s, s)
    }

    /// Distance from `v` to `z + conv(L)·(τ - t)`; exact for one or two
    /// generators, lattice-approximated otherwise.
    fn omega_distance(&self, dt: f64, v: &[f64]) -> f64 {
        let a: Vec<f64> = v.iter().zip(self.z).map(|(v, z)| v - z).collect();
        match self.generators {
            [g] => math::dist(&a, &math::scale(g, dt)),
            [g0, g1] => {
                let p0 = math::scale(g0, dt);
                let d = math::scale(&math::sub(g1, g0), dt);
                let dd = math::dot(&d, &d);
                let c = if dd > 0.0 { (math::dot(&math::sub(&a, &p0), &d) / dd).clamp(0.0, 1.0) } else { 0.0 };
                let mut q = p0;
                math::axpy(&mut q, c, &d);
                math::dist(&a, &q)
            }
            gens => simplex_lattice(gens.len(), 8).iter().map(|wts| math::dist(&a, &math::scale(&combine(gens, wts), dt))).fold(f64::INFINITY, f64::min),
        }
    }

    /// Minimizes over `v` by shrinking 5-point-per-axis boxes.
    fn minimize_v(&self, k: f64, tau_node: usize, seg: &History, l: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
        let n = self.z.len();
        let tau = self.grid.node_time(tau_node);
        let dt = tau - self.t;
        let mut center: Vec<f64> = self.z.iter().zip(l).map(|(z, l)| z + l * dt).collect();
        let mut half = self.delta;
        let tol = self.cfg.tol_factor * self.epsilon_star / (2.0 * k);
        let mut best = (f64::INFINITY, center.clone(), 0.0);
        let offsets = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let count = offsets.len().pow(n as u32);
        let mut v = vec![0.0; n];
        for _ in 0..self.cfg.max_rounds {
            for idx in 0..count {
                let mut rest = idx;
                for i in 0..n {
                    v[i] = center[i] + half * offsets[rest % offsets.len()];
                    rest /= offsets.len();
                }
                if self.omega_distance(dt, &v) > self.delta * (1.0 + 1e-12) {
                    continue;
                }
                let (pen, s) = self.penalty(k, dt, &v, l);
                let gamma = self.phi.eval(tau, &v, seg)? + pen;
                if gamma < best.0 {
                    best = (gamma, v.clone(), s);
                }
            }
            center.clone_from(&best.1);
            if half <= tol {
                break;
            }
            half *= 0.5;
        }
        Ok(best)
    }

    fn minimize(&self, k: f64, tau_nodes: usize) -> Result<Best> {
        let gcount = self.generators.len();
        let lattice = if gcount == 1 { vec![vec![1.0]] } else { simplex_lattice(gcount, self.cfg.lattice) };
        let mut best: Option<Best> = None;
        for dn in 0..=tau_nodes {
            let tau_node = self.t_node + dn;
            for gw in &lattice {
                let seg = self.segment(tau_node, &combine(self.generators, gw))?;
                for lw in &lattice {
                    let l = combine(self.generators, lw);
                    let (gamma, v, s) = self.minimize_v(k, tau_node, &seg, &l)?;
                    if best.as_ref().is_none_or(|b| gamma < b.gamma) {
                        best = Some(Best { gamma, tau_node, v, s, gw: gw.clone(), lw: lw.clone() });
                    }
                }
            }
        }
        let mut best = best.expect("lattice is nonempty");
        if gcount > 1 {
            self.refine_weights(k, &mut best)?;
        }
        Ok(best)
    }

    /// Pairwise weight transfers with halving step, for `g` and `l`.
    fn refine_weights(&self, k: f64, best: &mut Best) -> Result<()> {
        let gcount = self.generators.len();
        let mut step = 0.5 / self.cfg.lattice as f64;
        for _ in 0..12 {
            for which in 0..2 {
                for i in 0..gcount {
                    for j in 0..gcount {
                        if i == j {
                            continue;
                        }
                        let mut cand = best.clone();
                        let wts = if which == 0 { &mut cand.gw } else { &mut cand.lw };
                        let moved = step.min(wts[j]);
                        if moved <= 0.0 {
                            continue;
                        }
                        wts[j] -= moved;
                        wts[i] += moved;
                        let seg = self.segment(cand.tau_node, &combine(self.generators, &cand.gw))?;
                        let (gamma, v, s) = self.minimize_v(k, cand.tau_node, &seg, &combine(self.generators, &cand.lw))?;
                        if gamma < best.gamma {
                            *best = Best { gamma, v, s, ..cand };
                        }
                    }
                }
            }
            step *= 0.5;
        }
        Ok(())
    }
}
