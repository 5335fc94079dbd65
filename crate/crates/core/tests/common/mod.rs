//! Desk problems, initial data and independent oracles shared by the
//! integration tests.

#![allow(dead_code)]

use hjbd_core::calculus::Functional;
use hjbd_core::math::Matrix;
use hjbd_core::problem::{ControlSet, Dynamics, RunningCost, TerminalCost};
use hjbd_core::value::SearchConfig;
use hjbd_core::{History, ProblemSpec, Result, TimeGrid};
use rand::Rng;

pub const DELAY: f64 = 0.5;

pub fn scalar(v: f64) -> Matrix {
    Matrix::new(1, 1, vec![v]).unwrap()
}

pub fn grid(m: usize) -> TimeGrid {
    TimeGrid::new(0.0, 1.0, DELAY, m).unwrap()
}

/// `ẋ = x(t - h) + u`, `f⁰ = u²`, `σ = z²`, `U_d = {-1, 0, 1}`.
pub fn linear_delay(m: usize) -> ProblemSpec {
    let dynamics = Dynamics::LinearDelay { a: scalar(0.0), b: scalar(1.0), c: scalar(1.0) };
    ProblemSpec::new(grid(m), dynamics, RunningCost::quadratic(1.0), TerminalCost::quadratic(1, 1.0), ControlSet::interval(-1.0, 1.0, 3).unwrap()).unwrap()
}

/// `ẋ = x̂(1 - ŷ) + u` with the clip at 2, `f⁰ = u²/2`, `σ = z²`, `U_d = {-1, 0, 1}`.
pub fn logistic(m: usize) -> ProblemSpec {
    let dynamics = Dynamics::Logistic { a: 1.0, c: 1.0, r_max: 2.0 };
    ProblemSpec::new(grid(m), dynamics, RunningCost::quadratic(0.5), TerminalCost::quadratic(1, 1.0), ControlSet::interval(-1.0, 1.0, 3).unwrap()).unwrap()
}

pub fn desk_problems(m: usize) -> [(&'static str, ProblemSpec); 2] {
    [("linear_delay", linear_delay(m)), ("logistic", logistic(m))]
}

/// `ẋ = u` with a delay window the dynamics ignore, `f⁰ = u²`, `σ = z²`,
/// `U_d = {-1, -1/2, 0, 1/2, 1}`.
pub fn undelayed(m: usize) -> ProblemSpec {
    let dynamics = Dynamics::LinearDelay { a: scalar(0.0), b: scalar(0.0), c: scalar(1.0) };
    ProblemSpec::new(grid(m), dynamics, RunningCost::quadratic(1.0), TerminalCost::quadratic(1, 1.0), ControlSet::interval(-1.0, 1.0, 5).unwrap()).unwrap()
}

/// Exhaustive search over controls constant on absolute blocks of length 1/8.
pub fn search(m: usize) -> SearchConfig {
    SearchConfig { block_len: (m / 4).max(1), ..SearchConfig::default() }
}

pub const Z0: [f64; 1] = [1.0];

/// `w(ξ)` rising linearly from 1/2 at `-h` to 1 at `0`.
pub fn w0(m: usize) -> History {
    History::linear(DELAY, m, &[0.5], &[1.0]).unwrap()
}

/// Random history in the sup-ball of radius `alpha`: a random piecewise
/// linear profile, with a jump at a random node half of the time.
pub fn random_history(rng: &mut impl Rng, m: usize, n: usize, alpha: f64) -> History {
    let knots: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.gen_range(-alpha..=alpha) / (n as f64).sqrt()).collect()).collect();
    let w = History::from_fn(DELAY, m, n, |xi| {
        let s = 3.0 * (xi + DELAY) / DELAY;
        let i = (s.floor() as usize).min(2);
        let f = s - i as f64;
        knots[i].iter().zip(&knots[i + 1]).map(|(a, b)| a + f * (b - a)).collect()
    })
    .unwrap();
    if rng.gen_bool(0.5) {
        let node = rng.gen_range(1..=m);
        let left: Vec<f64> = (0..n).map(|_| rng.gen_range(-alpha..=alpha) / (n as f64).sqrt()).collect();
        w.with_jump_left(node, left).unwrap()
    } else {
        w
    }
}

pub fn random_vector(rng: &mut impl Rng, n: usize, alpha: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-alpha..=alpha) / (n as f64).sqrt()).collect()
}

/// Semi-Lagrangian solution of the undelayed problem's Bellman equation
/// `V(t, x) = min_u [u² dt + V(t + dt, x + u dt)]`, `V(ϑ, x) = x²`, with
/// `dx = dt/2` so that every control in `U_d` moves exactly onto the grid.
/// Between grid points and times it is interpolated linearly.
pub struct SemiLagrangian {
    dt: f64,
    dx: f64,
    x_max: f64,
    /// `values[k]` is the profile at time `k·dt`.
    values: Vec<Vec<f64>>,
}

impl SemiLagrangian {
    pub fn solve(steps: usize, x_max: f64) -> Self {
        let dt = 1.0 / steps as f64;
        let dx = 0.5 * dt;
        let cells = (2.0 * x_max / dx).round() as usize;
        let xs: Vec<f64> = (0..=cells).map(|i| -x_max + i as f64 * dx).collect();
        let mut values = vec![Vec::new(); steps + 1];
        values[steps] = xs.iter().map(|x| x * x).collect();
        let moves: [(i64, f64); 5] = [(-2, 1.0), (-1, 0.25), (0, 0.0), (1, 0.25), (2, 1.0)];
        for k in (0..steps).rev() {
            let next = &values[k + 1];
            let profile = (0..=cells)
                .map(|i| {
                    moves
                        .iter()
                        .map(|&(d, cost)| {
                            let j = (i as i64 + d).clamp(0, cells as i64) as usize;
                            cost * dt + next[j]
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            values[k] = profile;
        }
        Self { dt, dx, x_max, values }
    }

    fn at_time(&self, k: usize, x: f64) -> f64 {
        let row = &self.values[k];
        let s = ((x + self.x_max) / self.dx).clamp(0.0, (row.len() - 1) as f64);
        let i = (s.floor() as usize).min(row.len() - 2);
        let f = s - i as f64;
        row[i] + f * (row[i + 1] - row[i])
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        let s = (t / self.dt).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.values.len() - 2);
        let f = s - k as f64;
        if f < 1e-9 {
            return self.at_time(k, x);
        }
        (1.0 - f) * self.at_time(k, x) + f * self.at_time(k + 1, x)
    }
}

impl Functional for SemiLagrangian {
    fn eval(&self, t: f64, z: &[f64], _w: &History) -> Result<f64> {
        Ok(self.value(t, z[0]))
    }
}
