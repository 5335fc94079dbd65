//! Randomized invariants of the state space, the Hamiltonian, the
//! integrator, the value search, the calculus and the checkers.

mod common;

use common::*;
use hjbd_core::calculus::{chain_rule_check, dir_deriv, DirectionTable, Mu, Smooth};
use hjbd_core::feedback::{synthesize, FeedbackConfig, ShiftSource};
use hjbd_core::integrator::{integrate, ControlSignal};
use hjbd_core::math::{self, Matrix};
use hjbd_core::problem::{ControlSet, Dynamics, RunningCost, TerminalCost};
use hjbd_core::solutions::{minimax_check, omega, sample_characteristics, MinimaxConfig};
use hjbd_core::value::{control_transplant, value, value_lipschitz, SearchConfig, ValueFunctional};
use hjbd_core::{History, ProblemSpec, Trajectory};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_control(rng: &mut ChaCha8Rng, spec: &ProblemSpec, start: usize) -> ControlSignal {
    let len = spec.grid().last_node() - start;
    ControlSignal::new(start, (0..len).map(|_| rng.gen_range(0..spec.controls().len())).collect())
}

/// Two-dimensional problem with coupled saturated dynamics and a box lattice.
fn saturated(m: usize) -> ProblemSpec {
    let a = Matrix::from_rows(&[vec![-0.5, 1.0], vec![0.3, 0.2]]).unwrap();
    let b = Matrix::from_rows(&[vec![0.4, 0.0], vec![-0.6, 0.5]]).unwrap();
    let c = Matrix::identity(2);
    let controls = ControlSet::box_lattice(vec![-1.0, -1.0], vec![1.0, 1.0], 3).unwrap();
    ProblemSpec::new(grid(m), Dynamics::Saturated { a, b, c }, RunningCost::quadratic(0.5), TerminalCost::quadratic(2, 1.0), controls).unwrap()
}

fn all_problems(m: usize) -> Vec<ProblemSpec> {
    vec![linear_delay(m), logistic(m), undelayed(m), saturated(m)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_axioms(seed in any::<u64>(), c in -3.0f64..3.0, n in 1usize..4) {
        let mut r = rng(seed);
        let a = random_history(&mut r, 16, n, 2.0);
        let b = random_history(&mut r, 16, n, 2.0);
        let sum = a.combine(1.0, &b, 1.0).unwrap();
        let scaled = a.combine(c, &a, 0.0).unwrap();
        for (na, nb, ns, nc) in [
            (a.norm_l1(), b.norm_l1(), sum.norm_l1(), scaled.norm_l1()),
            (a.norm_sup(), b.norm_sup(), sum.norm_sup(), scaled.norm_sup()),
        ] {
            prop_assert!(na >= 0.0);
            prop_assert!((nc - c.abs() * na).abs() <= 1e-12 * (1.0 + na));
            prop_assert!(ns <= na + nb + 1e-12);
        }
        prop_assert!(a.norm_l1() <= DELAY * a.norm_sup() + 1e-12);
    }

    #[test]
    fn segment_of_extension_returns_the_history(seed in any::<u64>(), xi in -0.5f64..-1e-9) {
        let mut r = rng(seed);
        let spec = linear_delay(16);
        let w = random_history(&mut r, 16, 1, 1.0);
        let z = random_vector(&mut r, 1, 1.0);
        let x = integrate(&spec, 0.0, &z, &w, &random_control(&mut r, &spec, 0)).unwrap().trajectory;
        let seg = x.segment(0).unwrap();
        prop_assert_eq!(seg.eval(xi), w.eval(xi));
        for j in 0..16 {
            prop_assert_eq!(seg.sample(j), w.sample(j));
            prop_assert_eq!(seg.left_limit(j + 1), w.left_limit(j + 1));
        }
    }

    #[test]
    fn l1_quadrature_is_second_order(a in 0.1f64..1.0, b in 0.5f64..4.0, c in 0.0f64..6.3, d in 1.5f64..2.5) {
        let f = |xi: f64| vec![a * (b * xi + c).sin() + d];
        let exact = History::from_fn(DELAY, 4096, 1, f).unwrap().norm_l1();
        for m in [8usize, 16, 32] {
            let step = DELAY / m as f64;
            let err = (History::from_fn(DELAY, m, 1, f).unwrap().norm_l1() - exact).abs();
            prop_assert!(err <= DELAY * a * b * b * step * step / 12.0 + 1e-12, "m = {}: {}", m, err);
        }
    }

    #[test]
    fn hamiltonian_is_concave_in_s(seed in any::<u64>(), which in 0usize..4) {
        let spec = &all_problems(8)[which];
        let n = spec.dim();
        let mut r = rng(seed);
        let (x, y) = (random_vector(&mut r, n, 2.0), random_vector(&mut r, n, 2.0));
        let (s1, s2) = (random_vector(&mut r, n, 5.0), random_vector(&mut r, n, 5.0));
        let mid: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| 0.5 * (a + b)).collect();
        let h = |s: &[f64]| spec.hamiltonian(0.0, &x, &y, s).0;
        prop_assert!(h(&mid) >= 0.5 * (h(&s1) + h(&s2)) - 1e-12);
    }

    #[test]
    fn hamiltonian_is_lipschitz_in_state(seed in any::<u64>(), which in 0usize..4) {
        let spec = &all_problems(8)[which];
        let n = spec.dim();
        let mut r = rng(seed);
        let (x, y, x2, y2) = (random_vector(&mut r, n, 2.0), random_vector(&mut r, n, 2.0), random_vector(&mut r, n, 2.0), random_vector(&mut r, n, 2.0));
        let s = random_vector(&mut r, n, 5.0);
        let lhs = (spec.hamiltonian(0.0, &x, &y, &s).0 - spec.hamiltonian(0.0, &x2, &y2, &s).0).abs();
        let rhs = spec.lambda_h(2.0) * (math::dist(&x, &x2) + math::dist(&y, &y2)) * (1.0 + math::norm(&s));
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn hamiltonian_is_a_lower_bound(seed in any::<u64>(), which in 0usize..4) {
        let spec = &all_problems(8)[which];
        let n = spec.dim();
        let mut r = rng(seed);
        let (x, y, s) = (random_vector(&mut r, n, 2.0), random_vector(&mut r, n, 2.0), random_vector(&mut r, n, 5.0));
        let (h, argmin) = spec.hamiltonian(0.0, &x, &y, &s);
        for u in spec.controls().iter() {
            prop_assert!(h <= math::dot(&spec.f(0.0, &x, &y, u), &s) + spec.f0(0.0, &x, &y, u) + 1e-12);
        }
        let u = spec.controls().get(argmin);
        prop_assert!((h - math::dot(&spec.f(0.0, &x, &y, u), &s) - spec.f0(0.0, &x, &y, u)).abs() < 1e-12);
    }

    #[test]
    fn motions_respect_the_a_priori_bounds(seed in any::<u64>(), which in 0usize..4, alpha in 0.1f64..3.0) {
        let spec = &all_problems(16)[which];
        let n = spec.dim();
        let mut r = rng(seed);
        let w = random_history(&mut r, 16, n, alpha);
        let z = random_vector(&mut r, n, alpha);
        let bounds = spec.growth_bounds(alpha);
        let x = integrate(spec, 0.0, &z, &w, &random_control(&mut r, spec, 0)).unwrap().trajectory;
        for k in 0..=spec.grid().last_node() {
            prop_assert!(math::norm(x.at(k as isize)) <= bounds.alpha_x);
        }
        for k in 0..spec.grid().last_node() {
            prop_assert!(math::norm(&x.slope(k)) <= bounds.lambda_x);
        }
    }

    #[test]
    fn motions_are_lipschitz_in_initial_data(seed in any::<u64>(), which in 0usize..4) {
        let spec = &all_problems(16)[which];
        let n = spec.dim();
        let mut r = rng(seed);
        let alpha = 1.5;
        let (w1, w2) = (random_history(&mut r, 16, n, alpha), random_history(&mut r, 16, n, alpha));
        let (z1, z2) = (random_vector(&mut r, n, alpha), random_vector(&mut r, n, alpha));
        let u = random_control(&mut r, spec, 0);
        let a = integrate(spec, 0.0, &z1, &w1, &u).unwrap();
        let b = integrate(spec, 0.0, &z2, &w2, &u).unwrap();
        let last = spec.grid().last_node();
        let lhs = math::dist(a.trajectory.at(last as isize), b.trajectory.at(last as isize))
            + a.trajectory.segment(last).unwrap().sub(&b.trajectory.segment(last).unwrap()).unwrap().norm_l1()
            + (a.running_total() - b.running_total()).abs();
        let rhs = spec.lipschitz_bound(alpha) * (math::dist(&z1, &z2) + w1.sub(&w2).unwrap().norm_l1());
        prop_assert!(lhs <= rhs, "{} > {}", lhs, rhs);
    }
}

#[test]
fn heun_is_second_order() {
    let dynamics = Dynamics::LinearDelay { a: scalar(-1.0), b: scalar(0.5), c: scalar(1.0) };
    let end = |m: usize| -> f64 {
        let spec =
            ProblemSpec::new(grid(m), dynamics.clone(), RunningCost::zero(), TerminalCost::zero(1), ControlSet::interval(-1.0, 1.0, 3).unwrap()).unwrap();
        let w = History::from_fn(DELAY, m, 1, |xi| vec![(3.0 * xi).cos()]).unwrap();
        integrate(&spec, 0.0, &[1.0], &w, &ControlSignal::constant(&spec, 0, 2)).unwrap().trajectory.at(2 * m as isize)[0]
    };
    let (a, b, c) = (end(16), end(32), end(64));
    let ratio = (a - b).abs() / (b - c).abs();
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn value_is_reproduced_by_its_control(seed in any::<u64>(), which in 0usize..2) {
        let (_, spec) = &desk_problems(8)[which];
        let mut r = rng(seed);
        let w = random_history(&mut r, 8, 1, 1.0);
        let z = random_vector(&mut r, 1, 1.0);
        let start = r.gen_range(0..spec.grid().last_node());
        let t = spec.grid().node_time(start);
        let v = value(spec, t, &z, &w, &search(8)).unwrap();
        let again = integrate(spec, t, &z, &w, &v.control).unwrap().cost(spec).unwrap();
        prop_assert!((again - v.value).abs() <= 1e-12);
    }

    #[test]
    fn more_controls_never_raise_the_value(seed in any::<u64>()) {
        let coarse = linear_delay(8);
        let fine = coarse.with_controls(ControlSet::interval(-1.0, 1.0, 5).unwrap()).unwrap();
        let mut r = rng(seed);
        let w = random_history(&mut r, 8, 1, 1.0);
        let z = random_vector(&mut r, 1, 1.0);
        let cfg = SearchConfig { block_len: 4, ..SearchConfig::default() };
        let a = value(&coarse, 0.0, &z, &w, &cfg).unwrap();
        let b = value(&fine, 0.0, &z, &w, &cfg).unwrap();
        prop_assert!(a.exhaustive && b.exhaustive);
        prop_assert!(b.value <= a.value + 1e-12);
    }

    #[test]
    fn value_is_lipschitz_in_initial_data(seed in any::<u64>(), which in 0usize..2) {
        let (_, spec) = &desk_problems(8)[which];
        let mut r = rng(seed);
        let alpha = 1.0;
        let (w1, w2) = (random_history(&mut r, 8, 1, alpha), random_history(&mut r, 8, 1, alpha));
        let (z1, z2) = (random_vector(&mut r, 1, alpha), random_vector(&mut r, 1, alpha));
        let a = value(spec, 0.0, &z1, &w1, &search(8)).unwrap().value;
        let b = value(spec, 0.0, &z2, &w2, &search(8)).unwrap().value;
        let bound = value_lipschitz(spec, alpha) * (math::dist(&z1, &z2) + w1.sub(&w2).unwrap().norm_l1());
        prop_assert!((a - b).abs() <= bound + 1e-9);
    }

    #[test]
    fn transplanted_control_tracks_the_value_in_time(seed in any::<u64>()) {
        let spec = linear_delay(32);
        let mut r = rng(seed);
        let w = random_history(&mut r, 32, 1, 1.0);
        let z = random_vector(&mut r, 1, 1.0);
        let cfg = search(32);
        let base = value(&spec, 0.25, &z, &w, &cfg).unwrap();
        let start = base.control.start();
        let mut gaps = Vec::new();
        for shift in [8usize, 4, 2, 1] {
            let moved = control_transplant(&base.control, start - shift).unwrap();
            let t = spec.grid().node_time(start - shift);
            let cost = integrate(&spec, t, &z, &w, &moved).unwrap().cost(&spec).unwrap();
            let v = value(&spec, t, &z, &w, &cfg).unwrap().value;
            prop_assert!(v <= cost + 1e-12);
            gaps.push((cost - base.value).abs());
        }
        // first-order decay of the transplant defect with the time shift
        prop_assert!(gaps[3] <= 0.25 * gaps[0] + 1e-9, "{:?}", gaps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn smooth_directional_derivatives_are_exact_to_first_order(seed in any::<u64>()) {
        let g = hjbd_core::TimeGrid::new(0.0, 1.0, 0.5, 512).unwrap();
        let phi = Smooth::new(
            |t: f64, z: &[f64], w: &History| t * t + z[0] * z[1] + w.norm_l1(),
            |t: f64, z: &[f64], w: &History| (2.0 * t + math::norm(z) - math::norm(w.sample(0)), vec![z[1], z[0]]),
        );
        let mut r = rng(seed);
        let z = random_vector(&mut r, 2, 1.0);
        let w = History::from_fn(0.5, 512, 2, |xi| vec![1.0 + xi, 0.5 - xi]).unwrap();
        let l = random_vector(&mut r, 2, 2.0);
        let est = dir_deriv(&phi, &g, 100, &z, &w, &l, &[4, 2, 1], 1).unwrap();
        let t = g.node_time(100);
        let exact = 2.0 * t + math::norm(&z) - math::norm(w.sample(0)) + l[0] * z[1] + l[1] * z[0];
        prop_assert!((est.lower - exact).abs() < 0.02 && (est.upper - exact).abs() < 0.02);
    }

    #[test]
    fn smooth_membership_matches_the_gradient(seed in any::<u64>(), dp in -1.0f64..1.0, dp0 in -1.0f64..1.0) {
        let g = hjbd_core::TimeGrid::new(0.0, 1.0, 0.5, 512).unwrap();
        let phi = Smooth::new(|t: f64, z: &[f64], _w: &History| t + z[0] * z[0], |_t, z: &[f64], _w: &History| (1.0, vec![2.0 * z[0]]));
        let mut r = rng(seed);
        let z = random_vector(&mut r, 1, 1.0);
        let w = History::constant(0.5, 512, &z).unwrap();
        let dirs = vec![vec![1.0], vec![-1.0], vec![0.5], vec![-0.5]];
        let table = DirectionTable::build(&phi, &g, 0, &z, &w, &dirs, &[1], 1).unwrap();
        let tol = 1e-2;
        let p = vec![2.0 * z[0] + dp];
        // a gradient off by more than the tolerance violates one of ±1
        if dp.abs() > 2.0 * tol {
            prop_assert!(!table.subdiff(1.0, &p, tol).member);
            prop_assert!(!table.superdiff(1.0, &p, tol).member);
        }
        let grad = vec![2.0 * z[0]];
        prop_assert_eq!(table.subdiff(1.0 - dp0.abs(), &grad, tol).member, true);
        prop_assert_eq!(table.superdiff(1.0 + dp0.abs(), &grad, tol).member, true);
        if dp0.abs() > 2.0 * tol {
            prop_assert!(!table.subdiff(1.0 + dp0.abs(), &grad, tol).member);
            prop_assert!(!table.superdiff(1.0 - dp0.abs(), &grad, tol).member);
        }
    }

    #[test]
    fn mu_chain_rule_defect_is_first_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let amp: Vec<f64> = (0..2).map(|_| r.gen_range(0.2..0.8)).collect();
        let freq: Vec<f64> = (0..2).map(|_| r.gen_range(1.0..4.0)).collect();
        let phase: Vec<f64> = (0..2).map(|_| r.gen_range(0.0..6.3)).collect();
        let path = |t: f64| -> Vec<f64> { (0..2).map(|i| 1.0 + amp[i] * (freq[i] * t + phase[i]).sin()).collect() };
        // the centered difference adds an O(Δ²) term scaling with (2λ)³, so λ
        // stays near 1 to see the first-order slope term
        let mu = Mu::new(1.2, 0.5 * Mu::epsilon_star(1.2, 0.0, 1.0), 0.0, 1.0).unwrap();
        let defect = |m: usize| -> f64 {
            let g = grid(m);
            let w = History::from_fn(DELAY, m, 2, &path).unwrap();
            let forward: Vec<Vec<f64>> = (0..=g.last_node()).map(|k| path(g.node_time(k))).collect();
            let p = Trajectory::extend(&g, 0, &path(0.0), &w, &forward).unwrap();
            chain_rule_check(&mu, &p).unwrap()
        };
        let (coarse, fine) = (defect(256), defect(512));
        prop_assert!(fine < 0.6 * coarse, "{} vs {}", fine, coarse);
    }

    #[test]
    fn omega_telescopes(seed in any::<u64>(), t in 0usize..8, a in 0usize..8, b in 0usize..8) {
        let spec = linear_delay(8);
        let mut r = rng(seed);
        let w = random_history(&mut r, 8, 1, 1.0);
        let z = random_vector(&mut r, 1, 1.0);
        let fam = sample_characteristics(&spec, 0.0, &z, &w, 0.1, 5, seed).unwrap();
        let phi = hjbd_core::calculus::FromFn(|t: f64, z: &[f64], w: &History| t * z[0] + w.norm_l1() * w.norm_l1());
        let s = random_vector(&mut r, 1, 3.0);
        let mut nodes = [t, t + a, t + a + b];
        for k in &mut nodes {
            *k = (*k).min(16);
        }
        for m in &fam.members {
            let whole = omega(&spec, &phi, &m.trajectory, nodes[0], nodes[2], &s).unwrap();
            let split = omega(&spec, &phi, &m.trajectory, nodes[0], nodes[1], &s).unwrap() + omega(&spec, &phi, &m.trajectory, nodes[1], nodes[2], &s).unwrap();
            prop_assert!((whole - split).abs() <= 1e-12 * (1.0 + whole.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn enlarging_eta_widens_the_omega_range(seed in any::<u64>(), tau in 1usize..=16) {
        let spec = linear_delay(8);
        let mut r = rng(seed);
        let w = random_history(&mut r, 8, 1, 1.0);
        let z = random_vector(&mut r, 1, 1.0);
        let s = random_vector(&mut r, 1, 3.0);
        let phi = hjbd_core::calculus::FromFn(|_t, z: &[f64], _w: &History| z[0] * z[0]);
        let cfg = MinimaxConfig { zeta_tol: f64::INFINITY, ..MinimaxConfig::default() };
        let small = sample_characteristics(&spec, 0.0, &z, &w, 0.0, 6, seed).unwrap();
        let large = sample_characteristics(&spec, 0.0, &z, &w, 0.5, 6, seed).unwrap();
        let a = minimax_check(&spec, &phi, &small, tau, &s, &cfg).unwrap();
        let b = minimax_check(&spec, &phi, &large, tau, &s, &cfg).unwrap();
        prop_assert!(b.inf_omega <= a.inf_omega && b.sup_omega >= a.sup_omega);
    }

    #[test]
    fn synthesis_is_deterministic(seed in any::<u64>()) {
        let spec = logistic(8);
        let mut r = rng(seed);
        let w = random_history(&mut r, 8, 1, 1.0);
        let z = random_vector(&mut r, 1, 1.0);
        let phi = ValueFunctional { spec: &spec, config: search(8) };
        let cfg = FeedbackConfig::uniform(&spec, 0.0, 8, ShiftSource::ValueGradient { delta: 1e-2 }).unwrap();
        let a = synthesize(&spec, &phi, 0.0, &z, &w, &cfg).unwrap();
        let b = synthesize(&spec, &phi, 0.0, &z, &w, &cfg).unwrap();
        prop_assert_eq!(a.control, b.control);
        prop_assert_eq!(a.cost.to_bits(), b.cost.to_bits());
    }
}
