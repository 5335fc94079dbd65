use anyhow::{anyhow, bail, Context, Result};
use hjbd_core::calculus::{mvi_search, Mu, MviConfig};
use hjbd_core::feedback::{optimality_gap, FeedbackConfig, ShiftSource};
use hjbd_core::integrator::{integrate, ControlSignal};
use hjbd_core::solutions::{
    default_candidates, deriv_check, minimax_check, probe_catalog, probe_draws, sample_characteristics, terminal_check, viscosity_check, DerivConfig,
    MinimaxConfig, Probe, ViscosityConfig,
};
use hjbd_core::value::{value, value_lipschitz, SearchConfig};
use hjbd_core::{math, History, ProblemSpec, Trajectory};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{self, PointFile, ProblemFile};
use crate::functionals::{self, Candidate};
use crate::output::{num, sha256, vector, Artifacts, RunManifest};
use crate::{Command, Common, Outcome, Probes, Search};

/// Loaded inputs of one run.
struct Run {
    spec: ProblemSpec,
    point: Option<PointFile>,
    artifacts: Artifacts,
    pool: rayon::ThreadPool,
}

impl Run {
    fn new(command: &str, common: &Common, config: Value) -> Result<Self> {
        let text = config::read(&common.problem)?;
        let problem = ProblemFile::parse(&text)?;
        let spec = problem.build()?;
        let (point, point_sha256) = match &common.point {
            Some(path) => {
                let text = config::read(path)?;
                (Some(PointFile::parse(&text)?), Some(sha256(&text)))
            }
            None => (None, None),
        };
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            problem_sha256: sha256(&text),
            problem,
            point_sha256,
            point: point.clone(),
            seed: common.seed,
            config,
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build().context("cannot start worker threads")?;
        Ok(Self { spec, point, artifacts: Artifacts::new(&common.out, manifest)?, pool })
    }

    fn state(&self) -> Result<(f64, Vec<f64>, History)> {
        self.point.as_ref().ok_or_else(|| anyhow!("this command needs `--point <file>`"))?.state(&self.spec)
    }

    fn seed(&self) -> u64 {
        self.artifacts.manifest().seed
    }

    fn report(&self) {
        for path in self.artifacts.written() {
            println!("{}", path.display());
        }
    }
}

fn search_config(search: &Search, spec: &ProblemSpec) -> Result<SearchConfig> {
    if !(search.budget >= 1.0 && search.budget <= u64::MAX as f64) {
        bail!("`--budget` must be at least 1");
    }
    let block_len = if search.block_len == 0 { (spec.grid().m() / 4).max(1) } else { search.block_len };
    Ok(SearchConfig { budget: search.budget as u64, block_len, beam_width: search.beam_width, sweeps: search.sweeps })
}

fn search_json(cfg: &SearchConfig) -> Value {
    json!({ "budget": cfg.budget, "block_len": cfg.block_len, "beam_width": cfg.beam_width, "sweeps": cfg.sweeps })
}

/// Search settings resolved against the problem before the manifest exists.
fn resolve(common: &Common, search: &Search) -> Result<SearchConfig> {
    let problem = ProblemFile::parse(&config::read(&common.problem)?)?;
    search_config(search, &problem.build()?)
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Simulate { common, control, search } => {
            let cfg = resolve(&common, &search)?;
            let run = Run::new("simulate", &common, json!({ "control": control, "search": search_json(&cfg) }))?;
            simulate(run, &control, &cfg)
        }
        Command::Value { common, search } => {
            let cfg = resolve(&common, &search)?;
            let run = Run::new("value", &common, json!({ "search": search_json(&cfg) }))?;
            value_cmd(run, &cfg)
        }
        Command::Synthesize { common, search, phi, k, shift, delta, lambda, epsilon_fraction, eta, members } => {
            let cfg = resolve(&common, &search)?;
            let config = json!({
                "search": search_json(&cfg), "phi": phi, "k": k, "shift": shift, "delta": delta,
                "lambda": lambda, "epsilon_fraction": epsilon_fraction, "eta": eta, "members": members,
            });
            let run = Run::new("synthesize", &common, config)?;
            let source = match shift.as_str() {
                "value-gradient" => ShiftSource::ValueGradient { delta },
                "zero" => ShiftSource::Zero,
                "envelope" => {
                    let (t, _, _) = run.state()?;
                    let epsilon = epsilon_fraction * Mu::epsilon_star(lambda, t, run.spec.grid().theta());
                    ShiftSource::Envelope { lambda, epsilon, eta, members, seed: common.seed }
                }
                other => bail!("unknown `--shift {other}`; expected value-gradient, envelope or zero"),
            };
            synthesize(run, &phi, k, source, &cfg)
        }
        Command::CheckMinimax { common, search, probes, draws, s_box, eta, family, zeta } => {
            let cfg = resolve(&common, &search)?;
            let config = json!({
                "search": search_json(&cfg), "phi": probes.phi, "probes": probes.probes, "draws": draws,
                "s_box": s_box, "eta": eta, "family": family, "zeta": zeta, "minimax": minimax_json(&MinimaxConfig { zeta_tol: zeta, ..MinimaxConfig::default() }),
            });
            let run = Run::new("check-minimax", &common, config)?;
            check_minimax(run, &probes, &cfg, draws, s_box, eta, family, zeta)
        }
        Command::CheckViscosity { common, search, probes, spread, levels, tol } => {
            let cfg = resolve(&common, &search)?;
            let visc = ViscosityConfig { seed: common.seed, tol, ..ViscosityConfig::default() };
            let config = json!({
                "search": search_json(&cfg), "phi": probes.phi, "probes": probes.probes, "spread": spread, "levels": levels,
                "viscosity": { "random": visc.random, "max_step": visc.max_step, "tail": visc.tail, "member_tol": visc.member_tol, "tol": visc.tol },
            });
            let run = Run::new("check-viscosity", &common, config)?;
            check_viscosity(run, &probes, &cfg, spread, levels, &visc)
        }
        Command::CheckDerivs { common, search, probes, draws, s_box, tol } => {
            let cfg = resolve(&common, &search)?;
            let deriv = DerivConfig { seed: common.seed, tol, ..DerivConfig::default() };
            let config = json!({
                "search": search_json(&cfg), "phi": probes.phi, "probes": probes.probes, "draws": draws, "s_box": s_box,
                "derivs": { "random": deriv.random, "max_step": deriv.max_step, "tail": deriv.tail, "tol": deriv.tol },
            });
            let run = Run::new("check-derivs", &common, config)?;
            check_derivs(run, &probes, &cfg, draws, s_box, &deriv)
        }
        Command::MviSearch { common, search, phi, directions, k, delta } => {
            let cfg = resolve(&common, &search)?;
            let generators = parse_rows(&directions).context("`--directions`")?;
            let k_schedule = parse_list(&k).context("`--k`")?;
            let mvi_cfg = MviConfig { k_schedule, delta, seed: common.seed, ..MviConfig::default() };
            let config = json!({ "search": search_json(&cfg), "phi": phi, "directions": generators, "k": mvi_cfg.k_schedule, "delta": delta });
            let run = Run::new("mvi-search", &common, config)?;
            mvi(run, &phi, &cfg, &generators, &mvi_cfg)
        }
        Command::Bounds { common, alpha } => {
            let alphas = parse_list(&alpha).context("`--alpha`")?;
            let run = Run::new("bounds", &common, json!({ "alpha": alphas }))?;
            bounds(run, &alphas)
        }
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = text.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| anyhow!("`{v}` is not a number"))).collect::<Result<_>>()?;
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';').map(parse_list).collect()
}

fn trajectory_rows(spec: &ProblemSpec, x: &Trajectory) -> (Vec<String>, Vec<Vec<String>>) {
    let grid = spec.grid();
    let mut header = vec!["node".to_string(), "t".to_string()];
    header.extend((0..spec.dim()).map(|i| format!("x{}", i + 1)));
    let rows = (x.start()..=grid.last_node())
        .map(|k| {
            let mut row = vec![k.to_string(), num(grid.node_time(k))];
            row.extend(x.at(k as isize).iter().map(|v| num(*v)));
            row
        })
        .collect();
    (header, rows)
}

fn control_rows(spec: &ProblemSpec, u: &ControlSignal) -> (Vec<String>, Vec<Vec<String>>) {
    let grid = spec.grid();
    let mut header = vec!["node".to_string(), "t".to_string(), "index".to_string()];
    header.extend((0..spec.controls().dim()).map(|i| format!("u{}", i + 1)));
    let rows = u
        .indices()
        .iter()
        .enumerate()
        .map(|(i, &idx)| {
            let k = u.start() + i;
            let mut row = vec![k.to_string(), num(grid.node_time(k)), idx.to_string()];
            row.extend(spec.controls().get(idx).iter().map(|v| num(*v)));
            row
        })
        .collect();
    (header, rows)
}

fn simulate(mut run: Run, control: &str, cfg: &SearchConfig) -> Result<Outcome> {
    let (t, z, w) = run.state()?;
    let spec = &run.spec;
    let node = spec.grid().node_of(t)?;
    let u = if control == "zero" {
        let idx = (0..spec.controls().len())
            .min_by(|&a, &b| math::norm(spec.controls().get(a)).total_cmp(&math::norm(spec.controls().get(b))))
            .expect("control sets are non-empty");
        ControlSignal::constant(spec, node, idx)
    } else if control == "optimal" {
        value(spec, t, &z, &w, cfg)?.control
    } else if let Some(i) = control.strip_prefix("index:") {
        let idx: usize = i.parse().map_err(|_| anyhow!("`--control index:{i}`: not an index"))?;
        if idx >= spec.controls().len() {
            bail!("`--control index:{idx}`: the control set has {} points", spec.controls().len());
        }
        ControlSignal::constant(spec, node, idx)
    } else {
        bail!("unknown `--control {control}`; expected zero, index:<i> or optimal");
    };
    let motion = integrate(spec, t, &z, &w, &u)?;
    let cost = motion.cost(spec)?;
    let (header, rows) = trajectory_rows(spec, &motion.trajectory);
    let (uh, ur) = control_rows(spec, &u);
    let end = spec.grid().last_node();
    let result = json!({
        "cost": cost,
        "running": motion.running_total(),
        "terminal": spec.sigma(motion.trajectory.at(end as isize), &motion.trajectory.segment(end)?),
        "control": u.indices(),
    });
    run.artifacts.csv("trajectory.csv", &header, &rows)?;
    run.artifacts.csv("control.csv", &uh, &ur)?;
    run.artifacts.json("simulate.json", &result)?;
    run.report();
    Ok(Outcome::Ok)
}

fn value_cmd(mut run: Run, cfg: &SearchConfig) -> Result<Outcome> {
    let (t, z, w) = run.state()?;
    let spec = &run.spec;
    let v = value(spec, t, &z, &w, cfg)?;
    let result = json!({
        "value": v.value,
        "control": v.control.indices(),
        "control_values": v.control.values(spec).map(<[f64]>::to_vec).collect::<Vec<_>>(),
        "sequences_evaluated": v.evaluated,
        "budget": cfg.budget,
        "exhaustive": v.exhaustive,
        "config_sha256": run.artifacts.manifest().hash(),
    });
    let (header, rows) = trajectory_rows(spec, &v.motion.trajectory);
    let (uh, ur) = control_rows(spec, &v.control);
    run.artifacts.json("value.json", &result)?;
    run.artifacts.csv("control.csv", &uh, &ur)?;
    run.artifacts.csv("trajectory.csv", &header, &rows)?;
    run.report();
    Ok(Outcome::Ok)
}

fn synthesize(mut run: Run, phi: &str, k: usize, source: ShiftSource, cfg: &SearchConfig) -> Result<Outcome> {
    let (t, z, w) = run.state()?;
    let spec = &run.spec;
    let phi = functionals::parse(phi, spec, *cfg)?;
    let fb = FeedbackConfig::uniform(spec, t, k, source)?;
    let gap = run.pool.install(|| optimality_gap(spec, &phi, t, &z, &w, &fb, cfg))?;
    let s = &gap.synthesis;
    let result = json!({
        "synthesized": gap.synthesized,
        "value": gap.value,
        "gap": gap.gap,
        "relative": gap.relative,
        "value_exhaustive": gap.exhaustive,
        "partition_nodes": s.nodes,
        "shifts": s.shifts,
        "envelope_defects": s.envelope_defects,
    });
    let (header, rows) = trajectory_rows(spec, &s.trajectory);
    let (uh, ur) = control_rows(spec, &s.control);
    run.artifacts.csv("control.csv", &uh, &ur)?;
    run.artifacts.csv("trajectory.csv", &header, &rows)?;
    run.artifacts.json("gap.json", &result)?;
    run.report();
    Ok(Outcome::Ok)
}

fn probes(run: &Run, which: &str, cfg: &SearchConfig) -> Result<Vec<Probe>> {
    let (t, z, w) = run.state()?;
    match which {
        "catalog" => Ok(probe_catalog(&run.spec, &z, &w, cfg)?),
        "point" => Ok(vec![Probe { label: "point", node: run.spec.grid().node_of(t)?, z, w }]),
        other => bail!("unknown `--probes {other}`; expected catalog or point"),
    }
}

fn minimax_json(cfg: &MinimaxConfig) -> Value {
    json!({ "zeta_tol": cfg.zeta_tol, "sweeps": cfg.sweeps, "max_blocks": cfg.max_blocks })
}

/// Per-probe seed derived from the run seed.
fn probe_seed(seed: u64, i: usize, salt: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt << 32).wrapping_add(i as u64)
}

#[allow(clippy::too_many_arguments)]
fn check_minimax(mut run: Run, p: &Probes, cfg: &SearchConfig, draws: usize, s_box: f64, eta: f64, family: usize, zeta: f64) -> Result<Outcome> {
    let spec = &run.spec;
    let phi = functionals::parse(&p.phi, spec, *cfg)?;
    let probes = probes(&run, &p.probes, cfg)?;
    let mm = MinimaxConfig { zeta_tol: zeta, ..MinimaxConfig::default() };
    let seed = run.seed();
    let reports = run.pool.install(|| {
        probes
            .par_iter()
            .enumerate()
            .map(|(i, probe)| {
                let t = spec.grid().node_time(probe.node);
                let mut fam = sample_characteristics(spec, t, &probe.z, &probe.w, eta, family, probe_seed(seed, i, 1))?;
                let mut controls: Vec<ControlSignal> = (0..spec.controls().len()).map(|u| ControlSignal::constant(spec, probe.node, u)).collect();
                controls.push(value(spec, t, &probe.z, &probe.w, cfg)?.control);
                fam.add_controls(spec, &controls)?;
                probe_draws(spec, probe.node, draws, s_box, probe_seed(seed, i, 2))
                    .into_iter()
                    .map(|(tau, s)| minimax_check(spec, &phi, &fam, tau, &s, &mm))
                    .collect::<hjbd_core::Result<Vec<_>>>()
            })
            .collect::<hjbd_core::Result<Vec<_>>>()
    })?;
    let points: Vec<(Vec<f64>, History)> = probes.iter().map(|p| (p.z.clone(), p.w.clone())).collect();
    let terminal = terminal_check(spec, &phi, &points)?;

    let header: Vec<String> =
        ["probe", "label", "node", "tau", "s", "inf_omega", "sup_omega", "upper_pass", "lower_pass", "evaluations"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let (mut upper_fails, mut lower_fails) = (0, 0);
    for (i, (probe, reps)) in probes.iter().zip(&reports).enumerate() {
        for r in reps {
            upper_fails += usize::from(!r.upper_pass);
            lower_fails += usize::from(!r.lower_pass);
            rows.push(vec![
                i.to_string(),
                probe.label.to_string(),
                probe.node.to_string(),
                num(r.tau),
                vector(&r.s),
                num(r.inf_omega),
                num(r.sup_omega),
                r.upper_pass.to_string(),
                r.lower_pass.to_string(),
                r.evaluations.to_string(),
            ]);
        }
    }
    let terminal_pass = terminal <= zeta;
    let pass = terminal_pass && upper_fails == 0 && lower_fails == 0;
    let result = json!({
        "pass": pass,
        "checks": rows.len(),
        "upper_failures": upper_fails,
        "lower_failures": lower_fails,
        "terminal_defect": terminal,
        "terminal_pass": terminal_pass,
    });
    run.artifacts.csv("minimax.csv", &header, &rows)?;
    run.artifacts.json("minimax.json", &result)?;
    run.report();
    Ok(if pass {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!("{upper_fails} upper and {lower_fails} lower stability failures, terminal defect {terminal:.3e}"))
    })
}

fn check_viscosity(mut run: Run, p: &Probes, cfg: &SearchConfig, spread: f64, levels: usize, visc: &ViscosityConfig) -> Result<Outcome> {
    let spec = &run.spec;
    let phi = functionals::parse(&p.phi, spec, *cfg)?;
    let probes = probes(&run, &p.probes, cfg)?;
    let reports = run.pool.install(|| {
        probes
            .par_iter()
            .map(|probe| {
                let t = spec.grid().node_time(probe.node);
                let candidates = default_candidates(&phi, spec, t, &probe.z, &probe.w, spread, levels)?;
                viscosity_check(spec, &phi, t, &probe.z, &probe.w, &candidates, visc)
            })
            .collect::<hjbd_core::Result<Vec<_>>>()
    })?;
    let header: Vec<String> =
        ["probe", "label", "node", "candidates", "sub_admitted", "sup_admitted", "sub_violations", "sup_violations", "pass"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (i, (probe, r)) in probes.iter().zip(&reports).enumerate() {
        rows.push(vec![
            i.to_string(),
            probe.label.to_string(),
            probe.node.to_string(),
            r.entries.len().to_string(),
            r.sub_admitted.to_string(),
            r.sup_admitted.to_string(),
            r.sub_violations.len().to_string(),
            r.sup_violations.len().to_string(),
            r.pass.to_string(),
        ]);
        let list: Vec<Value> = r
            .entries
            .iter()
            .map(|e| {
                json!({
                    "p0": e.p0, "p": e.p, "hamiltonian_sum": e.hamiltonian_sum,
                    "sub_member": e.sub.member, "sub_margin": e.sub.margin,
                    "sup_member": e.sup.member, "sup_margin": e.sup.margin,
                })
            })
            .collect();
        entries.push(json!({ "probe": i, "label": probe.label, "pass": r.pass, "candidates": list }));
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    run.artifacts.csv("viscosity.csv", &header, &rows)?;
    run.artifacts.json("viscosity.json", &json!({ "pass": failed == 0, "probes": entries }))?;
    run.report();
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::CheckFailed(format!("viscosity inequalities fail at {failed} of {} probes", probes.len())) })
}

fn check_derivs(mut run: Run, p: &Probes, cfg: &SearchConfig, draws: usize, s_box: f64, deriv: &DerivConfig) -> Result<Outcome> {
    let spec = &run.spec;
    let phi = functionals::parse(&p.phi, spec, *cfg)?;
    let probes = probes(&run, &p.probes, cfg)?;
    let seed = run.seed();
    let reports = run.pool.install(|| {
        probes
            .par_iter()
            .enumerate()
            .map(|(i, probe)| {
                let t = spec.grid().node_time(probe.node);
                probe_draws(spec, probe.node, draws, s_box, probe_seed(seed, i, 3))
                    .into_iter()
                    .map(|(_, s)| deriv_check(spec, &phi, t, &probe.z, &probe.w, &s, deriv).map(|r| (s, r)))
                    .collect::<hjbd_core::Result<Vec<_>>>()
            })
            .collect::<hjbd_core::Result<Vec<_>>>()
    })?;
    let header: Vec<String> = ["probe", "label", "node", "s", "hamiltonian", "inf_margin", "sup_margin", "upper_pass", "lower_pass"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let mut failed = 0;
    for (i, (probe, reps)) in probes.iter().zip(&reports).enumerate() {
        for (s, r) in reps {
            failed += usize::from(!(r.upper_pass && r.lower_pass));
            rows.push(vec![
                i.to_string(),
                probe.label.to_string(),
                probe.node.to_string(),
                vector(s),
                num(r.hamiltonian),
                num(r.inf_margin),
                num(r.sup_margin),
                r.upper_pass.to_string(),
                r.lower_pass.to_string(),
            ]);
        }
    }
    run.artifacts.csv("derivs.csv", &header, &rows)?;
    run.artifacts.json("derivs.json", &json!({ "pass": failed == 0, "checks": rows.len(), "failures": failed }))?;
    run.report();
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::CheckFailed(format!("{failed} of {} derivative checks fail", rows.len())) })
}

fn mvi(mut run: Run, phi: &str, cfg: &SearchConfig, generators: &[Vec<f64>], mvi: &MviConfig) -> Result<Outcome> {
    let (t, z, w) = run.state()?;
    let spec = &run.spec;
    if let Some(g) = generators.iter().find(|g| g.len() != spec.dim()) {
        bail!("`--directions`: generator {g:?} does not have dimension {}", spec.dim());
    }
    let phi: Candidate = functionals::parse(phi, spec, *cfg)?;
    let node = spec.grid().node_of(t)?;
    let r = mvi_search(&phi, spec.grid(), node, &z, &w, generators, mvi)?;
    let incumbents: Vec<Value> = r
        .incumbents
        .iter()
        .map(|i| {
            json!({
                "k": i.k, "tau": i.tau, "v": i.v, "g": i.g, "xi": i.xi, "l": i.l, "gamma": i.gamma,
                "p0": i.p0, "p": i.p, "margins": i.margins, "min_margin": i.min_margin,
            })
        })
        .collect();
    let margin = r.final_margin();
    let pass = margin > -1e-6;
    let result = json!({
        "pass": pass,
        "final_margin": margin,
        "gate": r.gate,
        "epsilon_star": r.epsilon_star,
        "delta": r.delta,
        "lambda_phi": r.lambda_phi,
        "lambda_phi_estimated": r.lambda_phi_estimated,
        "incumbents": incumbents,
    });
    let mut header = vec!["k".to_string(), "p0".to_string(), "p".to_string()];
    header.extend((0..generators.len()).map(|i| format!("margin_l{}", i + 1)));
    let rows: Vec<Vec<String>> = r
        .incumbents
        .iter()
        .map(|i| {
            let mut row = vec![num(i.k), num(i.p0), vector(&i.p)];
            row.extend(i.margins.iter().map(|m| num(*m)));
            row
        })
        .collect();
    run.artifacts.csv("mvi.csv", &header, &rows)?;
    run.artifacts.json("mvi.json", &result)?;
    run.report();
    Ok(if pass { Outcome::Ok } else { Outcome::CheckFailed(format!("final pairing margin {margin:.3e} on the direction set")) })
}

fn bounds(mut run: Run, alphas: &[f64]) -> Result<Outcome> {
    let spec = &run.spec;
    let per_alpha: Vec<Value> = alphas
        .iter()
        .map(|&alpha| {
            let g = spec.growth_bounds(alpha);
            json!({
                "alpha": alpha,
                "alpha_star": g.alpha_star,
                "alpha_x": g.alpha_x,
                "lambda_x": g.lambda_x,
                "lambda_f": spec.lambda_f(g.alpha_x),
                "lambda_sigma": spec.lambda_sigma(g.alpha_x),
                "lambda_h": spec.lambda_h(g.alpha_x),
                "motion_lipschitz": spec.lipschitz_bound(alpha),
                "value_lipschitz": value_lipschitz(spec, alpha),
            })
        })
        .collect();
    let mut result = json!({ "c_f": spec.c_f(), "horizon": spec.horizon(), "bounds": per_alpha });
    if run.point.is_some() {
        let (_, z, w) = run.state()?;
        result["point"] = json!({
            "alpha": math::norm(&z).max(w.norm_sup()),
            "characteristic_radius": spec.char_radius(&z, w.sample(0)),
        });
    }
    run.artifacts.json("bounds.json", &result)?;
    run.report();
    Ok(Outcome::Ok)
}
