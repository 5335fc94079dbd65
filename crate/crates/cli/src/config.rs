//! Problem and point files.
//!
//! A problem file is a TOML tree with `[grid]`, `[dynamics]`, `[running]`,
//! `[terminal]` and `[controls]` tables; a point file holds `t`, `z` and a
//! `[history]` table. Unknown keys are rejected so typos surface as errors
//! naming the offending key.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hjbd_core::math::Matrix;
use hjbd_core::problem::{ControlSet, CostKind, Dynamics, RunningCost, TerminalCost};
use hjbd_core::{History, Interpolation, ProblemSpec, TimeGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub grid: GridConfig,
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub running: RunningConfig,
    pub terminal: TerminalConfig,
    pub controls: ControlsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t0: f64,
    pub theta: f64,
    pub delay: f64,
    /// Grid steps per delay.
    pub m: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsConfig {
    /// `f = A x + B x(t - h) + C u`, matrices as lists of rows.
    LinearDelay { a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>> },
    /// `f = a x (1 - x(t - h)) + c u`, the state clipped to `±r_max` inside the drift.
    ScalarLogisticDelay { a: f64, c: f64, r_max: f64 },
    /// `f = tanh(A x + B x(t - h)) + C u`.
    Saturated { a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostShape {
    Quadratic,
    Absolute,
}

/// `f0 = offset + q‖x‖ + r κ(u)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunningConfig {
    #[serde(default = "quadratic")]
    pub kind: CostShape,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub offset: f64,
}

fn quadratic() -> CostShape {
    CostShape::Quadratic
}

impl Default for RunningConfig {
    fn default() -> Self {
        Self { kind: CostShape::Quadratic, r: 0.0, q: 0.0, offset: 0.0 }
    }
}

/// `σ(z, w) = ⟨Q z, z⟩ + lin ‖z‖ + qw ‖w‖₁`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalConfig {
    pub quad: Vec<Vec<f64>>,
    #[serde(default)]
    pub lin: f64,
    #[serde(default)]
    pub qw: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlsConfig {
    /// `count` equally spaced points of `[lo, hi]`.
    Interval { lo: f64, hi: f64, count: usize },
    /// Product lattice with `per_axis` points on each side of the box.
    BoxLattice { lo: Vec<f64>, hi: Vec<f64>, per_axis: usize },
    /// An explicit finite set.
    Finite { points: Vec<Vec<f64>> },
}

fn matrix(rows: &[Vec<f64>], key: &str) -> Result<Matrix> {
    Matrix::from_rows(rows).ok_or_else(|| anyhow!("`{key}` must be a non-empty list of equal-length rows"))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("malformed problem file: {e}"))
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        let g = &self.grid;
        let grid = TimeGrid::new(g.t0, g.theta, g.delay, g.m).context("invalid `grid`")?;
        let dynamics = match &self.dynamics {
            DynamicsConfig::LinearDelay { a, b, c } => {
                Dynamics::LinearDelay { a: matrix(a, "dynamics.a")?, b: matrix(b, "dynamics.b")?, c: matrix(c, "dynamics.c")? }
            }
            DynamicsConfig::ScalarLogisticDelay { a, c, r_max } => Dynamics::Logistic { a: *a, c: *c, r_max: *r_max },
            DynamicsConfig::Saturated { a, b, c } => {
                Dynamics::Saturated { a: matrix(a, "dynamics.a")?, b: matrix(b, "dynamics.b")?, c: matrix(c, "dynamics.c")? }
            }
        };
        let r = &self.running;
        let kind = match r.kind {
            CostShape::Quadratic => CostKind::Quadratic,
            CostShape::Absolute => CostKind::Absolute,
        };
        let running = RunningCost { kind, r: r.r, q: r.q, offset: r.offset };
        let t = &self.terminal;
        let terminal = TerminalCost { quad: matrix(&t.quad, "terminal.quad")?, lin: t.lin, qw: t.qw };
        let controls = match &self.controls {
            ControlsConfig::Interval { lo, hi, count } => ControlSet::interval(*lo, *hi, *count),
            ControlsConfig::BoxLattice { lo, hi, per_axis } => ControlSet::box_lattice(lo.clone(), hi.clone(), *per_axis),
            ControlsConfig::Finite { points } => ControlSet::finite(points),
        }
        .context("invalid `controls`")?;
        ProblemSpec::new(grid, dynamics, running, terminal, controls).context("inconsistent problem")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    #[serde(default)]
    pub t: f64,
    pub z: Vec<f64>,
    pub history: HistoryConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistoryConfig {
    Constant {
        value: Vec<f64>,
        #[serde(default)]
        jump: Option<Jump>,
    },
    /// Linear from `w(-h) = from` to `w(0) = to`.
    Linear {
        from: Vec<f64>,
        to: Vec<f64>,
        #[serde(default)]
        jump: Option<Jump>,
    },
    /// `m + 1` node values from `ξ = -h` to `ξ = 0`.
    Samples {
        values: Vec<Vec<f64>>,
        #[serde(default)]
        jump: Option<Jump>,
    },
}

/// A jump at history node `node`: `left` is the left limit there.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jump {
    pub node: usize,
    pub left: Vec<f64>,
}

impl PointFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("malformed point file: {e}"))
    }

    pub fn history(&self, spec: &ProblemSpec) -> Result<History> {
        let (h, m) = (spec.grid().delay(), spec.grid().m());
        let (w, jump) = match &self.history {
            HistoryConfig::Constant { value, jump } => (History::constant(h, m, value), jump),
            HistoryConfig::Linear { from, to, jump } => (History::linear(h, m, from, to), jump),
            HistoryConfig::Samples { values, jump } => (History::from_samples(h, m, values, Interpolation::Linear), jump),
        };
        let w = w.context("invalid `history`")?;
        match jump {
            Some(j) => w.with_jump_left(j.node, j.left.clone()).context("invalid `history.jump`"),
            None => Ok(w),
        }
    }

    /// The state `(t, z, w)`, checked against the problem's dimension and grid.
    pub fn state(&self, spec: &ProblemSpec) -> Result<(f64, Vec<f64>, History)> {
        if self.z.len() != spec.dim() {
            bail!("`z` has {} entries, the problem has dimension {}", self.z.len(), spec.dim());
        }
        spec.grid().node_of(self.t).context("`t` is not a grid node")?;
        Ok((self.t, self.z.clone(), self.history(spec)?))
    }
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}
