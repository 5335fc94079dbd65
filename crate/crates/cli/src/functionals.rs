//! Candidate functionals addressable by name on the command line.

use anyhow::{anyhow, bail, Result};
use hjbd_core::calculus::{Functional, Mu};
use hjbd_core::value::{value_lipschitz, SearchConfig, ValueFunctional};
use hjbd_core::{math, History, ProblemSpec};

/// Closed-form smooth functionals for exercising the checkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothId {
    /// `0`
    Zero,
    /// `ϑ - t`
    Time,
    /// `ϑ - t + Σ z_i`
    Affine,
    /// `‖z‖²`
    Quadratic,
}

impl SmoothId {
    pub const ALL: [(&'static str, SmoothId); 4] =
        [("zero", SmoothId::Zero), ("time", SmoothId::Time), ("affine", SmoothId::Affine), ("quadratic", SmoothId::Quadratic)];
}

pub enum Candidate<'a> {
    Value(ValueFunctional<'a>),
    Mu(Mu),
    /// `σ(z, w)` held constant in `t`.
    TerminalExtended(&'a ProblemSpec),
    Smooth {
        id: SmoothId,
        theta: f64,
    },
}

/// Parses `value`, `mu(λ,ε)`, `terminal-extended` or `smooth:<id>`.
pub fn parse<'a>(name: &str, spec: &'a ProblemSpec, search: SearchConfig) -> Result<Candidate<'a>> {
    let name = name.trim();
    let theta = spec.grid().theta();
    if name == "value" {
        return Ok(Candidate::Value(ValueFunctional { spec, config: search }));
    }
    if name == "terminal-extended" {
        return Ok(Candidate::TerminalExtended(spec));
    }
    if let Some(id) = name.strip_prefix("smooth:") {
        let id = SmoothId::ALL.iter().find(|(n, _)| *n == id).map(|(_, id)| *id).ok_or_else(|| {
            let known: Vec<&str> = SmoothId::ALL.iter().map(|(n, _)| *n).collect();
            anyhow!("unknown smooth functional `{id}`; known: {}", known.join(", "))
        })?;
        return Ok(Candidate::Smooth { id, theta });
    }
    if let Some(args) = name.strip_prefix("mu(").and_then(|rest| rest.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let [lambda, epsilon] = parts[..] else {
            bail!("`mu` takes two arguments: mu(lambda,epsilon)");
        };
        let lambda: f64 = lambda.parse().map_err(|_| anyhow!("`mu`: lambda `{lambda}` is not a number"))?;
        let epsilon: f64 = epsilon.parse().map_err(|_| anyhow!("`mu`: epsilon `{epsilon}` is not a number"))?;
        let mu = Mu::new(lambda, epsilon, spec.grid().t0(), theta).map_err(|e| anyhow!("`mu({lambda},{epsilon})`: {e}"))?;
        return Ok(Candidate::Mu(mu));
    }
    bail!("unknown functional `{name}`; expected value, mu(lambda,epsilon), terminal-extended or smooth:<id>")
}

impl Functional for Candidate<'_> {
    fn eval(&self, t: f64, z: &[f64], w: &History) -> hjbd_core::Result<f64> {
        match self {
            Candidate::Value(v) => v.eval(t, z, w),
            Candidate::Mu(mu) => mu.eval(t, z, w),
            Candidate::TerminalExtended(spec) => Ok(spec.sigma(z, w)),
            Candidate::Smooth { id, theta } => Ok(match id {
                SmoothId::Zero => 0.0,
                SmoothId::Time => theta - t,
                SmoothId::Affine => theta - t + z.iter().sum::<f64>(),
                SmoothId::Quadratic => math::dot(z, z),
            }),
        }
    }

    fn ci_derivatives(&self, t: f64, z: &[f64], w: &History) -> Option<(f64, Vec<f64>)> {
        match self {
            Candidate::Value(_) | Candidate::TerminalExtended(_) => None,
            Candidate::Mu(mu) => mu.ci_derivatives(t, z, w),
            Candidate::Smooth { id, .. } => Some(match id {
                SmoothId::Zero => (0.0, vec![0.0; z.len()]),
                SmoothId::Time => (-1.0, vec![0.0; z.len()]),
                SmoothId::Affine => (-1.0, vec![1.0; z.len()]),
                SmoothId::Quadratic => (0.0, math::scale(z, 2.0)),
            }),
        }
    }

    fn lipschitz_bound(&self, alpha: f64) -> Option<f64> {
        match self {
            Candidate::Value(v) => Some(value_lipschitz(v.spec, alpha)),
            Candidate::Mu(mu) => mu.lipschitz_bound(alpha),
            Candidate::TerminalExtended(spec) => Some(spec.terminal().lipschitz(alpha)),
            Candidate::Smooth { id, .. } => match id {
                SmoothId::Zero | SmoothId::Time => Some(0.0),
                SmoothId::Affine => None,
                SmoothId::Quadratic => Some(2.0 * alpha),
            },
        }
    }
}
