//! Built-in objectives for closed-loop runs from the command line.

use bayesopt_core::bench::{RosenbrockBox, SurrogateTuningProblem, TestFunction};
use bayesopt_core::space::{Configuration, OutputTransform, ParameterSpace, Value};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// Rosenbrock, a = b = 1, on any two numeric parameters.
    Rosenbrock,
    /// Synthetic network-tuning utility (four widths plus a learning rate).
    Surrogate,
}

/// Ready-made search spaces for `new --preset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    RosenbrockNarrow,
    RosenbrockWide,
    Surrogate,
}

impl Preset {
    pub fn space(self) -> anyhow::Result<ParameterSpace> {
        Ok(match self {
            Preset::RosenbrockNarrow => TestFunction::rosenbrock(RosenbrockBox::Narrow).space(OutputTransform::Log)?,
            Preset::RosenbrockWide => TestFunction::rosenbrock(RosenbrockBox::Wide).space(OutputTransform::Log)?,
            Preset::Surrogate => SurrogateTuningProblem::new()?.space().clone(),
        })
    }

    /// Natural orientation of the preset's objective.
    pub fn minimize(self) -> bool {
        !matches!(self, Preset::Surrogate)
    }
}

pub enum Objective {
    Rosenbrock,
    Surrogate(Box<SurrogateTuningProblem>),
}

impl Objective {
    /// Checks that `builtin` can be evaluated on `space`.
    pub fn new(builtin: Builtin, space: &ParameterSpace) -> anyhow::Result<Self> {
        match builtin {
            Builtin::Rosenbrock => {
                anyhow::ensure!(space.dim() == 2, "rosenbrock needs exactly 2 parameters, the space has {}", space.dim());
                Ok(Objective::Rosenbrock)
            }
            Builtin::Surrogate => {
                let p = SurrogateTuningProblem::new()?;
                anyhow::ensure!(space.dim() == p.space().dim(), "surrogate needs the 5-parameter surrogate space");
                Ok(Objective::Surrogate(Box::new(p)))
            }
        }
    }

    pub fn eval(&self, config: &Configuration) -> anyhow::Result<f64> {
        match self {
            Objective::Rosenbrock => {
                let [x, y] = [config.0[0], config.0[1]].map(Value::as_f64);
                Ok(bayesopt_core::bench::rosenbrock(x, y, 1.0, 1.0))
            }
            Objective::Surrogate(p) => Ok(p.utility(config)?),
        }
    }
}
