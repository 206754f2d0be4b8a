//! Benchmark objectives and the experiments built on them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::acquisition::Orientation;
use crate::engine::{ExperimentState, Method, Settings, Status};
use crate::space::{Configuration, OutputTransform, ParameterDef, ParameterSpace, Value};
use crate::{Error, Result};

/// `(a − x)² + b(y − x²)²`
pub fn rosenbrock(x: f64, y: f64, a: f64, b: f64) -> f64 {
    let u = a - x;
    let v = y - x * x;
    u * u + b * v * v
}

pub fn rosenbrock_grad(x: f64, y: f64, a: f64, b: f64) -> [f64; 2] {
    let v = y - x * x;
    [-2.0 * (a - x) - 4.0 * b * x * v, 2.0 * b * v]
}

pub type GradientFn = fn(&[f64]) -> Vec<f64>;

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub name: &'static str,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub f: fn(&[f64]) -> f64,
    pub grad: Option<GradientFn>,
    pub optimum: Vec<f64>,
    pub optimum_value: f64,
}

fn rosen(x: &[f64]) -> f64 {
    rosenbrock(x[0], x[1], 1.0, 1.0)
}

fn rosen_grad(x: &[f64]) -> Vec<f64> {
    rosenbrock_grad(x[0], x[1], 1.0, 1.0).to_vec()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RosenbrockBox {
    /// `[−10, 10]²`
    #[default]
    Narrow,
    /// `[−100, 100]²`
    Wide,
}

impl TestFunction {
    /// Rosenbrock with `a = b = 1`, minimum 0 at `(1, 1)`.
    pub fn rosenbrock(which: RosenbrockBox) -> Self {
        let h = match which {
            RosenbrockBox::Narrow => 10.0,
            RosenbrockBox::Wide => 100.0,
        };
        TestFunction {
            name: "rosenbrock",
            lower: vec![-h, -h],
            upper: vec![h, h],
            f: rosen,
            grad: Some(rosen_grad),
            optimum: vec![1.0, 1.0],
            optimum_value: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Continuous space over the box, parameters named `x1, x2, ...`.
    pub fn space(&self, transform: OutputTransform) -> Result<ParameterSpace> {
        let params = self
            .lower
            .iter()
            .zip(&self.upper)
            .enumerate()
            .map(|(i, (lo, hi))| ParameterDef::continuous(alloc::format!("x{}", i + 1), *lo, *hi))
            .collect();
        ParameterSpace::with_transform(params, transform)
    }

    pub fn eval(&self, config: &Configuration) -> f64 {
        let x: Vec<f64> = config.0.iter().map(|v| v.as_f64()).collect();
        (self.f)(&x)
    }
}

/// Number of grid indices per layer-width parameter.
pub const SURROGATE_GRID: i64 = 16;
pub const SURROGATE_K: u32 = 12;
pub const SURROGATE_ALPHAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Synthetic stand-in for a network-tuning objective: four layer widths
/// `n_i = 12·x_i` with `x_i ∈ 1..=16` and a learning rate from
/// {1e-2, 1e-3, 1e-4}. The utility is a concave quadratic in the grid
/// indices whose level and curvature depend on the learning rate; 1e-2 sits
/// on a flat plateau just below 65 and the unique optimum uses 1e-4.
#[derive(Debug, Clone)]
pub struct SurrogateTuningProblem {
    space: ParameterSpace,
    optimum: Configuration,
    optimum_value: f64,
}

/// Per-α (level, curvature, centre in grid indices).
const SURROGATE_SHAPE: [(f64, f64, [f64; 4]); 3] = [
    (65.0, 0.4, [8.0, 8.0, 8.0, 8.0]),
    (79.5, 3.0, [6.0, 9.0, 9.0, 6.0]),
    (82.0, 3.0, [7.0, 10.0, 8.0, 5.0]),
];

fn penalty(x: &[i64; 4], centre: &[f64; 4]) -> f64 {
    let z: Vec<f64> = x.iter().zip(centre).map(|(&xi, c)| (xi as f64 - c) / 15.0).collect();
    z.iter().map(|v| v * v).sum::<f64>() + 0.5 * (z[0] * z[1] + z[2] * z[3])
}

impl SurrogateTuningProblem {
    /// Builds the problem and locates its optimum by enumerating the grid.
    pub fn new() -> Result<Self> {
        let space = ParameterSpace::new(vec![
            ParameterDef::integer("n1", 1, SURROGATE_GRID, SURROGATE_K),
            ParameterDef::integer("n2", 1, SURROGATE_GRID, SURROGATE_K),
            ParameterDef::integer("n3", 1, SURROGATE_GRID, SURROGATE_K),
            ParameterDef::integer("n4", 1, SURROGATE_GRID, SURROGATE_K),
            ParameterDef::ordered("alpha", SURROGATE_ALPHAS.to_vec()),
        ])?;
        let mut best: Option<(Configuration, f64)> = None;
        let mut ties = 0;
        for (grid, a) in Self::grid() {
            let u = Self::utility_at(&grid, a);
            match &best {
                Some((_, b)) if u < *b => {}
                Some((_, b)) if u == *b => ties += 1,
                _ => {
                    best = Some((Self::config(&grid, a), u));
                    ties = 0;
                }
            }
        }
        let (optimum, optimum_value) = best.expect("non-empty grid");
        if ties > 0 {
            return Err(Error::validation("surrogate optimum is not unique"));
        }
        Ok(SurrogateTuningProblem { space, optimum, optimum_value })
    }

    /// Every (grid index vector, α index) pair.
    pub fn grid() -> impl Iterator<Item = ([i64; 4], usize)> {
        let g = SURROGATE_GRID;
        (0..g.pow(4) * 3).map(move |k| {
            let a = (k % 3) as usize;
            let mut r = k / 3;
            let mut x = [0i64; 4];
            for xi in x.iter_mut().rev() {
                *xi = r % g + 1;
                r /= g;
            }
            (x, a)
        })
    }

    fn config(grid: &[i64; 4], alpha: usize) -> Configuration {
        let mut v: Vec<Value> = grid.iter().map(|x| Value::Int(x * SURROGATE_K as i64)).collect();
        v.push(Value::Real(SURROGATE_ALPHAS[alpha]));
        Configuration(v)
    }

    /// Utility at grid indices `grid` and learning rate `SURROGATE_ALPHAS[alpha]`.
    pub fn utility_at(grid: &[i64; 4], alpha: usize) -> f64 {
        let (level, curvature, centre) = SURROGATE_SHAPE[alpha];
        (level - curvature * penalty(grid, &centre)).clamp(0.0, 100.0)
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn optimum(&self) -> (&Configuration, f64) {
        (&self.optimum, self.optimum_value)
    }

    /// Utility of an external configuration.
    pub fn utility(&self, config: &Configuration) -> Result<f64> {
        self.space.to_internal(config)?;
        let mut grid = [0i64; 4];
        for (g, v) in grid.iter_mut().zip(&config.0) {
            match v {
                Value::Int(n) => *g = n / SURROGATE_K as i64,
                Value::Real(_) => return Err(Error::validation("layer widths must be integers")),
            }
        }
        let alpha = config.0[4].as_f64();
        let a = SURROGATE_ALPHAS.iter().position(|x| *x == alpha).ok_or_else(|| Error::validation("unknown learning rate"))?;
        Ok(Self::utility_at(&grid, a))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Raw best-so-far values of a finished experiment, one per trial.
fn trace(state: &ExperimentState) -> Vec<f64> {
    state.best_so_far().into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosenbrockExperiment {
    #[serde(rename = "box")]
    pub domain: RosenbrockBox,
    /// Engine settings; `seed` is overridden per run and the orientation
    /// forced to minimization.
    pub settings: Settings,
    pub transform: OutputTransform,
    pub seeds: Vec<u64>,
}

impl RosenbrockExperiment {
    /// 100 trials, 5 of them from the initial design.
    pub fn new(domain: RosenbrockBox, seeds: Vec<u64>) -> Self {
        RosenbrockExperiment { domain, settings: Settings::new(5, 100, 0), transform: OutputTransform::Log, seeds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosenbrockRun {
    pub seed: u64,
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub distance: f64,
    pub evaluations: usize,
    /// Best value found after each trial.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosenbrockReport {
    #[serde(rename = "box")]
    pub domain: RosenbrockBox,
    pub runs: Vec<RosenbrockRun>,
    pub median_best_value: f64,
    pub median_distance: f64,
}

pub fn experiment_rosenbrock(exp: &RosenbrockExperiment) -> Result<RosenbrockReport> {
    let f = TestFunction::rosenbrock(exp.domain);
    let space = f.space(exp.transform)?;
    let mut runs = Vec::with_capacity(exp.seeds.len());
    for &seed in &exp.seeds {
        let mut settings = exp.settings.clone();
        settings.seed = seed;
        settings.orientation = Orientation::Minimize;
        let mut state = ExperimentState::new(space.clone(), settings)?;
        let best = state.run_loop(|c| Ok::<_, ()>(f.eval(c)))?.ok_or(Error::NoCompletedTrials)?;
        let t = &state.trials()[best];
        let point: Vec<f64> = t.config.0.iter().map(|v| v.as_f64()).collect();
        let distance = libm::sqrt(point.iter().zip(&f.optimum).map(|(a, b)| (a - b) * (a - b)).sum());
        runs.push(RosenbrockRun {
            seed,
            best_value: t.value.unwrap_or(f64::NAN),
            best_point: point,
            distance,
            evaluations: state.objective_calls(),
            trace: trace(&state),
        });
    }
    Ok(RosenbrockReport {
        domain: exp.domain,
        median_best_value: median(runs.iter().map(|r| r.best_value).collect()),
        median_distance: median(runs.iter().map(|r| r.distance).collect()),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateExperiment {
    /// Engine settings; `n_initial` counts the manual trial, `seed` is
    /// overridden per run.
    pub settings: Settings,
    /// Evaluated first, before the design.
    pub manual: Option<Configuration>,
    pub seeds: Vec<u64>,
}

impl SurrogateExperiment {
    /// 50 trials: one manual configuration, ten Sobol' points, then the model.
    pub fn new(seeds: Vec<u64>) -> Self {
        let manual = Configuration(vec![Value::Int(12), Value::Int(12), Value::Int(24), Value::Int(24), Value::Real(1e-3)]);
        SurrogateExperiment { settings: Settings::new(11, 50, 0), manual: Some(manual), seeds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateRun {
    pub seed: u64,
    pub best_value: f64,
    pub best_config: Configuration,
    /// `(optimum − best) / optimum`
    pub relative_gap: f64,
    pub evaluations: usize,
    pub distinct_evaluations: usize,
    pub cache_hits: usize,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateReport {
    pub optimum_value: f64,
    pub optimum: Configuration,
    pub runs: Vec<SurrogateRun>,
    /// Runs ending within 1% of the optimum.
    pub within_one_percent: usize,
}

pub fn experiment_surrogate(exp: &SurrogateExperiment) -> Result<SurrogateReport> {
    let problem = SurrogateTuningProblem::new()?;
    let (optimum, optimum_value) = problem.optimum();
    let mut runs = Vec::with_capacity(exp.seeds.len());
    for &seed in &exp.seeds {
        let mut settings = exp.settings.clone();
        settings.seed = seed;
        settings.orientation = Orientation::Maximize;
        let mut state = ExperimentState::new(problem.space().clone(), settings)?;
        if let Some(m) = &exp.manual {
            let i = state.add_manual(m.clone())?;
            state.complete(i, problem.utility(m)?)?;
        }
        let best = state.run_loop(|c| problem.utility(c))?.ok_or(Error::NoCompletedTrials)?;
        let t = &state.trials()[best];
        let best_value = t.value.unwrap_or(f64::NAN);
        let mut keys: Vec<String> = state.trials().iter().filter(|t| t.is_evaluation()).map(|t| t.config.key()).collect();
        let evaluations = keys.len();
        keys.sort();
        keys.dedup();
        runs.push(SurrogateRun {
            seed,
            best_value,
            best_config: t.config.clone(),
            relative_gap: (optimum_value - best_value) / optimum_value,
            evaluations,
            distinct_evaluations: keys.len(),
            cache_hits: state.trials().iter().filter(|t| t.method == Method::CacheHit).count(),
            trace: trace(&state),
        });
    }
    debug_assert!(runs.iter().all(|r| r.trace.windows(2).all(|w| w[1] >= w[0])));
    Ok(SurrogateReport {
        optimum_value,
        optimum: optimum.clone(),
        within_one_percent: runs.iter().filter(|r| r.relative_gap <= 0.01).count(),
        runs,
    })
}

/// Count of objective evaluations that repeated an already evaluated
/// configuration.
pub fn duplicate_evaluations(state: &ExperimentState) -> usize {
    let mut seen = alloc::collections::BTreeSet::new();
    state
        .trials()
        .iter()
        .filter(|t| t.is_evaluation() && t.status == Status::Completed)
        .filter(|t| !seen.insert(t.config.key()))
        .count()
}
