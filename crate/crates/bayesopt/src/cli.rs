use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bayesopt_core::acquisition::{AcquisitionKind, Orientation};
use bayesopt_core::bench::{
    experiment_rosenbrock, experiment_surrogate, RosenbrockBox, RosenbrockExperiment, SurrogateExperiment,
};
use bayesopt_core::engine::{zoom, DedupPolicy, ExperimentState, Settings, Status, Trial, ZoomSettings};
use bayesopt_core::gp::{Basis, KernelKind, MeanKind, NoisePolicy};
use bayesopt_core::sobol::Sobol;
use bayesopt_core::space::{Configuration, OutputTransform, ParameterSpace};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map};

use crate::export::{export_contour, export_trace, format_real};
use crate::objective::{Builtin, Objective, Preset};
use crate::store;

#[derive(Debug, Parser)]
#[command(name = "bayesopt", version, about = "Bayesian optimization with Gaussian-process surrogates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an experiment file.
    New {
        experiment: PathBuf,
        /// Space definition (JSON: {"params": [...], "output_transform": ...}).
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        space: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Propose the next configuration and record it as pending.
    Suggest { experiment: PathBuf },
    /// Record the value of a pending trial.
    Observe {
        experiment: PathBuf,
        trial: usize,
        #[arg(allow_negative_numbers = true)]
        value: f64,
    },
    /// Mark a pending trial failed.
    Fail { experiment: PathBuf, trial: usize },
    /// Closed-loop run on a built-in objective until the budget is used.
    Run {
        experiment: PathBuf,
        #[arg(long, value_enum)]
        objective: Builtin,
        /// Stop after this many trials.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Print the incumbent.
    Best { experiment: PathBuf },
    /// Write the convergence trace as CSV.
    ExportTrace {
        experiment: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write posterior mean/std over two parameters as JSON.
    ExportContour {
        experiment: PathBuf,
        /// Two parameter names, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<String>,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shrink the box around the incumbent and keep searching.
    Zoom {
        experiment: PathBuf,
        #[arg(long, value_enum)]
        objective: Builtin,
        #[arg(long, default_value_t = 0.5)]
        shrink: f64,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long, default_value_t = 10)]
        round_budget: usize,
    },
    /// Start a new experiment that reuses the completed trials of another.
    Restart {
        experiment: PathBuf,
        #[arg(long)]
        from: PathBuf,
        /// New space; defaults to the source experiment's space.
        #[arg(long)]
        space: Option<PathBuf>,
        /// New trials on top of the retained ones.
        #[arg(long, default_value_t = 10)]
        extra: usize,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Reproduction experiments and generators.
    Bench {
        #[command(subcommand)]
        which: Bench,
    },
}

#[derive(Debug, Subcommand)]
pub enum Bench {
    Rosenbrock {
        #[arg(long = "box", value_enum, default_value = "narrow")]
        domain: BoxArg,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 5)]
        n_initial: usize,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, value_enum, default_value = "ucb")]
        acquisition: AcqArg,
        #[arg(long, value_enum, default_value = "log")]
        transform: TransformArg,
        /// Report file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Convergence traces as CSV (seed,trial,best_so_far).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    Surrogate {
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long, value_enum, default_value = "explore-next")]
        dedup: DedupArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print Sobol' points, one per line.
    Sobol {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        skip: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoxArg {
    Narrow,
    Wide,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AcqArg {
    Ucb,
    Ei,
    Pi,
    Qei,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Rbf,
    Matern12,
    Matern32,
    Matern52,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeanArg {
    Constant,
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DedupArg {
    None,
    Cache,
    ExploreNext,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransformArg {
    None,
    Log,
    Reciprocal,
}

impl From<DedupArg> for DedupPolicy {
    fn from(d: DedupArg) -> Self {
        match d {
            DedupArg::None => DedupPolicy::None,
            DedupArg::Cache => DedupPolicy::Cache,
            DedupArg::ExploreNext => DedupPolicy::ExploreNext,
        }
    }
}

impl From<TransformArg> for OutputTransform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::None => OutputTransform::None,
            TransformArg::Log => OutputTransform::Log,
            TransformArg::Reciprocal => OutputTransform::Reciprocal,
        }
    }
}

/// Engine settings; unset flags keep the base value (defaults for `new`, the
/// source experiment for `restart`).
#[derive(Debug, Clone, Default, Args)]
pub struct SettingsArgs {
    #[arg(long)]
    pub n_initial: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, conflicts_with = "maximize")]
    pub minimize: bool,
    #[arg(long)]
    pub maximize: bool,
    #[arg(long, value_enum)]
    pub acquisition: Option<AcqArg>,
    /// UCB exploration weight.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    #[arg(long, value_enum)]
    pub mean: Option<MeanArg>,
    /// Fixed noise variance, or `fitted`.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub hyper_starts: Option<usize>,
    #[arg(long)]
    pub hyper_iters: Option<usize>,
    #[arg(long)]
    pub refit_interval: Option<usize>,
    /// Sobol' screening points for the acquisition optimizer.
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub dedup: Option<DedupArg>,
    /// Overrides the space's output transform.
    #[arg(long, value_enum)]
    pub transform: Option<TransformArg>,
}

impl SettingsArgs {
    pub fn apply(&self, base: &mut Settings) -> Result<()> {
        if let Some(v) = self.n_initial {
            base.n_initial = v;
        }
        if let Some(v) = self.budget {
            base.budget = v;
        }
        if let Some(v) = self.seed {
            base.seed = v;
        }
        if self.minimize {
            base.orientation = Orientation::Minimize;
        }
        if self.maximize {
            base.orientation = Orientation::Maximize;
        }
        let kappa = self.kappa.or(match base.acquisition {
            AcquisitionKind::Ucb { kappa } => Some(kappa),
            _ => None,
        });
        let (q0, mc0) = match base.acquisition {
            AcquisitionKind::QEi { q, mc_samples } => (q, mc_samples),
            _ => (1, 4096),
        };
        let acq = match self.acquisition {
            Some(a) => Some(a),
            None if self.kappa.is_some() => Some(AcqArg::Ucb),
            None if self.q.is_some() || self.mc_samples.is_some() => Some(AcqArg::Qei),
            None => None,
        };
        if let Some(a) = acq {
            base.acquisition = match a {
                AcqArg::Ucb => AcquisitionKind::Ucb { kappa: kappa.unwrap_or(2.0) },
                AcqArg::Ei => AcquisitionKind::Ei,
                AcqArg::Pi => AcquisitionKind::Pi,
                AcqArg::Qei => AcquisitionKind::QEi { q: self.q.unwrap_or(q0), mc_samples: self.mc_samples.unwrap_or(mc0) },
            };
        }
        if let Some(k) = self.kernel {
            base.hyper.kernel = match k {
                KernelArg::Rbf => KernelKind::Rbf,
                KernelArg::Matern12 => KernelKind::Matern12,
                KernelArg::Matern32 => KernelKind::Matern32,
                KernelArg::Matern52 => KernelKind::Matern52,
            };
        }
        if let Some(m) = self.mean {
            base.hyper.mean = match m {
                MeanArg::Constant => MeanKind::Constant,
                MeanArg::Linear => MeanKind::Parametric(Basis::Linear),
                MeanArg::Quadratic => MeanKind::Parametric(Basis::Quadratic),
            };
        }
        if let Some(n) = &self.noise {
            base.hyper.noise = if n == "fitted" {
                NoisePolicy::Fitted
            } else {
                NoisePolicy::Fixed(n.parse().with_context(|| format!("invalid --noise `{n}`"))?)
            };
        }
        if let Some(v) = self.hyper_starts {
            base.hyper.n_starts = v;
        }
        if let Some(v) = self.hyper_iters {
            base.hyper.max_iters = v;
        }
        if let Some(v) = self.refit_interval {
            base.refit_interval = v;
        }
        if let Some(v) = self.candidates {
            base.optimizer.n_candidates = Some(v);
        }
        if let Some(v) = self.starts {
            base.optimizer.n_starts = v;
        }
        if let Some(v) = self.max_iters {
            base.optimizer.max_iters = v;
        }
        if let Some(v) = self.grad_tol {
            base.optimizer.grad_tol = v;
        }
        if let Some(d) = self.dedup {
            base.dedup = d.into();
        }
        Ok(())
    }
}

fn read_space(path: &Path) -> Result<ParameterSpace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let space: ParameterSpace = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    space.validate()?;
    Ok(space)
}

fn load(path: &Path) -> Result<ExperimentState> {
    Ok(store::load(path)?)
}

fn save(state: &ExperimentState, path: &Path) -> Result<()> {
    Ok(store::save(state, path)?)
}

fn config_json(space: &ParameterSpace, config: &Configuration) -> serde_json::Value {
    let mut m = Map::new();
    for (p, v) in space.params.iter().zip(&config.0) {
        m.insert(p.name.clone(), serde_json::to_value(v).expect("value serializes"));
    }
    serde_json::Value::Object(m)
}

fn trial_json(space: &ParameterSpace, t: &Trial) -> serde_json::Value {
    json!({
        "trial": t.index,
        "method": t.method.name(),
        "status": t.status,
        "config": config_json(space, &t.config),
        "value": t.value,
    })
}

fn print(v: &serde_json::Value) {
    println!("{v}");
}

fn with_transform(mut space: ParameterSpace, args: &SettingsArgs) -> ParameterSpace {
    if let Some(t) = args.transform {
        space.output_transform = t.into();
    }
    space
}

fn write_or_print(out: &Option<PathBuf>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => store::write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_traces<'a>(path: &Path, runs: impl Iterator<Item = (u64, &'a [f64])>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "trial", "best_so_far"])?;
    for (seed, trace) in runs {
        for (i, v) in trace.iter().enumerate() {
            w.write_record([seed.to_string(), i.to_string(), format_real(*v)])?;
        }
    }
    store::write_atomic(path, &w.into_inner().map_err(|e| e.into_error())?)?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::New { experiment, space, preset, settings } => {
            if experiment.exists() {
                bail!("{} already exists", experiment.display());
            }
            let mut base = Settings::new(5, 50, 0);
            let space = match (space, preset) {
                (Some(p), _) => read_space(&p)?,
                (None, Some(p)) => {
                    if p.minimize() {
                        base.orientation = Orientation::Minimize;
                    }
                    p.space()?
                }
                (None, None) => bail!("either --space or --preset is required"),
            };
            settings.apply(&mut base)?;
            if settings.n_initial.is_none() {
                base.n_initial = base.n_initial.min(base.budget);
            }
            let state = ExperimentState::new(with_transform(space, &settings), base)?;
            save(&state, &experiment)?;
            print(&json!({ "created": experiment, "dim": state.space().dim(), "budget": state.settings().budget }));
        }
        Command::Suggest { experiment } => {
            let mut state = load(&experiment)?;
            let s = state.suggest()?;
            save(&state, &experiment)?;
            let mut out = trial_json(state.space(), &state.trials()[s.trial]);
            out["provenance"] = serde_json::to_value(s.provenance)?;
            print(&out);
        }
        Command::Observe { experiment, trial, value } => {
            let mut state = load(&experiment)?;
            let status = state.complete(trial, value)?;
            save(&state, &experiment)?;
            print(&json!({ "trial": trial, "status": status, "incumbent": state.incumbent() }));
        }
        Command::Fail { experiment, trial } => {
            let mut state = load(&experiment)?;
            state.fail(trial)?;
            save(&state, &experiment)?;
            print(&json!({ "trial": trial, "status": Status::Failed }));
        }
        Command::Run { experiment, objective, trials } => {
            let mut state = load(&experiment)?;
            let f = Objective::new(objective, state.space())?;
            let before = state.objective_calls();
            state.run_trials(|c| f.eval(c), trials.unwrap_or(usize::MAX))?;
            save(&state, &experiment)?;
            let best = state.incumbent().map(|i| trial_json(state.space(), &state.trials()[i]));
            print(&json!({
                "trials": state.trials().len(),
                "objective_calls": state.objective_calls() - before,
                "best": best,
            }));
        }
        Command::Best { experiment } => {
            let state = load(&experiment)?;
            let Some(i) = state.incumbent() else { bail!("no completed trials") };
            print(&trial_json(state.space(), &state.trials()[i]));
        }
        Command::ExportTrace { experiment, out } => {
            let state = load(&experiment)?;
            export_trace(&state, &out)?;
            print(&json!({ "written": out, "rows": state.trials().len() }));
        }
        Command::ExportContour { experiment, dims, resolution, out } => {
            let state = load(&experiment)?;
            let [a, b] = <[String; 2]>::try_from(dims).map_err(|_| anyhow::anyhow!("--dims needs two names"))?;
            export_contour(&state, (&a, &b), resolution, &out)?;
            print(&json!({ "written": out, "resolution": resolution }));
        }
        Command::Zoom { experiment, objective, shrink, rounds, round_budget } => {
            let mut state = load(&experiment)?;
            let f = Objective::new(objective, state.space())?;
            let zs = ZoomSettings { shrink, rounds, round_budget };
            let report = zoom(&mut state, &zs, |c| f.eval(c))?;
            save(&state, &experiment)?;
            print(&json!({ "rounds": report, "best": state.incumbent().map(|i| trial_json(state.space(), &state.trials()[i])) }));
        }
        Command::Restart { experiment, from, space, extra, settings } => {
            if experiment.exists() {
                bail!("{} already exists", experiment.display());
            }
            let source = load(&from)?;
            let space = match space {
                Some(p) => read_space(&p)?,
                None => source.space().clone(),
            };
            let mut base = source.settings().clone();
            settings.apply(&mut base)?;
            let space = with_transform(space, &settings);
            // first pass only counts what survives in the new space
            let mut probe = base.clone();
            probe.budget = usize::MAX / 2;
            let (probe, _) = ExperimentState::restart_from(source.trials(), space.clone(), probe)?;
            base.budget = settings.budget.unwrap_or(probe.trials().len() + extra);
            let (state, dropped) = ExperimentState::restart_from(source.trials(), space, base)?;
            save(&state, &experiment)?;
            print(&json!({
                "created": experiment,
                "retained": state.trials().len(),
                "dropped": dropped,
                "budget": state.settings().budget,
            }));
        }
        Command::Bench { which } => bench(which)?,
    }
    Ok(())
}

fn bench(which: Bench) -> Result<()> {
    match which {
        Bench::Rosenbrock { domain, seeds, n_initial, budget, acquisition, transform, out, trace } => {
            let domain = match domain {
                BoxArg::Narrow => RosenbrockBox::Narrow,
                BoxArg::Wide => RosenbrockBox::Wide,
            };
            let mut exp = RosenbrockExperiment::new(domain, (0..seeds).collect());
            exp.settings.n_initial = n_initial;
            exp.settings.budget = budget;
            exp.transform = transform.into();
            SettingsArgs { acquisition: Some(acquisition), ..Default::default() }.apply(&mut exp.settings)?;
            let report = experiment_rosenbrock(&exp)?;
            if let Some(p) = trace {
                write_traces(&p, report.runs.iter().map(|r| (r.seed, r.trace.as_slice())))?;
            }
            write_or_print(&out, &report)?;
        }
        Bench::Surrogate { seeds, budget, dedup, out, trace } => {
            let mut exp = SurrogateExperiment::new((0..seeds).collect());
            exp.settings.budget = budget;
            exp.settings.n_initial = exp.settings.n_initial.min(budget);
            exp.settings.dedup = dedup.into();
            let report = experiment_surrogate(&exp)?;
            if let Some(p) = trace {
                write_traces(&p, report.runs.iter().map(|r| (r.seed, r.trace.as_slice())))?;
            }
            write_or_print(&out, &report)?;
        }
        Bench::Sobol { dim, n, skip } => {
            let mut s = Sobol::starting_at(dim, skip)?;
            let mut out = std::io::BufWriter::new(std::io::stdout().lock());
            for _ in 0..n {
                let p = s.next_point()?;
                let line: Vec<String> = p.iter().map(|x| format_real(*x)).collect();
                match writeln!(out, "{}", line.join(",")) {
                    // a closed pipe (`| head`) is not an error
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
                    r => r?,
                }
            }
            if let Err(e) = out.flush() {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}
