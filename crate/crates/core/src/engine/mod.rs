//! The sequential optimization loop.
//!
//! An [`ExperimentState`] is an ask-tell state machine: [`ExperimentState::suggest`]
//! appends one pending trial, [`ExperimentState::complete`] records its value.
//! The first `n_initial` trials come from a Sobol' design; after that a GP is
//! refit on every completed trial and the acquisition is maximized over the
//! unit cube, then rounded onto the feasible grid. Rounded configurations
//! that were already evaluated are handled by the [`DedupPolicy`].

mod zoom;

pub use zoom::{zoom, ZoomRound, ZoomSettings};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionKind, AcquisitionSpec, AcquisitionSurface, Orientation};
use crate::gp::{fit_hyperparameters, FittedModel, HyperSettings, Hyperparameters, Standardization};
use crate::optimizer::{maximize, OptimizerSettings};
use crate::sobol::Sobol;
use crate::space::{Configuration, ParameterSpace};
use crate::{Error, Result};

/// How a suggestion that rounds onto an already evaluated configuration is
/// treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DedupPolicy {
    /// Evaluate it again.
    None,
    /// Record a cache hit carrying the known value; no objective call.
    Cache,
    /// Substitute the best unseen candidate from the acquisition screening.
    #[default]
    ExploreNext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Size of the initial design (Sobol' and manual trials).
    pub n_initial: usize,
    /// Total number of trials, cache hits and imported trials included.
    pub budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub acquisition: AcquisitionKind,
    #[serde(default)]
    pub hyper: HyperSettings,
    /// Model steps between full multi-start hyperparameter fits; in between
    /// only the previous optimum is refined.
    #[serde(default = "default_refit_interval")]
    pub refit_interval: usize,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub dedup: DedupPolicy,
}

fn default_refit_interval() -> usize {
    5
}

impl Settings {
    pub fn new(n_initial: usize, budget: usize, seed: u64) -> Self {
        Settings {
            n_initial,
            budget,
            seed,
            orientation: Orientation::default(),
            acquisition: AcquisitionKind::default(),
            hyper: HyperSettings::default(),
            refit_interval: default_refit_interval(),
            optimizer: OptimizerSettings::default(),
            dedup: DedupPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::validation("budget must be positive"));
        }
        if self.n_initial > self.budget {
            return Err(Error::validation("initial design larger than the budget"));
        }
        if self.refit_interval == 0 {
            return Err(Error::validation("refit interval must be positive"));
        }
        self.acquisition.validate()?;
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sobol,
    Model,
    Manual,
    CacheHit,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sobol => "Sobol",
            Method::Model => "Model",
            Method::Manual => "Manual",
            Method::CacheHit => "CacheHit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pending,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub method: Method,
    pub config: Configuration,
    pub internal: Vec<f64>,
    /// Raw objective value; present exactly when the trial completed.
    pub value: Option<f64>,
    pub status: Status,
    /// Index of the trial whose value a cache hit reuses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cached_from: Option<usize>,
    /// Carried over from an earlier experiment by a restart.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub imported: bool,
}

impl Trial {
    /// Whether evaluating this trial cost an objective call in this experiment.
    pub fn is_evaluation(&self) -> bool {
        self.status != Status::Pending && self.method != Method::CacheHit && !self.imported
    }
}

/// Why a suggestion was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    InitialDesign,
    Model { acquisition: f64 },
    /// The acquisition maximizer was a duplicate; this is the best unseen
    /// screening candidate.
    DedupSubstitute { acquisition: f64 },
    /// No unseen candidate survived screening; next unseen Sobol' point.
    DedupSobol,
    /// The GP could not be fit; next Sobol' point.
    FitFallback,
    CacheHit { source: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub trial: usize,
    pub provenance: Provenance,
}

/// Counters that fully determine the state of the pseudo-random streams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Next Sobol' index of the design stream.
    pub sobol_index: u64,
    /// Number of GP fits performed so far.
    pub model_steps: u64,
}

/// GP fitted on the completed trials, together with the target scaling.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub fitted: FittedModel,
    pub scaling: Standardization,
}

impl Surrogate {
    /// Posterior mean and std at an internal point, in score units.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        let p = self.fitted.model.posterior(x)?;
        Ok((self.scaling.inverse(p.mean), p.std * self.scaling.scale))
    }
}

const DEDUP_SOBOL_TRIES: usize = 4096;

#[derive(Debug, Clone)]
pub struct ExperimentState {
    space: ParameterSpace,
    settings: Settings,
    trials: Vec<Trial>,
    counters: Counters,
    hyperparameters: Option<Hyperparameters>,
    cache: BTreeMap<String, usize>,
}

fn mix(a: u64, b: u64) -> u64 {
    a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17)
}

/// First design index for `seed`: seeds select disjoint aligned blocks of
/// the sequence, each at least as long as the initial design.
fn design_start(seed: u64, n_initial: usize) -> u64 {
    let block = (n_initial.max(1) as u64).next_power_of_two();
    let blocks = (1u64 << 31) / block;
    (seed % blocks) * block
}

impl ExperimentState {
    pub fn new(space: ParameterSpace, settings: Settings) -> Result<Self> {
        let counters = Counters { sobol_index: design_start(settings.seed, settings.n_initial), model_steps: 0 };
        Self::from_parts(space, settings, Vec::new(), counters, None)
    }

    /// Reassembles a state from its persisted parts, checking consistency.
    pub fn from_parts(
        space: ParameterSpace,
        settings: Settings,
        trials: Vec<Trial>,
        counters: Counters,
        hyperparameters: Option<Hyperparameters>,
    ) -> Result<Self> {
        space.validate()?;
        settings.validate()?;
        if space.dim() > crate::sobol::MAX_DIM {
            return Err(Error::SobolDimension(space.dim()));
        }
        let mut state = ExperimentState { space, settings, trials: Vec::new(), counters, hyperparameters, cache: BTreeMap::new() };
        for (i, t) in trials.into_iter().enumerate() {
            if t.index != i {
                return Err(Error::validation("trial indices must be consecutive from 0"));
            }
            if state.trials.iter().any(|p| p.status == Status::Pending) {
                return Err(Error::validation("only the last trial may be pending"));
            }
            if state.space.to_internal(&t.config)? != t.internal {
                return Err(Error::validation(alloc::format!("trial {i}: internal point does not match configuration")));
            }
            match t.status {
                Status::Completed if !t.value.is_some_and(f64::is_finite) => {
                    return Err(Error::validation(alloc::format!("trial {i}: completed without a finite value")));
                }
                Status::Pending | Status::Failed if t.value.is_some() => {
                    return Err(Error::validation(alloc::format!("trial {i}: value on an unfinished trial")));
                }
                _ => {}
            }
            if let Some(src) = t.cached_from {
                if src >= i || t.method != Method::CacheHit {
                    return Err(Error::validation(alloc::format!("trial {i}: bad cache reference")));
                }
            }
            if t.status == Status::Completed && t.method != Method::CacheHit {
                state.cache.entry(t.config.key()).or_insert(i);
            }
            state.trials.push(t);
        }
        Ok(state)
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn hyperparameters(&self) -> Option<&Hyperparameters> {
        self.hyperparameters.as_ref()
    }

    /// Extends the total budget, e.g. to continue a finished experiment.
    pub fn extend_budget(&mut self, extra: usize) {
        self.settings.budget += extra;
    }

    pub fn budget_exhausted(&self) -> bool {
        self.trials.len() >= self.settings.budget
    }

    pub fn pending(&self) -> Option<usize> {
        self.trials.last().filter(|t| t.status == Status::Pending).map(|t| t.index)
    }

    /// Number of objective invocations billed to this experiment.
    pub fn objective_calls(&self) -> usize {
        self.trials.iter().filter(|t| t.is_evaluation()).count()
    }

    /// Value on the maximization scale: orientation and transform applied.
    pub fn score(&self, raw: f64) -> Result<f64> {
        let t = self.space.apply_transform(raw)?;
        Ok(self.settings.orientation.sign() * self.space.output_transform.monotonicity() * t)
    }

    fn trial_score(&self, t: &Trial) -> Option<f64> {
        match (t.status, t.value) {
            (Status::Completed, Some(v)) => self.score(v).ok(),
            _ => None,
        }
    }

    /// Best completed trial; ties go to the lowest index.
    pub fn incumbent(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for t in &self.trials {
            if let Some(s) = self.trial_score(t) {
                if best.map_or(true, |(_, b)| s > b) {
                    best = Some((t.index, s));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Raw value of the incumbent after each trial (`None` before the first
    /// completion).
    pub fn best_so_far(&self) -> Vec<Option<f64>> {
        let mut best: Option<(f64, f64)> = None;
        self.trials
            .iter()
            .map(|t| {
                if let (Some(s), Some(v)) = (self.trial_score(t), t.value) {
                    if best.map_or(true, |(b, _)| s > b) {
                        best = Some((s, v));
                    }
                }
                best.map(|(_, v)| v)
            })
            .collect()
    }

    fn push(&mut self, method: Method, config: Configuration, internal: Vec<f64>) -> usize {
        let index = self.trials.len();
        self.trials.push(Trial { index, method, config, internal, value: None, status: Status::Pending, cached_from: None, imported: false });
        index
    }

    fn check_can_add(&self) -> Result<()> {
        if let Some(p) = self.pending() {
            return Err(Error::PendingTrial(p));
        }
        if self.budget_exhausted() {
            return Err(Error::BudgetExhausted);
        }
        Ok(())
    }

    /// Adds a user-chosen configuration as a pending trial.
    pub fn add_manual(&mut self, config: Configuration) -> Result<usize> {
        self.check_can_add()?;
        let internal = self.space.to_internal(&config)?;
        Ok(self.push(Method::Manual, config, internal))
    }

    /// Proposes the next configuration and appends it as a trial. Cache hits
    /// are returned already completed and must not be evaluated.
    pub fn suggest(&mut self) -> Result<Suggestion> {
        self.check_can_add()?;
        if self.trials.len() < self.settings.n_initial {
            return self.suggest_sobol(Provenance::InitialDesign);
        }
        let surrogate = match self.fit_for_step() {
            Ok(s) => s,
            Err(_) => return self.suggest_sobol(Provenance::FitFallback),
        };
        let seed = mix(self.settings.seed, self.trials.len() as u64 + 1);
        let incumbent = surrogate.fitted.model.targets().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let surface = AcquisitionSurface {
            model: &surrogate.fitted.model,
            spec: AcquisitionSpec { kind: self.settings.acquisition, incumbent, seed },
        };
        let max = match maximize(&surface, &self.settings.optimizer, self.space.dim(), seed) {
            Ok(m) => m,
            Err(_) => return self.suggest_sobol(Provenance::FitFallback),
        };
        let (config, internal) = self.space.snap(&max.point)?;
        let key = config.key();
        if self.settings.dedup == DedupPolicy::None || !self.cache.contains_key(&key) {
            let trial = self.push(Method::Model, config, internal);
            return Ok(Suggestion { trial, provenance: Provenance::Model { acquisition: max.value } });
        }
        if self.settings.dedup == DedupPolicy::Cache {
            return Ok(self.cache_hit(config, internal, self.cache[&key]));
        }
        for c in &max.candidates[1..] {
            let (config, internal) = self.space.snap(&c.point)?;
            if !self.cache.contains_key(&config.key()) {
                let trial = self.push(Method::Model, config, internal);
                return Ok(Suggestion { trial, provenance: Provenance::DedupSubstitute { acquisition: c.value } });
            }
        }
        self.suggest_sobol(Provenance::DedupSobol)
    }

    /// Next design point; duplicates are resolved by the dedup policy, with
    /// `explore-next` walking forward along the sequence.
    fn suggest_sobol(&mut self, provenance: Provenance) -> Result<Suggestion> {
        let mut sobol = Sobol::starting_at(self.space.dim(), self.counters.sobol_index)?;
        let mut first = None;
        for _ in 0..DEDUP_SOBOL_TRIES {
            let point = sobol.next_point()?;
            let (config, internal) = self.space.snap(&point)?;
            let source = self.cache.get(&config.key()).copied();
            match (source, self.settings.dedup) {
                (None, _) | (Some(_), DedupPolicy::None) => {
                    self.counters.sobol_index = sobol.index();
                    let trial = self.push(Method::Sobol, config, internal);
                    return Ok(Suggestion { trial, provenance });
                }
                (Some(src), DedupPolicy::Cache) => {
                    self.counters.sobol_index = sobol.index();
                    return Ok(self.cache_hit(config, internal, src));
                }
                (Some(src), DedupPolicy::ExploreNext) => {
                    if first.is_none() {
                        first = Some((sobol.index(), config, internal, src));
                    }
                }
            }
        }
        // every probed point was seen: the space is (nearly) exhausted
        let (index, config, internal, src) = first.expect("at least one probe");
        self.counters.sobol_index = index;
        Ok(self.cache_hit(config, internal, src))
    }

    fn cache_hit(&mut self, config: Configuration, internal: Vec<f64>, source: usize) -> Suggestion {
        let value = self.trials[source].value;
        let trial = self.push(Method::CacheHit, config, internal);
        let t = &mut self.trials[trial];
        t.value = value;
        t.status = Status::Completed;
        t.cached_from = Some(source);
        Suggestion { trial, provenance: Provenance::CacheHit { source } }
    }

    fn pending_trial(&mut self, index: usize) -> Result<&mut Trial> {
        let t = self.trials.get_mut(index).ok_or(Error::UnknownTrial(index))?;
        if t.status != Status::Pending {
            return Err(Error::NotPending(index));
        }
        Ok(t)
    }

    /// Records the objective value of a pending trial. Non-finite values and
    /// values outside the output transform's domain mark the trial failed.
    pub fn complete(&mut self, index: usize, value: f64) -> Result<Status> {
        self.pending_trial(index)?;
        let ok = value.is_finite() && self.score(value).is_ok();
        let t = self.pending_trial(index)?;
        if ok {
            t.value = Some(value);
            t.status = Status::Completed;
            let key = t.config.key();
            self.cache.entry(key).or_insert(index);
            Ok(Status::Completed)
        } else {
            t.status = Status::Failed;
            Ok(Status::Failed)
        }
    }

    pub fn fail(&mut self, index: usize) -> Result<()> {
        self.pending_trial(index)?.status = Status::Failed;
        Ok(())
    }

    /// Suggests and evaluates until the budget is used, returning the
    /// incumbent. Objective errors mark the trial failed.
    pub fn run_loop<F, E>(&mut self, objective: F) -> Result<Option<usize>>
    where
        F: FnMut(&Configuration) -> core::result::Result<f64, E>,
    {
        self.run_trials(objective, usize::MAX)?;
        Ok(self.incumbent())
    }

    /// Like [`run_loop`](Self::run_loop) but stops after at most `count`
    /// trials have been finished; returns how many were.
    pub fn run_trials<F, E>(&mut self, mut objective: F, count: usize) -> Result<usize>
    where
        F: FnMut(&Configuration) -> core::result::Result<f64, E>,
    {
        let mut done = 0;
        while done < count {
            let index = match self.pending() {
                Some(p) => p,
                None if self.budget_exhausted() => break,
                None => self.suggest()?.trial,
            };
            done += 1;
            if self.trials[index].status != Status::Pending {
                continue;
            }
            match objective(&self.trials[index].config) {
                Ok(v) => {
                    self.complete(index, v)?;
                }
                Err(_) => self.fail(index)?,
            }
        }
        Ok(done)
    }

    /// Completed, non-duplicate trials as (internal point, score) pairs.
    fn training_data(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for t in self.trials.iter().filter(|t| t.method != Method::CacheHit) {
            if let Some(s) = self.trial_score(t) {
                xs.push(t.internal.clone());
                ys.push(s);
            }
        }
        (xs, ys)
    }

    fn fit(&self, full: bool) -> Result<Surrogate> {
        let (xs, ys) = self.training_data();
        if xs.len() < 2 {
            return Err(Error::Fit(alloc::format!("{} usable observations, need 2", xs.len())));
        }
        let scaling = Standardization::from_targets(&ys);
        let zs: Vec<f64> = ys.iter().map(|y| scaling.forward(*y)).collect();
        let warm = self.hyperparameters.as_ref();
        let mut hyper = self.settings.hyper.clone();
        if !full && warm.is_some() {
            hyper.n_starts = 0;
        }
        let fitted = fit_hyperparameters(&xs, &zs, &hyper, warm)?;
        Ok(Surrogate { fitted, scaling })
    }

    fn fit_for_step(&mut self) -> Result<Surrogate> {
        let full = self.counters.model_steps % self.settings.refit_interval as u64 == 0;
        let s = self.fit(full)?;
        self.counters.model_steps += 1;
        self.hyperparameters = Some(s.fitted.hyperparameters.clone());
        Ok(s)
    }

    /// Fits the surrogate on all completed trials without touching the state.
    pub fn surrogate(&self) -> Result<Surrogate> {
        self.fit(true)
    }

    /// Starts a new experiment on `space` that reuses the completed trials
    /// of an earlier one without re-evaluating them. Trials that do not fit
    /// the space are dropped; their count is returned. `settings.budget` is
    /// the total including retained trials.
    pub fn restart_from(stored: &[Trial], space: ParameterSpace, settings: Settings) -> Result<(Self, usize)> {
        space.validate()?;
        let (retained, _, dropped) = retain(stored, &space, settings.dedup);
        if settings.budget < retained.len() {
            return Err(Error::validation(alloc::format!(
                "budget {} is smaller than the {} retained trials",
                settings.budget,
                retained.len()
            )));
        }
        let mut settings = settings;
        let n0 = settings.n_initial;
        settings.n_initial = if retained.len() < 2 {
            retained.len() + n0.min(settings.budget - retained.len())
        } else {
            retained.len()
        };
        let counters = Counters { sobol_index: design_start(settings.seed, n0), model_steps: 0 };
        Ok((Self::from_parts(space, settings, retained, counters, None)?, dropped))
    }
}

/// Completed, non-cache-hit trials of `stored` that fit `space`, renumbered
/// and marked imported, with their original indices and the dropped count.
fn retain(stored: &[Trial], space: &ParameterSpace, dedup: DedupPolicy) -> (Vec<Trial>, Vec<usize>, usize) {
    let mut retained = Vec::new();
    let mut sources = Vec::new();
    let mut dropped = 0;
    let mut seen = BTreeMap::new();
    for t in stored.iter().filter(|t| t.status == Status::Completed && t.method != Method::CacheHit) {
        let Ok(internal) = space.to_internal(&t.config) else {
            dropped += 1;
            continue;
        };
        if seen.insert(t.config.key(), ()).is_some() && dedup != DedupPolicy::None {
            continue;
        }
        let index = retained.len();
        retained.push(Trial { index, internal, cached_from: None, imported: true, ..t.clone() });
        sources.push(t.index);
    }
    (retained, sources, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ParameterDef, Value};
    use alloc::vec;

    fn space_1d() -> ParameterSpace {
        ParameterSpace::new(vec![ParameterDef::continuous("x", 0.0, 1.0)]).unwrap()
    }

    #[test]
    fn initial_design_is_sobol() {
        let mut s = ExperimentState::new(space_1d(), Settings::new(5, 8, 0)).unwrap();
        for i in 0..5 {
            let g = s.suggest().unwrap();
            assert_eq!(g.provenance, Provenance::InitialDesign);
            assert_eq!(s.trials()[i].method, Method::Sobol);
            s.complete(g.trial, i as f64).unwrap();
        }
        let g = s.suggest().unwrap();
        assert!(matches!(g.provenance, Provenance::Model { .. }));
    }

    #[test]
    fn incumbent_and_failures() {
        let mut s = ExperimentState::new(space_1d(), Settings::new(3, 4, 0)).unwrap();
        for v in [3.2, 7.7, 1.1] {
            let g = s.suggest().unwrap();
            s.complete(g.trial, v).unwrap();
        }
        assert_eq!(s.incumbent(), Some(1));
        let g = s.suggest().unwrap();
        assert_eq!(s.complete(g.trial, f64::NAN).unwrap(), Status::Failed);
        assert_eq!(s.incumbent(), Some(1));
        assert_eq!(s.complete(g.trial, 1.0), Err(Error::NotPending(3)));
        assert_eq!(s.complete(9, 1.0), Err(Error::UnknownTrial(9)));
        assert_eq!(s.suggest(), Err(Error::BudgetExhausted));
    }

    #[test]
    fn one_pending_at_a_time() {
        let mut s = ExperimentState::new(space_1d(), Settings::new(2, 4, 0)).unwrap();
        s.suggest().unwrap();
        assert_eq!(s.suggest(), Err(Error::PendingTrial(0)));
        assert_eq!(s.add_manual(Configuration(vec![Value::Real(0.3)])), Err(Error::PendingTrial(0)));
    }

    #[test]
    fn minimization_and_transform_orientation() {
        let mut settings = Settings::new(3, 3, 0);
        settings.orientation = Orientation::Minimize;
        let space = ParameterSpace::with_transform(
            vec![ParameterDef::continuous("x", 0.0, 1.0)],
            crate::space::OutputTransform::Reciprocal,
        )
        .unwrap();
        let mut s = ExperimentState::new(space, settings).unwrap();
        for v in [2.0, 0.5, 4.0] {
            let g = s.suggest().unwrap();
            s.complete(g.trial, v).unwrap();
        }
        assert_eq!(s.incumbent(), Some(1));
        assert_eq!(s.best_so_far(), vec![Some(2.0), Some(0.5), Some(0.5)]);
    }

    #[test]
    fn budget_equal_to_design_is_pure_sobol() {
        let mut s = ExperimentState::new(space_1d(), Settings::new(4, 4, 2)).unwrap();
        let best = s.run_loop(|c| Ok::<_, ()>(-(c.0[0].as_f64() - 0.3).abs())).unwrap();
        assert!(s.trials().iter().all(|t| t.method == Method::Sobol));
        assert_eq!(s.objective_calls(), 4);
        assert!(best.is_some());
    }

    #[test]
    fn objective_errors_fail_trials() {
        let mut s = ExperimentState::new(space_1d(), Settings::new(3, 6, 0)).unwrap();
        let mut n = 0;
        s.run_loop(|c| {
            n += 1;
            if n % 2 == 0 {
                Err("boom")
            } else {
                Ok(c.0[0].as_f64())
            }
        })
        .unwrap();
        assert_eq!(s.trials().len(), 6);
        assert_eq!(s.trials().iter().filter(|t| t.status == Status::Failed).count(), 3);
    }

    #[test]
    fn from_parts_rejects_inconsistent_trials() {
        let mut s = ExperimentState::new(space_1d(), Settings::new(2, 3, 0)).unwrap();
        let g = s.suggest().unwrap();
        s.complete(g.trial, 1.0).unwrap();
        let mut trials = s.trials().to_vec();
        trials[0].internal = vec![0.123];
        assert!(ExperimentState::from_parts(space_1d(), s.settings().clone(), trials.clone(), s.counters(), None).is_err());
        trials[0].internal = s.trials()[0].internal.clone();
        trials[0].value = None;
        assert!(ExperimentState::from_parts(space_1d(), s.settings().clone(), trials, s.counters(), None).is_err());
    }

    #[test]
    fn explore_next_takes_best_unseen_screening_candidate() {
        // A coarse 1-D grid pushes the acquisition maximum onto seen points.
        let space = ParameterSpace::new(vec![ParameterDef::integer("n", 0, 6, 1)]).unwrap();
        let f = |c: &Configuration| -(c.0[0].as_f64() - 3.2) * (c.0[0].as_f64() - 3.2);
        let mut settings = Settings::new(3, 7, 4);
        settings.optimizer.n_candidates = Some(64);
        let mut state = ExperimentState::new(space.clone(), settings.clone()).unwrap();
        let mut substitutes = 0;
        while !state.budget_exhausted() {
            let mut replay = state.clone();
            let g = state.suggest().unwrap();
            if let Provenance::DedupSubstitute { acquisition } = g.provenance {
                substitutes += 1;
                let surrogate = replay.fit_for_step().unwrap();
                let seed = mix(settings.seed, replay.trials.len() as u64 + 1);
                let incumbent = surrogate.fitted.model.targets().iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let surface = AcquisitionSurface {
                    model: &surrogate.fitted.model,
                    spec: AcquisitionSpec { kind: settings.acquisition, incumbent, seed },
                };
                let max = maximize(&surface, &settings.optimizer, 1, seed).unwrap();
                let key = |p: &[f64]| space.snap(p).unwrap().0.key();
                let seen: Vec<String> = replay.trials.iter().map(|t| t.config.key()).collect();
                assert!(seen.contains(&key(&max.point)));
                let expected = max.candidates.iter().find(|c| !seen.contains(&key(&c.point))).unwrap();
                assert_eq!(expected.value, acquisition);
                assert_eq!(key(&expected.point), state.trials[g.trial].config.key());
            }
            let v = f(&state.trials[g.trial].config);
            state.complete(g.trial, v).unwrap();
        }
        assert!(substitutes > 0, "no duplicate suggestion was produced");
        let keys: BTreeMap<String, ()> = state.trials.iter().map(|t| (t.config.key(), ())).collect();
        assert_eq!(keys.len(), state.trials.len());
    }

    #[test]
    fn seeds_pick_different_designs() {
        let a = ExperimentState::new(space_1d(), Settings::new(5, 5, 0)).unwrap();
        let b = ExperimentState::new(space_1d(), Settings::new(5, 5, 1)).unwrap();
        assert_eq!(a.counters().sobol_index, 0);
        assert_eq!(b.counters().sobol_index, 8);
    }
}
