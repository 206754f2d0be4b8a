use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{mix, retain, ExperimentState, Method, Status, Trial};
use crate::space::Configuration;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoomSettings {
    /// Per-round width factor, in `(0, 1]`.
    pub shrink: f64,
    pub rounds: usize,
    /// New trials per round.
    pub round_budget: usize,
}

impl Default for ZoomSettings {
    fn default() -> Self {
        ZoomSettings { shrink: 0.5, rounds: 3, round_budget: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomRound {
    /// Realized box in the original space's unit cube.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub retained: usize,
    pub new_trials: usize,
    /// Incumbent of the whole experiment after the round.
    pub incumbent: Option<usize>,
}

/// Repeatedly shrinks the search box around the incumbent and continues the
/// search inside it, reusing the trials already in the box. New trials are
/// appended to `state` (whose budget grows accordingly), so the incumbent
/// can only improve.
pub fn zoom<F, E>(state: &mut ExperimentState, settings: &ZoomSettings, mut objective: F) -> Result<Vec<ZoomRound>>
where
    F: FnMut(&Configuration) -> core::result::Result<f64, E>,
{
    if !(settings.shrink > 0.0 && settings.shrink <= 1.0) {
        return Err(Error::validation("shrink factor must lie in (0, 1]"));
    }
    if let Some(p) = state.pending() {
        return Err(Error::PendingTrial(p));
    }
    let dim = state.space.dim();
    let mut lower = vec![0.0; dim];
    let mut upper = vec![1.0; dim];
    let mut rounds = Vec::with_capacity(settings.rounds);
    for round in 0..settings.rounds {
        let center = state.incumbent().map(|i| state.trials[i].internal.clone()).ok_or(Error::NoCompletedTrials)?;
        for d in 0..dim {
            // keep the full shrunken width by sliding the box back inside
            let width = settings.shrink * (upper[d] - lower[d]);
            let lo = (center[d] - 0.5 * width).clamp(0.0, 1.0 - width);
            lower[d] = lo;
            upper[d] = (lo + width).min(1.0);
        }
        let sub_space = state.space.restrict(&lower, &upper)?;
        let (lo, hi) = state.space.unit_box_of(&sub_space)?;
        lower = lo;
        upper = hi;

        let mut sub_settings = state.settings.clone();
        sub_settings.seed = mix(state.settings.seed, round as u64 + 1);
        let (kept, sources, _) = retain(&state.trials, &sub_space, sub_settings.dedup);
        sub_settings.budget = kept.len() + settings.round_budget;
        sub_settings.n_initial = state.settings.n_initial.min(sub_settings.budget);
        let retained = kept.len();
        let (mut sub, _) = ExperimentState::restart_from(&kept, sub_space, sub_settings)?;
        sub.run_loop(&mut objective)?;

        // sub-experiment index -> index in `state`
        let mut map = sources;
        for t in &sub.trials[retained..] {
            let index = state.trials.len();
            let internal = state.space.to_internal(&t.config)?;
            let cached_from = t.cached_from.map(|c| map[c]);
            state.trials.push(Trial { index, internal, cached_from, ..t.clone() });
            if t.status == Status::Completed && t.method != Method::CacheHit {
                state.cache.entry(t.config.key()).or_insert(index);
            }
            map.push(index);
        }
        let new_trials = sub.trials.len() - retained;
        state.settings.budget = state.settings.budget.max(state.trials.len());
        rounds.push(ZoomRound { lower: lower.clone(), upper: upper.clone(), retained, new_trials, incumbent: state.incumbent() });
    }
    Ok(rounds)
}
