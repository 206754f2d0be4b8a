//! Convergence traces (CSV) and posterior contour grids (JSON).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use bayesopt_core::engine::{ExperimentState, Status};
use bayesopt_core::space::Value;
use serde::{Deserialize, Serialize};

use crate::store::{write_atomic, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("experiment has no completed trials")]
    Empty,
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("contour needs two distinct parameters")]
    SameParameter,
    #[error("resolution must be at least 1")]
    Resolution,
    #[error("cannot fit the surrogate: {0}")]
    Model(bayesopt_core::Error),
    #[error(transparent)]
    Core(#[from] bayesopt_core::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 17 significant digits, exponent notation; exact for every `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_value(v: Value) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        Value::Real(x) => format_real(x),
    }
}

/// Writes `trial,method,<params>,value,best_so_far`, one row per trial.
/// Unfinished and failed trials leave `value` empty.
pub fn write_trace<W: Write>(state: &ExperimentState, out: W) -> Result<(), ExportError> {
    if !state.trials().iter().any(|t| t.status == Status::Completed) {
        return Err(ExportError::Empty);
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["trial".to_string(), "method".to_string()];
    header.extend(state.space().params.iter().map(|p| p.name.clone()));
    header.extend(["value".to_string(), "best_so_far".to_string()]);
    w.write_record(&header)?;
    for (t, best) in state.trials().iter().zip(state.best_so_far()) {
        let mut row = vec![t.index.to_string(), t.method.name().to_string()];
        row.extend(t.config.0.iter().map(|v| format_value(*v)));
        row.push(t.value.map(format_real).unwrap_or_default());
        row.push(best.map(format_real).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_trace(state: &ExperimentState, path: &Path) -> Result<(), ExportError> {
    let mut buf = Vec::new();
    write_trace(state, &mut buf)?;
    write_atomic(path, &buf)?;
    Ok(())
}

/// Posterior mean and std over a lattice in two parameters, the others held
/// at the incumbent. Values are on the output-transform scale of the space
/// (`scale`), with the objective's own sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourGrid {
    pub dims: [String; 2],
    pub resolution: usize,
    pub scale: String,
    /// External values of every parameter at the slice point.
    pub slice: BTreeMap<String, Value>,
    /// External coordinates along each of `dims`.
    pub axes: [Vec<f64>; 2],
    /// `mean[i][j]` is at `(axes[0][i], axes[1][j])`.
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
}

/// Internal lattice coordinates: equispaced with both ends for `r >= 2`,
/// the slice coordinate itself for `r = 1`.
fn lattice(r: usize, at: f64) -> Vec<f64> {
    if r == 1 {
        vec![at]
    } else {
        (0..r).map(|k| k as f64 / (r - 1) as f64).collect()
    }
}

pub fn contour(state: &ExperimentState, dims: (&str, &str), resolution: usize) -> Result<ContourGrid, ExportError> {
    let space = state.space();
    let a = space.index_of(dims.0).ok_or_else(|| ExportError::UnknownParameter(dims.0.into()))?;
    let b = space.index_of(dims.1).ok_or_else(|| ExportError::UnknownParameter(dims.1.into()))?;
    if a == b {
        return Err(ExportError::SameParameter);
    }
    if resolution == 0 {
        return Err(ExportError::Resolution);
    }
    let inc = state.incumbent().ok_or(ExportError::Empty)?;
    let centre = &state.trials()[inc];
    let surrogate = state.surrogate().map_err(ExportError::Model)?;
    let sign = state.settings().orientation.sign() * space.output_transform.monotonicity();

    let ua = lattice(resolution, centre.internal[a]);
    let ub = lattice(resolution, centre.internal[b]);
    let mut axes = [Vec::with_capacity(resolution), Vec::with_capacity(resolution)];
    let mut mean = vec![vec![0.0; resolution]; resolution];
    let mut std = vec![vec![0.0; resolution]; resolution];
    let mut x = centre.internal.clone();
    for (i, &u) in ua.iter().enumerate() {
        x[a] = u;
        for (j, &v) in ub.iter().enumerate() {
            x[b] = v;
            let (config, snapped) = space.snap(&x)?;
            if i == 0 {
                axes[1].push(config.0[b].as_f64());
            }
            if j == 0 {
                axes[0].push(config.0[a].as_f64());
            }
            let (m, s) = surrogate.predict(&snapped)?;
            mean[i][j] = sign * m;
            std[i][j] = s;
        }
    }
    let slice = space.params.iter().zip(&centre.config.0).map(|(p, v)| (p.name.clone(), *v)).collect();
    Ok(ContourGrid {
        dims: [dims.0.to_string(), dims.1.to_string()],
        resolution,
        scale: space.output_transform.name().to_string(),
        slice,
        axes,
        mean,
        std,
    })
}

pub fn export_contour(
    state: &ExperimentState,
    dims: (&str, &str),
    resolution: usize,
    path: &Path,
) -> Result<ContourGrid, ExportError> {
    let grid = contour(state, dims, resolution)?;
    let mut text = serde_json::to_string(&grid).expect("grid serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(grid)
}
