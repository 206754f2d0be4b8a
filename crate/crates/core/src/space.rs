//! Parameter definitions and the bijection between external configurations
//! and the internal unit cube on which all modelling happens.
//!
//! Integer parameters are stored as a grid index range `lo..=hi` together with
//! a granularity `K`; the externally visible value is always `K * index`.
//! Ordered sets are treated as a binned continuous coordinate: element `i` of
//! `m` values owns the bin `[i/m, (i+1)/m)` and maps to its midpoint.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for coordinates that drift just outside `[0, 1]`.
pub const CUBE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    Continuous { lo: f64, hi: f64 },
    /// Grid indices `lo..=hi`; the external value is `granularity * index`.
    Integer {
        lo: i64,
        hi: i64,
        #[serde(rename = "K")]
        granularity: u32,
    },
    /// Strictly monotone list of admissible values (ascending or descending).
    Ordered { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

impl ParameterDef {
    pub fn continuous(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        ParameterDef { name: name.into(), kind: ParamKind::Continuous { lo, hi } }
    }

    pub fn integer(name: impl Into<String>, lo: i64, hi: i64, granularity: u32) -> Self {
        ParameterDef { name: name.into(), kind: ParamKind::Integer { lo, hi, granularity } }
    }

    pub fn ordered(name: impl Into<String>, values: Vec<f64>) -> Self {
        ParameterDef { name: name.into(), kind: ParamKind::Ordered { values } }
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidParameter { name: self.name.clone(), reason: reason.into() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(self.invalid("empty name"));
        }
        match &self.kind {
            ParamKind::Continuous { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(self.invalid(format!("need finite lo < hi, got [{lo}, {hi}]")));
                }
            }
            ParamKind::Integer { lo, hi, granularity } => {
                if lo >= hi {
                    return Err(self.invalid(format!("need lo < hi, got [{lo}, {hi}]")));
                }
                if *granularity == 0 {
                    return Err(self.invalid("granularity must be at least 1"));
                }
            }
            ParamKind::Ordered { values } => {
                if values.len() < 2 {
                    return Err(self.invalid("ordered set needs at least two values"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(self.invalid("ordered set values must be finite"));
                }
                let ascending = values.windows(2).all(|w| w[0] < w[1]);
                let descending = values.windows(2).all(|w| w[0] > w[1]);
                if !(ascending || descending) {
                    return Err(self.invalid("ordered set must be strictly monotone"));
                }
            }
        }
        Ok(())
    }

    /// Maps one external value to `[0, 1]`.
    pub fn to_unit(&self, value: Value) -> Result<f64> {
        match (&self.kind, value) {
            (ParamKind::Continuous { lo, hi }, v) => {
                let x = v.as_f64();
                if !(x >= *lo && x <= *hi) {
                    return Err(self.invalid(format!("value {x} outside [{lo}, {hi}]")));
                }
                Ok((x - lo) / (hi - lo))
            }
            (ParamKind::Integer { lo, hi, granularity }, Value::Int(n)) => {
                let k = i64::from(*granularity);
                if n % k != 0 {
                    return Err(self.invalid(format!("value {n} is not a multiple of {k}")));
                }
                let index = n / k;
                if index < *lo || index > *hi {
                    return Err(self.invalid(format!(
                        "value {n} outside [{}, {}]",
                        lo * k,
                        hi * k
                    )));
                }
                Ok((index - lo) as f64 / (hi - lo) as f64)
            }
            (ParamKind::Integer { .. }, Value::Real(x)) => {
                if !x.is_finite() || libm::trunc(x) != x {
                    return Err(self.invalid(format!("value {x} is not an integer")));
                }
                self.to_unit(Value::Int(x as i64))
            }
            (ParamKind::Ordered { values }, v) => {
                let x = v.as_f64();
                let i = values
                    .iter()
                    .position(|&e| e == x)
                    .ok_or_else(|| self.invalid(format!("value {x} is not in the ordered set")))?;
                Ok((i as f64 + 0.5) / values.len() as f64)
            }
        }
    }

    /// Maps a unit coordinate (already clamped to `[0, 1]`) back to an
    /// admissible external value, rounding integers half away from zero.
    pub fn from_unit(&self, u: f64) -> Value {
        match &self.kind {
            ParamKind::Continuous { lo, hi } => {
                let x = lo + u * (hi - lo);
                Value::Real(x.clamp(*lo, *hi))
            }
            ParamKind::Integer { lo, hi, granularity } => {
                let grid = *lo as f64 + u * (hi - lo) as f64;
                let index = (libm::round(grid) as i64).clamp(*lo, *hi);
                Value::Int(index * i64::from(*granularity))
            }
            ParamKind::Ordered { values } => {
                let m = values.len();
                let bin = libm::floor(u * m as f64) as usize;
                Value::Real(values[bin.min(m - 1)])
            }
        }
    }
}

/// External value of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(n) => n as f64,
            Value::Real(x) => x,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(x) => write!(f, "{x:?}"),
        }
    }
}

/// One external value per parameter, in parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<Value>);

impl Configuration {
    pub fn values(&self) -> &[Value] {
        &self.0
    }

    /// Canonical text form used as the duplicate-detection key.
    pub fn key(&self) -> String {
        let mut key = String::new();
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                key.push('|');
            }
            let _ = write!(key, "{v}");
        }
        key
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    #[default]
    None,
    Log,
    Reciprocal,
}

impl OutputTransform {
    pub fn name(self) -> &'static str {
        match self {
            OutputTransform::None => "none",
            OutputTransform::Log => "log",
            OutputTransform::Reciprocal => "reciprocal",
        }
    }

    pub fn apply(self, y: f64) -> Result<f64> {
        let err = Error::Transform { transform: self.name(), value: y };
        if !y.is_finite() {
            return Err(err);
        }
        match self {
            OutputTransform::None => Ok(y),
            OutputTransform::Log if y > 0.0 => Ok(libm::log(y)),
            OutputTransform::Reciprocal if y.abs() > 1e-12 => Ok(1.0 / y),
            _ => Err(err),
        }
    }

    pub fn invert(self, t: f64) -> Result<f64> {
        match self {
            OutputTransform::None => Ok(t),
            OutputTransform::Log => Ok(libm::exp(t)),
            OutputTransform::Reciprocal if t != 0.0 => Ok(1.0 / t),
            OutputTransform::Reciprocal => Err(Error::Transform { transform: "reciprocal", value: t }),
        }
    }

    /// Sign relating the transformed scale to the raw one: the reciprocal
    /// reverses the order of positive outputs.
    pub fn monotonicity(self) -> f64 {
        match self {
            OutputTransform::Reciprocal => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub params: Vec<ParameterDef>,
    #[serde(default)]
    pub output_transform: OutputTransform,
}

impl ParameterSpace {
    pub fn new(params: Vec<ParameterDef>) -> Result<Self> {
        Self::with_transform(params, OutputTransform::None)
    }

    pub fn with_transform(params: Vec<ParameterDef>, output_transform: OutputTransform) -> Result<Self> {
        let space = ParameterSpace { params, output_transform };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::InvalidSpace("at least one parameter is required".to_string()));
        }
        for (i, p) in self.params.iter().enumerate() {
            p.validate()?;
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::InvalidSpace(format!("duplicate parameter name `{}`", p.name)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn to_internal(&self, config: &Configuration) -> Result<Vec<f64>> {
        if config.0.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: config.0.len() });
        }
        self.params.iter().zip(&config.0).map(|(p, &v)| p.to_unit(v)).collect()
    }

    pub fn from_internal(&self, point: &[f64]) -> Result<Configuration> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: point.len() });
        }
        let mut values = Vec::with_capacity(point.len());
        for (index, (p, &u)) in self.params.iter().zip(point).enumerate() {
            if !(-CUBE_SLACK..=1.0 + CUBE_SLACK).contains(&u) {
                return Err(Error::OutsideUnitCube { index, value: u });
            }
            values.push(p.from_unit(u.clamp(0.0, 1.0)));
        }
        Ok(Configuration(values))
    }

    /// Rounds a unit-cube point onto the feasible grid and returns both the
    /// configuration and its internal image.
    pub fn snap(&self, point: &[f64]) -> Result<(Configuration, Vec<f64>)> {
        let config = self.from_internal(point)?;
        let internal = self.to_internal(&config)?;
        Ok((config, internal))
    }

    pub fn contains(&self, config: &Configuration) -> bool {
        self.to_internal(config).is_ok()
    }

    pub fn apply_transform(&self, y: f64) -> Result<f64> {
        self.output_transform.apply(y)
    }

    pub fn invert_transform(&self, t: f64) -> Result<f64> {
        self.output_transform.invert(t)
    }

    /// Sub-space covering the unit-cube box `[lower, upper]` of this space.
    ///
    /// Integer bounds round outward to the grid and ordered sets keep every
    /// value whose bin meets the box; both keep at least two admissible
    /// values whenever the parent has them.
    pub fn restrict(&self, lower: &[f64], upper: &[f64]) -> Result<ParameterSpace> {
        if lower.len() != self.dim() || upper.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: lower.len().min(upper.len()) });
        }
        let mut params = Vec::with_capacity(self.dim());
        for ((p, &a), &b) in self.params.iter().zip(lower).zip(upper) {
            let a = a.clamp(0.0, 1.0);
            let b = b.clamp(0.0, 1.0);
            if a > b {
                return Err(Error::validation(format!("empty zoom interval for `{}`", p.name)));
            }
            let kind = match &p.kind {
                ParamKind::Continuous { lo, hi } => {
                    let (mut nlo, mut nhi) = (lo + a * (hi - lo), lo + b * (hi - lo));
                    if nhi <= nlo {
                        // degenerate interval: widen by a tiny fraction of the parent range
                        let eps = (hi - lo) * 1e-9;
                        nlo = (nlo - eps).max(*lo);
                        nhi = (nhi + eps).min(*hi);
                    }
                    ParamKind::Continuous { lo: nlo, hi: nhi }
                }
                ParamKind::Integer { lo, hi, granularity } => {
                    let span = (hi - lo) as f64;
                    let mut nlo = (*lo + libm::floor(a * span + 1e-9) as i64).clamp(*lo, *hi);
                    let mut nhi = (*lo + libm::ceil(b * span - 1e-9) as i64).clamp(*lo, *hi);
                    if nlo >= nhi {
                        if nhi < *hi {
                            nhi += 1;
                        } else {
                            nlo -= 1;
                        }
                    }
                    ParamKind::Integer { lo: nlo, hi: nhi, granularity: *granularity }
                }
                ParamKind::Ordered { values } => {
                    let m = values.len();
                    let mut first = (libm::floor(a * m as f64) as usize).min(m - 1);
                    let mut last = (libm::ceil(b * m as f64) as usize).clamp(1, m) - 1;
                    if last <= first {
                        if last + 1 < m {
                            last = first + 1;
                        } else {
                            first = last - 1;
                        }
                    }
                    ParamKind::Ordered { values: values[first..=last].to_vec() }
                }
            };
            params.push(ParameterDef { name: p.name.clone(), kind });
        }
        ParameterSpace::with_transform(params, self.output_transform)
    }

    /// Unit-cube box of `sub` expressed in this space's coordinates.
    pub fn unit_box_of(&self, sub: &ParameterSpace) -> Result<(Vec<f64>, Vec<f64>)> {
        if sub.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: sub.dim() });
        }
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for (p, s) in self.params.iter().zip(&sub.params) {
            let (a, b) = match (&p.kind, &s.kind) {
                (ParamKind::Continuous { lo, hi }, ParamKind::Continuous { lo: sl, hi: sh }) => {
                    ((sl - lo) / (hi - lo), (sh - lo) / (hi - lo))
                }
                (ParamKind::Integer { lo, hi, .. }, ParamKind::Integer { lo: sl, hi: sh, .. }) => {
                    let span = (hi - lo) as f64;
                    ((sl - lo) as f64 / span, (sh - lo) as f64 / span)
                }
                (ParamKind::Ordered { values }, ParamKind::Ordered { values: sv }) => {
                    let m = values.len() as f64;
                    let first = values.iter().position(|v| *v == sv[0]);
                    let last = values.iter().position(|v| Some(v) == sv.last());
                    match (first, last) {
                        (Some(f), Some(l)) => (f as f64 / m, (l + 1) as f64 / m),
                        _ => return Err(Error::validation(format!("`{}` is not a sub-range", p.name))),
                    }
                }
                _ => return Err(Error::validation(format!("parameter kind of `{}` differs", p.name))),
            };
            lower.push(a.clamp(0.0, 1.0));
            upper.push(b.clamp(0.0, 1.0));
        }
        Ok((lower, upper))
    }
}
