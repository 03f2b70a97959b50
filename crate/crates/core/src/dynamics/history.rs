use std::sync::Arc;

use crate::relaxation::RelaxationEvaluator;
use crate::spectral::{apply_s, Field};
use crate::{Error, Result};

/// A history `φ: [0, ∞) → fields`.
#[derive(Debug, Clone)]
pub enum HistoryFunction {
    /// `φ(t) = S(t)u₀`.
    Resolvent {
        ev: Arc<RelaxationEvaluator>,
        u0: Field,
    },
    /// Piecewise-linear interpolation of samples on an increasing time grid.
    Sampled { times: Vec<f64>, fields: Vec<Field> },
}

impl HistoryFunction {
    pub fn resolvent(ev: Arc<RelaxationEvaluator>, u0: Field) -> Self {
        Self::Resolvent { ev, u0 }
    }

    pub fn sampled(times: Vec<f64>, fields: Vec<Field>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::Parameter(format!(
                "{} sample times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("sample times must increase strictly".into()));
        }
        if fields.iter().any(|f| f.grid() != fields[0].grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self::Sampled { times, fields })
    }

    /// A constant history on `[0, end]`.
    pub fn constant(field: Field, end: f64) -> Result<Self> {
        Self::sampled(vec![0.0, end], vec![field.clone(), field])
    }

    /// The right end of the domain (`∞` for resolvent histories).
    pub fn end(&self) -> f64 {
        match self {
            Self::Resolvent { .. } => f64::INFINITY,
            Self::Sampled { times, .. } => *times.last().expect("non-empty"),
        }
    }

    pub fn start(&self) -> f64 {
        match self {
            Self::Resolvent { .. } => 0.0,
            Self::Sampled { times, .. } => times[0],
        }
    }

    /// Sample times where a sampled history has knots; `None` for analytic
    /// histories.
    pub fn knots(&self) -> Option<&[f64]> {
        match self {
            Self::Resolvent { .. } => None,
            Self::Sampled { times, .. } => Some(times),
        }
    }

    pub fn eval(&self, t: f64) -> Result<Field> {
        match self {
            Self::Resolvent { ev, u0 } => {
                if t < 0.0 {
                    return Err(Error::HistoryRange { t, end: f64::INFINITY });
                }
                apply_s(ev, t, u0)
            }
            Self::Sampled { times, fields } => {
                let end = *times.last().expect("non-empty");
                // tolerate rounding at the ends of the sampled window
                let slack = 1e-12 * end.abs().max(1.0);
                if t < times[0] - slack || t > end + slack {
                    return Err(Error::HistoryRange { t, end });
                }
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    return Ok(fields[0].clone());
                }
                if k == times.len() {
                    return Ok(fields[k - 1].clone());
                }
                let (a, b) = (times[k - 1], times[k]);
                if t == a {
                    return Ok(fields[k - 1].clone());
                }
                let w = (t - a) / (b - a);
                fields[k - 1].scale(1.0 - w).axpy(w, &fields[k])
            }
        }
    }

    /// `φ(t)` for every `t`, in parallel when enabled.
    pub fn eval_many(&self, times: &[f64]) -> Result<Vec<Field>> {
        crate::par::try_map_slice(times, |&t| self.eval(t))
    }
}
