use super::history::HistoryFunction;
use crate::spectral::{lp_norm, Field};
use crate::{Error, Result};

/// Fields at the nodes `t_n = n·h`, `n = 0..=N`, so that `N·h = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    step: f64,
    fields: Vec<Field>,
}

impl Trajectory {
    pub fn new(step: f64, fields: Vec<Field>) -> Result<Self> {
        if !(step > 0.0) || fields.is_empty() {
            return Err(Error::Parameter("trajectory needs h > 0 and at least one node".into()));
        }
        if fields.iter().any(|f| f.grid() != fields[0].grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { step, fields })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.step * self.intervals() as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.fields.len()).map(|n| self.time(n)).collect()
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn field(&self, n: usize) -> &Field {
        &self.fields[n]
    }

    pub fn last(&self) -> &Field {
        self.fields.last().expect("non-empty")
    }

    pub fn l2_norms(&self) -> Vec<f64> {
        self.fields.iter().map(Field::l2).collect()
    }

    pub fn lp_norms(&self, p: u32) -> Result<Vec<f64>> {
        self.fields.iter().map(|f| lp_norm(f, p)).collect()
    }

    /// Node-wise difference `self − other`.
    pub fn diff(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.fields.len() != other.fields.len() || self.step != other.step {
            return Err(Error::Parameter("trajectories live on different time grids".into()));
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.step, fields)
    }

    /// The trajectory as a piecewise-linear history on `[0, T]`.
    pub fn to_history(&self) -> HistoryFunction {
        HistoryFunction::Sampled {
            times: self.times(),
            fields: self.fields.clone(),
        }
    }

    /// Sub-trajectory on nodes `0..=n`.
    pub fn truncate(&self, n: usize) -> Trajectory {
        Trajectory {
            step: self.step,
            fields: self.fields[..=n].to_vec(),
        }
    }
}
