use serde::{Deserialize, Serialize};

use super::real::Real;

/// Shape and initialization metadata of one parameter tensor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    /// Kaiming fan-in for weights; `None` for biases (initialized to zero).
    pub fan_in: Option<usize>,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_bias(&self) -> bool {
        self.fan_in.is_none()
    }
}

/// Parameter values in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<R> {
    pub specs: Vec<ParamSpec>,
    pub values: Vec<Vec<R>>,
}

impl<R: Real> ParamSet<R> {
    pub fn zeros(specs: Vec<ParamSpec>) -> Self {
        let values = specs.iter().map(|s| vec![R::zero(); s.len()]).collect();
        Self { specs, values }
    }

    pub fn zero_grads(&self) -> Vec<Vec<R>> {
        self.values.iter().map(|v| vec![R::zero(); v.len()]).collect()
    }

    /// Total number of scalars.
    pub fn count(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn get(&self, id: usize) -> &[R] {
        &self.values[id]
    }

    pub fn convert<S: Real>(&self) -> ParamSet<S> {
        ParamSet {
            specs: self.specs.clone(),
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|&x| S::from_f64_lossy(x.to_f64_lossy())).collect())
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<R> {
        self.values.iter().flatten().copied().collect()
    }
}
