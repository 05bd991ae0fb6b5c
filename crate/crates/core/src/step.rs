//! Right-continuous step functions.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A right-continuous, piecewise-constant function on the real line.
///
/// The value at `t` is the value attached to the largest knot `<= t`, or
/// `initial_value` when `t` precedes every knot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    initial_value: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, initial_value: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Precondition(format!(
                "step function has {} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Precondition("step function knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(
                "step function knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots, values, initial_value })
    }

    /// The function identically equal to `value`.
    pub fn constant(value: f64) -> Self {
        Self { knots: Vec::new(), values: Vec::new(), initial_value: value }
    }

    /// Builds from trusted, already-sorted knots.
    pub(crate) fn from_sorted(knots: Vec<f64>, values: Vec<f64>, initial_value: f64) -> Self {
        debug_assert_eq!(knots.len(), values.len());
        debug_assert!(knots.windows(2).all(|w| w[0] < w[1]));
        Self { knots, values, initial_value }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Right-continuous evaluation.
    pub fn evaluate(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= t) {
            0 => self.initial_value,
            i => self.values[i - 1],
        }
    }

    /// Left limit `f(t-)`: the value attached to the largest knot `< t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k < t) {
            0 => self.initial_value,
            i => self.values[i - 1],
        }
    }

    /// Evaluates at each point of a sorted grid in a single merge pass.
    pub fn evaluate_sorted(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        let mut idx = 0;
        let mut current = self.initial_value;
        for &t in grid {
            while idx < self.knots.len() && self.knots[idx] <= t {
                current = self.values[idx];
                idx += 1;
            }
            out.push(current);
        }
        out
    }

    /// Re-expresses the function with one knot per grid point.
    ///
    /// Exact when every original knot lies on the grid.
    pub fn on_grid(&self, grid: &[f64]) -> Self {
        Self::from_sorted(grid.to_vec(), self.evaluate_sorted(grid), self.initial_value)
    }

    /// Restriction to `(-inf, horizon]`, keeping the value there unchanged.
    pub fn truncate(&self, horizon: f64) -> Self {
        let end = self.knots.partition_point(|&k| k <= horizon);
        Self::from_sorted(self.knots[..end].to_vec(), self.values[..end].to_vec(), self.initial_value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().copied().zip(self.values.iter().copied())
    }

    /// Parses the JSON form `{"initial_value": x, "steps": [{"t": .., "value": ..}]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("step function JSON: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct Point {
    t: f64,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    initial_value: f64,
    steps: Vec<Point>,
}

impl Serialize for StepFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = Repr {
            initial_value: self.initial_value,
            steps: self.iter().map(|(t, value)| Point { t, value }).collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = Repr::deserialize(deserializer)?;
        let (knots, values) = repr.steps.into_iter().map(|p| (p.t, p.value)).unzip();
        StepFunction::new(knots, values, repr.initial_value).map_err(serde::de::Error::custom)
    }
}
