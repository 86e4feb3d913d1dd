use nalgebra::DVector;

/// Output samples `y(t_j)` on a time grid, optionally with the states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub outputs: Vec<f64>,
    pub states: Option<Vec<DVector<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `sup_j |y_j − ŷ_j|` against another trajectory on the same grid.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        debug_assert_eq!(self.times.len(), other.times.len());
        self.outputs
            .iter()
            .zip(&other.outputs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.outputs.iter().fold(0.0, |m, y| m.max(y.abs()))
    }
}
