//! The 4-tuple `(A, N, b, c)` and similarity transformations between tuples.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a 4-tuple is read as a dynamical system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    /// `x' = (A + uN)x + bu`, `x(0) = 0`.
    #[serde(rename = "I")]
    TypeI,
    /// `x' = (A + uN)x`, `x(0) = b`.
    #[serde(rename = "II")]
    TypeII,
}

impl SystemKind {
    pub fn label(self) -> &'static str {
        match self {
            SystemKind::TypeI => "I",
            SystemKind::TypeII => "II",
        }
    }
}

impl std::str::FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" | "i" => Ok(SystemKind::TypeI),
            "II" | "2" | "ii" => Ok(SystemKind::TypeII),
            other => Err(Error::InvalidArgument(format!("unknown system kind {other:?}"))),
        }
    }
}

/// A bilinear SISO system `(A, N, b, c)` of dimension `n`.
///
/// The numeric payload is the same for both kinds; `kind` only selects the
/// initial condition and where `b` enters.
#[derive(Debug, Clone, PartialEq)]
pub struct FourTuple {
    pub a: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub kind: SystemKind,
}

impl FourTuple {
    /// Builds a tuple and validates it.
    pub fn new(
        a: DMatrix<f64>,
        n: DMatrix<f64>,
        b: DVector<f64>,
        c: RowDVector<f64>,
        kind: SystemKind,
    ) -> Result<Self> {
        let t = FourTuple { a, n, b, c, kind };
        t.validate()?;
        Ok(t)
    }

    /// Row-major convenience constructor used heavily in tests.
    pub fn from_rows(
        dim: usize,
        a: &[f64],
        n: &[f64],
        b: &[f64],
        c: &[f64],
        kind: SystemKind,
    ) -> Result<Self> {
        if a.len() != dim * dim || n.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {} matrix entries for n = {dim}",
                dim * dim
            )));
        }
        if b.len() != dim || c.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "b has {} entries and c has {}, expected {dim}",
                b.len(),
                c.len()
            )));
        }
        Self::new(
            DMatrix::from_row_slice(dim, dim, a),
            DMatrix::from_row_slice(dim, dim, n),
            DVector::from_column_slice(b),
            RowDVector::from_row_slice(c),
            kind,
        )
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Checks shape consistency and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        if n == 0 {
            return Err(Error::ShapeMismatch("dimension must be positive".into()));
        }
        if self.a.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "A is {}x{}, expected square",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.n.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "N is {}x{}, expected {n}x{n}",
                self.n.nrows(),
                self.n.ncols()
            )));
        }
        if self.b.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "b has length {}, expected {n}",
                self.b.len()
            )));
        }
        if self.c.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "c has length {}, expected {n}",
                self.c.len()
            )));
        }
        let fields: [(&str, &[f64]); 4] = [
            ("A", self.a.as_slice()),
            ("N", self.n.as_slice()),
            ("b", self.b.as_slice()),
            ("c", self.c.as_slice()),
        ];
        for (name, data) in fields {
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEntry(name.into()));
            }
        }
        Ok(())
    }

    pub fn with_kind(mut self, kind: SystemKind) -> Self {
        self.kind = kind;
        self
    }

    /// Change of basis `x = T z`: returns `(T⁻¹AT, T⁻¹NT, T⁻¹b, cT)`, so that
    /// `self` and the result are related by `A = T Â T⁻¹` etc. with this `T`.
    pub fn conjugate(&self, t: &DMatrix<f64>) -> Result<FourTuple> {
        let n = self.dim();
        if t.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "conjugator is {}x{}, expected {n}x{n}",
                t.nrows(),
                t.ncols()
            )));
        }
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("conjugator is singular".into()))?;
        Ok(FourTuple {
            a: &t_inv * &self.a * t,
            n: &t_inv * &self.n * t,
            b: &t_inv * &self.b,
            c: &self.c * t,
            kind: self.kind,
        })
    }

    /// Largest absolute entry over all four blocks.
    pub fn max_abs(&self) -> f64 {
        self.a
            .iter()
            .chain(self.n.iter())
            .chain(self.b.iter())
            .chain(self.c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// An invertible `T` with `A = TÂT⁻¹, N = TN̂T⁻¹, b = Tb̂, c = ĉT⁻¹` and the
/// relative residual of each relation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityWitness {
    pub t: DMatrix<f64>,
    /// Residuals for the A, N, b and c relations, in that order.
    pub residuals: [f64; 4],
}

impl SimilarityWitness {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Relative residuals of the four similarity relations between `t1` and `t2`
/// under `t`. Each is `‖lhs − rhs‖_F / max(‖lhs‖_F, 1)`.
pub fn similarity_residuals(
    t1: &FourTuple,
    t2: &FourTuple,
    t: &DMatrix<f64>,
) -> Option<[f64; 4]> {
    let t_inv = t.clone().try_inverse()?;
    let rel = |diff: f64, base: f64| diff / base.max(1.0);
    Some([
        rel((&t1.a - t * &t2.a * &t_inv).norm(), t1.a.norm()),
        rel((&t1.n - t * &t2.n * &t_inv).norm(), t1.n.norm()),
        rel((&t1.b - t * &t2.b).norm(), t1.b.norm()),
        rel((&t1.c - &t2.c * &t_inv).norm(), t1.c.norm()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_tuple(n: usize) -> FourTuple {
        FourTuple::new(
            DMatrix::identity(n, n),
            DMatrix::identity(n, n),
            DVector::from_element(n, 1.0),
            RowDVector::from_element(n, 1.0),
            SystemKind::TypeI,
        )
        .unwrap()
    }

    #[test]
    fn identity_filled_tuple_is_valid() {
        assert!(identity_tuple(2).validate().is_ok());
    }

    #[test]
    fn wrong_b_length_is_shape_mismatch() {
        let mut t = identity_tuple(2);
        t.b = DVector::from_element(3, 1.0);
        assert!(matches!(t.validate(), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn non_finite_entry_is_rejected() {
        let mut t = identity_tuple(2);
        t.a[(0, 1)] = f64::NAN;
        assert_eq!(t.validate(), Err(Error::NonFiniteEntry("A".into())));
        t.a[(0, 1)] = f64::INFINITY;
        assert_eq!(t.validate(), Err(Error::NonFiniteEntry("A".into())));
    }

    #[test]
    fn conjugation_residuals_vanish() {
        let t = FourTuple::from_rows(
            2,
            &[0.0, 1.0, -2.0, -3.0],
            &[0.5, 0.0, 1.0, 0.0],
            &[0.0, 1.0],
            &[1.0, 0.0],
            SystemKind::TypeI,
        )
        .unwrap();
        let tm = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let conj = t.conjugate(&tm).unwrap();
        let res = similarity_residuals(&t, &conj, &tm).unwrap();
        assert!(res.iter().all(|r| *r < 1e-14), "{res:?}");
    }

    #[test]
    fn kind_parses_from_labels() {
        assert_eq!("I".parse::<SystemKind>().unwrap(), SystemKind::TypeI);
        assert_eq!("II".parse::<SystemKind>().unwrap(), SystemKind::TypeII);
        assert!("III".parse::<SystemKind>().is_err());
    }
}
