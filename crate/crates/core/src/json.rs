//! JSON documents for tuples and trajectories.
//!
//! Reals are written as decimal strings holding the shortest representation
//! that parses back to the same `f64`, so fixtures are portable across
//! languages. Matrices are row-major arrays of arrays. Plain JSON numbers are
//! accepted on input.

use std::fmt;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::input::PiecewiseConstantInput;
use crate::system::{FourTuple, SystemKind};
use crate::trajectory::Trajectory;

/// An `f64` carried as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decimal(pub f64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // `{:?}` is the shortest round-trip form and switches to exponent
        // notation for very large or small magnitudes.
        s.serialize_str(&format!("{:?}", self.0))
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct DecimalVisitor;

        impl Visitor<'_> for DecimalVisitor {
            type Value = Decimal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string or a number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Decimal, E> {
                v.trim()
                    .parse::<f64>()
                    .map(Decimal)
                    .map_err(|_| E::custom(format!("invalid decimal {v:?}")))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }
        }

        d.deserialize_any(DecimalVisitor)
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<Decimal>> {
    m.row_iter()
        .map(|row| row.iter().map(|&v| Decimal(v)).collect())
        .collect()
}

pub fn vector_entries<'a>(v: impl IntoIterator<Item = &'a f64>) -> Vec<Decimal> {
    v.into_iter().map(|&x| Decimal(x)).collect()
}

fn matrix_from_rows(name: &str, rows: &[Vec<Decimal>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch(format!("{name} must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j].0))
}

/// `serialize_with` helper for embedding matrices in result documents.
pub fn ser_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    matrix_rows(m).serialize(s)
}

pub fn ser_vector<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    vector_entries(v.iter()).serialize(s)
}

pub fn ser_row<S: Serializer>(v: &RowDVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    vector_entries(v.iter()).serialize(s)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TupleDoc {
    n: usize,
    kind: SystemKind,
    #[serde(rename = "A")]
    a: Vec<Vec<Decimal>>,
    #[serde(rename = "N")]
    n_mat: Vec<Vec<Decimal>>,
    b: Vec<Decimal>,
    c: Vec<Decimal>,
}

impl From<&FourTuple> for TupleDoc {
    fn from(t: &FourTuple) -> Self {
        TupleDoc {
            n: t.dim(),
            kind: t.kind,
            a: matrix_rows(&t.a),
            n_mat: matrix_rows(&t.n),
            b: vector_entries(t.b.iter()),
            c: vector_entries(t.c.iter()),
        }
    }
}

impl TryFrom<TupleDoc> for FourTuple {
    type Error = Error;

    fn try_from(doc: TupleDoc) -> Result<Self> {
        let n = doc.n;
        if n == 0 {
            return Err(Error::ShapeMismatch("n must be positive".into()));
        }
        if doc.b.len() != n {
            return Err(Error::ShapeMismatch(format!("b has length {}, expected {n}", doc.b.len())));
        }
        if doc.c.len() != n {
            return Err(Error::ShapeMismatch(format!("c has length {}, expected {n}", doc.c.len())));
        }
        FourTuple::new(
            matrix_from_rows("A", &doc.a, n)?,
            matrix_from_rows("N", &doc.n_mat, n)?,
            DVector::from_iterator(n, doc.b.iter().map(|d| d.0)),
            RowDVector::from_iterator(n, doc.c.iter().map(|d| d.0)),
            doc.kind,
        )
    }
}

impl Serialize for FourTuple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TupleDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourTuple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = TupleDoc::deserialize(d)?;
        FourTuple::try_from(doc).map_err(de::Error::custom)
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::ParseError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Canonical compact document for a tuple.
pub fn to_json(t: &FourTuple) -> String {
    serde_json::to_string(&TupleDoc::from(t)).expect("tuple documents always serialize")
}

/// Parses and validates a tuple document. Syntax and schema problems are
/// `ParseError`s; well-formed documents with inconsistent shapes or
/// non-finite values report `ShapeMismatch` / `NonFiniteEntry`.
pub fn from_json(text: &str) -> Result<FourTuple> {
    let doc: TupleDoc = serde_json::from_str(text).map_err(parse_error)?;
    FourTuple::try_from(doc)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDoc {
    times: Vec<Decimal>,
    outputs: Vec<Decimal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<Vec<Vec<Decimal>>>,
}

impl Serialize for Trajectory {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrajectoryDoc {
            times: vector_entries(&self.times),
            outputs: vector_entries(&self.outputs),
            states: self
                .states
                .as_ref()
                .map(|xs| xs.iter().map(|x| vector_entries(x.iter())).collect()),
        }
        .serialize(s)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InputDoc {
    breakpoints: Vec<Decimal>,
    levels: Vec<Decimal>,
    horizon: Decimal,
}

/// Reads a piecewise-constant input `{"breakpoints", "levels", "horizon"}`.
pub fn input_from_json(text: &str) -> Result<PiecewiseConstantInput> {
    let doc: InputDoc = serde_json::from_str(text).map_err(parse_error)?;
    PiecewiseConstantInput::new(
        doc.breakpoints.iter().map(|d| d.0).collect(),
        doc.levels.iter().map(|d| d.0).collect(),
        doc.horizon.0,
    )
}

pub fn trajectory_to_json(tr: &Trajectory) -> String {
    serde_json::to_string(tr).expect("trajectory documents always serialize")
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    let doc: TrajectoryDoc = serde_json::from_str(text).map_err(parse_error)?;
    if doc.times.len() != doc.outputs.len() {
        return Err(Error::ShapeMismatch("times and outputs differ in length".into()));
    }
    if let Some(states) = &doc.states {
        if states.len() != doc.times.len() {
            return Err(Error::ShapeMismatch("states and times differ in length".into()));
        }
    }
    Ok(Trajectory {
        times: doc.times.iter().map(|d| d.0).collect(),
        outputs: doc.outputs.iter().map(|d| d.0).collect(),
        states: doc.states.map(|xs| {
            xs.iter()
                .map(|x| DVector::from_iterator(x.len(), x.iter().map(|d| d.0)))
                .collect()
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TRUNCATED: &str = r#"{"n":2,"kind":"I","A":[["0.0","1.0"],["#;

    fn canonical_sample() -> String {
        r#"{"n":2,"kind":"I","A":[["0.0","1.0"],["-2.5","-0.1"]],"N":[["1.0","0.0"],["0.0","0.0"]],"b":["0.0","1.0"],"c":["1.0","0.0"]}"#.to_string()
    }

    #[test]
    fn input_document_accepts_numbers_and_strings() {
        let u = input_from_json(r#"{"breakpoints":[0,"1.5"],"levels":[1,"-2"],"horizon":3}"#).unwrap();
        assert_eq!(u.breakpoints(), &[0.0, 1.5]);
        assert_eq!(u.levels(), &[1.0, -2.0]);
        assert_eq!(u.horizon(), 3.0);
        assert!(input_from_json(r#"{"breakpoints":[1],"levels":[1],"horizon":3}"#).is_err());
    }

    #[test]
    fn canonical_document_round_trips_exactly() {
        let d = canonical_sample();
        assert_eq!(to_json(&from_json(&d).unwrap()), d);
    }

    #[test]
    fn malformed_document_reports_position() {
        match from_json(TRUNCATED) {
            Err(Error::ParseError { line, column, .. }) => {
                assert_eq!(line, 1);
                assert!(column > 0);
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn missing_n_key_is_parse_error() {
        let d = r#"{"n":1,"kind":"II","A":[["1.0"]],"b":["1.0"],"c":["1.0"]}"#;
        let err = from_json(d).unwrap_err();
        assert_eq!(err.name(), "ParseError");
        assert!(err.to_string().contains("`N`"), "{err}");
    }

    #[test]
    fn scalar_tuple_round_trip() {
        let t = FourTuple::from_rows(1, &[-1.0], &[0.5], &[1.0], &[2.0], SystemKind::TypeII).unwrap();
        assert_eq!(from_json(&to_json(&t)).unwrap(), t);
    }

    #[test]
    fn numbers_are_accepted_on_input() {
        let d = r#"{"n":1,"kind":"I","A":[[-1]],"N":[[0.5]],"b":[1],"c":[2e0]}"#;
        let t = from_json(d).unwrap();
        assert_eq!(t.c[0], 2.0);
    }

    #[test]
    fn shape_errors_after_parsing() {
        let d = r#"{"n":2,"kind":"I","A":[["1"]],"N":[["1"]],"b":["1"],"c":["1"]}"#;
        assert_eq!(from_json(d).unwrap_err().name(), "ShapeMismatch");
        let d = r#"{"n":1,"kind":"I","A":[["inf"]],"N":[["1"]],"b":["1"],"c":["1"]}"#;
        assert_eq!(from_json(d).unwrap_err().name(), "NonFiniteEntry");
    }

    #[test]
    fn trajectory_round_trip() {
        let tr = Trajectory {
            times: vec![0.0, 0.5],
            outputs: vec![1.0, 1e-300],
            states: Some(vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-0.1])]),
        };
        let text = trajectory_to_json(&tr);
        assert_eq!(trajectory_from_json(&text).unwrap(), tr);
        assert_eq!(trajectory_to_json(&trajectory_from_json(&text).unwrap()), text);
    }

    proptest! {
        #[test]
        fn tuple_json_is_identity(
            n in 1usize..4,
            seed in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 40),
            kind in prop_oneof![Just(SystemKind::TypeI), Just(SystemKind::TypeII)],
        ) {
            let take = |k: usize, off: usize| seed[off..off + k].to_vec();
            let t = FourTuple::from_rows(n, &take(n * n, 0), &take(n * n, 9), &take(n, 18), &take(n, 21), kind).unwrap();
            let text = to_json(&t);
            let back = from_json(&text).unwrap();
            // bitwise equality, including signed zeros
            for (x, y) in t.a.iter().chain(t.n.iter()).zip(back.a.iter().chain(back.n.iter())) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(to_json(&back), text);
        }
    }
}
