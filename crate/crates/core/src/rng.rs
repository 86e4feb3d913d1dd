//! Seeded random streams and Gaussian sampling helpers.
//!
//! One master seed per run; each subsystem draws from its own ChaCha stream
//! selected by a fixed text label, so adding draws in one place never shifts
//! the numbers seen elsewhere.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matfun;
use crate::system::{FourTuple, SystemKind};

pub type StreamRng = ChaCha8Rng;

/// 64-bit FNV-1a of the label.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, byte| {
        (h ^ byte as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Stream `label` of the master `seed`.
pub fn stream(seed: u64, label: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label_hash(label));
    rng
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, std: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| std * normal(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, std: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| std * normal(rng))
}

pub fn gaussian_row<R: Rng + ?Sized>(rng: &mut R, n: usize, std: f64) -> RowDVector<f64> {
    RowDVector::from_fn(n, |_, _| std * normal(rng))
}

/// Tuple with i.i.d. `N(0, std²)` entries, drawn in the order A, N, b, c.
pub fn gaussian_tuple<R: Rng + ?Sized>(rng: &mut R, n: usize, std: f64, kind: SystemKind) -> FourTuple {
    let a = gaussian_matrix(rng, n, n, std);
    let nm = gaussian_matrix(rng, n, n, std);
    let b = gaussian_vector(rng, n, 1.0);
    let c = gaussian_row(rng, n, 1.0);
    FourTuple { a, n: nm, b, c, kind }
}

/// 2-norm condition number.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = match matfun::singular_values(m) {
        Ok(sv) if !sv.is_empty() => sv,
        _ => return f64::INFINITY,
    };
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `I + 0.5·G` with Gaussian `G`, redrawn until its condition number is at
/// most `max_cond`.
pub fn well_conditioned<R: Rng + ?Sized>(rng: &mut R, n: usize, max_cond: f64) -> DMatrix<f64> {
    loop {
        let t = DMatrix::identity(n, n) + gaussian_matrix(rng, n, n, 0.5);
        if condition_number(&t) <= max_cond {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = stream(7, "twins");
        let mut b = stream(7, "twins");
        let mut c = stream(7, "identify");
        let xa: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.random()).collect();
        let xc: Vec<u64> = (0..4).map(|_| c.random()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn label_hash_matches_reference_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(label_hash(""), 0xcbf29ce484222325);
        assert_eq!(label_hash("a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn well_conditioned_respects_bound() {
        let mut rng = stream(1, "cond");
        for _ in 0..20 {
            assert!(condition_number(&well_conditioned(&mut rng, 4, 1e3)) <= 1e3);
        }
    }
}
