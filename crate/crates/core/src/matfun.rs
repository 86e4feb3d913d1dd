//! Dense matrix functions: exponential, the integral kernel
//! `∫₀ᵗ e^{sQ} ds`, SVD-based pseudoinverse and rank, eigenvalues and the
//! principal logarithm.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Singular values below `rank_tol · σ_max` count as zero.
    pub rank_tol: f64,
    /// Relative tolerance for matrix relations and series coefficients.
    pub residual_tol: f64,
    /// Absolute tolerance for output agreement of trajectories.
    pub agree_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: 1e-10,
            residual_tol: 1e-8,
            agree_tol: 1e-7,
        }
    }
}

impl Tolerances {
    /// Overrides one field by name (`rank_tol`, `residual_tol`, `agree_tol`).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {name} must be positive, got {value}"
            )));
        }
        match name {
            "rank_tol" => self.rank_tol = value,
            "residual_tol" => self.residual_tol = value,
            "agree_tol" => self.agree_tol = value,
            other => {
                return Err(Error::InvalidArgument(format!("unknown tolerance {other:?}")))
            }
        }
        Ok(())
    }
}

// Padé(13) coefficients and the matching scaling threshold for the 1-norm.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntry("matrix argument".into()));
    }
    Ok(())
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let nrm = norm1(m);
    let squarings = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m * 2f64.powi(-squarings);

    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = &a * (&a6 * &u_inner + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let v_inner = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * &v_inner + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::Overflow)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow);
    }
    Ok(r)
}

/// `∫₀ᵗ e^{sQ} ds`, read off the upper-right block of
/// `exp([[tQ, tI], [0, 0]])`. Works for singular `Q`.
pub fn phi1(q: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    check_square(q)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("phi1 needs t >= 0, got {t}")));
    }
    let n = q.nrows();
    let mut aug = DMatrix::<f64>::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(q * t));
    aug.view_mut((0, n), (n, n)).fill_with_identity();
    aug.view_mut((0, n), (n, n)).scale_mut(t);
    let e = expm(&aug)?;
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// Thin SVD `M = U diag(s) Vᵀ` with singular values in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

// nalgebra 0.35's bidiagonal SVD can return a wrong factorization for
// rank-deficient inputs, so the decomposition is delegated to faer.
pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntry("matrix argument".into()));
    }
    let (p, q) = m.shape();
    let k = p.min(q);
    if k == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(p, 0),
            s: Vec::new(),
            v: DMatrix::zeros(q, 0),
        });
    }
    let fm = faer::Mat::from_fn(p, q, |i, j| m[(i, j)]);
    let dec = fm.thin_svd().map_err(|_| Error::NoConvergence)?;
    let (fu, fs, fv) = (dec.U(), dec.S().column_vector(), dec.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fs[b].total_cmp(&fs[a]));
    Ok(Svd {
        u: DMatrix::from_fn(p, k, |i, j| fu[(i, order[j])]),
        s: order.iter().map(|&j| fs[j]).collect(),
        v: DMatrix::from_fn(q, k, |i, j| fv[(i, order[j])]),
    })
}

/// Moore–Penrose pseudoinverse with singular values below
/// `rank_tol · σ_max` truncated, and the number of retained values.
pub fn pinv_rank(m: &DMatrix<f64>, tol: &Tolerances) -> Result<(DMatrix<f64>, usize)> {
    let (p, q) = m.shape();
    let dec = svd(m)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let cutoff = tol.rank_tol * smax;
    let mut pinv = DMatrix::zeros(q, p);
    let mut rank = 0;
    for (k, &s) in dec.s.iter().enumerate() {
        if smax > 0.0 && s > cutoff {
            rank += 1;
            pinv += dec.v.column(k) * dec.u.column(k).transpose() * (1.0 / s);
        }
    }
    Ok((pinv, rank))
}

/// Numerical rank at `rank_tol`, relative to the largest singular value.
pub fn rank(m: &DMatrix<f64>, tol: &Tolerances) -> Result<usize> {
    let sv = singular_values(m)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&s| smax > 0.0 && s > tol.rank_tol * smax).count())
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(svd(m)?.s)
}

/// All `n` eigenvalues with multiplicity, from a real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    check_square(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let mut y = x.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().ok_or(Error::NoConvergence)?;
        let z_inv = z.clone().try_inverse().ok_or(Error::NoConvergence)?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let step = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if step <= 1e-14 * y.norm() {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence)
}

/// Principal matrix logarithm.
///
/// Fails with `SpectrumOnCut` if an eigenvalue lies on the closed negative
/// real axis (including zero). Uses inverse scaling and squaring: square
/// roots until `‖X − I‖₁ ≤ 1/4`, then `log X = 2 atanh((X − I)(X + I)⁻¹)`.
pub fn principal_logm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m)?;
    let n = m.nrows();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for lam in eigenvalues(m)? {
        let on_axis = lam.im.abs() <= 1e-10 * lam.norm().max(1e-12 * scale);
        if on_axis && lam.re <= 1e-12 * scale {
            return Err(Error::SpectrumOnCut {
                re: lam.re,
                im: lam.im,
            });
        }
    }

    let ident = DMatrix::<f64>::identity(n, n);
    let mut x = m.clone();
    let mut roots = 0;
    while norm1(&(&x - &ident)) > 0.25 {
        if roots >= 64 {
            return Err(Error::NoConvergence);
        }
        x = sqrtm(&x)?;
        roots += 1;
    }

    // X − I and X + I commute, so the order of the solve does not matter
    let z = (&x + &ident)
        .lu()
        .solve(&(&x - &ident))
        .ok_or(Error::NoConvergence)?;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z.clone();
    for k in 1..60 {
        term = &term * &z2;
        let add = &term / (2 * k + 1) as f64;
        let small = add.norm() <= f64::EPSILON * sum.norm().max(f64::MIN_POSITIVE) * 1e-2;
        sum += add;
        if small {
            break;
        }
    }
    Ok(sum * 2f64.powi(roots + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Truncated Taylor series in extended steps; independent of the Padé path.
    fn expm_series(m: &DMatrix<f64>) -> DMatrix<f64> {
        // squaring with a plain series keeps the oracle simple
        let s = 6;
        let a = m / 2f64.powi(s);
        let n = m.nrows();
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &a / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    fn mat(n: usize, rows: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, rows)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(e, DMatrix::identity(2, 2));
    }

    #[test]
    fn expm_of_nilpotent() {
        let e = expm(&mat(2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(e, mat(2, &[1.0, 1.0, 0.0, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn expm_of_half_turn_is_minus_identity() {
        let m = mat(2, &[0.0, -PI, PI, 0.0]);
        let e = expm(&m).unwrap();
        let oracle = expm_series(&m);
        assert_relative_eq!(e, -DMatrix::<f64>::identity(2, 2), epsilon = 1e-14);
        assert_relative_eq!(e, oracle, epsilon = 1e-13);
    }

    #[test]
    fn expm_matches_series_on_large_norm() {
        let m = mat(3, &[-3.0, 10.0, 2.0, -1.0, -2.0, 4.0, 0.5, 7.0, -9.0]);
        let e = expm(&m).unwrap();
        let oracle = expm_series(&m);
        let rel = (&e - &oracle).norm() / oracle.norm();
        assert!(rel < 1e-12, "relative error {rel}");
    }

    #[test]
    fn expm_overflow_is_reported() {
        let m = mat(1, &[1000.0]);
        assert_eq!(expm(&m), Err(Error::Overflow));
    }

    #[test]
    fn phi1_of_zero_and_at_zero_time() {
        let p = phi1(&DMatrix::zeros(2, 2), 1.7).unwrap();
        assert_relative_eq!(p, DMatrix::identity(2, 2) * 1.7, epsilon = 1e-15);
        let q = mat(2, &[1.0, 2.0, -3.0, 0.5]);
        assert_eq!(phi1(&q, 0.0).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn phi1_scalar_matches_closed_form_and_quadrature() {
        let p = phi1(&mat(1, &[1.0]), 1.0).unwrap()[(0, 0)];
        assert_relative_eq!(p, std::f64::consts::E - 1.0, epsilon = 1e-15);
        // composite Simpson on e^s over [0, 1]
        let k = 2000;
        let h = 1.0 / k as f64;
        let simpson: f64 = (0..=k)
            .map(|i| {
                let w = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * (i as f64 * h).exp()
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert_relative_eq!(p, simpson, epsilon = 1e-12);
        assert_relative_eq!(p, 1.718281828459045, epsilon = 1e-15);
    }

    #[test]
    fn phi1_matches_inverse_formula_when_invertible() {
        let q = mat(2, &[-1.0, 2.0, -0.5, 0.3]);
        let t = 0.7;
        let closed = q.clone().try_inverse().unwrap() * (expm(&(&q * t)).unwrap() - DMatrix::identity(2, 2));
        assert_relative_eq!(phi1(&q, t).unwrap(), closed, epsilon = 1e-14);
    }

    #[test]
    fn pinv_of_identity_and_diagonal() {
        let tol = Tolerances::default();
        let (p, r) = pinv_rank(&DMatrix::identity(3, 3), &tol).unwrap();
        assert_eq!(r, 3);
        assert_relative_eq!(p, DMatrix::identity(3, 3), epsilon = 1e-15);
        let (p, r) = pinv_rank(&mat(2, &[1.0, 0.0, 0.0, 0.0]), &tol).unwrap();
        assert_eq!(r, 1);
        assert_relative_eq!(p, mat(2, &[1.0, 0.0, 0.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn pinv_of_zero_has_rank_zero() {
        let (p, r) = pinv_rank(&DMatrix::zeros(2, 3), &Tolerances::default()).unwrap();
        assert_eq!(r, 0);
        assert_eq!(p, DMatrix::zeros(3, 2));
    }

    #[test]
    fn penrose_identity_on_3x4() {
        let m = DMatrix::from_row_slice(3, 4, &[1.0, 2.0, 0.5, -1.0, 0.0, 1.0, 3.0, 2.0, -2.0, 0.1, 0.7, 1.0]);
        let (p, r) = pinv_rank(&m, &Tolerances::default()).unwrap();
        assert_eq!(r, 3);
        assert!((&m * &p * &m - &m).norm() < 1e-10);
    }

    #[test]
    fn rank_counts_relative_singular_values() {
        let tol = Tolerances::default();
        assert_eq!(rank(&mat(2, &[1.0, 2.0, 2.0, 4.0]), &tol).unwrap(), 1);
        assert_eq!(rank(&DMatrix::zeros(3, 3), &tol).unwrap(), 0);
        assert_eq!(rank(&(DMatrix::identity(3, 3) * 1e-30), &tol).unwrap(), 3);
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn eigenvalues_of_simple_matrices() {
        let ev = sorted(eigenvalues(&mat(2, &[1.0, 0.0, 0.0, 2.0])).unwrap());
        assert_relative_eq!(ev[0].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1].re, 2.0, epsilon = 1e-14);

        let ev = sorted(eigenvalues(&mat(2, &[0.0, -1.0, 1.0, 0.0])).unwrap());
        assert!(ev[0].re.abs() < 1e-14 && (ev[0].im + 1.0).abs() < 1e-14);
        assert!(ev[1].re.abs() < 1e-14 && (ev[1].im - 1.0).abs() < 1e-14);

        let ev = eigenvalues(&DMatrix::identity(2, 2)).unwrap();
        assert!(ev.iter().all(|l| (l - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn logm_of_identity_is_zero() {
        let l = principal_logm(&DMatrix::identity(3, 3)).unwrap();
        assert!(l.norm() < 1e-15);
    }

    #[test]
    fn logm_inverts_small_rotation() {
        let g = mat(2, &[0.0, 0.1, -0.1, 0.0]);
        let l = principal_logm(&expm(&g).unwrap()).unwrap();
        assert_relative_eq!(l, g, epsilon = 1e-8);
    }

    #[test]
    fn logm_rejects_negative_identity() {
        assert!(matches!(
            principal_logm(&-DMatrix::<f64>::identity(2, 2)),
            Err(Error::SpectrumOnCut { .. })
        ));
        assert!(matches!(
            principal_logm(&mat(2, &[1.0, 0.0, 0.0, 0.0])),
            Err(Error::SpectrumOnCut { .. })
        ));
    }

    #[test]
    fn logm_round_trip_with_large_rotation() {
        let g = mat(3, &[0.2, -2.5, 0.0, 2.5, 0.2, 0.3, 0.0, -0.1, -1.5]);
        let m = expm(&g).unwrap();
        let l = principal_logm(&m).unwrap();
        assert!((expm(&l).unwrap() - &m).norm() < 1e-8 * m.norm());
        assert!(eigenvalues(&l).unwrap().iter().all(|z| z.im.abs() < PI));
        assert_relative_eq!(l, g, epsilon = 1e-10);
    }

    #[test]
    fn tolerance_override_by_name() {
        let mut tol = Tolerances::default();
        tol.set("agree_tol", 1e-5).unwrap();
        assert_eq!(tol.agree_tol, 1e-5);
        assert!(tol.set("bogus", 1.0).is_err());
        assert!(tol.set("rank_tol", -1.0).is_err());
    }
}
