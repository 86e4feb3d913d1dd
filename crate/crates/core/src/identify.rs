//! Identification from pulse responses of fixed amplitude.
//!
//! The oracle returns `y(t)` under `u_{τ,α}` for any width `τ`. After the
//! pulse the system runs freely, so samples past `τ` are a linear free
//! response `c e^{A(t−τ)} x(τ)`:
//!
//! 1. a Ho-Kalman factorization of a Hankel matrix of post-pulse samples
//!    gives `(A, c)` in some basis;
//! 2. least squares on the observability map gives `x(τ)` in that basis for
//!    every `τ` on a uniform grid;
//! 3. on the grid the pulse states obey an exact recursion
//!    `x_{j+1} = F x_j + g` (type I) or `x_{j+1} = F x_j` (type II) with
//!    `F = e^{(A+αN)δ}`, fitted by least squares;
//! 4. `A + αN = log(F)/δ`, and `b` follows from `g` or from `x(0)`.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::json::{ser_matrix, ser_row, ser_vector};
use crate::matfun::{self, Tolerances};
use crate::realization;
use crate::simulate;
use crate::system::{FourTuple, SystemKind};

/// Black-box access to the responses to `u_{τ,α}`.
pub trait PulseOracle {
    fn alpha(&self) -> f64;
    fn kind(&self) -> SystemKind;

    /// `y(t)` for each `t` (nondecreasing) under `u_{τ,α}`.
    fn respond_many(&self, tau: f64, times: &[f64]) -> Result<Vec<f64>>;

    fn respond(&self, tau: f64, t: f64) -> Result<f64> {
        Ok(self.respond_many(tau, &[t])?[0])
    }
}

/// Oracle backed by exact simulation of a known tuple.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    system: FourTuple,
    alpha: f64,
}

impl ExactOracle {
    pub fn new(system: FourTuple, alpha: f64) -> Result<Self> {
        if !(alpha != 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("pulse amplitude must be nonzero, got {alpha}")));
        }
        Ok(ExactOracle { system, alpha })
    }

    pub fn system(&self) -> &FourTuple {
        &self.system
    }
}

impl PulseOracle for ExactOracle {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn kind(&self) -> SystemKind {
        self.system.kind
    }

    fn respond_many(&self, tau: f64, times: &[f64]) -> Result<Vec<f64>> {
        Ok(simulate::respond_pulse(&self.system, tau, self.alpha, 0.0, times)?.outputs)
    }
}

/// Continuous-time free-response model recovered from one pulse width.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeResponse {
    pub a: DMatrix<f64>,
    /// State right after the pulse, in the identified basis.
    pub x: DVector<f64>,
    pub c: RowDVector<f64>,
    pub singular_values: Vec<f64>,
}

/// Ho-Kalman realization of the post-pulse response at width `tau0`.
///
/// Samples `y(τ₀ + jh)` for `j < 2m`, factors the `m × m` Hankel matrix and
/// converts the discrete generator with the principal logarithm.
pub fn realize_free_response(
    oracle: &dyn PulseOracle,
    tau0: f64,
    h: f64,
    m: usize,
    tol: &Tolerances,
) -> Result<FreeResponse> {
    if !(h > 0.0 && tau0 >= 0.0 && m >= 2) {
        return Err(Error::InvalidArgument(format!("need h > 0, tau0 >= 0, m >= 2 (got {h}, {tau0}, {m})")));
    }
    let times: Vec<f64> = (0..2 * m).map(|j| tau0 + j as f64 * h).collect();
    let y = oracle.respond_many(tau0, &times)?;
    let hankel = DMatrix::from_fn(m, m, |i, j| y[i + j]);
    let shifted = DMatrix::from_fn(m, m, |i, j| y[i + j + 1]);

    let dec = matfun::svd(&hankel)?;
    let sv = dec.s;
    let s1 = sv[0];
    if !(s1 > 0.0) {
        return Err(Error::OrderAmbiguous("Hankel matrix is zero".into()));
    }
    let n = sv.iter().filter(|&&s| s > tol.rank_tol * s1).count();
    if n == m {
        return Err(Error::OrderAmbiguous(format!("no singular-value gap within Hankel size {m}")));
    }
    if sv[n - 1] < 10.0 * tol.rank_tol * s1 {
        return Err(Error::OrderAmbiguous(format!(
            "gap too small: sigma_{n}/sigma_1 = {:e}",
            sv[n - 1] / s1
        )));
    }

    let un = dec.u.columns(0, n);
    let vn = dec.v.columns(0, n);
    let root: Vec<f64> = sv[..n].iter().map(|s| s.sqrt()).collect();
    let obs = DMatrix::from_fn(m, n, |i, k| un[(i, k)] * root[k]);
    let ctr = DMatrix::from_fn(n, m, |k, j| vn[(j, k)] * root[k]);
    let inv_root = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / root[i] } else { 0.0 });
    let f = &inv_root * un.transpose() * shifted * vn * &inv_root;

    let a = matfun::principal_logm(&f)? / h;
    Ok(FreeResponse {
        a,
        x: ctr.column(0).into_owned(),
        c: obs.row(0).into_owned(),
        singular_values: sv,
    })
}

/// Pulse states recovered by least squares, with relative residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecovery {
    pub states: Vec<DVector<f64>>,
    pub residuals: Vec<f64>,
}

impl StateRecovery {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Solves `[c; c e^{Ah}; …; c e^{A(m−1)h}] x(τ) = [y(τ); …; y(τ + (m−1)h)]`
/// for each `τ`.
pub fn recover_states(
    oracle: &dyn PulseOracle,
    a: &DMatrix<f64>,
    c: &RowDVector<f64>,
    taus: &[f64],
    h: f64,
    m: usize,
    tol: &Tolerances,
) -> Result<StateRecovery> {
    let n = a.nrows();
    let step = matfun::expm(&(a * h))?;
    let mut obs = DMatrix::zeros(m, n);
    let mut row = c.clone();
    for i in 0..m {
        obs.set_row(i, &row);
        row *= &step;
    }
    let (obs_pinv, rank) = matfun::pinv_rank(&obs, tol)?;
    if rank < n {
        return Err(Error::UnobservablePair);
    }
    let mut states = Vec::with_capacity(taus.len());
    let mut residuals = Vec::with_capacity(taus.len());
    for &tau in taus {
        let times: Vec<f64> = (0..m).map(|i| tau + i as f64 * h).collect();
        let y = DVector::from_vec(oracle.respond_many(tau, &times)?);
        let x = &obs_pinv * &y;
        let r = (&obs * &x - &y).norm();
        let scale = y.norm();
        residuals.push(if scale > 0.0 { r / scale } else { r });
        states.push(x);
    }
    Ok(StateRecovery { states, residuals })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentifyConfig {
    /// Largest model order considered; the Hankel size is `n_max + 1`.
    pub n_max: usize,
    /// Initial sampling step of the free response.
    pub h: f64,
    /// Pulse widths span `[0, tau_span]` on a grid of `2 n_max + 2` points.
    pub tau_span: f64,
    pub max_tau0_draws: usize,
    pub max_step_halvings: usize,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        IdentifyConfig {
            n_max: 8,
            h: 0.1,
            tau_span: 2.0,
            max_tau0_draws: 8,
            max_step_halvings: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifyDiagnostics {
    pub hankel_singular_values: Vec<f64>,
    pub tau0: f64,
    pub h: f64,
    /// Spacing of the pulse-width grid.
    pub delta: f64,
    pub state_residual: f64,
    /// Relative residual of the state-recursion fit.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationResult {
    pub tuple: FourTuple,
    pub n_identified: usize,
    pub diagnostics: IdentifyDiagnostics,
}

/// Allowed relative misfit of the state recursion.
pub const FIT_LIMIT: f64 = 1e-5;

fn realize_with_retries<R: Rng + ?Sized>(
    oracle: &dyn PulseOracle,
    cfg: &IdentifyConfig,
    tol: &Tolerances,
    rng: &mut R,
) -> Result<(FreeResponse, f64, f64)> {
    let m = cfg.n_max + 1;
    let mut last = Error::OrderAmbiguous("no pulse width tried".into());
    for _ in 0..cfg.max_tau0_draws {
        // (0.5, 1.5]
        let tau0 = 1.5 - rng.random::<f64>();
        let mut h = cfg.h;
        for _ in 0..=cfg.max_step_halvings {
            match realize_free_response(oracle, tau0, h, m, tol) {
                Ok(fr) => return Ok((fr, tau0, h)),
                Err(e @ Error::SpectrumOnCut { .. }) => {
                    last = e;
                    h /= 2.0;
                }
                Err(e @ Error::OrderAmbiguous(_)) => {
                    last = e;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Err(last)
}

/// Least-squares fit of `Y ≈ W Z`; returns `W` and the relative residual.
fn fit(y: &DMatrix<f64>, z: &DMatrix<f64>, tol: &Tolerances) -> Result<(DMatrix<f64>, f64)> {
    let (z_pinv, rank) = matfun::pinv_rank(z, tol)?;
    if rank < z.nrows() {
        return Err(Error::NotCanonicalResult(format!(
            "pulse states span only {rank} of {} directions",
            z.nrows()
        )));
    }
    let w = y * z_pinv;
    let r = (y - &w * z).norm() / y.norm().max(f64::MIN_POSITIVE);
    Ok((w, r))
}

/// Recovers `(A + αN, b)` from pulse states on the grid `τ_j = jδ`.
fn pulse_generator(
    states: &[DVector<f64>],
    delta: f64,
    alpha: f64,
    kind: SystemKind,
    tol: &Tolerances,
) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
    let n = states[0].len();
    let k = states.len() - 1;
    let y = DMatrix::from_fn(n, k, |i, j| states[j + 1][i]);
    match kind {
        SystemKind::TypeI => {
            let z = DMatrix::from_fn(n + 1, k, |i, j| if i < n { states[j][i] } else { 1.0 });
            let (w, r) = fit(&y, &z, tol)?;
            let f = w.columns(0, n).into_owned();
            let g = w.column(n).into_owned();
            let gen = matfun::principal_logm(&f)? / delta;
            let kernel = matfun::phi1(&gen, delta)?;
            let b = kernel
                .lu()
                .solve(&g)
                .ok_or_else(|| Error::NotCanonicalResult("singular pulse kernel".into()))?
                / alpha;
            Ok((gen, b, r))
        }
        SystemKind::TypeII => {
            let z = DMatrix::from_fn(n, k, |i, j| states[j][i]);
            let (f, r) = fit(&y, &z, tol)?;
            let gen = matfun::principal_logm(&f)? / delta;
            Ok((gen, states[0].clone(), r))
        }
    }
}

/// Identifies a tuple i/o equivalent to the oracle's system.
pub fn identify<R: Rng + ?Sized>(
    oracle: &dyn PulseOracle,
    cfg: &IdentifyConfig,
    tol: &Tolerances,
    rng: &mut R,
) -> Result<IdentificationResult> {
    let alpha = oracle.alpha();
    if !(alpha != 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("pulse amplitude must be nonzero, got {alpha}")));
    }
    let m = cfg.n_max + 1;
    let (fr, tau0, h) = realize_with_retries(oracle, cfg, tol, rng)?;
    let n = fr.a.nrows();

    let mut points = 2 * cfg.n_max + 1;
    let mut outcome = None;
    for _ in 0..=cfg.max_step_halvings {
        let delta = cfg.tau_span / points as f64;
        let taus: Vec<f64> = (0..=points).map(|j| j as f64 * delta).collect();
        let rec = recover_states(oracle, &fr.a, &fr.c, &taus, h, m, tol)?;
        match pulse_generator(&rec.states, delta, alpha, oracle.kind(), tol) {
            Ok((gen, b, r)) => {
                outcome = Some((gen, b, r, delta, rec.max_residual()));
                break;
            }
            Err(Error::SpectrumOnCut { .. }) => points *= 2,
            Err(e) => return Err(e),
        }
    }
    let (gen, b, fit_residual, delta, state_residual) =
        outcome.ok_or(Error::SpectrumOnCut { re: f64::NAN, im: f64::NAN })?;
    if fit_residual > FIT_LIMIT {
        return Err(Error::PoorFit {
            residual: fit_residual,
            limit: FIT_LIMIT,
        });
    }

    let tuple = FourTuple::new(fr.a.clone(), (&gen - &fr.a) / alpha, b, fr.c.clone(), oracle.kind())?;
    let canon = realization::canonicality(&tuple, tol)?;
    if let Some(reason) = canon.reason() {
        return Err(Error::NotCanonicalResult(reason));
    }
    let pulse_rank = matfun::rank(&realization::controllability(&gen, &tuple.b), tol)?;
    if pulse_rank < n {
        return Err(Error::NotCanonicalResult(format!("(A + alpha N, b) has rank {pulse_rank}")));
    }
    Ok(IdentificationResult {
        tuple,
        n_identified: n,
        diagnostics: IdentifyDiagnostics {
            hankel_singular_values: fr.singular_values,
            tau0,
            h,
            delta,
            state_residual,
            fit_residual,
        },
    })
}

impl Serialize for FreeResponse {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            #[serde(rename = "A", serialize_with = "ser_matrix")]
            a: &'a DMatrix<f64>,
            #[serde(serialize_with = "ser_vector")]
            x: &'a DVector<f64>,
            #[serde(serialize_with = "ser_row")]
            c: &'a RowDVector<f64>,
            singular_values: &'a [f64],
        }
        Doc {
            a: &self.a,
            x: &self.x,
            c: &self.c,
            singular_values: &self.singular_values,
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn scalar_oracle(kind: SystemKind) -> ExactOracle {
        let t = FourTuple::from_rows(1, &[-1.0], &[0.5], &[1.0], &[2.0], kind).unwrap();
        ExactOracle::new(t, 1.0).unwrap()
    }

    fn two_state() -> FourTuple {
        FourTuple::from_rows(
            2,
            &[-0.3, 1.0, -1.2, -0.2],
            &[0.4, -0.3, 0.2, 0.1],
            &[0.6, 1.0],
            &[1.0, 0.3],
            SystemKind::TypeI,
        )
        .unwrap()
    }

    #[test]
    fn scalar_free_response() {
        let tol = Tolerances::default();
        let fr = realize_free_response(&scalar_oracle(SystemKind::TypeI), 1.0, 0.1, 9, &tol).unwrap();
        assert_eq!(fr.a.nrows(), 1);
        assert_relative_eq!(fr.a[(0, 0)], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn two_state_hankel_has_rank_two() {
        let tol = Tolerances::default();
        let oracle = ExactOracle::new(two_state(), 1.0).unwrap();
        let fr = realize_free_response(&oracle, 1.0, 0.1, 9, &tol).unwrap();
        assert_eq!(fr.a.nrows(), 2);
        assert!(fr.singular_values[2] < 1e-10 * fr.singular_values[0]);
        assert!(fr.singular_values[1] >= 10.0 * 1e-10 * fr.singular_values[0]);
    }

    #[test]
    fn rank_one_hankel_factorization_is_exact() {
        // post-pulse samples on which a bidiagonal SVD once lost the factorization
        let tol = Tolerances::default();
        let oracle = scalar_oracle(SystemKind::TypeII);
        let fr = realize_free_response(&oracle, 1.014160294612533, 0.1, 9, &tol).unwrap();
        assert_relative_eq!(fr.a[(0, 0)], -1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_width_type_one_is_ambiguous() {
        let tol = Tolerances::default();
        let err = realize_free_response(&scalar_oracle(SystemKind::TypeI), 0.0, 0.1, 9, &tol).unwrap_err();
        assert_eq!(err.name(), "OrderAmbiguous");
    }

    #[test]
    fn state_recovery_matches_realization() {
        let tol = Tolerances::default();
        let oracle = ExactOracle::new(two_state(), 1.0).unwrap();
        let fr = realize_free_response(&oracle, 1.0, 0.1, 9, &tol).unwrap();
        let rec = recover_states(&oracle, &fr.a, &fr.c, &[1.0], 0.1, 9, &tol).unwrap();
        assert!((&rec.states[0] - &fr.x).norm() < 1e-7);
        assert!(rec.max_residual() < 1e-9);

        let wrong = &fr.a * 1.1;
        let rec = recover_states(&oracle, &wrong, &fr.c, &[1.0], 0.1, 9, &tol).unwrap();
        assert!(rec.max_residual() > tol.residual_tol);
    }

    #[test]
    fn type_two_state_at_zero_is_b() {
        let tol = Tolerances::default();
        let oracle = ExactOracle::new(two_state().with_kind(SystemKind::TypeII), 1.0).unwrap();
        let fr = realize_free_response(&oracle, 1.0, 0.1, 9, &tol).unwrap();
        let rec = recover_states(&oracle, &fr.a, &fr.c, &[0.0], 0.1, 9, &tol).unwrap();
        // same output map: c x(0) = c b in both bases
        let t = oracle.system();
        assert_relative_eq!(fr.c.dot(&rec.states[0].transpose()), t.c.dot(&t.b.transpose()), epsilon = 1e-9);
    }

    #[test]
    fn unobservable_pair_is_reported() {
        let tol = Tolerances::default();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let c = RowDVector::from_vec(vec![1.0, 0.0]);
        let err = recover_states(&scalar_oracle(SystemKind::TypeI), &a, &c, &[1.0], 0.1, 9, &tol).unwrap_err();
        assert_eq!(err, Error::UnobservablePair);
    }

    #[test]
    fn scalar_invariants_are_recovered() {
        let tol = Tolerances::default();
        for kind in [SystemKind::TypeI, SystemKind::TypeII] {
            let res = identify(&scalar_oracle(kind), &IdentifyConfig::default(), &tol, &mut rng::stream(1, "id")).unwrap();
            let t = &res.tuple;
            assert_eq!(res.n_identified, 1);
            assert_relative_eq!(t.a[(0, 0)], -1.0, epsilon = 1e-6);
            assert_relative_eq!(t.n[(0, 0)], 0.5, epsilon = 1e-6);
            assert_relative_eq!(t.c[0] * t.b[0], 2.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn two_state_round_trip() {
        let mut tol = Tolerances::default();
        let truth = two_state();
        let oracle = ExactOracle::new(truth.clone(), -0.5).unwrap();
        let res = identify(&oracle, &IdentifyConfig::default(), &tol, &mut rng::stream(2, "id")).unwrap();
        tol.residual_tol = 1e-5;
        assert!(realization::io_equivalent(&truth, &res.tuple, &tol).unwrap().equivalent);
        assert!(realization::similarity_between(&truth, &res.tuple, &tol).is_ok());
    }
}
