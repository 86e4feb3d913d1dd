//! Pairs of 4-tuples that restricted input classes cannot tell apart.
//!
//! Everything hangs off the self-dual transform `T = T(A, b, c)`: whenever
//! `N ∉ B(T)`, the twin `M = T N′ T⁻¹` differs from `N` yet
//! `c(A + γN)ᵏb = c(A + γM)ᵏb` for every `γ` and `k`. The generators below
//! embed that identity into pulse, pulse-then-constant, constant and
//! sampled-pulse experiments, and attach certificates: the measured output
//! agreement under the restricted class plus a word (and, where available,
//! an input) on which the pair differs.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::input::PiecewiseConstantInput;
use crate::matfun::{self, Tolerances};
use crate::realization::{self, Word};
use crate::rng;
use crate::simulate::{self, linspace};
use crate::system::{FourTuple, SystemKind};

/// Which restricted family of inputs the pair agrees on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum InputClass {
    /// `u_{τ,α}` only.
    SinglePulse { tau: f64, alpha: f64 },
    /// `u_{τ,α,β}` for every constant `β`.
    PulseThenConstant { tau: f64, alpha: f64 },
    /// Every constant input.
    Constants,
    /// Sample-and-hold pulses `u_{kτ,α}` observed at multiples of `τ`.
    SampledPulses { tau: f64, alpha: f64 },
}

/// Evidence that the pair is not i/o equivalent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// Shortest, then lexicographically first, word on which the series differ.
    pub word: Word,
    /// The two series coefficients at `word`.
    pub coefficients: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distinguishing_input: Option<PiecewiseConstantInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexamplePair {
    pub sigma: FourTuple,
    pub sigma_hat: FourTuple,
    pub input_class: InputClass,
    /// Sup of `|y − ŷ|` over the test grid and the class's test inputs.
    pub agreement_residual: f64,
    pub certificate: Certificate,
}

/// Per-condition numbers behind a [`ClassMembership`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDiagnostics {
    pub linear_reach_rank: usize,
    pub linear_obs_rank: usize,
    /// `‖NT − TN′‖` relative residual; `None` when `T` does not exist.
    pub b_residual: Option<f64>,
    /// Ranks for `(A − N, b, c)` as a linear triple.
    pub shifted_reach_rank: usize,
    pub shifted_obs_rank: usize,
    /// `min |e^λ − 1|` over eigenvalues `λ` of `A`.
    pub exp_gap: f64,
    /// Rank of `R(A + αN, b)`.
    pub pulse_reach_rank: usize,
    /// Eigenvalues of `A + αN` form a nonreal pair (`n = 2` only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex_pair: Option<bool>,
}

/// Membership of a tuple in the generic classes used by the constructions.
/// For `C` the tuple is read as a seed `(Q, N, b₀, c)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMembership {
    pub in_g0: bool,
    pub in_c: bool,
    pub in_m: bool,
    /// `None` unless `n = 2`.
    pub in_b_alpha: Option<bool>,
    pub diagnostics: ClassDiagnostics,
}

fn min_exp_gap(q: &DMatrix<f64>) -> Result<f64> {
    Ok(matfun::eigenvalues(q)?
        .iter()
        .map(|l| (l.exp() - 1.0).norm())
        .fold(f64::INFINITY, f64::min))
}

fn nonreal_pair(g: &DMatrix<f64>) -> Result<bool> {
    let scale = g.norm().max(1e-300);
    Ok(matfun::eigenvalues(g)?
        .iter()
        .any(|l| l.im.abs() > 1e-10 * scale))
}

pub fn classify(t: &FourTuple, alpha: f64, tol: &Tolerances) -> Result<ClassMembership> {
    let n = t.dim();
    let lin = realization::linear_canonicality(&t.a, &t.b, &t.c, tol)?;
    let b_residual = if lin.is_canonical() {
        let s = realization::self_dual_transform(&t.a, &t.b, &t.c, tol)?;
        Some(realization::b_residual(&t.n, &s)?)
    } else {
        None
    };
    let in_g0 = matches!(b_residual, Some(r) if r > tol.residual_tol);

    let shifted = realization::linear_canonicality(&(&t.a - &t.n), &t.b, &t.c, tol)?;
    let exp_gap = min_exp_gap(&t.a)?;
    let in_c = in_g0 && shifted.is_canonical() && exp_gap > tol.residual_tol;

    let g = &t.a + &t.n * alpha;
    let pulse_reach_rank = matfun::rank(&realization::controllability(&g, &t.b), tol)?;
    let in_m = lin.is_canonical() && pulse_reach_rank == n;

    let (in_b_alpha, complex_pair) = if n == 2 {
        let pair = nonreal_pair(&g)?;
        let canon = realization::linear_canonicality(&g, &t.b, &t.c, tol)?.is_canonical();
        (Some(pair && canon), Some(pair))
    } else {
        (None, None)
    };

    Ok(ClassMembership {
        in_g0,
        in_c,
        in_m,
        in_b_alpha,
        diagnostics: ClassDiagnostics {
            linear_reach_rank: lin.reach_rank,
            linear_obs_rank: lin.obs_rank,
            b_residual,
            shifted_reach_rank: shifted.reach_rank,
            shifted_obs_rank: shifted.obs_rank,
            exp_gap,
            pulse_reach_rank,
            complex_pair,
        },
    })
}

/// `B_α` membership; only defined for `n = 2`.
pub fn in_b_alpha(t: &FourTuple, alpha: f64, tol: &Tolerances) -> Result<bool> {
    if t.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "B_alpha is defined for n = 2, got n = {}",
            t.dim()
        )));
    }
    Ok(classify(t, alpha, tol)?.in_b_alpha.unwrap_or(false))
}

/// `M = T N′ T⁻¹` with `T = T(A, b, c)`, provided `(A, b, c)` is canonical
/// and `N ∉ B(T)`.
pub fn twin_matrix(
    a: &DMatrix<f64>,
    n: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &RowDVector<f64>,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let s = realization::self_dual_transform(a, b, c, tol)
        .map_err(|e| Error::NotInG0(e.to_string()))?;
    let r = realization::b_residual(n, &s)?;
    if r <= tol.residual_tol {
        return Err(Error::NotInG0(format!("N lies in B(T) (residual {r:e})")));
    }
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotInG0("T is singular".into()))?;
    Ok(&s * n.transpose() * s_inv)
}

/// `(A, M, b, c)` with the twin `M` of `N`.
pub fn twin_via_t(t: &FourTuple, tol: &Tolerances) -> Result<FourTuple> {
    let m = twin_matrix(&t.a, &t.n, &t.b, &t.c, tol)?;
    Ok(FourTuple {
        n: m,
        ..t.clone()
    })
}

/// `ψ(Q, N, b₀, c) = (Q − N, N, det(ρ) ρ⁻¹ b₀, c)` with `ρ = ∫₀¹ e^{sQ} ds`.
pub fn psi(seed: &FourTuple) -> Result<FourTuple> {
    let rho = matfun::phi1(&seed.a, 1.0)?;
    let det = rho.determinant();
    let b = rho
        .lu()
        .solve(&seed.b)
        .ok_or_else(|| Error::NotInC("e^Q − I is singular".into()))?
        * det;
    Ok(FourTuple {
        a: &seed.a - &seed.n,
        n: seed.n.clone(),
        b,
        c: seed.c.clone(),
        kind: SystemKind::TypeI,
    })
}

/// `ψ⁻¹(A, N, b, c) = (A + N, N, ρ(A + N) b / det ρ(A + N), c)`.
pub fn psi_inverse(t: &FourTuple) -> Result<FourTuple> {
    let q = &t.a + &t.n;
    let rho = matfun::phi1(&q, 1.0)?;
    let det = rho.determinant();
    if det == 0.0 {
        return Err(Error::NotInC("e^Q − I is singular".into()));
    }
    Ok(FourTuple {
        b: rho * &t.b / det,
        a: q,
        n: t.n.clone(),
        c: t.c.clone(),
        kind: t.kind,
    })
}

/// `Φ(P, N, b₀, c) = (P − αN, N, e^{−τP} b₀, c)`.
pub fn phi_map(seed: &FourTuple, tau: f64, alpha: f64) -> Result<FourTuple> {
    Ok(FourTuple {
        a: &seed.a - &seed.n * alpha,
        n: seed.n.clone(),
        b: matfun::expm(&(&seed.a * -tau))? * &seed.b,
        c: seed.c.clone(),
        kind: seed.kind,
    })
}

/// `Φ⁻¹(A, N, b, c) = (A + αN, N, e^{τ(A + αN)} b, c)`.
pub fn phi_inverse(t: &FourTuple, tau: f64, alpha: f64) -> Result<FourTuple> {
    let p = &t.a + &t.n * alpha;
    Ok(FourTuple {
        b: matfun::expm(&(&p * tau))? * &t.b,
        a: p,
        n: t.n.clone(),
        c: t.c.clone(),
        kind: t.kind,
    })
}

/// Carries a type I tuple built for the unit pulse `u_{1,1}` to one with the
/// same response under `u_{τ,α}`, stretched in time by `τ`:
/// `(A/τ, N/(ατ), b/(ατ), c)`.
pub fn rescale(t: &FourTuple, tau: f64, alpha: f64) -> Result<FourTuple> {
    if !(tau > 0.0 && tau.is_finite() && alpha != 0.0 && alpha.is_finite()) {
        return Err(Error::DegenerateRescale { tau, alpha });
    }
    let k = alpha * tau;
    Ok(FourTuple {
        a: &t.a / tau,
        n: &t.n / k,
        b: &t.b / k,
        c: t.c.clone(),
        kind: t.kind,
    })
}

fn word_certificate(s1: &FourTuple, s2: &FourTuple, tol: &Tolerances) -> Result<Certificate> {
    let eq = realization::io_equivalent(s1, s2, tol)?;
    match (eq.word, eq.coefficients) {
        (Some(word), Some(coefficients)) => Ok(Certificate {
            word,
            coefficients,
            distinguishing_input: None,
            discrepancy: None,
        }),
        _ => Err(Error::NoDistinguisherFound { best: 0.0 }),
    }
}

fn sup_gap(s1: &FourTuple, s2: &FourTuple, u: &PiecewiseConstantInput, grid: &[f64]) -> Result<f64> {
    let y1 = simulate::simulate(s1, u, grid)?;
    let y2 = simulate::simulate(s2, u, grid)?;
    Ok(y1.sup_distance(&y2))
}

/// Builds a type I pair that agrees under `u_{τ,α}` from a seed in `C`.
pub fn single_pulse_pair(seed: &FourTuple, tau: f64, alpha: f64, tol: &Tolerances) -> Result<CounterexamplePair> {
    if !(tau > 0.0 && tau.is_finite() && alpha != 0.0 && alpha.is_finite()) {
        return Err(Error::DegenerateRescale { tau, alpha });
    }
    let class = classify(seed, 1.0, tol)?;
    if !class.in_c {
        return Err(Error::NotInC(describe_c_failure(&class, tol)));
    }
    let base = psi(seed)?;
    let rho = matfun::phi1(&seed.a, 1.0)?;
    let b1 = &rho * &base.b;
    let m = twin_matrix(&seed.a, &seed.n, &b1, &seed.c, tol).map_err(|e| Error::NotInC(e.to_string()))?;
    let partner = FourTuple {
        a: &seed.a - &m,
        n: m,
        ..base.clone()
    };
    let sigma = rescale(&base, tau, alpha)?;
    let sigma_hat = rescale(&partner, tau, alpha)?;

    let grid = linspace(0.0, 5.0 * tau, 500);
    let u = PiecewiseConstantInput::pulse(tau, alpha, 0.0, 5.0 * tau)?;
    let agreement_residual = sup_gap(&sigma, &sigma_hat, &u, &grid)?;

    let mut certificate = word_certificate(&sigma, &sigma_hat, tol)?;
    let pair = CounterexamplePair {
        sigma,
        sigma_hat,
        input_class: InputClass::SinglePulse { tau, alpha },
        agreement_residual,
        certificate: certificate.clone(),
    };
    match distinguishing_search(&pair.sigma, &pair.sigma_hat, tau, alpha, tol) {
        Ok((input, discrepancy)) => {
            certificate.distinguishing_input = Some(input);
            certificate.discrepancy = Some(discrepancy);
        }
        Err(Error::NoDistinguisherFound { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(CounterexamplePair { certificate, ..pair })
}

fn describe_c_failure(c: &ClassMembership, tol: &Tolerances) -> String {
    let d = &c.diagnostics;
    if !c.in_g0 {
        match d.b_residual {
            None => format!(
                "(Q, b0, c) is not canonical (ranks {} and {})",
                d.linear_reach_rank, d.linear_obs_rank
            ),
            Some(r) => format!("N lies in B(T) (residual {r:e})"),
        }
    } else if d.exp_gap <= tol.residual_tol {
        format!("e^Q - I is singular (gap {:e})", d.exp_gap)
    } else {
        format!(
            "(Q - N, b0, c) is not canonical (ranks {} and {})",
            d.shifted_reach_rank, d.shifted_obs_rank
        )
    }
}

/// Number of gap lengths scanned by [`distinguishing_search`].
pub const SEARCH_POINTS: usize = 32;

/// Scans inputs `α` on `[0, τ)`, `0` for a gap `g ∈ (0, 4τ]`, then `α` again,
/// and returns the one with the largest output discrepancy.
pub fn distinguishing_search(
    s1: &FourTuple,
    s2: &FourTuple,
    tau: f64,
    alpha: f64,
    tol: &Tolerances,
) -> Result<(PiecewiseConstantInput, f64)> {
    let mut best: Option<(PiecewiseConstantInput, f64)> = None;
    for i in 1..=SEARCH_POINTS {
        let gap = 4.0 * tau * i as f64 / SEARCH_POINTS as f64;
        let horizon = tau + gap + 3.0 * tau;
        let u = PiecewiseConstantInput::pulse_gap_pulse(tau, gap, alpha, horizon)?;
        let d = sup_gap(s1, s2, &u, &linspace(0.0, horizon, 200))?;
        if best.as_ref().is_none_or(|(_, b)| d > *b) {
            best = Some((u, d));
        }
    }
    match best {
        Some((u, d)) if d > tol.agree_tol => Ok((u, d)),
        other => Err(Error::NoDistinguisherFound {
            best: other.map_or(0.0, |(_, d)| d),
        }),
    }
}

/// The `β` values used to test pulse-then-constant agreement.
pub fn beta_test_set(alpha: f64) -> [f64; 7] {
    let k = alpha.abs().max(1.0);
    [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0].map(|b| b * k)
}

/// Builds a pair that agrees under every `u_{τ,α,β}` from a seed in `G₀`.
/// The pair is type II; with `τ = 0` (constant inputs) a type I pair may be
/// requested instead.
pub fn pulse_family_pair(
    seed: &FourTuple,
    tau: f64,
    alpha: f64,
    kind: SystemKind,
    tol: &Tolerances,
) -> Result<CounterexamplePair> {
    if !(tau >= 0.0 && tau.is_finite() && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("need tau >= 0 and finite alpha, got {tau}, {alpha}")));
    }
    if kind == SystemKind::TypeI && tau > 0.0 {
        return Err(Error::InvalidArgument(
            "type I pairs are only available for constant inputs (tau = 0)".into(),
        ));
    }
    let m = twin_matrix(&seed.a, &seed.n, &seed.b, &seed.c, tol)?;
    let sigma = phi_map(&seed.clone().with_kind(kind), tau, alpha)?;
    let sigma_hat = FourTuple {
        a: &seed.a - &m * alpha,
        n: m,
        ..sigma.clone()
    };
    let horizon = tau + 5.0;
    let grid = linspace(0.0, horizon, 500);
    let mut agreement_residual = 0.0f64;
    for beta in beta_test_set(alpha) {
        let u = PiecewiseConstantInput::pulse(tau, alpha, beta, horizon)?;
        agreement_residual = agreement_residual.max(sup_gap(&sigma, &sigma_hat, &u, &grid)?);
    }
    let certificate = word_certificate(&sigma, &sigma_hat, tol)?;
    let input_class = if tau == 0.0 {
        InputClass::Constants
    } else {
        InputClass::PulseThenConstant { tau, alpha }
    };
    Ok(CounterexamplePair {
        sigma,
        sigma_hat,
        input_class,
        agreement_residual,
        certificate,
    })
}

/// Pair that agrees under every constant input.
pub fn constants_pair(seed: &FourTuple, kind: SystemKind, tol: &Tolerances) -> Result<CounterexamplePair> {
    pulse_family_pair(seed, 0.0, 0.0, kind, tol)
}

/// Real Jordan basis `V = [Re v, −Im v]` of a 2×2 matrix with eigenvalues
/// `r ± si`, `s > 0`, so that `V⁻¹ G V = [[r, −s], [s, r]]`.
pub fn real_jordan_basis(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64, f64)> {
    let tr = g[(0, 0)] + g[(1, 1)];
    let det = g.determinant();
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        return Err(Error::NotInBalpha("A + alpha N has real eigenvalues".into()));
    }
    let r = tr / 2.0;
    let s = (-disc).sqrt();
    // eigenvector for r + si from whichever row is better conditioned
    let (re, im) = if g[(0, 1)].abs() >= g[(1, 0)].abs() {
        ([g[(0, 1)], r - g[(0, 0)]], [0.0, s])
    } else {
        ([r - g[(1, 1)], g[(1, 0)]], [s, 0.0])
    };
    let norm = (re[0] * re[0] + re[1] * re[1] + im[0] * im[0] + im[1] * im[1]).sqrt();
    let first = if re[0] != 0.0 { re[0] } else { re[1] };
    let sign = if first < 0.0 { -1.0 } else { 1.0 };
    let k = sign / norm;
    let v = DMatrix::from_row_slice(2, 2, &[re[0] * k, -im[0] * k, re[1] * k, -im[1] * k]);
    Ok((v, r, s))
}

/// The rotation generator `[[0, −2π/τ], [2π/τ, 0]]`.
pub fn lambda0(tau: f64) -> DMatrix<f64> {
    let w = 2.0 * std::f64::consts::PI / tau;
    DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0])
}

/// Largest `|l|` tried by the automatic choice in [`sampled_pair`].
pub const MAX_L: i64 = 50;

/// `(M, b̂)` for a given integer `l`, or `None` if `l` is not admissible.
/// `rot` is `VΛ₀V⁻¹`.
fn sampled_partner(
    t: &FourTuple,
    rot: &DMatrix<f64>,
    s: f64,
    tau: f64,
    alpha: f64,
    l: i64,
    tol: &Tolerances,
) -> Result<Option<FourTuple>> {
    let shift = 2.0 * std::f64::consts::PI * l as f64 / tau;
    if l == 0 || (s + shift).abs() <= tol.residual_tol * s.abs().max(1.0) {
        return Ok(None);
    }
    let m = &t.n + rot * (l as f64 / alpha);
    let g = &t.a + &t.n * alpha;
    let g_hat = &t.a + &m * alpha;
    if !realization::linear_canonicality(&g_hat, &t.b, &t.c, tol)?.is_canonical() {
        return Ok(None);
    }
    let b_hat = match g.lu().solve(&t.b) {
        Some(w) => &g_hat * w,
        None => return Ok(None),
    };
    let hat = FourTuple {
        a: t.a.clone(),
        n: m,
        b: b_hat,
        c: t.c.clone(),
        kind: SystemKind::TypeI,
    };
    if realization::io_equivalent(t, &hat, tol)?.equivalent {
        return Ok(None);
    }
    Ok(Some(hat))
}

/// Number of held samples compared by the sampled-pair certificate.
pub const SAMPLED_STEPS: usize = 10;
/// Largest pulse width, in periods, in the sampled-pair certificate.
pub const SAMPLED_MAX_PULSES: usize = 6;

/// Builds a type I pair whose samples at multiples of `τ` agree under every
/// sampled pulse of amplitude `α`, from `t ∈ B_α` (`n = 2`).
pub fn sampled_pair(
    t: &FourTuple,
    tau: f64,
    alpha: f64,
    l: Option<i64>,
    tol: &Tolerances,
) -> Result<CounterexamplePair> {
    if !(tau > 0.0 && tau.is_finite() && alpha != 0.0 && alpha.is_finite()) {
        return Err(Error::DegenerateRescale { tau, alpha });
    }
    if !in_b_alpha(t, alpha, tol)? {
        return Err(Error::NotInBalpha(
            "need a nonreal eigenvalue pair of A + alpha N and canonical (A + alpha N, b, c)".into(),
        ));
    }
    let sigma = t.clone().with_kind(SystemKind::TypeI);
    let g = &sigma.a + &sigma.n * alpha;
    let (v, _r, s) = real_jordan_basis(&g)?;
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotInBalpha("degenerate Jordan basis".into()))?;
    let rot = &v * lambda0(tau) * v_inv;

    let candidates: Vec<i64> = match l {
        Some(l) => vec![l],
        None => (1..=MAX_L).flat_map(|k| [k, -k]).collect(),
    };
    let mut sigma_hat = None;
    for cand in candidates {
        if let Some(h) = sampled_partner(&sigma, &rot, s, tau, alpha, cand, tol)? {
            sigma_hat = Some(h);
            break;
        }
    }
    let sigma_hat = sigma_hat.ok_or(Error::NoValidL {
        max: l.map_or(MAX_L, |v| v.abs()),
    })?;

    let mut agreement_residual = 0.0f64;
    for k in 0..=SAMPLED_MAX_PULSES {
        let mut levels = vec![0.0; SAMPLED_STEPS];
        levels[..k].fill(alpha);
        let y = simulate::sample_discrete(&sigma, tau, &levels)?;
        let y_hat = simulate::sample_discrete(&sigma_hat, tau, &levels)?;
        for (a, b) in y.iter().zip(&y_hat) {
            agreement_residual = agreement_residual.max((a.1 - b.1).abs());
        }
    }

    let mut certificate = word_certificate(&sigma, &sigma_hat, tol)?;
    let u = PiecewiseConstantInput::constant(alpha, 3.0)?;
    certificate.discrepancy = Some(sup_gap(&sigma, &sigma_hat, &u, &linspace(0.0, 3.0, 301))?);
    certificate.distinguishing_input = Some(u);
    Ok(CounterexamplePair {
        sigma,
        sigma_hat,
        input_class: InputClass::SampledPulses { tau, alpha },
        agreement_residual,
        certificate,
    })
}

/// Generic class a random seed is drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedClass {
    G0,
    C,
    M { alpha: f64 },
    BAlpha { alpha: f64 },
}

/// Rejection-samples Gaussian tuples (matrix entries `N(0, std²)`, vector
/// entries `N(0, 1)`) until one falls in `class`. Returns the tuple and the
/// number of draws it took.
pub fn sample_seed<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    std: f64,
    kind: SystemKind,
    class: SeedClass,
    max_attempts: usize,
    tol: &Tolerances,
) -> Result<(FourTuple, usize)> {
    for attempt in 1..=max_attempts {
        let t = rng::gaussian_tuple(rng, n, std, kind);
        let alpha = match class {
            SeedClass::M { alpha } | SeedClass::BAlpha { alpha } => alpha,
            _ => 1.0,
        };
        let c = classify(&t, alpha, tol)?;
        let ok = match class {
            SeedClass::G0 => c.in_g0,
            SeedClass::C => c.in_c,
            SeedClass::M { .. } => c.in_m,
            SeedClass::BAlpha { .. } => c.in_b_alpha == Some(true),
        };
        if ok {
            return Ok((t, attempt));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no seed in {class:?} after {max_attempts} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e(i: usize, j: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2, 2);
        m[(i, j)] = 1.0;
        m
    }

    fn shift_seed(n: DMatrix<f64>, kind: SystemKind) -> FourTuple {
        FourTuple::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            n,
            DVector::from_vec(vec![0.0, 1.0]),
            RowDVector::from_vec(vec![1.0, 0.0]),
            kind,
        )
        .unwrap()
    }

    fn series_power(a: &DMatrix<f64>, b: &DVector<f64>, c: &RowDVector<f64>, k: usize) -> f64 {
        let mut v = b.clone();
        for _ in 0..k {
            v = a * v;
        }
        c.dot(&v.transpose())
    }

    #[test]
    fn shift_example_is_in_g0() {
        let tol = Tolerances::default();
        let c = classify(&shift_seed(e(0, 0), SystemKind::TypeI), 1.0, &tol).unwrap();
        assert!(c.in_g0);
        let c = classify(&shift_seed(DMatrix::identity(2, 2), SystemKind::TypeI), 1.0, &tol).unwrap();
        assert!(!c.in_g0);
    }

    #[test]
    fn rotation_is_in_b_alpha() {
        let tol = Tolerances::default();
        let t = FourTuple::from_rows(2, &[0.0, -1.0, 1.0, 0.0], &[0.0; 4], &[1.0, 0.0], &[1.0, 0.0], SystemKind::TypeI)
            .unwrap();
        assert!(in_b_alpha(&t, 1.0, &tol).unwrap());
        let t3 = FourTuple::from_rows(1, &[1.0], &[0.0], &[1.0], &[1.0], SystemKind::TypeI).unwrap();
        assert_eq!(in_b_alpha(&t3, 1.0, &tol).unwrap_err().name(), "DimensionMismatch");
    }

    #[test]
    fn twin_of_shift_example() {
        let tol = Tolerances::default();
        let t = shift_seed(e(0, 0), SystemKind::TypeI);
        let twin = twin_via_t(&t, &tol).unwrap();
        assert_relative_eq!(twin.n, e(1, 1), epsilon = 1e-15);
        for gamma in [-1.0, 0.0, 0.5, 2.0] {
            for k in 0..=4 {
                assert_relative_eq!(
                    series_power(&(&t.a + &t.n * gamma), &t.b, &t.c, k),
                    series_power(&(&twin.a + &twin.n * gamma), &twin.b, &twin.c, k),
                    epsilon = 1e-14
                );
            }
        }
        assert_relative_eq!(twin_via_t(&twin, &tol).unwrap().n, t.n, epsilon = 1e-14);
        assert!(!realization::io_equivalent(&t, &twin, &tol).unwrap().equivalent);
    }

    #[test]
    fn zero_n_has_no_twin() {
        let tol = Tolerances::default();
        let err = twin_via_t(&shift_seed(DMatrix::zeros(2, 2), SystemKind::TypeI), &tol).unwrap_err();
        assert_eq!(err.name(), "NotInG0");
    }

    fn c_seed() -> FourTuple {
        FourTuple::from_rows(
            2,
            &[-0.4, 1.0, -0.8, 0.3],
            &[0.6, -0.2, 0.1, 0.5],
            &[1.0, 0.4],
            &[0.7, -1.0],
            SystemKind::TypeI,
        )
        .unwrap()
    }

    #[test]
    fn psi_and_phi_invert() {
        let seed = c_seed();
        let back = psi_inverse(&psi(&seed).unwrap()).unwrap();
        assert_relative_eq!(back.a, seed.a, epsilon = 1e-12);
        assert_relative_eq!(back.b, seed.b, epsilon = 1e-12);

        let back = phi_inverse(&phi_map(&seed, 0.8, -1.5).unwrap(), 0.8, -1.5).unwrap();
        assert_relative_eq!(back.a, seed.a, epsilon = 1e-12);
        assert_relative_eq!(back.b, seed.b, epsilon = 1e-12);
    }

    #[test]
    fn single_pulse_pair_agrees_on_its_pulse_only() {
        let tol = Tolerances::default();
        let pair = single_pulse_pair(&c_seed(), 1.0, 1.0, &tol).unwrap();
        assert!(pair.agreement_residual < 1e-7, "{}", pair.agreement_residual);
        assert!(pair.certificate.discrepancy.unwrap() > 1e-6);
        assert!(!realization::io_equivalent(&pair.sigma, &pair.sigma_hat, &tol).unwrap().equivalent);
    }

    #[test]
    fn single_pulse_requires_c_and_valid_rescale() {
        let tol = Tolerances::default();
        assert_eq!(single_pulse_pair(&c_seed(), 0.0, 1.0, &tol).unwrap_err().name(), "DegenerateRescale");
        assert_eq!(single_pulse_pair(&c_seed(), 1.0, 0.0, &tol).unwrap_err().name(), "DegenerateRescale");
        let mut bad = c_seed();
        bad.n = DMatrix::identity(2, 2);
        assert_eq!(single_pulse_pair(&bad, 1.0, 1.0, &tol).unwrap_err().name(), "NotInC");
    }

    #[test]
    fn identical_systems_have_no_distinguisher() {
        let tol = Tolerances::default();
        let t = c_seed();
        let err = distinguishing_search(&t, &t, 1.0, 1.0, &tol).unwrap_err();
        assert_eq!(err.name(), "NoDistinguisherFound");
    }

    #[test]
    fn constants_pair_matches_exponential_series() {
        let tol = Tolerances::default();
        let seed = c_seed().with_kind(SystemKind::TypeII);
        let pair = constants_pair(&seed, SystemKind::TypeII, &tol).unwrap();
        assert_eq!(pair.input_class, InputClass::Constants);
        for gamma in [-1.0, 0.0, 1.0] {
            for t in linspace(0.0, 3.0, 7) {
                let y1 = pair.sigma.c.dot(&(matfun::expm(&((&pair.sigma.a + &pair.sigma.n * gamma) * t)).unwrap() * &pair.sigma.b).transpose());
                let y2 = pair.sigma_hat.c.dot(
                    &(matfun::expm(&((&pair.sigma_hat.a + &pair.sigma_hat.n * gamma) * t)).unwrap() * &pair.sigma_hat.b)
                        .transpose(),
                );
                assert!((y1 - y2).abs() < 1e-8);
            }
        }
        assert!(pair.agreement_residual < 1e-7);
    }

    #[test]
    fn pulse_family_pair_agrees_for_every_beta() {
        let tol = Tolerances::default();
        let pair = pulse_family_pair(&c_seed(), 1.0, 0.7, SystemKind::TypeII, &tol).unwrap();
        assert!(pair.agreement_residual < 1e-7, "{}", pair.agreement_residual);
        assert!(!pair.certificate.word.is_empty() || pair.certificate.coefficients.0 != pair.certificate.coefficients.1);
        assert!(pulse_family_pair(&c_seed(), 1.0, 0.7, SystemKind::TypeI, &tol).is_err());
    }

    #[test]
    fn type_one_constants_pair() {
        let tol = Tolerances::default();
        let pair = constants_pair(&c_seed(), SystemKind::TypeI, &tol).unwrap();
        assert!(pair.agreement_residual < 1e-7);
    }

    #[test]
    fn jordan_basis_of_rotation() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let (v, r, s) = real_jordan_basis(&g).unwrap();
        assert_eq!(r, 0.0);
        assert_relative_eq!(s, 1.0);
        let j = v.clone().try_inverse().unwrap() * &g * &v;
        assert_relative_eq!(j, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), epsilon = 1e-14);

        let g = DMatrix::from_row_slice(2, 2, &[0.3, 2.0, -0.7, -0.1]);
        let (v, r, s) = real_jordan_basis(&g).unwrap();
        let j = v.clone().try_inverse().unwrap() * &g * &v;
        assert_relative_eq!(j, DMatrix::from_row_slice(2, 2, &[r, -s, s, r]), epsilon = 1e-13);
        assert!(real_jordan_basis(&DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn sampled_rotation_example() {
        let tol = Tolerances::default();
        let t = FourTuple::from_rows(2, &[0.0, -1.0, 1.0, 0.0], &[0.0; 4], &[1.0, 0.0], &[1.0, 0.0], SystemKind::TypeI)
            .unwrap();
        let pair = sampled_pair(&t, 1.0, 1.0, Some(1), &tol).unwrap();
        let sys = simulate::SampledSystem::new(pair.sigma.clone(), 1.0).unwrap();
        let hat = simulate::SampledSystem::new(pair.sigma_hat.clone(), 1.0).unwrap();
        let (f, g) = sys.transition(1.0).unwrap();
        let (f_hat, g_hat) = hat.transition(1.0).unwrap();
        let rot = DMatrix::from_row_slice(2, 2, &[1f64.cos(), -1f64.sin(), 1f64.sin(), 1f64.cos()]);
        assert_relative_eq!(f, rot, epsilon = 1e-12);
        assert_relative_eq!(f_hat, rot, epsilon = 1e-12);
        assert_relative_eq!(g, g_hat, epsilon = 1e-12);
        assert!(pair.agreement_residual < 1e-9);
        assert!(pair.certificate.discrepancy.unwrap() > 1e-3);
    }

    #[test]
    fn sampled_pair_rejects_real_spectrum() {
        let tol = Tolerances::default();
        let t = FourTuple::from_rows(2, &[1.0, 0.0, 0.0, 2.0], &[0.0; 4], &[1.0, 1.0], &[1.0, 1.0], SystemKind::TypeI)
            .unwrap();
        assert_eq!(sampled_pair(&t, 1.0, 1.0, None, &tol).unwrap_err().name(), "NotInBalpha");
    }

    #[test]
    fn seeds_land_in_their_class() {
        let tol = Tolerances::default();
        let mut r = rng::stream(3, "seed-test");
        let (t, _) = sample_seed(&mut r, 3, 0.5, SystemKind::TypeI, SeedClass::C, 100, &tol).unwrap();
        let c = classify(&t, 1.0, &tol).unwrap();
        assert!(c.in_c && c.in_g0);
    }
}
