//! Realization theory for 4-tuples: reachability and observability
//! matrices, generating-series coefficients over words in `{A, N}`,
//! canonicality, i/o equivalence, similarity recovery, the self-dual
//! transform of a canonical linear triple, and the `B(S)` predicate.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matfun::{self, Tolerances};
use crate::system::{similarity_residuals, FourTuple, SimilarityWitness};

/// Largest state dimension for which the 2ⁿ − 1 extended products are formed.
pub const MAX_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    A,
    N,
}

/// A word `(i₁, …, i_k)` over `{A, N}`; the matrix product is taken in
/// reading order, `A_{i₁}⋯A_{i_k}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All words of length `len` in lexicographic order, `A < N`.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = Word> {
        (0u64..(1u64 << len)).map(move |bits| {
            Word(
                (0..len)
                    .map(|i| {
                        if bits >> (len - 1 - i) & 1 == 1 {
                            Letter::N
                        } else {
                            Letter::A
                        }
                    })
                    .collect(),
            )
        })
    }

    /// `A_{i₁}⋯A_{i_k}` for the given tuple.
    pub fn product(&self, t: &FourTuple) -> DMatrix<f64> {
        let n = t.dim();
        self.0
            .iter()
            .fold(DMatrix::identity(n, n), |acc, l| acc * letter_matrix(t, *l))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            f.write_str(match l {
                Letter::A => "A",
                Letter::N => "N",
            })?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                'A' => Ok(Letter::A),
                'N' => Ok(Letter::N),
                other => Err(Error::InvalidArgument(format!(
                    "word letters must be A or N, got {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn letter_matrix(t: &FourTuple, l: Letter) -> &DMatrix<f64> {
    match l {
        Letter::A => &t.a,
        Letter::N => &t.n,
    }
}

/// `[v, Mv, …, M^{k−1}v]` as columns.
pub fn krylov(m: &DMatrix<f64>, v: &DVector<f64>, k: usize) -> DMatrix<f64> {
    let n = v.len();
    let mut out = DMatrix::zeros(n, k);
    let mut col = v.clone();
    for j in 0..k {
        out.set_column(j, &col);
        if j + 1 < k {
            col = m * &col;
        }
    }
    out
}

/// Controllability matrix `[b, Ab, …, A^{n−1}b]`.
pub fn controllability(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    krylov(a, b, b.len())
}

/// Observability matrix with rows `c, cA, …, cA^{n−1}`.
pub fn observability(a: &DMatrix<f64>, c: &RowDVector<f64>) -> DMatrix<f64> {
    krylov(&a.transpose(), &c.transpose(), c.len()).transpose()
}

/// `(R(A, b), O(A, c))` of the linear part of the tuple.
pub fn reach_obs(t: &FourTuple) -> (DMatrix<f64>, DMatrix<f64>) {
    (controllability(&t.a, &t.b), observability(&t.a, &t.c))
}

/// Generating-series coefficient `c A_{i₁}⋯A_{i_k} b`.
pub fn series_coefficient(t: &FourTuple, w: &Word) -> f64 {
    let mut v = t.b.clone();
    for l in w.0.iter().rev() {
        v = letter_matrix(t, *l) * v;
    }
    t.c.dot(&v.transpose())
}

/// The vectors `A_α b` for every word `α` of length at most `n − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedReachability {
    /// `n × (2ⁿ − 1)`, length-then-lexicographic column order.
    pub columns: DMatrix<f64>,
}

impl ExtendedReachability {
    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    /// Words labelling the columns, in the same order.
    pub fn words(n: usize) -> Vec<Word> {
        (0..n).flat_map(Word::all_of_length).collect()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim: n, cap: MAX_DIM });
    }
    Ok(())
}

/// Products of `A`, `N` with a start vector over words of length `< levels`.
/// Level `k` is `[A·(level k−1), N·(level k−1)]`, which yields lexicographic
/// order because the new letter is the leftmost one.
fn extended_columns(a: &DMatrix<f64>, nm: &DMatrix<f64>, v: &DVector<f64>, levels: usize) -> DMatrix<f64> {
    let n = v.len();
    let total = (1usize << levels) - 1;
    let mut out = DMatrix::zeros(n, total);
    out.set_column(0, v);
    let mut prev_start = 0;
    let mut prev_len = 1;
    let mut next = 1;
    for _ in 1..levels {
        for m in [a, nm] {
            for j in prev_start..prev_start + prev_len {
                let col = m * out.column(j);
                out.set_column(next, &col);
                next += 1;
            }
        }
        prev_start += prev_len;
        prev_len *= 2;
    }
    out
}

/// All `A_α b` with `|α| ≤ n − 1`, one matrix–vector product per column.
pub fn extended_reach(t: &FourTuple) -> Result<ExtendedReachability> {
    let n = t.dim();
    check_dim(n)?;
    Ok(ExtendedReachability {
        columns: extended_columns(&t.a, &t.n, &t.b, n),
    })
}

/// Dual of [`extended_reach`]: the columns `A_α′ c′`, i.e. the transposed
/// tuple `(A′, N′, c′, b′)`.
pub fn extended_obs(t: &FourTuple) -> Result<ExtendedReachability> {
    let n = t.dim();
    check_dim(n)?;
    Ok(ExtendedReachability {
        columns: extended_columns(&t.a.transpose(), &t.n.transpose(), &t.c.transpose(), n),
    })
}

/// Ranks behind a canonicality decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Canonicality {
    pub dim: usize,
    pub reach_rank: usize,
    pub obs_rank: usize,
}

impl Canonicality {
    pub fn is_canonical(&self) -> bool {
        self.reach_rank == self.dim && self.obs_rank == self.dim
    }

    /// Human-readable reason when not canonical.
    pub fn reason(&self) -> Option<String> {
        if self.reach_rank < self.dim {
            Some(format!("reachability rank {}", self.reach_rank))
        } else if self.obs_rank < self.dim {
            Some(format!("observability rank {}", self.obs_rank))
        } else {
            None
        }
    }
}

/// Span-reachability and span-observability ranks.
pub fn canonicality(t: &FourTuple, tol: &Tolerances) -> Result<Canonicality> {
    Ok(Canonicality {
        dim: t.dim(),
        reach_rank: matfun::rank(&extended_reach(t)?.columns, tol)?,
        obs_rank: matfun::rank(&extended_obs(t)?.columns, tol)?,
    })
}

pub fn is_canonical(t: &FourTuple, tol: &Tolerances) -> Result<bool> {
    Ok(canonicality(t, tol)?.is_canonical())
}

/// Canonicality of the linear triple `(A, b, c)`: `R(A, b)` and `O(A, c)`
/// both of full rank.
pub fn linear_canonicality(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &RowDVector<f64>,
    tol: &Tolerances,
) -> Result<Canonicality> {
    Ok(Canonicality {
        dim: a.nrows(),
        reach_rank: matfun::rank(&controllability(a, b), tol)?,
        obs_rank: matfun::rank(&observability(a, c), tol)?,
    })
}

/// Outcome of an i/o equivalence check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Shortest, then lexicographically first, word whose coefficients differ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<Word>,
    /// The two coefficients at `word`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<(f64, f64)>,
    /// Longest word length examined.
    pub max_len: usize,
    /// `max(1, max |coefficient|)` used to scale the tolerance.
    pub scale: f64,
}

/// Depth-first walk over all words of length `≤ max_len`, carrying the
/// row-vector prefix products `c A_{i₁}⋯A_{i_j}` of both tuples.
fn walk_words(
    t1: &FourTuple,
    t2: &FourTuple,
    max_len: usize,
    visit: &mut dyn FnMut(&[Letter], f64, f64) -> bool,
) {
    fn rec(
        t1: &FourTuple,
        t2: &FourTuple,
        r1: &RowDVector<f64>,
        r2: &RowDVector<f64>,
        prefix: &mut Vec<Letter>,
        max_len: usize,
        visit: &mut dyn FnMut(&[Letter], f64, f64) -> bool,
    ) {
        let k1 = r1.dot(&t1.b.transpose());
        let k2 = r2.dot(&t2.b.transpose());
        if !visit(prefix, k1, k2) || prefix.len() == max_len {
            return;
        }
        for l in [Letter::A, Letter::N] {
            let n1 = r1 * letter_matrix(t1, l);
            let n2 = r2 * letter_matrix(t2, l);
            prefix.push(l);
            rec(t1, t2, &n1, &n2, prefix, max_len, visit);
            prefix.pop();
        }
    }
    let mut prefix = Vec::with_capacity(max_len);
    rec(t1, t2, &t1.c, &t2.c, &mut prefix, max_len, visit);
}

/// I/o equivalence of two tuples: all coefficients over words of length up
/// to `n₁ + n₂` agree within `residual_tol · scale`.
pub fn io_equivalent(t1: &FourTuple, t2: &FourTuple, tol: &Tolerances) -> Result<Equivalence> {
    io_equivalent_up_to(t1, t2, t1.dim() + t2.dim(), tol)
}

/// As [`io_equivalent`] with an explicit word-length bound.
pub fn io_equivalent_up_to(
    t1: &FourTuple,
    t2: &FourTuple,
    max_len: usize,
    tol: &Tolerances,
) -> Result<Equivalence> {
    if max_len > 2 * MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: max_len,
            cap: 2 * MAX_DIM,
        });
    }
    let mut scale = 1.0f64;
    walk_words(t1, t2, max_len, &mut |_, k1, k2| {
        scale = scale.max(k1.abs()).max(k2.abs());
        true
    });
    let limit = tol.residual_tol * scale;

    let mut best: Option<(Vec<Letter>, f64, f64)> = None;
    walk_words(t1, t2, max_len, &mut |w, k1, k2| {
        if let Some((bw, _, _)) = &best {
            if w.len() >= bw.len() {
                // depth-first order visits same-length words lexicographically,
                // so anything at this depth or deeper cannot improve the record
                return w.len() < bw.len();
            }
        }
        if (k1 - k2).abs() > limit || !(k1 - k2).is_finite() {
            best = Some((w.to_vec(), k1, k2));
            return false;
        }
        true
    });

    Ok(match best {
        Some((w, k1, k2)) => Equivalence {
            equivalent: false,
            word: Some(Word(w)),
            coefficients: Some((k1, k2)),
            max_len,
            scale,
        },
        None => Equivalence {
            equivalent: true,
            word: None,
            coefficients: None,
            max_len,
            scale,
        },
    })
}

/// The unique similarity between two canonical, i/o equivalent tuples,
/// `T = R₁ R₂^#` over the extended reachability matrices.
pub fn similarity_between(
    t1: &FourTuple,
    t2: &FourTuple,
    tol: &Tolerances,
) -> Result<SimilarityWitness> {
    for (name, t) in [("first", t1), ("second", t2)] {
        let c = canonicality(t, tol)?;
        if let Some(reason) = c.reason() {
            return Err(Error::NotCanonical(format!("{name} tuple: {reason}")));
        }
    }
    if t1.dim() != t2.dim() {
        return Err(Error::NotSimilar {
            max_residual: f64::INFINITY,
        });
    }
    let r1 = extended_reach(t1)?.columns;
    let r2 = extended_reach(t2)?.columns;
    let (r2_pinv, _) = matfun::pinv_rank(&r2, tol)?;
    let t = r1 * r2_pinv;
    let residuals = similarity_residuals(t1, t2, &t).ok_or(Error::NotSimilar {
        max_residual: f64::INFINITY,
    })?;
    let witness = SimilarityWitness { t, residuals };
    if witness.max_residual() <= tol.residual_tol {
        Ok(witness)
    } else {
        Err(Error::NotSimilar {
            max_residual: witness.max_residual(),
        })
    }
}

/// `T(A, b, c) = R(A, b) · [O(A, c)′]⁻¹`, the unique `T` with
/// `AT = TA′`, `b = Tc′`, `cT = b′`.
pub fn self_dual_transform(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &RowDVector<f64>,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let canon = linear_canonicality(a, b, c, tol)?;
    if let Some(reason) = canon.reason() {
        return Err(Error::NotCanonicalTriple(reason));
    }
    let r = controllability(a, b);
    let ot = observability(a, c).transpose();
    // T·O′ = R  ⇔  O·T′ = R′
    let tt = ot
        .transpose()
        .lu()
        .solve(&r.transpose())
        .ok_or_else(|| Error::NotCanonicalTriple("observability matrix is singular".into()))?;
    Ok(tt.transpose())
}

/// Relative residuals of `AT = TA′`, `b = Tc′`, `cT = b′` and of `T = T′`.
pub fn self_dual_residuals(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &RowDVector<f64>,
    t: &DMatrix<f64>,
) -> [f64; 4] {
    let at = a * t;
    [
        (&at - t * a.transpose()).norm() / at.norm().max(1.0),
        (b - t * c.transpose()).norm() / b.norm().max(1.0),
        (c * t - b.transpose()).norm() / b.norm().max(1.0),
        (t - t.transpose()).norm() / t.norm().max(1.0),
    ]
}

/// `‖NS − SN′‖_F / (‖S‖_F · max(‖N‖_F, 1))`; zero iff `N ∈ B(S)`.
pub fn b_residual(n: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<f64> {
    if n.shape() != s.shape() || !n.is_square() {
        return Err(Error::ShapeMismatch("N and S must be square of equal size".into()));
    }
    let s_norm = s.norm();
    if s_norm == 0.0 {
        return Err(Error::ZeroS);
    }
    Ok((n * s - s * n.transpose()).norm() / (s_norm * n.norm().max(1.0)))
}

/// Membership `N ∈ B(S) = {N : NS = SN′}` at `residual_tol`.
pub fn in_b(n: &DMatrix<f64>, s: &DMatrix<f64>, tol: &Tolerances) -> Result<bool> {
    Ok(b_residual(n, s)? <= tol.residual_tol)
}
