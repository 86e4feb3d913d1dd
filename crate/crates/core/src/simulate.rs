//! Exact simulation under piecewise-constant inputs.
//!
//! On an interval where the input holds the level `v`, a type I state moves
//! by the affine flow `[x; 1] ↦ exp(h [[A + vN, v b], [0, 0]]) [x; 1]` and a
//! type II state by `x ↦ exp(h (A + vN)) x`. No ODE integrator is involved.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::input::PiecewiseConstantInput;
use crate::matfun;
use crate::system::{FourTuple, SystemKind};
use crate::trajectory::Trajectory;

/// `count` equally spaced points on `[start, end]`, endpoints exact.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|k| start + k as f64 * step).collect();
            v[count - 1] = end;
            v
        }
    }
}

/// Parses `start:step:end` into a grid; the end point is included when it
/// lies on the lattice up to rounding.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidArgument(format!("grid must be start:step:end, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, step, end) = (nums[0], nums[1], nums[2]);
    if !(start.is_finite() && end.is_finite() && step > 0.0 && end >= start) {
        return Err(bad());
    }
    let steps = ((end - start) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|k| start + k as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        if (*last - end).abs() <= 1e-9 * step {
            *last = end;
        }
    }
    Ok(grid)
}

/// Exponentials of the per-level generators, keyed by the bit patterns of
/// `(level, h)`.
struct FlowCache<'a> {
    t: &'a FourTuple,
    driven: bool,
    cache: HashMap<(u64, u64), DMatrix<f64>>,
}

impl<'a> FlowCache<'a> {
    fn new(t: &'a FourTuple, driven: bool) -> Self {
        FlowCache {
            t,
            driven,
            cache: HashMap::new(),
        }
    }

    fn advance(&mut self, x: &DVector<f64>, level: f64, h: f64) -> Result<DVector<f64>> {
        if h == 0.0 {
            return Ok(x.clone());
        }
        let n = self.t.dim();
        let key = (level.to_bits(), h.to_bits());
        if !self.cache.contains_key(&key) {
            let g = &self.t.a + &self.t.n * level;
            let e = if self.driven {
                let mut aug = DMatrix::zeros(n + 1, n + 1);
                aug.view_mut((0, 0), (n, n)).copy_from(&g);
                aug.view_mut((0, n), (n, 1)).copy_from(&(&self.t.b * level));
                matfun::expm(&(aug * h))?
            } else {
                matfun::expm(&(g * h))?
            };
            self.cache.insert(key, e);
        }
        let e = &self.cache[&key];
        Ok(if self.driven {
            e.view((0, 0), (n, n)) * x + e.view((0, n), (n, 1))
        } else {
            e * x
        })
    }
}

fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    let mut prev = 0.0;
    for &t in grid {
        if !(t >= prev && t <= horizon) {
            return Err(Error::GridOutOfRange { t, horizon });
        }
        prev = t;
    }
    Ok(())
}

/// Simulates from an arbitrary initial state. Type I tuples carry the drive
/// term `b u`, type II tuples do not.
pub fn simulate_from(
    t: &FourTuple,
    x0: &DVector<f64>,
    u: &PiecewiseConstantInput,
    grid: &[f64],
) -> Result<Trajectory> {
    if x0.len() != t.dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            t.dim()
        )));
    }
    check_grid(grid, u.horizon())?;
    let mut flows = FlowCache::new(t, t.kind == SystemKind::TypeI);
    let breaks = u.breakpoints();
    let mut next_break = 1;
    let mut s = 0.0;
    let mut x = x0.clone();
    let mut outputs = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    for &tg in grid {
        while next_break < breaks.len() && breaks[next_break] <= tg {
            x = flows.advance(&x, u.value_at(s), breaks[next_break] - s)?;
            s = breaks[next_break];
            next_break += 1;
        }
        x = flows.advance(&x, u.value_at(s), tg - s)?;
        s = tg;
        outputs.push(t.c.dot(&x.transpose()));
        states.push(x.clone());
    }
    if outputs.iter().any(|y| !y.is_finite()) {
        return Err(Error::Overflow);
    }
    Ok(Trajectory {
        times: grid.to_vec(),
        outputs,
        states: Some(states),
    })
}

/// Initial state fixed by the kind: `0` for type I, `b` for type II.
pub fn initial_state(t: &FourTuple) -> DVector<f64> {
    match t.kind {
        SystemKind::TypeI => DVector::zeros(t.dim()),
        SystemKind::TypeII => t.b.clone(),
    }
}

/// Output (and states) of the system on the requested grid.
pub fn simulate(t: &FourTuple, u: &PiecewiseConstantInput, grid: &[f64]) -> Result<Trajectory> {
    simulate_from(t, &initial_state(t), u, grid)
}

/// Response to `u_{τ,α,β}` (α on `[0, τ)`, β afterwards) on the grid; the
/// input horizon is the last grid point.
pub fn respond_pulse(t: &FourTuple, tau: f64, alpha: f64, beta: f64, grid: &[f64]) -> Result<Trajectory> {
    let horizon = grid.last().copied().unwrap_or(0.0);
    if !(horizon >= 0.0) {
        return Err(Error::GridOutOfRange { t: horizon, horizon });
    }
    let u = PiecewiseConstantInput::pulse(tau, alpha, beta, horizon)?;
    simulate(t, &u, grid)
}

/// Fixed-rate sample-and-hold discretization of a type I system.
#[derive(Debug, Clone)]
pub struct SampledSystem {
    pub tuple: FourTuple,
    pub tau: f64,
}

impl SampledSystem {
    pub fn new(tuple: FourTuple, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("sampling period {tau} must be positive")));
        }
        Ok(SampledSystem { tuple, tau })
    }

    /// `F = exp((A + uN)τ)` and `g = ∫₀^τ exp((A + uN)s) ds · b`.
    pub fn transition(&self, level: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let g = &self.tuple.a + &self.tuple.n * level;
        let f = matfun::expm(&(&g * self.tau))?;
        let kernel = matfun::phi1(&g, self.tau)?;
        Ok((f, kernel * &self.tuple.b))
    }

    /// `x₀ = 0`, `x_{k+1} = F_k x_k + u_k g_k`, `y_k = c x_k`; returns
    /// `len(levels) + 1` pairs.
    pub fn run(&self, levels: &[f64]) -> Result<Vec<(DVector<f64>, f64)>> {
        let mut x = DVector::zeros(self.tuple.dim());
        let mut out = Vec::with_capacity(levels.len() + 1);
        out.push((x.clone(), 0.0));
        let mut cache: HashMap<u64, (DMatrix<f64>, DVector<f64>)> = HashMap::new();
        for &u in levels {
            let (f, g) = &*match cache.entry(u.to_bits()) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => e.insert(self.transition(u)?),
            };
            x = f * x + g * u;
            out.push((x.clone(), self.tuple.c.dot(&x.transpose())));
        }
        Ok(out)
    }
}

/// Sampled states and outputs of a type I tuple under sample-and-hold levels.
pub fn sample_discrete(t: &FourTuple, tau: f64, levels: &[f64]) -> Result<Vec<(DVector<f64>, f64)>> {
    if t.kind != SystemKind::TypeI {
        return Err(Error::InvalidArgument("sampled recursion is defined for type I tuples".into()));
    }
    SampledSystem::new(t.clone(), tau)?.run(levels)
}
