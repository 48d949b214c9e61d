//! Constrained shifted-exponential fit of a cumulative-perplexity trajectory.
//!
//! Model: `y(x) = A·exp(-b·x) + C` for `x = 1..m`, with `A >= 0`, `b >= 0`
//! and `0 <= C <= min(y)`. For a fixed `b` the problem is a two-variable
//! box-constrained linear least-squares problem solved exactly; the decay
//! constant is found by a log-spaced grid over `[1e-3, 10]` followed by
//! golden-section refinement of the best bracket.

use serde::{Deserialize, Serialize};

use crate::metrics::Undefined;

pub const B_MIN: f64 = 1e-3;
pub const B_MAX: f64 = 10.0;
const GRID_POINTS: usize = 400;
const REL_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Reducible uncertainty.
    pub a: f64,
    /// Decay constant.
    pub b: f64,
    /// Asymptotic baseline.
    pub c: f64,
    /// Context-progression rate, `exp(-b)`.
    pub r: f64,
    pub r_squared: f64,
    /// Root mean squared residual, in perplexity units.
    pub rmse: f64,
}

impl DecayFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.a * (-self.b * x).exp() + self.c
    }

    /// Residuals `y(x) - y_x` for `x = 1..m`.
    pub fn residuals(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, y)| self.predict((i + 1) as f64) - y)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    a: f64,
    c: f64,
    sse: f64,
}

fn sse(e: &[f64], y: &[f64], a: f64, c: f64) -> f64 {
    e.iter().zip(y).map(|(e, y)| (a * e + c - y).powi(2)).sum()
}

/// Exact minimizer of `Σ(A·e + C - y)²` over `A >= 0, 0 <= C <= c_max`.
///
/// The objective is convex, so either the unconstrained solution is
/// feasible or the optimum lies on one of the box edges `A = 0`, `C = 0`,
/// `C = c_max`; each edge has a closed-form clamped minimizer.
fn solve_linear(e: &[f64], y: &[f64], c_max: f64) -> Linear {
    let n = e.len() as f64;
    let se: f64 = e.iter().sum();
    let see: f64 = e.iter().map(|v| v * v).sum();
    let sy: f64 = y.iter().sum();
    let sey: f64 = e.iter().zip(y).map(|(e, y)| e * y).sum();

    let mut best: Option<Linear> = None;
    let mut consider = |a: f64, c: f64| {
        let s = sse(e, y, a, c);
        if best.is_none_or(|b| s < b.sse) {
            best = Some(Linear { a, c, sse: s });
        }
    };

    let det = see * n - se * se;
    if det > 1e-300 * see.max(1.0) * n {
        let a = (n * sey - se * sy) / det;
        let c = (see * sy - se * sey) / det;
        if a >= 0.0 && (0.0..=c_max).contains(&c) {
            consider(a, c);
            return best.unwrap();
        }
    }
    consider(0.0, (sy / n).clamp(0.0, c_max));
    if see > 0.0 {
        consider((sey / see).max(0.0), 0.0);
        consider(((sey - c_max * se) / see).max(0.0), c_max);
    }
    best.unwrap()
}

fn profile(b: f64, y: &[f64], c_max: f64) -> Linear {
    let e: Vec<f64> = (1..=y.len()).map(|x| (-b * x as f64).exp()).collect();
    solve_linear(&e, y, c_max)
}

/// Fits the shifted exponential to `values[x - 1]`, `x = 1..m`.
pub fn fit_decay(values: &[f64]) -> Result<DecayFit, Undefined> {
    let m = values.len();
    if m < 3 {
        return Err(Undefined::TooFewSentences);
    }
    let y_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(y_min.is_finite() && y_max.is_finite()) {
        return Err(Undefined::NonFinite);
    }
    if y_max - y_min < 1e-6 * y_max.abs() {
        return Err(Undefined::FlatTrajectory);
    }
    let c_max = y_min.max(0.0);

    let ratio = (B_MAX / B_MIN).ln() / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| B_MIN * (ratio * i as f64).exp())
        .collect();
    let scores: Vec<f64> = grid.iter().map(|&b| profile(b, values, c_max).sse).collect();
    let best_i = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();

    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(GRID_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = profile(x1, values, c_max).sse;
    let mut f2 = profile(x2, values, c_max).sse;
    while hi - lo > REL_WIDTH * 0.5 * (hi + lo) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = profile(x1, values, c_max).sse;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = profile(x2, values, c_max).sse;
        }
    }
    let refined = 0.5 * (lo + hi);
    let (b, lin) = {
        let r = profile(refined, values, c_max);
        if r.sse <= scores[best_i] {
            (refined, r)
        } else {
            (grid[best_i], profile(grid[best_i], values, c_max))
        }
    };

    let mean = values.iter().sum::<f64>() / m as f64;
    let sst: f64 = values.iter().map(|y| (y - mean).powi(2)).sum();
    Ok(DecayFit {
        a: lin.a,
        b,
        c: lin.c,
        r: (-b).exp(),
        r_squared: 1.0 - lin.sse / sst,
        rmse: (lin.sse / m as f64).sqrt(),
    })
}
