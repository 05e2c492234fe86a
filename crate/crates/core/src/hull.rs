//! Concavification and convexification of functions on the report grid.

use num::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::AggregationRule;
use crate::rational::{exact, int, serde_exact, Q};

/// A continuous piecewise-linear function given by its breakpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PiecewiseLinear {
    #[serde(with = "serde_exact::vec")]
    xs: Vec<Q>,
    #[serde(with = "serde_exact::vec")]
    ys: Vec<Q>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<Q>, ys: Vec<Q>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidRule("need matching breakpoints, at least two".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidRule("breakpoints must increase strictly".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.xs
    }

    pub fn values(&self) -> &[Q] {
        &self.ys
    }

    /// Indices `(l, r)` of the breakpoints bracketing `x`; `l == r` when `x`
    /// is itself a breakpoint.
    pub fn segment(&self, x: &Q) -> Result<(usize, usize)> {
        let (lo, hi) = (&self.xs[0], &self.xs[self.xs.len() - 1]);
        if x < lo || x > hi {
            return Err(Error::OutOfDomain { x: exact(x), lo: exact(lo), hi: exact(hi) });
        }
        match self.xs.binary_search(x) {
            Ok(i) => Ok((i, i)),
            Err(i) => Ok((i - 1, i)),
        }
    }

    /// Exact linear interpolation.
    pub fn eval(&self, x: &Q) -> Result<Q> {
        let (l, r) = self.segment(x)?;
        if l == r {
            return Ok(self.ys[l].clone());
        }
        let t = (x - &self.xs[l]) / (&self.xs[r] - &self.xs[l]);
        Ok(&self.ys[l] + t * (&self.ys[r] - &self.ys[l]))
    }

    pub fn negated(&self) -> Self {
        Self { xs: self.xs.clone(), ys: self.ys.iter().map(|y| -y).collect() }
    }
}

/// Twice the signed area of `(p, q, r)`; positive for a left turn.
fn cross(p: &(Q, Q), q: &(Q, Q), r: &(Q, Q)) -> Q {
    (&q.0 - &p.0) * (&r.1 - &p.1) - (&q.1 - &p.1) * (&r.0 - &p.0)
}

/// Monotone-chain scan over points sorted by x. Collinear interior points are
/// dropped.
fn chain(points: Vec<(Q, Q)>, upper: bool) -> PiecewiseLinear {
    let mut hull: Vec<(Q, Q)> = Vec::with_capacity(points.len());
    for p in points {
        while hull.len() >= 2 {
            let turn = cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p);
            let drop = if upper { turn >= Q::zero() } else { turn <= Q::zero() };
            if !drop {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    let (xs, ys) = hull.into_iter().unzip();
    PiecewiseLinear { xs, ys }
}

fn grid_points(rule: &AggregationRule) -> Vec<(Q, Q)> {
    let n = int(rule.n() as i64);
    rule.values()
        .iter()
        .enumerate()
        .map(|(k, v)| (int(k as i64) / &n, v.clone()))
        .collect()
}

/// Smallest concave function above the rule on `[0, 1]`.
pub fn concavify(rule: &AggregationRule) -> PiecewiseLinear {
    chain(grid_points(rule), true)
}

/// Largest convex function below the rule on `[0, 1]`.
pub fn convexify(rule: &AggregationRule) -> PiecewiseLinear {
    chain(grid_points(rule), false)
}

/// Upper hull of arbitrary values on the grid `{0, 1/n, ..., 1}` (values may
/// lie outside `[0, 1]`).
pub fn concavify_values(values: &[Q]) -> PiecewiseLinear {
    let n = int(values.len() as i64 - 1);
    let pts = values.iter().enumerate().map(|(k, v)| (int(k as i64) / &n, v.clone())).collect();
    chain(pts, true)
}

pub fn convexify_values(values: &[Q]) -> PiecewiseLinear {
    let n = int(values.len() as i64 - 1);
    let pts = values.iter().enumerate().map(|(k, v)| (int(k as i64) / &n, v.clone())).collect();
    chain(pts, false)
}

/// Grid indices of the hull breakpoints bracketing `x`.
pub fn support_indices(pl: &PiecewiseLinear, x: &Q, n: usize) -> Result<(usize, usize)> {
    let (l, r) = pl.segment(x)?;
    let idx = |v: &Q| -> usize {
        let k = v * int(n as i64);
        debug_assert!(k.is_integer());
        k.to_integer().try_into().unwrap_or(0)
    };
    Ok((idx(&pl.xs[l]), idx(&pl.xs[r])))
}

/// Whether a piecewise-linear function is concave (slopes non-increasing).
pub fn is_concave(pl: &PiecewiseLinear) -> bool {
    slopes(pl).windows(2).all(|w| w[0] >= w[1])
}

pub fn is_convex(pl: &PiecewiseLinear) -> bool {
    slopes(pl).windows(2).all(|w| w[0] <= w[1])
}

fn slopes(pl: &PiecewiseLinear) -> Vec<Q> {
    pl.xs
        .windows(2)
        .zip(pl.ys.windows(2))
        .map(|(x, y)| (&y[1] - &y[0]) / (&x[1] - &x[0]))
        .collect()
}
