//! Scalar evaluations of rules against structures: success probabilities,
//! regret, worst cases over the adversary's vertices, the hull-based regret
//! bound, approximation ratio and the multi-state utilities.

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::feasible::{
    enumerate_mean_vertices, multistate_vertices, GridDist, ReducedStructure,
};
use crate::hull::{concavify, convexify, support_indices};
use crate::model::{AggregationRule, MultiScenario, Scenario};
use crate::rational::{q, Q};

fn check_sizes(rule: &AggregationRule, rs: &ReducedStructure) -> Result<()> {
    rule.check_agents(rs.n())
}

/// `mu E_1[f] + (1 - mu) E_0[1 - f]`.
pub fn dm_success(rule: &AggregationRule, rs: &ReducedStructure, mu: &Q) -> Result<Q> {
    check_sizes(rule, rs)?;
    let f = rule.values();
    Ok(success_from_expectations(&rs.dist0().expect(f), &rs.dist1().expect(f), mu))
}

fn success_from_expectations(e0: &Q, e1: &Q, mu: &Q) -> Q {
    mu * e1 + (Q::one() - mu) * (Q::one() - e0)
}

/// `sum_v min{(1 - mu) d0(v), mu d1(v)}`; the Bayesian success is one minus this.
pub fn overlap(dist0: &GridDist, dist1: &GridDist, mu: &Q) -> Q {
    let one_minus = Q::one() - mu;
    let (x, y) = (dist0.atoms(), dist1.atoms());
    let (mut i, mut j) = (0, 0);
    let mut total = Q::zero();
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let l = &one_minus * &x[i].1;
                let r = mu * &y[j].1;
                total += l.min(r);
                i += 1;
                j += 1;
            }
        }
    }
    total
}

/// `sum_v max{(1 - mu) d0(v), mu d1(v)}`.
pub fn bayes_success(rs: &ReducedStructure, mu: &Q) -> Q {
    Q::one() - overlap(rs.dist0(), rs.dist1(), mu)
}

/// Bayesian success minus the rule's success; never negative.
pub fn regret_at(rule: &AggregationRule, rs: &ReducedStructure, mu: &Q) -> Result<Q> {
    Ok(bayes_success(rs, mu) - dm_success(rule, rs, mu)?)
}

/// The rule that knows the structure: guess 1 iff `mu d1(v) >= (1 - mu) d0(v)`.
pub fn bayes_responder(rs: &ReducedStructure, mu: &Q) -> AggregationRule {
    let (d0, d1) = (rs.dist0().to_dense(), rs.dist1().to_dense());
    let one_minus = Q::one() - mu;
    let values = d0
        .iter()
        .zip(&d1)
        .map(|(x0, x1)| if mu * x1 >= &one_minus * x0 { Q::one() } else { Q::zero() })
        .collect();
    AggregationRule::new(values).expect("0/1 values")
}

/// Per-state vertex lists with the rule's expectation under each vertex.
pub(crate) struct VertexTable {
    pub v0: Vec<GridDist>,
    pub v1: Vec<GridDist>,
    pub e0: Vec<Q>,
    pub e1: Vec<Q>,
}

impl VertexTable {
    pub fn new(rule: &AggregationRule, scenario: &Scenario) -> Result<Self> {
        rule.check_agents(scenario.n())?;
        let v0 = enumerate_mean_vertices(scenario.n(), scenario.a())?;
        let v1 = enumerate_mean_vertices(scenario.n(), scenario.b())?;
        let f = rule.values();
        let e0 = v0.iter().map(|d| d.expect(f)).collect();
        let e1 = v1.iter().map(|d| d.expect(f)).collect();
        Ok(Self { v0, v1, e0, e1 })
    }
}

/// Maximum regret over the adversary's vertices and the first maximiser in
/// canonical order (state-0 vertex outermost).
pub fn worst_case_regret(
    rule: &AggregationRule,
    scenario: &Scenario,
) -> Result<(Q, ReducedStructure)> {
    let t = VertexTable::new(rule, scenario)?;
    let mu = scenario.mu();
    let mut best: Option<(Q, usize, usize)> = None;
    for (i, d0) in t.v0.iter().enumerate() {
        for (j, d1) in t.v1.iter().enumerate() {
            let value = Q::one()
                - overlap(d0, d1, mu)
                - success_from_expectations(&t.e0[i], &t.e1[j], mu);
            if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
                best = Some((value, i, j));
            }
        }
    }
    let (value, i, j) = best.expect("vertex lists are never empty");
    Ok((value, ReducedStructure::new(t.v0[i].clone(), t.v1[j].clone())?))
}

/// Worst-case success probability of the rule. The adversary picks each
/// state's distribution independently, so the two vertex lists are scanned
/// separately.
pub fn minimax_value(rule: &AggregationRule, scenario: &Scenario) -> Result<Q> {
    let t = VertexTable::new(rule, scenario)?;
    let worst0 = t.e0.iter().max().expect("non-empty");
    let worst1 = t.e1.iter().min().expect("non-empty");
    Ok(success_from_expectations(worst0, worst1, scenario.mu()))
}

/// `1 - (1 - mu)(1 - cav[f](a)) - mu vex[f](b)`.
pub fn regret_bound_cavvex(rule: &AggregationRule, scenario: &Scenario) -> Result<Q> {
    rule.check_agents(scenario.n())?;
    let cav = concavify(rule).eval(scenario.a())?;
    let vex = convexify(rule).eval(scenario.b())?;
    let one = Q::one();
    let mu = scenario.mu();
    Ok(&one - (&one - mu) * (&one - cav) - mu * vex)
}

/// When the hull supports at `a` (concave) and `b` (convex) are disjoint,
/// the structure built on them attains the hull bound; returns it.
pub fn cavvex_witness(
    rule: &AggregationRule,
    scenario: &Scenario,
) -> Result<Option<ReducedStructure>> {
    rule.check_agents(scenario.n())?;
    let n = scenario.n();
    let (l0, r0) = support_indices(&concavify(rule), scenario.a(), n)?;
    let (l1, r1) = support_indices(&convexify(rule), scenario.b(), n)?;
    let overlaps = [l0, r0].iter().any(|k| *k == l1 || *k == r1);
    if overlaps {
        return Ok(None);
    }
    let dist = |l: usize, r: usize, mean: &Q| -> GridDist {
        if l == r {
            return GridDist::point(n, l);
        }
        let w = (mean * q(n as i64, 1) - q(l as i64, 1)) / q((r - l) as i64, 1);
        GridDist::two_point(n, l, r, w)
    };
    let rs = ReducedStructure::new(dist(l0, r0, scenario.a()), dist(l1, r1, scenario.b()))?;
    Ok(Some(rs))
}

/// Default bisection tolerance for [`approx_ratio`].
pub fn default_tolerance() -> Q {
    q(1, 1_000_000_000)
}

/// `(P*, P)` at every adversary vertex.
fn vertex_success_pairs(rule: &AggregationRule, scenario: &Scenario) -> Result<Vec<(Q, Q)>> {
    let t = VertexTable::new(rule, scenario)?;
    let mu = scenario.mu();
    let mut out = Vec::with_capacity(t.v0.len() * t.v1.len());
    for (i, d0) in t.v0.iter().enumerate() {
        for (j, d1) in t.v1.iter().enumerate() {
            let bayes = Q::one() - overlap(d0, d1, mu);
            out.push((bayes, success_from_expectations(&t.e0[i], &t.e1[j], mu)));
        }
    }
    Ok(out)
}

/// Worst-case ratio of the rule's success to the Bayesian success, located
/// by bisection on `lambda` with the exact test "some structure has
/// `lambda P* - P > 0`". The returned value is a lower end of the final
/// bracket, so it lies within `tol` below the true ratio.
pub fn approx_ratio(rule: &AggregationRule, scenario: &Scenario, tol: &Q) -> Result<Q> {
    if !tol.is_positive() {
        return Err(Error::InvalidRule(format!("tolerance must be positive, got {tol}")));
    }
    let pairs = vertex_success_pairs(rule, scenario)?;
    let separated = |lambda: &Q| pairs.iter().any(|(bayes, dm)| lambda * bayes > *dm);
    let (mut lo, mut hi) = (Q::zero(), Q::one());
    if !separated(&hi) {
        return Ok(hi);
    }
    while &hi - &lo > *tol {
        let mid = (&lo + &hi) / q(2, 1);
        if separated(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// `sum_w mu_w E_w[f] u_w`.
pub fn multistate_dm_utility(
    rule: &AggregationRule,
    dists: &[GridDist],
    ms: &MultiScenario,
) -> Result<Q> {
    check_multistate(rule, dists, ms)?;
    let mut total = Q::zero();
    for (w, d) in dists.iter().enumerate() {
        total += &ms.mu()[w] * d.expect(rule.values()) * &ms.u()[w];
    }
    Ok(total)
}

/// `sum_v max{0, sum_w mu_w d_w(v) u_w}`.
pub fn multistate_bayes_utility(dists: &[GridDist], ms: &MultiScenario) -> Result<Q> {
    if dists.len() != ms.state_count() {
        return Err(Error::SizeMismatch { expected: ms.state_count(), got: dists.len() });
    }
    let n = ms.n();
    let mut per_point = vec![Q::zero(); n + 1];
    for (w, d) in dists.iter().enumerate() {
        if d.n() != n {
            return Err(Error::SizeMismatch { expected: n + 1, got: d.n() + 1 });
        }
        for (k, weight) in d.atoms() {
            per_point[*k] += &ms.mu()[w] * weight * &ms.u()[w];
        }
    }
    Ok(per_point.into_iter().filter(|v| v.is_positive()).sum())
}

fn check_multistate(rule: &AggregationRule, dists: &[GridDist], ms: &MultiScenario) -> Result<()> {
    rule.check_agents(ms.n())?;
    if dists.len() != ms.state_count() {
        return Err(Error::SizeMismatch { expected: ms.state_count(), got: dists.len() });
    }
    if let Some(d) = dists.iter().find(|d| d.n() != ms.n()) {
        return Err(Error::SizeMismatch { expected: ms.n() + 1, got: d.n() + 1 });
    }
    Ok(())
}

pub fn multistate_regret_at(
    rule: &AggregationRule,
    dists: &[GridDist],
    ms: &MultiScenario,
) -> Result<Q> {
    Ok(multistate_bayes_utility(dists, ms)? - multistate_dm_utility(rule, dists, ms)?)
}

/// Maximum multi-state regret over the product of per-state vertices.
pub fn multistate_worst_case_regret(
    rule: &AggregationRule,
    ms: &MultiScenario,
) -> Result<(Q, Vec<GridDist>)> {
    rule.check_agents(ms.n())?;
    let mut best: Option<(Q, Vec<GridDist>)> = None;
    for tuple in multistate_vertices(ms) {
        let value = multistate_regret_at(rule, &tuple, ms)?;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, tuple));
        }
    }
    Ok(best.expect("vertex product is never empty"))
}

/// `sum_H mu u - sum_L mu cav[f](a) u - sum_H mu vex[f](a) u`.
pub fn multistate_regret_bound(rule: &AggregationRule, ms: &MultiScenario) -> Result<Q> {
    rule.check_agents(ms.n())?;
    let cav = concavify(rule);
    let vex = convexify(rule);
    let mut total = Q::zero();
    for w in 0..ms.state_count() {
        let weight = &ms.mu()[w] * &ms.u()[w];
        if ms.u()[w].is_negative() {
            total -= &weight * cav.eval(&ms.a_high()[w])?;
        } else {
            total += &weight * (Q::one() - vex.eval(&ms.a_high()[w])?);
        }
    }
    Ok(total)
}
