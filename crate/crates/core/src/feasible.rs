//! The adversary's strategy space.
//!
//! Reduced structures are pairs of distributions over the report-fraction
//! grid `{0, 1/n, ..., 1}`, one per state. They are feasible exactly when
//! their means are `a` and `b`, so the reduced polytope is a product of two
//! mean-constrained simplices whose vertices have at most two support points.
//! Full structures live in the polytope `C` of joint masses over
//! `(state, set of agents reporting high)`.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Relation, Sense};
use crate::model::{MultiScenario, Scenario};
use crate::rational::{exact, in_unit_interval, int, sum, Q};

/// Hard cap on the agent count of full structures (subsets are `u64` masks).
pub const FULL_STRUCTURE_CAP: usize = 20;
/// Cap for computations that build an LP over the whole polytope `C`.
pub const FULL_LP_CAP: usize = 10;

/// A distribution over the grid `{0, 1/n, ..., 1}` stored as sorted
/// `(grid index, weight)` pairs with positive weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridDist {
    n: usize,
    atoms: Vec<(usize, Q)>,
}

impl GridDist {
    /// Builds from dense weights `w[k]` at `k/n`.
    pub fn from_dense(weights: &[Q]) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidDistribution("grid needs at least two points".into()));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::InvalidDistribution("negative weight".into()));
        }
        if sum(weights) != Q::one() {
            return Err(Error::InvalidDistribution("weights do not sum to 1".into()));
        }
        let atoms = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(k, w)| (k, w.clone()))
            .collect();
        Ok(Self { n: weights.len() - 1, atoms })
    }

    pub fn point(n: usize, k: usize) -> Self {
        Self { n, atoms: vec![(k, Q::one())] }
    }

    /// Mixture putting `w` on `j` and `1 - w` on `i`, dropping zero weights.
    pub fn two_point(n: usize, i: usize, j: usize, w: Q) -> Self {
        let mut atoms = Vec::with_capacity(2);
        let rest = Q::one() - &w;
        if !rest.is_zero() {
            atoms.push((i, rest));
        }
        if !w.is_zero() {
            atoms.push((j, w));
        }
        atoms.sort_by_key(|(k, _)| *k);
        Self { n, atoms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[(usize, Q)] {
        &self.atoms
    }

    pub fn weight(&self, k: usize) -> Q {
        match self.atoms.binary_search_by_key(&k, |(i, _)| *i) {
            Ok(p) => self.atoms[p].1.clone(),
            Err(_) => Q::zero(),
        }
    }

    pub fn mean(&self) -> Q {
        let n = int(self.n as i64);
        self.atoms.iter().fold(Q::zero(), |acc, (k, w)| acc + int(*k as i64) * w) / n
    }

    pub fn to_dense(&self) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.n + 1];
        for (k, w) in &self.atoms {
            out[*k] = w.clone();
        }
        out
    }

    /// Expected value of a grid function.
    pub fn expect(&self, values: &[Q]) -> Q {
        self.atoms.iter().fold(Q::zero(), |acc, (k, w)| acc + w * &values[*k])
    }
}

impl Serialize for GridDist {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let dense: Vec<String> = self.to_dense().iter().map(exact).collect();
        dense.serialize(s)
    }
}

/// State-conditional report-fraction distributions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ReducedStructure {
    n: usize,
    dist0: GridDist,
    dist1: GridDist,
}

impl ReducedStructure {
    pub fn new(dist0: GridDist, dist1: GridDist) -> Result<Self> {
        if dist0.n != dist1.n {
            return Err(Error::SizeMismatch { expected: dist0.n + 1, got: dist1.n + 1 });
        }
        Ok(Self { n: dist0.n, dist0, dist1 })
    }

    pub fn from_dense(dist0: &[Q], dist1: &[Q]) -> Result<Self> {
        Self::new(GridDist::from_dense(dist0)?, GridDist::from_dense(dist1)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dist0(&self) -> &GridDist {
        &self.dist0
    }
    pub fn dist1(&self) -> &GridDist {
        &self.dist1
    }
}

/// Whether the conditional means equal `(a, b)`.
pub fn check_feasible(rs: &ReducedStructure, scenario: &Scenario) -> Result<bool> {
    if rs.n != scenario.n() {
        return Err(Error::SizeMismatch { expected: scenario.n() + 1, got: rs.n + 1 });
    }
    Ok(rs.dist0.mean() == *scenario.a() && rs.dist1.mean() == *scenario.b())
}

/// Extreme points of `{rho in simplex(grid) : E[rho] = mean}`, ordered by
/// support `(i, j)` with point masses at `(k, k)`.
pub fn enumerate_mean_vertices(n: usize, mean: &Q) -> Result<Vec<GridDist>> {
    if n == 0 {
        return Err(Error::InvalidAgentCount);
    }
    if !in_unit_interval(mean) {
        return Err(Error::MeanOutOfRange(exact(mean)));
    }
    let nq = int(n as i64);
    let scaled = mean * &nq;
    let floor = scaled.floor().to_integer();
    let m: usize = floor.try_into().unwrap_or(n).min(n);
    let on_grid = scaled.is_integer();
    let mut out = Vec::new();
    // Left endpoints at or below the mean, right endpoints strictly above;
    // a mean on the grid contributes its point mass instead of pairs (m, j).
    for i in 0..=m {
        if on_grid && i == m {
            out.push(GridDist::point(n, m));
            continue;
        }
        for j in (m + 1)..=n {
            let w = (&scaled - int(i as i64)) / int((j - i) as i64);
            out.push(GridDist::two_point(n, i, j, w));
        }
    }
    Ok(out)
}

/// Number of vertices without enumerating them.
pub fn mean_vertex_count(n: usize, mean: &Q) -> usize {
    let scaled = mean * int(n as i64);
    let m: usize = scaled.floor().to_integer().try_into().unwrap_or(0);
    if scaled.is_integer() {
        1 + m * (n - m)
    } else {
        (m + 1) * (n - m)
    }
}

/// All pairs of per-state vertices, state 0 in the outer loop.
pub fn enumerate_adversary_vertices(scenario: &Scenario) -> Vec<ReducedStructure> {
    let n = scenario.n();
    let v0 = enumerate_mean_vertices(n, scenario.a()).expect("a lies in [0, 1]");
    let v1 = enumerate_mean_vertices(n, scenario.b()).expect("b lies in [0, 1]");
    let mut out = Vec::with_capacity(v0.len() * v1.len());
    for d0 in &v0 {
        for d1 in &v1 {
            out.push(ReducedStructure { n, dist0: d0.clone(), dist1: d1.clone() });
        }
    }
    out
}

/// Every agent receives the same signal.
pub fn fully_correlated(scenario: &Scenario) -> ReducedStructure {
    let n = scenario.n();
    ReducedStructure {
        n,
        dist0: GridDist::two_point(n, 0, n, scenario.a().clone()),
        dist1: GridDist::two_point(n, 0, n, scenario.b().clone()),
    }
}

/// Adversary against the threshold rule `1[v >= tau]`: state 0 mixes `0` with
/// the smallest grid point at or above `tau`, state 1 mixes the largest grid
/// point below `tau` with `1`.
pub fn supermajority_adversary(scenario: &Scenario, tau: &Q) -> Result<ReducedStructure> {
    if !(tau.is_positive() && *tau < Q::one()) {
        return Err(Error::InfeasibleConstruction(format!("threshold {tau} not in (0, 1)")));
    }
    let n = scenario.n();
    let nq = int(n as i64);
    let scaled = tau * &nq;
    let upper: usize = scaled.ceil().to_integer().try_into().unwrap_or(n);
    let lower = upper - 1;
    let nu0 = int(upper as i64) / &nq;
    let nu1 = int(lower as i64) / &nq;
    let (a, b) = (scenario.a(), scenario.b());
    if *a > nu0 {
        return Err(Error::InfeasibleConstruction(format!(
            "a = {a} exceeds the grid point {nu0} above the threshold"
        )));
    }
    if *b < nu1 {
        return Err(Error::InfeasibleConstruction(format!(
            "b = {b} is below the grid point {nu1} under the threshold"
        )));
    }
    let w0 = a / &nu0;
    let w1 = (b - &nu1) / (Q::one() - &nu1);
    Ok(ReducedStructure {
        n,
        dist0: GridDist::two_point(n, 0, upper, w0),
        dist1: GridDist::two_point(n, lower, n, w1),
    })
}

/// Cartesian product of the per-state vertex lists, first state outermost.
pub fn multistate_vertices(ms: &MultiScenario) -> Vec<Vec<GridDist>> {
    let per_state: Vec<Vec<GridDist>> = ms
        .a_high()
        .iter()
        .map(|a| enumerate_mean_vertices(ms.n(), a).expect("a_w lies in [0, 1]"))
        .collect();
    let mut out: Vec<Vec<GridDist>> = vec![Vec::new()];
    for list in &per_state {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for v in list {
                let mut t = prefix.clone();
                t.push(v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Joint masses over `(state, reporting set)` keyed by subset bitmask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullStructure {
    n: usize,
    mass0: BTreeMap<u64, Q>,
    mass1: BTreeMap<u64, Q>,
}

fn check_full_cap(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidAgentCount);
    }
    if n > FULL_STRUCTURE_CAP {
        return Err(Error::SizeCap { n, cap: FULL_STRUCTURE_CAP });
    }
    Ok(())
}

impl FullStructure {
    /// Zero entries are dropped; masks must be below `2^n` and masses
    /// non-negative.
    pub fn new(n: usize, mass0: BTreeMap<u64, Q>, mass1: BTreeMap<u64, Q>) -> Result<Self> {
        check_full_cap(n)?;
        let limit = 1u64 << n;
        for map in [&mass0, &mass1] {
            for (d, m) in map {
                if *d >= limit {
                    return Err(Error::InvalidDistribution(format!("subset mask {d} >= 2^{n}")));
                }
                if m.is_negative() {
                    return Err(Error::InvalidDistribution(format!("negative mass on {d}")));
                }
            }
        }
        let clean = |m: BTreeMap<u64, Q>| m.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(Self { n, mass0: clean(mass0), mass1: clean(mass1) })
    }

    /// From the flat vector indexed `state * 2^n + mask`.
    pub fn from_vector(n: usize, x: &[Q]) -> Result<Self> {
        check_full_cap(n)?;
        let size = 1usize << n;
        if x.len() != 2 * size {
            return Err(Error::SizeMismatch { expected: 2 * size, got: x.len() });
        }
        let pick = |w: usize| -> BTreeMap<u64, Q> {
            (0..size)
                .filter(|&d| !x[w * size + d].is_zero())
                .map(|d| (d as u64, x[w * size + d].clone()))
                .collect()
        };
        Self::new(n, pick(0), pick(1))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mass(&self, state: u8) -> &BTreeMap<u64, Q> {
        if state == 0 {
            &self.mass0
        } else {
            &self.mass1
        }
    }

    pub fn get(&self, state: u8, mask: u64) -> Q {
        self.mass(state).get(&mask).cloned().unwrap_or_else(Q::zero)
    }

    /// Per-count totals `sum_{|D| = k} x^state_D`.
    pub fn count_totals(&self, state: u8) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.n + 1];
        for (d, m) in self.mass(state) {
            out[d.count_ones() as usize] += m;
        }
        out
    }

    pub fn to_vector(&self) -> Vec<Q> {
        let size = 1usize << self.n;
        let mut x = vec![Q::zero(); 2 * size];
        for (w, map) in [&self.mass0, &self.mass1].into_iter().enumerate() {
            for (d, m) in map {
                x[w * size + *d as usize] = m.clone();
            }
        }
        x
    }
}

impl Serialize for FullStructure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Masses<'a>(&'a BTreeMap<u64, Q>);
        impl Serialize for Masses<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (d, v) in self.0 {
                    m.serialize_entry(&d.to_string(), &exact(v))?;
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("n", &self.n)?;
        m.serialize_entry("mass0", &Masses(&self.mass0))?;
        m.serialize_entry("mass1", &Masses(&self.mass1))?;
        m.end()
    }
}

/// Membership in `C`: non-negativity, state totals `1 - mu` and `mu`, and
/// per-agent marginals `(1 - mu) a` and `mu b`.
pub fn membership_c(fs: &FullStructure, scenario: &Scenario) -> Result<bool> {
    if fs.n != scenario.n() {
        return Err(Error::SizeMismatch { expected: scenario.n(), got: fs.n });
    }
    let one = Q::one();
    let mu = scenario.mu();
    let totals = [&one - mu, mu.clone()];
    let marginals = [&totals[0] * scenario.a(), &totals[1] * scenario.b()];
    for (w, map) in [&fs.mass0, &fs.mass1].into_iter().enumerate() {
        if map.values().any(|m| m.is_negative()) {
            return Ok(false);
        }
        if sum(map.values()) != totals[w] {
            return Ok(false);
        }
        for i in 0..fs.n {
            let bit = 1u64 << i;
            let agent = sum(map.iter().filter(|(d, _)| *d & bit != 0).map(|(_, m)| m));
            if agent != marginals[w] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Conditional report-fraction distributions induced by a full structure.
pub fn reduce(fs: &FullStructure) -> Result<ReducedStructure> {
    let mut dists = Vec::with_capacity(2);
    for state in 0..2u8 {
        let counts = fs.count_totals(state);
        let total = sum(&counts);
        if total.is_zero() {
            return Err(Error::EmptyState(state));
        }
        let dense: Vec<Q> = counts.iter().map(|c| c / &total).collect();
        dists.push(GridDist::from_dense(&dense)?);
    }
    let dist1 = dists.pop().expect("two states");
    let dist0 = dists.pop().expect("two states");
    ReducedStructure::new(dist0, dist1)
}

/// The polytope `C` as an LP over `x[state * 2^n + mask]` with a zero
/// objective.
pub fn c_program(scenario: &Scenario) -> Result<LinearProgram> {
    let n = scenario.n();
    if n > FULL_LP_CAP {
        return Err(Error::SizeCap { n, cap: FULL_LP_CAP });
    }
    let size = 1usize << n;
    let one = Q::one();
    let mu = scenario.mu();
    let totals = [&one - mu, mu.clone()];
    let marginals = [&totals[0] * scenario.a(), &totals[1] * scenario.b()];
    let mut program = LinearProgram::new(Sense::Minimize, vec![Q::zero(); 2 * size]);
    for w in 0..2 {
        let all = (0..size).map(|d| (w * size + d, one.clone())).collect();
        program.add_constraint(all, Relation::Eq, totals[w].clone());
        for i in 0..n {
            let with_i = (0..size)
                .filter(|d| d & (1 << i) != 0)
                .map(|d| (w * size + d, one.clone()))
                .collect();
            program.add_constraint(with_i, Relation::Eq, marginals[w].clone());
        }
    }
    Ok(program)
}

/// Finds some point of `C` reducing to `rs`, by LP feasibility.
pub fn lift(rs: &ReducedStructure, scenario: &Scenario) -> Result<FullStructure> {
    if !check_feasible(rs, scenario)? {
        return Err(Error::LiftFailure);
    }
    let n = scenario.n();
    let size = 1usize << n;
    let mut program = c_program(scenario)?;
    let one = Q::one();
    let totals = [&one - scenario.mu(), scenario.mu().clone()];
    for (w, dist) in [&rs.dist0, &rs.dist1].into_iter().enumerate() {
        for k in 0..=n {
            let with_count = (0..size)
                .filter(|d| d.count_ones() as usize == k)
                .map(|d| (w * size + d, one.clone()))
                .collect();
            program.add_constraint(with_count, Relation::Eq, &totals[w] * dist.weight(k));
        }
    }
    let sol = lp::solve(&program)?;
    if !sol.is_optimal() {
        return Err(Error::LiftFailure);
    }
    FullStructure::from_vector(n, &sol.primal)
}

fn binomial(n: usize, k: usize) -> Q {
    let mut c = Q::one();
    for i in 0..k {
        c = c * int((n - i) as i64) / int((i + 1) as i64);
    }
    c
}

/// The exchangeable lift: mass of count `k` spread evenly over all
/// `k`-subsets.
pub fn symmetric_lift(rs: &ReducedStructure, scenario: &Scenario) -> Result<FullStructure> {
    if !check_feasible(rs, scenario)? {
        return Err(Error::LiftFailure);
    }
    let n = scenario.n();
    check_full_cap(n)?;
    let one = Q::one();
    let totals = [&one - scenario.mu(), scenario.mu().clone()];
    let mut maps = [BTreeMap::new(), BTreeMap::new()];
    for (w, dist) in [&rs.dist0, &rs.dist1].into_iter().enumerate() {
        for (k, weight) in dist.atoms() {
            let each = &totals[w] * weight / binomial(n, *k);
            for d in 0..(1u64 << n) {
                if d.count_ones() as usize == *k {
                    maps[w].insert(d, each.clone());
                }
            }
        }
    }
    let [m0, m1] = maps;
    FullStructure::new(n, m0, m1)
}

/// Full fully-correlated structure: mass only on the empty and the full set.
pub fn fully_correlated_full(scenario: &Scenario) -> Result<FullStructure> {
    let n = scenario.n();
    check_full_cap(n)?;
    let full = (1u64 << n) - 1;
    let one = Q::one();
    let mu = scenario.mu();
    let mut m0 = BTreeMap::new();
    m0.insert(0, (&one - mu) * (&one - scenario.a()));
    m0.insert(full, (&one - mu) * scenario.a());
    let mut m1 = BTreeMap::new();
    m1.insert(0, mu * (&one - scenario.b()));
    m1.insert(full, mu * scenario.b());
    FullStructure::new(n, m0, m1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn scenario_ab(mu: Q, a: Q, b: Q, n: usize) -> Scenario {
        Scenario::from_conditionals(mu, a, b, n).unwrap()
    }

    #[test]
    fn feasibility_examples() {
        let s = scenario_ab(q(1, 2), q(1, 4), q(3, 4), 4);
        let rs = ReducedStructure::from_dense(
            &[q(2, 3), int(0), int(0), q(1, 3), int(0)],
            &[int(0), int(0), q(1, 2), int(0), q(1, 2)],
        )
        .unwrap();
        assert!(check_feasible(&rs, &s).unwrap());

        let s2 = scenario_ab(q(1, 2), q(1, 4), q(3, 4), 2);
        let bad = ReducedStructure::from_dense(
            &[int(0), int(1), int(0)],
            &[int(0), q(1, 2), q(1, 2)],
        )
        .unwrap();
        assert!(!check_feasible(&bad, &s2).unwrap());
        assert!(matches!(check_feasible(&bad, &s), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn mean_vertex_examples() {
        let v = enumerate_mean_vertices(2, &q(1, 4)).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].to_dense(), vec![q(1, 2), q(1, 2), int(0)]);
        assert_eq!(v[1].to_dense(), vec![q(3, 4), int(0), q(1, 4)]);

        let v = enumerate_mean_vertices(2, &q(1, 2)).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.contains(&GridDist::point(2, 1)));
        assert!(v.contains(&GridDist::two_point(2, 0, 2, q(1, 2))));

        assert_eq!(enumerate_mean_vertices(1, &int(0)).unwrap(), vec![GridDist::point(1, 0)]);
        assert!(matches!(enumerate_mean_vertices(3, &q(3, 2)), Err(Error::MeanOutOfRange(_))));
    }

    #[test]
    fn vertex_counts() {
        for n in 1..8 {
            for k in 0..=(3 * n) {
                let mean = q(k as i64, 3 * n as i64);
                let v = enumerate_mean_vertices(n, &mean).unwrap();
                assert_eq!(v.len(), mean_vertex_count(n, &mean));
                assert!(v.iter().all(|d| d.mean() == mean && d.atoms().len() <= 2));
            }
        }
    }

    #[test]
    fn adversary_vertex_products() {
        let s = scenario_ab(q(1, 2), q(1, 4), q(1, 2), 2);
        assert_eq!(enumerate_adversary_vertices(&s).len(), 4);
        let s = scenario_ab(q(1, 2), q(1, 4), q(3, 4), 1);
        let v = enumerate_adversary_vertices(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0], fully_correlated(&s));
    }

    #[test]
    fn fully_correlated_examples() {
        let s = scenario_ab(q(1, 2), q(1, 4), q(3, 4), 5);
        let rs = fully_correlated(&s);
        assert_eq!(rs.dist0().atoms(), &[(0, q(3, 4)), (5, q(1, 4))]);
        assert_eq!(rs.dist1().atoms(), &[(0, q(1, 4)), (5, q(3, 4))]);
        assert!(check_feasible(&rs, &s).unwrap());
        let s = Scenario::new(q(1, 3), q(1, 4), int(1), 3).unwrap();
        assert_eq!(s.a(), &int(0));
        assert_eq!(fully_correlated(&s).dist0(), &GridDist::point(3, 0));
    }

    #[test]
    fn supermajority_examples() {
        let s = scenario_ab(q(1, 2), q(2, 5), q(3, 5), 10);
        let rs = supermajority_adversary(&s, &q(1, 2)).unwrap();
        assert_eq!(rs.dist0().atoms(), &[(0, q(1, 5)), (5, q(4, 5))]);
        assert_eq!(rs.dist1().atoms(), &[(4, q(2, 3)), (10, q(1, 3))]);
        assert!(check_feasible(&rs, &s).unwrap());

        let s = scenario_ab(q(1, 2), q(1, 4), q(3, 4), 4);
        let rs = supermajority_adversary(&s, &q(1, 2)).unwrap();
        assert_eq!(rs.dist0().atoms(), &[(0, q(1, 2)), (2, q(1, 2))]);
        assert_eq!(rs.dist1().atoms(), &[(1, q(1, 3)), (4, q(2, 3))]);

        let s = scenario_ab(q(1, 2), q(3, 5), q(4, 5), 10);
        assert!(matches!(
            supermajority_adversary(&s, &q(1, 2)),
            Err(Error::InfeasibleConstruction(_))
        ));
    }

    #[test]
    fn multistate_vertex_examples() {
        let s = scenario_ab(q(1, 2), q(1, 4), q(3, 4), 2);
        let ms = MultiScenario::from_binary(&s).unwrap();
        let tuples = multistate_vertices(&ms);
        let pairs: Vec<Vec<GridDist>> = enumerate_adversary_vertices(&s)
            .into_iter()
            .map(|rs| vec![rs.dist0, rs.dist1])
            .collect();
        assert_eq!(tuples, pairs);
    }

    #[test]
    fn membership_and_reduce() {
        let s = scenario_ab(q(1, 2), q(1, 4), q(3, 4), 2);
        let full = fully_correlated_full(&s).unwrap();
        assert!(membership_c(&full, &s).unwrap());
        assert_eq!(reduce(&full).unwrap(), fully_correlated(&s));

        // x^a from the two-agent analysis, ordered (state, {}, {1}, {2}, {1,2}).
        let (a, b) = (q(1, 4), q(3, 4));
        let x = vec![
            q(1, 2) - &a,
            &a / int(2),
            &a / int(2),
            int(0),
            q(1, 2) - &b / int(2),
            int(0),
            int(0),
            &b / int(2),
        ];
        let xa = FullStructure::from_vector(2, &x).unwrap();
        assert!(membership_c(&xa, &s).unwrap());
        let rs = reduce(&xa).unwrap();
        assert_eq!(rs.dist0().to_dense(), vec![q(1, 2), q(1, 2), int(0)]);
        assert_eq!(rs.dist1().to_dense(), vec![q(1, 4), int(0), q(3, 4)]);

        let mut off = x.clone();
        off[1] += q(1, 1000);
        off[0] -= q(1, 1000);
        let bad = FullStructure::from_vector(2, &off).unwrap();
        assert!(!membership_c(&bad, &s).unwrap());
    }

    #[test]
    fn lifts_reduce_back() {
        let s = scenario_ab(q(1, 3), q(1, 4), q(3, 5), 3);
        for rs in enumerate_adversary_vertices(&s) {
            let full = lift(&rs, &s).unwrap();
            assert!(membership_c(&full, &s).unwrap());
            assert_eq!(reduce(&full).unwrap(), rs);
            let sym = symmetric_lift(&rs, &s).unwrap();
            assert!(membership_c(&sym, &s).unwrap());
            assert_eq!(reduce(&sym).unwrap(), rs);
        }
    }

    #[test]
    fn empty_state_is_rejected() {
        let mut m0 = BTreeMap::new();
        m0.insert(0, int(1));
        let fs = FullStructure::new(2, m0, BTreeMap::new()).unwrap();
        assert_eq!(reduce(&fs), Err(Error::EmptyState(1)));
    }
}
