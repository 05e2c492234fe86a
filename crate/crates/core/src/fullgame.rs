//! The regret game over the full polytope `C`.
//!
//! The adversary picks joint masses `x^w_D` over (state, set of agents
//! reporting high). In count mode the decision maker and the Bayesian
//! benchmark see only `|D|`; in set mode both see `D` itself. The adversary's
//! best response maximises a piecewise-linear convex function over `C`; it is
//! found by fixing, for each observable class, which state the Bayesian
//! guesses, and solving one LP per such pattern.

use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasible::{
    c_program, fully_correlated_full, lift, supermajority_adversary, FullStructure, FULL_LP_CAP,
};
use crate::lp::{self, LinearProgram, Sense};
use crate::model::{AggregationRule, Scenario};
use crate::optimize::{optimal_regret_rule, solve_game, Cut, RegretOracle, Response};
use crate::rational::{half, in_unit_interval, int, serde_exact, Q};

/// Largest agent count for set mode (patterns over `2^n` subsets).
pub const SET_MODE_CAP: usize = 3;

/// `sum_i max{sum_{|D|=i} x^0_D, sum_{|D|=i} x^1_D}`.
pub fn count_bayes_success(fs: &FullStructure) -> Q {
    let c0 = fs.count_totals(0);
    let c1 = fs.count_totals(1);
    c0.into_iter().zip(c1).map(|(x, y)| x.max(y)).sum()
}

/// `sum_D max{x^0_D, x^1_D}`.
pub fn set_bayes_success(fs: &FullStructure) -> Q {
    let mut masks: Vec<u64> = fs.mass(0).keys().chain(fs.mass(1).keys()).copied().collect();
    masks.sort_unstable();
    masks.dedup();
    masks.into_iter().map(|d| fs.get(0, d).max(fs.get(1, d))).sum()
}

/// Success of a count rule on a full structure.
pub fn count_dm_success(rule: &AggregationRule, fs: &FullStructure) -> Result<Q> {
    rule.check_agents(fs.n())?;
    let f = |d: &u64| rule.at(d.count_ones() as usize).clone();
    Ok(dm_success_with(fs, f))
}

pub fn set_dm_success(rule: &SetRule, fs: &FullStructure) -> Result<Q> {
    if rule.n != fs.n() {
        return Err(Error::SizeMismatch { expected: fs.n(), got: rule.n });
    }
    Ok(dm_success_with(fs, |d| rule.values[*d as usize].clone()))
}

fn dm_success_with(fs: &FullStructure, f: impl Fn(&u64) -> Q) -> Q {
    let wrong: Q = fs.mass(0).iter().map(|(d, m)| m * f(d)).sum();
    let right: Q = fs.mass(1).iter().map(|(d, m)| m * f(d)).sum();
    fs.mass(0).values().sum::<Q>() - wrong + right
}

/// A rule that sees which agents reported high.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetRule {
    n: usize,
    #[serde(with = "serde_exact::vec")]
    values: Vec<Q>,
}

impl SetRule {
    /// `values[mask]` for every subset mask below `2^n`.
    pub fn new(n: usize, values: Vec<Q>) -> Result<Self> {
        if n == 0 || n > FULL_LP_CAP {
            return Err(Error::SizeCap { n, cap: FULL_LP_CAP });
        }
        if values.len() != 1 << n {
            return Err(Error::SizeMismatch { expected: 1 << n, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !in_unit_interval(v)) {
            return Err(Error::InvalidRule(format!("value {v} outside [0, 1]")));
        }
        Ok(Self { n, values })
    }

    /// `g(D) = f(|D| / n)`.
    pub fn from_count_rule(rule: &AggregationRule) -> Result<Self> {
        let n = rule.n();
        let values = (0..1u64 << n).map(|d| rule.at(d.count_ones() as usize).clone()).collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    /// Average over all subsets of equal size.
    pub fn symmetrized(&self) -> Self {
        let mut totals = vec![Q::zero(); self.n + 1];
        let mut counts = vec![0i64; self.n + 1];
        for (d, v) in self.values.iter().enumerate() {
            let k = d.count_ones() as usize;
            totals[k] += v;
            counts[k] += 1;
        }
        let means: Vec<Q> = totals.into_iter().zip(counts).map(|(t, c)| t / int(c)).collect();
        let values = (0..self.values.len()).map(|d| means[d.count_ones() as usize].clone()).collect();
        Self { n: self.n, values }
    }

    /// The count rule when the values depend only on `|D|`.
    pub fn as_count_rule(&self) -> Option<AggregationRule> {
        let mut per_count: Vec<Option<Q>> = vec![None; self.n + 1];
        for (d, v) in self.values.iter().enumerate() {
            let slot = &mut per_count[d.count_ones() as usize];
            match slot {
                Some(existing) if existing != v => return None,
                _ => *slot = Some(v.clone()),
            }
        }
        AggregationRule::new(per_count.into_iter().map(|v| v.expect("every size occurs")).collect())
            .ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Count,
    Set,
}

/// Best-response oracle over `C`.
pub struct FullOracle {
    n: usize,
    mode: Mode,
    base: LinearProgram,
}

impl FullOracle {
    pub fn new(scenario: &Scenario, mode: Mode) -> Result<Self> {
        let n = scenario.n();
        let cap = match mode {
            Mode::Count => FULL_LP_CAP,
            Mode::Set => SET_MODE_CAP,
        };
        if n > cap {
            return Err(Error::SizeCap { n, cap });
        }
        Ok(Self { n, mode, base: c_program(scenario)? })
    }

    fn class_of(&self, mask: usize) -> usize {
        match self.mode {
            Mode::Count => mask.count_ones() as usize,
            Mode::Set => mask,
        }
    }

    fn bayes(&self, fs: &FullStructure) -> Q {
        match self.mode {
            Mode::Count => count_bayes_success(fs),
            Mode::Set => set_bayes_success(fs),
        }
    }

    /// Regret as an affine function of the rule.
    pub fn cut_of(&self, fs: &FullStructure) -> Cut {
        let mut coeffs = vec![Q::zero(); self.dim()];
        for (d, m) in fs.mass(1) {
            coeffs[self.class_of(*d as usize)] += m;
        }
        let mut total0 = Q::zero();
        for (d, m) in fs.mass(0) {
            coeffs[self.class_of(*d as usize)] -= m;
            total0 += m;
        }
        Cut { constant: self.bayes(fs) - total0, coeffs }
    }

    fn solve_pattern(&self, pattern: u64, f: &[Q]) -> Result<Option<FullStructure>> {
        let size = 1usize << self.n;
        let one = Q::one();
        let mut objective = Vec::with_capacity(2 * size);
        for w in 0..2u64 {
            for d in 0..size {
                let c = self.class_of(d);
                let guessed = (pattern >> c) & 1;
                let bayes = if guessed == w { one.clone() } else { Q::zero() };
                let dm = if w == 1 { f[c].clone() } else { &one - &f[c] };
                objective.push(bayes - dm);
            }
        }
        let mut program = self.base.clone();
        program.set_objective(Sense::Maximize, objective);
        let sol = lp::solve(&program)?;
        if !sol.is_optimal() {
            return Ok(None);
        }
        if cfg!(debug_assertions) {
            lp::audit(&program, &sol)?;
        }
        Ok(Some(FullStructure::from_vector(self.n, &sol.primal)?))
    }
}

impl RegretOracle for FullOracle {
    type Strategy = FullStructure;

    fn dim(&self) -> usize {
        match self.mode {
            Mode::Count => self.n + 1,
            Mode::Set => 1 << self.n,
        }
    }

    fn cut(&self, strategy: &FullStructure) -> Cut {
        self.cut_of(strategy)
    }

    fn best_response(&self, f: &[Q]) -> Result<Response<FullStructure>> {
        if f.len() != self.dim() {
            return Err(Error::SizeMismatch { expected: self.dim(), got: f.len() });
        }
        let patterns = 1u64 << self.dim();
        // Each pattern's LP value is at most the true regret at its optimiser,
        // with equality for the pattern that matches the Bayesian's guesses
        // there, so the true regret is re-evaluated at every candidate.
        let candidates: Vec<(Q, FullStructure)> = (0..patterns)
            .into_par_iter()
            .map(|p| -> Result<Option<(Q, FullStructure)>> {
                Ok(self.solve_pattern(p, f)?.map(|fs| (self.cut_of(&fs).eval(f), fs)))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let mut best: Option<(Q, FullStructure)> = None;
        for (v, fs) in candidates {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, fs));
            }
        }
        let (value, strategy) = best.ok_or_else(|| Error::Internal("C is empty".into()))?;
        Ok(Response { value, cut: self.cut_of(&strategy), strategy })
    }
}

/// Worst full structure against a count rule.
pub fn adversary_best_response_count(
    rule: &AggregationRule,
    scenario: &Scenario,
) -> Result<(FullStructure, Q)> {
    rule.check_agents(scenario.n())?;
    let oracle = FullOracle::new(scenario, Mode::Count)?;
    let r = oracle.best_response(rule.values())?;
    Ok((r.strategy, r.value))
}

/// Worst full structure against a set rule.
pub fn adversary_best_response_set(rule: &SetRule, scenario: &Scenario) -> Result<(FullStructure, Q)> {
    if scenario.n() > SET_MODE_CAP {
        return Err(Error::SizeCap { n: scenario.n(), cap: SET_MODE_CAP });
    }
    if rule.n != scenario.n() {
        return Err(Error::SizeMismatch { expected: scenario.n(), got: rule.n });
    }
    let oracle = FullOracle::new(scenario, Mode::Set)?;
    let r = oracle.best_response(&rule.values)?;
    Ok((r.strategy, r.value))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightedFull {
    #[serde(with = "serde_exact")]
    pub weight: Q,
    pub structure: FullStructure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FullGameSolution {
    pub mode: Mode,
    /// Count-rule values (`n + 1`) or set-rule values (`2^n`, by mask).
    #[serde(with = "serde_exact::vec")]
    pub rule: Vec<Q>,
    #[serde(with = "serde_exact")]
    pub value: Q,
    pub mixture: Vec<WeightedFull>,
    pub iterations: usize,
}

/// Double oracle: the rule side is the whole box `[0,1]^dim` inside the
/// restricted LP, the adversary side grows by best responses until the
/// restricted value is certified.
pub fn double_oracle(scenario: &Scenario, mode: Mode) -> Result<FullGameSolution> {
    let oracle = FullOracle::new(scenario, mode)?;
    let mut initial = Vec::new();
    let fc = fully_correlated_full(scenario)?;
    initial.push((oracle.cut_of(&fc), fc));
    if let Ok(rs) = supermajority_adversary(scenario, &half()) {
        let full = lift(&rs, scenario)?;
        initial.push((oracle.cut_of(&full), full));
    }
    let game = solve_game(&oracle, initial)?;
    Ok(FullGameSolution {
        mode,
        rule: game.rule,
        value: game.value,
        mixture: game
            .mixture
            .into_iter()
            .map(|(weight, structure)| WeightedFull { weight, structure })
            .collect(),
        iterations: game.iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnonymityReport {
    #[serde(with = "serde_exact")]
    pub reduced_value: Q,
    #[serde(with = "serde_exact")]
    pub count_value: Q,
    #[serde(with = "serde_exact")]
    pub set_value: Q,
    pub values_equal: bool,
    pub symmetrized_rule: SetRule,
    #[serde(with = "serde_exact")]
    pub symmetrized_regret: Q,
    pub symmetrized_optimal: bool,
}

/// Compares the reduced game, the count-mode full game and the set-mode full
/// game, and checks that averaging the set-mode optimum over permutations
/// stays optimal.
pub fn anonymity_equivalence(scenario: &Scenario) -> Result<AnonymityReport> {
    if scenario.n() > SET_MODE_CAP {
        return Err(Error::SizeCap { n: scenario.n(), cap: SET_MODE_CAP });
    }
    let reduced = optimal_regret_rule(scenario)?;
    let count = double_oracle(scenario, Mode::Count)?;
    let set = double_oracle(scenario, Mode::Set)?;
    let symmetrized = SetRule::new(scenario.n(), set.rule.clone())?.symmetrized();
    let (_, symmetrized_regret) = adversary_best_response_set(&symmetrized, scenario)?;
    Ok(AnonymityReport {
        values_equal: reduced.value == count.value && count.value == set.value,
        symmetrized_optimal: symmetrized_regret == set.value,
        reduced_value: reduced.value,
        count_value: count.value,
        set_value: set.value,
        symmetrized_rule: symmetrized,
        symmetrized_regret,
    })
}
