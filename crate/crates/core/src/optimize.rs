//! Regret-optimal rule synthesis.
//!
//! The regret game is solved by constraint generation: a restricted LP
//! `min t s.t. t >= Reg(f, v)` over a growing set of adversary strategies `v`,
//! alternated with an exact best-response oracle until the oracle's worst case
//! equals `t`. Every constraint is affine in the rule, so the same machinery
//! serves the binary game, the multi-state game and the full game over `C`.

use num::{BigInt, Integer, One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluate::worst_case_regret;
use crate::feasible::{
    enumerate_mean_vertices, fully_correlated, lift, GridDist, ReducedStructure, FULL_LP_CAP,
};
use crate::fullgame::count_bayes_success;
use crate::lp::{self, LinearProgram, LpSolution, Relation, Sense, Simplex};
use crate::model::{AggregationRule, MultiScenario, Scenario};
use crate::rational::{half, int, serde_exact, Q};

/// An affine regret function `constant - coeffs . f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub constant: Q,
    pub coeffs: Vec<Q>,
}

impl Cut {
    pub fn eval(&self, f: &[Q]) -> Q {
        self.coeffs.iter().zip(f).fold(self.constant.clone(), |acc, (c, x)| acc - c * x)
    }
}

/// A worst-case adversary strategy against a rule, with its regret as an
/// affine function of the rule.
#[derive(Debug, Clone)]
pub struct Response<S> {
    pub value: Q,
    pub cut: Cut,
    pub strategy: S,
}

pub trait RegretOracle {
    type Strategy: Clone;
    /// Number of rule coordinates.
    fn dim(&self) -> usize;
    /// An exact maximiser of the regret of `f`.
    fn best_response(&self, f: &[Q]) -> Result<Response<Self::Strategy>>;
    /// The cut of a strategy.
    fn cut(&self, strategy: &Self::Strategy) -> Cut;
    /// Every strategy whose regret at `f` equals `value`, the maximum, with
    /// its cut coefficients as sparse integers under a common positive scale.
    /// `None` when the oracle cannot list them.
    fn tight(&self, _f: &[Q], _value: &Q) -> Result<Option<Vec<(Self::Strategy, Vec<(usize, BigInt)>)>>> {
        Ok(None)
    }
}

/// Adversary strategies in product form: one grid distribution per state,
/// each chosen from that state's vertex list. State `w` contributes
/// `scale_w * d_w(k)` to the Bayesian payoff at grid point `k`.
#[derive(Debug, Clone)]
pub struct VertexOracle {
    n: usize,
    scales: Vec<Q>,
    vertices: Vec<Vec<GridDist>>,
    /// Per state and vertex: `(k, scale * weight * unit)` as integers.
    payoffs: Vec<Vec<Vec<(usize, BigInt)>>>,
    /// Common denominator of every `scale * weight`.
    unit: BigInt,
}

/// `max{0, g} - f g` for `f = f_num / f_den`, scaled by `f_den`: the regret
/// contribution of a grid point with net payoff `g`.
fn point_regret(g: &BigInt, f_num: &BigInt, f_den: &BigInt) -> BigInt {
    if g.is_positive() {
        g * (f_den - f_num)
    } else {
        -(g * f_num)
    }
}

impl VertexOracle {
    fn new(n: usize, scales: Vec<Q>, vertices: Vec<Vec<GridDist>>) -> Self {
        let unit = scales
            .iter()
            .zip(&vertices)
            .flat_map(|(s, vs)| vs.iter().flat_map(move |d| d.atoms().iter().map(move |(_, w)| s * w)))
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let payoffs = scales
            .iter()
            .zip(&vertices)
            .map(|(s, vs)| {
                vs.iter()
                    .map(|d| {
                        d.atoms()
                            .iter()
                            .map(|(k, w)| {
                                let v = s * w;
                                (*k, v.numer() * (&unit / v.denom()))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { n, scales, vertices, payoffs, unit }
    }

    /// Guessing game: state 0 pays `-(1 - mu)`, state 1 pays `mu` for
    /// guessing 1, so regret is the Bayesian minus the rule's success.
    pub fn binary(scenario: &Scenario) -> Result<Self> {
        let n = scenario.n();
        let mu = scenario.mu();
        let vertices =
            vec![enumerate_mean_vertices(n, scenario.a())?, enumerate_mean_vertices(n, scenario.b())?];
        Ok(Self::new(n, vec![-(Q::one() - mu), mu.clone()], vertices))
    }

    pub fn multistate(ms: &MultiScenario) -> Result<Self> {
        let n = ms.n();
        let scales = ms.mu().iter().zip(ms.u()).map(|(m, u)| m * u).collect();
        let vertices = ms
            .a_high()
            .iter()
            .map(|a| enumerate_mean_vertices(n, a))
            .collect::<Result<_>>()?;
        Ok(Self::new(n, scales, vertices))
    }

    pub fn vertices(&self, state: usize) -> &[GridDist] {
        &self.vertices[state]
    }

    /// The cut of a fixed strategy.
    pub fn cut_of(&self, choice: &[usize]) -> Cut {
        let mut g = vec![Q::zero(); self.n + 1];
        for (w, &i) in choice.iter().enumerate() {
            for (k, weight) in self.vertices[w][i].atoms() {
                g[*k] += &self.scales[w] * weight;
            }
        }
        let constant = g.iter().filter(|v| v.is_positive()).sum();
        Cut { constant, coeffs: g }
    }
}

/// Branch and bound in integers: payoffs are scaled by the oracle's unit and
/// the rule by the common denominator of its values.
struct Search<'a> {
    payoffs: &'a [Vec<Vec<(usize, BigInt)>>],
    f_num: Vec<BigInt>,
    f_den: BigInt,
    order: Vec<Vec<(BigInt, usize)>>,
    tail_bound: Vec<BigInt>,
    g: Vec<BigInt>,
    choice: Vec<usize>,
    best: Option<(BigInt, Vec<usize>)>,
    /// When set, collect every choice attaining this value instead.
    target: Option<BigInt>,
    attaining: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// Depth-first over states. Regret is subadditive across states, so the
    /// exact partial value plus each remaining state's best standalone value
    /// bounds every completion.
    fn descend(&mut self, w: usize, partial: &BigInt) {
        if w == self.order.len() {
            match &self.target {
                Some(t) if partial == t => self.attaining.push(self.choice.clone()),
                Some(_) => {}
                None if self.best.as_ref().is_none_or(|(v, _)| partial > v) => {
                    self.best = Some((partial.clone(), self.choice.clone()));
                }
                None => {}
            }
            return;
        }
        for idx in 0..self.order[w].len() {
            let (standalone, i) = self.order[w][idx].clone();
            let bound = partial + &standalone + &self.tail_bound[w + 1];
            let hopeless = match (&self.target, &self.best) {
                (Some(t), _) => bound < *t,
                (None, Some((best, _))) => bound <= *best,
                (None, None) => false,
            };
            if hopeless {
                break;
            }
            let mut value = partial.clone();
            let atoms = &self.payoffs[w][i];
            for (k, p) in atoms {
                value -= point_regret(&self.g[*k], &self.f_num[*k], &self.f_den);
                self.g[*k] += p;
                value += point_regret(&self.g[*k], &self.f_num[*k], &self.f_den);
            }
            self.choice[w] = i;
            self.descend(w + 1, &value);
            for (k, p) in atoms {
                self.g[*k] -= p;
            }
        }
    }
}

impl RegretOracle for VertexOracle {
    type Strategy = Vec<usize>;

    fn dim(&self) -> usize {
        self.n + 1
    }

    fn best_response(&self, f: &[Q]) -> Result<Response<Vec<usize>>> {
        let mut search = self.search(f)?;
        search.descend(0, &BigInt::zero());
        let (scaled, choice) = search.best.expect("every state has a vertex");
        let value = Q::new(scaled, &search.f_den * &self.unit);
        let cut = self.cut_of(&choice);
        debug_assert_eq!(cut.eval(f), value);
        Ok(Response { value, cut, strategy: choice })
    }

    fn cut(&self, strategy: &Vec<usize>) -> Cut {
        self.cut_of(strategy)
    }

    fn tight(&self, f: &[Q], value: &Q) -> Result<Option<Vec<(Vec<usize>, Vec<(usize, BigInt)>)>>> {
        let mut search = self.search(f)?;
        let scaled = value * Q::from_integer(&search.f_den * &self.unit);
        if !scaled.is_integer() {
            return Ok(Some(Vec::new()));
        }
        search.target = Some(scaled.to_integer());
        search.descend(0, &BigInt::zero());
        let tight = search
            .attaining
            .into_iter()
            .map(|choice| {
                let mut g: Vec<(usize, BigInt)> = Vec::new();
                for (w, &i) in choice.iter().enumerate() {
                    for (k, p) in &self.payoffs[w][i] {
                        match g.iter_mut().find(|(j, _)| j == k) {
                            Some((_, v)) => *v += p,
                            None => g.push((*k, p.clone())),
                        }
                    }
                }
                (choice, g)
            })
            .collect();
        Ok(Some(tight))
    }
}

impl VertexOracle {
    fn search(&self, f: &[Q]) -> Result<Search<'_>> {
        if f.len() != self.n + 1 {
            return Err(Error::SizeMismatch { expected: self.n + 1, got: f.len() });
        }
        let f_den = f.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let f_num: Vec<BigInt> = f.iter().map(|v| v.numer() * (&f_den / v.denom())).collect();
        let states = self.scales.len();
        let mut order = Vec::with_capacity(states);
        for w in 0..states {
            let mut scored: Vec<(BigInt, usize)> = self.payoffs[w]
                .iter()
                .enumerate()
                .map(|(i, atoms)| {
                    let v = atoms.iter().map(|(k, p)| point_regret(p, &f_num[*k], &f_den)).sum();
                    (v, i)
                })
                .collect();
            scored.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
            order.push(scored);
        }
        let mut tail_bound = vec![BigInt::zero(); states + 1];
        for w in (0..states).rev() {
            tail_bound[w] = &tail_bound[w + 1] + &order[w][0].0;
        }
        Ok(Search {
            payoffs: &self.payoffs,
            f_num,
            f_den,
            order,
            tail_bound,
            g: vec![BigInt::zero(); self.n + 1],
            choice: vec![0; states],
            best: None,
            target: None,
            attaining: Vec::new(),
        })
    }
}

/// Cuts collected so far with the strategies that produced them.
#[derive(Debug, Clone)]
pub struct Restricted<S> {
    dim: usize,
    cuts: Vec<Cut>,
    strategies: Vec<S>,
}

impl<S: Clone> Restricted<S> {
    pub fn new(dim: usize) -> Self {
        Self { dim, cuts: Vec::new(), strategies: Vec::new() }
    }

    /// False when the cut is already present.
    pub fn push(&mut self, cut: Cut, strategy: S) -> bool {
        if self.cuts.contains(&cut) {
            return false;
        }
        self.cuts.push(cut);
        self.strategies.push(strategy);
        true
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn strategies(&self) -> &[S] {
        &self.strategies
    }

    /// `min t` over `f in [0,1]^dim`, `t >= 0`, with every cut as a row
    /// `t + coeffs . f >= constant` and the given coordinates fixed.
    pub fn program(&self, fixed: &[(usize, Q)]) -> LinearProgram {
        let mut objective = vec![Q::zero(); self.dim + 1];
        objective[self.dim] = Q::one();
        let mut program = LinearProgram::new(Sense::Minimize, objective);
        for k in 0..self.dim {
            program.set_bounds(k, Some(Q::zero()), Some(Q::one()));
        }
        for (k, v) in fixed {
            program.set_bounds(*k, Some(v.clone()), Some(v.clone()));
        }
        for cut in &self.cuts {
            program.add_constraint(cut_row(self.dim, cut), Relation::Ge, cut.constant.clone());
        }
        program
    }
}

fn cut_row(dim: usize, cut: &Cut) -> Vec<(usize, Q)> {
    let mut row: Vec<(usize, Q)> = cut.coeffs.iter().cloned().enumerate().collect();
    row.push((dim, Q::one()));
    row
}

/// Result of the constraint-generation loop.
#[derive(Debug, Clone)]
pub struct GameSolution<S> {
    pub rule: Vec<Q>,
    pub value: Q,
    /// Adversary mixture read from the duals of the final restricted LP.
    pub mixture: Vec<(Q, S)>,
    pub iterations: usize,
    pub restricted: Restricted<S>,
    /// The restricted LP has a dual-nondegenerate optimum, so `rule` is the
    /// only optimal rule of the full game.
    pub unique: bool,
    engine: Simplex,
}

fn optimal_solution(engine: &Simplex) -> Result<LpSolution> {
    let sol = engine.solution();
    if !sol.is_optimal() {
        return Err(Error::Internal(format!("restricted program is {:?}", sol.status)));
    }
    if cfg!(debug_assertions) {
        lp::audit(engine.program(), &sol)?;
    }
    Ok(sol)
}

/// Alternates restricted LP solves with best responses until the oracle's
/// value equals the restricted value exactly. Each new cut is added to the
/// previous optimal basis and re-optimised with the dual simplex.
pub fn solve_game<O: RegretOracle>(
    oracle: &O,
    initial: Vec<(Cut, O::Strategy)>,
) -> Result<GameSolution<O::Strategy>> {
    let dim = oracle.dim();
    let mut restricted = Restricted::new(dim);
    for (cut, s) in initial {
        restricted.push(cut, s);
    }
    if restricted.is_empty() {
        let start = oracle.best_response(&vec![half(); dim])?;
        restricted.push(start.cut, start.strategy);
    }
    let mut engine = Simplex::new(&restricted.program(&[]))?;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let sol = optimal_solution(&engine)?;
        let f = sol.primal[..dim].to_vec();
        let t = sol.primal[dim].clone();
        let response = oracle.best_response(&f)?;
        if response.value <= t {
            let mixture = sol
                .duals
                .iter()
                .zip(&restricted.strategies)
                .filter(|(y, _)| !y.is_zero())
                .map(|(y, s)| (y.clone(), s.clone()))
                .collect();
            let unique = certify_unique(oracle, &f, &t, &mut engine, &mut restricted)?;
            return Ok(GameSolution { rule: f, value: t, mixture, iterations, restricted, unique, engine });
        }
        let row = cut_row(dim, &response.cut);
        let constant = response.cut.constant.clone();
        if !restricted.push(response.cut, response.strategy) {
            return Err(Error::Internal("best response repeated an existing cut".into()));
        }
        engine.add_constraint(row, Relation::Ge, constant)?;
    }
}

/// Whether `f` is the only rule attaining regret `t`. While the restricted
/// program leaves a direction open, the tight strategy whose regret grows
/// fastest along it is added as a cut. Near `f` only tight strategies bind,
/// so a direction no tight strategy blocks keeps the true regret at `t`.
/// False when the optimum is not unique or the oracle cannot list tight
/// strategies.
fn certify_unique<O: RegretOracle>(
    oracle: &O,
    f: &[Q],
    t: &Q,
    engine: &mut Simplex,
    restricted: &mut Restricted<O::Strategy>,
) -> Result<bool> {
    let dim = oracle.dim();
    let mut tight = None;
    loop {
        let Some(d) = engine.optimal_direction()? else {
            return Ok(true);
        };
        if tight.is_none() {
            match oracle.tight(f, t)? {
                Some(list) => tight = Some(list),
                None => return Ok(false),
            }
        }
        let list = tight.as_ref().expect("set above");
        // Along an optimal direction the regret variable stays put, so a cut
        // blocks `d` exactly when its coefficients have a negative product.
        debug_assert!(d[dim].is_zero());
        let den = d[..dim].iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let d_num: Vec<BigInt> = d[..dim].iter().map(|v| v.numer() * (&den / v.denom())).collect();
        let steepest = list
            .iter()
            .map(|(s, g)| (g.iter().map(|(k, c)| c * &d_num[*k]).sum::<BigInt>(), s))
            .min_by(|x, y| x.0.cmp(&y.0));
        let Some((_, strategy)) = steepest.filter(|(p, _)| p.is_negative()) else {
            return Ok(false);
        };
        let cut = oracle.cut(strategy);
        let row = cut_row(dim, &cut);
        let constant = cut.constant.clone();
        if !restricted.push(cut, strategy.clone()) {
            return Err(Error::Internal("blocking cut is already present".into()));
        }
        engine.add_constraint(row, Relation::Ge, constant)?;
        optimal_solution(engine)?;
    }
}

/// Search over the optimal rules of a solved game: the restricted program
/// with the regret pinned to the game value. The restricted program is a
/// relaxation, so every extreme point is checked against the oracle and any
/// violated cut is added before the point is accepted.
pub struct FaceSearch<'a, O: RegretOracle> {
    oracle: &'a O,
    engine: Simplex,
    restricted: Restricted<O::Strategy>,
    value: Q,
    rule: Vec<Q>,
}

impl<'a, O: RegretOracle> FaceSearch<'a, O> {
    pub fn new(oracle: &'a O, game: &GameSolution<O::Strategy>) -> Result<Self> {
        let dim = oracle.dim();
        let mut engine = game.engine.clone();
        engine.add_constraint(vec![(dim, Q::one())], Relation::Le, game.value.clone())?;
        Ok(Self {
            oracle,
            engine,
            restricted: game.restricted.clone(),
            value: game.value.clone(),
            rule: game.rule.clone(),
        })
    }

    fn add_cut(&mut self, response: Response<O::Strategy>) -> Result<bool> {
        let row = cut_row(self.oracle.dim(), &response.cut);
        let constant = response.cut.constant.clone();
        if !self.restricted.push(response.cut, response.strategy) {
            return Ok(false);
        }
        self.engine.add_constraint(row, Relation::Ge, constant)?;
        Ok(true)
    }

    /// Number of cuts in the search's restricted program.
    pub fn len(&self) -> usize {
        self.restricted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.restricted.is_empty()
    }


    /// Optimal rule extreme in coordinate `var`.
    pub fn extreme(&mut self, var: usize, sense: Sense) -> Result<Vec<Q>> {
        let dim = self.oracle.dim();
        let mut unit = vec![Q::zero(); dim + 1];
        unit[var] = Q::one();
        self.engine.set_objective(sense, unit)?;
        loop {
            let sol = optimal_solution(&self.engine)?;
            let f = sol.primal[..dim].to_vec();
            let response = self.oracle.best_response(&f)?;
            if response.value <= self.value {
                return Ok(f);
            }
            if !self.add_cut(response)? {
                return Err(Error::Internal("face probe repeated an existing cut".into()));
            }
        }
    }

    /// Restricts the search to rules with `f[var] = value`.
    pub fn fix(&mut self, var: usize, value: Q) -> Result<()> {
        self.engine.add_constraint(vec![(var, Q::one())], Relation::Ge, value.clone())?;
        self.engine.add_constraint(vec![(var, Q::one())], Relation::Le, value)?;
        Ok(())
    }

    /// Whether the restricted program, with the cuts found so far, has the
    /// game's rule as its only optimum.
    fn certified_unique(&mut self) -> Result<bool> {
        let dim = self.oracle.dim();
        let mut regret = vec![Q::zero(); dim + 1];
        regret[dim] = Q::one();
        self.engine.set_objective(Sense::Minimize, regret)?;
        self.engine.has_unique_optimum()
    }

    /// Minimum and maximum of every coordinate over the optimal rules.
    /// Stops probing once the cuts gathered by the probes pin the optimum.
    pub fn ranges(&mut self) -> Result<Vec<Interval>> {
        let dim = self.oracle.dim();
        let mut out = Vec::with_capacity(dim);
        for k in 0..dim {
            let before = self.len();
            let lo = self.extreme(k, Sense::Minimize)?[k].clone();
            let hi = self.extreme(k, Sense::Maximize)?[k].clone();
            out.push(Interval { lo, hi });
            if self.len() > before && out.iter().all(Interval::is_point) && self.certified_unique()? {
                out.extend(self.rule[k + 1..].iter().map(|v| Interval { lo: v.clone(), hi: v.clone() }));
                break;
            }
        }
        Ok(out)
    }

    /// Lexicographically smallest optimal rule. Fixes coordinates as it goes.
    pub fn lexicographic(&mut self) -> Result<Vec<Q>> {
        let mut last = Vec::new();
        for k in 0..self.oracle.dim() {
            last = self.extreme(k, Sense::Minimize)?;
            self.fix(k, last[k].clone())?;
        }
        Ok(last)
    }
}

/// The reported rule of a solved game (lexicographically smallest optimal
/// rule) and, when asked, the range of every coordinate over the optimal
/// rules. A certified unique optimum skips the face search.
pub fn settle_rule<O: RegretOracle>(
    oracle: &O,
    game: &GameSolution<O::Strategy>,
    with_ranges: bool,
) -> Result<(Vec<Q>, Option<Vec<Interval>>)> {
    let points = || game.rule.iter().map(|v| Interval { lo: v.clone(), hi: v.clone() }).collect();
    if game.unique {
        return Ok((game.rule.clone(), with_ranges.then(points)));
    }
    let mut face = FaceSearch::new(oracle, game)?;
    let ranges = if with_ranges { Some(face.ranges()?) } else { None };
    let values = match &ranges {
        Some(r) if r.iter().all(Interval::is_point) => r.iter().map(|i| i.lo.clone()).collect(),
        _ => face.lexicographic()?,
    };
    Ok((values, ranges))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval {
    #[serde(with = "serde_exact")]
    pub lo: Q,
    #[serde(with = "serde_exact")]
    pub hi: Q,
}

impl Interval {
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightedStructure {
    #[serde(with = "serde_exact")]
    pub weight: Q,
    pub structure: ReducedStructure,
}

/// Regret-optimal rule for a binary scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegretOptimum {
    pub rule: AggregationRule,
    #[serde(with = "serde_exact")]
    pub value: Q,
    pub mixture: Vec<WeightedStructure>,
    /// Per-coordinate range over all optimal rules, when requested.
    pub ranges: Option<Vec<Interval>>,
    pub iterations: usize,
}

impl RegretOptimum {
    pub fn is_unique(&self) -> Option<bool> {
        self.ranges.as_ref().map(|r| r.iter().all(Interval::is_point))
    }
}

fn binary_start(oracle: &VertexOracle, scenario: &Scenario) -> Vec<(Cut, Vec<usize>)> {
    let fc = fully_correlated(scenario);
    let pick = |state: usize, d: &GridDist| oracle.vertices(state).iter().position(|v| v == d);
    match (pick(0, fc.dist0()), pick(1, fc.dist1())) {
        (Some(i), Some(j)) => vec![(oracle.cut_of(&[i, j]), vec![i, j])],
        _ => Vec::new(),
    }
}

fn to_structure(oracle: &VertexOracle, choice: &[usize]) -> Result<ReducedStructure> {
    ReducedStructure::new(oracle.vertices(0)[choice[0]].clone(), oracle.vertices(1)[choice[1]].clone())
}

/// Solves the regret game for a binary scenario. The returned rule is the
/// lexicographically smallest optimal one; `with_ranges` adds the face
/// ranges of every coordinate.
pub fn optimal_regret_rule_with(scenario: &Scenario, with_ranges: bool) -> Result<RegretOptimum> {
    let oracle = VertexOracle::binary(scenario)?;
    let game = solve_game(&oracle, binary_start(&oracle, scenario))?;
    let (values, ranges) = settle_rule(&oracle, &game, with_ranges)?;
    let mixture = game
        .mixture
        .iter()
        .map(|(w, choice)| {
            Ok(WeightedStructure { weight: w.clone(), structure: to_structure(&oracle, choice)? })
        })
        .collect::<Result<_>>()?;
    Ok(RegretOptimum {
        rule: AggregationRule::new(values)?,
        value: game.value,
        mixture,
        ranges,
        iterations: game.iterations,
    })
}

/// The regret program with a row for every pair of adversary vertices, as
/// opposed to the rows generated on demand by [`solve_game`].
pub fn full_regret_program(scenario: &Scenario) -> Result<LinearProgram> {
    let oracle = VertexOracle::binary(scenario)?;
    let mut restricted = Restricted::new(scenario.n() + 1);
    for i in 0..oracle.vertices(0).len() {
        for j in 0..oracle.vertices(1).len() {
            restricted.push(oracle.cut_of(&[i, j]), ());
        }
    }
    Ok(restricted.program(&[]))
}

pub fn optimal_regret_rule(scenario: &Scenario) -> Result<RegretOptimum> {
    optimal_regret_rule_with(scenario, false)
}

/// Checks for the random-dictator regime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DictatorReport {
    pub in_region: bool,
    /// Agent count from which the regime always holds; absent when a
    /// posterior is 0 or 1.
    #[serde(with = "serde_exact::option")]
    pub threshold: Option<Q>,
    #[serde(with = "serde_exact")]
    pub lp_value: Q,
    #[serde(with = "serde_exact::option")]
    pub closed_form: Option<Q>,
    /// `Some` only when in the region.
    pub value_matches: Option<bool>,
    pub identity_optimal: Option<bool>,
    pub unique: Option<bool>,
    pub optimum: RegretOptimum,
    /// The two-agent closed form when `n = 2` and `mu = 1/2`.
    pub two_agent: Option<TwoAgentCase>,
}

impl DictatorReport {
    /// All asserted checks hold.
    pub fn passed(&self) -> bool {
        [self.value_matches, self.identity_optimal, self.unique].iter().all(|c| c.unwrap_or(true))
    }
}

pub fn verify_random_dictator(scenario: &Scenario) -> Result<DictatorReport> {
    let in_region = scenario.in_dictator_region();
    let optimum = optimal_regret_rule_with(scenario, in_region)?;
    let closed_form = in_region.then(|| scenario.dictator_regret());
    let value_matches = closed_form.as_ref().map(|c| *c == optimum.value);
    let identity_optimal = in_region.then(|| optimum.rule.is_identity());
    let unique = if in_region { optimum.is_unique() } else { None };
    let two_agent = if scenario.n() == 2 && *scenario.mu() == half() {
        Some(two_agent_closed_form(scenario.a(), scenario.b())?)
    } else {
        None
    };
    Ok(DictatorReport {
        in_region,
        threshold: scenario.dictator_threshold(),
        lp_value: optimum.value.clone(),
        closed_form,
        value_matches,
        identity_optimal,
        unique,
        optimum,
        two_agent,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseValue {
    pub case: u8,
    #[serde(with = "serde_exact")]
    pub f_half: Q,
    #[serde(with = "serde_exact")]
    pub regret: Q,
}

/// Two agents, uniform prior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwoAgentCase {
    pub case: u8,
    #[serde(with = "serde_exact")]
    pub f_half: Q,
    #[serde(with = "serde_exact")]
    pub regret: Q,
    /// Every case whose conditions hold, lowest first.
    pub applicable: Vec<CaseValue>,
}

impl TwoAgentCase {
    pub fn rule(&self) -> AggregationRule {
        AggregationRule::new(vec![Q::zero(), self.f_half.clone(), Q::one()])
            .expect("closed-form values lie in [0, 1]")
    }
}

/// Region of the two-agent partition containing `(a, b)`, lowest number on
/// shared boundaries; `None` outside `0 <= a < b <= 1`.
pub fn two_agent_region(a: &Q, b: &Q) -> Option<u8> {
    two_agent_cases(a, b).first().copied()
}

fn two_agent_cases(a: &Q, b: &Q) -> Vec<u8> {
    let (zero, one, h) = (Q::zero(), Q::one(), half());
    if !(zero <= *a && a < b && *b <= one) {
        return Vec::new();
    }
    let two = int(2);
    let two_a = &two * a;
    let mid = (a + &one) / &two;
    let mut out = Vec::new();
    if *b <= h {
        if two_a <= *b {
            out.push(1);
        }
        if two_a >= *b {
            out.push(2);
        }
    }
    if h <= *a {
        if &one + a >= &two * b {
            out.push(3);
        }
        if &one + a <= &two * b {
            out.push(4);
        }
    }
    if *a <= h && h <= *b {
        if *b >= two_a && *b >= mid {
            out.push(5);
        }
        if two_a >= *b && *b >= mid {
            out.push(6);
        }
        if mid >= *b && *b >= two_a {
            out.push(7);
        }
        if *b <= two_a && *b <= mid {
            out.push(8);
        }
    }
    out
}

fn case_formula(case: u8, a: &Q, b: &Q) -> (Q, Q) {
    let one = Q::one();
    let two = int(2);
    let (a2, b2, ab) = (a * a, b * b, a * b);
    match case {
        1 => {
            let d = &two * (a + b);
            ((a + &two * b) / &d, a * (a + &two * b) / &d)
        }
        2 => {
            let d = &two * (a + b);
            ((int(3) * b - a) / &d, (&a2 + int(4) * &ab - &b2) / &d)
        }
        // 3, 4 and 7 mirror 2, 1 and 6 under (a, b, f) -> (1 - b, 1 - a, 1 - f).
        3 => {
            let d = &two * (&two - a - b);
            (
                (&two + a - int(3) * b) / &d,
                (-&a2 + int(4) * &ab + &b2 - &two * a - int(6) * b + int(4)) / &d,
            )
        }
        4 => {
            let d = &two * (&two - a - b);
            ((&one - b) / &d, (&one - b) * (int(3) - &two * a - b) / &d)
        }
        _ => {
            let s = &one + a - b;
            if s.is_zero() {
                // a = 0, b = 1: signals are fully revealing and any middle value is optimal.
                return (half(), Q::zero());
            }
            let d = &two * &s;
            match case {
                5 => ((&one - b) / &s, a * (&one - b) / &s),
                6 => ((&two - &two * a - b) / &d, (&one - b) * (int(4) * a - b) / &d),
                7 => ((int(3) + a - int(4) * b) / &d, a * (int(3) + a - int(4) * b) / &d),
                _ => (
                    (int(3) - a - int(3) * b) / &d,
                    (&a2 - int(6) * &ab + &b2 + int(5) * a - b) / &d,
                ),
            }
        }
    }
}

/// Closed-form optimum for two agents under a uniform prior.
pub fn two_agent_closed_form(a: &Q, b: &Q) -> Result<TwoAgentCase> {
    let cases = two_agent_cases(a, b);
    let Some(&first) = cases.first() else {
        return Err(Error::NoRegion { a: a.to_string(), b: b.to_string() });
    };
    let applicable: Vec<CaseValue> = cases
        .iter()
        .map(|&c| {
            let (f_half, regret) = case_formula(c, a, b);
            CaseValue { case: c, f_half, regret }
        })
        .collect();
    if applicable.iter().any(|c| c.regret != applicable[0].regret) {
        return Err(Error::Internal(format!(
            "regions {cases:?} disagree on the regret at a={a}, b={b}"
        )));
    }
    let CaseValue { f_half, regret, .. } = applicable[0].clone();
    Ok(TwoAgentCase { case: first, f_half, regret, applicable })
}

/// Witness form of the concavification identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapReport {
    #[serde(with = "serde_exact")]
    pub lp_value: Q,
    /// `E_phi[P*(x)] - P*(E_phi[x])` over the lifted mixture.
    #[serde(with = "serde_exact")]
    pub witness: Q,
    pub matches: bool,
    pub support_size: usize,
}

/// Lifts the optimal adversary mixture into `C` and evaluates the gap
/// between the mixture's average Bayesian success and the Bayesian success
/// at its barycentre.
pub fn concavification_gap_check(scenario: &Scenario) -> Result<GapReport> {
    let n = scenario.n();
    if n > FULL_LP_CAP {
        return Err(Error::SizeCap { n, cap: FULL_LP_CAP });
    }
    let optimum = optimal_regret_rule(scenario)?;
    gap_of_mixture(scenario, &optimum.mixture, &optimum.value)
}

/// The same identity for a given mixture and claimed value.
pub fn gap_of_mixture(
    scenario: &Scenario,
    mixture: &[WeightedStructure],
    value: &Q,
) -> Result<GapReport> {
    let n = scenario.n();
    let mut average = Q::zero();
    let mut barycentre = vec![Q::zero(); 2usize << n];
    for entry in mixture {
        let full = lift(&entry.structure, scenario)?;
        average += &entry.weight * count_bayes_success(&full);
        for (i, x) in full.to_vector().into_iter().enumerate() {
            barycentre[i] += &entry.weight * x;
        }
    }
    let centre = crate::feasible::FullStructure::from_vector(n, &barycentre)?;
    let witness = average - count_bayes_success(&centre);
    Ok(GapReport {
        lp_value: value.clone(),
        matches: witness == *value,
        witness,
        support_size: mixture.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightedTuple {
    #[serde(with = "serde_exact")]
    pub weight: Q,
    pub structure: Vec<GridDist>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiOptimum {
    pub rule: AggregationRule,
    #[serde(with = "serde_exact")]
    pub value: Q,
    pub mixture: Vec<WeightedTuple>,
    pub in_region: bool,
    #[serde(with = "serde_exact::option")]
    pub closed_form: Option<Q>,
    pub ranges: Option<Vec<Interval>>,
    pub unique: Option<bool>,
}

/// Regret-optimal rule for a multi-state scenario; inside the region where
/// every `a_w` lies in `[1/n, (n-1)/n]` the report adds the closed form and
/// the uniqueness probe.
pub fn optimal_regret_rule_multistate(ms: &MultiScenario) -> Result<MultiOptimum> {
    let oracle = VertexOracle::multistate(ms)?;
    let game = solve_game(&oracle, Vec::new())?;
    let in_region = ms.in_dictator_region();
    let (values, ranges) = settle_rule(&oracle, &game, in_region)?;
    let mixture = game
        .mixture
        .iter()
        .map(|(w, choice)| WeightedTuple {
            weight: w.clone(),
            structure: choice
                .iter()
                .enumerate()
                .map(|(s, &i)| oracle.vertices(s)[i].clone())
                .collect(),
        })
        .collect();
    let unique = ranges.as_ref().map(|r| r.iter().all(Interval::is_point));
    Ok(MultiOptimum {
        rule: AggregationRule::new(values)?,
        value: game.value,
        mixture,
        in_region,
        closed_form: in_region.then(|| ms.dictator_regret()),
        ranges,
        unique,
    })
}

/// Worst-case regret of the two-agent closed-form rule, for cross-checks.
pub fn closed_form_rule_regret(a: &Q, b: &Q) -> Result<Q> {
    let case = two_agent_closed_form(a, b)?;
    let scenario = Scenario::from_conditionals(half(), a.clone(), b.clone(), 2)?;
    Ok(worst_case_regret(&case.rule(), &scenario)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{multistate_worst_case_regret, regret_at};
    use crate::rational::q;

    fn s(mu: Q, a: Q, b: Q, n: usize) -> Scenario {
        Scenario::from_conditionals(mu, a, b, n).unwrap()
    }

    #[test]
    fn dictator_region_optimum() {
        let sc = s(q(1, 2), q(1, 4), q(3, 4), 4);
        let opt = optimal_regret_rule_with(&sc, true).unwrap();
        assert_eq!(opt.value, q(1, 4));
        assert!(opt.rule.is_identity());
        assert_eq!(opt.is_unique(), Some(true));
    }

    #[test]
    fn full_program_agrees_with_constraint_generation() {
        for (mu, a, b, n) in [(q(1, 2), q(1, 5), q(7, 10), 2), (q(2, 5), q(1, 3), q(5, 6), 3), (q(1, 2), q(1, 4), q(3, 4), 4)] {
            let sc = Scenario::from_conditionals(mu, a, b, n).unwrap();
            let full = lp::solve(&full_regret_program(&sc).unwrap()).unwrap();
            assert_eq!(full.objective, optimal_regret_rule(&sc).unwrap().value);
        }
    }

    #[test]
    fn two_agent_case_five() {
        let sc = s(q(1, 2), q(1, 5), q(7, 10), 2);
        let opt = optimal_regret_rule_with(&sc, true).unwrap();
        assert_eq!(opt.value, q(3, 25));
        let case = two_agent_closed_form(&q(1, 5), &q(7, 10)).unwrap();
        assert_eq!((case.case, case.f_half.clone(), case.regret.clone()), (5, q(3, 5), q(3, 25)));
        assert_eq!(worst_case_regret(&case.rule(), &sc).unwrap().0, q(3, 25));
    }

    #[test]
    fn two_agent_examples() {
        let c = two_agent_closed_form(&q(1, 10), &q(3, 10)).unwrap();
        assert_eq!((c.case, c.f_half, c.regret), (1, q(7, 8), q(7, 80)));
        let c = two_agent_closed_form(&q(3, 5), &q(9, 10)).unwrap();
        assert_eq!((c.case, c.f_half, c.regret), (4, q(1, 10), q(9, 100)));
        let c = two_agent_closed_form(&q(1, 5), &q(11, 20)).unwrap();
        assert_eq!((c.case, c.f_half, c.regret), (7, q(10, 13), q(2, 13)));
        for (a, b) in [(q(3, 5), q(9, 10)), (q(3, 5), q(7, 10)), (q(1, 5), q(11, 20)), (q(8, 61), q(1, 2))] {
            let c = two_agent_closed_form(&a, &b).unwrap();
            assert_eq!(closed_form_rule_regret(&a, &b).unwrap(), c.regret);
        }
        assert!(matches!(two_agent_closed_form(&q(1, 2), &q(1, 2)), Err(Error::NoRegion { .. })));
    }

    #[test]
    fn single_agent_has_zero_regret() {
        let sc = s(q(1, 3), q(1, 4), q(2, 3), 1);
        let opt = optimal_regret_rule(&sc).unwrap();
        assert_eq!(opt.value, int(0));
        assert!(opt.rule.is_identity());
    }

    #[test]
    fn mixture_is_a_saddle() {
        let sc = s(q(2, 5), q(1, 6), q(5, 9), 3);
        let opt = optimal_regret_rule(&sc).unwrap();
        let total: Q = opt.mixture.iter().map(|m| m.weight.clone()).sum();
        assert_eq!(total, Q::one());
        for m in &opt.mixture {
            assert!(m.weight.is_positive());
            assert_eq!(regret_at(&opt.rule, &m.structure, sc.mu()).unwrap(), opt.value);
        }
        assert_eq!(worst_case_regret(&opt.rule, &sc).unwrap().0, opt.value);
    }

    #[test]
    fn gap_identity() {
        let sc = s(q(1, 2), q(1, 5), q(7, 10), 2);
        let g = concavification_gap_check(&sc).unwrap();
        assert!(g.matches);
        assert_eq!(g.witness, q(3, 25));
    }

    #[test]
    fn multistate_binary_equivalence() {
        let sc = s(q(1, 2), q(1, 4), q(3, 4), 4);
        let ms = MultiScenario::from_binary(&sc).unwrap();
        let opt = optimal_regret_rule_multistate(&ms).unwrap();
        assert_eq!(opt.value, q(1, 4));
        assert!(opt.rule.is_identity());
        assert_eq!(opt.unique, Some(true));
        assert_eq!(multistate_worst_case_regret(&opt.rule, &ms).unwrap().0, opt.value);
    }
}
