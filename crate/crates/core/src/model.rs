//! Domain types: scenarios, aggregation rules, posterior marginals and the
//! multi-state generalisation.
//!
//! A [`Scenario`] fixes the prior `mu`, the low/high posteriors `p1 < 1/2 < p2`
//! and the number of agents. From these it derives the conditional
//! probabilities of a single agent reporting high:
//!
//! ```text
//! a = (1 - p2)(mu - p1) / ((1 - mu)(p2 - p1))     (state 0)
//! b = p2 (mu - p1) / (mu (p2 - p1))               (state 1)
//! ```

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{exact, half, in_unit_interval, int, serde_exact, sum, Q};

/// Prior, binary posteriors and agent count, with the derived `a` and `b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Scenario {
    #[serde(with = "serde_exact")]
    mu: Q,
    #[serde(with = "serde_exact")]
    p1: Q,
    #[serde(with = "serde_exact")]
    p2: Q,
    n: usize,
    #[serde(with = "serde_exact")]
    a: Q,
    #[serde(with = "serde_exact")]
    b: Q,
}

impl Scenario {
    /// Builds a scenario from the prior and the two posteriors.
    pub fn new(mu: Q, p1: Q, p2: Q, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAgentCount);
        }
        if p1 == p2 {
            return Err(Error::DegenerateScenario("p1 equals p2".into()));
        }
        if mu == p1 || mu == p2 {
            return Err(Error::DegenerateScenario(
                "prior equals a posterior, one signal has zero probability".into(),
            ));
        }
        if p1.is_negative() || p2 > Q::one() || !(p1 < half() && half() < p2) {
            return Err(Error::OrderingViolation { p1: exact(&p1), p2: exact(&p2) });
        }
        if !(p1 < mu && mu < p2) {
            return Err(Error::PriorOutOfRange { mu: exact(&mu) });
        }
        let one = Q::one();
        let spread = &p2 - &p1;
        let a = (&one - &p2) * (&mu - &p1) / ((&one - &mu) * &spread);
        let b = &p2 * (&mu - &p1) / (&mu * &spread);
        debug_assert!(a < b && in_unit_interval(&a) && in_unit_interval(&b));
        Ok(Self { mu, p1, p2, n, a, b })
    }

    /// Builds a scenario from the prior and the conditional high-report
    /// probabilities, inverting the posterior formulas.
    pub fn from_conditionals(mu: Q, a: Q, b: Q, n: usize) -> Result<Self> {
        if !(mu.is_positive() && mu < Q::one()) {
            return Err(Error::PriorOutOfRange { mu: exact(&mu) });
        }
        if !(in_unit_interval(&a) && in_unit_interval(&b)) || a >= b {
            return Err(Error::DegenerateScenario(format!(
                "need 0 <= a < b <= 1, got a={a}, b={b}"
            )));
        }
        let one = Q::one();
        let high = (&one - &mu) * &a + &mu * &b;
        if high.is_zero() || high == one {
            return Err(Error::DegenerateScenario("one signal has zero probability".into()));
        }
        let p2 = &mu * &b / &high;
        let p1 = &mu * (&one - &b) / (&one - &high);
        let s = Self::new(mu, p1, p2, n)?;
        debug_assert!(s.a == a && s.b == b);
        Ok(s)
    }

    pub fn mu(&self) -> &Q {
        &self.mu
    }
    pub fn p1(&self) -> &Q {
        &self.p1
    }
    pub fn p2(&self) -> &Q {
        &self.p2
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// Probability that a fixed agent reports high in state 0.
    pub fn a(&self) -> &Q {
        &self.a
    }
    /// Probability that a fixed agent reports high in state 1.
    pub fn b(&self) -> &Q {
        &self.b
    }

    /// Same prior and posteriors with a different number of agents.
    pub fn with_agents(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAgentCount);
        }
        Ok(Self { n, ..self.clone() })
    }

    /// Unconditional probability of the high signal, `mu*b + (1-mu)*a`.
    pub fn high_probability(&self) -> Q {
        &self.mu * &self.b + (Q::one() - &self.mu) * &self.a
    }

    /// Whether `1/n <= a < b <= (n-1)/n`, boundaries included.
    pub fn in_dictator_region(&self) -> bool {
        let n = int(self.n as i64);
        let lo = Q::one() / &n;
        let hi = (&n - Q::one()) / &n;
        lo <= self.a && self.a < self.b && self.b <= hi
    }

    /// Agent count beyond which the random dictator is uniquely optimal:
    /// `max{1/a, 1/(1-b)}` written in the posterior parameters. `None` when
    /// a signal is fully revealing (`a = 0` or `b = 1`) and no count suffices.
    pub fn dictator_threshold(&self) -> Option<Q> {
        if self.p1.is_zero() || self.p2.is_one() {
            return None;
        }
        let one = Q::one();
        let spread = &self.p2 - &self.p1;
        let from_a = (&one - &self.mu) * &spread / ((&one - &self.p2) * (&self.mu - &self.p1));
        let from_b = &self.mu * &spread / (&self.p1 * (&self.p2 - &self.mu));
        Some(from_a.max(from_b))
    }

    /// Success probability of the random dictator, `(1-mu)(1-a) + mu*b`.
    pub fn dictator_success(&self) -> Q {
        let one = Q::one();
        (&one - &self.mu) * (&one - &self.a) + &self.mu * &self.b
    }

    /// Regret of the random dictator inside the dictator region.
    pub fn dictator_regret(&self) -> Q {
        Q::one() - self.dictator_success()
    }
}

/// A map from the fraction of high reports `k/n` to the probability of
/// guessing state 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AggregationRule {
    #[serde(with = "serde_exact::vec")]
    values: Vec<Q>,
}

impl AggregationRule {
    /// `values[k]` is `f(k/n)`; the length is `n + 1`.
    pub fn new(values: Vec<Q>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidRule("need at least two grid values".into()));
        }
        if let Some(v) = values.iter().find(|v| !in_unit_interval(v)) {
            return Err(Error::InvalidRule(format!("value {v} outside [0, 1]")));
        }
        Ok(Self { values })
    }

    /// The random dictator, `f(k/n) = k/n`.
    pub fn identity(n: usize) -> Self {
        let d = int(n as i64);
        Self { values: (0..=n).map(|k| int(k as i64) / &d).collect() }
    }

    pub fn constant(n: usize, value: Q) -> Result<Self> {
        Self::new(vec![value; n + 1])
    }

    /// Supermajority rule `f(v) = 1[v >= tau]`.
    pub fn threshold(n: usize, tau: &Q) -> Self {
        let d = int(n as i64);
        let values = (0..=n)
            .map(|k| if int(k as i64) / &d >= *tau { Q::one() } else { Q::zero() })
            .collect();
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn at(&self, k: usize) -> &Q {
        &self.values[k]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n())
    }

    pub(crate) fn check_agents(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::SizeMismatch { expected: n + 1, got: self.values.len() });
        }
        Ok(())
    }
}

/// A finitely supported distribution of a single agent's posterior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosteriorMarginal {
    atoms: Vec<(Q, Q)>,
}

impl PosteriorMarginal {
    pub fn new(atoms: Vec<(Q, Q)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("empty marginal".into()));
        }
        for (posterior, weight) in &atoms {
            if !in_unit_interval(posterior) || weight.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "atom ({posterior}, {weight}) out of range"
                )));
            }
        }
        if sum(atoms.iter().map(|(_, w)| w)) != Q::one() {
            return Err(Error::InvalidDistribution("weights do not sum to 1".into()));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(Q, Q)] {
        &self.atoms
    }

    pub fn mean(&self) -> Q {
        self.atoms.iter().fold(Q::zero(), |acc, (p, w)| acc + p * w)
    }
}

/// Collapses a marginal over arbitrary posteriors onto the two conditional
/// means below and above one half.
pub fn binarize_posteriors(marginal: &PosteriorMarginal, mu: Q, n: usize) -> Result<Scenario> {
    let h = half();
    let (mut low_mass, mut low_sum) = (Q::zero(), Q::zero());
    let (mut high_mass, mut high_sum) = (Q::zero(), Q::zero());
    for (p, w) in marginal.atoms() {
        if w.is_zero() {
            continue;
        }
        if *p < h {
            low_mass += w;
            low_sum += p * w;
        } else {
            high_mass += w;
            high_sum += p * w;
        }
    }
    if low_mass.is_zero() || high_mass.is_zero() {
        return Err(Error::OneSidedMarginal);
    }
    let mean = marginal.mean();
    if mean != mu {
        return Err(Error::PriorMismatch { mean: exact(&mean), mu: exact(&mu) });
    }
    Scenario::new(mu, low_sum / low_mass, high_sum / high_mass, n)
}

/// Finite state space with a default action (utility 0) and an optional
/// action with state-dependent utility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiScenario {
    states: Vec<String>,
    #[serde(with = "serde_exact::vec")]
    mu: Vec<Q>,
    #[serde(with = "serde_exact::vec")]
    u: Vec<Q>,
    #[serde(with = "serde_exact::vec")]
    p_low: Vec<Q>,
    #[serde(with = "serde_exact::vec")]
    p_high: Vec<Q>,
    n: usize,
    #[serde(with = "serde_exact::vec")]
    a_high: Vec<Q>,
    #[serde(with = "serde_exact")]
    alpha: Q,
}

fn check_distribution(name: &str, v: &[Q]) -> Result<()> {
    if v.iter().any(|x| x.is_negative()) || sum(v) != Q::one() {
        return Err(Error::InvalidDistribution(format!("{name} is not a distribution")));
    }
    Ok(())
}

fn dot(x: &[Q], y: &[Q]) -> Q {
    x.iter().zip(y).fold(Q::zero(), |acc, (a, b)| acc + a * b)
}

impl MultiScenario {
    /// Validates the inputs and derives each state's high-signal probability
    /// `a_w = pH_w (mu_w - pL_w) / (mu_w (pH_w - pL_w))`.
    ///
    /// `alpha`, when given, is the claimed weight of the high posterior in the
    /// mixture `mu = alpha*pH + (1-alpha)*pL` and must match.
    pub fn new(
        states: Vec<String>,
        mu: Vec<Q>,
        u: Vec<Q>,
        p_low: Vec<Q>,
        p_high: Vec<Q>,
        n: usize,
        alpha: Option<Q>,
    ) -> Result<Self> {
        let k = mu.len();
        for len in [states.len(), u.len(), p_low.len(), p_high.len()] {
            if len != k {
                return Err(Error::SizeMismatch { expected: k, got: len });
            }
        }
        if k == 0 {
            return Err(Error::InvalidDistribution("empty state space".into()));
        }
        if n == 0 {
            return Err(Error::InvalidAgentCount);
        }
        check_distribution("mu", &mu)?;
        check_distribution("pL", &p_low)?;
        check_distribution("pH", &p_high)?;
        if let Some(w) = mu.iter().position(|m| m.is_zero()) {
            return Err(Error::ZeroDenominator(w));
        }
        if let Some(w) = (0..k).find(|&w| p_high[w] == p_low[w]) {
            return Err(Error::ZeroDenominator(w));
        }
        if !dot(&p_high, &u).is_positive() {
            return Err(Error::SignViolation("expected utility under pH must be positive".into()));
        }
        if !dot(&p_low, &u).is_negative() {
            return Err(Error::SignViolation("expected utility under pL must be negative".into()));
        }
        let weight = |w: usize| (&mu[w] - &p_low[w]) / (&p_high[w] - &p_low[w]);
        let implied = weight(0);
        if (1..k).any(|w| weight(w) != implied) {
            return Err(Error::MixtureViolation("states imply different mixture weights".into()));
        }
        if !(implied.is_positive() && implied < Q::one()) {
            return Err(Error::MixtureViolation(format!("mixture weight {implied} not in (0, 1)")));
        }
        if let Some(claimed) = alpha {
            if claimed != implied {
                return Err(Error::MixtureViolation(format!(
                    "given alpha {claimed} but the prior implies {implied}"
                )));
            }
        }
        let a_high: Vec<Q> = (0..k)
            .map(|w| {
                &p_high[w] * (&mu[w] - &p_low[w]) / (&mu[w] * (&p_high[w] - &p_low[w]))
            })
            .collect();
        debug_assert!(a_high.iter().all(in_unit_interval));
        Ok(Self { states, mu, u, p_low, p_high, n, a_high, alpha: implied })
    }

    /// The two-state guessing game with utilities `(-1, +1)` matching a
    /// binary scenario.
    pub fn from_binary(s: &Scenario) -> Result<Self> {
        let one = Q::one();
        Self::new(
            vec!["0".into(), "1".into()],
            vec![&one - s.mu(), s.mu().clone()],
            vec![-&one, one.clone()],
            vec![&one - s.p1(), s.p1().clone()],
            vec![&one - s.p2(), s.p2().clone()],
            s.n(),
            None,
        )
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn state_count(&self) -> usize {
        self.mu.len()
    }
    pub fn mu(&self) -> &[Q] {
        &self.mu
    }
    pub fn u(&self) -> &[Q] {
        &self.u
    }
    pub fn p_low(&self) -> &[Q] {
        &self.p_low
    }
    pub fn p_high(&self) -> &[Q] {
        &self.p_high
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn a_high(&self) -> &[Q] {
        &self.a_high
    }
    pub fn alpha(&self) -> &Q {
        &self.alpha
    }

    pub fn with_agents(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAgentCount);
        }
        Ok(Self { n, ..self.clone() })
    }

    /// States where the optional action is weakly better, `u >= 0`.
    pub fn high_states(&self) -> Vec<usize> {
        (0..self.state_count()).filter(|&w| !self.u[w].is_negative()).collect()
    }

    pub fn low_states(&self) -> Vec<usize> {
        (0..self.state_count()).filter(|&w| self.u[w].is_negative()).collect()
    }

    /// Whether every `a_w` lies in `[1/n, (n-1)/n]`.
    pub fn in_dictator_region(&self) -> bool {
        let n = int(self.n as i64);
        let lo = Q::one() / &n;
        let hi = (&n - Q::one()) / &n;
        self.a_high.iter().all(|a| lo <= *a && *a <= hi)
    }

    /// `sum_{H} mu_w u_w - sum_w mu_w a_w u_w`, the random dictator's regret
    /// inside the dictator region.
    pub fn dictator_regret(&self) -> Q {
        let high: Q = self.high_states().iter().map(|&w| &self.mu[w] * &self.u[w]).sum();
        let dm: Q = (0..self.state_count())
            .map(|w| &self.mu[w] * &self.a_high[w] * &self.u[w])
            .sum();
        high - dm
    }
}
