//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use num::{BigInt, One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use robust_agg::lp::{LinearProgram, LpSolution, Relation, Sense};
use robust_agg::model::{AggregationRule, MultiScenario, Scenario};
use robust_agg::rational::{int, q, Q};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Uniform-ish rational strictly inside `(lo, hi)`.
pub fn between(rng: &mut ChaCha8Rng, lo: &Q, hi: &Q) -> Q {
    let den: i64 = rng.gen_range(2..=97);
    let num: i64 = rng.gen_range(1..den);
    lo + (hi - lo) * q(num, den)
}

/// Scenario with `p1 < 1/2 < p2` and `p1 < mu < p2`.
pub fn scenario(rng: &mut ChaCha8Rng, n: usize) -> Scenario {
    let p1 = between(rng, &int(0), &q(1, 2));
    let p2 = between(rng, &q(1, 2), &int(1));
    let mu = between(rng, &p1, &p2);
    Scenario::new(mu, p1, p2, n).expect("valid by construction")
}

/// Posteriors induced by conditional means; `None` unless `p1 < 1/2 < p2`.
pub fn posteriors(mu: &Q, a: &Q, b: &Q) -> Option<(Q, Q)> {
    let one = Q::one();
    let low = mu * (&one - b) / (mu * (&one - b) + (&one - mu) * (&one - a));
    let high = mu * b / (mu * b + (&one - mu) * a);
    (low < q(1, 2) && q(1, 2) < high).then_some((low, high))
}

/// Scenario with `1/n <= a < b <= (n-1)/n`.
pub fn region_scenario(rng: &mut ChaCha8Rng, n: usize) -> Scenario {
    let lo = q(1, n as i64);
    let hi = q(n as i64 - 1, n as i64);
    loop {
        let mut a = between(rng, &lo, &hi);
        let mut b = between(rng, &lo, &hi);
        if rng.gen_bool(0.1) {
            a = lo.clone();
        }
        if rng.gen_bool(0.1) {
            b = hi.clone();
        }
        if a >= b {
            continue;
        }
        let mu = between(rng, &int(0), &int(1));
        if let Some((p1, p2)) = posteriors(&mu, &a, &b) {
            let s = Scenario::new(mu, p1, p2, n).expect("valid by construction");
            assert_eq!((s.a(), s.b()), (&a, &b));
            return s;
        }
    }
}

/// `(1 - p2)(mu - p1) / ((1 - mu)(p2 - p1))` and `p2 (mu - p1) / (mu (p2 - p1))`.
pub fn conditionals(mu: &Q, p1: &Q, p2: &Q) -> (Q, Q) {
    let one = Q::one();
    let a = (&one - p2) * (mu - p1) / ((&one - mu) * (p2 - p1));
    let b = p2 * (mu - p1) / (mu * (p2 - p1));
    (a, b)
}

pub fn dictator_regret(mu: &Q, a: &Q, b: &Q) -> Q {
    let one = Q::one();
    &one - (&one - mu) * (&one - a) - mu * b
}

pub fn random_rule(rng: &mut ChaCha8Rng, n: usize) -> AggregationRule {
    let values = (0..=n)
        .map(|_| {
            let den: i64 = rng.gen_range(1..=24);
            q(rng.gen_range(0..=den), den)
        })
        .collect();
    AggregationRule::new(values).unwrap()
}

/// Identity rule with one coordinate moved.
pub fn perturbed_identity(rng: &mut ChaCha8Rng, n: usize) -> AggregationRule {
    let mut values: Vec<Q> = (0..=n).map(|k| q(k as i64, n as i64)).collect();
    let k = rng.gen_range(0..=n);
    let target = between(rng, &int(0), &int(1));
    values[k] = match values[k] == target {
        false => target,
        true if values[k].is_one() => q(1, 2),
        true => (&values[k] + int(1)) / int(2),
    };
    AggregationRule::new(values).unwrap()
}

/// Concave hull of the grid points `(k/n, f_k)` at `x`, by trying every
/// bracketing pair; also returns a maximising pair.
pub fn brute_cav(values: &[Q], x: &Q) -> (Q, (usize, usize)) {
    brute_hull(values, x, true)
}

pub fn brute_vex(values: &[Q], x: &Q) -> (Q, (usize, usize)) {
    brute_hull(values, x, false)
}

fn brute_hull(values: &[Q], x: &Q, upper: bool) -> (Q, (usize, usize)) {
    let n = values.len() - 1;
    let grid = |k: usize| q(k as i64, n as i64);
    let mut best: Option<(Q, (usize, usize))> = None;
    for i in 0..=n {
        for j in i..=n {
            if !(grid(i) <= *x && *x <= grid(j)) {
                continue;
            }
            let v = if i == j {
                values[i].clone()
            } else {
                let w = (x - grid(i)) / (grid(j) - grid(i));
                &values[i] * (Q::one() - &w) + &values[j] * w
            };
            let better = match &best {
                None => true,
                Some((b, _)) => (upper && v > *b) || (!upper && v < *b),
            };
            if better {
                best = Some((v, (i, j)));
            }
        }
    }
    best.expect("x lies in [0, 1]")
}

/// Every maximising (or minimising) bracketing pair.
pub fn hull_supports(values: &[Q], x: &Q, upper: bool) -> Vec<(usize, usize)> {
    let (best, _) = brute_hull(values, x, upper);
    let n = values.len() - 1;
    let grid = |k: usize| q(k as i64, n as i64);
    let mut out = Vec::new();
    for i in 0..=n {
        for j in i..=n {
            if grid(i) <= *x && *x <= grid(j) {
                let v = if i == j {
                    values[i].clone()
                } else {
                    let w = (x - grid(i)) / (grid(j) - grid(i));
                    &values[i] * (Q::one() - &w) + &values[j] * w
                };
                if v == best {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

/// Conditions of the eight two-agent regions under a uniform prior, as printed.
pub fn two_agent_conditions(a: &Q, b: &Q) -> Vec<u8> {
    let h = q(1, 2);
    let one = Q::one();
    let two = int(2);
    let mid = (a + &one) / &two;
    let conditions = [
        (1, *a < *b && *b <= h && &two * a <= *b),
        (2, *a < *b && *b <= h && &two * a >= *b),
        (3, h <= *a && *a < *b && &one + a >= &two * b),
        (4, h <= *a && *a < *b && &one + a <= &two * b),
        (5, *a <= h && h <= *b && *b >= &two * a && *b >= mid),
        (6, *a <= h && h <= *b && &two * a >= *b && *b >= mid),
        (7, *a <= h && h <= *b && mid >= *b && *b >= &two * a),
        (8, *a <= h && h <= *b && *b <= &two * a && *b <= mid),
    ];
    conditions.iter().filter(|(_, holds)| *holds).map(|(c, _)| *c).collect()
}

/// `(f(1/2), regret)` exactly as printed for each region. The printed
/// `f(1/2)` of regions 3, 4 and 7 is not optimal; see [`two_agent_oracle`].
pub fn two_agent_printed(case: u8, a: &Q, b: &Q) -> (Q, Q) {
    let one = Q::one();
    let s = &one + a - b;
    match case {
        1 => ((a + b * int(2)) / (int(2) * (a + b)), a * (a + b * int(2)) / (int(2) * (a + b))),
        2 => ((b * int(3) - a) / (int(2) * (a + b)), (a * a + int(4) * a * b - b * b) / (int(2) * (a + b))),
        3 => (
            (int(2) - a * int(3) + b) / (int(2) * (int(2) - a - b)),
            (-(a * a) + int(4) * a * b + b * b - int(2) * a - int(6) * b + int(4)) / (int(2) * (int(2) - a - b)),
        ),
        4 => (
            (int(3) - a * int(2) - b) / (int(2) * (int(2) - a - b)),
            (&one - b) * (int(3) - a * int(2) - b) / (int(2) * (int(2) - a - b)),
        ),
        5 => ((&one - b) / &s, a * (&one - b) / &s),
        6 => ((int(2) - a * int(2) - b) / (int(2) * &s), (&one - b) * (int(4) * a - b) / (int(2) * &s)),
        7 => ((a + b * int(2) - int(1)) / (int(2) * &s), a * (int(3) + a - int(4) * b) / (int(2) * &s)),
        _ => (
            (int(3) - a - int(3) * b) / (int(2) * &s),
            (a * a - int(6) * a * b + b * b + int(5) * a - b) / (int(2) * &s),
        ),
    }
}

/// Every region whose conditions hold at `(a, b)` with its optimal
/// `(f(1/2), regret)`. Regions 3, 4 and 7 are obtained from 2, 1 and 6 by
/// relabelling the states, `(a, b, f) -> (1 - b, 1 - a, 1 - f)`.
pub fn two_agent_oracle(a: &Q, b: &Q) -> Vec<(u8, Q, Q)> {
    let one = Q::one();
    two_agent_conditions(a, b)
        .into_iter()
        .map(|case| {
            let (f, r) = match case {
                3 | 4 | 7 => {
                    let mirror = match case {
                        3 => 2,
                        4 => 1,
                        _ => 6,
                    };
                    let (f, r) = two_agent_printed(mirror, &(&one - b), &(&one - a));
                    (&one - f, r)
                }
                _ => two_agent_printed(case, a, b),
            };
            (case, f, r)
        })
        .collect()
}

/// A random `(a, b)` with `0 < a < b < 1` satisfying `case`'s conditions.
pub fn point_in_case(rng: &mut ChaCha8Rng, case: u8) -> (Q, Q) {
    loop {
        let a = between(rng, &int(0), &int(1));
        let b = between(rng, &int(0), &int(1));
        if a < b && two_agent_oracle(&a, &b).iter().any(|(c, _, _)| *c == case) {
            return (a, b);
        }
    }
}

/// Random bounded program: `vars` variables in `[0, width]`, up to `rows`
/// constraints with small integer data.
pub fn tiny_program(rng: &mut ChaCha8Rng, vars: usize, rows: usize) -> LinearProgram {
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let objective = (0..vars).map(|_| q(rng.gen_range(-4..=4), rng.gen_range(1..=3))).collect();
    let mut lp = LinearProgram::new(sense, objective);
    for j in 0..vars {
        lp.set_bounds(j, Some(int(0)), Some(int(rng.gen_range(1..=4))));
    }
    for _ in 0..rows {
        let coeffs: Vec<Q> = (0..vars).map(|_| int(rng.gen_range(-3..=3))).collect();
        let relation = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Le,
            _ => Relation::Ge,
        };
        lp.add_dense_constraint(&coeffs, relation, q(rng.gen_range(-4..=8), rng.gen_range(1..=2)));
    }
    lp
}

fn satisfied(lp: &LinearProgram, x: &[Q]) -> bool {
    (0..lp.num_vars()).all(|j| {
        lp.lower(j).is_none_or(|l| &x[j] >= l) && lp.upper(j).is_none_or(|u| &x[j] <= u)
    }) && lp.constraints().iter().all(|c| {
        let v = c.activity(x);
        match c.relation {
            Relation::Le => v <= c.rhs,
            Relation::Ge => v >= c.rhs,
            Relation::Eq => v == c.rhs,
        }
    })
}

fn gauss(mut m: Vec<Vec<Q>>, mut rhs: Vec<Q>) -> Option<Vec<Q>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, p);
        rhs.swap(c, p);
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = &m[r][c] / &m[c][c];
                for k in c..n {
                    let d = &f * &m[c][k];
                    m[r][k] -= d;
                }
                let d = &f * &rhs[c];
                rhs[r] -= d;
            }
        }
    }
    Some((0..n).map(|i| &rhs[i] / &m[i][i]).collect())
}

/// Optimal value of a program with finite bounds on every variable, by
/// enumerating all vertices; `None` when infeasible.
pub fn brute_force_optimum(lp: &LinearProgram) -> Option<Q> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<Q>, Q)> = Vec::new();
    for j in 0..n {
        let unit: Vec<Q> = (0..n).map(|k| if k == j { int(1) } else { int(0) }).collect();
        planes.push((unit.clone(), lp.lower(j).expect("bounded").clone()));
        planes.push((unit, lp.upper(j).expect("bounded").clone()));
    }
    for c in lp.constraints() {
        let mut row = vec![int(0); n];
        for (j, v) in &c.coeffs {
            row[*j] += v;
        }
        planes.push((row, c.rhs.clone()));
    }
    let mut best: Option<Q> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let m = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let r = pick.iter().map(|&i| planes[i].1.clone()).collect();
        if let Some(x) = gauss(m, r) {
            if satisfied(lp, &x) {
                let v = lp.objective_value(&x);
                let better = match (&best, lp.sense()) {
                    (None, _) => true,
                    (Some(b), Sense::Maximize) => v > *b,
                    (Some(b), Sense::Minimize) => v < *b,
                };
                if better {
                    best = Some(v);
                }
            }
        }
        // next n-combination of planes
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < planes.len() - n + i {
                break;
            }
        }
        pick[i] += 1;
        for k in i + 1..n {
            pick[k] = pick[k - 1] + 1;
        }
    }
}

/// Checks an optimal solution against its own duality certificate, using
/// only the program data: primal feasibility, sign-correct duals, reduced
/// costs consistent with the bounds the primal sits on, and equal primal
/// and dual objectives. Requires finite bounds wherever a reduced cost is
/// nonzero.
pub fn certificate_holds(lp: &LinearProgram, sol: &LpSolution) -> Result<(), String> {
    if !satisfied(lp, &sol.primal) {
        return Err("primal infeasible".into());
    }
    // Work in minimisation form: min c'x with shadow prices y'.
    let flip = if lp.sense() == Sense::Maximize { -Q::one() } else { Q::one() };
    let c: Vec<Q> = lp.objective().iter().map(|v| v * &flip).collect();
    let y: Vec<Q> = sol.duals.iter().map(|v| v * &flip).collect();
    let mut d = c.clone();
    for (row, yi) in lp.constraints().iter().zip(&y) {
        let ok = match row.relation {
            Relation::Ge => !yi.is_negative(),
            Relation::Le => !yi.is_positive(),
            Relation::Eq => true,
        };
        if !ok {
            return Err(format!("dual {yi} has the wrong sign for a {:?} row", row.relation));
        }
        if !yi.is_zero() && row.activity(&sol.primal) != row.rhs {
            return Err("dual on a slack row".into());
        }
        for (j, a) in &row.coeffs {
            d[*j] -= yi * a;
        }
    }
    let mut dual_obj: Q = lp.constraints().iter().zip(&y).map(|(r, yi)| &r.rhs * yi).sum();
    for (j, dj) in d.iter().enumerate() {
        if dj.is_positive() {
            let l = lp.lower(j).ok_or("positive reduced cost on a free-below variable")?;
            if sol.primal[j] != *l {
                return Err(format!("x{j} off its lower bound with reduced cost {dj}"));
            }
            dual_obj += dj * l;
        } else if dj.is_negative() {
            let u = lp.upper(j).ok_or("negative reduced cost on a free-above variable")?;
            if sol.primal[j] != *u {
                return Err(format!("x{j} off its upper bound with reduced cost {dj}"));
            }
            dual_obj += dj * u;
        }
    }
    let primal_obj: Q = c.iter().zip(&sol.primal).map(|(a, b)| a * b).sum();
    if primal_obj != dual_obj || primal_obj != &sol.objective * &flip {
        return Err(format!("duality gap: primal {primal_obj}, dual {dual_obj}"));
    }
    Ok(())
}

pub fn ceil(v: &Q) -> usize {
    let c: BigInt = v.ceil().to_integer();
    c.try_into().expect("small")
}

pub fn is_zero_or_one(v: &Q) -> bool {
    v.is_zero() || v.is_one()
}

/// Random multi-state instance in which every state's high-signal
/// probability lies in the dictator region; returns the instance, those
/// probabilities and the dictator's regret computed directly.
pub fn multistate_instance(rng: &mut ChaCha8Rng) -> Option<(MultiScenario, Vec<Q>, Q)> {
    let k = rng.gen_range(2..=4);
    let weights = |rng: &mut ChaCha8Rng| -> Vec<Q> {
        let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=9)).collect();
        let total: i64 = raw.iter().sum();
        raw.iter().map(|&w| q(w, total)).collect()
    };
    let p_low = weights(rng);
    let p_high = weights(rng);
    if p_low.iter().zip(&p_high).any(|(l, h)| l == h) {
        return None;
    }
    let alpha = between(rng, &int(0), &int(1));
    let mu: Vec<Q> = p_low.iter().zip(&p_high).map(|(l, h)| &alpha * h + (Q::one() - &alpha) * l).collect();
    let u: Vec<Q> = (0..k).map(|_| int(rng.gen_range(-5..=5))).collect();
    let dot = |p: &[Q]| p.iter().zip(&u).map(|(x, y)| x * y).sum::<Q>();
    if !(dot(&p_high).is_positive() && dot(&p_low).is_negative()) {
        return None;
    }
    let a: Vec<Q> = (0..k).map(|w| &alpha * &p_high[w] / &mu[w]).collect();
    let need = a
        .iter()
        .map(|x| ceil(&(Q::one() / x)).max(ceil(&(Q::one() / (Q::one() - x)))))
        .max()?;
    let n = need.max(2) + rng.gen_range(0..=1);
    if n > 8 {
        return None;
    }
    let names = (0..k).map(|w| format!("s{w}")).collect();
    let ms = MultiScenario::new(names, mu.clone(), u.clone(), p_low, p_high, n, Some(alpha)).ok()?;
    let high: Q = (0..k).filter(|&w| !u[w].is_negative()).map(|w| &mu[w] * &u[w]).sum();
    let dm: Q = (0..k).map(|w| &mu[w] * &a[w] * &u[w]).sum();
    Some((ms, a, high - dm))
}
