//! Scenario files, sweep configurations and CSV output.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evaluate::regret_bound_cavvex;
use crate::model::{binarize_posteriors, AggregationRule, MultiScenario, PosteriorMarginal, Scenario};
use crate::optimize::{optimal_regret_rule, two_agent_closed_form, two_agent_region};
use crate::rational::{half, int, serde_exact, to_f64, Q};

/// Multi-state block of a scenario file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultistateSpec {
    pub states: Vec<String>,
    #[serde(with = "serde_exact::vec")]
    pub mu: Vec<Q>,
    #[serde(with = "serde_exact::vec")]
    pub u: Vec<Q>,
    #[serde(rename = "pL", with = "serde_exact::vec")]
    pub p_low: Vec<Q>,
    #[serde(rename = "pH", with = "serde_exact::vec")]
    pub p_high: Vec<Q>,
    #[serde(default, with = "serde_exact::option")]
    pub alpha: Option<Q>,
    #[serde(default)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
struct Atom(#[serde(with = "serde_exact")] Q, #[serde(with = "serde_exact")] Q);

/// JSON scenario file. Numbers may be given as strings (`"1/3"`, `"0.25"`)
/// or JSON numbers; both are read exactly in base 10.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, with = "serde_exact::option")]
    pub mu: Option<Q>,
    #[serde(default, with = "serde_exact::option")]
    pub p1: Option<Q>,
    #[serde(default, with = "serde_exact::option")]
    pub p2: Option<Q>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    posterior_marginal: Option<Vec<Atom>>,
    #[serde(default)]
    pub multistate: Option<MultistateSpec>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("scenario file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The binary scenario: explicit posteriors, or binarised from the
    /// posterior marginal.
    pub fn scenario(&self) -> Result<Scenario> {
        let n = self.n.ok_or_else(|| Error::Parse("scenario file lacks n".into()))?;
        let mu = self.mu.clone().ok_or_else(|| Error::Parse("scenario file lacks mu".into()))?;
        match (&self.p1, &self.p2, &self.posterior_marginal) {
            (Some(p1), Some(p2), _) => Scenario::new(mu, p1.clone(), p2.clone(), n),
            (None, None, Some(atoms)) => {
                let marginal =
                    PosteriorMarginal::new(atoms.iter().map(|a| (a.0.clone(), a.1.clone())).collect())?;
                binarize_posteriors(&marginal, mu, n)
            }
            _ => Err(Error::Parse("scenario file needs p1 and p2, or posterior_marginal".into())),
        }
    }

    pub fn posterior_marginal(&self) -> Result<Option<PosteriorMarginal>> {
        self.posterior_marginal
            .as_ref()
            .map(|atoms| PosteriorMarginal::new(atoms.iter().map(|a| (a.0.clone(), a.1.clone())).collect()))
            .transpose()
    }

    pub fn multiscenario(&self) -> Result<Option<MultiScenario>> {
        let Some(spec) = &self.multistate else {
            return Ok(None);
        };
        let n = spec
            .n
            .or(self.n)
            .ok_or_else(|| Error::Parse("multistate block lacks n".into()))?;
        MultiScenario::new(
            spec.states.clone(),
            spec.mu.clone(),
            spec.u.clone(),
            spec.p_low.clone(),
            spec.p_high.clone(),
            n,
            spec.alpha.clone(),
        )
        .map(Some)
    }
}

/// Parameter sweep description.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    /// Interior grid `a, b in {1/(steps+1), ..., steps/(steps+1)}` at `n = 2`
    /// with a uniform prior, one row per grid point.
    AbGrid {
        steps: usize,
        #[serde(default)]
        quantities: Option<Vec<String>>,
    },
    /// Fixed prior and posteriors, `n` from `n_min` to `n_max`.
    NRange {
        #[serde(with = "serde_exact")]
        mu: Q,
        #[serde(with = "serde_exact")]
        p1: Q,
        #[serde(with = "serde_exact")]
        p2: Q,
        n_min: usize,
        n_max: usize,
        #[serde(default)]
        quantities: Option<Vec<String>>,
    },
    /// Fixed prior and `n`, posteriors from the two value lists.
    PGrid {
        #[serde(with = "serde_exact")]
        mu: Q,
        n: usize,
        #[serde(with = "serde_exact::vec")]
        p1_values: Vec<Q>,
        #[serde(with = "serde_exact::vec")]
        p2_values: Vec<Q>,
        #[serde(default)]
        quantities: Option<Vec<String>>,
    },
}

const AB_COLUMNS: &[&str] = &["region", "closed_form_regret", "f_half", "lp_regret", "dictator_regret"];
const SCENARIO_COLUMNS: &[&str] =
    &["in_region", "threshold", "lp_regret", "dictator_regret", "identity_optimal", "cavvex_bound"];

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn quantities(&self) -> Result<Vec<String>> {
        let (chosen, allowed) = match self {
            SweepConfig::AbGrid { quantities, .. } => (quantities, AB_COLUMNS),
            SweepConfig::NRange { quantities, .. } | SweepConfig::PGrid { quantities, .. } => {
                (quantities, SCENARIO_COLUMNS)
            }
        };
        match chosen {
            None => Ok(allowed.iter().map(|s| s.to_string()).collect()),
            Some(list) if list.is_empty() => Err(Error::BadConfig("no quantities requested".into())),
            Some(list) => {
                if let Some(bad) = list.iter().find(|q| !allowed.contains(&q.as_str())) {
                    return Err(Error::BadConfig(format!("unknown quantity {bad:?}")));
                }
                Ok(list.clone())
            }
        }
    }
}

/// One CSV table: header plus rows of already-rendered cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        for row in &self.rows {
            writer.write_record(row).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn decimal(v: &Q) -> String {
    to_f64(v).to_string()
}

fn ab_row(a: &Q, b: &Q, quantities: &[String]) -> Result<Vec<String>> {
    let mut row = vec![decimal(a), decimal(b)];
    let valid = a < b;
    let closed = if valid { Some(two_agent_closed_form(a, b)?) } else { None };
    let optimum = if valid && quantities.iter().any(|q| q == "lp_regret") {
        Some(optimal_regret_rule(&Scenario::from_conditionals(half(), a.clone(), b.clone(), 2)?)?)
    } else {
        None
    };
    for name in quantities {
        let cell = match (name.as_str(), &closed) {
            (_, None) => String::new(),
            ("region", Some(c)) => c.case.to_string(),
            ("closed_form_regret", Some(c)) => decimal(&c.regret),
            ("f_half", Some(c)) => decimal(&c.f_half),
            ("lp_regret", Some(_)) => decimal(&optimum.as_ref().expect("computed when valid").value),
            ("dictator_regret", Some(_)) => {
                let s = Scenario::from_conditionals(half(), a.clone(), b.clone(), 2)?;
                decimal(&regret_bound_cavvex(&AggregationRule::identity(2), &s)?)
            }
            _ => unreachable!("quantities are validated"),
        };
        row.push(cell);
    }
    Ok(row)
}

fn scenario_row(s: &Scenario, quantities: &[String]) -> Result<Vec<String>> {
    let optimum = if quantities.iter().any(|q| q == "lp_regret" || q == "identity_optimal") {
        Some(optimal_regret_rule(s)?)
    } else {
        None
    };
    let mut row = Vec::new();
    for name in quantities {
        row.push(match name.as_str() {
            "in_region" => s.in_dictator_region().to_string(),
            "threshold" => s.dictator_threshold().map(|t| decimal(&t)).unwrap_or_default(),
            "lp_regret" => decimal(&optimum.as_ref().expect("computed").value),
            "dictator_regret" => {
                let rule = AggregationRule::identity(s.n());
                decimal(&crate::evaluate::worst_case_regret(&rule, s)?.0)
            }
            "identity_optimal" => optimum.as_ref().expect("computed").rule.is_identity().to_string(),
            "cavvex_bound" => decimal(&regret_bound_cavvex(&AggregationRule::identity(s.n()), s)?),
            _ => unreachable!("quantities are validated"),
        });
    }
    Ok(row)
}

/// Evaluates the sweep; rows follow grid order regardless of parallelism.
pub fn run_sweep(config: &SweepConfig) -> Result<Table> {
    let quantities = config.quantities()?;
    match config {
        SweepConfig::AbGrid { steps, .. } => {
            if *steps == 0 {
                return Err(Error::BadConfig("ab_grid needs steps >= 1".into()));
            }
            let denom = int(*steps as i64 + 1);
            let points: Vec<(Q, Q)> = (1..=*steps)
                .flat_map(|i| (1..=*steps).map(move |j| (i, j)))
                .map(|(i, j)| (int(i as i64) / &denom, int(j as i64) / &denom))
                .collect();
            let rows = points
                .par_iter()
                .map(|(a, b)| ab_row(a, b, &quantities))
                .collect::<Result<Vec<_>>>()?;
            let mut header = vec!["a".to_string(), "b".to_string()];
            header.extend(quantities);
            Ok(Table { header, rows })
        }
        SweepConfig::NRange { mu, p1, p2, n_min, n_max, .. } => {
            if n_min > n_max || *n_min == 0 {
                return Err(Error::BadConfig(format!("empty agent range {n_min}..={n_max}")));
            }
            let base = Scenario::new(mu.clone(), p1.clone(), p2.clone(), *n_min)
                .map_err(|e| Error::BadConfig(e.to_string()))?;
            let rows = (*n_min..=*n_max)
                .into_par_iter()
                .map(|n| {
                    let s = base.with_agents(n)?;
                    let mut row = vec![n.to_string(), decimal(s.a()), decimal(s.b())];
                    row.extend(scenario_row(&s, &quantities)?);
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut header = vec!["n".to_string(), "a".to_string(), "b".to_string()];
            header.extend(quantities);
            Ok(Table { header, rows })
        }
        SweepConfig::PGrid { mu, n, p1_values, p2_values, .. } => {
            if p1_values.is_empty() || p2_values.is_empty() || *n == 0 {
                return Err(Error::BadConfig("p_grid needs values for p1, p2 and n >= 1".into()));
            }
            let points: Vec<(Q, Q)> = p1_values
                .iter()
                .flat_map(|p1| p2_values.iter().map(move |p2| (p1.clone(), p2.clone())))
                .collect();
            let width = quantities.len();
            let rows = points
                .par_iter()
                .map(|(p1, p2)| {
                    let mut row = vec![decimal(p1), decimal(p2)];
                    match Scenario::new(mu.clone(), p1.clone(), p2.clone(), *n) {
                        Ok(s) => {
                            row.extend([decimal(s.a()), decimal(s.b()), "ok".into()]);
                            row.extend(scenario_row(&s, &quantities)?);
                        }
                        Err(e) => {
                            row.extend([String::new(), String::new(), e.to_string()]);
                            row.extend(std::iter::repeat_n(String::new(), width));
                        }
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut header: Vec<String> =
                ["p1", "p2", "a", "b", "status"].iter().map(|s| s.to_string()).collect();
            header.extend(quantities);
            Ok(Table { header, rows })
        }
    }
}

/// Region label for `(a, b)` as used in the `ab_grid` sweep (0 when `a >= b`).
pub fn region_label(a: &Q, b: &Q) -> u8 {
    two_agent_region(a, b).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn scenario_file_variants() {
        let f = ScenarioFile::parse(r#"{"mu": "1/2", "p1": "0.25", "p2": 0.75, "n": 4}"#).unwrap();
        let s = f.scenario().unwrap();
        assert_eq!((s.a().clone(), s.b().clone()), (q(1, 4), q(3, 4)));

        let f = ScenarioFile::parse(
            r#"{"mu": "1/2", "n": 3, "posterior_marginal": [["0", "1/4"], ["2/5", "1/4"], ["4/5", "1/2"]]}"#,
        )
        .unwrap();
        assert_eq!(f.scenario().unwrap().p1(), &q(1, 5));

        let f = ScenarioFile::parse(
            r#"{"n": 5, "multistate": {"states": ["x", "y", "z"], "mu": ["5/12", "1/3", "1/4"],
                "u": [-1, 0, 2], "pL": ["2/3", "1/6", "1/6"], "pH": ["1/6", "1/2", "1/3"], "alpha": "1/2"}}"#,
        )
        .unwrap();
        assert_eq!(f.multiscenario().unwrap().unwrap().a_high()[0], q(1, 5));
        assert!(ScenarioFile::parse(r#"{"mu": 0.5, "bogus": 1}"#).is_err());
    }

    #[test]
    fn empty_sweeps_are_rejected() {
        let c = SweepConfig::parse(r#"{"kind": "ab_grid", "steps": 0}"#).unwrap();
        assert!(matches!(run_sweep(&c), Err(Error::BadConfig(_))));
        let c = SweepConfig::parse(
            r#"{"kind": "n_range", "mu": "1/2", "p1": "1/4", "p2": "3/4", "n_min": 5, "n_max": 4}"#,
        )
        .unwrap();
        assert!(matches!(run_sweep(&c), Err(Error::BadConfig(_))));
        let c = SweepConfig::parse(
            r#"{"kind": "p_grid", "mu": "1/2", "n": 3, "p1_values": [], "p2_values": ["3/4"]}"#,
        )
        .unwrap();
        assert!(matches!(run_sweep(&c), Err(Error::BadConfig(_))));
        assert!(matches!(SweepConfig::parse(r#"{"kind": "nope"}"#), Err(Error::BadConfig(_))));
    }

    #[test]
    fn small_ab_grid() {
        let c = SweepConfig::parse(r#"{"kind": "ab_grid", "steps": 3}"#).unwrap();
        let t = run_sweep(&c).unwrap();
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.header[..3], ["a", "b", "region"]);
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("a,b,region,closed_form_regret,f_half,lp_regret,dictator_regret\n"));
        assert!(!csv.contains('\r'));
    }
}
