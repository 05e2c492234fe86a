//! Command-line front end.
//!
//! Every subcommand calls one library routine and prints its values as
//! `key=value` lines, or with `--json` as
//! `{command, inputs, derived: {a, b}, outputs, exact}` where `outputs` holds
//! decimal approximations and `exact` the same values as `"p/q"` strings.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::evaluate::{
    approx_ratio, default_tolerance, minimax_value, multistate_regret_bound, multistate_worst_case_regret,
    regret_at, regret_bound_cavvex, worst_case_regret,
};
use crate::feasible::supermajority_adversary;
use crate::fullgame::{anonymity_equivalence, double_oracle, Mode};
use crate::io::{run_sweep, ScenarioFile, SweepConfig};
use crate::model::{AggregationRule, MultiScenario, Scenario};
use crate::optimize::{
    concavification_gap_check, full_regret_program, optimal_regret_rule_multistate, optimal_regret_rule_with,
    two_agent_closed_form, verify_random_dictator,
};
use crate::rational::{exact, half, int, parse_rational, to_f64, Q};

/// Exit code for a computation that rejected its inputs.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit code for malformed command lines.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "robust-agg", version, about = "Exact robust aggregation of binary recommendations")]
pub struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conditional means a, b and the random-dictator threshold.
    Derive(ScenarioArgs),
    /// Worst-case regret of a rule and its hull bound.
    RegretOfRule(RuleArgs),
    /// Regret-optimal rule, its value and a worst-case adversary mixture.
    OptimalRule {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Report the range of every coordinate over all optimal rules.
        #[arg(long)]
        ranges: bool,
        /// Write the full regret program in LP text format.
        #[arg(long, value_name = "PATH")]
        dump_lp: Option<PathBuf>,
    },
    /// Worst-case success probability of a rule.
    Minimax(RuleArgs),
    /// Worst-case ratio of the rule's success to the Bayesian success.
    ApproxRatio {
        #[command(flatten)]
        rule: RuleArgs,
        /// Bisection tolerance.
        #[arg(long, value_parser = rational)]
        tol: Option<Q>,
    },
    /// Check whether the random dictator is the unique optimal rule.
    VerifyDictator(ScenarioArgs),
    /// Closed-form optimum for two agents and a uniform prior.
    TwoAgent {
        #[arg(long, value_parser = rational)]
        a: Q,
        #[arg(long, value_parser = rational)]
        b: Q,
    },
    /// Witness check of the concavification identity at the optimum.
    GapCheck(ScenarioArgs),
    /// Regret-optimal rule for a multi-state scenario file.
    Multistate {
        /// Scenario file with a `multistate` block.
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// Override the agent count.
        #[arg(long)]
        n: Option<usize>,
        /// Also evaluate this rule.
        #[arg(long)]
        rule: Option<String>,
    },
    /// Solve the game over full information structures.
    Fullgame {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "count")]
        mode: FullMode,
    },
    /// Regret of a threshold rule against the separating adversary.
    SupermajorityDemo {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = rational)]
        tau: Option<Q>,
        #[arg(long, value_parser = rational)]
        mu: Option<Q>,
        /// Conditional means; default to 1/2 - 1/n and 1/2 + 1/n.
        #[arg(long, value_parser = rational, requires = "b")]
        a: Option<Q>,
        #[arg(long, value_parser = rational, requires = "a")]
        b: Option<Q>,
    },
    /// Parameter sweep to CSV.
    Sweep {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Output file; standard output when absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FullMode {
    Count,
    Set,
    /// Reduced, count and set values side by side.
    Compare,
}

/// A scenario from flags or from a file. Either posteriors `--p1 --p2` or
/// conditional means `--a --b` may be given alongside `--mu` and `--n`.
#[derive(Debug, Clone, Args)]
struct ScenarioArgs {
    #[arg(long, value_parser = rational)]
    mu: Option<Q>,
    #[arg(long, value_parser = rational, conflicts_with_all = ["a", "b"])]
    p1: Option<Q>,
    #[arg(long, value_parser = rational, conflicts_with_all = ["a", "b"])]
    p2: Option<Q>,
    #[arg(long, value_parser = rational)]
    a: Option<Q>,
    #[arg(long, value_parser = rational)]
    b: Option<Q>,
    #[arg(long)]
    n: Option<usize>,
    /// JSON scenario file; flags given alongside override its fields.
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct RuleArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// `identity`, `threshold:T`, `constant:V` or comma-separated values f(0),...,f(n).
    #[arg(long, default_value = "identity")]
    rule: String,
}

fn rational(text: &str) -> Result<Q, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome<T> = Result<T, Failure>;

/// One printed quantity.
#[derive(Debug, Clone)]
enum Item {
    Exact(Q),
    Vector(Vec<Q>),
    Flag(bool),
    Count(usize),
    Text(String),
    /// Not computed for these inputs.
    Absent,
}

impl Item {
    fn human(&self) -> String {
        match self {
            Item::Exact(v) => exact(v),
            Item::Vector(v) => format!("[{}]", v.iter().map(exact).collect::<Vec<_>>().join(", ")),
            Item::Flag(b) => b.to_string(),
            Item::Count(c) => c.to_string(),
            Item::Text(t) => t.clone(),
            Item::Absent => "not asserted".into(),
        }
    }

    fn decimal(&self) -> Value {
        match self {
            Item::Exact(v) => json!(to_f64(v)),
            Item::Vector(v) => json!(v.iter().map(to_f64).collect::<Vec<_>>()),
            Item::Flag(b) => json!(b),
            Item::Count(c) => json!(c),
            Item::Text(t) => json!(t),
            Item::Absent => Value::Null,
        }
    }

    fn exact(&self) -> Option<Value> {
        match self {
            Item::Exact(v) => Some(json!(exact(v))),
            Item::Vector(v) => Some(json!(v.iter().map(exact).collect::<Vec<_>>())),
            _ => None,
        }
    }
}

fn opt_exact(v: Option<Q>) -> Item {
    v.map_or(Item::Absent, Item::Exact)
}

fn opt_flag(v: Option<bool>) -> Item {
    v.map_or(Item::Absent, Item::Flag)
}

#[derive(Debug, Default)]
struct Report {
    inputs: Vec<(String, String)>,
    derived: Option<(Q, Q)>,
    outputs: Vec<(String, Item)>,
    details: Option<Value>,
    /// Printed verbatim instead of the key=value lines in text mode.
    raw: Option<String>,
}

impl Report {
    fn for_scenario(s: &Scenario) -> Self {
        let inputs = vec![
            ("mu".into(), exact(s.mu())),
            ("p1".into(), exact(s.p1())),
            ("p2".into(), exact(s.p2())),
            ("n".into(), s.n().to_string()),
        ];
        Self { inputs, derived: Some((s.a().clone(), s.b().clone())), ..Self::default() }
    }

    fn input(mut self, key: &str, value: impl Into<String>) -> Self {
        self.inputs.push((key.into(), value.into()));
        self
    }

    fn out(mut self, key: &str, item: Item) -> Self {
        self.outputs.push((key.into(), item));
        self
    }

    fn details(mut self, value: impl serde::Serialize) -> Outcome<Self> {
        self.details = Some(serde_json::to_value(value).map_err(Error::from)?);
        Ok(self)
    }

    fn to_json(&self, command: &str) -> Value {
        let inputs: Map<String, Value> = self.inputs.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let mut outputs: Map<String, Value> = self.outputs.iter().map(|(k, v)| (k.clone(), v.decimal())).collect();
        if let Some(d) = &self.details {
            outputs.insert("details".into(), d.clone());
        }
        let exact_map: Map<String, Value> =
            self.outputs.iter().filter_map(|(k, v)| v.exact().map(|e| (k.clone(), e))).collect();
        let derived = self.derived.as_ref().map_or(Value::Null, |(a, b)| json!({"a": exact(a), "b": exact(b)}));
        json!({
            "command": command,
            "inputs": inputs,
            "derived": derived,
            "outputs": outputs,
            "exact": exact_map,
        })
    }

    fn to_text(&self) -> String {
        if let Some(raw) = &self.raw {
            return raw.clone();
        }
        let mut lines = Vec::new();
        if let Some((a, b)) = &self.derived {
            lines.push(format!("a={}", exact(a)));
            lines.push(format!("b={}", exact(b)));
        }
        lines.extend(self.outputs.iter().map(|(k, v)| format!("{k}={}", v.human())));
        lines.join("\n") + "\n"
    }
}

impl ScenarioArgs {
    fn resolve(&self) -> Outcome<Scenario> {
        let file = self.scenario.as_deref().map(ScenarioFile::load).transpose()?;
        let pick = |flag: &Option<Q>, from_file: Option<&Q>| flag.clone().or_else(|| from_file.cloned());
        let mu = pick(&self.mu, file.as_ref().and_then(|f| f.mu.as_ref()));
        let n = self.n.or(file.as_ref().and_then(|f| f.n));
        let (Some(mu), Some(n)) = (mu, n) else {
            return Err(Failure::Usage("a scenario needs --mu and --n (or --scenario FILE)".into()));
        };
        match (&self.a, &self.b, &self.p1, &self.p2) {
            (Some(a), Some(b), None, None) => Ok(Scenario::from_conditionals(mu, a.clone(), b.clone(), n)?),
            (None, None, Some(p1), Some(p2)) => Ok(Scenario::new(mu, p1.clone(), p2.clone(), n)?),
            (None, None, None, None) => match file {
                Some(mut f) => {
                    f.mu = Some(mu);
                    f.n = Some(n);
                    Ok(f.scenario()?)
                }
                None => Err(Failure::Usage("give --p1 and --p2, or --a and --b".into())),
            },
            _ => Err(Failure::Usage("--p1/--p2 and --a/--b come in pairs".into())),
        }
    }
}

/// Parses `identity`, `threshold:T`, `constant:V` or a comma-separated list.
fn parse_rule(text: &str, n: usize) -> Outcome<AggregationRule> {
    let text = text.trim();
    let usage = |e: Error| Failure::Usage(format!("bad rule {text:?}: {e}"));
    if text == "identity" {
        return Ok(AggregationRule::identity(n));
    }
    if let Some(t) = text.strip_prefix("threshold:") {
        return Ok(AggregationRule::threshold(n, &parse_rational(t).map_err(usage)?));
    }
    if let Some(v) = text.strip_prefix("constant:") {
        return Ok(AggregationRule::constant(n, parse_rational(v).map_err(usage)?)?);
    }
    let values = text.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>().map_err(usage)?;
    if values.len() != n + 1 {
        return Err(Failure::Domain(Error::SizeMismatch { expected: n + 1, got: values.len() }));
    }
    Ok(AggregationRule::new(values)?)
}

fn rule_input(report: Report, rule: &AggregationRule, text: &str) -> Report {
    report.input("rule", text.trim()).out("rule", Item::Vector(rule.values().to_vec()))
}

fn derive(args: &ScenarioArgs) -> Outcome<Report> {
    let s = args.resolve()?;
    Ok(Report::for_scenario(&s)
        .out("condition", Item::Flag(s.in_dictator_region()))
        .out("N", opt_exact(s.dictator_threshold()))
        .out("dictator_success", Item::Exact(s.dictator_success()))
        .out("dictator_regret", Item::Exact(s.dictator_regret())))
}

fn regret_of_rule(args: &RuleArgs) -> Outcome<Report> {
    let s = args.scenario.resolve()?;
    let rule = parse_rule(&args.rule, s.n())?;
    let (value, worst) = worst_case_regret(&rule, &s)?;
    let bound = regret_bound_cavvex(&rule, &s)?;
    rule_input(Report::for_scenario(&s), &rule, &args.rule)
        .out("Reg", Item::Exact(value))
        .out("bound", Item::Exact(bound))
        .details(json!({ "worst_structure": worst }))
}

fn optimal_rule(args: &ScenarioArgs, ranges: bool, dump_lp: Option<&Path>) -> Outcome<Report> {
    let s = args.resolve()?;
    if let Some(path) = dump_lp {
        std::fs::write(path, full_regret_program(&s)?.to_lp_format()).map_err(Error::from)?;
    }
    let opt = optimal_regret_rule_with(&s, ranges)?;
    Report::for_scenario(&s)
        .out("rule", Item::Vector(opt.rule.values().to_vec()))
        .out("Reg", Item::Exact(opt.value.clone()))
        .out("identity", Item::Flag(opt.rule.is_identity()))
        .out("unique", opt_flag(opt.is_unique()))
        .out("iterations", Item::Count(opt.iterations))
        .details(json!({ "mixture": opt.mixture, "ranges": opt.ranges }))
}

fn minimax(args: &RuleArgs) -> Outcome<Report> {
    let s = args.scenario.resolve()?;
    let rule = parse_rule(&args.rule, s.n())?;
    let value = minimax_value(&rule, &s)?;
    let dictator = s.dictator_success();
    Ok(rule_input(Report::for_scenario(&s), &rule, &args.rule)
        .out("Minmax", Item::Exact(value.clone()))
        .out("dictator_value", Item::Exact(dictator.clone()))
        .out("attains_dictator_value", Item::Flag(value == dictator)))
}

fn approx(args: &RuleArgs, tol: Option<&Q>) -> Outcome<Report> {
    let s = args.scenario.resolve()?;
    let rule = parse_rule(&args.rule, s.n())?;
    let tol = tol.cloned().unwrap_or_else(default_tolerance);
    let value = approx_ratio(&rule, &s, &tol)?;
    Ok(rule_input(Report::for_scenario(&s), &rule, &args.rule)
        .input("tol", exact(&tol))
        .out("Appr", Item::Exact(value))
        .out("tol", Item::Exact(tol)))
}

fn verify(args: &ScenarioArgs) -> Outcome<Report> {
    let s = args.resolve()?;
    let r = verify_random_dictator(&s)?;
    let mut report = Report::for_scenario(&s)
        .out("condition", Item::Flag(r.in_region))
        .out("N", opt_exact(r.threshold.clone()))
        .out("Reg", Item::Exact(r.lp_value.clone()))
        .out("closed_form", opt_exact(r.closed_form.clone()))
        .out("matches", opt_flag(r.value_matches))
        .out("identity_optimal", opt_flag(r.identity_optimal))
        .out("unique", opt_flag(r.unique))
        .out("rule", Item::Vector(r.optimum.rule.values().to_vec()));
    if let Some(case) = &r.two_agent {
        report = report
            .out("case", Item::Count(case.case as usize))
            .out("case_regret", Item::Exact(case.regret.clone()));
    }
    report.details(&r)
}

fn two_agent(a: &Q, b: &Q) -> Outcome<Report> {
    let c = two_agent_closed_form(a, b)?;
    let applicable = c.applicable.iter().map(|v| v.case.to_string()).collect::<Vec<_>>().join(",");
    let report = Report { derived: Some((a.clone(), b.clone())), ..Report::default() }
        .input("mu", "1/2")
        .input("n", "2")
        .out("case", Item::Count(c.case as usize))
        .out("f(1/2)", Item::Exact(c.f_half.clone()))
        .out("Reg", Item::Exact(c.regret.clone()))
        .out("applicable", Item::Text(applicable));
    report.details(&c)
}

fn gap_check(args: &ScenarioArgs) -> Outcome<Report> {
    let s = args.resolve()?;
    let g = concavification_gap_check(&s)?;
    Report::for_scenario(&s)
        .out("Reg", Item::Exact(g.lp_value.clone()))
        .out("witness", Item::Exact(g.witness.clone()))
        .out("matches", Item::Flag(g.matches))
        .out("support", Item::Count(g.support_size))
        .details(&g)
}

fn multistate(path: &Path, n: Option<usize>, rule: Option<&str>) -> Outcome<Report> {
    let file = ScenarioFile::load(path)?;
    let ms = file
        .multiscenario()?
        .ok_or_else(|| Failure::Usage(format!("{} has no multistate block", path.display())))?;
    let ms: MultiScenario = match n {
        Some(n) => ms.with_agents(n)?,
        None => ms,
    };
    let opt = optimal_regret_rule_multistate(&ms)?;
    let mut report = Report::default()
        .input("scenario", path.display().to_string())
        .input("n", ms.n().to_string())
        .out("a", Item::Vector(ms.a_high().to_vec()))
        .out("condition", Item::Flag(opt.in_region))
        .out("rule", Item::Vector(opt.rule.values().to_vec()))
        .out("Reg", Item::Exact(opt.value.clone()))
        .out("closed_form", opt_exact(opt.closed_form.clone()))
        .out("identity", Item::Flag(opt.rule.is_identity()))
        .out("unique", opt_flag(opt.unique));
    if let Some(text) = rule {
        let r = parse_rule(text, ms.n())?;
        let (value, _) = multistate_worst_case_regret(&r, &ms)?;
        report = report
            .input("rule", text.trim())
            .out("rule_Reg", Item::Exact(value))
            .out("rule_bound", Item::Exact(multistate_regret_bound(&r, &ms)?));
    }
    report.details(json!({ "mixture": opt.mixture, "ranges": opt.ranges }))
}

fn fullgame(args: &ScenarioArgs, mode: FullMode) -> Outcome<Report> {
    let s = args.resolve()?;
    let mode_name = format!("{mode:?}").to_lowercase();
    let report = Report::for_scenario(&s).input("mode", mode_name);
    let game_mode = match mode {
        FullMode::Count => Mode::Count,
        FullMode::Set => Mode::Set,
        FullMode::Compare => {
            let r = anonymity_equivalence(&s)?;
            return report
                .out("reduced_Reg", Item::Exact(r.reduced_value.clone()))
                .out("count_Reg", Item::Exact(r.count_value.clone()))
                .out("set_Reg", Item::Exact(r.set_value.clone()))
                .out("equal", Item::Flag(r.values_equal))
                .out("symmetrized_Reg", Item::Exact(r.symmetrized_regret.clone()))
                .out("symmetrized_optimal", Item::Flag(r.symmetrized_optimal))
                .details(&r);
        }
    };
    let g = double_oracle(&s, game_mode)?;
    report
        .out("Reg", Item::Exact(g.value.clone()))
        .out("rule", Item::Vector(g.rule.clone()))
        .out("iterations", Item::Count(g.iterations))
        .details(json!({ "mixture": g.mixture }))
}

fn supermajority(n: usize, tau: Option<&Q>, mu: Option<&Q>, ab: Option<(&Q, &Q)>) -> Outcome<Report> {
    if n == 0 {
        return Err(Failure::Domain(Error::InvalidAgentCount));
    }
    let step = Q::new(1.into(), n.into());
    let tau = tau.cloned().unwrap_or_else(half);
    let mu = mu.cloned().unwrap_or_else(half);
    let (a, b) = match ab {
        Some((a, b)) => (a.clone(), b.clone()),
        None => (half() - &step, half() + &step),
    };
    let s = Scenario::from_conditionals(mu, a, b, n)?;
    let rule = AggregationRule::threshold(n, &tau);
    let adversary = supermajority_adversary(&s, &tau)?;
    let at_adversary = regret_at(&rule, &adversary, s.mu())?;
    let (worst, _) = worst_case_regret(&rule, &s)?;
    let (dictator, _) = worst_case_regret(&AggregationRule::identity(n), &s)?;
    Report::for_scenario(&s)
        .input("tau", exact(&tau))
        .out("threshold_Reg_at_adversary", Item::Exact(at_adversary))
        .out("threshold_Reg", Item::Exact(worst))
        .out("dictator_Reg", Item::Exact(dictator))
        .out("one_minus_4_over_n", Item::Exact(int(1) - step * int(4)))
        .details(json!({ "adversary": adversary }))
}

fn sweep(config: &Path, out: Option<&Path>) -> Outcome<Report> {
    let cfg = SweepConfig::load(config)?;
    let table = run_sweep(&cfg)?;
    let csv = table.to_csv()?;
    let mut report = Report::default()
        .input("config", config.display().to_string())
        .out("rows", Item::Count(table.rows.len()))
        .out("columns", Item::Text(table.header.join(",")));
    match out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(Error::from)?;
            report = report.out("path", Item::Text(path.display().to_string()));
        }
        None => {
            report.raw = Some(csv.clone());
            report = report.out("csv", Item::Text(csv));
        }
    }
    Ok(report)
}

fn dispatch(command: &Command) -> Outcome<(&'static str, Report)> {
    Ok(match command {
        Command::Derive(s) => ("derive", derive(s)?),
        Command::RegretOfRule(r) => ("regret-of-rule", regret_of_rule(r)?),
        Command::OptimalRule { scenario, ranges, dump_lp } => {
            ("optimal-rule", optimal_rule(scenario, *ranges, dump_lp.as_deref())?)
        }
        Command::Minimax(r) => ("minimax", minimax(r)?),
        Command::ApproxRatio { rule, tol } => ("approx-ratio", approx(rule, tol.as_ref())?),
        Command::VerifyDictator(s) => ("verify-dictator", verify(s)?),
        Command::TwoAgent { a, b } => ("two-agent", two_agent(a, b)?),
        Command::GapCheck(s) => ("gap-check", gap_check(s)?),
        Command::Multistate { scenario, n, rule } => ("multistate", multistate(scenario, *n, rule.as_deref())?),
        Command::Fullgame { scenario, mode } => ("fullgame", fullgame(scenario, *mode)?),
        Command::SupermajorityDemo { n, tau, mu, a, b } => (
            "supermajority-demo",
            supermajority(*n, tau.as_ref(), mu.as_ref(), a.as_ref().zip(b.as_ref()))?,
        ),
        Command::Sweep { config, out } => ("sweep", sweep(config, out.as_deref())?),
    })
}

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 on success, 1 when the inputs are rejected by the computation,
/// 2 on a malformed command line.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(&cli.command) {
        Ok((name, report)) => {
            let written = if cli.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json(name)).expect("json values"))
            } else {
                write!(out, "{}", report.to_text())
            };
            if written.is_err() {
                return EXIT_DOMAIN;
            }
            0
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DOMAIN
        }
    }
}
