//! Command-line surface: read scenarios and matrices, run an analysis, and
//! emit a deterministic report.
//!
//! Exit codes: 0 on success, 1 on any error, 2 when `--strict` is set and the
//! analysis found a cycle, a violation or an infeasibility.

mod report;
mod scenario;

pub use report::{Report, Status, REPORT_SCHEMA};
pub use scenario::{
    parse_scenario, serialize_scenario, Constraint, Scenario, ScenarioError, ScenarioWorld,
    Thresholds, SCENARIO_SCHEMA,
};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::axioms::{
    audit_swf, AuditOutcome, AxiomError, AxiomId, AxiomParams, SearchSpace, ViolationWitness,
    DEFAULT_AUDIT_BUDGET,
};
use crate::belief::{
    check_path_coherence, exact_feasibility, matrix_from_distribution, minimax_cycle_bound,
    rotation_mixture, violation_probabilities, BeliefError, BeliefMatrix, CycleSpec, Feasibility,
    OrderDistribution, DEFAULT_DIMENSION_CAP,
};
use crate::constraint_graph::{
    find_cycle, min_uncertainty_size, partial_order_from, valid_uncertainty_patterns,
    validate_partial_order, ConstraintGraph, CycleSearch, GraphError, UncertaintyPattern,
};
use crate::decision::{
    decide_margin, decide_partial, prob_best, DecisionError, PartialPolicy, Quantilizer, RuleConfig,
};
use crate::domain::{Population, SwfKind, WelfareLevel, WorldId};
use crate::rational::{format_rational, parse_rational, Rational, RationalText};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Axiom(#[from] AxiomError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "uncertain-objectives", version, about = "Impossibility cycles, uncertainty bounds and decision rules for population ethics")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Exit with status 2 when the analysis finds a violation or infeasibility.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Limit on candidate instances or subsets examined by exhaustive searches.
    #[arg(long, default_value_t = DEFAULT_AUDIT_BUDGET, global = true)]
    pub budget: u64,
    /// Largest world count for the order-enumerating linear programs.
    #[arg(long, default_value_t = DEFAULT_DIMENSION_CAP, global = true)]
    pub cap: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SwfArg {
    Total,
    Average,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Margin,
    Quantilized,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Abstain,
    Random,
    TreatAsEqual,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// `level:count,level:count,...`
fn population_arg(s: &str) -> Result<Population, String> {
    let groups = s
        .split(',')
        .map(|g| {
            let (level, count) = g
                .split_once(':')
                .ok_or_else(|| format!("expected level:count, got {g:?}"))?;
            let level = rational_arg(level)?;
            let count = count.trim().parse::<u64>().map_err(|e| format!("count {count:?}: {e}"))?;
            Ok((WelfareLevel(level), count))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Population::new(groups).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Impossibility cycle, minimum uncertainty, minimal patterns and the resulting partial order.
    Analyze {
        scenario: PathBuf,
        /// Largest pattern size to enumerate (default: number of constraints).
        #[arg(long)]
        max_pattern_size: Option<usize>,
        /// Constraint labels to weaken for the reported partial order
        /// (default: the first pattern of minimum size).
        #[arg(long, value_delimiter = ',')]
        weaken: Option<Vec<String>>,
    },
    /// Minimax violation bound for an n-cycle, or for the shortest cycle in a scenario.
    Bound {
        #[arg(long, required_unless_present = "scenario", conflicts_with = "scenario")]
        n: Option<usize>,
        scenario: Option<PathBuf>,
    },
    /// Path-coherence checks on a belief matrix, optionally with exact feasibility.
    Coherence {
        matrix: PathBuf,
        #[arg(long)]
        exact: bool,
        /// Longest path, in worlds, to check (default: min(n, cap)).
        #[arg(long)]
        max_path_len: Option<usize>,
    },
    /// Apply a decision rule to a scenario's beliefs or constraints.
    Decide {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        rule: Option<RuleArg>,
        #[arg(long, value_parser = rational_arg)]
        delta: Option<Rational>,
        #[arg(long, value_parser = rational_arg)]
        tau: Option<Rational>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long)]
        seed: Option<u64>,
        /// Constraint labels to weaken for the partial rule (default: the
        /// first pattern of minimum size).
        #[arg(long, value_delimiter = ',')]
        weaken: Option<Vec<String>>,
    },
    /// Search a grid of populations for an axiom the welfare function violates.
    Audit {
        #[arg(long, value_enum)]
        swf: SwfArg,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        critical_level: Option<Rational>,
        /// One axiom id, or `all`.
        #[arg(long, default_value = "all")]
        axiom: String,
        #[arg(long, value_delimiter = ',', value_parser = rational_arg, allow_hyphen_values = true, required = true)]
        levels: Vec<Rational>,
        #[arg(long)]
        max_count: u64,
        #[arg(long, default_value_t = 1)]
        max_groups: usize,
        /// Fixed starting population, as level:count pairs.
        #[arg(long, value_parser = population_arg, allow_hyphen_values = true)]
        base: Option<Population>,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true, requires = "very_low")]
        very_high: Option<Rational>,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true, requires = "very_high")]
        very_low: Option<Rational>,
    },
}

/// Result of one invocation, ready to print.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses arguments (including the program name) and runs the command.
pub fn execute<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Execution { code, stdout: text, stderr: String::new() }
            } else {
                Execution { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match run(&cli) {
        Ok(report) => {
            let stdout = match cli.format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            let code = if cli.strict && report.status == Status::Violation { 2 } else { 0 };
            Execution { code, stdout, stderr: String::new() }
        }
        Err(e) => Execution {
            code: 1,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Analyze { scenario, max_pattern_size, weaken } => {
            let bytes = read(scenario)?;
            let s = parse_scenario(&bytes)?;
            let settings = json!({
                "budget": cli.budget,
                "max_pattern_size": max_pattern_size,
                "weaken": weaken,
            });
            let (status, findings) = analyze(&s, *max_pattern_size, weaken.as_deref(), cli.budget)?;
            Ok(Report::new("analyze", &[&bytes], settings, status, findings))
        }
        Command::Bound { n, scenario } => {
            let (spec, bytes) = match (n, scenario) {
                (Some(n), _) => (CycleSpec::numbered(*n)?, Vec::new()),
                (None, Some(path)) => {
                    let bytes = read(path)?;
                    let s = parse_scenario(&bytes)?;
                    (cycle_spec_of(&s.graph())?, bytes)
                }
                (None, None) => return Err(CliError::Usage("give --n or a scenario".into())),
            };
            let settings = json!({ "cap": cli.cap, "n": n });
            let findings = bound(&spec, cli.cap)?;
            Ok(Report::new("bound", &[&bytes], settings, Status::Ok, findings))
        }
        Command::Coherence { matrix, exact, max_path_len } => {
            let bytes = read(matrix)?;
            let m = parse_matrix(&bytes)?;
            let len = max_path_len.unwrap_or_else(|| m.len().min(cli.cap));
            let settings = json!({ "cap": cli.cap, "exact": exact, "max_path_len": len });
            let (status, findings) = coherence(&m, len, *exact, cli.cap)?;
            Ok(Report::new("coherence", &[&bytes], settings, status, findings))
        }
        Command::Decide { scenario, rule, delta, tau, policy, seed, weaken } => {
            let bytes = read(scenario)?;
            let s = parse_scenario(&bytes)?;
            let config = rule_config(&s, *rule, delta, tau, *policy, *seed)?;
            let settings = json!({
                "budget": cli.budget,
                "cap": cli.cap,
                "rule": config,
                "weaken": weaken,
            });
            let (status, findings) = decide(&s, &config, weaken.as_deref(), cli)?;
            Ok(Report::new("decide", &[&bytes], settings, status, findings))
        }
        Command::Audit {
            swf,
            critical_level,
            axiom,
            levels,
            max_count,
            max_groups,
            base,
            very_high,
            very_low,
        } => {
            let swf = match (swf, critical_level) {
                (SwfArg::Total, None) => SwfKind::TotalWelfare,
                (SwfArg::Average, None) => SwfKind::AverageWelfare,
                (SwfArg::Critical, Some(c)) => SwfKind::CriticalLevel(WelfareLevel(c.clone())),
                (SwfArg::Critical, None) => {
                    return Err(CliError::Usage("--swf critical needs --critical-level".into()))
                }
                (_, Some(_)) => {
                    return Err(CliError::Usage("--critical-level only applies to --swf critical".into()))
                }
            };
            let axioms = if axiom == "all" {
                AxiomId::ALL.to_vec()
            } else {
                vec![axiom.parse::<AxiomId>().map_err(CliError::Usage)?]
            };
            let mut space = SearchSpace::new(
                levels.iter().cloned().map(WelfareLevel).collect(),
                *max_count,
                *max_groups,
            )
            .with_budget(cli.budget);
            if let Some(b) = base {
                space = space.with_base(b.clone());
            }
            if let (Some(h), Some(l)) = (very_high, very_low) {
                space = space.with_params(AxiomParams::new(WelfareLevel(h.clone()), WelfareLevel(l.clone())));
            }
            let params = space.effective_params();
            let settings = json!({
                "swf": swf.name(),
                "axioms": axioms.iter().map(|a| a.as_str()).collect::<Vec<_>>(),
                "levels": space.levels,
                "max_count": max_count,
                "max_groups": max_groups,
                "base": base,
                "very_high": params.very_high,
                "very_low_positive": params.very_low_positive,
                "budget": cli.budget,
            });
            let (status, findings) = audit(&swf, &axioms, &space)?;
            Ok(Report::new("audit", &[], settings, status, findings))
        }
    }
}

fn parse_matrix(bytes: &[u8]) -> Result<BeliefMatrix, CliError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Scenario(ScenarioError::Schema {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        })
    })
}

fn pattern_json(g: &ConstraintGraph, p: &UncertaintyPattern) -> Value {
    json!({ "edge_ids": p.0, "labels": p.labels(g) })
}

/// Looks up constraints by label; every label must name exactly one edge.
fn pattern_from_labels(g: &ConstraintGraph, labels: &[String]) -> Result<UncertaintyPattern, CliError> {
    let ids = labels
        .iter()
        .map(|label| {
            let matches: Vec<usize> = g
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| &e.label == label)
                .map(|(id, _)| id)
                .collect();
            match matches.as_slice() {
                [id] => Ok(*id),
                [] => Err(CliError::Usage(format!("no constraint labelled {label:?}"))),
                _ => Err(CliError::Usage(format!("label {label:?} names several constraints"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(UncertaintyPattern::new(ids))
}

/// The requested pattern, or the first of minimum size.
fn chosen_pattern(
    g: &ConstraintGraph,
    weaken: Option<&[String]>,
    budget: u64,
) -> Result<UncertaintyPattern, CliError> {
    if let Some(labels) = weaken {
        return pattern_from_labels(g, labels);
    }
    let k = min_uncertainty_size(g, budget)?;
    Ok(valid_uncertainty_patterns(g, k, budget)?
        .into_iter()
        .find(|p| p.len() == k)
        .expect("a pattern of the minimum size exists"))
}

fn analyze(
    s: &Scenario,
    max_pattern_size: Option<usize>,
    weaken: Option<&[String]>,
    budget: u64,
) -> Result<(Status, Value), CliError> {
    let g = s.graph();
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| json!({ "id": id, "from": e.from, "to": e.to, "label": e.label, "strict": e.strict }))
        .collect();
    let (status, cycle) = match find_cycle(&g) {
        CycleSearch::Cycle(c) => (
            Status::Violation,
            json!({ "length": c.len(), "edge_ids": c.edge_ids, "labels": c.labels(), "worlds": c.worlds() }),
        ),
        CycleSearch::Acyclic => (Status::Ok, Value::Null),
    };
    let min_size = min_uncertainty_size(&g, budget)?;
    let patterns =
        valid_uncertainty_patterns(&g, max_pattern_size.unwrap_or(g.edge_count()), budget)?;
    let chosen = chosen_pattern(&g, weaken, budget)?;
    let po = partial_order_from(&g, &chosen)?;
    let partial_order = json!({
        "pattern": chosen.labels(&g),
        "worlds": po.worlds(),
        "rows": po.symbol_rows(),
        "laws_hold": validate_partial_order(&po).is_ok(),
    });
    Ok((
        status,
        json!({
            "worlds": g.worlds(),
            "edges": edges,
            "cycle": cycle,
            "min_uncertainty": min_size,
            "patterns": patterns.iter().map(|p| pattern_json(&g, p)).collect::<Vec<_>>(),
            "partial_order": partial_order,
        }),
    ))
}

/// Constraint `C_i` asks `x_i` to rank above `x_{i+1}`, while a graph edge
/// `u → v` asks `v` to be at least as good as `u`; so the cycle is walked
/// backwards.
fn cycle_spec_of(g: &ConstraintGraph) -> Result<CycleSpec, CliError> {
    match find_cycle(g) {
        CycleSearch::Cycle(c) => {
            let mut worlds = c.worlds();
            worlds.reverse();
            if worlds.len() < 3 {
                return Err(CliError::Usage(format!(
                    "shortest cycle has {} worlds; the bound needs at least 3",
                    worlds.len()
                )));
            }
            Ok(CycleSpec::new(worlds)?)
        }
        CycleSearch::Acyclic => Err(CliError::Usage("scenario has no cycle".into())),
    }
}

fn distribution_json(d: &OrderDistribution) -> Value {
    serde_json::to_value(d).expect("distributions serialize")
}

fn texts(v: &[Rational]) -> Vec<RationalText> {
    v.iter().cloned().map(RationalText).collect()
}

fn bound(spec: &CycleSpec, cap: usize) -> Result<Value, CliError> {
    let n = spec.len();
    let result = minimax_cycle_bound(spec, cap)?;
    let symmetric = rotation_mixture(spec);
    let lp_violations = violation_probabilities(spec, &result.witness)?;
    let violations = violation_probabilities(spec, &symmetric)?;
    let m = matrix_from_distribution(&symmetric);
    let edge_z: Vec<Rational> = (0..n).map(|i| m.at(i, (i + 1) % n).clone()).collect();
    Ok(json!({
        "n": n,
        "cycle": spec.worlds(),
        "bound": RationalText(result.bound),
        "witness": distribution_json(&symmetric),
        "witness_violations": texts(&violations),
        "witness_edge_z": texts(&edge_z),
        "lp_witness": distribution_json(&result.witness),
        "lp_witness_violations": texts(&lp_violations),
    }))
}

fn coherence(
    m: &BeliefMatrix,
    max_path_len: usize,
    exact: bool,
    cap: usize,
) -> Result<(Status, Value), CliError> {
    let violations = check_path_coherence(m, max_path_len)?;
    let mut status = if violations.is_empty() { Status::Ok } else { Status::Violation };
    let exact_json = if exact {
        match exact_feasibility(m, cap)? {
            Feasibility::Feasible(d) => json!({
                "feasible": true,
                "witness": distribution_json(&d),
                "note": "one realizing distribution; others may exist",
            }),
            Feasibility::Infeasible(cert) => {
                status = Status::Violation;
                json!({
                    "feasible": false,
                    "certificate": cert,
                    "certificate_verified": cert.verify(m),
                })
            }
        }
    } else {
        Value::Null
    };
    Ok((
        status,
        json!({
            "worlds": m.worlds(),
            "evidence": m.evidence(),
            "path_violations": violations,
            "exact": exact_json,
        }),
    ))
}

fn rule_config(
    s: &Scenario,
    rule: Option<RuleArg>,
    delta: &Option<Rational>,
    tau: &Option<Rational>,
    policy: Option<PolicyArg>,
    seed: Option<u64>,
) -> Result<RuleConfig, CliError> {
    let missing = |what: &str| CliError::Usage(format!("--rule needs {what}"));
    let config = match rule {
        None => s
            .rule
            .clone()
            .ok_or_else(|| CliError::Usage("no --rule given and the scenario has no rule".into()))?,
        Some(RuleArg::Margin) => RuleConfig::Margin {
            delta: RationalText(delta.clone().ok_or_else(|| missing("--delta"))?),
        },
        Some(RuleArg::Quantilized) => RuleConfig::Quantilized {
            tau: RationalText(tau.clone().ok_or_else(|| missing("--tau"))?),
            seed: seed.ok_or_else(|| missing("--seed"))?,
        },
        Some(RuleArg::Partial) => RuleConfig::Partial {
            policy: match policy.ok_or_else(|| missing("--policy"))? {
                PolicyArg::Abstain => PartialPolicy::Abstain,
                PolicyArg::TreatAsEqual => PartialPolicy::TreatAsEqual,
                PolicyArg::Random => PartialPolicy::RandomAmongMaximal {
                    seed: seed.ok_or_else(|| missing("--seed"))?,
                },
            },
        },
    };
    config.validate()?;
    Ok(config)
}

fn decide(
    s: &Scenario,
    config: &RuleConfig,
    weaken: Option<&[String]>,
    cli: &Cli,
) -> Result<(Status, Value), CliError> {
    if let RuleConfig::Partial { policy } = config {
        let g = s.graph();
        let pattern = chosen_pattern(&g, weaken, cli.budget)?;
        let po = partial_order_from(&g, &pattern)?;
        let actions = s.actions.clone().unwrap_or_else(|| s.world_ids());
        let outcome = decide_partial(&po, &actions, *policy)?;
        return Ok((
            Status::Ok,
            json!({
                "actions": actions,
                "pattern": pattern.labels(&g),
                "partial_order": { "worlds": po.worlds(), "rows": po.symbol_rows() },
                "outcome": outcome,
            }),
        ));
    }

    let (d, source, warning) = match (&s.distribution, &s.belief) {
        (Some(d), _) => (d.clone(), "distribution", Value::Null),
        (None, Some(m)) => match exact_feasibility(m, cli.cap)? {
            Feasibility::Feasible(d) => (
                d,
                "belief_witness",
                json!("the belief matrix does not fix a distribution; decisions use one realizing distribution of possibly many"),
            ),
            Feasibility::Infeasible(cert) => {
                return Ok((
                    Status::Violation,
                    json!({
                        "source": "belief_witness",
                        "feasible": false,
                        "certificate": cert,
                        "outcome": Value::Null,
                    }),
                ))
            }
        },
        (None, None) => {
            return Err(CliError::Usage(
                "the margin and quantilized rules need a distribution or belief matrix".into(),
            ))
        }
    };
    let actions: Vec<WorldId> = s.actions.clone().unwrap_or_else(|| {
        s.world_ids().into_iter().filter(|w| d.index_of(w).is_some()).collect()
    });
    let probs = prob_best(&d, &actions)?;
    let outcome = match config {
        RuleConfig::Margin { delta } => decide_margin(&d, &actions, &delta.0)?,
        RuleConfig::Quantilized { tau, seed } => Quantilizer::new(&d, &actions, &tau.0, *seed)?.decide(),
        RuleConfig::Partial { .. } => unreachable!("handled above"),
    };
    Ok((
        Status::Ok,
        json!({
            "source": source,
            "warning": warning,
            "distribution": distribution_json(&d),
            "actions": actions,
            "prob_best": probs
                .iter()
                .map(|(w, p)| json!({ "world": w, "probability": RationalText(p.clone()) }))
                .collect::<Vec<_>>(),
            "outcome": outcome,
        }),
    ))
}

fn witness_json(w: &ViolationWitness) -> Result<Value, CliError> {
    let score = |p: &Population| w.swf.score(p).map(|q| format_rational(&q));
    let inst = &w.instance;
    Ok(json!({
        "label": inst.label(),
        "better": inst.better().population,
        "worse": inst.worse().population,
        "base": inst.base(),
        "requires": if inst.is_strict() { "better > worse" } else { "better >= worse" },
        "scores": {
            "better": score(&inst.better().population).map_err(AxiomError::from)?,
            "worse": score(&inst.worse().population).map_err(AxiomError::from)?,
        },
        "observed": match w.observed {
            std::cmp::Ordering::Less => "less",
            std::cmp::Ordering::Equal => "equal",
            std::cmp::Ordering::Greater => "greater",
        },
        "replayed": w.replay(),
    }))
}

fn audit(swf: &SwfKind, axioms: &[AxiomId], space: &SearchSpace) -> Result<(Status, Value), CliError> {
    let mut status = Status::Ok;
    let mut results = Vec::new();
    for &axiom in axioms {
        let entry = match audit_swf(swf, axiom, space)? {
            AuditOutcome::Witness(w) => {
                status = Status::Violation;
                json!({ "axiom": axiom, "outcome": "witness", "witness": witness_json(&w)? })
            }
            AuditOutcome::NoneFound { instances_checked } => json!({
                "axiom": axiom,
                "outcome": "none_found",
                "instances_checked": instances_checked,
            }),
        };
        results.push(entry);
    }
    Ok((status, json!({ "results": results })))
}
