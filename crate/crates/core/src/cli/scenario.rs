//! Scenario documents: worlds, constraints between them, and optional beliefs
//! and decision settings.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::axioms::{AxiomId, AxiomInstance, AxiomParams};
use crate::belief::{BeliefMatrix, OrderDistribution};
use crate::constraint_graph::ConstraintGraph;
use crate::decision::RuleConfig;
use crate::domain::{Population, WelfareLevel, World, WorldId};

pub const SCENARIO_SCHEMA: &str = "uncertain-objectives/scenario/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("integrity error: {0}")]
    Integrity(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioWorld {
    pub id: WorldId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<Population>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub very_high: WelfareLevel,
    pub very_low_positive: WelfareLevel,
}

impl From<&Thresholds> for AxiomParams {
    fn from(t: &Thresholds) -> Self {
        AxiomParams::new(t.very_high.clone(), t.very_low_positive.clone())
    }
}

/// `to` must be at least as good as `from`. With an axiom, the pair must
/// meet that axiom's premise and the requirement comes from the axiom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub from: WorldId,
    pub to: WorldId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axiom: Option<AxiomId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Population>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Thresholds>,
    /// Raw edges only: require `to` strictly better.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "$schema", default = "default_schema")]
    pub schema: String,
    pub worlds: Vec<ScenarioWorld>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Thresholds>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<BeliefMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<OrderDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<WorldId>>,
}

fn default_schema() -> String {
    SCENARIO_SCHEMA.to_string()
}

fn schema_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> ScenarioError {
    let path = err.path().to_string();
    ScenarioError::Schema {
        path,
        message: err.into_inner().to_string(),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &[u8]) -> Result<Scenario, ScenarioError> {
    let text = std::str::from_utf8(text).map_err(|e| ScenarioError::Schema {
        path: ".".into(),
        message: format!("not UTF-8: {e}"),
    })?;
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(schema_error)?;
    if scenario.schema != SCENARIO_SCHEMA {
        return Err(ScenarioError::Schema {
            path: "$schema".into(),
            message: format!("unsupported schema {:?}, expected {SCENARIO_SCHEMA:?}", scenario.schema),
        });
    }
    scenario.check_integrity()?;
    Ok(scenario)
}

/// Canonical pretty JSON; parsing it back yields an equal scenario.
pub fn serialize_scenario(s: &Scenario) -> String {
    serde_json::to_string_pretty(s).expect("scenarios serialize")
}

impl Scenario {
    pub fn world_ids(&self) -> Vec<WorldId> {
        self.worlds.iter().map(|w| w.id.clone()).collect()
    }

    fn world(&self, id: &WorldId) -> Option<&ScenarioWorld> {
        self.worlds.iter().find(|w| &w.id == id)
    }

    fn check_integrity(&self) -> Result<(), ScenarioError> {
        let mut seen = HashSet::new();
        for w in &self.worlds {
            if !seen.insert(&w.id) {
                return Err(ScenarioError::Integrity(format!("world {} declared twice", w.id)));
            }
        }
        let known = |id: &WorldId, what: &str| {
            if seen.contains(id) {
                Ok(())
            } else {
                Err(ScenarioError::Integrity(format!("{what} references undeclared world {id}")))
            }
        };
        for (i, c) in self.constraints.iter().enumerate() {
            known(&c.from, &format!("constraint {i}"))?;
            known(&c.to, &format!("constraint {i}"))?;
            if c.axiom.is_none() && (c.base.is_some() || c.params.is_some()) {
                return Err(ScenarioError::Integrity(format!(
                    "constraint {i} gives a base or params without an axiom"
                )));
            }
        }
        for id in self.actions.iter().flatten() {
            known(id, "actions")?;
        }
        if let Some(m) = &self.belief {
            for id in m.worlds() {
                known(id, "belief")?;
            }
        }
        if let Some(d) = &self.distribution {
            for id in d.worlds() {
                known(id, "distribution")?;
            }
        }
        if let Some(rule) = &self.rule {
            rule.validate()
                .map_err(|e| ScenarioError::Integrity(format!("rule: {e}")))?;
        }
        self.axiom_instances()?;
        Ok(())
    }

    /// The axiom-backed constraints as checked instances, by constraint index.
    pub fn axiom_instances(&self) -> Result<Vec<(usize, AxiomInstance)>, ScenarioError> {
        let mut out = Vec::new();
        for (i, c) in self.constraints.iter().enumerate() {
            let Some(axiom) = c.axiom else { continue };
            let population = |id: &WorldId| {
                self.world(id).and_then(|w| w.population.clone()).ok_or_else(|| {
                    ScenarioError::Integrity(format!(
                        "constraint {i} ({axiom}) needs a population for world {id}"
                    ))
                })
            };
            let params = match c.params.as_ref().or(self.params.as_ref()) {
                Some(t) => AxiomParams::from(t),
                None if axiom.uses_thresholds() => {
                    return Err(ScenarioError::Integrity(format!(
                        "constraint {i} ({axiom}) needs very_high and very_low_positive params"
                    )))
                }
                // Unused by this axiom's premise.
                None => AxiomParams::new(WelfareLevel::from_int(0), WelfareLevel::from_int(0)),
            };
            let instance = AxiomInstance::new(
                axiom,
                World::new(c.to.as_str(), population(&c.to)?),
                World::new(c.from.as_str(), population(&c.from)?),
                c.base.clone(),
                params,
            )
            .map_err(|e| ScenarioError::Integrity(format!("constraint {i}: {e}")))?;
            let instance = match &c.label {
                Some(label) => instance.with_label(label.clone()),
                None => instance,
            };
            out.push((i, instance));
        }
        Ok(out)
    }

    /// Label shown for constraint `i`: explicit, else the axiom id, else `C{i+1}`.
    pub fn label(&self, i: usize) -> String {
        let c = &self.constraints[i];
        c.label
            .clone()
            .or_else(|| c.axiom.map(|a| a.as_str().to_string()))
            .unwrap_or_else(|| format!("C{}", i + 1))
    }

    /// All declared worlds, one edge per constraint in document order.
    pub fn graph(&self) -> ConstraintGraph {
        let mut g = ConstraintGraph::with_worlds(self.world_ids()).expect("ids checked unique");
        for (i, c) in self.constraints.iter().enumerate() {
            let strict = c.strict || c.axiom.is_some_and(AxiomId::is_strict);
            let label = self.label(i);
            let added = if strict {
                g.add_strict_edge(c.from.clone(), c.to.clone(), label)
            } else {
                g.add_edge(c.from.clone(), c.to.clone(), label)
            };
            added.expect("constraint endpoints checked");
        }
        g
    }
}
