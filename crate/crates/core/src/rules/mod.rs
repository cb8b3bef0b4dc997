//! Cutting tool and machining strategy association per feature.
//!
//! The association is data: a [`RuleTable`] parsed from TOML. The built-in
//! table lives in `default_rules.toml`; a replacement file is checked for
//! totality when it is loaded so no feature can leave without a tool and a
//! strategy.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureKind, MachiningFeature};

const DEFAULT_RULES: &str = include_str!("default_rules.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    BallEndMill,
    CornerEndMill,
    EndMill,
}

impl Tool {
    pub const ALL: [Tool; 3] = [Tool::BallEndMill, Tool::CornerEndMill, Tool::EndMill];

    pub fn as_str(self) -> &'static str {
        match self {
            Tool::BallEndMill => "ball_end_mill",
            Tool::CornerEndMill => "corner_end_mill",
            Tool::EndMill => "end_mill",
        }
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tool {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, RuleError> {
        Tool::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| RuleError::UnknownTool(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    ZLevel,
    Surfacing,
    ParallelPlanes,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::ZLevel => "z_level",
            StrategyKind::Surfacing => "surfacing",
            StrategyKind::ParallelPlanes => "parallel_planes",
        }
    }
}

impl FromStr for StrategyKind {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, RuleError> {
        [
            StrategyKind::ZLevel,
            StrategyKind::Surfacing,
            StrategyKind::ParallelPlanes,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| RuleError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    ZLevel,
    Surfacing,
    /// Tool paths in vertical planes along `theta` (radians, XY plane).
    ParallelPlanes {
        theta: f64,
    },
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::ZLevel => StrategyKind::ZLevel,
            Strategy::Surfacing => StrategyKind::Surfacing,
            Strategy::ParallelPlanes { .. } => StrategyKind::ParallelPlanes,
        }
    }
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("unknown feature kind {0:?}")]
    UnknownKind(String),
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("oriented floor feature {0} has no privileged direction")]
    MissingTheta(usize),
    #[error("rule table is not total: {0}")]
    Incomplete(String),
    #[error("rule table parse error: {0}")]
    Parse(String),
    #[error("cannot read rule table {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolRule {
    pub id: String,
    pub kind: FeatureKind,
    /// When set, the rule only applies to features whose facets are (or are
    /// not) all Horizontal.
    pub horizontal_only: Option<bool>,
    pub tool: Tool,
    pub alternates: Vec<Tool>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionRule {
    pub id: String,
    pub kinds: Vec<FeatureKind>,
    pub tool: Tool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRule {
    pub id: String,
    pub kind: FeatureKind,
    pub strategy: StrategyKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    pub tool_rules: Vec<ToolRule>,
    /// Applied to features flagged `contains_horizontal_core`.
    pub exclusions: Vec<ExclusionRule>,
    pub strategy_rules: Vec<StrategyRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    #[serde(default)]
    tool: Vec<RawToolRule>,
    #[serde(default)]
    exclusion: Vec<RawExclusion>,
    #[serde(default)]
    strategy: Vec<RawStrategyRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToolRule {
    id: String,
    kind: String,
    horizontal_only: Option<bool>,
    tool: String,
    #[serde(default)]
    alternates: Vec<String>,
    note: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExclusion {
    id: String,
    kinds: Vec<String>,
    tool: String,
    reason: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStrategyRule {
    id: String,
    kind: String,
    strategy: String,
}

fn parse_kind(s: &str) -> Result<FeatureKind, RuleError> {
    s.parse().map_err(RuleError::UnknownKind)
}

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable::from_toml(DEFAULT_RULES).expect("built-in rule table is valid")
    }
}

/// The facts about a feature that the rules look at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleInput {
    pub feature_id: usize,
    pub kind: FeatureKind,
    pub horizontal_only: bool,
    pub contains_horizontal_core: bool,
    pub privileged_theta: Option<f64>,
}

impl From<&MachiningFeature> for RuleInput {
    fn from(f: &MachiningFeature) -> Self {
        Self {
            feature_id: f.id,
            kind: f.kind,
            horizontal_only: f.horizontal_only,
            contains_horizontal_core: f.contains_horizontal_core,
            privileged_theta: f.privileged_theta,
        }
    }
}

impl RuleTable {
    pub fn from_toml(text: &str) -> Result<Self, RuleError> {
        let raw: RawTable = toml::from_str(text).map_err(|e| RuleError::Parse(e.to_string()))?;
        let tool_rules = raw
            .tool
            .into_iter()
            .map(|r| {
                Ok(ToolRule {
                    kind: parse_kind(&r.kind)?,
                    tool: r.tool.parse()?,
                    alternates: r.alternates.iter().map(|t| t.parse()).collect::<Result<_, _>>()?,
                    id: r.id,
                    horizontal_only: r.horizontal_only,
                    note: r.note,
                })
            })
            .collect::<Result<Vec<_>, RuleError>>()?;
        let exclusions = raw
            .exclusion
            .into_iter()
            .map(|r| {
                Ok(ExclusionRule {
                    kinds: r.kinds.iter().map(|k| parse_kind(k)).collect::<Result<_, _>>()?,
                    tool: r.tool.parse()?,
                    id: r.id,
                    reason: r.reason,
                })
            })
            .collect::<Result<Vec<_>, RuleError>>()?;
        let strategy_rules = raw
            .strategy
            .into_iter()
            .map(|r| {
                Ok(StrategyRule {
                    kind: parse_kind(&r.kind)?,
                    strategy: r.strategy.parse()?,
                    id: r.id,
                })
            })
            .collect::<Result<Vec<_>, RuleError>>()?;
        let table = RuleTable {
            tool_rules,
            exclusions,
            strategy_rules,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RuleError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RuleError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Every combination of kind and feature flags must resolve to an
    /// admissible tool and a strategy.
    pub fn validate(&self) -> Result<(), RuleError> {
        let mut ids: Vec<&str> = self
            .tool_rules
            .iter()
            .map(|r| r.id.as_str())
            .chain(self.exclusions.iter().map(|r| r.id.as_str()))
            .chain(self.strategy_rules.iter().map(|r| r.id.as_str()))
            .collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(RuleError::Incomplete(format!("duplicate rule id {:?}", w[0])));
        }
        for rule in &self.strategy_rules {
            if rule.strategy == StrategyKind::ParallelPlanes && rule.kind != FeatureKind::OrientedFloor {
                return Err(RuleError::Incomplete(format!(
                    "rule {} assigns parallel planes to {}, which has no privileged direction",
                    rule.id, rule.kind
                )));
            }
        }
        for kind in FeatureKind::ALL {
            for horizontal_only in [false, true] {
                for contains_horizontal_core in [false, true] {
                    let input = RuleInput {
                        feature_id: 0,
                        kind,
                        horizontal_only,
                        contains_horizontal_core,
                        privileged_theta: Some(0.0),
                    };
                    self.assign_tool(&input).map_err(|e| match e {
                        RuleError::Incomplete(m) => RuleError::Incomplete(format!(
                            "{m} (horizontal_only = {horizontal_only}, contains_horizontal_core = {contains_horizontal_core})"
                        )),
                        other => other,
                    })?;
                }
            }
            if !self.strategy_rules.iter().any(|r| r.kind == kind) {
                return Err(RuleError::Incomplete(format!("no strategy rule for {kind}")));
            }
        }
        Ok(())
    }

    pub fn assign_tool(&self, input: &RuleInput) -> Result<ToolAssignment, RuleError> {
        let rule = self
            .tool_rules
            .iter()
            .find(|r| r.kind == input.kind && r.horizontal_only.is_none_or(|h| h == input.horizontal_only))
            .ok_or_else(|| RuleError::Incomplete(format!("no tool rule for {}", input.kind)))?;

        let mut rules = vec![rule.id.clone()];
        let mut excluded = Vec::new();
        if input.contains_horizontal_core {
            for x in self.exclusions.iter().filter(|x| x.kinds.contains(&input.kind)) {
                if !excluded.iter().any(|e: &Exclusion| e.tool == x.tool) {
                    excluded.push(Exclusion {
                        tool: x.tool,
                        reason: x.reason.clone(),
                        rule: x.id.clone(),
                    });
                    rules.push(x.id.clone());
                }
            }
        }
        let is_excluded = |t: &Tool| excluded.iter().any(|e| e.tool == *t);
        let mut candidates = std::iter::once(rule.tool).chain(rule.alternates.iter().copied());
        let tool = candidates.find(|t| !is_excluded(t)).ok_or_else(|| {
            RuleError::Incomplete(format!("rule {} leaves no admissible tool for {}", rule.id, input.kind))
        })?;
        let mut alternates = Vec::new();
        for t in std::iter::once(rule.tool).chain(rule.alternates.iter().copied()) {
            if t != tool && !is_excluded(&t) && !alternates.contains(&t) {
                alternates.push(t);
            }
        }
        let corner_radius_note =
            input.kind.is_floor() && (tool == Tool::CornerEndMill || alternates.contains(&Tool::CornerEndMill));
        Ok(ToolAssignment {
            tool,
            alternates,
            excluded,
            corner_radius_note,
            rules,
        })
    }

    pub fn assign_strategy(&self, input: &RuleInput) -> Result<StrategyAssignment, RuleError> {
        let rule = self
            .strategy_rules
            .iter()
            .find(|r| r.kind == input.kind)
            .ok_or_else(|| RuleError::Incomplete(format!("no strategy rule for {}", input.kind)))?;
        let strategy = match rule.strategy {
            StrategyKind::ZLevel => Strategy::ZLevel,
            StrategyKind::Surfacing => Strategy::Surfacing,
            StrategyKind::ParallelPlanes => Strategy::ParallelPlanes {
                theta: input
                    .privileged_theta
                    .ok_or(RuleError::MissingTheta(input.feature_id))?,
            },
        };
        if input.kind == FeatureKind::OrientedFloor && input.privileged_theta.is_none() {
            return Err(RuleError::MissingTheta(input.feature_id));
        }
        Ok(StrategyAssignment {
            strategy,
            rationale: vec![rule.id.clone()],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub tool: Tool,
    pub reason: String,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolAssignment {
    pub tool: Tool,
    pub alternates: Vec<Tool>,
    pub excluded: Vec<Exclusion>,
    /// A corner end mill is in play on a floor: its torus radius must be small.
    pub corner_radius_note: bool,
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyAssignment {
    pub strategy: Strategy,
    pub rationale: Vec<String>,
}

pub fn assign_tool(feature: &MachiningFeature, table: &RuleTable) -> Result<ToolAssignment, RuleError> {
    table.assign_tool(&feature.into())
}

pub fn assign_strategy(feature: &MachiningFeature, table: &RuleTable) -> Result<StrategyAssignment, RuleError> {
    table.assign_strategy(&feature.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub feature_id: usize,
    pub kind: FeatureKind,
    pub tool: ToolAssignment,
    pub strategy: StrategyAssignment,
    /// Every rule that fired, tool rules first.
    pub rule_trace: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProcessPlan {
    pub entries: Vec<PlanEntry>,
}

pub fn plan_entry(input: &RuleInput, table: &RuleTable) -> Result<PlanEntry, RuleError> {
    let tool = table.assign_tool(input)?;
    let strategy = table.assign_strategy(input)?;
    let rule_trace = tool.rules.iter().chain(&strategy.rationale).cloned().collect();
    Ok(PlanEntry {
        feature_id: input.feature_id,
        kind: input.kind,
        tool,
        strategy,
        rule_trace,
    })
}

/// One entry per feature, ordered by feature id.
pub fn build_plan(features: &[MachiningFeature], table: &RuleTable) -> Result<ProcessPlan, RuleError> {
    let mut entries = features
        .iter()
        .map(|f| plan_entry(&f.into(), table))
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort_by_key(|e| e.feature_id);
    Ok(ProcessPlan { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(kind: FeatureKind, horizontal_only: bool, core: bool) -> RuleInput {
        RuleInput {
            feature_id: 3,
            kind,
            horizontal_only,
            contains_horizontal_core: core,
            privileged_theta: (kind == FeatureKind::OrientedFloor).then_some(0.0),
        }
    }

    #[test]
    fn default_table_loads() {
        let t = RuleTable::default();
        assert_eq!(t.tool_rules.len(), 6);
        assert_eq!(t.strategy_rules.len(), 5);
    }

    #[test]
    fn flank_and_transition_use_ball_end_mill_and_z_level() {
        let t = RuleTable::default();
        for kind in [FeatureKind::Flank, FeatureKind::Transition] {
            let e = plan_entry(&input(kind, false, false), &t).unwrap();
            assert_eq!(e.tool.tool, Tool::BallEndMill);
            assert_eq!(e.strategy.strategy, Strategy::ZLevel);
            assert!(!e.tool.corner_radius_note);
        }
    }

    #[test]
    fn horizontal_floor_prefers_end_mill() {
        let e = plan_entry(&input(FeatureKind::SimpleFloor, true, false), &RuleTable::default()).unwrap();
        assert_eq!(e.tool.tool, Tool::EndMill);
        assert_eq!(e.tool.alternates, vec![Tool::CornerEndMill]);
        assert!(e.tool.corner_radius_note);
        assert_eq!(e.strategy.strategy, Strategy::Surfacing);
        assert_eq!(e.rule_trace, vec!["T-horizontal", "S-simple"]);
    }

    #[test]
    fn horizontal_core_excludes_ball_end_mill() {
        let e = plan_entry(
            &input(FeatureKind::IndifferentFloor, false, true),
            &RuleTable::default(),
        )
        .unwrap();
        assert_eq!(e.tool.tool, Tool::CornerEndMill);
        assert_eq!(e.tool.excluded.len(), 1);
        assert_eq!(e.tool.excluded[0].tool, Tool::BallEndMill);
        assert_eq!(e.tool.excluded[0].reason, "too small effective cutting radius");
        assert!(e.rule_trace.contains(&"X-horizontal-core".to_string()));
    }

    #[test]
    fn oriented_floor_without_theta_is_an_error() {
        let mut i = input(FeatureKind::OrientedFloor, false, false);
        i.privileged_theta = None;
        assert!(matches!(
            RuleTable::default().assign_strategy(&i),
            Err(RuleError::MissingTheta(3))
        ));
        i.privileged_theta = Some(0.25);
        assert_eq!(
            RuleTable::default().assign_strategy(&i).unwrap().strategy,
            Strategy::ParallelPlanes { theta: 0.25 }
        );
    }

    #[test]
    fn unknown_names_are_rejected() {
        let bad_kind = DEFAULT_RULES.replace("kind = \"flank\"\ntool", "kind = \"pocket\"\ntool");
        assert!(matches!(RuleTable::from_toml(&bad_kind), Err(RuleError::UnknownKind(k)) if k == "pocket"));
        let bad_tool = DEFAULT_RULES.replace("tool = \"end_mill\"", "tool = \"drill\"");
        assert!(matches!(
            RuleTable::from_toml(&bad_tool),
            Err(RuleError::UnknownTool(_))
        ));
    }

    #[test]
    fn incomplete_tables_are_rejected() {
        let no_transition_strategy = DEFAULT_RULES.replace(
            "[[strategy]]\nid = \"S-transition\"\nkind = \"transition\"\nstrategy = \"z_level\"\n",
            "",
        );
        assert!(matches!(
            RuleTable::from_toml(&no_transition_strategy),
            Err(RuleError::Incomplete(_))
        ));

        // Excluding the only tool of the oriented floor leaves nothing to use.
        let text = format!(
            "{DEFAULT_RULES}\n[[exclusion]]\nid = \"X2\"\nkinds = [\"oriented_floor\"]\ntool = \"corner_end_mill\"\nreason = \"test\"\n"
        );
        assert!(matches!(RuleTable::from_toml(&text), Err(RuleError::Incomplete(_))));

        let parallel_on_flank = DEFAULT_RULES.replacen("strategy = \"z_level\"", "strategy = \"parallel_planes\"", 1);
        assert!(matches!(
            RuleTable::from_toml(&parallel_on_flank),
            Err(RuleError::Incomplete(_))
        ));
    }

    #[test]
    fn override_table_changes_assignment() {
        let text = DEFAULT_RULES.replace(
            "kind = \"transition\"\ntool = \"ball_end_mill\"",
            "kind = \"transition\"\ntool = \"corner_end_mill\"",
        );
        let t = RuleTable::from_toml(&text).unwrap();
        let e = plan_entry(&input(FeatureKind::Transition, false, false), &t).unwrap();
        assert_eq!(e.tool.tool, Tool::CornerEndMill);
    }

    #[test]
    fn empty_plan() {
        assert!(build_plan(&[], &RuleTable::default()).unwrap().entries.is_empty());
    }
}
