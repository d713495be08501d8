use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{RuntimeError, SessionSummary};

/// One scene run inside an experiment set. References are resolved by the
/// loader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentNode {
    pub id: String,
    #[serde(default)]
    pub scene: String,
    /// Preset references as `<target_type>.<preset_name>`.
    #[serde(default)]
    pub presets: Vec<String>,
    #[serde(default)]
    pub plan: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentEdge {
    pub from: String,
    pub to: String,
    /// `always`, or `<metric> <op> <number>` such as `mean_fms > 5`.
    #[serde(default = "always")]
    pub condition: String,
}

fn always() -> String {
    "always".into()
}

fn one() -> u32 {
    1
}

/// Directed graph of scene runs. Cycles are allowed; each node runs at most
/// `max_visits` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSet {
    pub nodes: Vec<ExperimentNode>,
    #[serde(default)]
    pub edges: Vec<ExperimentEdge>,
    pub start: String,
    #[serde(default = "one")]
    pub max_visits: u32,
}

impl ExperimentSet {
    pub fn node(&self, id: &str) -> Option<&ExperimentNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn validate(&self) -> Result<(), RuntimeError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if self.nodes[..i].iter().any(|m| m.id == n.id) {
                return Err(RuntimeError::InvalidSet(format!(
                    "duplicate node `{}`",
                    n.id
                )));
            }
        }
        if self.node(&self.start).is_none() {
            return Err(RuntimeError::InvalidSet(format!(
                "unknown start node `{}`",
                self.start
            )));
        }
        if self.max_visits == 0 {
            return Err(RuntimeError::InvalidSet(
                "max_visits must be at least 1".into(),
            ));
        }
        for e in &self.edges {
            for end in [&e.from, &e.to] {
                if self.node(end).is_none() {
                    return Err(RuntimeError::InvalidSet(format!(
                        "edge refers to unknown node `{end}`"
                    )));
                }
            }
            parse_condition(&e.condition)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanFms,
    MaxFms,
    LastFms,
    FmsCount,
    CoinsCollected,
    DurationS,
}

impl Metric {
    fn parse(s: &str) -> Option<Metric> {
        let key: String = s
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("_")
            .to_ascii_lowercase();
        Some(match key.as_str() {
            "mean_fms" => Metric::MeanFms,
            "max_fms" => Metric::MaxFms,
            "last_fms" => Metric::LastFms,
            "fms_count" => Metric::FmsCount,
            "coins_collected" => Metric::CoinsCollected,
            "duration_s" | "duration" => Metric::DurationS,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Condition {
    Always,
    Compare {
        metric: Metric,
        op: CmpOp,
        value: f64,
    },
}

/// Parses `always` or `<metric> <op> <number>`. Metric names are case- and
/// space-insensitive, so `mean FMS > 5` reads as `mean_fms > 5`.
pub fn parse_condition(text: &str) -> Result<Condition, RuntimeError> {
    let bad = || RuntimeError::MalformedCondition(text.to_string());
    let t = text.trim();
    if t.eq_ignore_ascii_case("always") || t.is_empty() {
        return Ok(Condition::Always);
    }
    // Two-character operators first so `>=` is not read as `>`.
    let ops = [
        (">=", CmpOp::Ge),
        ("<=", CmpOp::Le),
        ("==", CmpOp::Eq),
        ("!=", CmpOp::Ne),
        (">", CmpOp::Gt),
        ("<", CmpOp::Lt),
    ];
    let (pos, sym, op) = ops
        .iter()
        .find_map(|(sym, op)| t.find(sym).map(|p| (p, *sym, *op)))
        .ok_or_else(bad)?;
    let metric = Metric::parse(&t[..pos]).ok_or_else(bad)?;
    let value: f64 = t[pos + sym.len()..].trim().parse().map_err(|_| bad())?;
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(Condition::Compare { metric, op, value })
}

/// Metrics a finished node exposes to edge conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeResults {
    pub mean_fms: Option<f64>,
    pub max_fms: Option<f64>,
    pub last_fms: Option<f64>,
    pub fms_count: f64,
    pub coins_collected: f64,
    pub duration_s: f64,
}

impl NodeResults {
    pub fn from_summary(s: &SessionSummary) -> Self {
        let r = &s.fms_ratings;
        NodeResults {
            mean_fms: s.mean_fms(),
            max_fms: r.iter().max().map(|&v| v as f64),
            last_fms: r.last().map(|&v| v as f64),
            fms_count: r.len() as f64,
            coins_collected: s.coins_collected as f64,
            duration_s: s.duration_s,
        }
    }

    fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::MeanFms => self.mean_fms,
            Metric::MaxFms => self.max_fms,
            Metric::LastFms => self.last_fms,
            Metric::FmsCount => Some(self.fms_count),
            Metric::CoinsCollected => Some(self.coins_collected),
            Metric::DurationS => Some(self.duration_s),
        }
    }
}

impl Condition {
    /// Comparisons on a missing metric (no FMS ratings yet) are false.
    pub fn holds(&self, r: &NodeResults) -> bool {
        match *self {
            Condition::Always => true,
            Condition::Compare { metric, op, value } => {
                r.get(metric).is_some_and(|v| op.apply(v, value))
            }
        }
    }
}

/// Successor of `current`: edges are tried in list order and the first one
/// whose condition holds and whose target has visits left wins. `None`
/// means the set is done.
pub fn next_node<'a>(
    set: &'a ExperimentSet,
    current: &str,
    results: &NodeResults,
    visits: &BTreeMap<String, u32>,
) -> Result<Option<&'a ExperimentNode>, RuntimeError> {
    if set.node(current).is_none() {
        return Err(RuntimeError::InvalidSet(format!(
            "unknown node `{current}`"
        )));
    }
    for e in set.edges.iter().filter(|e| e.from == current) {
        if !parse_condition(&e.condition)?.holds(results) {
            continue;
        }
        if visits.get(&e.to).copied().unwrap_or(0) >= set.max_visits {
            continue;
        }
        return Ok(set.node(&e.to));
    }
    Ok(None)
}
