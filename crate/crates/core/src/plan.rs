//! Decoded solutions: per-agent routes with schedule, loads and SoC.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{ExpandedGraph, NodeId, NodeKind};
use crate::instance::Instance;

/// Charging decisions at a visited station node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    /// Time spent in each of the three charging segments.
    pub xi: [f64; 3],
    /// Segment-completion flags.
    pub z: [bool; 2],
}

impl Charge {
    pub fn total_time(&self) -> f64 {
        self.xi.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub node: NodeId,
    /// Begin of service; present for pickups, deliveries and stations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Time-window violation; present for pickups and deliveries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// Passenger and equipment load on leaving; present for pickups and deliveries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<[u32; 2]>,
    /// SoC on arrival; absent at the start node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<Charge>,
}

impl Visit {
    pub fn bare(node: NodeId) -> Self {
        Self { node, time: None, slack: None, load: None, soc: None, charge: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPlan {
    pub agent: usize,
    /// Starts at the agent's own start node; a non-idle route ends at a depot.
    pub visits: Vec<Visit>,
    /// Completion time `T^k`; zero for an idle agent.
    pub duration: f64,
}

impl AgentPlan {
    pub fn is_idle(&self) -> bool {
        self.visits.len() <= 1
    }

    /// Nodes after the start node.
    pub fn route(&self) -> Vec<NodeId> {
        self.visits.iter().skip(1).map(|v| v.node).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestAssignment {
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutePlan {
    pub agents: Vec<AgentPlan>,
    pub requests: Vec<RequestAssignment>,
    pub mission_duration: f64,
    pub objective: f64,
}

impl RoutePlan {
    pub fn from_json(text: &str) -> crate::error::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    /// Every visit to a node of `graph`'s station range, with its agent.
    pub fn station_visits<'a>(&'a self, graph: &'a ExpandedGraph) -> impl Iterator<Item = (usize, &'a Visit)> + 'a {
        self.agents.iter().flat_map(move |a| {
            a.visits.iter().filter(|v| graph.station_of(v.node).is_some()).map(move |v| (a.agent, v))
        })
    }

    /// Arrival time of a node, if some agent visits it.
    pub fn time_of(&self, node: NodeId) -> Option<f64> {
        self.agents.iter().flat_map(|a| &a.visits).find(|v| v.node == node).and_then(|v| v.time)
    }

    pub fn slack_of(&self, node: NodeId) -> Option<f64> {
        self.agents.iter().flat_map(|a| &a.visits).find(|v| v.node == node).and_then(|v| v.slack)
    }

    /// Route listing such as `k=0: [v0, p5, d5, f0^0, p1, d1, h0]`; the hub is
    /// left out of open-VRP routes.
    pub fn display<'a>(&'a self, instance: &'a Instance, graph: &'a ExpandedGraph) -> PlanDisplay<'a> {
        PlanDisplay { plan: self, instance, graph }
    }
}

pub struct PlanDisplay<'a> {
    plan: &'a RoutePlan,
    instance: &'a Instance,
    graph: &'a ExpandedGraph,
}

impl fmt::Display for PlanDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = self.instance.config.open_vrp;
        for a in &self.plan.agents {
            let labels: Vec<String> = a
                .visits
                .iter()
                .filter(|v| !(open && matches!(self.graph.kind(v.node), NodeKind::Depot { .. })))
                .map(|v| self.graph.label(v.node))
                .collect();
            writeln!(f, "k={}: [{}]  T^k={:.3}", a.agent, labels.join(", "), a.duration)?;
        }
        let rejected: Vec<String> =
            self.plan.requests.iter().enumerate().filter(|(_, r)| !r.accepted).map(|(i, _)| i.to_string()).collect();
        if !rejected.is_empty() {
            writeln!(f, "rejected: {}", rejected.join(", "))?;
        }
        write!(f, "T={:.3} objective={:.6}", self.plan.mission_duration, self.plan.objective)
    }
}

/// Objective value of a plan: mission duration, weighted arrival times and
/// window violations of accepted requests, and rejection penalties.
pub fn plan_objective(instance: &Instance, graph: &ExpandedGraph, plan: &RoutePlan) -> f64 {
    let w = &instance.config.weights;
    let mut total = plan.mission_duration;
    for (r, req) in instance.requests.iter().enumerate() {
        let lam = req.priority;
        if plan.requests.get(r).is_some_and(|a| a.accepted) {
            let (p, d) = (graph.pickup(r), graph.delivery(r));
            let times = plan.time_of(p).unwrap_or(0.0) + plan.time_of(d).unwrap_or(0.0);
            let slack = plan.slack_of(p).unwrap_or(0.0) + plan.slack_of(d).unwrap_or(0.0);
            total += lam * (w.epsilon * times + w.zeta * slack);
        } else {
            total += lam * w.eta;
        }
    }
    total
}

/// The all-idle plan: every request rejected.
pub fn idle_plan(instance: &Instance, graph: &ExpandedGraph) -> RoutePlan {
    let mut plan = RoutePlan {
        agents: (0..graph.num_agents())
            .map(|k| AgentPlan { agent: k, visits: vec![Visit::bare(graph.start(k))], duration: 0.0 })
            .collect(),
        requests: vec![RequestAssignment { accepted: false, agent: None }; graph.num_requests()],
        mission_duration: 0.0,
        objective: 0.0,
    };
    plan.objective = plan_objective(instance, graph, &plan);
    plan
}
