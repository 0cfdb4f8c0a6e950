//! The indexed routing graph: agent starts, pickups, deliveries, duplicated
//! charging stations and final depots, together with the admissible arcs.
//!
//! Global node order is `H0 | Lp | Ld | F | Hf`. Station duplicates are laid
//! out visit-major, so `f_i^j` sits at `F.start + j * m + i`.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::cost::{derive_costs, CostTable};
use crate::error::Result;
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Start { agent: usize },
    Pickup { request: usize },
    Delivery { request: usize },
    Station { station: usize, visit: usize },
    Depot { depot: usize },
}

impl NodeKind {
    pub fn is_location(&self) -> bool {
        matches!(self, NodeKind::Pickup { .. } | NodeKind::Delivery { .. })
    }
}

#[derive(Debug, Clone)]
pub struct ExpandedGraph {
    num_agents: usize,
    num_requests: usize,
    num_stations: usize,
    num_visits: usize,
    num_depots: usize,
    /// An open instance without depots gets one position-less sink.
    virtual_depot: bool,
    costs: CostTable,
    physical: Vec<Option<usize>>,
    arcs: Vec<(NodeId, NodeId)>,
    admissible: Vec<bool>,
    succ: Vec<Vec<NodeId>>,
    pred: Vec<Vec<NodeId>>,
}

/// Builds the routing graph of an already validated instance.
pub fn expand_graph(instance: &Instance) -> Result<ExpandedGraph> {
    let costs = derive_costs(instance)?;
    Ok(ExpandedGraph::new(instance, costs))
}

impl ExpandedGraph {
    pub fn new(instance: &Instance, costs: CostTable) -> Self {
        let k = instance.num_agents();
        let r = instance.num_requests();
        let m = instance.num_stations();
        let visits = instance.config.duplicate_visits + 1;
        let virtual_depot = instance.depots.is_empty();
        let num_depots = if virtual_depot { 1 } else { instance.depots.len() };

        let mut physical = Vec::new();
        physical.extend((0..k).map(Some));
        physical.extend((0..r).map(|i| Some(k + i)));
        physical.extend((0..r).map(|i| Some(k + r + i)));
        for _ in 0..visits {
            physical.extend((0..m).map(|i| Some(k + 2 * r + i)));
        }
        if virtual_depot {
            physical.push(None);
        } else {
            physical.extend((0..num_depots).map(|h| Some(k + 2 * r + m + h)));
        }

        let mut g = ExpandedGraph {
            num_agents: k,
            num_requests: r,
            num_stations: m,
            num_visits: visits,
            num_depots,
            virtual_depot,
            costs,
            physical,
            arcs: Vec::new(),
            admissible: Vec::new(),
            succ: Vec::new(),
            pred: Vec::new(),
        };
        g.build_arcs();
        g
    }

    fn build_arcs(&mut self) {
        let n = self.num_nodes();
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.topology_allows(NodeId(i), NodeId(j)) {
                    arcs.push((NodeId(i), NodeId(j)));
                }
            }
        }
        self.admissible = vec![false; n * n];
        self.succ = vec![Vec::new(); n];
        self.pred = vec![Vec::new(); n];
        for &(i, j) in &arcs {
            self.admissible[i.0 * n + j.0] = true;
            self.succ[i.0].push(j);
            self.pred[j.0].push(i);
        }
        self.arcs = arcs;
    }

    /// Arc admissibility straight from the node classes.
    fn topology_allows(&self, from: NodeId, to: NodeId) -> bool {
        use NodeKind::*;
        if from == to {
            return false;
        }
        match (self.kind(from), self.kind(to)) {
            (Start { .. }, Pickup { .. }) => true,
            (Pickup { .. }, Pickup { .. }) => true,
            (Pickup { .. }, Delivery { .. }) => true,
            // a delivery can never be followed by its own pickup
            (Delivery { request: a }, Pickup { request: b }) => a != b,
            (Delivery { .. }, Delivery { .. }) => true,
            (Delivery { .. }, Station { .. }) => true,
            (Delivery { .. }, Depot { .. }) => true,
            (Station { .. }, Pickup { .. }) => true,
            (Station { .. }, Depot { .. }) => true,
            _ => false,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.physical.len()
    }
    pub fn num_agents(&self) -> usize {
        self.num_agents
    }
    pub fn num_requests(&self) -> usize {
        self.num_requests
    }
    pub fn num_stations(&self) -> usize {
        self.num_stations
    }
    /// Visits per station, `n + 1`.
    pub fn num_visits(&self) -> usize {
        self.num_visits
    }
    pub fn num_depots(&self) -> usize {
        self.num_depots
    }
    pub fn has_virtual_depot(&self) -> bool {
        self.virtual_depot
    }

    pub fn starts(&self) -> Range<usize> {
        0..self.num_agents
    }
    pub fn pickups(&self) -> Range<usize> {
        let s = self.num_agents;
        s..s + self.num_requests
    }
    pub fn deliveries(&self) -> Range<usize> {
        let s = self.num_agents + self.num_requests;
        s..s + self.num_requests
    }
    /// All pickups and deliveries (`L`).
    pub fn locations(&self) -> Range<usize> {
        let s = self.num_agents;
        s..s + 2 * self.num_requests
    }
    pub fn stations(&self) -> Range<usize> {
        let s = self.num_agents + 2 * self.num_requests;
        s..s + self.num_stations * self.num_visits
    }
    pub fn depots(&self) -> Range<usize> {
        let s = self.stations().end;
        s..s + self.num_depots
    }

    pub fn start(&self, agent: usize) -> NodeId {
        NodeId(agent)
    }
    pub fn pickup(&self, request: usize) -> NodeId {
        NodeId(self.num_agents + request)
    }
    pub fn delivery(&self, request: usize) -> NodeId {
        NodeId(self.num_agents + self.num_requests + request)
    }
    pub fn station(&self, station: usize, visit: usize) -> NodeId {
        NodeId(self.stations().start + visit * self.num_stations + station)
    }
    pub fn depot(&self, depot: usize) -> NodeId {
        NodeId(self.depots().start + depot)
    }

    pub fn kind(&self, node: NodeId) -> NodeKind {
        let i = node.0;
        if self.starts().contains(&i) {
            NodeKind::Start { agent: i }
        } else if self.pickups().contains(&i) {
            NodeKind::Pickup { request: i - self.pickups().start }
        } else if self.deliveries().contains(&i) {
            NodeKind::Delivery { request: i - self.deliveries().start }
        } else if self.stations().contains(&i) {
            let off = i - self.stations().start;
            NodeKind::Station { station: off % self.num_stations, visit: off / self.num_stations }
        } else if self.depots().contains(&i) {
            NodeKind::Depot { depot: i - self.depots().start }
        } else {
            panic!("node {i} out of range")
        }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 < self.num_nodes()
    }

    /// Γ: the request a pickup or delivery belongs to.
    pub fn request_of(&self, node: NodeId) -> Option<usize> {
        match self.kind(node) {
            NodeKind::Pickup { request } | NodeKind::Delivery { request } => Some(request),
            _ => None,
        }
    }

    /// μ: +1 at pickups, −1 at deliveries, 0 elsewhere.
    pub fn load_sign(&self, node: NodeId) -> i32 {
        match self.kind(node) {
            NodeKind::Pickup { .. } => 1,
            NodeKind::Delivery { .. } => -1,
            _ => 0,
        }
    }

    pub fn station_of(&self, node: NodeId) -> Option<(usize, usize)> {
        match self.kind(node) {
            NodeKind::Station { station, visit } => Some((station, visit)),
            _ => None,
        }
    }

    pub fn physical(&self, node: NodeId) -> Option<usize> {
        self.physical[node.0]
    }

    /// Travel time between two graph nodes; zero into the virtual sink.
    #[inline]
    pub fn cost(&self, from: NodeId, to: NodeId) -> f64 {
        match (self.physical[from.0], self.physical[to.0]) {
            (Some(a), Some(b)) => self.costs.get(a, b),
            _ => 0.0,
        }
    }

    pub fn cost_table(&self) -> &CostTable {
        &self.costs
    }

    pub fn arcs(&self) -> &[(NodeId, NodeId)] {
        &self.arcs
    }

    #[inline]
    pub fn is_arc(&self, from: NodeId, to: NodeId) -> bool {
        self.admissible[from.0 * self.num_nodes() + to.0]
    }

    /// Arc usable by `agent`: admissible, and an H0 tail must be the agent's own start.
    pub fn is_agent_arc(&self, agent: usize, from: NodeId, to: NodeId) -> bool {
        self.is_arc(from, to) && (!self.starts().contains(&from.0) || from.0 == agent)
    }

    pub fn successors(&self, node: NodeId) -> &[NodeId] {
        &self.succ[node.0]
    }

    pub fn predecessors(&self, node: NodeId) -> &[NodeId] {
        &self.pred[node.0]
    }

    /// Arcs available to one agent, in catalog order.
    pub fn agent_arcs(&self, agent: usize) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.arcs.iter().copied().filter(move |&(i, _)| !self.starts().contains(&i.0) || i.0 == agent)
    }

    /// Short human label, e.g. `v0`, `p5`, `d5`, `f0^1`, `h0`.
    pub fn label(&self, node: NodeId) -> String {
        match self.kind(node) {
            NodeKind::Start { agent } => format!("v{agent}"),
            NodeKind::Pickup { request } => format!("p{request}"),
            NodeKind::Delivery { request } => format!("d{request}"),
            NodeKind::Station { station, visit } => format!("f{station}^{visit}"),
            NodeKind::Depot { depot } => format!("h{depot}"),
        }
    }
}
