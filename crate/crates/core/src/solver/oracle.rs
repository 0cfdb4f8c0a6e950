//! Ground truth for tiny instances: every acceptance set, assignment, visiting
//! order, station insertion and duplicate labelling is scheduled exactly.

use serde::{Deserialize, Serialize};

use super::schedule::{schedule_routes, single_agent_bound};
use crate::error::{Error, Result};
use crate::graph::{ExpandedGraph, NodeId, NodeKind};
use crate::instance::Instance;
use crate::plan::RoutePlan;

const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCaps {
    pub max_requests: usize,
    pub max_agents: usize,
    /// Station nodes after duplication, `m · (n + 1)`.
    pub max_station_visits: usize,
}

impl OracleCaps {
    pub const LIMIT: OracleCaps = OracleCaps { max_requests: 4, max_agents: 2, max_station_visits: 2 };
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self::LIMIT
    }
}

/// One agent's complete route, with provisional station labels.
#[derive(Debug, Clone)]
struct Candidate {
    nodes: Vec<NodeId>,
    mask: u32,
    bound: f64,
}

/// Tie-break key: serving agent per request (`K` when rejected), then the
/// routes as node indices.
type Encoding = (Vec<usize>, Vec<Vec<usize>>);

/// Returns the optimal plan, or `None` when no feasible plan exists.
pub fn exhaustive_oracle(instance: &Instance, graph: &ExpandedGraph, caps: &OracleCaps) -> Result<Option<RoutePlan>> {
    let lim = OracleCaps::LIMIT;
    if caps.max_requests > lim.max_requests
        || caps.max_agents > lim.max_agents
        || caps.max_station_visits > lim.max_station_visits
    {
        return Err(Error::OracleCaps(format!("requested caps {caps:?} exceed the supported {lim:?}")));
    }
    let (r, k, f) = (graph.num_requests(), graph.num_agents(), graph.stations().len());
    if r > caps.max_requests || k > caps.max_agents || f > caps.max_station_visits {
        return Err(Error::OracleCaps(format!(
            "instance has {r} requests, {k} agents and {f} station nodes; limits are {}, {}, {}",
            caps.max_requests, caps.max_agents, caps.max_station_visits
        )));
    }

    let per_agent: Vec<Vec<Candidate>> = (0..k).map(|a| agent_candidates(instance, graph, a)).collect();
    let mut combos = Vec::new();
    combine(instance, graph, &per_agent, 0, &mut vec![0; k], 0, 0.0, &mut combos);
    combos.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut best: Option<(f64, Encoding, RoutePlan)> = None;
    for (lb, pick) in combos {
        if best.as_ref().is_some_and(|b| lb > b.0 + TIE_TOL) {
            break;
        }
        let base: Vec<Vec<NodeId>> = pick.iter().enumerate().map(|(a, &c)| per_agent[a][c].nodes.clone()).collect();
        let mask = pick.iter().enumerate().fold(0u32, |m, (a, &c)| m | per_agent[a][c].mask);
        let accepted: Vec<bool> = (0..r).map(|i| mask >> i & 1 == 1).collect();
        for routes in labellings(graph, &base) {
            let res = schedule_routes(instance, graph, &routes, &accepted);
            let Some(plan) = res.plan else { continue };
            let enc = encoding(graph, &routes, &plan);
            let better = match &best {
                None => true,
                Some((obj, benc, _)) => {
                    res.objective < obj - TIE_TOL || (res.objective <= obj + TIE_TOL && enc < *benc)
                }
            };
            if better {
                best = Some((res.objective, enc, plan));
            }
        }
    }
    Ok(best.map(|b| b.2))
}

fn encoding(graph: &ExpandedGraph, routes: &[Vec<NodeId>], plan: &RoutePlan) -> Encoding {
    let k = graph.num_agents();
    (
        plan.requests.iter().map(|a| a.agent.unwrap_or(k)).collect(),
        routes.iter().map(|r| r.iter().map(|n| n.0).collect()).collect(),
    )
}

#[allow(clippy::too_many_arguments)]
fn combine(
    instance: &Instance,
    graph: &ExpandedGraph,
    per_agent: &[Vec<Candidate>],
    agent: usize,
    pick: &mut Vec<usize>,
    used: u32,
    bound: f64,
    out: &mut Vec<(f64, Vec<usize>)>,
) {
    if agent == per_agent.len() {
        let mut penalty = 0.0;
        for (r, req) in instance.requests.iter().enumerate() {
            if used >> r & 1 == 0 {
                if !instance.config.selective || req.force_accept {
                    return;
                }
                penalty += instance.config.weights.eta * req.priority;
            }
        }
        out.push((bound + penalty, pick.clone()));
        return;
    }
    for (c, cand) in per_agent[agent].iter().enumerate() {
        if cand.mask & used != 0 {
            continue;
        }
        if !stations_fit(graph, per_agent, pick, agent, cand) {
            continue;
        }
        pick[agent] = c;
        combine(instance, graph, per_agent, agent + 1, pick, used | cand.mask, bound.max(cand.bound), out);
    }
}

/// Each physical station offers `n + 1` visits in total.
fn stations_fit(
    graph: &ExpandedGraph,
    per_agent: &[Vec<Candidate>],
    pick: &[usize],
    agent: usize,
    cand: &Candidate,
) -> bool {
    let mut count = vec![0usize; graph.num_stations()];
    let chosen = (0..agent).map(|a| &per_agent[a][pick[a]]).chain(std::iter::once(cand));
    for c in chosen {
        for &n in &c.nodes {
            if let Some((i, _)) = graph.station_of(n) {
                count[i] += 1;
            }
        }
    }
    count.iter().all(|&c| c <= graph.num_visits())
}

/// Every assignment of duplicate labels `0..c` to the `c` visits of each
/// station, increasing along each agent's own route.
fn labellings(graph: &ExpandedGraph, base: &[Vec<NodeId>]) -> Vec<Vec<Vec<NodeId>>> {
    let mut slots: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph.num_stations()];
    for (a, route) in base.iter().enumerate() {
        for (pos, &n) in route.iter().enumerate() {
            if let Some((i, _)) = graph.station_of(n) {
                slots[i].push((a, pos));
            }
        }
    }
    let mut out = vec![base.to_vec()];
    for (i, visits) in slots.iter().enumerate() {
        if visits.is_empty() {
            continue;
        }
        let orders: Vec<Vec<usize>> = permutations(visits.len())
            .into_iter()
            .filter(|perm| {
                (0..visits.len())
                    .all(|x| (x + 1..visits.len()).all(|y| visits[x].0 != visits[y].0 || perm[x] < perm[y]))
            })
            .collect();
        let mut next = Vec::with_capacity(out.len() * orders.len());
        for routes in &out {
            for perm in &orders {
                let mut r = routes.clone();
                for (x, &(a, pos)) in visits.iter().enumerate() {
                    r[a][pos] = graph.station(i, perm[x]);
                }
                next.push(r);
            }
        }
        out = next;
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for at in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(at, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

struct Walk<'a> {
    instance: &'a Instance,
    graph: &'a ExpandedGraph,
    agent: usize,
    route: Vec<NodeId>,
    onboard: Vec<usize>,
    load: [u32; 2],
    mask: u32,
    station_uses: Vec<usize>,
    out: Vec<Vec<NodeId>>,
}

impl Walk<'_> {
    fn last(&self) -> NodeId {
        self.route.last().copied().unwrap_or(self.graph.start(self.agent))
    }

    fn fits(&self, passengers: u32, equipment: u32) -> bool {
        let a = &self.instance.agents[self.agent];
        let (u1, u2) = (self.load[0] + passengers, self.load[1] + equipment);
        u1 <= a.cap_passengers
            && u2 <= a.cap_equipment
            && u1 as f64 + a.conversion * u2 as f64 <= a.cap_passengers as f64
    }

    fn step(&mut self) {
        let g = self.graph;
        let last = self.last();
        for r in 0..g.num_requests() {
            let req = &self.instance.requests[r];
            let p = g.pickup(r);
            if self.mask >> r & 1 == 1
                || !g.is_agent_arc(self.agent, last, p)
                || !self.fits(req.passengers, req.equipment)
            {
                continue;
            }
            self.route.push(p);
            self.onboard.push(r);
            self.mask |= 1 << r;
            self.load[0] += req.passengers;
            self.load[1] += req.equipment;
            self.step();
            self.load[0] -= req.passengers;
            self.load[1] -= req.equipment;
            self.mask &= !(1 << r);
            self.onboard.pop();
            self.route.pop();
        }
        for idx in 0..self.onboard.len() {
            let r = self.onboard[idx];
            let req = &self.instance.requests[r];
            self.route.push(g.delivery(r));
            self.onboard.remove(idx);
            self.load[0] -= req.passengers;
            self.load[1] -= req.equipment;
            self.step();
            self.load[0] += req.passengers;
            self.load[1] += req.equipment;
            self.onboard.insert(idx, r);
            self.route.pop();
        }
        if !self.onboard.is_empty() {
            return;
        }
        let kind = g.kind(last);
        if matches!(kind, NodeKind::Delivery { .. }) {
            for i in 0..g.num_stations() {
                if self.station_uses[i] < g.num_visits() {
                    self.route.push(g.station(i, self.station_uses[i]));
                    self.station_uses[i] += 1;
                    self.step();
                    self.station_uses[i] -= 1;
                    self.route.pop();
                }
            }
        }
        if matches!(kind, NodeKind::Delivery { .. } | NodeKind::Station { .. }) {
            let terminal = self.instance.agents[self.agent].terminal_hub;
            for h in 0..g.num_depots() {
                if terminal.is_none_or(|t| t == h) {
                    let mut done = self.route.clone();
                    done.push(g.depot(h));
                    self.out.push(done);
                }
            }
        }
    }
}

/// All single-agent routes that are feasible on their own, plus the idle route.
fn agent_candidates(instance: &Instance, graph: &ExpandedGraph, agent: usize) -> Vec<Candidate> {
    let mut walk = Walk {
        instance,
        graph,
        agent,
        route: Vec::new(),
        onboard: Vec::new(),
        load: [0, 0],
        mask: 0,
        station_uses: vec![0; graph.num_stations()],
        out: Vec::new(),
    };
    walk.step();
    let mut out = Vec::new();
    if instance.agents[agent].terminal_hub.is_none() {
        out.push(Candidate { nodes: Vec::new(), mask: 0, bound: 0.0 });
    }
    for nodes in walk.out {
        if let Some(bound) = single_agent_bound(instance, graph, agent, &nodes) {
            let mask = nodes.iter().filter_map(|&n| match graph.kind(n) {
                NodeKind::Pickup { request } => Some(1u32 << request),
                _ => None,
            });
            out.push(Candidate { mask: mask.fold(0, |m, b| m | b), nodes, bound });
        }
    }
    out
}
