//! Cheapest-insertion heuristic that seeds the branch-and-bound incumbent.

use super::schedule::{relabel_stations, schedule_structure, Structure};
use crate::graph::{ExpandedGraph, NodeId, NodeKind};
use crate::instance::Instance;
use crate::plan::RoutePlan;

/// Inserts requests by decreasing priority at their cheapest position, adding
/// a charging stop only when the route is infeasible without one. Returns
/// `None` when a request that must be served cannot be placed.
pub(crate) fn greedy_plan(instance: &Instance, graph: &ExpandedGraph) -> Option<RoutePlan> {
    let k = graph.num_agents();
    let mut seqs: Vec<Vec<NodeId>> = vec![Vec::new(); k];
    let mut routes: Vec<Vec<NodeId>> = vec![Vec::new(); k];
    let mut current = evaluate(instance, graph, &routes);
    let mut order: Vec<usize> = (0..graph.num_requests()).collect();
    order.sort_by(|&a, &b| instance.requests[b].priority.total_cmp(&instance.requests[a].priority).then(a.cmp(&b)));

    for r in order {
        let req = &instance.requests[r];
        let (p, d) = (graph.pickup(r), graph.delivery(r));
        let mut best: Option<(usize, Vec<NodeId>, Vec<Vec<NodeId>>, RoutePlan)> = None;
        for a in 0..k {
            let seq = &seqs[a];
            for i in 0..=seq.len() {
                for j in i..=seq.len() {
                    let mut s = seq.clone();
                    s.insert(i, p);
                    s.insert(j + 1, d);
                    if let Some((rs, plan)) = realize(instance, graph, &routes, a, &s) {
                        if best.as_ref().is_none_or(|b| plan.objective < b.3.objective) {
                            best = Some((a, s, rs, plan));
                        }
                    }
                }
            }
        }
        let must = !instance.config.selective || req.force_accept;
        match best {
            Some((a, s, rs, plan)) if must || current.as_ref().is_none_or(|c| plan.objective < c.objective) => {
                seqs[a] = s;
                routes = rs;
                current = Some(plan);
            }
            _ if must => return None,
            _ => {}
        }
    }
    let plan = current?;
    let complete = plan
        .requests
        .iter()
        .zip(&instance.requests)
        .all(|(a, req)| a.accepted || (instance.config.selective && !req.force_accept));
    complete.then_some(plan)
}

fn evaluate(instance: &Instance, graph: &ExpandedGraph, routes: &[Vec<NodeId>]) -> Option<RoutePlan> {
    if routes.iter().zip(&instance.agents).any(|(r, a)| r.is_empty() && a.terminal_hub.is_some()) {
        return None;
    }
    let structure = Structure::check(instance, graph, routes, None)?;
    schedule_structure(instance, graph, routes, &structure, true)
}

/// Best complete route for agent `a` visiting `seq`, trying every allowed
/// depot, then a single charging stop at each empty point, then a stop at
/// every empty point.
fn realize(
    instance: &Instance,
    graph: &ExpandedGraph,
    routes: &[Vec<NodeId>],
    a: usize,
    seq: &[NodeId],
) -> Option<(Vec<Vec<NodeId>>, RoutePlan)> {
    let hubs: Vec<NodeId> = (0..graph.num_depots())
        .filter(|&h| instance.agents[a].terminal_hub.is_none_or(|t| t == h))
        .map(|h| graph.depot(h))
        .collect();
    let try_with = |stops: &[(usize, usize)]| -> Option<(Vec<Vec<NodeId>>, RoutePlan)> {
        let mut body = Vec::with_capacity(seq.len() + stops.len() + 1);
        for (idx, &n) in seq.iter().enumerate() {
            body.push(n);
            for &(at, station) in stops {
                if at == idx {
                    body.push(graph.station(station, 0));
                }
            }
        }
        let mut best: Option<(Vec<Vec<NodeId>>, RoutePlan)> = None;
        for &h in &hubs {
            let mut rs = routes.to_vec();
            let mut route = body.clone();
            route.push(h);
            rs[a] = route;
            if !relabel_stations(graph, &mut rs) {
                return None;
            }
            if let Some(plan) = evaluate(instance, graph, &rs) {
                if best.as_ref().is_none_or(|b| plan.objective < b.1.objective) {
                    best = Some((rs, plan));
                }
            }
        }
        best
    };

    if let Some(found) = try_with(&[]) {
        return Some(found);
    }
    if graph.num_stations() == 0 {
        return None;
    }
    let empty = empty_points(instance, graph, seq);
    let mut best: Option<(Vec<Vec<NodeId>>, RoutePlan)> = None;
    for &at in &empty {
        for station in 0..graph.num_stations() {
            if let Some(found) = try_with(&[(at, station)]) {
                if best.as_ref().is_none_or(|b| found.1.objective < b.1.objective) {
                    best = Some(found);
                }
            }
        }
    }
    if best.is_some() {
        return best;
    }
    let everywhere: Vec<(usize, usize)> = empty.iter().map(|&at| (at, nearest_station(graph, seq[at]))).collect();
    try_with(&everywhere)
}

/// Positions after which the agent has just delivered and carries nothing.
fn empty_points(instance: &Instance, graph: &ExpandedGraph, seq: &[NodeId]) -> Vec<usize> {
    let mut load = 0i64;
    let mut out = Vec::new();
    for (idx, &n) in seq.iter().enumerate() {
        let r = graph.request_of(n).expect("location node");
        let q = instance.requests[r].passengers as i64 + instance.requests[r].equipment as i64;
        match graph.kind(n) {
            NodeKind::Pickup { .. } => load += q,
            _ => {
                load -= q;
                if load == 0 {
                    out.push(idx);
                }
            }
        }
    }
    out
}

fn nearest_station(graph: &ExpandedGraph, from: NodeId) -> usize {
    (0..graph.num_stations())
        .min_by(|&a, &b| graph.cost(from, graph.station(a, 0)).total_cmp(&graph.cost(from, graph.station(b, 0))))
        .unwrap_or(0)
}
