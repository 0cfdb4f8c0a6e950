//! The continuous subproblem of a fixed discrete structure: arrival times,
//! window slacks, SoC, charging amounts and durations, as one linear program.

use crate::charging::split_energy;
use crate::graph::{ExpandedGraph, NodeId, NodeKind};
use crate::instance::{Instance, TimeWindowKind, SEGMENT1_END, SEGMENT2_END};
use crate::lp::{LinearProgram, LpOutcome, PivotRule};
use crate::milp::Sense;
use crate::plan::{plan_objective, AgentPlan, RequestAssignment, RoutePlan, Visit};

const CAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleOptions {
    /// Chronological order between consecutive duplicates of a station.
    pub couple_stations: bool,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self { couple_stations: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub feasible: bool,
    /// Objective of the plan; infinite when infeasible.
    pub objective: f64,
    pub plan: Option<RoutePlan>,
}

impl ScheduleResult {
    fn infeasible() -> Self {
        Self { feasible: false, objective: f64::INFINITY, plan: None }
    }
}

/// Schedules fixed routes. `routes[k]` lists the nodes after agent `k`'s start
/// and ends at a depot, or is empty for an idle agent. `accepted` must agree
/// with the pickups the routes visit.
pub fn schedule_routes(
    instance: &Instance,
    graph: &ExpandedGraph,
    routes: &[Vec<NodeId>],
    accepted: &[bool],
) -> ScheduleResult {
    schedule_routes_with(instance, graph, routes, accepted, &ScheduleOptions::default())
}

pub fn schedule_routes_with(
    instance: &Instance,
    graph: &ExpandedGraph,
    routes: &[Vec<NodeId>],
    accepted: &[bool],
    options: &ScheduleOptions,
) -> ScheduleResult {
    if routes.len() != graph.num_agents() || accepted.len() != graph.num_requests() {
        return ScheduleResult::infeasible();
    }
    let Some(structure) = Structure::check(instance, graph, routes, None) else {
        return ScheduleResult::infeasible();
    };
    if routes.iter().zip(&instance.agents).any(|(r, a)| r.is_empty() && a.terminal_hub.is_some()) {
        return ScheduleResult::infeasible();
    }
    for (r, req) in instance.requests.iter().enumerate() {
        let served = structure.agent_of[r].is_some();
        if served != accepted[r] || (!served && (!instance.config.selective || req.force_accept)) {
            return ScheduleResult::infeasible();
        }
    }
    match schedule_structure(instance, graph, routes, &structure, options.couple_stations) {
        Some(plan) => ScheduleResult { feasible: true, objective: plan.objective, plan: Some(plan) },
        None => ScheduleResult::infeasible(),
    }
}

/// Schedules finished routes without checking which requests they leave out;
/// unserved requests are priced as rejected.
pub(crate) fn schedule_structure(
    instance: &Instance,
    graph: &ExpandedGraph,
    routes: &[Vec<NodeId>],
    structure: &Structure,
    couple_stations: bool,
) -> Option<RoutePlan> {
    if !labels_are_prefix(graph, &structure.visitor) {
        return None;
    }
    let frame = Frame { routes, structure, open: None, t_floor: 0.0, couple_stations };
    solve_frame(instance, graph, &frame).map(|sol| sol.into_plan(instance, graph, routes, structure))
}

/// Visited duplicates of every station form a prefix `0..c`.
pub(crate) fn labels_are_prefix(graph: &ExpandedGraph, visitor: &[Option<usize>]) -> bool {
    (0..graph.num_stations()).all(|i| {
        (1..graph.num_visits())
            .all(|j| visitor[graph.station(i, j).0].is_none() || visitor[graph.station(i, j - 1).0].is_some())
    })
}

/// Relabels station visits so that labels follow agent order, then route
/// order. Fails when a station is visited more often than it has duplicates.
pub(crate) fn relabel_stations(graph: &ExpandedGraph, routes: &mut [Vec<NodeId>]) -> bool {
    let mut next = vec![0usize; graph.num_stations()];
    for route in routes.iter_mut() {
        for node in route.iter_mut() {
            if let Some((i, _)) = graph.station_of(*node) {
                if next[i] == graph.num_visits() {
                    return false;
                }
                *node = graph.station(i, next[i]);
                next[i] += 1;
            }
        }
    }
    true
}

/// LP objective of one agent's finished route with every other agent idle and
/// station duplicates uncoupled; `None` when the route is infeasible on its own.
pub(crate) fn single_agent_bound(
    instance: &Instance,
    graph: &ExpandedGraph,
    k: usize,
    route: &[NodeId],
) -> Option<f64> {
    let mut routes = vec![Vec::new(); graph.num_agents()];
    routes[k] = route.to_vec();
    let structure = Structure::check(instance, graph, &routes, None)?;
    let frame = Frame { routes: &routes, structure: &structure, open: None, t_floor: 0.0, couple_stations: false };
    solve_frame(instance, graph, &frame).map(|s| s.objective)
}

/// Travel time as counted by the duration rows: arcs into depots are free in
/// open mode.
pub(crate) fn travel(instance: &Instance, graph: &ExpandedGraph, i: NodeId, j: NodeId) -> f64 {
    if instance.config.open_vrp && graph.depots().contains(&j.0) {
        0.0
    } else {
        graph.cost(i, j)
    }
}

/// Travel time as counted by the SoC rows.
pub(crate) fn energy_travel(instance: &Instance, graph: &ExpandedGraph, i: NodeId, j: NodeId) -> f64 {
    let c = &instance.config;
    if c.open_vrp && !c.open_vrp_soc_to_hub && graph.depots().contains(&j.0) {
        0.0
    } else {
        graph.cost(i, j)
    }
}

/// SoC drop on `i → j` leaving `i` with `load`.
pub(crate) fn arc_drop(instance: &Instance, graph: &ExpandedGraph, i: NodeId, j: NodeId, load: [u32; 2]) -> f64 {
    let b = &instance.battery;
    let c = graph.cost(i, j);
    b.alpha0 * energy_travel(instance, graph, i, j) + c * (b.alpha1 * load[0] as f64 + b.alpha2 * load[1] as f64)
}

pub(crate) fn min_outgoing_travel(instance: &Instance, graph: &ExpandedGraph, i: NodeId) -> f64 {
    graph.successors(i).iter().map(|&j| travel(instance, graph, i, j)).fold(f64::INFINITY, f64::min)
}

pub(crate) fn min_incoming(graph: &ExpandedGraph, j: NodeId) -> f64 {
    graph.predecessors(j).iter().map(|&i| graph.cost(i, j)).fold(f64::INFINITY, f64::min)
}

/// Combinatorial facts about a set of (possibly partial) routes.
#[derive(Debug, Clone)]
pub(crate) struct Structure {
    /// Passenger and equipment load on leaving each route position.
    pub loads: Vec<Vec<[u32; 2]>>,
    pub agent_of: Vec<Option<usize>>,
    /// Requests picked up but not yet delivered by the open agent.
    pub pending: Vec<usize>,
    /// Agent visiting each node; depots are not recorded.
    pub visitor: Vec<Option<usize>>,
}

impl Structure {
    /// Checks arc admissibility, pairing, capacities and empty-load station and
    /// depot entry. Every agent except `open` must have a finished route; idle
    /// agents are accepted even when they have a terminal depot.
    pub fn check(
        instance: &Instance,
        graph: &ExpandedGraph,
        routes: &[Vec<NodeId>],
        open: Option<usize>,
    ) -> Option<Self> {
        let mut visitor = vec![None; graph.num_nodes()];
        let mut agent_of = vec![None; graph.num_requests()];
        let mut loads = Vec::with_capacity(routes.len());
        let mut pending = Vec::new();
        for (k, route) in routes.iter().enumerate() {
            let a = &instance.agents[k];
            let mut prev = graph.start(k);
            let mut load = [0u32; 2];
            let mut onboard: Vec<usize> = Vec::new();
            let mut lk = Vec::with_capacity(route.len());
            for (pos, &j) in route.iter().enumerate() {
                if !graph.contains(j) || !graph.is_agent_arc(k, prev, j) {
                    return None;
                }
                let kind = graph.kind(j);
                if !matches!(kind, NodeKind::Depot { .. }) {
                    if visitor[j.0].is_some() {
                        return None;
                    }
                    visitor[j.0] = Some(k);
                }
                match kind {
                    NodeKind::Pickup { request } => {
                        let req = &instance.requests[request];
                        agent_of[request] = Some(k);
                        load[0] += req.passengers;
                        load[1] += req.equipment;
                        let combined = load[0] as f64 + a.conversion * load[1] as f64;
                        if load[0] > a.cap_passengers
                            || load[1] > a.cap_equipment
                            || combined > a.cap_passengers as f64 + CAP_TOL
                        {
                            return None;
                        }
                        onboard.push(request);
                    }
                    NodeKind::Delivery { request } => {
                        let at = onboard.iter().position(|&r| r == request)?;
                        onboard.remove(at);
                        let req = &instance.requests[request];
                        load[0] -= req.passengers;
                        load[1] -= req.equipment;
                    }
                    NodeKind::Station { .. } => {
                        if !onboard.is_empty() {
                            return None;
                        }
                    }
                    NodeKind::Depot { depot } => {
                        if pos + 1 != route.len() || !onboard.is_empty() {
                            return None;
                        }
                        if a.terminal_hub.is_some_and(|h| h != depot) {
                            return None;
                        }
                    }
                    NodeKind::Start { .. } => return None,
                }
                lk.push(load);
                prev = j;
            }
            if open == Some(k) {
                if route.last().is_some_and(|&j| graph.depots().contains(&j.0)) {
                    return None;
                }
                pending = onboard;
            } else {
                if route.last().is_some_and(|&j| !graph.depots().contains(&j.0)) {
                    return None;
                }
            }
            loads.push(lk);
        }
        Some(Self { loads, agent_of, pending, visitor })
    }
}

/// A linear program over (possibly partial) routes.
pub(crate) struct Frame<'a> {
    pub routes: &'a [Vec<NodeId>],
    pub structure: &'a Structure,
    /// Agent whose route is an unfinished prefix.
    pub open: Option<usize>,
    /// Lower bound on the mission duration from work that is not routed yet.
    pub t_floor: f64,
    pub couple_stations: bool,
}

/// LP optimum of a frame. The objective covers the mission duration and the
/// request terms of visited requests; rejection penalties are left out.
#[derive(Debug, Clone)]
pub(crate) struct FrameSolution {
    pub objective: f64,
    t: Vec<f64>,
    tau: Vec<f64>,
    phi: Vec<Vec<f64>>,
    energy: Vec<f64>,
}

struct Cols {
    t: Vec<Option<usize>>,
    tau: Vec<Option<usize>>,
    xi: Vec<Option<[usize; 3]>>,
    phi: Vec<Vec<usize>>,
}

/// Service start plus service duration of `node`, as `(terms, constant)`.
fn departure(
    instance: &Instance,
    graph: &ExpandedGraph,
    cols: &Cols,
    k: usize,
    node: NodeId,
) -> (Vec<(usize, f64)>, f64) {
    match graph.kind(node) {
        NodeKind::Start { .. } => (Vec::new(), instance.agents[k].initial_delay),
        NodeKind::Pickup { request } | NodeKind::Delivery { request } => {
            (vec![(cols.t[node.0].unwrap(), 1.0)], instance.requests[request].service_time)
        }
        NodeKind::Station { .. } => {
            let mut terms = vec![(cols.t[node.0].unwrap(), 1.0)];
            terms.extend(cols.xi[node.0].unwrap().iter().map(|&c| (c, 1.0)));
            (terms, instance.agents[k].station_service_time)
        }
        NodeKind::Depot { .. } => unreachable!("depots are terminal"),
    }
}

fn negated(terms: &[(usize, f64)]) -> impl Iterator<Item = (usize, f64)> + '_ {
    terms.iter().map(|&(c, a)| (c, -a))
}

pub(crate) fn solve_frame(instance: &Instance, graph: &ExpandedGraph, frame: &Frame) -> Option<FrameSolution> {
    let g = graph;
    let st = frame.structure;
    let w = &instance.config.weights;
    let betas = instance.battery.betas();
    let n = g.num_nodes();
    let mut lp = LinearProgram::new(0);
    let mission = lp.add_var(1.0);
    if frame.t_floor > 0.0 {
        lp.add_row(vec![(mission, 1.0)], Sense::Ge, frame.t_floor);
    }

    let mut cols = Cols { t: vec![None; n], tau: vec![None; n], xi: vec![None; n], phi: Vec::new() };
    for route in frame.routes {
        for &j in route {
            match g.kind(j) {
                NodeKind::Depot { .. } => {}
                NodeKind::Station { .. } => {
                    cols.t[j.0] = Some(lp.add_var(0.0));
                    let xi = [lp.add_var(0.0), lp.add_var(0.0), lp.add_var(0.0)];
                    lp.add_upper(xi[1], (SEGMENT2_END - SEGMENT1_END) / betas[1]);
                    lp.add_upper(xi[2], (1.0 - SEGMENT2_END) / betas[2]);
                    cols.xi[j.0] = Some(xi);
                }
                _ => cols.t[j.0] = Some(lp.add_var(0.0)),
            }
        }
    }
    for &r in &st.pending {
        cols.t[g.delivery(r).0] = Some(lp.add_var(0.0));
    }

    for (r, req) in instance.requests.iter().enumerate() {
        if st.agent_of[r].is_none() {
            continue;
        }
        let (p, d) = (g.pickup(r), g.delivery(r));
        let lam = req.priority;
        let tp = cols.t[p.0].unwrap();
        lp.set_cost(tp, lam * w.epsilon);
        let td = cols.t[d.0];
        if let Some(td) = td {
            lp.set_cost(td, lam * w.epsilon);
            lp.add_row(vec![(td, 1.0), (tp, -1.0)], Sense::Ge, req.service_time);
        }
        let active = match req.tw_kind {
            TimeWindowKind::Pickup => p,
            TimeWindowKind::Delivery => d,
        };
        if let Some(ta) = cols.t[active.0] {
            let tau = lp.add_var(lam * w.zeta);
            cols.tau[active.0] = Some(tau);
            lp.add_row(vec![(ta, 1.0), (tau, 1.0)], Sense::Ge, req.tw_lo);
            lp.add_row(vec![(ta, 1.0), (tau, -1.0)], Sense::Le, req.tw_hi);
        }
    }

    for (k, route) in frame.routes.iter().enumerate() {
        let a = &instance.agents[k];
        let is_open = frame.open == Some(k);
        let phis: Vec<usize> = route.iter().map(|_| lp.add_var(0.0)).collect();
        if route.is_empty() {
            cols.phi.push(phis);
            continue;
        }
        let tk = lp.add_var(0.0);
        lp.add_row(vec![(tk, 1.0)], Sense::Le, a.max_duration);
        lp.add_row(vec![(mission, 1.0), (tk, -1.0)], Sense::Ge, 0.0);

        let mut prev = g.start(k);
        let mut prev_load = [0u32; 2];
        for (pos, &j) in route.iter().enumerate() {
            let (dep, c0) = departure(instance, g, &cols, k, prev);
            let phi = phis[pos];
            lp.add_upper(phi, 1.0);
            lp.add_row(vec![(phi, 1.0)], Sense::Ge, a.soc_min);

            let target = if g.depots().contains(&j.0) { tk } else { cols.t[j.0].unwrap() };
            let mut terms = vec![(target, 1.0)];
            terms.extend(negated(&dep));
            lp.add_row(terms, Sense::Ge, c0 + travel(instance, g, prev, j));

            let drop = arc_drop(instance, g, prev, j, prev_load);
            let mut terms = vec![(phi, 1.0)];
            let mut rhs = -drop;
            if pos == 0 {
                rhs += a.soc_init;
            } else {
                terms.push((phis[pos - 1], -1.0));
                if let Some(xi) = cols.xi[prev.0] {
                    terms.extend((0..3).map(|l| (xi[l], -betas[l])));
                }
            }
            lp.add_row(terms, Sense::Le, rhs);

            if let Some(xi) = cols.xi[j.0] {
                let charged: Vec<(usize, f64)> = (0..3).map(|l| (xi[l], betas[l])).collect();
                lp.add_row(vec![(phi, 1.0)], Sense::Le, SEGMENT1_END);
                lp.add_row(vec![(phi, 1.0), (xi[0], betas[0])], Sense::Le, SEGMENT1_END);
                let mut lo = vec![(phi, 1.0)];
                lo.extend(charged.iter().copied());
                lp.add_row(lo.clone(), Sense::Ge, a.soc_target);
                lp.add_row(lo, Sense::Le, 1.0);
            }
            prev = j;
            prev_load = st.loads[k][pos];
        }

        if is_open {
            let (dep, c0) = departure(instance, g, &cols, k, prev);
            let mut terms = vec![(tk, 1.0)];
            terms.extend(negated(&dep));
            lp.add_row(terms, Sense::Ge, c0 + min_outgoing_travel(instance, g, prev));
            for &r in &st.pending {
                let d = g.delivery(r);
                let td = cols.t[d.0].unwrap();
                let mut terms = vec![(td, 1.0)];
                terms.extend(negated(&dep));
                lp.add_row(terms, Sense::Ge, c0 + min_incoming(g, d));
                lp.add_row(
                    vec![(tk, 1.0), (td, -1.0)],
                    Sense::Ge,
                    instance.requests[r].service_time + min_outgoing_travel(instance, g, d),
                );
            }
        }
        cols.phi.push(phis);
    }

    for j in g.stations() {
        let node = NodeId(j);
        let Some(tj) = cols.t[j] else { continue };
        let (station, visit) = g.station_of(node).unwrap();
        let omega = instance.stations[station].earliest_available;
        if omega > 0.0 {
            lp.add_row(vec![(tj, 1.0)], Sense::Ge, omega);
        }
        if frame.couple_stations && visit > 0 {
            let before = g.station(station, visit - 1);
            if let (Some(tb), Some(kb)) = (cols.t[before.0], st.visitor[before.0]) {
                let mut terms = vec![(tj, 1.0), (tb, -1.0)];
                terms.extend(cols.xi[before.0].unwrap().iter().map(|&c| (c, -1.0)));
                lp.add_row(terms, Sense::Ge, instance.agents[kb].station_service_time);
            }
        }
    }

    let (x, objective) = match lp.solve() {
        LpOutcome::Optimal { x, objective } => (x, objective),
        LpOutcome::Stalled => match lp.solve_with(PivotRule::Bland) {
            LpOutcome::Optimal { x, objective } => (x, objective),
            _ => return None,
        },
        _ => return None,
    };
    let get = |c: Option<usize>| c.map_or(f64::NAN, |c| x[c]);
    Some(FrameSolution {
        objective,
        t: cols.t.iter().map(|&c| get(c)).collect(),
        tau: cols.tau.iter().map(|&c| c.map_or(0.0, |c| x[c])).collect(),
        phi: cols.phi.iter().map(|p| p.iter().map(|&c| x[c]).collect()).collect(),
        energy: cols.xi.iter().map(|c| c.map_or(0.0, |xi| (0..3).map(|l| betas[l] * x[xi[l]]).sum())).collect(),
    })
}

impl FrameSolution {
    /// Turns the LP point of a complete frame into a plan: canonical segment
    /// split at stations, SoC raised to its reachable value away from
    /// stations, and agent durations recomputed from the final times.
    pub(crate) fn into_plan(
        &self,
        instance: &Instance,
        graph: &ExpandedGraph,
        routes: &[Vec<NodeId>],
        structure: &Structure,
    ) -> RoutePlan {
        let g = graph;
        let mut agents = Vec::with_capacity(routes.len());
        for (k, route) in routes.iter().enumerate() {
            let a = &instance.agents[k];
            let mut visits = vec![Visit::bare(g.start(k))];
            let mut prev = g.start(k);
            let mut prev_soc = a.soc_init;
            let mut prev_energy = 0.0;
            let mut prev_load = [0u32; 2];
            let mut depart = a.initial_delay;
            let mut duration = 0.0;
            for (pos, &j) in route.iter().enumerate() {
                let lp_soc = self.phi[k][pos];
                let reach = (prev_soc + prev_energy - arc_drop(instance, g, prev, j, prev_load)).min(1.0);
                let mut visit = Visit::bare(j);
                match g.kind(j) {
                    NodeKind::Pickup { request } | NodeKind::Delivery { request } => {
                        let t = self.t[j.0];
                        visit.time = Some(t);
                        visit.slack = Some(self.tau[j.0]);
                        visit.load = Some(structure.loads[k][pos]);
                        visit.soc = Some(reach.max(lp_soc));
                        depart = t + instance.requests[request].service_time;
                        prev_energy = 0.0;
                    }
                    NodeKind::Station { .. } => {
                        let t = self.t[j.0];
                        let charge = split_energy(lp_soc, self.energy[j.0], &instance.battery);
                        visit.time = Some(t);
                        visit.soc = Some(lp_soc);
                        visit.charge = Some(charge);
                        depart = t + a.station_service_time + charge.total_time();
                        prev_energy = self.energy[j.0];
                    }
                    NodeKind::Depot { .. } => {
                        visit.soc = Some(reach.max(lp_soc));
                        duration = depart + travel(instance, g, prev, j);
                    }
                    NodeKind::Start { .. } => unreachable!(),
                }
                prev_soc = visit.soc.unwrap();
                prev_load = structure.loads[k][pos];
                prev = j;
                visits.push(visit);
            }
            agents.push(AgentPlan { agent: k, visits, duration });
        }
        let mission = agents.iter().map(|a| a.duration).fold(0.0, f64::max);
        let mut plan = RoutePlan {
            agents,
            requests: structure
                .agent_of
                .iter()
                .map(|&k| RequestAssignment { accepted: k.is_some(), agent: k })
                .collect(),
            mission_duration: mission,
            objective: 0.0,
        };
        plan.objective = plan_objective(instance, g, &plan);
        plan
    }
}
