//! Depth-first branch-and-bound over routes that are built one agent at a
//! time. A request no agent picks up is rejected; every node is bounded by the
//! schedule LP of its partial routes plus cheap bounds for unrouted requests.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::greedy::greedy_plan;
use super::schedule::{
    labels_are_prefix, min_incoming, min_outgoing_travel, schedule_structure, solve_frame, Frame, Structure,
};
use super::SolveStatus;
use crate::graph::{ExpandedGraph, NodeId, NodeKind};
use crate::instance::{Instance, TimeWindowKind};
use crate::plan::RoutePlan;

const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BnbConfig {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Single-threaded depth-first order; overrides `threads`.
    pub deterministic: bool,
    pub threads: usize,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self { node_limit: None, time_limit: None, deterministic: true, threads: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BnbResult {
    pub status: SolveStatus,
    #[serde(skip)]
    pub plan: Option<RoutePlan>,
    /// Incumbent objective; infinite without one.
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    /// Relative gap between incumbent and bound; zero once proven optimal.
    pub gap: f64,
    pub nodes: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
struct Entry {
    routes: Vec<Vec<NodeId>>,
    agent: usize,
    onboard: Vec<usize>,
    load: [u32; 2],
    used: Vec<bool>,
    /// Bound of the parent node.
    bound: f64,
}

struct Search<'a> {
    instance: &'a Instance,
    graph: &'a ExpandedGraph,
    /// Requests by decreasing priority.
    order: Vec<usize>,
    min_in: Vec<f64>,
    min_out: Vec<f64>,
    deadline: Option<Instant>,
    node_limit: Option<u64>,
    ub: AtomicU64,
    incumbent: Mutex<Option<RoutePlan>>,
    nodes: AtomicU64,
    stop: AtomicBool,
    open_bound: Mutex<f64>,
}

/// Solves to proven optimality unless a limit stops the search first.
pub fn branch_and_bound(instance: &Instance, graph: &ExpandedGraph, config: &BnbConfig) -> BnbResult {
    let started = Instant::now();
    let g = graph;
    let mut order: Vec<usize> = (0..g.num_requests()).collect();
    order.sort_by(|&a, &b| instance.requests[b].priority.total_cmp(&instance.requests[a].priority).then(a.cmp(&b)));
    let n = g.num_nodes();
    let search = Search {
        instance,
        graph,
        order,
        min_in: (0..n).map(|j| min_incoming(g, NodeId(j))).collect(),
        min_out: (0..n).map(|i| min_outgoing_travel(instance, g, NodeId(i))).collect(),
        deadline: config.time_limit.map(|d| started + d),
        node_limit: config.node_limit,
        ub: AtomicU64::new(f64::INFINITY.to_bits()),
        incumbent: Mutex::new(None),
        nodes: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        open_bound: Mutex::new(f64::INFINITY),
    };

    if let Some(plan) = greedy_plan(instance, g) {
        search.offer(plan);
    }
    let root = Entry {
        routes: vec![Vec::new(); g.num_agents()],
        agent: 0,
        onboard: Vec::new(),
        load: [0, 0],
        used: vec![false; g.num_requests()],
        bound: f64::NEG_INFINITY,
    };
    let root_bound = if g.num_agents() == 0 { f64::NEG_INFINITY } else { search.bound(&root).unwrap_or(f64::INFINITY) };

    let threads = if config.deterministic { 1 } else { config.threads.max(1) };
    if threads == 1 {
        search.dfs(root);
    } else {
        let frontier = search.frontier(root, 8 * threads);
        let queue = Mutex::new(frontier);
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| loop {
                    let next = queue.lock().unwrap().pop();
                    match next {
                        Some(e) => search.dfs(e),
                        None => break,
                    }
                });
            }
        });
    }

    let limit_hit = search.stop.load(Ordering::Relaxed);
    let plan = search.incumbent.into_inner().unwrap();
    let objective = plan.as_ref().map_or(f64::INFINITY, |p| p.objective);
    let open = search.open_bound.into_inner().unwrap();
    let bound = if limit_hit { open.max(root_bound).min(objective) } else { objective };
    let status = match (&plan, limit_hit) {
        (Some(_), false) => SolveStatus::Optimal,
        (Some(_), true) => SolveStatus::Feasible,
        (None, false) => SolveStatus::Infeasible,
        (None, true) => SolveStatus::Unknown,
    };
    let gap = match status {
        SolveStatus::Optimal => 0.0,
        SolveStatus::Feasible => ((objective - bound) / objective.abs().max(1e-9)).max(0.0),
        _ => f64::INFINITY,
    };
    BnbResult {
        status,
        plan,
        objective,
        bound,
        gap,
        nodes: search.nodes.load(Ordering::Relaxed),
        seconds: started.elapsed().as_secs_f64(),
    }
}

impl Search<'_> {
    fn upper(&self) -> f64 {
        f64::from_bits(self.ub.load(Ordering::Acquire))
    }

    fn offer(&self, plan: RoutePlan) {
        let mut inc = self.incumbent.lock().unwrap();
        if plan.objective < self.upper() - 1e-12 {
            self.ub.store(plan.objective.to_bits(), Ordering::Release);
            *inc = Some(plan);
        }
    }

    fn prunes(&self, bound: f64) -> bool {
        let ub = self.upper();
        bound >= ub - PRUNE_TOL * ub.abs().max(1.0)
    }

    /// Counts a node; `false` once a limit is reached.
    fn tick(&self) -> bool {
        if self.stop.load(Ordering::Relaxed) {
            return false;
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        let over = self.node_limit.is_some_and(|l| n > l)
            || (n % 16 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d));
        if over {
            self.stop.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    fn abandon(&self, bound: f64) {
        let mut ob = self.open_bound.lock().unwrap();
        *ob = ob.min(bound);
    }

    fn dfs(&self, root: Entry) {
        let mut stack = vec![root];
        while let Some(e) = stack.pop() {
            if !self.tick() {
                self.abandon(e.bound);
                for rest in stack.drain(..) {
                    self.abandon(rest.bound);
                }
                return;
            }
            for child in self.process(e).into_iter().rev() {
                stack.push(child);
            }
        }
    }

    /// Breadth-first expansion until `want` open nodes exist.
    fn frontier(&self, root: Entry, want: usize) -> Vec<Entry> {
        let mut queue = std::collections::VecDeque::from([root]);
        while queue.len() < want {
            let Some(e) = queue.pop_front() else { break };
            if !self.tick() {
                self.abandon(e.bound);
                break;
            }
            queue.extend(self.process(e));
        }
        let mut v: Vec<Entry> = queue.into();
        v.reverse();
        v
    }

    /// Evaluates a leaf or bounds an inner node and returns its children.
    fn process(&self, e: Entry) -> Vec<Entry> {
        if e.agent == self.graph.num_agents() {
            self.leaf(&e);
            return Vec::new();
        }
        if e.bound.is_finite() && self.prunes(e.bound) {
            return Vec::new();
        }
        match self.bound(&e) {
            Some(b) if !self.prunes(b) => self.children(&e, b),
            _ => Vec::new(),
        }
    }

    fn must_serve(&self, r: usize) -> bool {
        !self.instance.config.selective || self.instance.requests[r].force_accept
    }

    fn leaf(&self, e: &Entry) {
        if (0..self.graph.num_requests()).any(|r| !e.used[r] && self.must_serve(r)) {
            return;
        }
        let Some(structure) = Structure::check(self.instance, self.graph, &e.routes, None) else { return };
        if !labels_are_prefix(self.graph, &structure.visitor) {
            return;
        }
        if let Some(plan) = schedule_structure(self.instance, self.graph, &e.routes, &structure, true) {
            self.offer(plan);
        }
    }

    /// Earliest departure from the last node of a route prefix, ignoring
    /// windows and charging time.
    fn earliest_departure(&self, k: usize, prefix: &[NodeId]) -> f64 {
        let (inst, g) = (self.instance, self.graph);
        let a = &inst.agents[k];
        let mut prev = g.start(k);
        let mut dep = a.initial_delay;
        for &j in prefix {
            let mut t = dep + g.cost(prev, j);
            dep = match g.kind(j) {
                NodeKind::Station { station, .. } => {
                    t = t.max(inst.stations[station].earliest_available);
                    t + a.station_service_time
                }
                NodeKind::Pickup { request } | NodeKind::Delivery { request } => {
                    t + inst.requests[request].service_time
                }
                _ => t,
            };
            prev = j;
        }
        dep
    }

    /// Lower bound on every completion of `e`; `None` when the partial routes
    /// are already infeasible.
    fn bound(&self, e: &Entry) -> Option<f64> {
        let (inst, g) = (self.instance, self.graph);
        let w = &inst.config.weights;
        let a = e.agent;
        let kk = g.num_agents();
        let prefix = &e.routes[a];
        let structure = Structure::check(inst, g, &e.routes, Some(a))?;

        let current_start = if prefix.is_empty() { None } else { Some(self.earliest_departure(a, prefix)) };
        let mut starts: Vec<f64> = (a + 1..kk).map(|b| inst.agents[b].initial_delay).collect();
        starts.push(current_start.unwrap_or(inst.agents[a].initial_delay));
        starts.sort_by(f64::total_cmp);

        struct Open {
            serve: f64,
            reject: Option<f64>,
            finish: f64,
            work: f64,
        }
        let mut open = Vec::new();
        for r in 0..g.num_requests() {
            if e.used[r] {
                continue;
            }
            let req = &inst.requests[r];
            let (p, d) = (g.pickup(r), g.delivery(r));
            let mut ep = f64::INFINITY;
            for b in a..kk {
                let t = match (b == a, current_start) {
                    (true, Some(dep)) => dep + self.min_in[p.0],
                    _ => inst.agents[b].initial_delay + g.cost(g.start(b), p),
                };
                ep = ep.min(t);
            }
            let ed = ep + req.service_time + self.min_in[d.0];
            let late = match req.tw_kind {
                TimeWindowKind::Pickup => ep - req.tw_hi,
                TimeWindowKind::Delivery => ed - req.tw_hi,
            };
            let serve = req.priority * (w.epsilon * (ep + ed) + w.zeta * late.max(0.0));
            open.push(Open {
                serve,
                reject: (!self.must_serve(r)).then_some(w.eta * req.priority),
                finish: ed + req.service_time + self.min_out[d.0],
                work: 2.0 * req.service_time + self.min_in[p.0] + self.min_in[d.0],
            });
        }

        let evaluate = |forced: &[bool]| -> Option<f64> {
            let mut constant = 0.0;
            let mut floor: f64 = 0.0;
            let mut work = 0.0;
            for (o, &f) in open.iter().zip(forced) {
                match o.reject {
                    Some(rej) if !f => constant += o.serve.min(rej),
                    _ => {
                        constant += o.serve;
                        floor = floor.max(o.finish);
                        work += o.work;
                    }
                }
            }
            if work > 0.0 {
                let mut acc = 0.0;
                let mut packed = f64::INFINITY;
                for (s, t) in starts.iter().enumerate() {
                    acc += t;
                    packed = packed.min((acc + work) / (s + 1) as f64);
                }
                floor = floor.max(packed);
            }
            let frame = Frame {
                routes: &e.routes,
                structure: &structure,
                open: Some(a),
                t_floor: floor,
                couple_stations: true,
            };
            solve_frame(inst, g, &frame).map(|s| s.objective + constant)
        };

        let mut forced: Vec<bool> = open.iter().map(|o| o.reject.is_none()).collect();
        let lb = evaluate(&forced)?;
        let ub = self.upper();
        if !ub.is_finite() {
            return Some(lb);
        }
        // An optional request whose rejection alone reaches the incumbent must
        // be served by every improving completion.
        let mut more = false;
        for (o, f) in open.iter().zip(forced.iter_mut()) {
            if let Some(rej) = o.reject {
                if !*f && lb - o.serve.min(rej) + rej >= ub {
                    *f = true;
                    more = true;
                }
            }
        }
        if more {
            return evaluate(&forced).map(|b| b.max(lb));
        }
        Some(lb)
    }

    fn children(&self, e: &Entry, bound: f64) -> Vec<Entry> {
        let (inst, g) = (self.instance, self.graph);
        let k = e.agent;
        let agent = &inst.agents[k];
        let prefix = &e.routes[k];
        let last = prefix.last().copied().unwrap_or(g.start(k));
        let mut out = Vec::new();
        let extend = |node: NodeId, onboard: Vec<usize>, load: [u32; 2], used: Vec<bool>, next_agent: bool| {
            let mut routes = e.routes.clone();
            routes[k].push(node);
            Entry { routes, agent: if next_agent { k + 1 } else { k }, onboard, load, used, bound }
        };

        for (idx, &r) in e.onboard.iter().enumerate() {
            let d = g.delivery(r);
            if !g.is_agent_arc(k, last, d) {
                continue;
            }
            let req = &inst.requests[r];
            let mut onboard = e.onboard.clone();
            onboard.remove(idx);
            let load = [e.load[0] - req.passengers, e.load[1] - req.equipment];
            out.push(extend(d, onboard, load, e.used.clone(), false));
        }
        for &r in &self.order {
            if e.used[r] {
                continue;
            }
            let p = g.pickup(r);
            let req = &inst.requests[r];
            let load = [e.load[0] + req.passengers, e.load[1] + req.equipment];
            let fits = load[0] <= agent.cap_passengers
                && load[1] <= agent.cap_equipment
                && load[0] as f64 + agent.conversion * load[1] as f64 <= agent.cap_passengers as f64;
            if !fits || !g.is_agent_arc(k, last, p) {
                continue;
            }
            let mut onboard = e.onboard.clone();
            onboard.push(r);
            let mut used = e.used.clone();
            used[r] = true;
            out.push(extend(p, onboard, load, used, false));
        }
        if e.onboard.is_empty() {
            let kind = g.kind(last);
            if matches!(kind, NodeKind::Delivery { .. } | NodeKind::Station { .. }) {
                for h in 0..g.num_depots() {
                    if agent.terminal_hub.is_none_or(|t| t == h) {
                        out.push(extend(g.depot(h), Vec::new(), [0, 0], e.used.clone(), true));
                    }
                }
            }
            if matches!(kind, NodeKind::Delivery { .. }) {
                for i in 0..g.num_stations() {
                    // duplicates of one station are visited in label order along a route
                    let after = prefix.iter().rev().find_map(|&n| match g.station_of(n) {
                        Some((s, j)) if s == i => Some(j + 1),
                        _ => None,
                    });
                    for j in after.unwrap_or(0)..g.num_visits() {
                        let f = g.station(i, j);
                        if e.routes.iter().flatten().any(|&n| n == f) {
                            continue;
                        }
                        out.push(extend(f, Vec::new(), [0, 0], e.used.clone(), false));
                    }
                }
            }
        }
        if prefix.is_empty() && agent.terminal_hub.is_none() {
            out.push(Entry { agent: k + 1, bound, ..e.clone() });
        }
        out
    }
}
