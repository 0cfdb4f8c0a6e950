//! Materializes the routing MILP over an [`ExpandedGraph`].

use crate::error::Result;
use crate::graph::{expand_graph, ExpandedGraph, NodeId};
use crate::instance::{Instance, TimeWindowKind, SEGMENT1_END, SEGMENT2_END};

use super::bigm::{compute_big_m, BigM};
use super::model::{Constraint, Domain, MilpModel, Sense, Tag, VarClass, VarId};

/// Typed handles to every variable of the formulation.
#[derive(Debug, Clone)]
pub struct VariableCatalog {
    nodes: usize,
    agents: usize,
    x: Vec<Option<VarId>>,
    pub y: Vec<VarId>,
    t: Vec<Option<VarId>>,
    tau: Vec<Option<VarId>>,
    pub tr: Vec<VarId>,
    pub dr: Vec<VarId>,
    pub tk: Vec<VarId>,
    pub mission: VarId,
    u1: Vec<Option<VarId>>,
    u2: Vec<Option<VarId>>,
    phi: Vec<Option<VarId>>,
    xi: Vec<Option<[VarId; 3]>>,
    z: Vec<Option<[VarId; 2]>>,
}

impl VariableCatalog {
    /// Declares all variables on `model` in catalog order.
    pub fn declare(instance: &Instance, graph: &ExpandedGraph, model: &mut MilpModel) -> Self {
        let n = graph.num_nodes();
        let kk = graph.num_agents();
        let b = &instance.battery;
        let inf = f64::INFINITY;

        let mut x = vec![None; kk * n * n];
        for k in 0..kk {
            for (i, j) in graph.agent_arcs(k) {
                let id = model.add_variable(
                    format!("x_{k}_{i}_{j}"),
                    VarClass::Routing,
                    vec![k, i.0, j.0],
                    0.0,
                    1.0,
                    Domain::Binary,
                );
                x[(k * n + i.0) * n + j.0] = Some(id);
            }
        }
        let y = (0..graph.num_requests())
            .map(|r| model.add_variable(format!("y_{r}"), VarClass::Acceptance, vec![r], 0.0, 1.0, Domain::Binary))
            .collect();

        let mut t = vec![None; n];
        for i in graph.locations().chain(graph.stations()) {
            t[i] = Some(model.add_variable(format!("t_{i}"), VarClass::Arrival, vec![i], 0.0, inf, Domain::Continuous));
        }
        let mut tau = vec![None; n];
        for i in graph.locations() {
            let r = graph.request_of(NodeId(i)).expect("location");
            let active = match instance.requests[r].tw_kind {
                TimeWindowKind::Pickup => graph.pickups().contains(&i),
                TimeWindowKind::Delivery => graph.deliveries().contains(&i),
            };
            let ub = if active { inf } else { 0.0 };
            tau[i] =
                Some(model.add_variable(format!("tau_{i}"), VarClass::Slack, vec![i], 0.0, ub, Domain::Continuous));
        }
        let tr = (0..graph.num_requests())
            .map(|r| model.add_variable(format!("Tr_{r}"), VarClass::ArrivalSum, vec![r], 0.0, inf, Domain::Continuous))
            .collect();
        let dr = (0..graph.num_requests())
            .map(|r| {
                model.add_variable(format!("Dr_{r}"), VarClass::ViolationSum, vec![r], 0.0, inf, Domain::Continuous)
            })
            .collect();
        let tk = (0..kk)
            .map(|k| {
                model.add_variable(format!("Tk_{k}"), VarClass::AgentDuration, vec![k], 0.0, inf, Domain::Continuous)
            })
            .collect();
        let mission = model.add_variable("T", VarClass::MissionDuration, vec![], 0.0, inf, Domain::Continuous);

        let load_domain = if instance.config.integer_loads { Domain::Integer } else { Domain::Continuous };
        let mut u1 = vec![None; n * kk];
        let mut u2 = vec![None; n * kk];
        for i in graph.locations() {
            for (k, a) in instance.agents.iter().enumerate() {
                u1[i * kk + k] = Some(model.add_variable(
                    format!("u1_{i}_{k}"),
                    VarClass::PassengerLoad,
                    vec![i, k],
                    0.0,
                    a.cap_passengers as f64,
                    load_domain,
                ));
            }
        }
        for i in graph.locations() {
            for (k, a) in instance.agents.iter().enumerate() {
                u2[i * kk + k] = Some(model.add_variable(
                    format!("u2_{i}_{k}"),
                    VarClass::EquipmentLoad,
                    vec![i, k],
                    0.0,
                    a.cap_equipment as f64,
                    load_domain,
                ));
            }
        }
        let mut phi = vec![None; n * kk];
        for i in graph.starts().end..n {
            for k in 0..kk {
                phi[i * kk + k] = Some(model.add_variable(
                    format!("phi_{i}_{k}"),
                    VarClass::Soc,
                    vec![i, k],
                    0.0,
                    1.0,
                    Domain::Continuous,
                ));
            }
        }
        let caps = [SEGMENT1_END / b.beta1, (SEGMENT2_END - SEGMENT1_END) / b.beta2, (1.0 - SEGMENT2_END) / b.beta3];
        let mut xi = vec![None; n];
        for i in graph.stations() {
            let ids = [0, 1, 2].map(|l| {
                model.add_variable(
                    format!("xi_{i}_{}", l + 1),
                    VarClass::ChargeTime,
                    vec![i, l + 1],
                    0.0,
                    caps[l],
                    Domain::Continuous,
                )
            });
            xi[i] = Some(ids);
        }
        let mut z = vec![None; n];
        for i in graph.stations() {
            let ids = [0, 1].map(|l| {
                model.add_variable(
                    format!("z_{i}_{}", l + 1),
                    VarClass::SegmentDone,
                    vec![i, l + 1],
                    0.0,
                    1.0,
                    Domain::Binary,
                )
            });
            z[i] = Some(ids);
        }

        Self { nodes: n, agents: kk, x, y, t, tau, tr, dr, tk, mission, u1, u2, phi, xi, z }
    }

    pub fn x(&self, k: usize, i: NodeId, j: NodeId) -> Option<VarId> {
        self.x[(k * self.nodes + i.0) * self.nodes + j.0]
    }
    pub fn t(&self, i: NodeId) -> VarId {
        self.t[i.0].expect("arrival time exists for L and F")
    }
    pub fn tau(&self, i: NodeId) -> VarId {
        self.tau[i.0].expect("slack exists for L")
    }
    pub fn u1(&self, i: NodeId, k: usize) -> VarId {
        self.u1[i.0 * self.agents + k].expect("load exists for L")
    }
    pub fn u2(&self, i: NodeId, k: usize) -> VarId {
        self.u2[i.0 * self.agents + k].expect("load exists for L")
    }
    pub fn phi(&self, i: NodeId, k: usize) -> VarId {
        self.phi[i.0 * self.agents + k].expect("SoC exists outside H0")
    }
    pub fn xi(&self, i: NodeId) -> [VarId; 3] {
        self.xi[i.0].expect("charge times exist for F")
    }
    pub fn z(&self, i: NodeId) -> [VarId; 2] {
        self.z[i.0].expect("segment flags exist for F")
    }
}

/// Shared inputs of the row builders.
pub struct BuildContext<'a> {
    pub instance: &'a Instance,
    pub graph: &'a ExpandedGraph,
    pub catalog: &'a VariableCatalog,
    pub big_m: &'a BigM,
}

type Terms = Vec<(VarId, f64)>;

impl BuildContext<'_> {
    fn kk(&self) -> usize {
        self.graph.num_agents()
    }

    fn nodes(&self, r: std::ops::Range<usize>) -> impl Iterator<Item = NodeId> {
        r.map(NodeId)
    }

    /// `Σ coef·x^k_{ij}` over the given tails into `j`, skipping missing arcs.
    fn into(&self, k: usize, tails: impl IntoIterator<Item = NodeId>, j: NodeId, coef: f64) -> Terms {
        tails.into_iter().filter_map(|i| self.catalog.x(k, i, j).map(|v| (v, coef))).collect()
    }

    fn out_of(&self, k: usize, i: NodeId, heads: impl IntoIterator<Item = NodeId>, coef: f64) -> Terms {
        heads.into_iter().filter_map(|j| self.catalog.x(k, i, j).map(|v| (v, coef))).collect()
    }

    /// Every tail an agent can enter `j` from.
    fn all_into(&self, k: usize, j: NodeId, coef: f64) -> Terms {
        self.into(k, self.graph.predecessors(j).iter().copied(), j, coef)
    }

    fn all_out(&self, k: usize, i: NodeId, coef: f64) -> Terms {
        self.out_of(k, i, self.graph.successors(i).iter().copied(), coef)
    }

    fn service_at(&self, i: NodeId) -> f64 {
        self.graph.request_of(i).map_or(0.0, |r| self.instance.requests[r].service_time)
    }

    /// Hub cost as seen by the duration rows.
    fn duration_cost(&self, i: NodeId, j: NodeId) -> f64 {
        if self.instance.config.open_vrp && self.graph.depots().contains(&j.0) {
            0.0
        } else {
            self.graph.cost(i, j)
        }
    }

    /// Hub cost as seen by the SoC rows.
    fn energy_cost(&self, i: NodeId, j: NodeId) -> f64 {
        let c = &self.instance.config;
        if c.open_vrp && !c.open_vrp_soc_to_hub && self.graph.depots().contains(&j.0) {
            0.0
        } else {
            self.graph.cost(i, j)
        }
    }

    fn xi_terms(&self, i: NodeId, scale: [f64; 3]) -> Terms {
        let xi = self.catalog.xi(i);
        (0..3).map(|l| (xi[l], scale[l])).collect()
    }
}

fn row(tag: u8, index: Vec<usize>, terms: Terms, sense: Sense, rhs: f64) -> Constraint {
    Constraint::new(Tag::Eq(tag), index, terms, sense, rhs)
}

/// Objective terms with constant offset, plus the product linearizations.
pub fn build_objective(ctx: &BuildContext) -> (Terms, f64, Vec<Constraint>) {
    let (g, c, w) = (ctx.graph, ctx.catalog, &ctx.instance.config.weights);
    let m = ctx.big_m.objective;
    let mut obj = vec![(c.mission, 1.0)];
    let mut constant = 0.0;
    let mut rows = Vec::new();
    for (r, req) in ctx.instance.requests.iter().enumerate() {
        let lam = req.priority;
        obj.push((c.tr[r], lam * w.epsilon));
        obj.push((c.dr[r], lam * w.zeta));
        obj.push((c.y[r], -lam * w.eta));
        constant += lam * w.eta;

        let (p, d) = (g.pickup(r), g.delivery(r));
        for (tag, aux, a, b) in [(2u8, c.tr[r], c.t(p), c.t(d)), (4, c.dr[r], c.tau(p), c.tau(d))] {
            rows.push(row(tag, vec![r], vec![(aux, 1.0), (a, -1.0), (b, -1.0), (c.y[r], -m)], Sense::Ge, -m));
            rows.push(row(tag, vec![r], vec![(aux, 1.0), (a, -1.0), (b, -1.0)], Sense::Le, 0.0));
            rows.push(row(tag + 1, vec![r], vec![(aux, 1.0), (c.y[r], -m)], Sense::Le, 0.0));
        }
    }
    rows.sort_by_key(|r| r.tag);
    (obj, constant, rows)
}

/// Acceptance, pairing, station precedence and flow conservation.
pub fn build_flow(ctx: &BuildContext) -> Vec<Constraint> {
    let (inst, g, c) = (ctx.instance, ctx.graph, ctx.catalog);
    let kk = ctx.kk();
    let mut rows = Vec::new();

    for r in 0..g.num_requests() {
        let sense = if inst.config.selective { Sense::Le } else { Sense::Eq };
        rows.push(row(6, vec![r], vec![(c.y[r], 1.0)], sense, 1.0));
    }
    for r in 0..g.num_requests() {
        let mut t = vec![(c.y[r], -1.0)];
        for k in 0..kk {
            t.extend(ctx.all_into(k, g.pickup(r), 1.0));
        }
        rows.push(row(7, vec![r], t, Sense::Eq, 0.0));
    }
    for r in 0..g.num_requests() {
        let mut t = vec![(c.y[r], -1.0)];
        for k in 0..kk {
            t.extend(ctx.all_into(k, g.delivery(r), 1.0));
        }
        rows.push(row(8, vec![r], t, Sense::Eq, 0.0));
    }
    for r in 0..g.num_requests() {
        for k in 0..kk {
            let mut t = ctx.all_into(k, g.pickup(r), 1.0);
            t.extend(ctx.all_into(k, g.delivery(r), -1.0));
            rows.push(row(9, vec![r, k], t, Sense::Eq, 0.0));
        }
    }
    for i in 0..g.num_stations() {
        for j in 1..g.num_visits() {
            let (cur, prev) = (g.station(i, j), g.station(i, j - 1));
            let mut t = Vec::new();
            let mut p = Vec::new();
            for k in 0..kk {
                t.extend(ctx.into(k, ctx.nodes(g.deliveries()), cur, 1.0));
                t.extend(ctx.into(k, ctx.nodes(g.deliveries()), prev, -1.0));
                p.extend(ctx.into(k, ctx.nodes(g.deliveries()), prev, 1.0));
            }
            rows.push(row(10, vec![i, j], t, Sense::Le, 0.0));
            rows.push(row(10, vec![i, j], p, Sense::Le, 1.0));
        }
    }
    for k in 0..kk {
        let t = ctx.out_of(k, g.start(k), ctx.nodes(g.pickups()), 1.0);
        rows.push(row(11, vec![k], t, Sense::Le, 1.0));
    }
    for h in ctx.nodes(g.pickups()) {
        for k in 0..kk {
            let mut t = ctx.all_into(k, h, 1.0);
            t.extend(ctx.all_out(k, h, -1.0));
            rows.push(row(12, vec![h.0, k], t, Sense::Eq, 0.0));
        }
    }
    for h in ctx.nodes(g.deliveries()).chain(ctx.nodes(g.stations())) {
        for k in 0..kk {
            let mut t = ctx.all_into(k, h, 1.0);
            t.extend(ctx.all_out(k, h, -1.0));
            rows.push(row(13, vec![h.0, k], t, Sense::Eq, 0.0));
        }
    }
    for (r, req) in inst.requests.iter().enumerate() {
        if req.force_accept {
            rows.push(Constraint::new(Tag::FixY, vec![r], vec![(c.y[r], 1.0)], Sense::Eq, 1.0));
        }
    }
    rows
}

/// Arrival times, windows, station succession and durations.
pub fn build_timing(ctx: &BuildContext) -> Vec<Constraint> {
    let (inst, g, c) = (ctx.instance, ctx.graph, ctx.catalog);
    let kk = ctx.kk();
    let m = ctx.big_m.time;
    let mut rows = Vec::new();

    for j in ctx.nodes(g.pickups()) {
        let mut t = vec![(c.t(j), 1.0)];
        for (k, a) in inst.agents.iter().enumerate() {
            if let Some(x) = c.x(k, g.start(k), j) {
                t.push((x, -(a.initial_delay + g.cost(g.start(k), j))));
            }
        }
        rows.push(row(14, vec![j.0], t, Sense::Ge, 0.0));
    }

    // L -> L and L^d -> F share one form; F -> L^p adds station service and charging.
    let push_chain = |tag: u8, i: NodeId, j: NodeId, rows: &mut Vec<Constraint>| {
        let mut t = vec![(c.t(j), 1.0), (c.t(i), -1.0)];
        let station = g.station_of(i).is_some();
        if station {
            t.extend(ctx.xi_terms(i, [-1.0; 3]));
        }
        for (k, a) in inst.agents.iter().enumerate() {
            if let Some(x) = c.x(k, i, j) {
                let extra = if station { a.station_service_time } else { 0.0 };
                t.push((x, -(m + extra)));
            }
        }
        rows.push(row(tag, vec![i.0, j.0], t, Sense::Ge, ctx.service_at(i) + g.cost(i, j) - m));
    };
    for &(i, j) in g.arcs() {
        if g.locations().contains(&i.0) && g.locations().contains(&j.0) {
            push_chain(15, i, j, &mut rows);
        }
    }

    for (r, req) in inst.requests.iter().enumerate() {
        rows.push(row(
            16,
            vec![r],
            vec![(c.t(g.delivery(r)), 1.0), (c.t(g.pickup(r)), -1.0)],
            Sense::Ge,
            req.service_time,
        ));
    }
    for (r, req) in inst.requests.iter().enumerate() {
        let (tag, node) = match req.tw_kind {
            TimeWindowKind::Pickup => (17, g.pickup(r)),
            TimeWindowKind::Delivery => (18, g.delivery(r)),
        };
        rows.push(row(tag, vec![r], vec![(c.t(node), 1.0), (c.tau(node), 1.0)], Sense::Ge, req.tw_lo));
        rows.push(row(tag, vec![r], vec![(c.t(node), 1.0), (c.tau(node), -1.0)], Sense::Le, req.tw_hi));
    }
    rows.sort_by_key(|r| r.tag);

    for &(i, j) in g.arcs() {
        let ld_f = g.deliveries().contains(&i.0) && g.stations().contains(&j.0);
        let f_lp = g.stations().contains(&i.0) && g.pickups().contains(&j.0);
        if ld_f || f_lp {
            push_chain(19, i, j, &mut rows);
        }
    }

    for i in 0..g.num_stations() {
        for j in 1..g.num_visits() {
            let (cur, prev) = (g.station(i, j), g.station(i, j - 1));
            let mut t = vec![(c.t(cur), 1.0), (c.t(prev), -1.0)];
            t.extend(ctx.xi_terms(prev, [-1.0; 3]));
            for (k, a) in inst.agents.iter().enumerate() {
                t.extend(ctx.into(k, ctx.nodes(g.deliveries()), prev, -(a.station_service_time + m)));
                t.extend(ctx.into(k, ctx.nodes(g.deliveries()), cur, -m));
            }
            rows.push(row(20, vec![i, j], t, Sense::Ge, -2.0 * m));
        }
    }
    for (k, a) in inst.agents.iter().enumerate() {
        rows.push(row(21, vec![k], vec![(c.tk[k], 1.0)], Sense::Le, a.max_duration));
    }
    for i in ctx.nodes(g.deliveries()) {
        for k in 0..kk {
            let mut t = vec![(c.tk[k], 1.0), (c.t(i), -1.0)];
            for h in ctx.nodes(g.depots()) {
                if let Some(x) = c.x(k, i, h) {
                    t.push((x, -(ctx.duration_cost(i, h) + m)));
                }
            }
            rows.push(row(22, vec![i.0, k], t, Sense::Ge, ctx.service_at(i) - m));
        }
    }
    for i in ctx.nodes(g.stations()) {
        for (k, a) in inst.agents.iter().enumerate() {
            let mut t = vec![(c.tk[k], 1.0), (c.t(i), -1.0)];
            t.extend(ctx.xi_terms(i, [-1.0; 3]));
            for h in ctx.nodes(g.depots()) {
                if let Some(x) = c.x(k, i, h) {
                    t.push((x, -(ctx.duration_cost(i, h) + m)));
                }
            }
            rows.push(row(23, vec![i.0, k], t, Sense::Ge, a.station_service_time - m));
        }
    }
    for k in 0..kk {
        rows.push(row(24, vec![k], vec![(c.mission, 1.0), (c.tk[k], -1.0)], Sense::Ge, 0.0));
    }
    for (i, s) in inst.stations.iter().enumerate() {
        if s.earliest_available > 0.0 {
            let f = g.station(i, 0);
            rows.push(Constraint::new(Tag::Omega, vec![i], vec![(c.t(f), 1.0)], Sense::Ge, s.earliest_available));
        }
    }
    rows
}

/// Passenger, equipment and configurable-capacity rows.
pub fn build_capacity(ctx: &BuildContext) -> Vec<Constraint> {
    let (inst, g, c) = (ctx.instance, ctx.graph, ctx.catalog);
    let mut rows = Vec::new();
    let l_arcs: Vec<_> = g
        .arcs()
        .iter()
        .copied()
        .filter(|(i, j)| g.locations().contains(&i.0) && g.locations().contains(&j.0))
        .collect();

    for (base, dim) in [(25u8, 0usize), (29, 1)] {
        let cap = |k: usize| {
            let a = &inst.agents[k];
            if dim == 0 {
                a.cap_passengers as f64
            } else {
                a.cap_equipment as f64
            }
        };
        let demand = |r: usize| {
            let q = &inst.requests[r];
            if dim == 0 {
                q.passengers as f64
            } else {
                q.equipment as f64
            }
        };
        let u = |i: NodeId, k: usize| if dim == 0 { c.u1(i, k) } else { c.u2(i, k) };

        for j in ctx.nodes(g.pickups()) {
            for k in 0..ctx.kk() {
                let q = cap(k);
                let mut t = vec![(u(j, k), 1.0)];
                t.extend(ctx.into(k, [g.start(k)], j, -q));
                t.extend(ctx.into(k, ctx.nodes(g.stations()), j, -q));
                let r = g.request_of(j).expect("pickup");
                rows.push(row(base, vec![j.0, k], t, Sense::Ge, demand(r) - q));
            }
        }
        for &(i, j) in &l_arcs {
            for k in 0..ctx.kk() {
                let q = cap(k);
                let x = c.x(k, i, j).expect("L arcs exist for every agent");
                let r = g.request_of(j).expect("location");
                let rhs = g.load_sign(j) as f64 * demand(r) - q;
                rows.push(row(
                    base + 1,
                    vec![i.0, j.0, k],
                    vec![(u(j, k), 1.0), (u(i, k), -1.0), (x, -q)],
                    Sense::Ge,
                    rhs,
                ));
            }
        }
        for i in ctx.nodes(g.deliveries()) {
            for k in 0..ctx.kk() {
                let q = cap(k);
                let mut t = vec![(u(i, k), 1.0)];
                t.extend(ctx.out_of(k, i, ctx.nodes(g.stations()).chain(ctx.nodes(g.depots())), q));
                rows.push(row(base + 2, vec![i.0, k], t, Sense::Le, q));
            }
        }
        for i in ctx.nodes(g.locations()) {
            for k in 0..ctx.kk() {
                rows.push(row(base + 3, vec![i.0, k], vec![(u(i, k), 1.0)], Sense::Le, cap(k)));
            }
        }
    }

    for i in ctx.nodes(g.pickups()) {
        for (k, a) in inst.agents.iter().enumerate() {
            let qt = a.combined_capacity();
            let mut t = vec![(c.u1(i, k), 1.0), (c.u2(i, k), a.conversion)];
            t.extend(ctx.out_of(k, i, ctx.nodes(g.locations()), qt));
            rows.push(row(33, vec![i.0, k], t, Sense::Le, a.cap_passengers as f64 + qt));
        }
    }
    rows
}

/// State-of-charge propagation and piecewise-linear charging.
pub fn build_energy(ctx: &BuildContext) -> Vec<Constraint> {
    let (inst, g, c) = (ctx.instance, ctx.graph, ctx.catalog);
    let b = &inst.battery;
    let betas = b.betas();
    let kk = ctx.kk();
    let mut rows = Vec::new();

    for j in ctx.nodes(g.pickups()) {
        for (k, a) in inst.agents.iter().enumerate() {
            if let Some(x) = c.x(k, g.start(k), j) {
                let rhs = a.soc_init - b.alpha0 * g.cost(g.start(k), j) + 1.0;
                rows.push(row(34, vec![j.0, k], vec![(c.phi(j, k), 1.0), (x, 1.0)], Sense::Le, rhs));
            }
        }
    }
    for &(i, j) in g.arcs() {
        if !(g.locations().contains(&i.0) && g.locations().contains(&j.0)) {
            continue;
        }
        let cost = g.cost(i, j);
        for k in 0..kk {
            let x = c.x(k, i, j).expect("L arcs exist for every agent");
            let t = vec![
                (c.phi(j, k), 1.0),
                (c.phi(i, k), -1.0),
                (c.u1(i, k), b.alpha1 * cost),
                (c.u2(i, k), b.alpha2 * cost),
                (x, 1.0),
            ];
            rows.push(row(35, vec![i.0, j.0, k], t, Sense::Le, 1.0 - b.alpha0 * cost));
        }
    }
    for &(i, j) in g.arcs() {
        if !(g.deliveries().contains(&i.0) && (g.stations().contains(&j.0) || g.depots().contains(&j.0))) {
            continue;
        }
        let cost = ctx.energy_cost(i, j);
        for k in 0..kk {
            let x = c.x(k, i, j).expect("L^d arcs exist for every agent");
            let t = vec![(c.phi(j, k), 1.0), (c.phi(i, k), -1.0), (x, 1.0)];
            rows.push(row(36, vec![i.0, j.0, k], t, Sense::Le, 1.0 - b.alpha0 * cost));
        }
    }
    let leave =
        |k: usize, i: NodeId, coef: f64| ctx.out_of(k, i, ctx.nodes(g.pickups()).chain(ctx.nodes(g.depots())), coef);
    for i in ctx.nodes(g.stations()) {
        for (k, a) in inst.agents.iter().enumerate() {
            let mut t = vec![(c.phi(i, k), 1.0)];
            t.extend(ctx.xi_terms(i, betas));
            t.extend(leave(k, i, -1.0));
            rows.push(row(37, vec![i.0, k], t, Sense::Ge, a.soc_target - 1.0));
        }
    }
    for i in ctx.nodes(g.stations()) {
        for k in 0..kk {
            let mut t = vec![(c.phi(i, k), 1.0)];
            t.extend(ctx.xi_terms(i, betas));
            t.extend(leave(k, i, 1.0));
            rows.push(row(38, vec![i.0, k], t, Sense::Le, 2.0));
        }
    }
    for &(i, j) in g.arcs() {
        if !g.stations().contains(&i.0) {
            continue;
        }
        let cost = ctx.energy_cost(i, j);
        for k in 0..kk {
            let x = c.x(k, i, j).expect("F arcs exist for every agent");
            let mut t = vec![(c.phi(j, k), 1.0), (c.phi(i, k), -1.0), (x, 1.0)];
            t.extend(ctx.xi_terms(i, betas.map(|v| -v)));
            rows.push(row(39, vec![i.0, j.0, k], t, Sense::Le, 1.0 - b.alpha0 * cost));
        }
    }
    for i in g.locations().start..g.num_nodes() {
        for (k, a) in inst.agents.iter().enumerate() {
            rows.push(row(40, vec![i, k], vec![(c.phi(NodeId(i), k), 1.0)], Sense::Ge, a.soc_min));
        }
    }

    let s1 = SEGMENT1_END;
    let s2 = SEGMENT2_END;
    for j in ctx.nodes(g.stations()) {
        let xi = c.xi(j);
        let z = c.z(j);
        for k in 0..kk {
            let phi = c.phi(j, k);
            let enter = |coef: f64| ctx.into(k, ctx.nodes(g.deliveries()), j, coef);
            let with = |mut t: Terms, coef: f64| {
                t.extend(enter(coef));
                t
            };
            let idx = vec![j.0, k];
            rows.push(row(41, idx.clone(), with(vec![(phi, 1.0)], 1.0), Sense::Le, s1 + 1.0));
            rows.push(row(41, idx.clone(), with(vec![(phi, 1.0), (xi[0], betas[0])], 1.0), Sense::Le, s1 + 1.0));
            rows.push(row(
                41,
                idx.clone(),
                with(vec![(phi, 1.0), (xi[0], betas[0]), (z[0], -s1)], -1.0),
                Sense::Ge,
                -1.0,
            ));
            rows.push(row(
                41,
                idx.clone(),
                with(vec![(phi, 1.0), (xi[0], betas[0]), (xi[1], betas[1])], 1.0),
                Sense::Le,
                s2 + 1.0,
            ));
            rows.push(row(
                41,
                idx,
                with(vec![(phi, 1.0), (xi[0], betas[0]), (xi[1], betas[1]), (z[0], -s1), (z[1], -(s2 - s1))], -1.0),
                Sense::Ge,
                -1.0,
            ));
        }
        let mut visits = Vec::new();
        for k in 0..kk {
            visits.extend(ctx.into(k, ctx.nodes(g.deliveries()), j, 1.0));
        }
        let mut t = vec![(xi[1], betas[1]), (z[0], -(s2 - s1))];
        t.extend(visits.iter().copied());
        rows.push(row(41, vec![j.0], t, Sense::Le, 1.0));
        let mut t = vec![(xi[2], betas[2]), (z[1], -(1.0 - s2))];
        t.extend(visits);
        rows.push(row(41, vec![j.0], t, Sense::Le, 1.0));
    }
    for j in ctx.nodes(g.stations()) {
        let z = c.z(j);
        rows.push(row(42, vec![j.0], vec![(z[1], 1.0), (z[0], -1.0)], Sense::Le, 0.0));
    }
    rows
}

/// Terminal-hub rows of the multi-depot variant.
pub fn build_hubs(ctx: &BuildContext) -> Vec<Constraint> {
    let g = ctx.graph;
    let mut rows = Vec::new();
    for (k, a) in ctx.instance.agents.iter().enumerate() {
        if let Some(h) = a.terminal_hub {
            let hub = g.depot(h);
            let t = ctx.into(k, ctx.nodes(g.deliveries()).chain(ctx.nodes(g.stations())), hub, 1.0);
            rows.push(Constraint::new(Tag::Hub, vec![k], t, Sense::Eq, 1.0));
        }
    }
    rows
}

/// Builds the complete model of a validated instance.
pub fn build_model(instance: &Instance) -> Result<MilpModel> {
    let graph = expand_graph(instance)?;
    build_model_on(instance, &graph)
}

pub fn build_model_on(instance: &Instance, graph: &ExpandedGraph) -> Result<MilpModel> {
    let big_m = compute_big_m(instance, graph)?;
    let name = instance.meta.name.clone().unwrap_or_else(|| "emdarp".to_string());
    let mut model = MilpModel::new(sanitize(&name));
    let catalog = VariableCatalog::declare(instance, graph, &mut model);
    let ctx = BuildContext { instance, graph, catalog: &catalog, big_m: &big_m };

    let (obj, constant, lin) = build_objective(&ctx);
    model.set_objective(obj, constant);
    for c in lin
        .into_iter()
        .chain(build_flow(&ctx))
        .chain(build_timing(&ctx))
        .chain(build_capacity(&ctx))
        .chain(build_energy(&ctx))
        .chain(build_hubs(&ctx))
    {
        model.add_constraint(c);
    }
    model.sort_constraints();
    model.warnings = big_m.warnings;
    Ok(model)
}

fn sanitize(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_graphic() { c } else { '_' }).collect();
    if s.is_empty() {
        "emdarp".to_string()
    } else {
        s
    }
}
