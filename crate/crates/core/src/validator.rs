//! Independent feasibility check of a route plan against the instance data.

use std::collections::BTreeMap;

use serde::Serialize;

pub use crate::charging::charge_curve;
use crate::error::{Error, Result};
use crate::graph::{ExpandedGraph, NodeId, NodeKind};
use crate::instance::{Instance, TimeWindowKind, SEGMENT1_END, SEGMENT2_END};
use crate::plan::RoutePlan;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Constraint family, e.g. `soc-bounds`.
    pub check: String,
    pub index: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// Amount by which the row is missed.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FamilyCount {
    pub checked: usize,
    pub violated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub recomputed_objective: f64,
    /// Reported minus recomputed objective.
    pub objective_delta: f64,
    pub families: BTreeMap<String, FamilyCount>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

struct Checker {
    tol: f64,
    report: ValidationReport,
}

impl Checker {
    fn count(&mut self, check: &str) -> &mut FamilyCount {
        self.report.families.entry(check.to_string()).or_default()
    }

    fn fail(&mut self, check: &str, index: Vec<usize>, lhs: f64, rhs: f64, magnitude: f64) {
        self.count(check).violated += 1;
        self.report.violations.push(Violation { check: check.to_string(), index, lhs, rhs, magnitude });
    }

    /// `lhs ≤ rhs` within tolerance.
    fn le(&mut self, check: &str, index: Vec<usize>, lhs: f64, rhs: f64) {
        self.count(check).checked += 1;
        if !(lhs <= rhs + self.tol) {
            self.fail(check, index, lhs, rhs, lhs - rhs);
        }
    }

    fn ge(&mut self, check: &str, index: Vec<usize>, lhs: f64, rhs: f64) {
        self.count(check).checked += 1;
        if !(lhs >= rhs - self.tol) {
            self.fail(check, index, lhs, rhs, rhs - lhs);
        }
    }

    /// Exact condition; failures are recorded with magnitude 1.
    fn holds(&mut self, check: &str, index: Vec<usize>, ok: bool) {
        self.count(check).checked += 1;
        if !ok {
            self.fail(check, index, 0.0, 0.0, 1.0);
        }
    }
}

fn hub_travel(instance: &Instance, g: &ExpandedGraph, i: NodeId, j: NodeId) -> f64 {
    if instance.config.open_vrp && g.depots().contains(&j.0) {
        0.0
    } else {
        g.cost(i, j)
    }
}

fn hub_energy(instance: &Instance, g: &ExpandedGraph, i: NodeId, j: NodeId) -> f64 {
    let c = &instance.config;
    if c.open_vrp && !c.open_vrp_soc_to_hub && g.depots().contains(&j.0) {
        0.0
    } else {
        g.cost(i, j)
    }
}

/// Checks `plan` constraint by constraint and recomputes its objective.
///
/// Fails only when the plan cannot be read at all: wrong agent or request
/// counts, or node ids outside the graph.
pub fn validate(instance: &Instance, graph: &ExpandedGraph, plan: &RoutePlan, tol: f64) -> Result<ValidationReport> {
    let g = graph;
    if plan.agents.len() != g.num_agents() || plan.requests.len() != g.num_requests() {
        return Err(Error::Decode(format!(
            "plan has {} agents and {} requests, instance has {} and {}",
            plan.agents.len(),
            plan.requests.len(),
            g.num_agents(),
            g.num_requests()
        )));
    }
    for (k, a) in plan.agents.iter().enumerate() {
        if a.agent != k {
            return Err(Error::Decode(format!("agent entry {k} is labelled {}", a.agent)));
        }
        if let Some(v) = a.visits.iter().find(|v| !g.contains(v.node)) {
            return Err(Error::Decode(format!("agent {k} visits unknown node {}", v.node)));
        }
    }

    let mut c = Checker {
        tol,
        report: ValidationReport {
            violations: Vec::new(),
            recomputed_objective: 0.0,
            objective_delta: 0.0,
            families: BTreeMap::new(),
        },
    };
    let w = &instance.config.weights;
    let betas = instance.battery.betas();
    let mut visitor: Vec<Option<(usize, usize)>> = vec![None; g.num_nodes()];
    let mut durations = vec![0.0; g.num_agents()];

    for (k, a) in plan.agents.iter().enumerate() {
        let agent = &instance.agents[k];
        let visits = &a.visits;
        c.holds("route-start", vec![k], visits.first().map(|v| v.node) == Some(g.start(k)));
        if visits.first().map(|v| v.node) != Some(g.start(k)) {
            continue;
        }
        if a.is_idle() {
            c.holds("hub", vec![k], agent.terminal_hub.is_none());
            c.ge("duration", vec![k], a.duration, 0.0);
            continue;
        }

        let mut load = [0u32; 2];
        let mut onboard: Vec<usize> = Vec::new();
        let mut prev = g.start(k);
        let mut depart = agent.initial_delay;
        let mut soc = agent.soc_init;
        let mut gain = 0.0;
        let last = visits.len() - 1;
        for (pos, v) in visits.iter().enumerate().skip(1) {
            let j = v.node;
            let idx = vec![k, j.0];
            c.holds("arc", vec![k, prev.0, j.0], g.is_agent_arc(k, prev, j));
            let is_depot = matches!(g.kind(j), NodeKind::Depot { .. });
            if !is_depot {
                let first = visitor[j.0].is_none();
                c.holds("degree", vec![j.0], first);
                if first {
                    visitor[j.0] = Some((k, pos));
                }
            }
            c.holds("depot-last", idx.clone(), is_depot == (pos == last));

            // energy on the arc into j uses the load leaving prev
            let drop = instance.battery.alpha0 * hub_energy(instance, g, prev, j)
                + g.cost(prev, j)
                    * (instance.battery.alpha1 * load[0] as f64 + instance.battery.alpha2 * load[1] as f64);
            let arrival = match v.soc {
                Some(phi) => {
                    let family = if pos == 1 { "soc-initial" } else { "soc-recursion" };
                    c.le(family, idx.clone(), phi, soc + gain - drop);
                    c.ge("soc-bounds", idx.clone(), phi, agent.soc_min);
                    c.le("soc-bounds", idx.clone(), phi, 1.0);
                    phi
                }
                None => {
                    c.holds("field", idx.clone(), false);
                    soc + gain - drop
                }
            };
            soc = arrival;
            gain = 0.0;

            let travel = hub_travel(instance, g, prev, j);
            match g.kind(j) {
                NodeKind::Pickup { request } | NodeKind::Delivery { request } => {
                    let req = &instance.requests[request];
                    let pickup = matches!(g.kind(j), NodeKind::Pickup { .. });
                    if pickup {
                        load[0] += req.passengers;
                        load[1] += req.equipment;
                        onboard.push(request);
                        c.le("capacity", idx.clone(), load[0] as f64, agent.cap_passengers as f64);
                        c.le("capacity", idx.clone(), load[1] as f64, agent.cap_equipment as f64);
                        c.le(
                            "combined-capacity",
                            idx.clone(),
                            load[0] as f64 + agent.conversion * load[1] as f64,
                            agent.cap_passengers as f64,
                        );
                    } else {
                        let was = onboard.iter().position(|&r| r == request);
                        c.holds("precedence", vec![request], was.is_some());
                        if let Some(p) = was {
                            onboard.remove(p);
                            load[0] -= req.passengers;
                            load[1] -= req.equipment;
                        }
                    }
                    c.holds("load", idx.clone(), v.load == Some(load));
                    let Some(t) = v.time else {
                        c.holds("field", idx.clone(), false);
                        continue;
                    };
                    c.ge("travel-time", idx.clone(), t, depart + travel);
                    let active = match req.tw_kind {
                        TimeWindowKind::Pickup => pickup,
                        TimeWindowKind::Delivery => !pickup,
                    };
                    let slack = v.slack.unwrap_or(0.0);
                    if active {
                        c.ge("time-window", idx.clone(), t + slack, req.tw_lo);
                        c.le("time-window", idx.clone(), t - slack, req.tw_hi);
                        c.ge("time-window", idx.clone(), slack, 0.0);
                    } else {
                        c.le("time-window", idx.clone(), slack.abs(), 0.0);
                    }
                    depart = t + req.service_time;
                    prev = j;
                }
                NodeKind::Station { station, .. } => {
                    c.holds("empty-entry", idx.clone(), onboard.is_empty());
                    let Some(t) = v.time else {
                        c.holds("field", idx.clone(), false);
                        continue;
                    };
                    c.ge("travel-time", idx.clone(), t, depart + travel);
                    c.ge("release", idx.clone(), t, instance.stations[station].earliest_available);
                    let Some(ch) = v.charge else {
                        c.holds("field", idx.clone(), false);
                        depart = t + agent.station_service_time;
                        prev = j;
                        continue;
                    };
                    c.le("charge-arrival", idx.clone(), arrival, SEGMENT1_END);
                    let x = ch.xi;
                    let z = ch.z.map(|b| if b { 1.0 } else { 0.0 });
                    for l in 0..3 {
                        c.ge("charge-segments", idx.clone(), x[l], 0.0);
                    }
                    let after1 = arrival + betas[0] * x[0];
                    let after2 = after1 + betas[1] * x[1];
                    let after3 = after2 + betas[2] * x[2];
                    c.le("charge-segments", idx.clone(), after1, SEGMENT1_END);
                    c.ge("charge-segments", idx.clone(), after1, SEGMENT1_END * z[0]);
                    c.le("charge-segments", idx.clone(), after2, SEGMENT2_END);
                    c.ge(
                        "charge-segments",
                        idx.clone(),
                        after2,
                        SEGMENT1_END * z[0] + (SEGMENT2_END - SEGMENT1_END) * z[1],
                    );
                    c.le("charge-segments", idx.clone(), betas[1] * x[1], (SEGMENT2_END - SEGMENT1_END) * z[0]);
                    c.le("charge-segments", idx.clone(), betas[2] * x[2], (1.0 - SEGMENT2_END) * z[1]);
                    c.le("charge-segments", idx.clone(), z[1], z[0]);
                    c.ge("charge-target", idx.clone(), after3, agent.soc_target);
                    c.le("charge-ceiling", idx.clone(), after3, 1.0);
                    let total = ch.total_time();
                    if (0.0..=SEGMENT1_END).contains(&arrival) && total.is_finite() && total >= 0.0 {
                        let curve = charge_curve(arrival, total, &instance.battery)?;
                        c.le("charge-curve", idx.clone(), (curve.final_soc - after3).abs(), 0.0);
                    }
                    gain = after3 - arrival;
                    depart = t + agent.station_service_time + total;
                    prev = j;
                }
                NodeKind::Depot { depot } => {
                    c.holds("empty-entry", idx.clone(), onboard.is_empty());
                    c.holds("hub", idx.clone(), agent.terminal_hub.is_none_or(|h| h == depot));
                    durations[k] = depart + travel;
                }
                NodeKind::Start { .. } => c.holds("arc", idx, false),
            }
        }
        c.holds("depot-last", vec![k], matches!(g.kind(visits[last].node), NodeKind::Depot { .. }));
        c.ge("duration", vec![k], a.duration, durations[k]);
        c.le("duration-cap", vec![k], a.duration, agent.max_duration);
        c.ge("mission", vec![k], plan.mission_duration, a.duration);
    }

    let time_of = |n: NodeId| visitor[n.0].and_then(|(k, pos)| plan.agents[k].visits[pos].time);
    let mut objective = durations.iter().copied().fold(0.0, f64::max);
    for (r, req) in instance.requests.iter().enumerate() {
        let (p, d) = (g.pickup(r), g.delivery(r));
        let assigned = plan.requests[r];
        let served = visitor[p.0].is_some() || visitor[d.0].is_some();
        c.holds("acceptance", vec![r], assigned.accepted == served);
        c.holds("acceptance", vec![r], assigned.accepted || (instance.config.selective && !req.force_accept));
        if !assigned.accepted {
            objective += req.priority * w.eta;
            continue;
        }
        let (vp, vd) = (visitor[p.0], visitor[d.0]);
        let same = matches!((vp, vd), (Some((a, i)), Some((b, j))) if a == b && i < j && assigned.agent == Some(a));
        c.holds("pairing", vec![r], same);
        if let (Some(tp), Some(td)) = (time_of(p), time_of(d)) {
            c.ge("precedence", vec![r], td - tp, req.service_time);
            let t_active = match req.tw_kind {
                TimeWindowKind::Pickup => tp,
                TimeWindowKind::Delivery => td,
            };
            let late = (req.tw_lo - t_active).max(t_active - req.tw_hi).max(0.0);
            objective += req.priority * (w.epsilon * (tp + td) + w.zeta * late);
        }
    }

    for i in 0..g.num_stations() {
        for j in 1..g.num_visits() {
            let (cur, prev) = (g.station(i, j), g.station(i, j - 1));
            let Some((k, pos)) = visitor[cur.0] else { continue };
            let Some((kp, pp)) = visitor[prev.0] else {
                c.holds("station-order", vec![i, j], false);
                continue;
            };
            let before = &plan.agents[kp].visits[pp];
            let after = &plan.agents[k].visits[pos];
            if let (Some(t0), Some(t1)) = (before.time, after.time) {
                let charge = before.charge.map_or(0.0, |ch| ch.total_time());
                c.ge("station-order", vec![i, j], t1, t0 + instance.agents[kp].station_service_time + charge);
            }
        }
    }

    c.report.recomputed_objective = objective;
    c.report.objective_delta = plan.objective - objective;
    c.le("objective", Vec::new(), c.report.objective_delta.abs(), 0.0);
    Ok(c.report)
}
