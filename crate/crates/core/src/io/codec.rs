//! Conversion between route plans and MILP variable values.

use std::collections::BTreeSet;

use super::solution::Solution;
use crate::error::{Error, Result};
use crate::graph::{ExpandedGraph, NodeId, NodeKind};
use crate::instance::{Instance, TimeWindowKind};
use crate::milp::MilpModel;
use crate::plan::{plan_objective, AgentPlan, Charge, RequestAssignment, RoutePlan, Visit};

/// Distance from 0 or 1 beyond which a binary value is fractional.
pub const BINARY_TOL: f64 = 1e-4;

struct Values<'a> {
    model: &'a MilpModel,
    x: Vec<f64>,
}

impl Values<'_> {
    fn set(&mut self, name: String, v: f64) -> Result<()> {
        let id = self.model.lookup(&name).ok_or_else(|| Error::Decode(format!("model has no variable {name}")))?;
        self.x[id.0] = v;
        Ok(())
    }
}

/// Variable values of `model` that represent `plan`. Quantities the plan does
/// not pin down (unvisited nodes, other agents' copies) get values that keep
/// every row satisfied.
pub fn encode_plan(
    instance: &Instance,
    graph: &ExpandedGraph,
    model: &MilpModel,
    plan: &RoutePlan,
) -> Result<Vec<f64>> {
    let g = graph;
    let kk = g.num_agents();
    let mut vals = Values { model, x: vec![0.0; model.variables().len()] };
    let mut visitor: Vec<Option<(usize, &Visit)>> = vec![None; g.num_nodes()];
    for a in &plan.agents {
        if a.agent >= kk || a.visits.first().map(|v| v.node) != Some(g.start(a.agent)) {
            return Err(Error::Decode(format!("agent {} does not start at its start node", a.agent)));
        }
        for w in a.visits.windows(2) {
            vals.set(format!("x_{}_{}_{}", a.agent, w[0].node, w[1].node), 1.0)?;
        }
        for v in &a.visits[1..] {
            visitor[v.node.0] = Some((a.agent, v));
        }
        vals.set(format!("Tk_{}", a.agent), a.duration)?;
    }
    vals.set("T".into(), plan.mission_duration)?;

    for (r, req) in instance.requests.iter().enumerate() {
        let accepted = plan.requests.get(r).is_some_and(|a| a.accepted);
        vals.set(format!("y_{r}"), if accepted { 1.0 } else { 0.0 })?;
        let (p, d) = (g.pickup(r), g.delivery(r));
        let time = |n: NodeId| visitor[n.0].and_then(|(_, v)| v.time);
        let (tp, td) = match (time(p), time(d)) {
            (Some(tp), Some(td)) => (tp, td),
            _ => (0.0, req.service_time),
        };
        vals.set(format!("t_{p}"), tp)?;
        vals.set(format!("t_{d}"), td)?;
        let active = match req.tw_kind {
            TimeWindowKind::Pickup => p,
            TimeWindowKind::Delivery => d,
        };
        let slack = |n: NodeId, t: f64| match visitor[n.0].and_then(|(_, v)| v.slack) {
            Some(s) => s,
            None if n == active => (req.tw_lo - t).max(t - req.tw_hi).max(0.0),
            None => 0.0,
        };
        let (sp, sd) = (slack(p, tp), slack(d, td));
        vals.set(format!("tau_{p}"), sp)?;
        vals.set(format!("tau_{d}"), sd)?;
        vals.set(format!("Tr_{r}"), if accepted { tp + td } else { 0.0 })?;
        vals.set(format!("Dr_{r}"), if accepted { sp + sd } else { 0.0 })?;
    }

    for i in g.stations() {
        let node = NodeId(i);
        match visitor[i] {
            Some((_, v)) => {
                vals.set(format!("t_{i}"), v.time.unwrap_or(0.0))?;
                let c = v.charge.unwrap_or(Charge { xi: [0.0; 3], z: [false; 2] });
                for l in 0..3 {
                    vals.set(format!("xi_{i}_{}", l + 1), c.xi[l])?;
                }
                for l in 0..2 {
                    vals.set(format!("z_{i}_{}", l + 1), if c.z[l] { 1.0 } else { 0.0 })?;
                }
            }
            None => {
                let omega = match g.kind(node) {
                    NodeKind::Station { station, visit: 0 } => instance.stations[station].earliest_available,
                    _ => 0.0,
                };
                vals.set(format!("t_{i}"), omega.max(0.0))?;
            }
        }
    }

    for i in g.locations() {
        let r = g.request_of(NodeId(i)).expect("location");
        let req = &instance.requests[r];
        let pickup = g.pickups().contains(&i);
        for (k, a) in instance.agents.iter().enumerate() {
            let (u1, u2) = match visitor[i] {
                Some((who, v)) if who == k => {
                    let l = v.load.unwrap_or([0, 0]);
                    (l[0] as f64, l[1] as f64)
                }
                _ if pickup => (req.passengers.min(a.cap_passengers) as f64, req.equipment.min(a.cap_equipment) as f64),
                _ => (0.0, 0.0),
            };
            vals.set(format!("u1_{i}_{k}"), u1)?;
            vals.set(format!("u2_{i}_{k}"), u2)?;
        }
    }
    for i in g.starts().end..g.num_nodes() {
        for (k, a) in instance.agents.iter().enumerate() {
            let soc = match visitor[i] {
                Some((who, v)) if who == k => v.soc.unwrap_or(a.soc_min),
                _ => a.soc_min,
            };
            vals.set(format!("phi_{i}_{k}"), soc)?;
        }
    }
    Ok(vals.x)
}

/// Reads routes from the `x` values and attaches times, loads, SoC and
/// charging from the remaining variables.
pub fn decode_solution(
    instance: &Instance,
    graph: &ExpandedGraph,
    model: &MilpModel,
    solution: &Solution,
) -> Result<RoutePlan> {
    let (values, _) = solution.to_vector(model);
    decode_values(instance, graph, model, &values)
}

pub fn decode_values(
    instance: &Instance,
    graph: &ExpandedGraph,
    model: &MilpModel,
    values: &[f64],
) -> Result<RoutePlan> {
    let g = graph;
    let kk = g.num_agents();
    let get = |name: String| -> Result<f64> {
        model.lookup(&name).map(|id| values[id.0]).ok_or_else(|| Error::Decode(format!("model has no variable {name}")))
    };
    let binary = |name: String| -> Result<bool> {
        let v = get(name.clone())?;
        if (v - v.round()).abs() > BINARY_TOL || !(-BINARY_TOL..=1.0 + BINARY_TOL).contains(&v) {
            return Err(Error::Decode(format!("{name} = {v} is not binary")));
        }
        Ok(v > 0.5)
    };

    let mut agents = Vec::with_capacity(kk);
    let mut agent_of = vec![None; g.num_requests()];
    for k in 0..kk {
        let mut arcs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for (i, j) in g.agent_arcs(k) {
            if binary(format!("x_{k}_{i}_{j}"))? {
                arcs.insert((i, j));
            }
        }
        let mut route = vec![g.start(k)];
        let mut seen = vec![false; g.num_nodes()];
        seen[g.start(k).0] = true;
        loop {
            let cur = *route.last().unwrap();
            let mut out = arcs.iter().filter(|a| a.0 == cur).map(|a| a.1);
            let Some(next) = out.next() else { break };
            if out.next().is_some() {
                return Err(Error::Decode(format!("agent {k} leaves {} more than once", g.label(cur))));
            }
            arcs.remove(&(cur, next));
            if seen[next.0] {
                return Err(Error::Decode(format!("agent {k} revisits {}", g.label(next))));
            }
            seen[next.0] = true;
            route.push(next);
        }
        if let Some(&(i, _)) = arcs.iter().next() {
            let cyclic = arcs.iter().any(|a| a.1 == i);
            let what = if cyclic { "a cycle through" } else { "a broken chain at" };
            return Err(Error::Decode(format!("agent {k} has {what} {}", g.label(i))));
        }
        let last = *route.last().unwrap();
        if route.len() > 1 && !matches!(g.kind(last), NodeKind::Depot { .. }) {
            return Err(Error::Decode(format!("route of agent {k} ends at {}", g.label(last))));
        }

        let mut visits = vec![Visit::bare(g.start(k))];
        for &n in &route[1..] {
            let mut v = Visit::bare(n);
            v.soc = Some(get(format!("phi_{n}_{k}"))?);
            match g.kind(n) {
                NodeKind::Pickup { request } | NodeKind::Delivery { request } => {
                    if matches!(g.kind(n), NodeKind::Pickup { .. }) {
                        agent_of[request] = Some(k);
                    }
                    v.time = Some(get(format!("t_{n}"))?);
                    v.slack = Some(get(format!("tau_{n}"))?);
                    let load = |name: String| -> Result<u32> {
                        let x = get(name.clone())?;
                        if (x - x.round()).abs() > BINARY_TOL || x < -BINARY_TOL {
                            return Err(Error::Decode(format!("{name} = {x} is not a load")));
                        }
                        Ok(x.round().max(0.0) as u32)
                    };
                    v.load = Some([load(format!("u1_{n}_{k}"))?, load(format!("u2_{n}_{k}"))?]);
                }
                NodeKind::Station { .. } => {
                    v.time = Some(get(format!("t_{n}"))?);
                    v.charge = Some(Charge {
                        xi: [get(format!("xi_{n}_1"))?, get(format!("xi_{n}_2"))?, get(format!("xi_{n}_3"))?],
                        z: [binary(format!("z_{n}_1"))?, binary(format!("z_{n}_2"))?],
                    });
                }
                _ => {}
            }
            visits.push(v);
        }
        agents.push(AgentPlan { agent: k, visits, duration: get(format!("Tk_{k}"))? });
    }

    let mut requests = Vec::with_capacity(g.num_requests());
    for (r, &agent) in agent_of.iter().enumerate() {
        let accepted = binary(format!("y_{r}"))?;
        if accepted != agent.is_some() {
            return Err(Error::Decode(format!("acceptance of request {r} disagrees with the routes")));
        }
        requests.push(RequestAssignment { accepted, agent });
    }
    let mut plan = RoutePlan { agents, requests, mission_duration: get("T".into())?, objective: 0.0 };
    plan.objective = plan_objective(instance, g, &plan);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::expand_graph;
    use crate::instance::fixtures::{agent, minimal, request};
    use crate::instance::{Point, Station};
    use crate::milp::build_model_on;
    use crate::plan::idle_plan;
    use crate::solver::schedule_routes;

    fn round_trip(inst: &Instance, plan: &RoutePlan) {
        let g = expand_graph(inst).unwrap();
        let model = build_model_on(inst, &g).unwrap();
        let x = encode_plan(inst, &g, &model, plan).unwrap();
        let bad: Vec<_> = model
            .violated_rows(&x, 1e-6)
            .into_iter()
            .map(|(i, v)| (model.constraints()[i].tag.to_string(), model.constraints()[i].index.clone(), v))
            .collect();
        assert!(bad.is_empty(), "{bad:?}");
        assert!(model.violated_bounds(&x, 1e-6).is_empty());
        assert!((model.objective_value(&x) - plan.objective).abs() < 1e-6);
        assert_eq!(&decode_values(inst, &g, &model, &x).unwrap(), plan);
    }

    #[test]
    fn single_chain() {
        let inst = minimal();
        let g = expand_graph(&inst).unwrap();
        let route = vec![g.pickup(0), g.delivery(0), g.depot(0)];
        let plan = schedule_routes(&inst, &g, &[route.clone()], &[true]).plan.unwrap();
        round_trip(&inst, &plan);
        let model = build_model_on(&inst, &g).unwrap();
        let x = encode_plan(&inst, &g, &model, &plan).unwrap();
        assert_eq!(decode_values(&inst, &g, &model, &x).unwrap().agents[0].route(), route);
    }

    #[test]
    fn idle_fleet() {
        let mut inst = minimal();
        inst.agents.push(agent(1, Point::new(1.0, 1.0)));
        let g = expand_graph(&inst).unwrap();
        round_trip(&inst, &idle_plan(&inst, &g));
    }

    #[test]
    fn station_chain_carries_its_charge() {
        let mut inst = minimal();
        inst.requests = vec![
            request(0, Point::new(0.0, 10.0), Point::new(0.0, 20.0)),
            request(1, Point::new(10.0, 20.0), Point::new(10.0, 10.0)),
        ];
        inst.requests[1].tw_hi = 1000.0;
        inst.stations = vec![Station { id: 0, pos: Some(Point::new(5.0, 20.0)), earliest_available: 3.0 }];
        inst.depots[0].pos = Some(Point::new(10.0, 0.0));
        inst.battery.alpha0 = 0.01;
        inst.config.duplicate_visits = 2;
        let g = expand_graph(&inst).unwrap();
        let f = g.station(0, 0);
        let route = vec![g.pickup(0), g.delivery(0), f, g.pickup(1), g.delivery(1), g.depot(0)];
        let plan = schedule_routes(&inst, &g, &[route], &[true, true]).plan.unwrap();
        round_trip(&inst, &plan);
        let model = build_model_on(&inst, &g).unwrap();
        let x = encode_plan(&inst, &g, &model, &plan).unwrap();
        let back = decode_values(&inst, &g, &model, &x).unwrap();
        assert!(back.agents[0].visits[3].charge.is_some());
    }

    #[test]
    fn rejected_request_in_selective_mode() {
        let mut inst = minimal();
        inst.requests.push(request(1, Point::new(3.0, 3.0), Point::new(4.0, 4.0)));
        let g = expand_graph(&inst).unwrap();
        let route = vec![g.pickup(1), g.delivery(1), g.depot(0)];
        let plan = schedule_routes(&inst, &g, &[route], &[false, true]).plan.unwrap();
        round_trip(&inst, &plan);
    }

    #[test]
    fn fractional_and_broken_routes_are_rejected() {
        let inst = minimal();
        let g = expand_graph(&inst).unwrap();
        let model = build_model_on(&inst, &g).unwrap();
        let set = |x: &mut Vec<f64>, name: String, v: f64| x[model.lookup(&name).unwrap().0] = v;
        let mut x = vec![0.0; model.variables().len()];
        set(&mut x, format!("x_0_{}_{}", g.start(0), g.pickup(0)), 0.5);
        let err = decode_values(&inst, &g, &model, &x).unwrap_err();
        assert!(err.to_string().contains("not binary"), "{err}");

        let mut x = vec![0.0; model.variables().len()];
        set(&mut x, format!("x_0_{}_{}", g.pickup(0), g.delivery(0)), 1.0);
        let err = decode_values(&inst, &g, &model, &x).unwrap_err();
        assert!(err.to_string().contains("broken chain"), "{err}");
    }
}
