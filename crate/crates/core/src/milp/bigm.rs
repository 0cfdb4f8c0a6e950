use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ExpandedGraph;
use crate::instance::Instance;

/// Big-M constants per constraint family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigM {
    /// Upper bound on every arrival and completion time of an optimal schedule.
    pub horizon: f64,
    /// Used by the timing rows.
    pub time: f64,
    /// Used by the objective linearization rows.
    pub objective: f64,
    pub overridden: bool,
    pub warnings: Vec<String>,
}

/// Derives per-family big-M values from the instance data.
///
/// The horizon starts from the latest fixed anchor an optimal schedule may
/// wait for (agent release, window opening, station release) and adds every
/// service time (pickups and deliveries each take `s^r`), one station
/// service plus a complete recharge per station node, and one maximal arc
/// per visited node plus the final leg.
pub fn compute_big_m(instance: &Instance, graph: &ExpandedGraph) -> Result<BigM> {
    let anchor = instance
        .agents
        .iter()
        .map(|a| a.initial_delay)
        .chain(instance.requests.iter().map(|r| r.tw_lo))
        .chain(instance.stations.iter().map(|s| s.earliest_available))
        .fold(0.0, f64::max);
    let services: f64 = instance.requests.iter().map(|r| 2.0 * r.service_time).sum();
    let station_service = instance.agents.iter().map(|a| a.station_service_time).fold(0.0, f64::max);
    let f = graph.stations().len() as f64;
    let l = graph.locations().len() as f64;
    let max_cost = graph.cost_table().max();
    let horizon =
        anchor + services + f * (station_service + instance.battery.full_charge_time()) + (l + f + 1.0) * max_cost;
    if !horizon.is_finite() || horizon > 1e15 {
        return Err(Error::Overflow(horizon));
    }

    let mut warnings = soundness_warnings(instance, graph);
    let (time, objective, overridden) = match instance.config.weights.big_m_override {
        Some(m) => {
            if m < horizon {
                warnings.push(format!(
                    "big-M override {m} is below the derived horizon {horizon:.3}; optimal routes may be cut off"
                ));
            } else {
                warnings.push(format!("big-M override {m} replaces derived values"));
            }
            (m, m, true)
        }
        None => (horizon, 4.0 * horizon, false),
    };
    Ok(BigM { horizon, time, objective, overridden, warnings })
}

/// The SoC rows switch off with a fixed `+1`, and the load rows with the
/// agent's own capacity. Both are exact only while no single arc drains more
/// than the lowest operational SoC and no request exceeds an agent's capacity.
fn soundness_warnings(instance: &Instance, graph: &ExpandedGraph) -> Vec<String> {
    let mut out = Vec::new();
    let b = &instance.battery;
    let q1 = instance.agents.iter().map(|a| a.cap_passengers).max().unwrap_or(0);
    let q2 = instance.agents.iter().map(|a| a.cap_equipment).max().unwrap_or(0);
    let max_drop = graph.arcs().iter().map(|&(i, j)| b.discharge(graph.cost(i, j), q1, q2)).fold(0.0, f64::max);
    let soc_min = instance.agents.iter().map(|a| a.soc_min).fold(1.0, f64::min);
    if max_drop > soc_min {
        out.push(format!(
            "largest single-arc SoC drop {max_drop:.3} exceeds the minimum SoC {soc_min:.3}; the unit relaxation of the SoC rows may exclude feasible routes"
        ));
    }
    for (r, req) in instance.requests.iter().enumerate() {
        for a in &instance.agents {
            if req.passengers > a.cap_passengers || req.equipment > a.cap_equipment {
                out.push(format!(
                    "request {r} exceeds the capacity of agent {}; its load rows may over-constrain the model",
                    a.id
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::expand_graph;
    use crate::instance::fixtures::minimal;
    use crate::instance::CostSpec;

    fn matrix_instance(c: f64) -> Instance {
        let mut inst = minimal();
        inst.requests[0].service_time = 2.0;
        inst.requests[0].tw_lo = 0.0;
        inst.agents[0].initial_delay = 0.0;
        let mut m = vec![vec![c; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        inst.costs = CostSpec::Matrix { matrix: m };
        inst
    }

    #[test]
    fn single_request_horizon() {
        // anchor 0 + services 2*2 + 3 arcs of at most 10
        let inst = matrix_instance(10.0);
        let g = expand_graph(&inst).unwrap();
        let m = compute_big_m(&inst, &g).unwrap();
        assert_eq!(m.horizon, 34.0);
        assert_eq!(m.time, 34.0);
        assert_eq!(m.objective, 136.0);
        assert!(!m.overridden);
    }

    #[test]
    fn horizon_covers_the_only_route() {
        // v -> p -> d -> h: t_p = 10, t_d = 22, back at the hub at 34
        let inst = matrix_instance(10.0);
        let g = expand_graph(&inst).unwrap();
        let m = compute_big_m(&inst, &g).unwrap();
        assert!(m.horizon >= 10.0 + 2.0 + 10.0 + 2.0 + 10.0);
    }

    #[test]
    fn override_wins() {
        let mut inst = matrix_instance(10.0);
        inst.config.weights.big_m_override = Some(1e6);
        let g = expand_graph(&inst).unwrap();
        let m = compute_big_m(&inst, &g).unwrap();
        assert_eq!((m.time, m.objective), (1e6, 1e6));
        assert!(m.overridden);
        assert!(!m.warnings.is_empty());
    }

    #[test]
    fn waiting_for_a_late_window_extends_horizon() {
        let mut inst = matrix_instance(10.0);
        inst.requests[0].tw_lo = 500.0;
        inst.requests[0].tw_hi = 600.0;
        let g = expand_graph(&inst).unwrap();
        assert_eq!(compute_big_m(&inst, &g).unwrap().horizon, 534.0);
    }

    #[test]
    fn overflow_is_reported() {
        let inst = matrix_instance(1e300);
        let g = expand_graph(&inst).unwrap();
        assert!(matches!(compute_big_m(&inst, &g), Err(Error::Overflow(_))));
    }
}
