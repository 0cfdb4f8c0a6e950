//! Declarative problem description and its on-disk schema.
//!
//! An instance document is a single JSON object. Field names are part of the
//! file format and must not be renamed; unknown keys are rejected everywhere.
//!
//! ```json
//! {
//!   "meta":     { "time_unit": "minutes" },
//!   "requests": [ { "id": 0, "pickup": [0, 0], "delivery": [300, 400], "passengers": 1,
//!                   "equipment": 0, "service_time": 1, "tw_kind": "pickup",
//!                   "tw_lo": 0, "tw_hi": 30, "priority": 1 } ],
//!   "agents":   [ { "id": 0, "start": [0, 0], "initial_delay": 0, "cap_passengers": 6,
//!                   "cap_equipment": 2, "conversion": 2, "max_duration": 480,
//!                   "station_service_time": 2, "soc_min": 0.25, "soc_init": 1.0,
//!                   "soc_target": 0.85 } ],
//!   "stations": [],
//!   "depots":   [ { "id": 0, "pos": [0, 0] } ],
//!   "costs":    { "mode": "euclidean" },
//!   "battery":  { "alpha0": 0.005, "alpha1": 0.0001, "alpha2": 0.0002,
//!                 "beta1": 0.05, "beta2": 0.02, "beta3": 0.01 },
//!   "config":   { "duplicate_visits": 0, "selective": true, "open_vrp": false,
//!                 "weights": { "epsilon": 0.001, "zeta": 1.0, "eta": 10000.0 } }
//! }
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper SoC limits of the first two charging segments.
pub const SEGMENT1_END: f64 = 0.85;
pub const SEGMENT2_END: f64 = 0.95;

/// A planar position in meters, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Seconds,
    #[default]
    Minutes,
    Hours,
}

impl TimeUnit {
    /// Number of seconds in one unit.
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::Seconds => 1.0,
            TimeUnit::Minutes => 60.0,
            TimeUnit::Hours => 3600.0,
        }
    }
}

/// Which end of a request carries its time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeWindowKind {
    Pickup,
    Delivery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickup: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delivery: Option<Point>,
    pub passengers: u32,
    pub equipment: u32,
    pub service_time: f64,
    pub tw_kind: TimeWindowKind,
    pub tw_lo: f64,
    pub tw_hi: f64,
    pub priority: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub force_accept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agent {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Point>,
    pub initial_delay: f64,
    pub cap_passengers: u32,
    pub cap_equipment: u32,
    pub conversion: f64,
    pub max_duration: f64,
    pub station_service_time: f64,
    pub soc_min: f64,
    pub soc_init: f64,
    pub soc_target: f64,
    /// Depot id this agent must finish at (multi-depot variant).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_hub: Option<usize>,
}

impl Agent {
    /// Combined bound `Q1 + γ·Q2` used to switch off the configurable-capacity row.
    pub fn combined_capacity(&self) -> f64 {
        self.cap_passengers as f64 + self.conversion * self.cap_equipment as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryModel {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl BatteryModel {
    pub fn betas(&self) -> [f64; 3] {
        [self.beta1, self.beta2, self.beta3]
    }

    /// SoC drop for travelling `cost` time units carrying the given load.
    pub fn discharge(&self, cost: f64, passengers: u32, equipment: u32) -> f64 {
        self.alpha0 * cost + self.alpha1 * cost * passengers as f64 + self.alpha2 * cost * equipment as f64
    }

    /// Time needed to charge through all three segments from empty.
    pub fn full_charge_time(&self) -> f64 {
        SEGMENT1_END / self.beta1 + (SEGMENT2_END - SEGMENT1_END) / self.beta2 + (1.0 - SEGMENT2_END) / self.beta3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Point>,
    #[serde(default)]
    pub earliest_available: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Depot {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum CostSpec {
    /// Straight-line distance at 1 m/s, converted to the document's time unit.
    Euclidean,
    /// Explicit travel times over the physical nodes, ordered as
    /// agent starts, pickups, deliveries, stations, depots.
    Matrix { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub epsilon: f64,
    pub zeta: f64,
    pub eta: f64,
    #[serde(default, rename = "big_m", skip_serializing_if = "Option::is_none")]
    pub big_m_override: Option<f64>,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self { epsilon: 1e-3, zeta: 1.0, eta: 1e4, big_m_override: None }
    }
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub duplicate_visits: usize,
    pub selective: bool,
    pub open_vrp: bool,
    #[serde(default)]
    pub weights: ObjectiveWeights,
    /// Keep the real discharge on arcs into final depots in open mode.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub open_vrp_soc_to_hub: bool,
    /// Declare load variables integer; `false` relaxes them to continuous.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub integer_loads: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            duplicate_visits: 0,
            selective: true,
            open_vrp: false,
            weights: ObjectiveWeights::default(),
            open_vrp_soc_to_hub: true,
            integer_loads: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default)]
    pub time_unit: TimeUnit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    #[serde(default)]
    pub meta: Meta,
    pub requests: Vec<Request>,
    pub agents: Vec<Agent>,
    #[serde(default)]
    pub stations: Vec<Station>,
    #[serde(default)]
    pub depots: Vec<Depot>,
    pub costs: CostSpec,
    pub battery: BatteryModel,
    pub config: ModelConfig,
}

/// Reads and validates an instance document.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Instance::from_json(&text)
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let instance: Instance = serde_json::from_str(text)?;
        instance.validate()?;
        Ok(instance)
    }

    /// Pretty JSON with a trailing newline; stable for identical instances.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn num_requests(&self) -> usize {
        self.requests.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_stations(&self) -> usize {
        self.stations.len()
    }

    /// Number of physical (non-duplicated) nodes the cost matrix ranges over.
    pub fn num_physical_nodes(&self) -> usize {
        self.agents.len() + 2 * self.requests.len() + self.stations.len() + self.depots.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (idx, r) in self.requests.iter().enumerate() {
            let at = |f: &str| format!("requests[{idx}].{f}");
            check_id(r.id, idx, "requests")?;
            if r.passengers < 1 {
                return Err(Error::validation(at("passengers"), "must be at least 1"));
            }
            check_nonneg(r.service_time, at("service_time"))?;
            check_nonneg(r.tw_lo, at("tw_lo"))?;
            if !r.tw_hi.is_finite() || r.tw_hi <= r.tw_lo {
                return Err(Error::validation(
                    at("tw_hi"),
                    format!("time window upper bound {} must exceed lower bound {}", r.tw_hi, r.tw_lo),
                ));
            }
            if !r.priority.is_finite() || r.priority < 1.0 {
                return Err(Error::validation(at("priority"), "priority must be >= 1"));
            }
        }

        for (idx, a) in self.agents.iter().enumerate() {
            let at = |f: &str| format!("agents[{idx}].{f}");
            check_id(a.id, idx, "agents")?;
            check_nonneg(a.initial_delay, at("initial_delay"))?;
            if a.cap_passengers < 1 {
                return Err(Error::validation(at("cap_passengers"), "must be at least 1"));
            }
            if a.cap_equipment < 1 {
                return Err(Error::validation(at("cap_equipment"), "must be at least 1"));
            }
            if !a.conversion.is_finite() || a.conversion < 1.0 {
                return Err(Error::validation(at("conversion"), "conversion factor must be >= 1"));
            }
            check_nonneg(a.max_duration, at("max_duration"))?;
            check_nonneg(a.station_service_time, at("station_service_time"))?;
            if !(a.soc_min > 0.0 && a.soc_min <= 1.0) {
                return Err(Error::validation(at("soc_min"), "must lie in (0, 1]"));
            }
            if !(a.soc_init >= a.soc_min && a.soc_init <= 1.0) {
                return Err(Error::validation(at("soc_init"), "must lie in [soc_min, 1]"));
            }
            if !(a.soc_target >= a.soc_min && a.soc_target <= 1.0) {
                return Err(Error::validation(at("soc_target"), "must lie in [soc_min, 1]"));
            }
            if let Some(h) = a.terminal_hub {
                if h >= self.depots.len() {
                    return Err(Error::validation(at("terminal_hub"), format!("unknown depot {h}")));
                }
            }
        }

        for (idx, s) in self.stations.iter().enumerate() {
            check_id(s.id, idx, "stations")?;
            check_nonneg(s.earliest_available, format!("stations[{idx}].earliest_available"))?;
        }
        for (idx, d) in self.depots.iter().enumerate() {
            check_id(d.id, idx, "depots")?;
        }

        let b = &self.battery;
        for (name, v) in [
            ("alpha0", b.alpha0),
            ("alpha1", b.alpha1),
            ("alpha2", b.alpha2),
            ("beta1", b.beta1),
            ("beta2", b.beta2),
            ("beta3", b.beta3),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("battery.{name}"), "rate must be strictly positive"));
            }
        }
        if !(b.beta3 < b.beta2 && b.beta2 < b.beta1) {
            return Err(Error::validation("battery", "charging rates must strictly decrease (beta1 > beta2 > beta3)"));
        }

        let w = &self.config.weights;
        if !(w.epsilon > 0.0 && w.epsilon < w.zeta && w.zeta < w.eta && w.eta.is_finite()) {
            return Err(Error::validation("config.weights", "weights must satisfy 0 < epsilon < zeta < eta"));
        }
        if let Some(m) = w.big_m_override {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::validation("config.weights.big_m", "must be positive and finite"));
            }
        }

        if !self.config.open_vrp && self.depots.is_empty() {
            return Err(Error::validation("depots", "a closed instance needs at least one final depot"));
        }

        match &self.costs {
            CostSpec::Euclidean => self.check_coordinates()?,
            CostSpec::Matrix { matrix } => {
                let n = self.num_physical_nodes();
                if matrix.len() != n {
                    return Err(Error::validation(
                        "costs.matrix",
                        format!("expected {n} rows, found {}", matrix.len()),
                    ));
                }
                for (i, row) in matrix.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::validation(
                            format!("costs.matrix[{i}]"),
                            format!("expected {n} columns, found {}", row.len()),
                        ));
                    }
                    for (j, &c) in row.iter().enumerate() {
                        let ok = if i == j { c == 0.0 } else { c.is_finite() && c > 0.0 };
                        if !ok {
                            return Err(Error::validation(
                                format!("costs.matrix[{i}][{j}]"),
                                "diagonal entries must be 0 and off-diagonal entries positive",
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_coordinates(&self) -> Result<()> {
        let missing = |field: String| Err(Error::validation(field, "missing coordinate in euclidean mode"));
        for (i, a) in self.agents.iter().enumerate() {
            if a.start.is_none() {
                return missing(format!("agents[{i}].start"));
            }
        }
        for (i, r) in self.requests.iter().enumerate() {
            if r.pickup.is_none() {
                return missing(format!("requests[{i}].pickup"));
            }
            if r.delivery.is_none() {
                return missing(format!("requests[{i}].delivery"));
            }
        }
        for (i, s) in self.stations.iter().enumerate() {
            if s.pos.is_none() {
                return missing(format!("stations[{i}].pos"));
            }
        }
        for (i, d) in self.depots.iter().enumerate() {
            if d.pos.is_none() {
                return missing(format!("depots[{i}].pos"));
            }
        }
        Ok(())
    }

    /// Positions of the physical nodes in cost-matrix order.
    pub fn physical_positions(&self) -> Vec<Option<Point>> {
        let mut out = Vec::with_capacity(self.num_physical_nodes());
        out.extend(self.agents.iter().map(|a| a.start));
        out.extend(self.requests.iter().map(|r| r.pickup));
        out.extend(self.requests.iter().map(|r| r.delivery));
        out.extend(self.stations.iter().map(|s| s.pos));
        out.extend(self.depots.iter().map(|d| d.pos));
        out
    }
}

fn check_id(id: usize, idx: usize, list: &str) -> Result<()> {
    if id != idx {
        return Err(Error::validation(format!("{list}[{idx}].id"), format!("id {id} must equal its position {idx}")));
    }
    Ok(())
}

fn check_nonneg(v: f64, field: impl Into<String>) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::validation(field, "must be finite and non-negative"));
    }
    Ok(())
}

impl fmt::Display for TimeWindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeWindowKind::Pickup => "p",
            TimeWindowKind::Delivery => "d",
        })
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    const MINIMAL: &str = r#"{
        "meta": {"time_unit": "minutes"},
        "requests": [{"id": 0, "pickup": [0, 0], "delivery": [3, 4], "passengers": 1, "equipment": 0,
                      "service_time": 1, "tw_kind": "pickup", "tw_lo": 0, "tw_hi": 30, "priority": 1}],
        "agents": [{"id": 0, "start": [0, 0], "initial_delay": 0, "cap_passengers": 4, "cap_equipment": 1,
                    "conversion": 2, "max_duration": 100, "station_service_time": 2, "soc_min": 0.25,
                    "soc_init": 1.0, "soc_target": 0.85}],
        "stations": [],
        "depots": [{"id": 0, "pos": [1, 1]}],
        "costs": {"mode": "euclidean"},
        "battery": {"alpha0": 0.005, "alpha1": 0.001, "alpha2": 0.002, "beta1": 0.05, "beta2": 0.02, "beta3": 0.01},
        "config": {"duplicate_visits": 0, "selective": true, "open_vrp": false,
                   "weights": {"epsilon": 0.001, "zeta": 1.0, "eta": 10000.0}}
    }"#;

    #[test]
    fn minimal_document_loads() {
        let inst = Instance::from_json(MINIMAL).unwrap();
        assert_eq!(inst.num_stations(), 0);
        assert_eq!(inst.config.duplicate_visits, 0);
        assert_eq!(inst.num_physical_nodes(), 4);
    }

    #[test]
    fn increasing_charging_rates_are_rejected() {
        let doc = MINIMAL.replace("\"beta2\": 0.02", "\"beta2\": 0.07");
        let err = Instance::from_json(&doc).unwrap_err();
        assert!(err.to_string().contains("charging rates must strictly decrease"), "{err}");
    }

    #[test]
    fn inverted_time_window_names_the_request() {
        let doc = MINIMAL.replace("\"tw_hi\": 30", "\"tw_hi\": 0");
        let err = Instance::from_json(&doc).unwrap_err();
        assert!(err.to_string().contains("requests[0].tw_hi"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = MINIMAL.replace("\"stations\": []", "\"stations\": [], \"colour\": 1");
        assert!(matches!(Instance::from_json(&doc), Err(Error::Parse(_))));
        let doc = MINIMAL.replace("\"priority\": 1}", "\"priority\": 1, \"vip\": true}");
        assert!(matches!(Instance::from_json(&doc), Err(Error::Parse(_))));
    }

    #[test]
    fn matrix_costs_keep_asymmetry() {
        let doc = MINIMAL.replace(
            r#"{"mode": "euclidean"}"#,
            r#"{"mode": "matrix", "matrix": [[0,5,6,7],[7,0,2,3],[4,4,0,1],[2,2,2,0]]}"#,
        );
        let inst = Instance::from_json(&doc).unwrap();
        match inst.costs {
            CostSpec::Matrix { ref matrix } => {
                assert_eq!(matrix[0][1], 5.0);
                assert_eq!(matrix[1][0], 7.0);
            }
            _ => panic!("expected matrix mode"),
        }
    }

    #[test]
    fn matrix_with_zero_off_diagonal_is_rejected() {
        let doc = MINIMAL.replace(
            r#"{"mode": "euclidean"}"#,
            r#"{"mode": "matrix", "matrix": [[0,0,6,7],[7,0,2,3],[4,4,0,1],[2,2,2,0]]}"#,
        );
        let err = Instance::from_json(&doc).unwrap_err();
        assert!(err.to_string().contains("costs.matrix[0][1]"), "{err}");
    }

    #[test]
    fn closed_instance_needs_depot() {
        let mut inst = minimal();
        inst.depots.clear();
        assert!(inst.validate().is_err());
        inst.config.open_vrp = true;
        inst.validate().unwrap();
    }

    #[test]
    fn weights_must_be_ordered() {
        let mut inst = minimal();
        inst.config.weights.zeta = 1e5;
        assert!(inst.validate().is_err());
    }

    #[test]
    fn soc_bounds_are_checked() {
        let mut inst = minimal();
        inst.agents[0].soc_init = 0.1;
        let err = inst.validate().unwrap_err();
        assert!(err.to_string().contains("agents[0].soc_init"), "{err}");
    }

    #[test]
    fn json_round_trip_is_stable() {
        let inst = minimal();
        let text = inst.to_json();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json(), text);
    }
}
