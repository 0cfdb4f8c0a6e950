//! Seeded random instances.
//!
//! Draws come from ChaCha8 seeded with [`GenConfig::seed`]. Real numbers use
//! the top 53 bits of a `u64`. The draw order is part of the format:
//!
//! 1. per request: pickup x, y; delivery x, y; passengers; equipment;
//!    window side; window opening; window width; priority
//! 2. per agent: start x, y
//! 3. per station: x, y
//! 4. the depot (closed instances only): x, y

use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{
    Agent, BatteryModel, CostSpec, Depot, Instance, Meta, ModelConfig, Point, Request, Station, TimeUnit,
    TimeWindowKind,
};

const SPEED: f64 = 1.0;
const AGENT_CAP_PASSENGERS: u32 = 4;
const AGENT_CAP_EQUIPMENT: u32 = 2;
const CONVERSION: f64 = 2.0;
/// Load-dependent discharge relative to `alpha0`, per passenger and per
/// equipment unit.
const ALPHA1_SHARE: f64 = 0.02;
const ALPHA2_SHARE: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatteryPreset {
    /// A full battery covers about eight area diagonals.
    Typical,
    /// Agents need a charging stop after about two requests.
    HighDischarge,
}

impl FromStr for BatteryPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "typical" => Ok(Self::Typical),
            "highdischarge" | "high-discharge" => Ok(Self::HighDischarge),
            _ => Err(Error::Config(format!("unknown battery preset `{s}`"))),
        }
    }
}

impl BatteryPreset {
    /// Minimum operational SoC of generated agents.
    pub fn soc_min(self) -> f64 {
        match self {
            Self::Typical => 0.25,
            Self::HighDischarge => 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub n_requests: usize,
    pub n_agents: usize,
    pub n_stations: usize,
    pub duplicate_visits: usize,
    /// Side of the square service area in meters.
    pub area: f64,
    /// Latest window opening, in minutes.
    pub horizon: f64,
    /// Window width range in minutes.
    pub tw_width: (f64, f64),
    pub passengers: (u32, u32),
    pub equipment: (u32, u32),
    pub priority: (f64, f64),
    pub preset: BatteryPreset,
    pub selective: bool,
    pub open_vrp: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_requests: 4,
            n_agents: 2,
            n_stations: 1,
            duplicate_visits: 1,
            area: 3000.0,
            horizon: 120.0,
            tw_width: (30.0, 90.0),
            passengers: (1, 2),
            equipment: (0, 1),
            priority: (1.0, 3.0),
            preset: BatteryPreset::Typical,
            selective: true,
            open_vrp: false,
        }
    }
}

impl GenConfig {
    /// Selective closed problem with two agents, six requests and one station
    /// that may be visited twice, under high discharge.
    pub fn scenario_one(seed: u64) -> Self {
        Self {
            seed,
            n_requests: 6,
            n_agents: 2,
            n_stations: 1,
            duplicate_visits: 2,
            preset: BatteryPreset::HighDischarge,
            selective: true,
            open_vrp: false,
            ..Self::default()
        }
    }

    /// Non-selective open problem with three agents, eight requests and no
    /// station.
    pub fn scenario_two(seed: u64) -> Self {
        Self {
            seed,
            n_requests: 8,
            n_agents: 3,
            n_stations: 0,
            duplicate_visits: 0,
            preset: BatteryPreset::Typical,
            selective: false,
            open_vrp: true,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.area.is_finite() && self.area > 0.0) {
            return bad("area must be positive");
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return bad("horizon must be non-negative");
        }
        if !(self.tw_width.0 > 0.0 && self.tw_width.1 >= self.tw_width.0 && self.tw_width.1.is_finite()) {
            return bad("window widths must be positive and ordered");
        }
        if self.passengers.0 < 1 || self.passengers.1 < self.passengers.0 || self.equipment.1 < self.equipment.0 {
            return bad("demand ranges must be ordered with at least one passenger");
        }
        let max_load = self.passengers.1 as f64 + CONVERSION * self.equipment.1 as f64;
        if self.passengers.1 > AGENT_CAP_PASSENGERS
            || self.equipment.1 > AGENT_CAP_EQUIPMENT
            || max_load > AGENT_CAP_PASSENGERS as f64
        {
            return bad("a request could exceed the vehicle capacity");
        }
        if !(self.priority.0 >= 1.0 && self.priority.1 >= self.priority.0 && self.priority.1.is_finite()) {
            return bad("priority range must be ordered and at least 1");
        }
        if self.duplicate_visits > 0 && self.n_stations == 0 {
            return bad("duplicate visits need a station");
        }
        Ok(())
    }
}

struct Draw(ChaCha8Rng);

impl Draw {
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn real(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    fn int(&mut self, lo: u32, hi: u32) -> u32 {
        let span = (hi - lo + 1) as f64;
        lo + ((self.unit() * span) as u32).min(hi - lo)
    }

    fn point(&mut self, side: f64) -> Point {
        Point::new(self.real(0.0, side).round(), self.real(0.0, side).round())
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Battery rates for `preset` over a square of side `area` meters.
pub fn preset_battery(preset: BatteryPreset, area: f64) -> BatteryModel {
    let diagonal = area * std::f64::consts::SQRT_2 / SPEED / 60.0;
    let loaded = 1.0 + ALPHA1_SHARE * AGENT_CAP_PASSENGERS as f64 + ALPHA2_SHARE * AGENT_CAP_EQUIPMENT as f64;
    let alpha0 = match preset {
        BatteryPreset::Typical => 1.0 / (8.0 * diagonal),
        // a fully loaded diagonal drains just under the minimum SoC
        BatteryPreset::HighDischarge => 0.95 * preset.soc_min() / (diagonal * loaded),
    };
    BatteryModel {
        alpha0,
        alpha1: alpha0 * ALPHA1_SHARE,
        alpha2: alpha0 * ALPHA2_SHARE,
        beta1: 0.05,
        beta2: 0.02,
        beta3: 0.01,
    }
}

/// Builds an instance from `config`; identical configs give identical
/// instances on every platform.
pub fn generate(config: &GenConfig) -> Result<Instance> {
    config.check()?;
    let mut rng = Draw(ChaCha8Rng::seed_from_u64(config.seed));
    let side = config.area;

    let requests = (0..config.n_requests)
        .map(|id| {
            let pickup = rng.point(side);
            let delivery = rng.point(side);
            let passengers = rng.int(config.passengers.0, config.passengers.1);
            let equipment = rng.int(config.equipment.0, config.equipment.1);
            let tw_kind = if rng.unit() < 0.5 { TimeWindowKind::Pickup } else { TimeWindowKind::Delivery };
            let tw_lo = rng.real(0.0, config.horizon).round();
            let width = rng.real(config.tw_width.0, config.tw_width.1).round().max(1.0);
            let priority = round2(rng.real(config.priority.0, config.priority.1));
            Request {
                id,
                pickup: Some(pickup),
                delivery: Some(delivery),
                passengers,
                equipment,
                service_time: 1.0,
                tw_kind,
                tw_lo,
                tw_hi: tw_lo + width,
                priority,
                force_accept: false,
            }
        })
        .collect();

    let soc_min = config.preset.soc_min();
    let agents = (0..config.n_agents)
        .map(|id| Agent {
            id,
            start: Some(rng.point(side)),
            initial_delay: 0.0,
            cap_passengers: AGENT_CAP_PASSENGERS,
            cap_equipment: AGENT_CAP_EQUIPMENT,
            conversion: CONVERSION,
            max_duration: 480.0,
            station_service_time: 2.0,
            soc_min,
            soc_init: 1.0,
            soc_target: 0.85,
            terminal_hub: None,
        })
        .collect();
    let stations =
        (0..config.n_stations).map(|id| Station { id, pos: Some(rng.point(side)), earliest_available: 0.0 }).collect();
    let depots = if config.open_vrp { Vec::new() } else { vec![Depot { id: 0, pos: Some(rng.point(side)) }] };

    let instance = Instance {
        meta: Meta {
            time_unit: TimeUnit::Minutes,
            name: Some(format!("gen-s{}-r{}-k{}", config.seed, config.n_requests, config.n_agents)),
        },
        requests,
        agents,
        stations,
        depots,
        costs: CostSpec::Euclidean,
        battery: preset_battery(config.preset, side),
        config: ModelConfig {
            duplicate_visits: config.duplicate_visits,
            selective: config.selective,
            open_vrp: config.open_vrp,
            ..ModelConfig::default()
        },
    };
    instance.validate()?;
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::expand_graph;
    use crate::milp::compute_big_m;

    #[test]
    fn same_seed_same_bytes() {
        let cfg = GenConfig { seed: 42, ..GenConfig::default() };
        assert_eq!(generate(&cfg).unwrap().to_json(), generate(&cfg).unwrap().to_json());
        let other = GenConfig { seed: 43, ..cfg };
        assert_ne!(generate(&cfg).unwrap().to_json(), generate(&other).unwrap().to_json());
    }

    #[test]
    fn scenario_shapes() {
        let one = generate(&GenConfig::scenario_one(1)).unwrap();
        assert_eq!((one.agents.len(), one.requests.len(), one.stations.len()), (2, 6, 1));
        assert_eq!(one.config.duplicate_visits, 2);
        assert!(one.config.selective && !one.config.open_vrp);
        let two = generate(&GenConfig::scenario_two(1)).unwrap();
        assert_eq!((two.agents.len(), two.requests.len(), two.stations.len()), (3, 8, 0));
        assert!(!two.config.selective && two.config.open_vrp);
        assert!(two.depots.is_empty());
    }

    #[test]
    fn presets_keep_arc_drops_below_the_floor() {
        for preset in [BatteryPreset::Typical, BatteryPreset::HighDischarge] {
            for seed in 0..5 {
                let cfg = GenConfig { seed, preset, ..GenConfig::default() };
                let inst = generate(&cfg).unwrap();
                let g = expand_graph(&inst).unwrap();
                let m = compute_big_m(&inst, &g).unwrap();
                assert!(m.warnings.is_empty(), "{preset:?} {seed}: {:?}", m.warnings);
            }
        }
    }

    #[test]
    fn diagonal_coverage() {
        let diag = 3000.0 * std::f64::consts::SQRT_2 / 60.0;
        let typical = preset_battery(BatteryPreset::Typical, 3000.0);
        assert!((1.0 / (typical.alpha0 * diag) - 8.0).abs() < 1e-9);
        let high = preset_battery(BatteryPreset::HighDischarge, 3000.0);
        let loaded = high.discharge(diag, AGENT_CAP_PASSENGERS, AGENT_CAP_EQUIPMENT);
        assert!((loaded - 0.38).abs() < 1e-9);
    }

    #[test]
    fn bad_configs() {
        let bad = [
            GenConfig { area: 0.0, ..GenConfig::default() },
            GenConfig { tw_width: (0.0, 10.0), ..GenConfig::default() },
            GenConfig { passengers: (3, 5), ..GenConfig::default() },
            GenConfig { n_stations: 0, duplicate_visits: 1, ..GenConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(generate(&cfg), Err(Error::Config(_))), "{cfg:?}");
        }
        assert_eq!("highdischarge".parse::<BatteryPreset>().unwrap(), BatteryPreset::HighDischarge);
    }
}
