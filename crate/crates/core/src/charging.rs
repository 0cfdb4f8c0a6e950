//! The piecewise-linear charging curve: rate `β1` up to 0.85, `β2` up to 0.95,
//! `β3` up to 1.0.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{BatteryModel, SEGMENT1_END, SEGMENT2_END};
use crate::plan::Charge;

const BREAKPOINTS: [f64; 3] = [SEGMENT1_END, SEGMENT2_END, 1.0];

/// Tolerance for deciding that a segment has been completed.
pub const SEGMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChargeOutcome {
    pub final_soc: f64,
    /// Time spent in each segment; time past full charge is not counted.
    pub xi: [f64; 3],
}

/// Charges from `arrival_soc` for `total_time`, filling the segments in order.
pub fn charge_curve(arrival_soc: f64, total_time: f64, battery: &BatteryModel) -> Result<ChargeOutcome> {
    if !(0.0..=SEGMENT1_END).contains(&arrival_soc) {
        return Err(Error::Charging(format!("arrival SoC {arrival_soc} must lie in [0, {SEGMENT1_END}]")));
    }
    if !(total_time.is_finite() && total_time >= 0.0) {
        return Err(Error::Charging(format!("charging time {total_time} must be finite and non-negative")));
    }
    let betas = battery.betas();
    let mut soc = arrival_soc;
    let mut left = total_time;
    let mut xi = [0.0; 3];
    let mut lower = arrival_soc;
    for l in 0..3 {
        let need = (BREAKPOINTS[l] - lower).max(0.0) / betas[l];
        if left >= need {
            xi[l] = need;
            soc = BREAKPOINTS[l];
            left -= need;
        } else {
            xi[l] = left;
            soc += betas[l] * left;
            break;
        }
        lower = BREAKPOINTS[l];
    }
    Ok(ChargeOutcome { final_soc: soc, xi })
}

/// Splits a charged amount of energy into segment times, fastest segment first,
/// and sets the completion flags.
pub fn split_energy(arrival_soc: f64, energy: f64, battery: &BatteryModel) -> Charge {
    let a = arrival_soc.clamp(0.0, SEGMENT1_END);
    let e = energy.clamp(0.0, (1.0 - a).max(0.0));
    let e1 = e.min(SEGMENT1_END - a).max(0.0);
    let rest = (e - e1).max(0.0);
    let e2 = rest.min(SEGMENT2_END - SEGMENT1_END);
    let e3 = (rest - e2).clamp(0.0, 1.0 - SEGMENT2_END);
    let b = battery.betas();
    Charge {
        xi: [e1 / b[0], e2 / b[1], e3 / b[2]],
        z: [a + e1 >= SEGMENT1_END - SEGMENT_TOL, a + e1 + e2 >= SEGMENT2_END - SEGMENT_TOL],
    }
}

/// SoC after a charge described by segment times.
pub fn charged_soc(arrival_soc: f64, charge: &Charge, battery: &BatteryModel) -> f64 {
    let b = battery.betas();
    arrival_soc + (0..3).map(|l| b[l] * charge.xi[l]).sum::<f64>()
}
