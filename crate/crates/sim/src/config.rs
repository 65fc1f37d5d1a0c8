use serde::{Deserialize, Serialize};

use crate::SimError;

/// Parameters of the rule-based stand-in ego agent.
///
/// The thresholds are deliberately looser than the shipped law corpus in a few
/// places (turn speed, turn-signal distance, headlight hours, yield range) so
/// that violations are reachable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgoPolicy {
    /// Target speed on free road, m/s.
    pub cruise_speed: f64,
    /// Target speed through turning connectors, m/s.
    pub turn_speed: f64,
    /// Target speed when visibility is below `fog_visibility`, m/s.
    pub fog_speed: f64,
    pub fog_visibility: f64,
    pub max_accel: f64,
    /// Deceleration used for planned stops, m/s².
    pub comfortable_decel: f64,
    /// Hard braking limit, m/s².
    pub max_decel: f64,
    /// Desired time gap to a leader, s.
    pub time_gap: f64,
    /// Standstill gap to a leader, m.
    pub min_gap: f64,
    /// Distance before the stop line at which the ego halts, m.
    pub stop_margin: f64,
    /// Distance to the junction at which the turn signal is switched on, m.
    pub signal_distance: f64,
    /// Headlights are on from `headlight_on_hour` until `headlight_off_hour`.
    pub headlight_on_hour: f64,
    pub headlight_off_hour: f64,
    pub headlight_visibility: f64,
    /// Distance to the junction within which priority checks are made, m.
    pub yield_distance: f64,
    /// Only crossing vehicles this close to the conflict point are yielded to, m.
    pub yield_npc_range: f64,
    pub stop_on_red: bool,
    pub yield_to_priority: bool,
    pub lane_keep: bool,
    /// Whether a right turn may proceed against a red signal.
    pub right_on_red: bool,
}

impl Default for EgoPolicy {
    fn default() -> Self {
        EgoPolicy {
            cruise_speed: 10.0,
            turn_speed: 9.0,
            fog_speed: 6.0,
            fog_visibility: 30.0,
            max_accel: 2.0,
            comfortable_decel: 3.0,
            max_decel: 8.0,
            time_gap: 0.6,
            min_gap: 2.0,
            stop_margin: 1.0,
            signal_distance: 20.0,
            headlight_on_hour: 19.0,
            headlight_off_hour: 6.0,
            headlight_visibility: 60.0,
            yield_distance: 15.0,
            yield_npc_range: 20.0,
            stop_on_red: true,
            yield_to_priority: true,
            lane_keep: true,
            right_on_red: false,
        }
    }
}

impl EgoPolicy {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("cruise_speed", self.cruise_speed),
            ("turn_speed", self.turn_speed),
            ("fog_speed", self.fog_speed),
            ("max_accel", self.max_accel),
            ("comfortable_decel", self.comfortable_decel),
            ("max_decel", self.max_decel),
            ("time_gap", self.time_gap),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("policy.{name} must be positive, got {v}")));
            }
        }
        if self.comfortable_decel > self.max_decel {
            return Err(SimError::Config("policy.comfortable_decel exceeds max_decel".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Tick length, s.
    pub tick: f64,
    /// Upper bound on simulated time, s.
    pub max_duration: f64,
    /// The run ends once the ego has been standing still this long, s.
    pub blockage_timeout: f64,
    /// Reserved; the simulation core draws no random numbers.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { tick: 0.1, max_duration: 60.0, blockage_timeout: 20.0, seed: 0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [("tick", self.tick), ("max_duration", self.max_duration), ("blockage_timeout", self.blockage_timeout)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("sim.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
