use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road::{LaneRole, LightProgram, RoadStructure, RoadTag};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;
/// Upper bound on scripted speeds, m/s.
pub const MAX_SPEED: f64 = 20.0;
/// Upper bound on schedule times, light phase durations and pedestrian windows, s.
pub const MAX_TIME: f64 = 60.0;
pub const MAX_NPCS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherKind {
    Rain,
    Fog,
    Wetness,
}

impl WeatherKind {
    pub const ALL: [WeatherKind; 3] = [WeatherKind::Rain, WeatherKind::Fog, WeatherKind::Wetness];

    pub fn as_str(self) -> &'static str {
        match self {
            WeatherKind::Rain => "rain",
            WeatherKind::Fog => "fog",
            WeatherKind::Wetness => "wetness",
        }
    }

    pub fn parse(s: &str) -> Option<WeatherKind> {
        WeatherKind::ALL.into_iter().find(|w| w.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeOfDay {
    pub hour: u32,
    pub minute: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoSpec {
    pub lane: String,
    pub offset: f64,
    pub speed: f64,
    /// Outgoing lane the ego drives to.
    pub dest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum NpcAction {
    /// Change target speed.
    Speed(f64),
    /// Take the junction connector leading to this outgoing lane.
    Goto(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleItem {
    pub at: f64,
    pub action: NpcAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcSpec {
    pub id: String,
    pub lane: String,
    pub offset: f64,
    pub speed: f64,
    #[serde(default)]
    pub schedule: Vec<ScheduleItem>,
}

/// A pedestrian occupying a crosswalk during `[start, end)` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedSpec {
    pub crosswalk: String,
    pub start: f64,
    pub end: f64,
}

/// Scripted test scenario on one road structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub road: RoadTag,
    pub time: TimeOfDay,
    #[serde(default)]
    pub weather: BTreeMap<WeatherKind, f64>,
    pub ego: EgoSpec,
    /// Per-approach overrides of the road's default signal programs.
    #[serde(default)]
    pub lights: BTreeMap<String, LightProgram>,
    #[serde(default)]
    pub peds: Vec<PedSpec>,
    #[serde(default)]
    pub npcs: Vec<NpcSpec>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("lane `{lane}` does not exist on road {road}")]
    UnknownLane { lane: String, road: RoadTag },
    #[error("{field} = {value} is outside [{min}, {max}]")]
    OutOfRange { field: String, value: f64, min: f64, max: f64 },
    #[error("{0}")]
    Inconsistent(String),
    #[error("duplicate npc id `{0}`")]
    DuplicateNpc(String),
    #[error("unknown crosswalk `{0}`")]
    UnknownCrosswalk(String),
    #[error("road {road} does not match scenario road {scenario}")]
    RoadMismatch { road: RoadTag, scenario: RoadTag },
}

fn check_range(field: impl Into<String>, value: f64, min: f64, max: f64) -> Result<(), ScenarioError> {
    if value.is_finite() && (min..=max).contains(&value) {
        Ok(())
    } else {
        Err(ScenarioError::OutOfRange { field: field.into(), value, min, max })
    }
}

impl Scenario {
    /// Signal program in force for an incoming lane, if the approach is signalized.
    pub fn light_for(&self, road: &RoadStructure, lane: &str) -> Option<LightProgram> {
        self.lights.get(lane).copied().or_else(|| road.default_light(lane))
    }

    pub fn npc(&self, id: &str) -> Option<&NpcSpec> {
        self.npcs.iter().find(|n| n.id == id)
    }

    /// Checks every scenario invariant against `road`.
    pub fn validate(&self, road: &RoadStructure) -> Result<(), ScenarioError> {
        if road.tag != self.road {
            return Err(ScenarioError::RoadMismatch { road: road.tag, scenario: self.road });
        }
        let lane = |id: &str| {
            road.lane(id).ok_or_else(|| ScenarioError::UnknownLane { lane: id.to_string(), road: road.tag })
        };
        check_range("time.hour", self.time.hour as f64, 0.0, 23.0)?;
        check_range("time.minute", self.time.minute as f64, 0.0, 59.0)?;
        for (k, v) in &self.weather {
            check_range(format!("weather.{}", k.as_str()), *v, 0.0, 1.0)?;
        }

        let ego_lane = lane(&self.ego.lane)?;
        let dest = lane(&self.ego.dest)?;
        if ego_lane.role != LaneRole::Incoming {
            return Err(ScenarioError::Inconsistent(format!("ego lane `{}` does not approach the junction", ego_lane.id)));
        }
        check_range("ego.offset", self.ego.offset, 0.0, ego_lane.length)?;
        check_range("ego.speed", self.ego.speed, 0.0, MAX_SPEED)?;
        if road.connector(&ego_lane.id, &dest.id).is_none() {
            return Err(ScenarioError::Inconsistent(format!(
                "destination `{}` is not reachable from `{}`",
                dest.id, ego_lane.id
            )));
        }

        for (id, prog) in &self.lights {
            let l = lane(id)?;
            if !l.signalized {
                return Err(ScenarioError::Inconsistent(format!("lane `{id}` has no signal head")));
            }
            for (name, v) in [("green", prog.green), ("yellow", prog.yellow), ("red", prog.red), ("offset", prog.offset)]
            {
                check_range(format!("light.{id}.{name}"), v, 0.0, MAX_TIME)?;
            }
            if prog.cycle() <= 0.0 {
                return Err(ScenarioError::Inconsistent(format!("light `{id}` has an empty cycle")));
            }
        }

        for (i, p) in self.peds.iter().enumerate() {
            if road.crosswalk(&p.crosswalk).is_none() {
                return Err(ScenarioError::UnknownCrosswalk(p.crosswalk.clone()));
            }
            check_range(format!("peds[{i}].start"), p.start, 0.0, MAX_TIME)?;
            check_range(format!("peds[{i}].end"), p.end, p.start, MAX_TIME)?;
        }

        if self.npcs.len() > MAX_NPCS {
            return Err(ScenarioError::Inconsistent(format!("at most {MAX_NPCS} npcs are supported")));
        }
        let mut seen = Vec::new();
        for n in &self.npcs {
            let k = n.id.strip_prefix("npc").and_then(|k| k.parse::<usize>().ok());
            if !matches!(k, Some(k) if (1..=MAX_NPCS).contains(&k)) {
                return Err(ScenarioError::Inconsistent(format!("npc id `{}` must be npc1..npc{MAX_NPCS}", n.id)));
            }
            if seen.contains(&n.id) {
                return Err(ScenarioError::DuplicateNpc(n.id.clone()));
            }
            seen.push(n.id.clone());
            let nl = lane(&n.lane)?;
            check_range(format!("{}.offset", n.id), n.offset, 0.0, nl.length)?;
            check_range(format!("{}.speed", n.id), n.speed, 0.0, MAX_SPEED)?;
            let mut last = 0.0;
            for (j, item) in n.schedule.iter().enumerate() {
                check_range(format!("{}.schedule[{j}].at", n.id), item.at, last, MAX_TIME)?;
                last = item.at;
                match &item.action {
                    NpcAction::Speed(v) => check_range(format!("{}.schedule[{j}].speed", n.id), *v, 0.0, MAX_SPEED)?,
                    NpcAction::Goto(target) => {
                        lane(target)?;
                        if road.connector(&n.lane, target).is_none() {
                            return Err(ScenarioError::Inconsistent(format!(
                                "{} cannot reach `{target}` from `{}`",
                                n.id, n.lane
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile { schema_version: SCENARIO_SCHEMA_VERSION, scenario: self.clone() })
            .expect("scenarios serialise")
    }

    pub fn from_json(text: &str) -> Result<Scenario, serde_json::Error> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        if file.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported scenario schema version {}",
                file.schema_version
            )));
        }
        Ok(file.scenario)
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    schema_version: u32,
    #[serde(flatten)]
    scenario: Scenario,
}
