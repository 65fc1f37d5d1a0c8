//! Action-sequence form of scenarios.
//!
//! Each action unit is a `+`-separated token:
//!
//! | token                     | meaning                                   |
//! |---------------------------|-------------------------------------------|
//! | `time+H+M`                | time of day                               |
//! | `weather+KIND+X`          | weather intensity in [0, 1]               |
//! | `ego+LANE+OFFSET`         | ego start lane and offset                 |
//! | `ego+speed+V`             | ego initial speed                         |
//! | `ego+dest+LANE`           | ego destination lane                      |
//! | `light+LANE+G+Y+R+O`      | signal program of one approach            |
//! | `peds+CW+START+END`       | crosswalk occupied during [START, END)    |
//! | `npcK+LANE+OFFSET`        | NPC start lane and offset                 |
//! | `npcK+speed+V`            | NPC initial speed                         |
//! | `npcK+at+T`               | opens a schedule point at T seconds...    |
//! | `npcK+speed+V` / `npcK+goto+LANE` | ...and the action taken there     |
//!
//! Canonical order: time, weather (rain, fog, wetness), ego lane, ego speed,
//! ego destination, lights by lane, pedestrians, then each NPC (by id) with its
//! initial state followed by its schedule in time order.

use std::fmt;

use thiserror::Error;

use super::model::{EgoSpec, NpcAction, NpcSpec, PedSpec, Scenario, ScenarioError, ScheduleItem, TimeOfDay, WeatherKind};
use crate::road::{LightProgram, RoadStructure, RoadTag};

/// A standardized action sequence.
pub type ActionSequence = Vec<String>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("token {index} `{token}`: {kind}")]
    Token { index: usize, token: String, kind: TokenErrorKind },
    #[error("missing required field {0}")]
    Missing(&'static str),
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TokenErrorKind {
    #[error("unparseable token")]
    Unparseable,
    #[error("duplicate time token")]
    DuplicateTime,
    #[error("sequence must begin with the time token")]
    TimeNotFirst,
    #[error("duplicate {0}")]
    Duplicate(String),
    #[error("schedule point without a following action")]
    DanglingSchedule,
    #[error("action without a preceding schedule point")]
    OrphanAction,
    #[error("npc speed or schedule before its lane token")]
    NpcBeforeLane,
}

/// One parsed action unit.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Time { hour: u32, minute: u32 },
    Weather { kind: WeatherKind, value: f64 },
    EgoLane { lane: String, offset: f64 },
    EgoSpeed(f64),
    EgoDest(String),
    Light { lane: String, program: LightProgram },
    Peds { crosswalk: String, start: f64, end: f64 },
    NpcLane { npc: String, lane: String, offset: f64 },
    NpcSpeed { npc: String, speed: f64 },
    NpcAt { npc: String, at: f64 },
    NpcGoto { npc: String, lane: String },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Time { hour, minute } => write!(f, "time+{hour}+{minute}"),
            Action::Weather { kind, value } => write!(f, "weather+{}+{value}", kind.as_str()),
            Action::EgoLane { lane, offset } => write!(f, "ego+{lane}+{offset}"),
            Action::EgoSpeed(v) => write!(f, "ego+speed+{v}"),
            Action::EgoDest(lane) => write!(f, "ego+dest+{lane}"),
            Action::Light { lane, program: p } => {
                write!(f, "light+{lane}+{}+{}+{}+{}", p.green, p.yellow, p.red, p.offset)
            }
            Action::Peds { crosswalk, start, end } => write!(f, "peds+{crosswalk}+{start}+{end}"),
            Action::NpcLane { npc, lane, offset } => write!(f, "{npc}+{lane}+{offset}"),
            Action::NpcSpeed { npc, speed } => write!(f, "{npc}+speed+{speed}"),
            Action::NpcAt { npc, at } => write!(f, "{npc}+at+{at}"),
            Action::NpcGoto { npc, lane } => write!(f, "{npc}+goto+{lane}"),
        }
    }
}

fn is_ident(s: &str, prefix: &str) -> bool {
    s.strip_prefix(prefix).is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_alphanumeric()))
}

fn num(s: &str) -> Option<f64> {
    // Only plain decimal literals; rejects `inf`, `NaN` and exponents.
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit() || b == b'.' || b == b'-') {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn int(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl Action {
    /// Parses one action unit; `None` if it matches no token format.
    pub fn parse(token: &str) -> Option<Action> {
        let parts: Vec<&str> = token.split('+').collect();
        match parts.as_slice() {
            ["time", h, m] => Some(Action::Time { hour: int(h)?, minute: int(m)? }),
            ["weather", k, v] => Some(Action::Weather { kind: WeatherKind::parse(k)?, value: num(v)? }),
            ["ego", "speed", v] => Some(Action::EgoSpeed(num(v)?)),
            ["ego", "dest", l] if is_ident(l, "lane") => Some(Action::EgoDest(l.to_string())),
            ["ego", l, o] if is_ident(l, "lane") => Some(Action::EgoLane { lane: l.to_string(), offset: num(o)? }),
            ["light", l, g, y, r, o] if is_ident(l, "lane") => Some(Action::Light {
                lane: l.to_string(),
                program: LightProgram { green: num(g)?, yellow: num(y)?, red: num(r)?, offset: num(o)? },
            }),
            ["peds", c, s, e] if is_ident(c, "cw") => {
                Some(Action::Peds { crosswalk: c.to_string(), start: num(s)?, end: num(e)? })
            }
            [n, "speed", v] if is_ident(n, "npc") => Some(Action::NpcSpeed { npc: n.to_string(), speed: num(v)? }),
            [n, "at", t] if is_ident(n, "npc") => Some(Action::NpcAt { npc: n.to_string(), at: num(t)? }),
            [n, "goto", l] if is_ident(n, "npc") && is_ident(l, "lane") => {
                Some(Action::NpcGoto { npc: n.to_string(), lane: l.to_string() })
            }
            [n, l, o] if is_ident(n, "npc") && is_ident(l, "lane") => {
                Some(Action::NpcLane { npc: n.to_string(), lane: l.to_string(), offset: num(o)? })
            }
            _ => None,
        }
    }
}

/// Canonical action sequence of `scenario`.
pub fn encode(scenario: &Scenario) -> ActionSequence {
    let mut out = Vec::new();
    let mut push = |a: Action| out.push(a.to_string());
    push(Action::Time { hour: scenario.time.hour, minute: scenario.time.minute });
    for (kind, value) in &scenario.weather {
        push(Action::Weather { kind: *kind, value: *value });
    }
    let ego = &scenario.ego;
    push(Action::EgoLane { lane: ego.lane.clone(), offset: ego.offset });
    push(Action::EgoSpeed(ego.speed));
    push(Action::EgoDest(ego.dest.clone()));
    let mut lights: Vec<_> = scenario.lights.iter().collect();
    lights.sort_by_key(|(lane, _)| lane_number(lane));
    for (lane, program) in lights {
        push(Action::Light { lane: lane.clone(), program: *program });
    }
    for p in &scenario.peds {
        push(Action::Peds { crosswalk: p.crosswalk.clone(), start: p.start, end: p.end });
    }
    let mut npcs: Vec<&NpcSpec> = scenario.npcs.iter().collect();
    npcs.sort_by_key(|n| lane_number(&n.id));
    for n in npcs {
        push(Action::NpcLane { npc: n.id.clone(), lane: n.lane.clone(), offset: n.offset });
        push(Action::NpcSpeed { npc: n.id.clone(), speed: n.speed });
        for item in &n.schedule {
            push(Action::NpcAt { npc: n.id.clone(), at: item.at });
            push(match &item.action {
                NpcAction::Speed(v) => Action::NpcSpeed { npc: n.id.clone(), speed: *v },
                NpcAction::Goto(l) => Action::NpcGoto { npc: n.id.clone(), lane: l.clone() },
            });
        }
    }
    out
}

/// Numeric suffix used for ordering `lane12` after `lane3`.
fn lane_number(id: &str) -> (usize, String) {
    let digits: String = id.chars().skip_while(|c| !c.is_ascii_digit()).collect();
    (digits.parse().unwrap_or(usize::MAX), id.to_string())
}

/// Structural decoding: every token must parse and every required field be
/// present exactly once. No range or road checks are made here.
pub fn decode_structure<S: AsRef<str>>(tokens: &[S], road: RoadTag) -> Result<Scenario, DecodeError> {
    let err = |index: usize, kind: TokenErrorKind| DecodeError::Token {
        index,
        token: tokens[index].as_ref().to_string(),
        kind,
    };
    let mut time = None;
    let mut weather = std::collections::BTreeMap::new();
    let (mut ego_lane, mut ego_speed, mut ego_dest) = (None, None, None);
    let mut lights = std::collections::BTreeMap::new();
    let mut peds = Vec::new();
    let mut npcs: Vec<NpcSpec> = Vec::new();
    let mut npc_speed_set: Vec<String> = Vec::new();
    let mut pending_at: Option<(usize, String, f64)> = None;

    for (i, tok) in tokens.iter().enumerate() {
        let action = Action::parse(tok.as_ref()).ok_or_else(|| err(i, TokenErrorKind::Unparseable))?;
        if let Some((at_index, npc, at)) = pending_at.take() {
            let item = match &action {
                Action::NpcSpeed { npc: n, speed } if *n == npc => NpcAction::Speed(*speed),
                Action::NpcGoto { npc: n, lane } if *n == npc => NpcAction::Goto(lane.clone()),
                _ => return Err(err(at_index, TokenErrorKind::DanglingSchedule)),
            };
            let spec = npcs.iter_mut().find(|n| n.id == npc).expect("schedule opened for a known npc");
            spec.schedule.push(ScheduleItem { at, action: item });
            continue;
        }
        if i > 0 && time.is_none() {
            return Err(err(0, TokenErrorKind::TimeNotFirst));
        }
        let dup = |what: String| err(i, TokenErrorKind::Duplicate(what));
        match action {
            Action::Time { hour, minute } => {
                if time.is_some() {
                    return Err(err(i, TokenErrorKind::DuplicateTime));
                }
                time = Some(TimeOfDay { hour, minute });
            }
            Action::Weather { kind, value } => {
                if weather.insert(kind, value).is_some() {
                    return Err(dup(format!("weather {}", kind.as_str())));
                }
            }
            Action::EgoLane { lane, offset } => {
                if ego_lane.replace((lane, offset)).is_some() {
                    return Err(dup("ego lane".into()));
                }
            }
            Action::EgoSpeed(v) => {
                if ego_speed.replace(v).is_some() {
                    return Err(dup("ego speed".into()));
                }
            }
            Action::EgoDest(lane) => {
                if ego_dest.replace(lane).is_some() {
                    return Err(dup("ego destination".into()));
                }
            }
            Action::Light { lane, program } => {
                if lights.insert(lane.clone(), program).is_some() {
                    return Err(dup(format!("light {lane}")));
                }
            }
            Action::Peds { crosswalk, start, end } => peds.push(PedSpec { crosswalk, start, end }),
            Action::NpcLane { npc, lane, offset } => {
                if npcs.iter().any(|n| n.id == npc) {
                    return Err(dup(format!("{npc} lane")));
                }
                npcs.push(NpcSpec { id: npc, lane, offset, speed: f64::NAN, schedule: Vec::new() });
            }
            Action::NpcSpeed { npc, speed } => {
                let Some(spec) = npcs.iter_mut().find(|n| n.id == npc) else {
                    return Err(err(i, TokenErrorKind::NpcBeforeLane));
                };
                if npc_speed_set.contains(&npc) {
                    return Err(dup(format!("{npc} initial speed")));
                }
                spec.speed = speed;
                npc_speed_set.push(npc);
            }
            Action::NpcAt { npc, at } => {
                if !npcs.iter().any(|n| n.id == npc) {
                    return Err(err(i, TokenErrorKind::NpcBeforeLane));
                }
                pending_at = Some((i, npc, at));
            }
            Action::NpcGoto { .. } => return Err(err(i, TokenErrorKind::OrphanAction)),
        }
    }
    if let Some((at_index, _, _)) = pending_at {
        return Err(err(at_index, TokenErrorKind::DanglingSchedule));
    }
    let time = time.ok_or(DecodeError::Missing("time"))?;
    let (lane, offset) = ego_lane.ok_or(DecodeError::Missing("ego lane"))?;
    let speed = ego_speed.ok_or(DecodeError::Missing("ego speed"))?;
    let dest = ego_dest.ok_or(DecodeError::Missing("ego destination"))?;
    if npcs.iter().any(|n| n.speed.is_nan()) {
        return Err(DecodeError::Missing("npc initial speed"));
    }
    Ok(Scenario { road, time, weather, ego: EgoSpec { lane, offset, speed, dest }, lights, peds, npcs })
}

/// Full decoding: structure plus every scenario invariant on `road`.
pub fn decode<S: AsRef<str>>(tokens: &[S], road: &RoadStructure) -> Result<Scenario, DecodeError> {
    let s = decode_structure(tokens, road.tag)?;
    s.validate(road)?;
    Ok(s)
}
