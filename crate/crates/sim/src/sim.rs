//! Fixed-tick kinematic simulation of one scenario.
//!
//! Vehicles are points moving along route polylines with bounded acceleration.
//! The reference point of a vehicle is its centre; collisions use axis-aligned
//! boxes whose long side follows the dominant heading axis.

use std::collections::BTreeMap;

use lawgen_core::road::{LightColor, LightProgram, RoadStructure, Turn};
use lawgen_core::scenario::{NpcAction, Scenario, WeatherKind};
use lawgen_core::trace::{SignalData, Trace};
use serde::{Deserialize, Serialize};

use crate::config::{EgoPolicy, SimConfig};
use crate::route::{Route, SegmentKind};
use crate::SimError;

/// Stand-in for "no such feature ahead" in distance signals, m.
pub const FAR: f64 = 1000.0;
/// Headway reported when there is no leader or the ego is not moving, s.
pub const HEADWAY_CAP: f64 = 100.0;
pub const VEHICLE_LENGTH: f64 = 4.5;
pub const VEHICLE_WIDTH: f64 = 2.0;
/// Crossing traffic and pedestrians within this distance have priority, m.
pub const PRIORITY_RANGE: f64 = 30.0;
/// Value of the constant `speed` signal: the standstill threshold used by laws, m/s.
pub const SPEED_THRESHOLD: f64 = 0.5;
/// Value of the constant `length` signal: the proximity budget used by laws, m.
pub const PROXIMITY: f64 = 10.0;
pub const NPC_ACCEL: f64 = 3.0;
pub const NPC_DECEL: f64 = 6.0;
/// Below this speed the ego counts as standing still, m/s.
const STILL: f64 = 0.1;
const BASE_VISIBILITY: f64 = 200.0;

/// Signals every run records, besides the per-NPC `npcK.{x,y,speed,active}`.
pub const SIGNALS: [&str; 25] = [
    "real_speed",
    "speed_limit",
    "headway",
    "stopline_ahead",
    "junction_ahead",
    "in_junction",
    "direction",
    "traffic_light_ahead.color",
    "traffic_light_ahead.direction.color",
    "priority_npc_ahead",
    "priority_peds_ahead",
    "junction_blocked",
    "collision",
    "hour",
    "visibility",
    "turn_signal",
    "headlight",
    "lane",
    "offset",
    "ego.x",
    "ego.y",
    "ego.accel",
    "speed",
    "length",
    "elapsed",
];

const DIRECTIONS: [&str; 3] = ["straight", "left", "right"];
const COLORS: [&str; 4] = ["none", "red", "yellow", "green"];
const SIGNAL_STATES: [&str; 3] = ["none", "left", "right"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Destination,
    Collision,
    Timeout,
    MaxDuration,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Destination => "destination",
            Termination::Collision => "collision",
            Termination::Timeout => "timeout",
            Termination::MaxDuration => "max_duration",
        }
    }

    /// Termination recorded in a simulated trace's metadata.
    pub fn of(trace: &Trace) -> Option<Termination> {
        match trace.meta.extra.get("termination")?.as_str() {
            "destination" => Some(Termination::Destination),
            "collision" => Some(Termination::Collision),
            "timeout" => Some(Termination::Timeout),
            "max_duration" => Some(Termination::MaxDuration),
            _ => None,
        }
    }
}

/// Visibility in metres for fog and rain intensities in [0, 1].
pub fn visibility(fog: f64, rain: f64) -> f64 {
    BASE_VISIBILITY * (1.0 - 0.9 * fog) * (1.0 - 0.3 * rain)
}

/// Braking limit on a road with wetness in [0, 1].
pub fn braking_limit(max_decel: f64, wetness: f64) -> f64 {
    max_decel * (1.0 - 0.25 * wetness)
}

/// Fractional hour of day `elapsed` seconds after `hour:minute`.
pub fn hour_of_day(hour: u32, minute: u32, elapsed: f64) -> f64 {
    (hour as f64 + minute as f64 / 60.0 + elapsed / 3600.0).rem_euclid(24.0)
}

struct Npc<'r> {
    id: String,
    lane: &'r str,
    route: Route<'r>,
    s: f64,
    v: f64,
    target: f64,
    active: bool,
    next_item: usize,
}

#[derive(Clone, Copy)]
struct CrosswalkSpan {
    start: f64,
    end: f64,
}

struct Ego<'r> {
    route: Route<'r>,
    s: f64,
    v: f64,
    accel: f64,
    committed: bool,
    /// Whether the ego was braking for the stop line on the previous tick.
    holding: bool,
    still: f64,
}

/// Per-tick observation of the world from the ego's point of view.
struct Observation {
    speed_limit: f64,
    headway: f64,
    leader: Option<(f64, f64)>,
    stopline_ahead: f64,
    junction_ahead: f64,
    in_junction: bool,
    direction: &'static str,
    light: Option<LightColor>,
    priority_npc: bool,
    yield_npc: bool,
    priority_peds: bool,
    junction_blocked: bool,
    collision: bool,
    turn_signal: &'static str,
    headlight: bool,
}

struct World<'r> {
    road: &'r RoadStructure,
    scenario: &'r Scenario,
    policy: &'r EgoPolicy,
    cfg: &'r SimConfig,
    ego: Ego<'r>,
    npcs: Vec<Npc<'r>>,
    light: Option<LightProgram>,
    crosswalks: Vec<(usize, CrosswalkSpan)>,
    visibility: f64,
    /// Braking limit after the wet-road reduction, m/s².
    max_decel: f64,
}

fn half_extents(heading: [f64; 2]) -> [f64; 2] {
    if heading[0].abs() >= heading[1].abs() {
        [VEHICLE_LENGTH / 2.0, VEHICLE_WIDTH / 2.0]
    } else {
        [VEHICLE_WIDTH / 2.0, VEHICLE_LENGTH / 2.0]
    }
}

/// Whether two vehicle boxes overlap.
pub fn boxes_overlap(p: [f64; 2], hp: [f64; 2], q: [f64; 2], hq: [f64; 2]) -> bool {
    let (a, b) = (half_extents(hp), half_extents(hq));
    (p[0] - q[0]).abs() < a[0] + b[0] && (p[1] - q[1]).abs() < a[1] + b[1]
}

impl<'r> World<'r> {
    fn new(road: &'r RoadStructure, scenario: &'r Scenario, policy: &'r EgoPolicy, cfg: &'r SimConfig) -> Self {
        let lane = road.lane(&scenario.ego.lane).expect("validated scenario");
        let conn = road.connector(&scenario.ego.lane, &scenario.ego.dest);
        let route = Route::new(road, lane, conn);
        let npcs = scenario
            .npcs
            .iter()
            .map(|n| {
                let lane = road.lane(&n.lane).expect("validated scenario");
                Npc {
                    id: n.id.clone(),
                    lane: &lane.id,
                    route: Route::new(road, lane, road.default_connector(&lane.id)),
                    s: n.offset,
                    v: n.speed,
                    target: n.speed,
                    active: true,
                    next_item: 0,
                }
            })
            .collect();
        let mut crosswalks = Vec::new();
        for (i, p) in scenario.peds.iter().enumerate() {
            let cw = road.crosswalk(&p.crosswalk).expect("validated scenario");
            let (near, far) = (cw.from_center.0 - road.junction_half, cw.from_center.1 - road.junction_half);
            for seg in &route.segments {
                let Some(l) = seg.lane else { continue };
                if l.arm != cw.arm {
                    continue;
                }
                let span = match seg.kind {
                    SegmentKind::Approach => CrosswalkSpan { start: seg.start + seg.length - far, end: seg.start + seg.length - near },
                    _ => CrosswalkSpan { start: seg.start + near, end: seg.start + far },
                };
                crosswalks.push((i, span));
            }
        }
        let weather = |k| scenario.weather.get(&k).copied().unwrap_or(0.0);
        let light = if lane.signalized { scenario.light_for(road, &lane.id) } else { None };
        World {
            road,
            scenario,
            policy,
            cfg,
            ego: Ego { route, s: scenario.ego.offset, v: scenario.ego.speed, accel: 0.0, committed: false, holding: false, still: 0.0 },
            npcs,
            light,
            crosswalks,
            visibility: visibility(weather(WeatherKind::Fog), weather(WeatherKind::Rain)),
            max_decel: braking_limit(policy.max_decel, weather(WeatherKind::Wetness)),
        }
    }

    fn hour(&self, t: f64) -> f64 {
        hour_of_day(self.scenario.time.hour, self.scenario.time.minute, t)
    }

    /// Applies schedule items due at time `t`.
    fn apply_schedule(&mut self, t: f64) {
        for (spec, npc) in self.scenario.npcs.iter().zip(self.npcs.iter_mut()) {
            while let Some(item) = spec.schedule.get(npc.next_item) {
                if item.at > t + 1e-9 {
                    break;
                }
                match &item.action {
                    NpcAction::Speed(v) => npc.target = *v,
                    NpcAction::Goto(to) => {
                        let on_approach = npc.route.segment_at(npc.s).kind == SegmentKind::Approach;
                        if let (true, Some(c)) = (on_approach, self.road.connector(npc.lane, to)) {
                            let lane = self.road.lane(npc.lane).expect("npc lane exists");
                            npc.route = Route::new(self.road, lane, Some(c));
                        }
                    }
                }
                npc.next_item += 1;
            }
        }
    }

    /// Nearest NPC ahead on the ego's route: (bumper gap, speed).
    fn leader(&self) -> Option<(f64, f64)> {
        let ego = &self.ego;
        self.npcs
            .iter()
            .filter(|n| n.active)
            .filter_map(|n| {
                let seg = n.route.segment_at(n.s);
                let start = ego.route.segment_start(seg.id)?;
                let ds = start + (n.s - seg.start) - ego.s;
                (ds > 0.0).then_some((ds - VEHICLE_LENGTH, n.v))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// (any NPC has priority, some priority NPC is within the ego's yield range).
    fn priority_npcs(&self) -> (bool, bool) {
        let ego = &self.ego;
        let (Some(ec), Some(ej)) = (ego.route.connector, ego.route.junction_start()) else { return (false, false) };
        let (mut any, mut yield_to) = (false, false);
        for n in self.npcs.iter().filter(|n| n.active) {
            let (Some(nc), Some(nj)) = (n.route.connector, n.route.junction_start()) else { continue };
            if nc.from == ec.from {
                continue;
            }
            let Some((se, sn)) = ec.path.first_crossing(&nc.path) else { continue };
            let de = ej + se - ego.s;
            let dn = nj + sn - n.s;
            if de <= 0.0 || dn <= 0.0 || dn > PRIORITY_RANGE || n.v < STILL {
                continue;
            }
            if dn / n.v < de / ego.v.max(STILL) {
                any = true;
                yield_to |= dn <= self.policy.yield_npc_range;
            }
        }
        (any, yield_to)
    }

    fn peds_ahead(&self, t: f64) -> bool {
        self.crosswalks.iter().any(|(i, span)| {
            let p = &self.scenario.peds[*i];
            p.start <= t && t < p.end && span.start - self.ego.s <= PRIORITY_RANGE && self.ego.s <= span.end
        })
    }

    fn observe(&self, t: f64) -> Observation {
        let ego = &self.ego;
        let policy = self.policy;
        let seg = ego.route.segment_at(ego.s);
        let turn = ego.route.turn();
        let before_exit = ego.route.junction_end().is_some_and(|e| ego.s < e);
        let stop_line = ego.route.stop_line();
        let before_stop = stop_line.is_some_and(|l| ego.s <= l);
        let junction_ahead = match (seg.kind, ego.route.junction_start()) {
            (SegmentKind::Approach, Some(j)) => j - ego.s,
            (SegmentKind::Junction, _) => 0.0,
            _ => FAR,
        };
        let light = if before_stop { self.light.map(|p| p.color_at(t)) } else { None };
        let leader = self.leader();
        let headway = match leader {
            Some((gap, _)) if ego.v >= STILL => (gap.max(0.0) / ego.v).min(HEADWAY_CAP),
            _ => HEADWAY_CAP,
        };
        let (priority_npc, yield_npc) = self.priority_npcs();
        let junction_blocked = self
            .npcs
            .iter()
            .any(|n| n.active && n.v < SPEED_THRESHOLD && n.route.segment_at(n.s).kind == SegmentKind::Junction);
        let (p, h) = ego.route.pose(ego.s);
        let collision = self.npcs.iter().filter(|n| n.active).any(|n| {
            let (q, hq) = n.route.pose(n.s);
            boxes_overlap(p, h, q, hq)
        });
        let signalling = turn != Turn::Straight
            && (seg.kind == SegmentKind::Junction
                || (seg.kind == SegmentKind::Approach && junction_ahead <= policy.signal_distance));
        let hour = self.hour(t);
        let night = hour >= policy.headlight_on_hour || hour < policy.headlight_off_hour;
        let speed_limit = match seg.lane {
            Some(l) => l.speed_limit,
            None => ego.route.segments[0].lane.map_or(f64::INFINITY, |l| l.speed_limit),
        };
        Observation {
            speed_limit,
            headway,
            leader,
            stopline_ahead: match stop_line {
                Some(l) if before_stop => l - ego.s,
                _ => FAR,
            },
            junction_ahead,
            in_junction: seg.kind == SegmentKind::Junction,
            direction: if before_exit { turn.as_str() } else { "straight" },
            light,
            priority_npc,
            yield_npc,
            priority_peds: self.peds_ahead(t),
            junction_blocked,
            collision,
            turn_signal: if signalling { turn.as_str() } else { "none" },
            headlight: night || self.visibility < policy.headlight_visibility,
        }
    }

    /// Ego target speed for the next tick.
    fn ego_target(&mut self, obs: &Observation) -> f64 {
        let policy = self.policy;
        let max_decel = self.max_decel;
        let ego = &mut self.ego;
        let comf = policy.comfortable_decel.min(max_decel);
        let mut v_des = policy.cruise_speed;
        if self.visibility < policy.fog_visibility {
            v_des = v_des.min(policy.fog_speed);
        }
        let turn = ego.route.turn();
        if let (Turn::Left | Turn::Right, Some(js), Some(je)) = (turn, ego.route.junction_start(), ego.route.junction_end()) {
            if ego.s < je {
                // Look one tick ahead so the turn speed holds from the first junction sample.
                let d = (js - ego.s - ego.v * self.cfg.tick).max(0.0);
                v_des = v_des.min((policy.turn_speed.powi(2) + 2.0 * comf * d).sqrt());
            }
        }
        if policy.lane_keep {
            if let Some((gap, v_lead)) = obs.leader {
                let room = (gap - policy.min_gap).max(0.0);
                v_des = v_des.min(room / policy.time_gap).min((v_lead * v_lead + 2.0 * comf * room).sqrt());
            }
        }

        // Stop line decisions are only taken before crossing it.
        let stop_line = ego.route.stop_line();
        match stop_line {
            Some(l) if ego.s <= l => {
                let d = l - policy.stop_margin - ego.s;
                let need = if ego.v < STILL { 0.0 } else if d > 0.0 { ego.v * ego.v / (2.0 * d) } else { f64::INFINITY };
                // A stop already under way is not re-examined for feasibility.
                let can_stop = |limit: f64| ego.holding || need <= limit;
                let mut stop = false;
                if !ego.committed {
                    let limit = match obs.light {
                        Some(LightColor::Red) if policy.stop_on_red && !(policy.right_on_red && turn == Turn::Right) => {
                            Some(max_decel)
                        }
                        Some(LightColor::Yellow) if policy.stop_on_red => Some(comf),
                        _ => None,
                    };
                    if let Some(limit) = limit {
                        if can_stop(limit) {
                            stop = true;
                        } else {
                            ego.committed = true;
                        }
                    }
                }
                let near = ego.route.junction_start().is_some_and(|j| j - ego.s <= policy.yield_distance);
                if policy.yield_to_priority && near && (obs.yield_npc || obs.priority_peds) && can_stop(max_decel) {
                    stop = true;
                }
                ego.holding = stop;
                if stop {
                    v_des = v_des.min((2.0 * comf * d.max(0.0)).sqrt());
                }
            }
            _ => {
                ego.committed = false;
                ego.holding = false;
            }
        }
        v_des
    }

    fn step(&mut self, obs: &Observation) {
        let dt = self.cfg.tick;
        let v_des = self.ego_target(obs);
        let policy = self.policy;
        let ego = &mut self.ego;
        let v_new = bounded_speed(ego.v, v_des, policy.max_accel, self.max_decel, dt);
        ego.accel = (v_new - ego.v) / dt;
        ego.s += 0.5 * (ego.v + v_new) * dt;
        ego.v = v_new;
        ego.still = if ego.v < STILL { ego.still + dt } else { 0.0 };

        for n in self.npcs.iter_mut().filter(|n| n.active) {
            let v_new = bounded_speed(n.v, n.target, NPC_ACCEL, NPC_DECEL, dt);
            n.s += 0.5 * (n.v + v_new) * dt;
            n.v = v_new;
            if n.s >= n.route.length() {
                n.s = n.route.length();
                n.active = false;
            }
        }
    }
}

/// Speed after one tick of moving from `v` towards `target` with bounded
/// acceleration; the target is taken exactly when reachable.
fn bounded_speed(v: f64, target: f64, accel: f64, decel: f64, dt: f64) -> f64 {
    let target = target.max(0.0);
    if target > v + accel * dt {
        v + accel * dt
    } else if target < v - decel * dt {
        (v - decel * dt).max(0.0)
    } else {
        target
    }
}

/// Column store for the trace being recorded.
#[derive(Default)]
struct Recorder {
    numeric: BTreeMap<String, Vec<f64>>,
    categorical: BTreeMap<&'static str, (&'static [&'static str], Vec<&'static str>)>,
}

impl Recorder {
    fn num(&mut self, name: &str, v: f64) {
        self.numeric.entry(name.to_string()).or_default().push(v);
    }

    fn cat(&mut self, name: &'static str, alphabet: &'static [&'static str], v: &'static str) {
        self.categorical.entry(name).or_insert_with(|| (alphabet, Vec::new())).1.push(v);
    }

    fn finish(self, step: f64, len: usize) -> Result<Trace, SimError> {
        let mut trace = Trace::new(step, len)?;
        for (name, values) in self.numeric {
            trace.insert(&name, SignalData::Numeric(values))?;
        }
        for (name, (alphabet, labels)) in self.categorical {
            trace = trace.with_categorical(name, alphabet, &labels)?;
        }
        Ok(trace)
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Executes `scenario` on `road` until the ego reaches its destination,
/// collides, stands still for the blockage timeout, or time runs out.
pub fn run_scenario(
    scenario: &Scenario,
    road: &RoadStructure,
    policy: &EgoPolicy,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    scenario.validate(road)?;
    policy.validate()?;
    cfg.validate()?;
    let mut world = World::new(road, scenario, policy, cfg);
    let mut rec = Recorder::default();
    let last = (cfg.max_duration / cfg.tick + 1e-9).floor() as usize;
    let mut samples = 0;
    let mut termination = Termination::MaxDuration;
    for k in 0..=last {
        let t = k as f64 * cfg.tick;
        world.apply_schedule(t);
        let obs = world.observe(t);
        let ego = &world.ego;
        let (p, _) = ego.route.pose(ego.s);
        let seg = ego.route.segment_at(ego.s);
        rec.num("real_speed", ego.v);
        rec.num("ego.accel", ego.accel);
        rec.num("speed_limit", obs.speed_limit);
        rec.num("headway", obs.headway);
        rec.num("stopline_ahead", obs.stopline_ahead);
        rec.num("junction_ahead", obs.junction_ahead);
        rec.num("in_junction", flag(obs.in_junction));
        rec.cat("direction", &DIRECTIONS, obs.direction);
        let color = obs.light.map_or("none", LightColor::as_str);
        rec.cat("traffic_light_ahead.color", &COLORS, color);
        rec.cat("traffic_light_ahead.direction.color", &COLORS, color);
        rec.num("priority_npc_ahead", flag(obs.priority_npc));
        rec.num("priority_peds_ahead", flag(obs.priority_peds));
        rec.num("junction_blocked", flag(obs.junction_blocked));
        rec.num("collision", flag(obs.collision));
        rec.num("hour", world.hour(t));
        rec.num("visibility", world.visibility);
        rec.cat("turn_signal", &SIGNAL_STATES, obs.turn_signal);
        rec.num("headlight", flag(obs.headlight));
        let lane_no = seg.lane.and_then(|l| l.id.strip_prefix("lane")?.parse::<f64>().ok()).unwrap_or(0.0);
        rec.num("lane", lane_no);
        rec.num("offset", ego.s - seg.start);
        rec.num("ego.x", p[0]);
        rec.num("ego.y", p[1]);
        rec.num("speed", SPEED_THRESHOLD);
        rec.num("length", PROXIMITY);
        rec.num("elapsed", t);
        for n in &world.npcs {
            let (q, _) = n.route.pose(n.s);
            rec.num(&format!("{}.x", n.id), q[0]);
            rec.num(&format!("{}.y", n.id), q[1]);
            rec.num(&format!("{}.speed", n.id), if n.active { n.v } else { 0.0 });
            rec.num(&format!("{}.active", n.id), flag(n.active));
        }
        samples += 1;

        if obs.collision {
            termination = Termination::Collision;
            break;
        }
        if ego.s >= ego.route.length() {
            termination = Termination::Destination;
            break;
        }
        if ego.still >= cfg.blockage_timeout - 1e-9 {
            termination = Termination::Timeout;
            break;
        }
        if k == last {
            break;
        }
        world.step(&obs);
    }
    let mut trace = rec.finish(cfg.tick, samples)?;
    trace.meta.seed = cfg.seed;
    trace.meta.extra.insert("termination".into(), termination.as_str().into());
    trace.meta.extra.insert("road".into(), road.tag.to_string());
    Ok(trace)
}
