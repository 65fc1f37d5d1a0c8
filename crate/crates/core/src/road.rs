//! Road structures S1–S4: four-arm (or three-arm) junctions with straight
//! approach lanes, curved junction connectors, stop lines, signal heads and
//! crosswalks.
//!
//! The junction is an axis-aligned square centred at the origin. Arms extend
//! from its edges; traffic keeps to the right. Geometry is produced by
//! [`RoadStructure::build`] and shipped as JSON under `data/roads/`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const JUNCTION_HALF: f64 = 10.0;
pub const ARM_LENGTH: f64 = 80.0;
pub const LANE_WIDTH: f64 = 3.5;
/// Distance between the stop line and the junction edge.
pub const STOP_LINE_SETBACK: f64 = 5.0;
/// Crosswalks span this band of distances from the junction edge.
pub const CROSSWALK_BAND: (f64, f64) = (1.0, 4.0);
pub const DEFAULT_SPEED_LIMIT: f64 = 11.11;
const CONNECTOR_SEGMENTS: usize = 16;

#[derive(Debug, Error)]
pub enum RoadError {
    #[error("unknown road structure `{0}` (expected S1, S2, S3 or S4)")]
    UnknownTag(String),
    #[error("road data: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoadTag {
    S1,
    S2,
    S3,
    S4,
}

impl RoadTag {
    pub const ALL: [RoadTag; 4] = [RoadTag::S1, RoadTag::S2, RoadTag::S3, RoadTag::S4];

    pub fn as_str(self) -> &'static str {
        match self {
            RoadTag::S1 => "S1",
            RoadTag::S2 => "S2",
            RoadTag::S3 => "S3",
            RoadTag::S4 => "S4",
        }
    }
}

impl std::str::FromStr for RoadTag {
    type Err = RoadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "S1" | "s1" => Ok(RoadTag::S1),
            "S2" | "s2" => Ok(RoadTag::S2),
            "S3" | "s3" => Ok(RoadTag::S3),
            "S4" | "s4" => Ok(RoadTag::S4),
            _ => Err(RoadError::UnknownTag(s.to_string())),
        }
    }
}

impl std::fmt::Display for RoadTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Arm {
    N,
    E,
    S,
    W,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::N, Arm::E, Arm::S, Arm::W];

    /// Unit vector pointing from the junction centre out along the arm.
    pub fn outward(self) -> [f64; 2] {
        match self {
            Arm::N => [0.0, 1.0],
            Arm::E => [1.0, 0.0],
            Arm::S => [0.0, -1.0],
            Arm::W => [-1.0, 0.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::N => "N",
            Arm::E => "E",
            Arm::S => "S",
            Arm::W => "W",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneRole {
    /// Travels toward the junction.
    Incoming,
    /// Travels away from the junction.
    Outgoing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Left,
    Straight,
    Right,
}

impl Turn {
    pub fn as_str(self) -> &'static str {
        match self {
            Turn::Left => "left",
            Turn::Straight => "straight",
            Turn::Right => "right",
        }
    }
}

/// Piecewise-linear centreline with arc-length parametrisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
}

impl Polyline {
    pub fn new(points: Vec<[f64; 2]>) -> Polyline {
        assert!(points.len() >= 2, "a polyline needs two points");
        Polyline { points }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Point and unit heading at arc length `s`, clamped to the ends.
    pub fn at(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let mut rest = s.max(0.0);
        let last = self.points.len() - 2;
        for (i, w) in self.points.windows(2).enumerate() {
            let len = dist(w[0], w[1]);
            if rest <= len || i == last {
                let u = if len > 0.0 { (rest / len).min(1.0) } else { 0.0 };
                let p = [w[0][0] + u * (w[1][0] - w[0][0]), w[0][1] + u * (w[1][1] - w[0][1])];
                let h = if len > 0.0 { [(w[1][0] - w[0][0]) / len, (w[1][1] - w[0][1]) / len] } else { [1.0, 0.0] };
                return (p, h);
            }
            rest -= len;
        }
        unreachable!("polyline has at least one segment")
    }

    /// Arc lengths along `self` and `other` of their first crossing, if any.
    pub fn first_crossing(&self, other: &Polyline) -> Option<(f64, f64)> {
        let mut sa = 0.0;
        let mut best: Option<(f64, f64)> = None;
        for a in self.points.windows(2) {
            let la = dist(a[0], a[1]);
            let mut sb = 0.0;
            for b in other.points.windows(2) {
                let lb = dist(b[0], b[1]);
                if let Some((u, v)) = segment_intersection(a[0], a[1], b[0], b[1]) {
                    let cand = (sa + u * la, sb + v * lb);
                    if best.is_none_or(|(x, _)| cand.0 < x) {
                        best = Some(cand);
                    }
                }
                sb += lb;
            }
            sa += la;
        }
        best
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Parameters (u, v) in [0,1]² where segments p0-p1 and q0-q1 meet.
fn segment_intersection(p0: [f64; 2], p1: [f64; 2], q0: [f64; 2], q1: [f64; 2]) -> Option<(f64, f64)> {
    let r = [p1[0] - p0[0], p1[1] - p0[1]];
    let s = [q1[0] - q0[0], q1[1] - q0[1]];
    let denom = r[0] * s[1] - r[1] * s[0];
    if denom.abs() < 1e-12 {
        return None;
    }
    let qp = [q0[0] - p0[0], q0[1] - p0[1]];
    let u = (qp[0] * s[1] - qp[1] * s[0]) / denom;
    let v = (qp[0] * r[1] - qp[1] * r[0]) / denom;
    ((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)).then_some((u, v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub arm: Arm,
    pub role: LaneRole,
    pub centerline: Polyline,
    pub length: f64,
    pub speed_limit: f64,
    /// Arc length of the stop line on incoming lanes.
    pub stop_line: Option<f64>,
    /// Whether a signal head governs this approach.
    pub signalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connector {
    pub id: String,
    pub from: String,
    pub to: String,
    pub turn: Turn,
    pub path: Polyline,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crosswalk {
    pub id: String,
    pub arm: Arm,
    /// Distances from the junction centre along the arm covered by the crossing.
    pub from_center: (f64, f64),
}

/// Fixed-cycle signal timing for one approach, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightProgram {
    pub green: f64,
    pub yellow: f64,
    pub red: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightColor {
    Green,
    Yellow,
    Red,
}

impl LightColor {
    pub fn as_str(self) -> &'static str {
        match self {
            LightColor::Green => "green",
            LightColor::Yellow => "yellow",
            LightColor::Red => "red",
        }
    }
}

impl LightProgram {
    pub fn cycle(&self) -> f64 {
        self.green + self.yellow + self.red
    }

    /// Colour shown at time `t`. The cycle starts with green at `-offset`.
    pub fn color_at(&self, t: f64) -> LightColor {
        let c = self.cycle();
        if c <= 0.0 {
            return LightColor::Green;
        }
        let phase = (t + self.offset).rem_euclid(c);
        if phase < self.green {
            LightColor::Green
        } else if phase < self.green + self.yellow {
            LightColor::Yellow
        } else {
            LightColor::Red
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadStructure {
    pub schema_version: u32,
    pub tag: RoadTag,
    pub description: String,
    pub junction_half: f64,
    pub lanes: Vec<Lane>,
    pub connectors: Vec<Connector>,
    pub crosswalks: Vec<Crosswalk>,
    /// Default program per signalized incoming lane, in lane order.
    pub default_lights: Vec<(String, LightProgram)>,
}

pub const ROAD_SCHEMA_VERSION: u32 = 1;

/// Lane layout of one arm: directions present and number of lanes each way.
struct ArmSpec {
    arm: Arm,
    incoming: usize,
    outgoing: usize,
}

impl RoadStructure {
    /// Loads the shipped geometry for `tag`.
    pub fn load(tag: RoadTag) -> RoadStructure {
        let text = match tag {
            RoadTag::S1 => include_str!("../data/roads/S1.json"),
            RoadTag::S2 => include_str!("../data/roads/S2.json"),
            RoadTag::S3 => include_str!("../data/roads/S3.json"),
            RoadTag::S4 => include_str!("../data/roads/S4.json"),
        };
        serde_json::from_str(text).expect("shipped road data is valid")
    }

    pub fn from_json(text: &str) -> Result<RoadStructure, RoadError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("road structures serialise")
    }

    /// Builds the geometry of `tag` from first principles.
    pub fn build(tag: RoadTag) -> RoadStructure {
        let (description, arms, signalized): (&str, Vec<ArmSpec>, bool) = match tag {
            RoadTag::S1 => (
                "T-shaped junction: two-way east-west main road, two-way south arm",
                vec![
                    ArmSpec { arm: Arm::E, incoming: 1, outgoing: 1 },
                    ArmSpec { arm: Arm::S, incoming: 1, outgoing: 1 },
                    ArmSpec { arm: Arm::W, incoming: 1, outgoing: 1 },
                ],
                true,
            ),
            RoadTag::S2 => (
                "crossing of two one-way two-lane roads: eastbound and southbound",
                vec![
                    ArmSpec { arm: Arm::N, incoming: 2, outgoing: 0 },
                    ArmSpec { arm: Arm::E, incoming: 0, outgoing: 2 },
                    ArmSpec { arm: Arm::S, incoming: 0, outgoing: 2 },
                    ArmSpec { arm: Arm::W, incoming: 2, outgoing: 0 },
                ],
                true,
            ),
            RoadTag::S3 => (
                "four-way junction of two two-way roads",
                Arm::ALL.iter().map(|&arm| ArmSpec { arm, incoming: 1, outgoing: 1 }).collect(),
                true,
            ),
            RoadTag::S4 => (
                "unsignalized crossing of a two-way east-west road and a one-way southbound road",
                vec![
                    ArmSpec { arm: Arm::N, incoming: 1, outgoing: 0 },
                    ArmSpec { arm: Arm::E, incoming: 1, outgoing: 1 },
                    ArmSpec { arm: Arm::S, incoming: 0, outgoing: 1 },
                    ArmSpec { arm: Arm::W, incoming: 1, outgoing: 1 },
                ],
                false,
            ),
        };

        let j = JUNCTION_HALF;
        let mut lanes = Vec::new();
        for spec in &arms {
            let d = spec.arm.outward();
            // Incoming lanes drive along -d; their right-hand side is (-d.y, d.x).
            let in_right = [-d[1], d[0]];
            let out_right = [d[1], -d[0]];
            for k in 0..spec.incoming {
                // Lane k = 0 is the leftmost (closest to the centreline).
                let off = lane_offset(k, spec.incoming, spec.outgoing > 0);
                let o = [in_right[0] * off, in_right[1] * off];
                let start = [d[0] * (j + ARM_LENGTH) + o[0], d[1] * (j + ARM_LENGTH) + o[1]];
                let end = [d[0] * j + o[0], d[1] * j + o[1]];
                lanes.push(Lane {
                    id: String::new(),
                    arm: spec.arm,
                    role: LaneRole::Incoming,
                    centerline: Polyline::new(vec![start, end]),
                    length: ARM_LENGTH,
                    speed_limit: DEFAULT_SPEED_LIMIT,
                    stop_line: Some(ARM_LENGTH - STOP_LINE_SETBACK),
                    signalized,
                });
            }
            for k in 0..spec.outgoing {
                let off = lane_offset(k, spec.outgoing, spec.incoming > 0);
                let o = [out_right[0] * off, out_right[1] * off];
                let start = [d[0] * j + o[0], d[1] * j + o[1]];
                let end = [d[0] * (j + ARM_LENGTH) + o[0], d[1] * (j + ARM_LENGTH) + o[1]];
                lanes.push(Lane {
                    id: String::new(),
                    arm: spec.arm,
                    role: LaneRole::Outgoing,
                    centerline: Polyline::new(vec![start, end]),
                    length: ARM_LENGTH,
                    speed_limit: DEFAULT_SPEED_LIMIT,
                    stop_line: None,
                    signalized: false,
                });
            }
        }
        for (i, l) in lanes.iter_mut().enumerate() {
            l.id = format!("lane{}", i + 1);
        }

        let mut connectors = Vec::new();
        for from in lanes.iter().filter(|l| l.role == LaneRole::Incoming) {
            let from_lanes: Vec<&Lane> =
                lanes.iter().filter(|l| l.arm == from.arm && l.role == LaneRole::Incoming).collect();
            let from_rank = from_lanes.iter().position(|l| l.id == from.id).unwrap();
            for to_arm in Arm::ALL {
                if to_arm == from.arm {
                    continue;
                }
                let targets: Vec<&Lane> =
                    lanes.iter().filter(|l| l.arm == to_arm && l.role == LaneRole::Outgoing).collect();
                if targets.is_empty() {
                    continue;
                }
                let turn = turn_between(from.arm, to_arm);
                // Multi-lane approaches: straight keeps lane rank, right turns use
                // the rightmost lanes, left turns the leftmost.
                let pair = match turn {
                    Turn::Straight => targets.get(from_rank.min(targets.len() - 1)).copied(),
                    Turn::Right if from_rank + 1 == from_lanes.len() => targets.last().copied(),
                    Turn::Left if from_rank == 0 => targets.first().copied(),
                    _ => None,
                };
                let Some(to) = pair else { continue };
                let p0 = *from.centerline.points.last().unwrap();
                let p2 = to.centerline.points[0];
                let path = if turn == Turn::Straight {
                    Polyline::new(vec![p0, p2])
                } else {
                    let h0 = from.centerline.at(from.length).1;
                    let h2 = to.centerline.at(0.0).1;
                    // The control point is where the two lane lines meet.
                    let c = line_meet(p0, h0, p2, h2);
                    bezier(p0, c, p2, CONNECTOR_SEGMENTS)
                };
                connectors.push(Connector {
                    id: format!("j_{}_{}", from.id, to.id),
                    from: from.id.clone(),
                    to: to.id.clone(),
                    turn,
                    length: path.length(),
                    path,
                });
            }
        }

        let crosswalks = arms
            .iter()
            .map(|a| Crosswalk {
                id: format!("cw{}", a.arm.name()),
                arm: a.arm,
                from_center: (j + CROSSWALK_BAND.0, j + CROSSWALK_BAND.1),
            })
            .collect();

        let default_lights = lanes
            .iter()
            .filter(|l| l.signalized)
            .map(|l| {
                // Two-phase plan: east-west approaches start green, north-south red.
                let ew = matches!(l.arm, Arm::E | Arm::W);
                let prog = LightProgram { green: 20.0, yellow: 3.0, red: 23.0, offset: if ew { 0.0 } else { 23.0 } };
                (l.id.clone(), prog)
            })
            .collect();

        RoadStructure {
            schema_version: ROAD_SCHEMA_VERSION,
            tag,
            description: description.to_string(),
            junction_half: j,
            lanes,
            connectors,
            crosswalks,
            default_lights,
        }
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn lane_ids(&self) -> impl Iterator<Item = &str> {
        self.lanes.iter().map(|l| l.id.as_str())
    }

    pub fn connector(&self, from: &str, to: &str) -> Option<&Connector> {
        self.connectors.iter().find(|c| c.from == from && c.to == to)
    }

    pub fn connectors_from<'a>(&'a self, from: &'a str) -> impl Iterator<Item = &'a Connector> + 'a {
        self.connectors.iter().filter(move |c| c.from == from)
    }

    pub fn crosswalk(&self, id: &str) -> Option<&Crosswalk> {
        self.crosswalks.iter().find(|c| c.id == id)
    }

    /// Connector taken by default from `from`: straight if possible, else the
    /// first in connector order.
    pub fn default_connector<'a>(&'a self, from: &'a str) -> Option<&'a Connector> {
        self.connectors_from(from)
            .find(|c| c.turn == Turn::Straight)
            .or_else(|| self.connectors_from(from).next())
    }

    pub fn has_signals(&self) -> bool {
        self.lanes.iter().any(|l| l.signalized)
    }

    pub fn default_light(&self, lane: &str) -> Option<LightProgram> {
        self.default_lights.iter().find(|(l, _)| l == lane).map(|(_, p)| *p)
    }

    pub fn in_junction(&self, p: [f64; 2]) -> bool {
        p[0].abs() <= self.junction_half && p[1].abs() <= self.junction_half
    }
}

fn lane_offset(rank: usize, count: usize, two_way: bool) -> f64 {
    if two_way {
        LANE_WIDTH / 2.0 + rank as f64 * LANE_WIDTH
    } else {
        // One-way roads are centred on the arm axis.
        (rank as f64 + 0.5) * LANE_WIDTH - count as f64 * LANE_WIDTH / 2.0
    }
}

fn turn_between(from: Arm, to: Arm) -> Turn {
    // Heading while approaching is -outward(from); leaving it is outward(to).
    let a = from.outward();
    let h_in = [-a[0], -a[1]];
    let h_out = to.outward();
    let cross = h_in[0] * h_out[1] - h_in[1] * h_out[0];
    if cross > 0.5 {
        Turn::Left
    } else if cross < -0.5 {
        Turn::Right
    } else {
        Turn::Straight
    }
}

fn line_meet(p: [f64; 2], u: [f64; 2], q: [f64; 2], v: [f64; 2]) -> [f64; 2] {
    let denom = u[0] * v[1] - u[1] * v[0];
    let t = ((q[0] - p[0]) * v[1] - (q[1] - p[1]) * v[0]) / denom;
    [p[0] + t * u[0], p[1] + t * u[1]]
}

fn bezier(p0: [f64; 2], c: [f64; 2], p2: [f64; 2], segments: usize) -> Polyline {
    let pts = (0..=segments)
        .map(|i| {
            let t = i as f64 / segments as f64;
            let a = (1.0 - t) * (1.0 - t);
            let b = 2.0 * (1.0 - t) * t;
            let d = t * t;
            [a * p0[0] + b * c[0] + d * p2[0], a * p0[1] + b * c[1] + d * p2[1]]
        })
        .collect();
    Polyline::new(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_data_matches_builder() {
        for tag in RoadTag::ALL {
            assert_eq!(RoadStructure::load(tag), RoadStructure::build(tag), "{tag}");
        }
    }

    /// Rewrites `data/roads/*.json` from the builder.
    #[test]
    #[ignore]
    fn regenerate_road_data() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/roads");
        std::fs::create_dir_all(&dir).unwrap();
        for tag in RoadTag::ALL {
            std::fs::write(dir.join(format!("{tag}.json")), RoadStructure::build(tag).to_json() + "\n").unwrap();
        }
    }

    #[test]
    fn lane_counts_and_unique_ids() {
        let counts = [(RoadTag::S1, 6, 6), (RoadTag::S2, 8, 6), (RoadTag::S3, 8, 12), (RoadTag::S4, 6, 7)];
        for (tag, lanes, connectors) in counts {
            let r = RoadStructure::build(tag);
            assert_eq!(r.lanes.len(), lanes, "{tag} lanes");
            assert_eq!(r.connectors.len(), connectors, "{tag} connectors");
            let mut ids: Vec<&str> = r.lane_ids().collect();
            ids.dedup();
            assert_eq!(ids.len(), lanes);
        }
    }

    #[test]
    fn connectors_join_lane_ends() {
        for tag in RoadTag::ALL {
            let r = RoadStructure::build(tag);
            for c in &r.connectors {
                let from = r.lane(&c.from).unwrap();
                let to = r.lane(&c.to).unwrap();
                assert_eq!(from.role, LaneRole::Incoming);
                assert_eq!(to.role, LaneRole::Outgoing);
                assert!(dist(*from.centerline.points.last().unwrap(), c.path.points[0]) < 1e-9);
                assert!(dist(*c.path.points.last().unwrap(), to.centerline.points[0]) < 1e-9);
                assert!(c.path.points.iter().all(|p| r.in_junction(*p)), "{}", c.id);
            }
        }
    }

    #[test]
    fn turns_are_right_hand() {
        let r = RoadStructure::build(RoadTag::S3);
        // Quarter turns around the junction corners.
        for c in &r.connectors {
            let expected = match c.turn {
                Turn::Right => 8.25 * std::f64::consts::PI / 2.0,
                Turn::Straight => 20.0,
                Turn::Left => 11.75 * std::f64::consts::PI / 2.0,
            };
            assert!((c.length - expected).abs() < 0.1 * expected, "{} {:?} {}", c.id, c.turn, c.length);
        }
    }

    #[test]
    fn light_cycle() {
        let p = LightProgram { green: 10.0, yellow: 2.0, red: 8.0, offset: 0.0 };
        assert_eq!(p.color_at(0.0), LightColor::Green);
        assert_eq!(p.color_at(10.5), LightColor::Yellow);
        assert_eq!(p.color_at(19.9), LightColor::Red);
        assert_eq!(p.color_at(20.0), LightColor::Green);
        let shifted = LightProgram { offset: 12.0, ..p };
        assert_eq!(shifted.color_at(0.0), LightColor::Red);
    }

    #[test]
    fn polyline_lookup_and_crossing() {
        let a = Polyline::new(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]]);
        assert_eq!(a.length(), 20.0);
        assert_eq!(a.at(15.0), ([10.0, 5.0], [0.0, 1.0]));
        assert_eq!(a.at(99.0).0, [10.0, 10.0]);
        let b = Polyline::new(vec![[5.0, -5.0], [5.0, 5.0]]);
        assert_eq!(a.first_crossing(&b), Some((5.0, 5.0)));
    }
}
