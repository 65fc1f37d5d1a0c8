//! Vehicle routes: a chain of lane and connector polylines with a single
//! arc-length coordinate.

use lawgen_core::road::{Connector, Lane, LaneRole, Polyline, RoadStructure, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Approach,
    Junction,
    Exit,
}

#[derive(Debug, Clone)]
pub struct Segment<'r> {
    pub kind: SegmentKind,
    pub id: &'r str,
    pub path: &'r Polyline,
    pub length: f64,
    /// Route arc length at which the segment begins.
    pub start: f64,
    pub lane: Option<&'r Lane>,
}

#[derive(Debug, Clone)]
pub struct Route<'r> {
    pub segments: Vec<Segment<'r>>,
    pub connector: Option<&'r Connector>,
}

impl<'r> Route<'r> {
    /// Route from `lane` through `connector` (if any) to its outgoing lane.
    pub fn new(road: &'r RoadStructure, lane: &'r Lane, connector: Option<&'r Connector>) -> Route<'r> {
        let mut segments = Vec::new();
        let first_kind = if lane.role == LaneRole::Incoming { SegmentKind::Approach } else { SegmentKind::Exit };
        segments.push(Segment {
            kind: first_kind,
            id: &lane.id,
            path: &lane.centerline,
            length: lane.length,
            start: 0.0,
            lane: Some(lane),
        });
        let connector = if lane.role == LaneRole::Incoming { connector } else { None };
        if let Some(c) = connector {
            segments.push(Segment {
                kind: SegmentKind::Junction,
                id: &c.id,
                path: &c.path,
                length: c.length,
                start: lane.length,
                lane: None,
            });
            let out = road.lane(&c.to).expect("connectors join existing lanes");
            segments.push(Segment {
                kind: SegmentKind::Exit,
                id: &out.id,
                path: &out.centerline,
                length: out.length,
                start: lane.length + c.length,
                lane: Some(out),
            });
        }
        Route { segments, connector }
    }

    pub fn length(&self) -> f64 {
        let last = self.segments.last().expect("routes have a segment");
        last.start + last.length
    }

    pub fn segment_at(&self, s: f64) -> &Segment<'r> {
        self.segments.iter().rev().find(|seg| s >= seg.start).unwrap_or(&self.segments[0])
    }

    /// Position and unit heading at route arc length `s`.
    pub fn pose(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let s = s.clamp(0.0, self.length());
        let seg = self.segment_at(s);
        seg.path.at(s - seg.start)
    }

    pub fn turn(&self) -> Turn {
        self.connector.map_or(Turn::Straight, |c| c.turn)
    }

    /// Route arc length where the junction begins, if the route enters it.
    pub fn junction_start(&self) -> Option<f64> {
        self.segments.iter().find(|s| s.kind == SegmentKind::Junction).map(|s| s.start)
    }

    pub fn junction_end(&self) -> Option<f64> {
        self.segments.iter().find(|s| s.kind == SegmentKind::Junction).map(|s| s.start + s.length)
    }

    /// Route arc length of the approach stop line.
    pub fn stop_line(&self) -> Option<f64> {
        let seg = &self.segments[0];
        (seg.kind == SegmentKind::Approach).then(|| seg.lane.and_then(|l| l.stop_line)).flatten()
    }

    /// Route arc length of `id`'s start, if the segment is on this route.
    pub fn segment_start(&self, id: &str) -> Option<f64> {
        self.segments.iter().find(|s| s.id == id).map(|s| s.start)
    }
}
