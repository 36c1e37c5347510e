//! Road network model: lanes, routes through the intersection, spawn slots
//! and the signal schedule, plus a structured-text file format and the
//! canonical four-way map.

use super::geometry::{Polyline, Vec2};
use thiserror::Error;

/// Lane width of the built-in maps, meters.
pub const LANE_WIDTH: f64 = 4.0;
/// Half-size of the four-way intersection box, meters.
const BOX_HALF: f64 = 8.0;
/// Lane centerline offset from the road axis, meters.
const LANE_OFFSET: f64 = 2.0;
/// Road extent from the center, meters.
const ROAD_EXTENT: f64 = 60.0;

/// Maneuver through the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Maneuver {
    Straight,
    Left,
    Right,
}

impl Maneuver {
    pub const ALL: [Maneuver; 3] = [Maneuver::Straight, Maneuver::Left, Maneuver::Right];

    pub fn as_str(&self) -> &'static str {
        match self {
            Maneuver::Straight => "straight",
            Maneuver::Left => "left",
            Maneuver::Right => "right",
        }
    }

    pub fn from_str(s: &str) -> Option<Maneuver> {
        match s {
            "straight" => Some(Maneuver::Straight),
            "left" => Some(Maneuver::Left),
            "right" => Some(Maneuver::Right),
            _ => None,
        }
    }
}

/// Compass approach a vehicle enters the intersection from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approach {
    South,
    West,
    North,
    East,
}

impl Approach {
    /// Assignment order for controlled agents.
    pub const ALL: [Approach; 4] = [Approach::South, Approach::West, Approach::North, Approach::East];

    pub fn as_str(&self) -> &'static str {
        match self {
            Approach::South => "south",
            Approach::West => "west",
            Approach::North => "north",
            Approach::East => "east",
        }
    }

    pub fn from_str(s: &str) -> Option<Approach> {
        match s {
            "south" => Some(Approach::South),
            "west" => Some(Approach::West),
            "north" => Some(Approach::North),
            "east" => Some(Approach::East),
            _ => None,
        }
    }

    pub fn axis(&self) -> Axis {
        match self {
            Approach::South | Approach::North => Axis::NorthSouth,
            Approach::West | Approach::East => Axis::EastWest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    NorthSouth,
    EastWest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LightState {
    Green,
    Amber,
    Red,
}

/// Two-phase alternating signal: one axis runs green then amber while the
/// other holds red, then they swap. Cycle length is `2 * (green + amber)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSchedule {
    pub green: f64,
    pub amber: f64,
}

impl SignalSchedule {
    pub fn cycle(&self) -> f64 {
        2.0 * (self.green + self.amber)
    }

    /// Light shown to `axis` at absolute signal time `t` (seconds).
    pub fn state(&self, axis: Axis, t: f64) -> LightState {
        let cycle = self.cycle();
        let mut phase = t % cycle;
        if phase < 0.0 {
            phase += cycle;
        }
        let half = self.green + self.amber;
        let (own, offset) = match axis {
            Axis::NorthSouth => (phase < half, phase),
            Axis::EastWest => (phase >= half, phase - half),
        };
        if !own {
            LightState::Red
        } else if offset < self.green {
            LightState::Green
        } else {
            LightState::Amber
        }
    }
}

/// A lane with a centerline polyline. Connector lanes live inside the
/// intersection box and carry no markings.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: String,
    pub width: f64,
    pub connector: bool,
    pub center: Polyline,
}

/// A named lane sequence from an approach through the box to an exit.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub name: String,
    pub approach: Approach,
    pub maneuver: Maneuver,
    pub lanes: Vec<String>,
    /// Concatenated centerline of the member lanes.
    pub path: Polyline,
    /// Arclength where the approach lane ends (the stop line).
    pub entry_s: f64,
    /// Arclength where the exit lane begins.
    pub exit_s: f64,
}

/// A legal spawn position: a lane and a longitudinal offset along it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpawnSlot {
    pub lane: String,
    /// Arclength from the lane start.
    pub offset: f64,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("map line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("map invalid: {0}")]
    Invalid(String),
}

/// Full road network consumed by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadMap {
    pub name: String,
    pub lanes: Vec<Lane>,
    /// Counterclockwise convex polygon.
    pub intersection_box: Vec<Vec2>,
    pub signal: SignalSchedule,
    pub spawn_slots: Vec<SpawnSlot>,
    pub routes: Vec<Route>,
}

impl RoadMap {
    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn route(&self, name: &str) -> Option<&Route> {
        self.routes.iter().find(|r| r.name == name)
    }

    pub fn route_for(&self, approach: Approach, maneuver: Maneuver) -> Option<&Route> {
        self.routes
            .iter()
            .find(|r| r.approach == approach && r.maneuver == maneuver)
    }

    /// Spawn slots of one approach lane, nearest to the stop line first.
    pub fn approach_slots(&self, approach: Approach) -> Vec<&SpawnSlot> {
        let lane_id = format!("{}_in", approach.as_str());
        let mut slots: Vec<&SpawnSlot> = self
            .spawn_slots
            .iter()
            .filter(|s| s.lane == lane_id)
            .collect();
        slots.sort_by(|a, b| b.offset.partial_cmp(&a.offset).unwrap());
        slots
    }

    /// World pose (position, heading) of a spawn slot.
    pub fn slot_pose(&self, slot: &SpawnSlot) -> (Vec2, f64) {
        let lane = self.lane(&slot.lane).expect("slot references a lane");
        lane.center.point_at(slot.offset)
    }

    /// The canonical signalized four-way intersection: one lane per
    /// direction, right-hand traffic, twelve routes, five spawn slots per
    /// approach.
    pub fn four_way() -> RoadMap {
        let b = BOX_HALF;
        let c = LANE_OFFSET;
        let e = ROAD_EXTENT;

        let straight_lane = |id: &str, from: Vec2, to: Vec2, connector: bool| Lane {
            id: id.to_string(),
            width: LANE_WIDTH,
            connector,
            center: Polyline::new(vec![from, to]),
        };

        let mut lanes = vec![
            straight_lane("south_in", Vec2::new(c, -e), Vec2::new(c, -b), false),
            straight_lane("north_in", Vec2::new(-c, e), Vec2::new(-c, b), false),
            straight_lane("west_in", Vec2::new(-e, -c), Vec2::new(-b, -c), false),
            straight_lane("east_in", Vec2::new(e, c), Vec2::new(b, c), false),
            straight_lane("north_out", Vec2::new(c, b), Vec2::new(c, e), false),
            straight_lane("south_out", Vec2::new(-c, -b), Vec2::new(-c, -e), false),
            straight_lane("east_out", Vec2::new(b, -c), Vec2::new(e, -c), false),
            straight_lane("west_out", Vec2::new(-b, c), Vec2::new(-e, c), false),
        ];

        // Quarter-circle connector sampled finely enough that projection and
        // curvature lookups behave smoothly.
        let arc = |center: Vec2, radius: f64, a0: f64, a1: f64| -> Vec<Vec2> {
            let n = 18;
            (0..=n)
                .map(|i| {
                    let a = a0 + (a1 - a0) * (i as f64 / n as f64);
                    center + Vec2::unit_from_angle(a) * radius
                })
                .collect()
        };

        // Connector geometry for the south approach (entering at (c,-b)
        // heading +y); other approaches are 90-degree rotations.
        let south_connectors: Vec<(Maneuver, Vec<Vec2>)> = vec![
            (
                Maneuver::Straight,
                vec![Vec2::new(c, -b), Vec2::new(c, b)],
            ),
            (
                // Left to the west exit: quarter arc around (-b, -b).
                Maneuver::Left,
                arc(Vec2::new(-b, -b), b + c, 0.0, std::f64::consts::FRAC_PI_2),
            ),
            (
                // Right to the east exit: quarter arc around (b, -b).
                Maneuver::Right,
                arc(
                    Vec2::new(b, -b),
                    b - c,
                    std::f64::consts::PI,
                    std::f64::consts::FRAC_PI_2,
                ),
            ),
        ];

        let rotate_pts = |pts: &[Vec2], quarter_turns: usize| -> Vec<Vec2> {
            pts.iter()
                .map(|p| {
                    let mut q = *p;
                    for _ in 0..quarter_turns {
                        q = Vec2::new(-q.y, q.x);
                    }
                    q
                })
                .collect()
        };

        // Exit lane reached by each (approach, maneuver), in the same
        // rotation order as Approach::ALL.
        let exits = |approach: Approach, m: Maneuver| -> &'static str {
            use Approach::*;
            use Maneuver::*;
            match (approach, m) {
                (South, Straight) => "north_out",
                (South, Left) => "west_out",
                (South, Right) => "east_out",
                (West, Straight) => "east_out",
                (West, Left) => "north_out",
                (West, Right) => "south_out",
                (North, Straight) => "south_out",
                (North, Left) => "east_out",
                (North, Right) => "west_out",
                (East, Straight) => "west_out",
                (East, Left) => "south_out",
                (East, Right) => "north_out",
            }
        };

        let mut routes = Vec::new();
        for (turn, approach) in Approach::ALL.iter().enumerate() {
            for (maneuver, pts) in &south_connectors {
                let conn_id = format!("conn_{}_{}", approach.as_str(), maneuver.as_str());
                let conn_pts = rotate_pts(pts, turn);
                lanes.push(Lane {
                    id: conn_id.clone(),
                    width: LANE_WIDTH,
                    connector: true,
                    center: Polyline::new(conn_pts),
                });
                routes.push((
                    *approach,
                    *maneuver,
                    vec![
                        format!("{}_in", approach.as_str()),
                        conn_id,
                        exits(*approach, *maneuver).to_string(),
                    ],
                ));
            }
        }

        let mut spawn_slots = Vec::new();
        for approach in Approach::ALL {
            let lane_id = format!("{}_in", approach.as_str());
            let lane_len = e - b;
            // Slots 10..42 m behind the stop line, 8 m apart.
            for back in [10.0, 18.0, 26.0, 34.0, 42.0] {
                spawn_slots.push(SpawnSlot {
                    lane: lane_id.clone(),
                    offset: lane_len - back,
                });
            }
        }

        let intersection_box = vec![
            Vec2::new(-b, -b),
            Vec2::new(b, -b),
            Vec2::new(b, b),
            Vec2::new(-b, b),
        ];

        let mut map = RoadMap {
            name: "fourway".to_string(),
            lanes,
            intersection_box,
            signal: SignalSchedule { green: 15.0, amber: 3.0 },
            spawn_slots,
            routes: Vec::new(),
        };
        map.routes = routes
            .into_iter()
            .map(|(approach, maneuver, lane_ids)| map.build_route(approach, maneuver, lane_ids))
            .collect();
        map
    }

    fn build_route(&self, approach: Approach, maneuver: Maneuver, lane_ids: Vec<String>) -> Route {
        let mut pts: Vec<Vec2> = Vec::new();
        for id in &lane_ids {
            let lane = self.lane(id).expect("route lane exists");
            for p in &lane.center.points {
                if pts.last().map(|l| l.dist(*p) > 1e-9).unwrap_or(true) {
                    pts.push(*p);
                }
            }
        }
        let path = Polyline::new(pts);
        let entry_s = self.lane(&lane_ids[0]).unwrap().center.length();
        let exit_s = entry_s + self.lane(&lane_ids[1]).unwrap().center.length();
        Route {
            name: format!("{}_{}", approach.as_str(), maneuver.as_str()),
            approach,
            maneuver,
            lanes: lane_ids,
            path,
            entry_s,
            exit_s,
        }
    }

    /// Structural sanity: route lanes connect, slots don't overlap at
    /// vehicle length, box is convex-ish (non-empty).
    pub fn validate(&self) -> Result<(), MapError> {
        for route in &self.routes {
            for pair in route.lanes.windows(2) {
                let a = self
                    .lane(&pair[0])
                    .ok_or_else(|| MapError::Invalid(format!("route {} references missing lane {}", route.name, pair[0])))?;
                let b = self
                    .lane(&pair[1])
                    .ok_or_else(|| MapError::Invalid(format!("route {} references missing lane {}", route.name, pair[1])))?;
                let gap = a.center.points.last().unwrap().dist(b.center.points[0]);
                if gap > 1e-6 {
                    return Err(MapError::Invalid(format!(
                        "route {}: lanes {} and {} are {gap} m apart",
                        route.name, pair[0], pair[1]
                    )));
                }
            }
        }
        for (i, a) in self.spawn_slots.iter().enumerate() {
            let (pa, _) = self.slot_pose(a);
            for b in &self.spawn_slots[i + 1..] {
                let (pb, _) = self.slot_pose(b);
                if pa.dist(pb) < super::vehicle::VEHICLE_LENGTH {
                    return Err(MapError::Invalid(format!(
                        "spawn slots at {:?} and {:?} overlap",
                        pa, pb
                    )));
                }
            }
        }
        if self.intersection_box.len() < 3 {
            return Err(MapError::Invalid("intersection box is degenerate".into()));
        }
        Ok(())
    }

    /// Parses the structured-text map format written by [`RoadMap::format`].
    pub fn parse(text: &str) -> Result<RoadMap, MapError> {
        let mut name = String::new();
        let mut signal = SignalSchedule { green: 15.0, amber: 3.0 };
        let mut lanes: Vec<Lane> = Vec::new();
        let mut boxp: Vec<Vec2> = Vec::new();
        let mut spawn_slots: Vec<SpawnSlot> = Vec::new();
        let mut route_decls: Vec<(String, String, Vec<String>)> = Vec::new();

        let err = |line: usize, message: &str| MapError::Parse {
            line,
            message: message.to_string(),
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match head {
                "name" => name = rest.to_string(),
                "signal" => {
                    for part in rest.split_whitespace() {
                        let (k, v) = part
                            .split_once('=')
                            .ok_or_else(|| err(line_no, "signal expects key=value pairs"))?;
                        let v: f64 = v.parse().map_err(|_| err(line_no, "bad signal number"))?;
                        match k {
                            "green" => signal.green = v,
                            "amber" => signal.amber = v,
                            _ => return Err(err(line_no, "unknown signal key")),
                        }
                    }
                }
                "box" => {
                    boxp = rest
                        .split_whitespace()
                        .map(|pair| parse_point(pair).ok_or_else(|| err(line_no, "bad box point")))
                        .collect::<Result<_, _>>()?;
                }
                "lane" => {
                    let (decl, pts) = rest
                        .split_once(':')
                        .ok_or_else(|| err(line_no, "lane expects `:` before points"))?;
                    let mut parts = decl.split_whitespace();
                    let id = parts
                        .next()
                        .ok_or_else(|| err(line_no, "lane needs an id"))?
                        .to_string();
                    let mut width = LANE_WIDTH;
                    let mut connector = false;
                    for p in parts {
                        if let Some(w) = p.strip_prefix("width=") {
                            width = w.parse().map_err(|_| err(line_no, "bad lane width"))?;
                        } else if p == "connector" {
                            connector = true;
                        } else {
                            return Err(err(line_no, "unknown lane attribute"));
                        }
                    }
                    let points: Vec<Vec2> = pts
                        .split_whitespace()
                        .map(|pair| parse_point(pair).ok_or_else(|| err(line_no, "bad lane point")))
                        .collect::<Result<_, _>>()?;
                    if points.len() < 2 {
                        return Err(err(line_no, "lane needs at least two points"));
                    }
                    lanes.push(Lane {
                        id,
                        width,
                        connector,
                        center: Polyline::new(points),
                    });
                }
                "route" => {
                    let (decl, lane_list) = rest
                        .split_once(':')
                        .ok_or_else(|| err(line_no, "route expects `:` before lanes"))?;
                    let mut parts = decl.split_whitespace();
                    let rname = parts
                        .next()
                        .ok_or_else(|| err(line_no, "route needs a name"))?
                        .to_string();
                    let approach = parts
                        .next()
                        .and_then(|p| p.strip_prefix("approach="))
                        .ok_or_else(|| err(line_no, "route needs approach=<dir>"))?
                        .to_string();
                    let lane_ids: Vec<String> =
                        lane_list.split_whitespace().map(str::to_string).collect();
                    if lane_ids.len() < 2 {
                        return Err(err(line_no, "route needs at least two lanes"));
                    }
                    route_decls.push((rname, approach, lane_ids));
                }
                "spawn" => {
                    let mut parts = rest.split_whitespace();
                    let lane = parts
                        .next()
                        .ok_or_else(|| err(line_no, "spawn needs a lane"))?
                        .to_string();
                    let back: f64 = parts
                        .next()
                        .ok_or_else(|| err(line_no, "spawn needs an offset"))?
                        .parse()
                        .map_err(|_| err(line_no, "bad spawn offset"))?;
                    let lane_len = lanes
                        .iter()
                        .find(|l| l.id == lane)
                        .ok_or_else(|| err(line_no, "spawn references unknown lane"))?
                        .center
                        .length();
                    spawn_slots.push(SpawnSlot {
                        lane,
                        offset: lane_len - back,
                    });
                }
                _ => return Err(err(line_no, "unknown map statement")),
            }
        }

        let mut map = RoadMap {
            name,
            lanes,
            intersection_box: boxp,
            signal,
            spawn_slots,
            routes: Vec::new(),
        };
        let mut routes = Vec::new();
        for (rname, approach, lane_ids) in route_decls {
            let approach = Approach::from_str(&approach)
                .ok_or_else(|| MapError::Invalid(format!("route {rname}: bad approach")))?;
            let maneuver = rname
                .rsplit('_')
                .next()
                .and_then(Maneuver::from_str)
                .ok_or_else(|| MapError::Invalid(format!("route {rname}: name must end in a maneuver")))?;
            for id in &lane_ids {
                if map.lane(id).is_none() {
                    return Err(MapError::Invalid(format!(
                        "route {rname} references unknown lane {id}"
                    )));
                }
            }
            routes.push(map.build_route(approach, maneuver, lane_ids));
        }
        map.routes = routes;
        map.validate()?;
        Ok(map)
    }

    /// Structured-text form; `RoadMap::parse` reads it back equal.
    pub fn format(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("name {}\n", self.name));
        out.push_str(&format!(
            "signal green={} amber={}\n",
            self.signal.green, self.signal.amber
        ));
        let box_pts: Vec<String> = self
            .intersection_box
            .iter()
            .map(|p| format!("{},{}", p.x, p.y))
            .collect();
        out.push_str(&format!("box {}\n", box_pts.join(" ")));
        for lane in &self.lanes {
            let pts: Vec<String> = lane
                .center
                .points
                .iter()
                .map(|p| format!("{},{}", p.x, p.y))
                .collect();
            let conn = if lane.connector { " connector" } else { "" };
            out.push_str(&format!(
                "lane {} width={}{} : {}\n",
                lane.id,
                lane.width,
                conn,
                pts.join(" ")
            ));
        }
        for route in &self.routes {
            out.push_str(&format!(
                "route {} approach={} : {}\n",
                route.name,
                route.approach.as_str(),
                route.lanes.join(" ")
            ));
        }
        for slot in &self.spawn_slots {
            let lane_len = self.lane(&slot.lane).unwrap().center.length();
            out.push_str(&format!("spawn {} {}\n", slot.lane, lane_len - slot.offset));
        }
        out
    }
}

fn parse_point(pair: &str) -> Option<Vec2> {
    let (x, y) = pair.split_once(',')?;
    Some(Vec2::new(x.parse().ok()?, y.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_way_is_valid_and_has_twelve_routes() {
        let map = RoadMap::four_way();
        map.validate().unwrap();
        assert_eq!(map.routes.len(), 12);
        assert_eq!(map.spawn_slots.len(), 20);
        for route in &map.routes {
            assert!(route.path.length() > 100.0, "route {} too short", route.name);
            assert!(route.entry_s < route.exit_s);
        }
    }

    #[test]
    fn four_way_round_trips_through_text() {
        let map = RoadMap::four_way();
        let text = map.format();
        let parsed = RoadMap::parse(&text).unwrap();
        assert_eq!(map, parsed);
    }

    #[test]
    fn signal_alternates_between_axes() {
        let s = SignalSchedule { green: 15.0, amber: 3.0 };
        assert_eq!(s.cycle(), 36.0);
        assert_eq!(s.state(Axis::NorthSouth, 0.0), LightState::Green);
        assert_eq!(s.state(Axis::EastWest, 0.0), LightState::Red);
        assert_eq!(s.state(Axis::NorthSouth, 16.0), LightState::Amber);
        assert_eq!(s.state(Axis::NorthSouth, 20.0), LightState::Red);
        assert_eq!(s.state(Axis::EastWest, 20.0), LightState::Green);
        assert_eq!(s.state(Axis::EastWest, 34.0), LightState::Amber);
        // Cycle wraps around.
        assert_eq!(s.state(Axis::NorthSouth, 36.5), LightState::Green);
    }

    #[test]
    fn right_turn_radius_is_driveable() {
        // Bicycle-model minimum turn radius is wheelbase / tan(max steer)
        // ~= 4.94 m; every connector must stay above it.
        let map = RoadMap::four_way();
        for route in &map.routes {
            let kappa = route
                .path
                .curvature_ahead(route.entry_s, route.exit_s - route.entry_s);
            if kappa > 1e-9 {
                assert!(
                    1.0 / kappa > 5.2,
                    "route {} radius {} too tight",
                    route.name,
                    1.0 / kappa
                );
            }
        }
    }

    #[test]
    fn slots_come_nearest_first() {
        let map = RoadMap::four_way();
        let slots = map.approach_slots(Approach::South);
        assert_eq!(slots.len(), 5);
        assert!(slots[0].offset > slots[1].offset);
        let (pose, heading) = map.slot_pose(slots[0]);
        // Nearest south slot is 10 m behind the stop line at y = -8.
        assert!((pose.y - (-18.0)).abs() < 1e-9);
        assert!((heading - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }
}
