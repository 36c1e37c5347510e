//! Ego-centric bird's-eye-view occupancy grids.
//!
//! Four binary channels at 0.5 m/cell: drivable area, lane markings, vehicle
//! footprints (including the ego) and the remaining ego route. The ego sits
//! at cell (H/2, W/4) facing +x, so three quarters of the view look ahead.
//!
//! All geometry is evaluated in the ego frame, so an observation depends only
//! on relative poses: rigidly transforming the world and the ego together
//! leaves the grid identical cell for cell.

use super::geometry::{point_segment, Vec2};
use super::map::RoadMap;
use super::vehicle::VehicleState;

pub const GRID_CHANNELS: usize = 4;
pub const GRID_H: usize = 64;
pub const GRID_W: usize = 64;
pub const CELL_M: f64 = 0.5;
pub const EGO_ROW: usize = GRID_H / 2;
pub const EGO_COL: usize = GRID_W / 4;
/// Cells per channel.
pub const GRID_CELLS: usize = GRID_H * GRID_W;
/// Flattened observation length (channels x cells).
pub const GRID_LEN: usize = GRID_CHANNELS * GRID_CELLS;
/// Ego feature count appended to the grid: speed, target speed, remaining
/// route length.
pub const EGO_FEATURES: usize = 3;

/// Half-thickness of a lane-marking line, meters.
const MARKING_HALF: f64 = 0.25;
/// Half-width of the rendered route ribbon, meters.
const ROUTE_HALF: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Drivable = 0,
    LaneMarkings = 1,
    Vehicles = 2,
    EgoRoute = 3,
}

/// Sparse binary occupancy observation. `cells` holds the flattened indices
/// (channel-major) of all set cells, sorted ascending; everything else is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BirdviewObservation {
    pub cells: Vec<u16>,
    /// Raw ego features: speed (m/s), target speed (m/s), remaining route
    /// length (m).
    pub ego: [f64; EGO_FEATURES],
}

impl BirdviewObservation {
    pub fn is_set(&self, channel: Channel, row: usize, col: usize) -> bool {
        let idx = (channel as usize * GRID_CELLS + row * GRID_W + col) as u16;
        self.cells.binary_search(&idx).is_ok()
    }

    pub fn channel_count(&self, channel: Channel) -> usize {
        let lo = (channel as usize * GRID_CELLS) as u16;
        let hi = lo + GRID_CELLS as u16;
        self.cells.iter().filter(|&&c| c >= lo && c < hi).count()
    }

    /// Dense `{0,1}` tensor, channel-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; GRID_LEN];
        for &c in &self.cells {
            dense[c as usize] = 1.0;
        }
        dense
    }
}

/// Per-channel bit grid used while stamping.
struct CellSet {
    bits: [u64; GRID_CELLS / 64],
}

impl CellSet {
    fn new() -> Self {
        CellSet {
            bits: [0; GRID_CELLS / 64],
        }
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize) {
        let idx = row * GRID_W + col;
        self.bits[idx / 64] |= 1 << (idx % 64);
    }

    fn emit(&self, channel: usize, out: &mut Vec<u16>) {
        for (word_idx, &word) in self.bits.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let bit = w.trailing_zeros() as usize;
                out.push((channel * GRID_CELLS + word_idx * 64 + bit) as u16);
                w &= w - 1;
            }
        }
    }
}

/// World -> ego-frame transform.
struct EgoFrame {
    origin: Vec2,
    cos: f64,
    sin: f64,
}

impl EgoFrame {
    fn new(ego: &VehicleState) -> Self {
        EgoFrame {
            origin: ego.position,
            cos: ego.heading.cos(),
            sin: ego.heading.sin(),
        }
    }

    #[inline]
    fn to_ego(&self, p: Vec2) -> Vec2 {
        let d = p - self.origin;
        Vec2::new(
            self.cos * d.x + self.sin * d.y,
            -self.sin * d.x + self.cos * d.y,
        )
    }
}

#[inline]
fn cell_center(row: usize, col: usize) -> Vec2 {
    Vec2::new(
        (col as f64 - EGO_COL as f64) * CELL_M,
        (row as f64 - EGO_ROW as f64) * CELL_M,
    )
}

/// Cell-index window covering an ego-frame bounding box.
fn window(min: Vec2, max: Vec2) -> (usize, usize, usize, usize) {
    let col_lo = ((min.x / CELL_M) + EGO_COL as f64).floor().max(0.0) as usize;
    let col_hi = ((max.x / CELL_M) + EGO_COL as f64).ceil().min((GRID_W - 1) as f64) as usize;
    let row_lo = ((min.y / CELL_M) + EGO_ROW as f64).floor().max(0.0) as usize;
    let row_hi = ((max.y / CELL_M) + EGO_ROW as f64).ceil().min((GRID_H - 1) as f64) as usize;
    (row_lo, row_hi, col_lo, col_hi)
}

/// Marks cells whose center lies within `r_outer` of the segment `a..b`
/// (and, if `r_inner > 0`, at least `r_inner` away from it).
fn stamp_segment(set: &mut CellSet, a: Vec2, b: Vec2, r_outer: f64, r_inner: f64) {
    let pad = r_outer + CELL_M;
    let min = Vec2::new(a.x.min(b.x) - pad, a.y.min(b.y) - pad);
    let max = Vec2::new(a.x.max(b.x) + pad, a.y.max(b.y) + pad);
    if max.x < -(EGO_COL as f64 + 1.0) * CELL_M || max.y < -(EGO_ROW as f64 + 1.0) * CELL_M {
        return;
    }
    let (row_lo, row_hi, col_lo, col_hi) = window(min, max);
    for row in row_lo..=row_hi {
        for col in col_lo..=col_hi {
            let (d, _) = point_segment(cell_center(row, col), a, b);
            if d <= r_outer && d >= r_inner {
                set.set(row, col);
            }
        }
    }
}

fn stamp_convex_polygon(set: &mut CellSet, poly: &[Vec2]) {
    let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in poly {
        min = Vec2::new(min.x.min(p.x), min.y.min(p.y));
        max = Vec2::new(max.x.max(p.x), max.y.max(p.y));
    }
    let (row_lo, row_hi, col_lo, col_hi) = window(min, max);
    for row in row_lo..=row_hi {
        for col in col_lo..=col_hi {
            if convex_contains(poly, cell_center(row, col)) {
                set.set(row, col);
            }
        }
    }
}

/// Orientation-agnostic convex membership (corner order may flip under the
/// ego transform).
fn convex_contains(poly: &[Vec2], p: Vec2) -> bool {
    let n = poly.len();
    let mut sign = 0.0f64;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if cross.abs() < 1e-12 {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

/// Rasterizes the bird's-eye view for `ego`. `others` must contain every
/// other visible vehicle; the ego footprint is always drawn.
pub fn rasterize_birdview(
    map: &RoadMap,
    ego: &VehicleState,
    others: &[&VehicleState],
    v_target: f64,
) -> BirdviewObservation {
    let frame = EgoFrame::new(ego);
    let mut drivable = CellSet::new();
    let mut markings = CellSet::new();
    let mut vehicles = CellSet::new();
    let mut route_ch = CellSet::new();

    for lane in &map.lanes {
        let pts: Vec<Vec2> = lane.center.points.iter().map(|p| frame.to_ego(*p)).collect();
        let half = lane.width / 2.0;
        for w in pts.windows(2) {
            stamp_segment(&mut drivable, w[0], w[1], half, 0.0);
        }
        if !lane.connector {
            // Markings form an annulus around the single-segment centerline.
            for w in pts.windows(2) {
                stamp_segment(&mut markings, w[0], w[1], half + MARKING_HALF, half - MARKING_HALF);
            }
        }
    }
    let box_pts: Vec<Vec2> = map
        .intersection_box
        .iter()
        .map(|p| frame.to_ego(*p))
        .collect();
    stamp_convex_polygon(&mut drivable, &box_pts);

    let ego_corners = ego.footprint().corners().map(|p| frame.to_ego(p));
    stamp_convex_polygon(&mut vehicles, &ego_corners);
    for other in others {
        let corners = other.footprint().corners().map(|p| frame.to_ego(p));
        stamp_convex_polygon(&mut vehicles, &corners);
    }

    let route = map.route(&ego.route).expect("ego route exists");
    let remaining = route.path.suffix_points(ego.route_progress);
    let remaining_ego: Vec<Vec2> = remaining.iter().map(|p| frame.to_ego(*p)).collect();
    for w in remaining_ego.windows(2) {
        stamp_segment(&mut route_ch, w[0], w[1], ROUTE_HALF, 0.0);
    }

    let mut cells = Vec::new();
    drivable.emit(Channel::Drivable as usize, &mut cells);
    markings.emit(Channel::LaneMarkings as usize, &mut cells);
    vehicles.emit(Channel::Vehicles as usize, &mut cells);
    route_ch.emit(Channel::EgoRoute as usize, &mut cells);

    BirdviewObservation {
        cells,
        ego: [
            ego.speed,
            v_target,
            (route.path.length() - ego.route_progress).max(0.0),
        ],
    }
}
