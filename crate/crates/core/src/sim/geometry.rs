//! 2D geometry primitives: vectors, polylines with arclength bookkeeping,
//! oriented boxes with a separating-axis overlap test, convex polygons.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn unit_from_angle(angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c, s)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    } else if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    a
}

/// Distance from `p` to segment `ab` and the clamped projection parameter.
pub fn point_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let closest = a + ab * t;
    (p.dist(closest), t)
}

/// A polyline with cached cumulative arclengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec2>,
    cum: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Self {
        assert!(points.len() >= 2, "polyline needs at least two points");
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in points.windows(2) {
            acc += w[0].dist(w[1]);
            cum.push(acc);
        }
        Polyline { points, cum }
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Point and tangent heading at arclength `s` (clamped to the line).
    pub fn point_at(&self, s: f64) -> (Vec2, f64) {
        let s = s.clamp(0.0, self.length());
        // cum is sorted; find the segment containing s.
        let mut i = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if i >= self.points.len() - 1 {
            i = self.points.len() - 2;
        }
        let a = self.points[i];
        let b = self.points[i + 1];
        let seg = self.cum[i + 1] - self.cum[i];
        let t = if seg > 0.0 { (s - self.cum[i]) / seg } else { 0.0 };
        (a + (b - a) * t, (b - a).angle())
    }

    /// Arclength and distance of the closest point on the line to `p`.
    pub fn project(&self, p: Vec2) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for i in 0..self.points.len() - 1 {
            let (d, t) = point_segment(p, self.points[i], self.points[i + 1]);
            if d < best.1 {
                let s = self.cum[i] + t * (self.cum[i + 1] - self.cum[i]);
                best = (s, d);
            }
        }
        best
    }

    /// Mean absolute curvature of the stretch `[s, s + window]`, from the
    /// tangent swing over the window.
    pub fn curvature_ahead(&self, s: f64, window: f64) -> f64 {
        let (_, h0) = self.point_at(s);
        let end = (s + window).min(self.length());
        if end - s < 1e-6 {
            return 0.0;
        }
        let (_, h1) = self.point_at(end);
        wrap_angle(h1 - h0).abs() / (end - s)
    }

    /// Points of the suffix starting at arclength `s` (with an interpolated
    /// first point).
    pub fn suffix_points(&self, s: f64) -> Vec<Vec2> {
        let s = s.clamp(0.0, self.length());
        let (start, _) = self.point_at(s);
        let mut pts = vec![start];
        for (i, p) in self.points.iter().enumerate() {
            if self.cum[i] > s + 1e-9 {
                pts.push(*p);
            }
        }
        if pts.len() == 1 {
            pts.push(*self.points.last().unwrap());
        }
        pts
    }
}

/// Oriented rectangle (vehicle footprint).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    pub half_length: f64,
    pub half_width: f64,
    pub heading: f64,
}

impl Obb {
    pub fn corners(&self) -> [Vec2; 4] {
        let fwd = Vec2::unit_from_angle(self.heading) * self.half_length;
        let left = Vec2::unit_from_angle(self.heading).perp() * self.half_width;
        [
            self.center + fwd + left,
            self.center + fwd - left,
            self.center - fwd - left,
            self.center - fwd + left,
        ]
    }

    /// Membership test via half-extent projections on the box axes.
    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.center;
        let fwd = Vec2::unit_from_angle(self.heading);
        let lat = fwd.perp();
        d.dot(fwd).abs() <= self.half_length && d.dot(lat).abs() <= self.half_width
    }
}

/// Separating-axis overlap test for two oriented rectangles. Touching
/// rectangles count as overlapping.
pub fn obbs_overlap(a: &Obb, b: &Obb) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    let axes = [
        Vec2::unit_from_angle(a.heading),
        Vec2::unit_from_angle(a.heading).perp(),
        Vec2::unit_from_angle(b.heading),
        Vec2::unit_from_angle(b.heading).perp(),
    ];
    for axis in axes {
        let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in ca {
            let p = c.dot(axis);
            amin = amin.min(p);
            amax = amax.max(p);
        }
        let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in cb {
            let p = c.dot(axis);
            bmin = bmin.min(p);
            bmax = bmax.max(p);
        }
        if amax < bmin || bmax < amin {
            return false;
        }
    }
    true
}

/// Point-in-convex-polygon; vertices in counterclockwise order.
pub fn point_in_convex_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let edge = b - a;
        if edge.x * (p.y - a.y) - edge.y * (p.x - a.x) < 0.0 {
            return false;
        }
    }
    true
}
