//! Closed polylines of great-circle arcs on the unit sphere.

use crate::error::ChainError;
use crate::vec3::Vec3;
use crate::Point;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct SpherePolyline {
    vertices: Vec<Point>,
    /// `cum[i]` is the arclength at vertex i; `cum[n]` is the total length.
    cum: Vec<f64>,
}

impl TryFrom<Vec<Point>> for SpherePolyline {
    type Error = ChainError;
    fn try_from(v: Vec<Point>) -> Result<Self, ChainError> {
        SpherePolyline::new(v)
    }
}

impl From<SpherePolyline> for Vec<Point> {
    fn from(p: SpherePolyline) -> Self {
        p.vertices
    }
}

/// Point at fraction `w` of the great-circle arc from `a` to `b`.
pub fn slerp(a: Point, b: Point, w: f64) -> Point {
    let theta = a.angle_to(b);
    if theta < 1e-12 {
        return (a + (b - a) * w).normalized();
    }
    let s = theta.sin();
    (a * (((1.0 - w) * theta).sin() / s) + b * ((w * theta).sin() / s)).normalized()
}

/// Great-circle distance from `p` to the arc `ab`, and the arc fraction of
/// the closest point.
pub fn arc_distance(p: Point, a: Point, b: Point) -> (f64, f64) {
    let n = a.cross(b);
    let nn = n.norm();
    if nn < 1e-15 {
        return (p.angle_to(a), 0.0);
    }
    let n = n / nn;
    let proj = p - n * n.dot(p);
    if proj.norm() > 1e-15 {
        let q = proj.normalized();
        // q lies on the arc iff it is between a and b.
        if a.cross(q).dot(n) >= 0.0 && q.cross(b).dot(n) >= 0.0 {
            let w = a.angle_to(q) / a.angle_to(b);
            return (p.angle_to(q), w.clamp(0.0, 1.0));
        }
    }
    let (da, db) = (p.angle_to(a), p.angle_to(b));
    if da <= db {
        (da, 0.0)
    } else {
        (db, 1.0)
    }
}

/// True if the closed arcs `ab` and `cd` (each shorter than pi) meet.
pub fn arcs_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let n1 = a.cross(b);
    let n2 = c.cross(d);
    let x = n1.cross(n2);
    if x.norm() < 1e-15 {
        // Same great circle: overlapping iff an endpoint lies on the other arc.
        return arc_distance(c, a, b).0 < 1e-12
            || arc_distance(d, a, b).0 < 1e-12
            || arc_distance(a, c, d).0 < 1e-12;
    }
    let x = x.normalized();
    let on = |q: Point, a: Point, b: Point, n: Point| a.cross(q).dot(n) >= -1e-15 && q.cross(b).dot(n) >= -1e-15;
    [x, -x].iter().any(|&q| on(q, a, b, n1) && on(q, c, d, n2))
}

impl SpherePolyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self, ChainError> {
        if vertices.len() < 3 {
            return Err(ChainError::InvalidPolyline(format!("{} vertices, need at least 3", vertices.len())));
        }
        let mut out = Vec::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            let n = v.norm();
            if !(n.is_finite() && (n - 1.0).abs() < 1e-9) {
                return Err(ChainError::InvalidPolyline(format!("vertex {i} is not on the unit sphere")));
            }
            out.push(*v / n);
        }
        let m = out.len();
        let mut cum = Vec::with_capacity(m + 1);
        cum.push(0.0);
        for i in 0..m {
            let (a, b) = (out[i], out[(i + 1) % m]);
            let len = a.angle_to(b);
            if !(len > 1e-14) || len > std::f64::consts::PI - 1e-9 {
                return Err(ChainError::InvalidPolyline(format!("segment {i} is degenerate or antipodal")));
            }
            cum.push(cum[i] + len);
        }
        Ok(SpherePolyline { vertices: out, cum })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.cum[self.vertices.len()]
    }

    /// Arclength at vertex `i`.
    pub fn vertex_s(&self, i: usize) -> f64 {
        self.cum[i]
    }

    pub fn segment(&self, i: usize) -> (Point, Point) {
        let m = self.vertices.len();
        (self.vertices[i % m], self.vertices[(i + 1) % m])
    }

    pub fn segment_length(&self, i: usize) -> f64 {
        self.cum[i + 1] - self.cum[i]
    }

    /// Wrap an arclength into `[0, length)`.
    pub fn wrap(&self, s: f64) -> f64 {
        s.rem_euclid(self.length())
    }

    /// Segment index containing arclength `s` and the fraction along it.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let s = self.wrap(s);
        let i = self.cum.partition_point(|&c| c <= s).saturating_sub(1).min(self.vertices.len() - 1);
        let w = (s - self.cum[i]) / self.segment_length(i);
        (i, w.clamp(0.0, 1.0))
    }

    pub fn point_at(&self, s: f64) -> Point {
        let (i, w) = self.locate(s);
        let (a, b) = self.segment(i);
        slerp(a, b, w)
    }

    /// Arclength distance between two parameters, measured the short way round.
    pub fn cyclic_gap(&self, s1: f64, s2: f64) -> f64 {
        let d = (s1 - s2).rem_euclid(self.length());
        d.min(self.length() - d)
    }

    /// Vertices with every segment subdivided to length at most `max_len`.
    pub fn densified(&self, max_len: f64) -> Vec<Point> {
        let mut out = vec![];
        for i in 0..self.vertices.len() {
            let (a, b) = self.segment(i);
            let k = (self.segment_length(i) / max_len).ceil().max(1.0) as usize;
            for j in 0..k {
                out.push(slerp(a, b, j as f64 / k as f64));
            }
        }
        out
    }

    /// Great-circle distance from `p` to the polyline (brute force).
    pub fn distance_to(&self, p: Point) -> f64 {
        (0..self.vertices.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                arc_distance(p, a, b).0
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// First pair of non-adjacent segments that intersect, if any.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let m = self.vertices.len();
        let boxes: Vec<(Point, f64)> = (0..m)
            .map(|i| {
                let (a, b) = self.segment(i);
                ((a + b) * 0.5, 0.5 * (a - b).norm() + 1e-12)
            })
            .collect();
        let cell = boxes.iter().map(|b| b.1).fold(0.0, f64::max).max(1e-6) * 2.0;
        let mut grid = crate::spatial::Grid::new(cell);
        for (i, b) in boxes.iter().enumerate() {
            grid.insert_box(b.0, b.1 + 0.1 * b.1, i as u32);
        }
        for i in 0..m {
            let mut hit = None;
            grid.around(boxes[i].0, 1, |j| {
                let j = j as usize;
                if hit.is_some() || j <= i || j == i + 1 || (i == 0 && j == m - 1) {
                    return;
                }
                if (boxes[i].0 - boxes[j].0).norm() > boxes[i].1 + boxes[j].1 {
                    return;
                }
                let (a, b) = self.segment(i);
                let (c, d) = self.segment(j);
                if arcs_intersect(a, b, c, d) {
                    hit = Some(j);
                }
            });
            if let Some(j) = hit {
                return Some((i, j));
            }
        }
        None
    }

    /// Great circle through `e3`-orthogonal plane, i.e. the equator, as `n` vertices.
    pub fn equator(n: usize) -> Self {
        let v = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        SpherePolyline::new(v).expect("equator polyline is valid")
    }
}

/// Hash-grid index over the segments of a polyline.
#[derive(Clone, Debug)]
pub struct PolylineIndex<'a> {
    line: &'a SpherePolyline,
    grid: crate::spatial::Grid,
}

impl<'a> PolylineIndex<'a> {
    /// `cell` is the grid spacing; queries cost roughly (radius / cell)^2 cells.
    pub fn new(line: &'a SpherePolyline, cell: f64) -> Self {
        let mut grid = crate::spatial::Grid::new(cell);
        for i in 0..line.len() {
            let (a, b) = line.segment(i);
            let len = line.segment_length(i);
            let half = 0.5 * (a - b).norm() + len * len / 8.0 + 1e-12;
            grid.insert_box((a + b) * 0.5, half, i as u32);
        }
        PolylineIndex { line, grid }
    }

    pub fn line(&self) -> &SpherePolyline {
        self.line
    }

    /// Nearest point of the polyline to `p` among those accepted by `keep`,
    /// searching out to angular distance `cap`. Returns `(distance, arclength)`.
    ///
    /// `keep(d, s)` is asked about the closest point of each nearby segment and,
    /// if that is rejected, about the segment's endpoints.
    pub fn nearest_where(&self, p: Point, cap: f64, keep: impl Fn(f64, f64) -> bool) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        let mut ring = 0i64;
        loop {
            self.grid.shell(p, ring, |id| {
                let i = id as usize;
                let (a, b) = self.line.segment(i);
                let s0 = self.line.vertex_s(i);
                let len = self.line.segment_length(i);
                let (d, w) = arc_distance(p, a, b);
                let mut consider = |d: f64, s: f64| {
                    if best.map_or(true, |(bd, _)| d < bd) && keep(d, s) {
                        best = Some((d, s));
                    }
                };
                if keep(d, s0 + w * len) {
                    consider(d, s0 + w * len);
                } else {
                    consider(p.angle_to(a), s0);
                    consider(p.angle_to(b), s0 + len);
                }
            });
            let reach = ring as f64 * self.grid.size;
            if best.map_or(false, |(d, _)| d <= reach) || reach > cap {
                break;
            }
            ring += 1;
        }
        best.filter(|&(d, _)| d <= cap)
    }

    pub fn nearest(&self, p: Point, cap: f64) -> Option<(f64, f64)> {
        self.nearest_where(p, cap, |_, _| true)
    }
}
