//! Chains of orthogonally meeting circles around a Jordan polyline, the
//! reflection group they generate, and its limit set.

use crate::circle::{intersection_points, inversion_in_circle, SphereCircle};
use crate::error::ChainError;
use crate::moebius::{project_to_sphere, ExtComplex};
use crate::polyline::{PolylineIndex, SpherePolyline};
use crate::spatial::Grid;
use crate::vec3::Mat3;
use crate::{Circle, Complex, Mobius, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Centre spacing at which caps of radii `a` and `b` meet at a right angle:
/// `cos t = cos a cos b`, written without cancellation.
pub fn orthogonal_spacing(a: f64, b: f64) -> f64 {
    let (sa, sb) = ((0.5 * a).sin(), (0.5 * b).sin());
    2.0 * (sa * sa + a.cos() * sb * sb).sqrt().min(1.0).asin()
}

/// Cosine of the angle between two cap boundaries, from centres and radii.
pub fn cap_angle_cosine(c1: Point, a1: f64, c2: Point, a2: f64) -> f64 {
    let half = 0.5 * (c1 - c2).norm();
    let (s1, s2) = ((0.5 * a1).sin(), (0.5 * a2).sin());
    // cos t - cos a1 cos a2 = 2 s1^2 + 2 cos(a1) s2^2 - 2 sin^2(t/2)
    let num = 2.0 * (s1 * s1 + a1.cos() * s2 * s2 - half * half);
    num / (a1.sin() * a2.sin())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringChain {
    pub circles: Vec<Circle>,
    pub centers: Vec<Point>,
    /// Angular radii; authoritative over `circles[i].offset` for tiny caps.
    pub radii: Vec<f64>,
    /// `intersections[i]` holds the points where circle `i` meets circle `i+1`.
    pub intersections: Vec<[Point; 2]>,
    pub target_curve: SpherePolyline,
    pub delta: f64,
}

#[derive(Serialize, Deserialize)]
struct ChainRecord {
    centers: Vec<Point>,
    radii: Vec<f64>,
    target_curve: SpherePolyline,
    delta: f64,
}

impl Serialize for CoveringChain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ChainRecord {
            centers: self.centers.clone(),
            radii: self.radii.clone(),
            target_curve: self.target_curve.clone(),
            delta: self.delta,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoveringChain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = ChainRecord::deserialize(d)?;
        CoveringChain::from_caps(r.centers, r.radii, r.target_curve, r.delta).map_err(serde::de::Error::custom)
    }
}

impl CoveringChain {
    /// Assemble a chain from cap centres and radii. No invariant is checked
    /// beyond well-formedness; see [`CoveringChain::check`].
    pub fn from_caps(
        centers: Vec<Point>,
        radii: Vec<f64>,
        target_curve: SpherePolyline,
        delta: f64,
    ) -> Result<Self, ChainError> {
        if centers.len() != radii.len() || centers.len() < 3 {
            return Err(ChainError::Invalid(format!("{} centres and {} radii", centers.len(), radii.len())));
        }
        // Leave unit vectors untouched so that a serialized chain reloads bit for bit.
        let centers: Vec<Point> =
            centers.into_iter().map(|c| if (c.norm_sqr() - 1.0).abs() > 1e-15 { c.normalized() } else { c }).collect();
        let mut circles = Vec::with_capacity(centers.len());
        for (c, &a) in centers.iter().zip(&radii) {
            if !(a > 0.0 && a < std::f64::consts::FRAC_PI_2) {
                return Err(ChainError::Invalid(format!("radius {a} out of range")));
            }
            circles.push(SphereCircle::cap(*c, a)?);
        }
        let n = circles.len();
        let intersections = (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                match intersection_points(&circles[i], &circles[j]) {
                    Ok((p, q)) => [p, q],
                    Err(_) => {
                        // Not meeting: keep the boundary point of circle i facing circle j.
                        let dir = (centers[j] - centers[i] * centers[i].dot(centers[j])).normalized();
                        let p = centers[i] * radii[i].cos() + dir * radii[i].sin();
                        [p, p]
                    }
                }
            })
            .collect();
        Ok(CoveringChain { circles, centers, radii, intersections, target_curve, delta })
    }

    pub fn len(&self) -> usize {
        self.circles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }

    /// L, half the number of circles.
    pub fn half_count(&self) -> usize {
        self.circles.len() / 2
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        let n = self.len();
        (i + 1) % n == j || (j + 1) % n == i
    }

    /// Grid over the caps, for "which disk contains p" queries.
    pub(crate) fn disk_grid(&self) -> Grid {
        let rmax = self.radii.iter().cloned().fold(0.0, f64::max);
        let mut g = Grid::new((2.0 * rmax).max(1e-6));
        for (i, (&c, &a)) in self.centers.iter().zip(&self.radii).enumerate() {
            g.insert_box(c, a, i as u32);
        }
        g
    }

    /// Index of an open disk containing `p`, if any.
    pub fn covering_disk(&self, p: Point) -> Option<usize> {
        let g = self.disk_grid();
        self.covering_disk_in(&g, p, 0.0)
    }

    /// Index of a covering hemisphere (the half-space over a disk) that
    /// contains the ball point `x`, if any.
    pub(crate) fn hemisphere_containing(&self, g: &Grid, x: Point) -> Option<usize> {
        let r = x.norm();
        if !(r > 0.0) {
            return None;
        }
        // The half-space over a cap of radius a is seen from the origin
        // inside the cone of half-angle a, so only caps around x/|x| matter.
        let u = x / r;
        let mut hit: Option<usize> = None;
        for &i in g.at(g.cell(u)) {
            let i = i as usize;
            // |x - n / cos a| < tan a  <=>  2 x.n > (1 + |x|^2) cos a
            if 2.0 * x.dot(self.centers[i]) > (1.0 + r * r) * self.radii[i].cos() && hit.map_or(true, |h| i < h) {
                hit = Some(i);
            }
        }
        hit
    }

    pub(crate) fn covering_disk_in(&self, g: &Grid, p: Point, slack: f64) -> Option<usize> {
        let mut hit: Option<usize> = None;
        for &i in g.at(g.cell(p)) {
            let i = i as usize;
            if p.angle_to(self.centers[i]) < self.radii[i] + slack && hit.map_or(true, |h| i < h) {
                hit = Some(i);
            }
        }
        hit
    }

    /// Measure every chain invariant.
    pub fn check(&self) -> ChainCheck {
        let n = self.len();
        let mut failures = vec![];
        if n < 6 || n % 2 == 1 {
            failures.push(format!("{n} circles; need an even count of at least 6"));
        }
        let mut max_orth = 0.0f64;
        let mut worst_orth = 0;
        for i in 0..n {
            let j = (i + 1) % n;
            let r = cap_angle_cosine(self.centers[i], self.radii[i], self.centers[j], self.radii[j]).abs();
            if !(r <= max_orth) {
                max_orth = r;
                worst_orth = i;
            }
        }
        if !(max_orth <= ORTHOGONALITY_TOL) {
            failures.push(format!("circles {worst_orth} and {} meet at cos {max_orth:e}", (worst_orth + 1) % n));
        }
        // Non-adjacent separation.
        let grid = self.disk_grid();
        let mut min_gap = f64::INFINITY;
        let mut worst_pair = (0, 0);
        for i in 0..n {
            grid.around(self.centers[i], 1, |j| {
                let j = j as usize;
                if j <= i || self.are_adjacent(i, j) {
                    return;
                }
                let gap = self.centers[i].angle_to(self.centers[j]) - self.radii[i] - self.radii[j];
                if gap < min_gap {
                    min_gap = gap;
                    worst_pair = (i, j);
                }
            });
        }
        if !(min_gap > 0.0) {
            failures.push(format!("non-adjacent disks {} and {} overlap (gap {min_gap:e})", worst_pair.0, worst_pair.1));
        }
        let max_radius = self.radii.iter().cloned().fold(0.0, f64::max);
        if max_radius > self.delta * (1.0 + 1e-12) {
            failures.push(format!("radius {max_radius} exceeds delta {}", self.delta));
        }
        let line = &self.target_curve;
        let index = PolylineIndex::new(line, segment_cell(line, self.delta));
        let mut max_offset = 0.0f64;
        for &c in &self.centers {
            let d = index.nearest(c, 1e-6).map_or(f64::INFINITY, |x| x.0);
            max_offset = max_offset.max(d);
        }
        if !(max_offset <= 1e-9) {
            failures.push(format!("a centre lies {max_offset:e} off the target curve"));
        }
        let samples = COVER_SAMPLES.max(4 * n);
        let uncovered = (0..samples)
            .filter(|&k| {
                let p = line.point_at(line.length() * (k as f64 + 0.5) / samples as f64);
                self.covering_disk_in(&grid, p, 0.0).is_none()
            })
            .count();
        if uncovered > 0 {
            failures.push(format!("{uncovered} of {samples} curve samples uncovered"));
        }
        ChainCheck {
            count: n,
            max_orthogonality_residual: max_orth,
            min_nonadjacent_gap: min_gap,
            max_radius,
            max_center_offset: max_offset,
            curve_samples: samples,
            uncovered_samples: uncovered,
            ok: failures.is_empty(),
            failures,
            overlap_pair: if min_gap > 0.0 { None } else { Some(worst_pair) },
        }
    }
}

/// Tolerance on |cos| of consecutive intersection angles.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
const COVER_SAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub count: usize,
    pub max_orthogonality_residual: f64,
    pub min_nonadjacent_gap: f64,
    pub max_radius: f64,
    pub max_center_offset: f64,
    pub curve_samples: usize,
    pub uncovered_samples: usize,
    pub ok: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    overlap_pair: Option<(usize, usize)>,
}

fn segment_cell(line: &SpherePolyline, reach: f64) -> f64 {
    let mean = line.length() / line.len() as f64;
    mean.max(reach / 8.0).max(1e-6)
}

// ---------------------------------------------------------------------------
// Chain construction

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOptions {
    /// Disks the chain must keep clear of.
    pub obstacles: Vec<Circle>,
    /// Vertex indices where a centre is forced; neighbours shrink around them.
    pub corners: Vec<usize>,
    /// Radius as a fraction of the local clearance.
    pub kappa: f64,
    /// Lipschitz bound on the radius profile along the curve.
    pub lipschitz: f64,
    /// Neighbours of a corner start at this fraction of the corner radius.
    pub corner_factor: f64,
    /// Times kappa is shrunk after a failed non-adjacency check.
    pub retries: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { obstacles: vec![], corners: vec![], kappa: 0.4, lipschitz: 0.2, corner_factor: 0.55, retries: 4 }
    }
}

pub fn build_chain(lambda: &SpherePolyline, delta: f64) -> Result<CoveringChain, ChainError> {
    build_chain_with(lambda, delta, &ChainOptions::default())
}

/// Cover `lambda` by caps centred on it, consecutive ones orthogonal and the
/// rest disjoint. Radii follow `min(delta, kappa * clearance)` smoothed to be
/// Lipschitz; between forced centres the caps are walked along the curve and
/// uniformly rescaled so the last one meets the next forced cap orthogonally.
pub fn build_chain_with(lambda: &SpherePolyline, delta: f64, opts: &ChainOptions) -> Result<CoveringChain, ChainError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ChainError::InvalidPolyline(format!("delta {delta} must lie in (0, 1)")));
    }
    if let Some((i, j)) = lambda.self_intersection() {
        return Err(ChainError::InvalidPolyline(format!("segments {i} and {j} intersect")));
    }
    for &c in &opts.corners {
        if c >= lambda.len() {
            return Err(ChainError::InvalidPolyline(format!("corner index {c} out of range")));
        }
    }
    let clear = clearance_samples(lambda, delta, opts)?;
    let mut kappa = opts.kappa;
    let mut last_segment = 0;
    for _ in 0..=opts.retries {
        let profile = Profile::new(lambda, &clear, delta, kappa, opts);
        let (centers, radii) = walk_all(lambda, &profile)?;
        let chain = CoveringChain::from_caps(centers, radii, lambda.clone(), delta)?;
        let check = chain.check();
        if check.ok {
            return Ok(chain);
        }
        match check.overlap_pair {
            Some((i, _)) if check.failures.len() == 1 => {
                last_segment = lambda.locate(s_of_center(lambda, chain.centers[i])).0;
                kappa *= 0.75;
            }
            _ => return Err(ChainError::Invalid(check.failures.join("; "))),
        }
    }
    Err(ChainError::DeltaTooLarge { segment: last_segment })
}

fn s_of_center(line: &SpherePolyline, c: Point) -> f64 {
    let index = PolylineIndex::new(line, segment_cell(line, 0.0));
    index.nearest(c, std::f64::consts::PI).map_or(0.0, |x| x.1)
}

/// Clearance along the curve: distance to the nearest obstacle disk, or to a
/// part of the curve that is farther along the curve than twice its distance.
fn clearance_samples(line: &SpherePolyline, delta: f64, opts: &ChainOptions) -> Result<Vec<(f64, f64)>, ChainError> {
    let cap = delta / opts.kappa;
    let index = PolylineIndex::new(line, segment_cell(line, cap));
    let clear_at = |s: f64| -> f64 {
        let p = line.point_at(s);
        let own = index
            .nearest_where(p, cap, |d, t| line.cyclic_gap(s, t) > 2.0 * d + 1e-12)
            .map_or(cap, |x| x.0);
        opts.obstacles.iter().map(|o| o.signed_distance(p)).fold(own, f64::min)
    };
    // Initial grid: vertices plus subdivisions no longer than delta / 2.
    let mut s: Vec<f64> = vec![];
    for i in 0..line.len() {
        let k = (line.segment_length(i) / (0.5 * delta)).ceil().max(1.0) as usize;
        for j in 0..k {
            s.push(line.vertex_s(i) + line.segment_length(i) * j as f64 / k as f64);
        }
    }
    let mut c: Vec<f64> = s.par_iter().map(|&x| clear_at(x)).collect();
    // Refine until each interval is short compared with the radius it supports.
    for _ in 0..40 {
        let m = s.len();
        let splits: Vec<usize> = (0..m)
            .filter(|&k| {
                let len = if k + 1 < m { s[k + 1] - s[k] } else { line.length() - s[k] };
                let target = (opts.kappa * c[k].min(c[(k + 1) % m])).min(delta);
                len > 0.5 * target.max(0.0) && len > 1e-12
            })
            .collect();
        if splits.is_empty() {
            break;
        }
        if m + splits.len() > 4_000_000 {
            let k = splits[0];
            return Err(ChainError::DeltaTooSmall { segment: line.locate(s[k]).0 });
        }
        let mids: Vec<f64> = splits
            .iter()
            .map(|&k| {
                let end = if k + 1 < m { s[k + 1] } else { line.length() };
                0.5 * (s[k] + end)
            })
            .collect();
        let cm: Vec<f64> = mids.par_iter().map(|&x| clear_at(x)).collect();
        let mut pairs: Vec<(f64, f64)> = s.into_iter().zip(c).chain(mids.into_iter().zip(cm)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        s = pairs.iter().map(|p| p.0).collect();
        c = pairs.iter().map(|p| p.1).collect();
    }
    if let Some(k) = (0..s.len()).find(|&k| !(c[k] > 0.0)) {
        return Err(ChainError::InvalidPolyline(format!(
            "curve touches itself or an obstacle near segment {}",
            line.locate(s[k]).0
        )));
    }
    Ok(s.into_iter().zip(c).collect())
}

struct Profile<'a> {
    line: &'a SpherePolyline,
    s: Vec<f64>,
    r: Vec<f64>,
    /// (arclength, radius) of forced centres.
    forced: Vec<(f64, f64)>,
    corner_rule: bool,
    lipschitz: f64,
    corner_factor: f64,
}

impl<'a> Profile<'a> {
    fn new(line: &'a SpherePolyline, clear: &[(f64, f64)], delta: f64, kappa: f64, opts: &ChainOptions) -> Self {
        let s: Vec<f64> = clear.iter().map(|x| x.0).collect();
        let mut r: Vec<f64> = clear.iter().map(|x| (kappa * x.1).min(delta)).collect();
        let m = r.len();
        let total = line.length();
        let lam = opts.lipschitz;
        // Lipschitz envelope, twice round in each direction to settle the wrap.
        for _ in 0..2 {
            for k in 0..m {
                let prev = (k + m - 1) % m;
                let ds = (s[k] - s[prev]).rem_euclid(total);
                r[k] = r[k].min(r[prev] + lam * ds);
            }
            for k in (0..m).rev() {
                let next = (k + 1) % m;
                let ds = (s[next] - s[k]).rem_euclid(total);
                r[k] = r[k].min(r[next] + lam * ds);
            }
        }
        let mut p = Profile {
            line,
            s,
            r,
            forced: vec![],
            corner_rule: !opts.corners.is_empty(),
            lipschitz: lam,
            corner_factor: opts.corner_factor,
        };
        let mut corners: Vec<f64> = opts.corners.iter().map(|&i| line.vertex_s(i)).collect();
        if corners.is_empty() {
            corners.push(0.0);
        }
        corners.sort_by(f64::total_cmp);
        corners.dedup();
        p.forced = corners.into_iter().map(|sc| (sc, p.interp(sc))).collect();
        p
    }

    fn interp(&self, s: f64) -> f64 {
        let total = self.line.length();
        let s = s.rem_euclid(total);
        let m = self.s.len();
        let k = self.s.partition_point(|&x| x <= s).saturating_sub(1);
        let (s0, r0) = (self.s[k], self.r[k]);
        let (s1, r1) = if k + 1 < m { (self.s[k + 1], self.r[k + 1]) } else { (total + self.s[0], self.r[0]) };
        let w = if s1 > s0 { ((s - s0) / (s1 - s0)).clamp(0.0, 1.0) } else { 0.0 };
        r0 + w * (r1 - r0)
    }

    /// Target radius at `s` for a non-forced centre.
    fn at(&self, s: f64) -> f64 {
        let mut r = self.interp(s);
        if self.corner_rule {
            for &(sc, beta) in &self.forced {
                r = r.min(self.corner_factor * beta + self.lipschitz * self.line.cyclic_gap(s, sc));
            }
        }
        r
    }
}

/// Illinois-modified regula falsi on a bracket with `f(lo) < 0 <= f(hi)`.
fn illinois(mut lo: f64, mut flo: f64, mut hi: f64, mut fhi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut side = 0;
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    if fhi.abs() < flo.abs() {
        hi
    } else {
        lo
    }
}

struct Segment {
    a: (f64, f64),
    /// Scale the end radii along with the interior (closed loop, no corners).
    scale_ends: bool,
    /// End arclength, unwrapped so that `b.0 > a.0`.
    b: (f64, f64),
}

enum Walk {
    /// Interior centres placed, with the remaining gap to the end cap.
    Done(Vec<(f64, f64)>, f64),
    /// The walk ran past the end.
    Overshoot,
}

impl Segment {
    /// Walk `n` interior centres (or, with `n = None`, until the end cap comes
    /// within orthogonal reach) with radii `sigma * profile`.
    fn walk(&self, p: &Profile, sigma: f64, n: Option<usize>) -> Walk {
        let line = p.line;
        let end = line.point_at(self.b.0);
        let k = if self.scale_ends { sigma } else { 1.0 };
        let beta_end = k * self.b.1;
        let mut out: Vec<(f64, f64)> = vec![];
        let (mut s, mut alpha) = (self.a.0, k * self.a.1);
        let mut c = line.point_at(s);
        loop {
            // Before the halfway mark the end cap is "not yet reached", which
            // matters when the segment closes up on itself.
            let reach = if self.b.0 - s > 0.5 * (self.b.0 - self.a.0) {
                self.b.0 - s
            } else {
                c.angle_to(end) - orthogonal_spacing(alpha, beta_end)
            };
            match n {
                None if reach <= 0.0 && !out.is_empty() => return Walk::Done(out, reach),
                Some(k) if out.len() == k => return Walk::Done(out, reach),
                _ => {}
            }
            if out.len() > 5_000_000 {
                return Walk::Overshoot;
            }
            let f = |t: f64| c.angle_to(line.point_at(t)) - orthogonal_spacing(alpha, sigma * p.at(t));
            // Scan forward for a sign change, then refine.
            let ds = (0.25 * alpha).max(1e-9);
            let (mut lo, mut flo) = (s, f(s));
            let mut bracket = None;
            let mut t = s;
            while t < self.b.0 {
                t = (t + ds).min(self.b.0);
                let ft = f(t);
                if ft >= 0.0 {
                    bracket = Some((t, ft));
                    break;
                }
                lo = t;
                flo = ft;
            }
            let Some((hi, fhi)) = bracket else {
                return Walk::Overshoot;
            };
            let next = illinois(lo, flo, hi, fhi, f);
            if next >= self.b.0 {
                return Walk::Overshoot;
            }
            s = next;
            alpha = sigma * p.at(s);
            if !(alpha > 1e-12) {
                return Walk::Overshoot;
            }
            c = line.point_at(s);
            out.push((s, alpha));
        }
    }

    /// Count of interior centres with full-size radii.
    fn natural_count(&self, p: &Profile) -> Option<usize> {
        match self.walk(p, 1.0, None) {
            Walk::Done(v, _) => Some(v.len()),
            Walk::Overshoot => None,
        }
    }

    /// Scale so that exactly `n` interior centres land the end cap orthogonally.
    /// Returns the scale and the interior centres.
    fn solve(&self, p: &Profile, n: usize) -> Option<(f64, Vec<(f64, f64)>)> {
        let g = |sigma: f64| -> f64 {
            match self.walk(p, sigma, Some(n)) {
                Walk::Done(_, reach) => reach,
                Walk::Overshoot => -1.0,
            }
        };
        // g decreases in sigma; find sigma_lo with g > 0.
        let mut hi = 1.0;
        let mut ghi = g(hi);
        if ghi == 0.0 {
            return self.finish(p, hi, n);
        }
        let mut lo = 0.5;
        let mut glo = g(lo);
        let mut tries = 0;
        while glo <= 0.0 {
            hi = lo;
            ghi = glo;
            lo *= 0.5;
            glo = g(lo);
            tries += 1;
            if tries > 40 {
                return None;
            }
        }
        if ghi > 0.0 {
            return None;
        }
        // Root of -g on [lo, hi] with -g(lo) < 0 <= -g(hi).
        let sigma = illinois(lo, -glo, hi, -ghi, |x| -g(x));
        self.finish(p, sigma, n)
    }

    fn finish(&self, p: &Profile, sigma: f64, n: usize) -> Option<(f64, Vec<(f64, f64)>)> {
        match self.walk(p, sigma, Some(n)) {
            Walk::Done(v, _) => Some((sigma, v)),
            Walk::Overshoot => None,
        }
    }
}

fn walk_all(line: &SpherePolyline, p: &Profile) -> Result<(Vec<Point>, Vec<f64>), ChainError> {
    let f = &p.forced;
    let total = line.length();
    let segments: Vec<Segment> = (0..f.len())
        .map(|k| {
            let a = f[k];
            let mut b = f[(k + 1) % f.len()];
            if b.0 <= a.0 {
                b.0 += total;
            }
            Segment { a, b, scale_ends: !p.corner_rule }
        })
        .collect();
    let seg_index = |k: usize| line.locate(segments[k].a.0).0;
    let mut counts: Vec<usize> = Vec::with_capacity(segments.len());
    for (k, seg) in segments.iter().enumerate() {
        match seg.natural_count(p) {
            Some(n) if n > 0 => counts.push(n),
            _ => return Err(ChainError::DeltaTooLarge { segment: seg_index(k) }),
        }
    }
    let longest = (0..segments.len())
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let total_count = |c: &[usize]| f.len() + c.iter().sum::<usize>();
    while total_count(&counts) < 6 || total_count(&counts) % 2 == 1 {
        counts[longest] += 1;
    }
    let solved: Vec<Option<(f64, Vec<(f64, f64)>)>> =
        segments.par_iter().zip(counts.par_iter()).map(|(seg, &n)| seg.solve(p, n)).collect();
    let mut centers = vec![];
    let mut radii = vec![];
    for (k, interior) in solved.into_iter().enumerate() {
        let (sigma, interior) = interior.ok_or(ChainError::DeltaTooSmall { segment: seg_index(k) })?;
        let seg = &segments[k];
        centers.push(line.point_at(seg.a.0));
        radii.push(if seg.scale_ends { sigma * seg.a.1 } else { seg.a.1 });
        for (s, a) in interior {
            centers.push(line.point_at(s));
            radii.push(a);
        }
    }
    Ok((centers, radii))
}

// ---------------------------------------------------------------------------
// The group

#[derive(Clone, Debug)]
pub struct InversionGroup {
    pub chain: CoveringChain,
    /// Inversions in the chain circles.
    pub generators_f: Vec<Mobius>,
    /// `g_i = f_i ∘ f_{i+1}`.
    pub generators_g: Vec<Mobius>,
}

impl InversionGroup {
    pub fn new(chain: CoveringChain) -> Result<Self, ChainError> {
        let f: Vec<Mobius> = chain.circles.iter().map(inversion_in_circle).collect::<Result<_, _>>()?;
        let n = f.len();
        let g = (0..n).map(|i| f[i].compose(&f[(i + 1) % n])).collect();
        Ok(InversionGroup { chain, generators_f: f, generators_g: g })
    }

    pub fn evaluate(&self, word: &GroupWord) -> Mobius {
        word.letters.iter().fold(Mobius::identity(), |m, &l| m.compose(&self.generators_f[l as usize]))
    }
}

/// A word in the inversions `f_i` (0-based letters).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupWord {
    pub letters: Vec<u32>,
}

impl GroupWord {
    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| w[0] != w[1])
    }

    /// Words of even length lie in the orientation-preserving subgroup.
    pub fn is_even(&self) -> bool {
        self.letters.len() % 2 == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub tol: f64,
    pub max_f_square: f64,
    pub max_g_square: f64,
    pub product: f64,
    /// Largest matrix norm among the partial products `g_1 ... g_k`.
    /// Rounding in the product check grows roughly with its square.
    pub conditioning: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Evaluate `f_i^2`, `g_i^2` and `g_1 ... g_2L` as matrices and measure their
/// distance to the identity.
pub fn verify_relations(group: &InversionGroup, tol: f64) -> RelationReport {
    let mut failures = vec![];
    let mut max_f: f64 = 0.0;
    for (i, f) in group.generators_f.iter().enumerate() {
        let e = f.compose(f).distance_to_identity();
        if !(e < tol) {
            failures.push(format!("f_{}^2 off identity by {e:e}", i + 1));
        }
        max_f = max_f.max(e);
    }
    let mut max_g: f64 = 0.0;
    for (i, g) in group.generators_g.iter().enumerate() {
        let e = g.compose(g).distance_to_identity();
        if !(e < tol) {
            failures.push(format!("g_{}^2 off identity by {e:e}", i + 1));
        }
        max_g = max_g.max(e);
    }
    let mut prod = Mobius::identity();
    let mut conditioning: f64 = 1.0;
    for g in &group.generators_g {
        prod = prod.compose(g);
        conditioning = conditioning.max(matrix_norm(&prod));
    }
    let product = prod.distance_to_identity();
    if !(product < tol) {
        failures.push(format!("g_1...g_2L off identity by {product:e}"));
    }
    RelationReport { tol, max_f_square: max_f, max_g_square: max_g, product, conditioning, pass: failures.is_empty(), failures }
}

fn matrix_norm(m: &Mobius) -> f64 {
    (m.a.norm_sqr() + m.b.norm_sqr() + m.c.norm_sqr() + m.d.norm_sqr()).sqrt()
}

pub fn genus_of_quotient(chain: &CoveringChain) -> usize {
    chain.half_count().saturating_sub(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairClass {
    Loxodromic { fixed: [Point; 2] },
    Parabolic { fixed: Point },
    EllipticOrder2 { fixed: [Point; 2] },
    Other,
}

/// Squared trace within this distance of 4 counts as parabolic.
pub const PARABOLIC_TOL: f64 = 1e-8;

fn fixed_point(m: &Mobius, lambda: Complex) -> Point {
    // Eigenvector of [[a, b], [c, d]] for eigenvalue lambda.
    let v1 = (m.b, lambda - m.a);
    let v2 = (lambda - m.d, m.c);
    let (x, y) = if v1.0.norm() + v1.1.norm() >= v2.0.norm() + v2.1.norm() { v1 } else { v2 };
    if y.norm() <= 1e-300 || x.norm() > 1e15 * y.norm() {
        project_to_sphere(ExtComplex::Infinity)
    } else {
        project_to_sphere(ExtComplex::Finite(x / y))
    }
}

/// Classify `f1 ∘ f2` for the inversions in two circles by its squared trace.
pub fn classify_pair_product(c1: &Circle, c2: &Circle) -> PairClass {
    let (Ok(f1), Ok(f2)) = (inversion_in_circle(c1), inversion_in_circle(c2)) else {
        return PairClass::Other;
    };
    let g = f1.compose(&f2);
    let tr = g.trace();
    let t2 = tr * tr;
    if t2.im.abs() > 1e-9 * t2.norm().max(1.0) {
        return PairClass::Other;
    }
    let one = Complex::new(1.0, 0.0);
    if (t2.re - 4.0).abs() <= PARABOLIC_TOL {
        let lam = tr * 0.5;
        return PairClass::Parabolic { fixed: fixed_point(&g, lam) };
    }
    let disc = (t2 - one * 4.0).sqrt();
    let (l1, l2) = ((tr + disc) * 0.5, (tr - disc) * 0.5);
    let fixed = [fixed_point(&g, l1), fixed_point(&g, l2)];
    if t2.re > 4.0 {
        PairClass::Loxodromic { fixed }
    } else if t2.re >= -1e-12 && g.compose(&g).distance_to_identity() < 1e-9 {
        PairClass::EllipticOrder2 { fixed }
    } else {
        PairClass::Other
    }
}

// ---------------------------------------------------------------------------
// Limit set

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSetCloud {
    pub points: Vec<Point>,
    /// Longest word reached.
    pub depth: usize,
    pub prune_tol: f64,
    pub max_depth: usize,
    /// Words whose image disk was examined.
    pub max_word_count: u64,
    /// Points emitted before deduplication.
    pub raw_count: u64,
    /// Branches cut at `max_depth` while still wider than `prune_tol`.
    pub unpruned: u64,
}

impl LimitSetCloud {
    pub fn warning(&self) -> Option<String> {
        (self.unpruned > 0).then(|| format!("{} branches reached max_depth unpruned", self.unpruned))
    }
}

struct CapNode {
    lo: usize,
    hi: usize,
    cap: Option<Circle>,
    center: Point,
    radius: f64,
    children: Option<(usize, usize)>,
}

struct CapTree {
    nodes: Vec<CapNode>,
}

impl CapTree {
    fn new(chain: &CoveringChain) -> Self {
        let mut t = CapTree { nodes: vec![] };
        t.build(chain, 0, chain.len() - 1);
        t
    }

    fn build(&mut self, chain: &CoveringChain, lo: usize, hi: usize) -> usize {
        let sum = (lo..=hi).fold(Point::zero(), |s, i| s + chain.centers[i]);
        let (center, radius) = if sum.norm() < 1e-9 {
            (Point::e3(), std::f64::consts::PI)
        } else {
            let c = sum.normalized();
            let r = (lo..=hi).map(|i| c.angle_to(chain.centers[i]) + chain.radii[i]).fold(0.0, f64::max);
            (c, r)
        };
        let cap = if radius < std::f64::consts::PI - 1e-6 { SphereCircle::cap(center, radius).ok() } else { None };
        let id = self.nodes.len();
        self.nodes.push(CapNode { lo, hi, cap, center, radius, children: None });
        if hi > lo {
            let mid = (lo + hi) / 2;
            let l = self.build(chain, lo, mid);
            let r = self.build(chain, mid + 1, hi);
            self.nodes[id].children = Some((l, r));
        }
        id
    }
}

#[derive(Default)]
struct Tally {
    words: u64,
    unpruned: u64,
    depth: usize,
}

struct Enumerator<'a> {
    group: &'a InversionGroup,
    tree: CapTree,
    prune_tol: f64,
    max_depth: usize,
}

/// Angular diameter of a circle's disk, or `None` for a disk wider than a hemisphere.
fn disk_diameter(c: &Circle) -> Option<f64> {
    (c.offset > 0.0).then(|| 2.0 * c.angular_radius())
}

impl<'a> Enumerator<'a> {
    fn n(&self) -> usize {
        self.group.chain.len()
    }

    fn adjacent(&self, a: u32, b: u32) -> bool {
        self.group.chain.are_adjacent(a as usize, b as usize)
    }

    /// Normal form for the right-angled reflection group: `t` commutes only
    /// with its two neighbours. Appending `t` must not let it slide back onto
    /// another `t`, and may slide only past smaller letters.
    fn may_append(&self, word: &[u32], t: u32) -> bool {
        let mut k = word.len();
        while k > 0 && self.adjacent(word[k - 1], t) {
            if word[k - 1] > t {
                return false;
            }
            k -= 1;
        }
        k == 0 || word[k - 1] != t
    }

    fn emit(&self, m: &Mobius, disk: &Circle, out: &mut Vec<Point>) -> bool {
        match disk.transform(m) {
            Ok(img) => match disk_diameter(&img) {
                Some(d) if d < self.prune_tol => {
                    out.push(img.normal);
                    true
                }
                _ => false,
            },
            Err(_) => {
                out.push(m.apply_sphere(disk.center()));
                true
            }
        }
    }

    fn visit(&self, word: &mut Vec<u32>, m: &Mobius, out: &mut Vec<Point>, tally: &mut Tally) {
        tally.depth = tally.depth.max(word.len());
        let chain = &self.group.chain;
        let last = *word.last().unwrap() as usize;
        let n = self.n();
        let near = [(last + n - 1) % n, last, (last + 1) % n];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.tree.nodes[id];
            let special = near.iter().any(|&k| k >= node.lo && k <= node.hi);
            if !special {
                if let Some(cap) = &node.cap {
                    let clear = node.center.angle_to(chain.centers[last]) - node.radius - chain.radii[last];
                    if clear > 0.0 {
                        tally.words += (node.hi - node.lo + 1) as u64;
                        if self.emit(m, cap, out) {
                            continue;
                        }
                    }
                }
            }
            if let Some((l, r)) = node.children {
                stack.push(r);
                stack.push(l);
                continue;
            }
            let t = node.lo as u32;
            if t as usize == last || !self.may_append(word, t) {
                continue;
            }
            tally.words += 1;
            let disk = &chain.circles[t as usize];
            if self.emit(m, disk, out) {
                continue;
            }
            if word.len() + 1 >= self.max_depth {
                if let Ok(img) = disk.transform(m) {
                    out.push(img.normal);
                }
                tally.unpruned += 1;
                continue;
            }
            let child = m.compose(&self.group.generators_f[t as usize]);
            word.push(t);
            self.visit(word, &child, out, tally);
            word.pop();
        }
    }
}

/// Tracked-disk enumeration of the limit set: every word's image disk is
/// refined until narrower than `prune_tol`, then its centre is emitted. The
/// output is sorted and thinned so no two points are closer than `prune_tol / 2`.
pub fn limit_set(group: &InversionGroup, prune_tol: f64, max_depth: usize) -> LimitSetCloud {
    let e = Enumerator { group, tree: CapTree::new(&group.chain), prune_tol, max_depth: max_depth.max(1) };
    let n = group.chain.len();
    let parts: Vec<(Vec<Point>, Tally)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![];
            let mut tally = Tally { words: 1, ..Default::default() };
            let disk = &group.chain.circles[i];
            if !e.emit(&Mobius::identity(), disk, &mut out) {
                if e.max_depth <= 1 {
                    out.push(disk.normal);
                    tally.unpruned += 1;
                } else {
                    let mut word = vec![i as u32];
                    e.visit(&mut word, &group.generators_f[i], &mut out, &mut tally);
                }
            }
            tally.depth = tally.depth.max(1);
            (out, tally)
        })
        .collect();
    let mut points = vec![];
    let mut total = Tally::default();
    for (p, t) in parts {
        points.extend(p);
        total.words += t.words;
        total.unpruned += t.unpruned;
        total.depth = total.depth.max(t.depth);
    }
    let raw_count = points.len() as u64;
    let points = thin_points(points, 0.5 * prune_tol);
    LimitSetCloud {
        points,
        depth: total.depth,
        prune_tol,
        max_depth,
        max_word_count: total.words,
        raw_count,
        unpruned: total.unpruned,
    }
}

/// Sort lexicographically, then keep each point unless an already kept point
/// lies within `resolution`.
pub fn thin_points(mut points: Vec<Point>, resolution: f64) -> Vec<Point> {
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z)));
    let mut grid = Grid::new(resolution.max(1e-12));
    let mut kept: Vec<Point> = vec![];
    for p in points {
        let mut close = false;
        grid.around(p, 1, |i| {
            if !close && (kept[i as usize] - p).norm() < resolution {
                close = true;
            }
        });
        if !close {
            grid.insert_point(p, kept.len() as u32);
            kept.push(p);
        }
    }
    kept
}

/// Random-orbit approximation of the limit set, for pictures only.
pub fn chaos_game(group: &InversionGroup, count: usize, seed: u64) -> Vec<Point> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = group.generators_f.len();
    let mut p = group.chain.intersections[0][0];
    let mut last = usize::MAX;
    let mut out = Vec::with_capacity(count);
    for k in 0..count + 100 {
        let mut i = rng.gen_range(0..n);
        while i == last {
            i = rng.gen_range(0..n);
        }
        p = group.generators_f[i].apply_sphere(p);
        last = i;
        if k >= 100 {
            out.push(p);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodReport {
    /// Largest distance from a cloud point to the curve; a lower bound when
    /// some point is beyond twice `delta`.
    pub max_distance: f64,
    pub outside: usize,
    pub delta: f64,
    pub pass: bool,
}

pub fn neighborhood_report(cloud: &LimitSetCloud, chain: &CoveringChain) -> NeighborhoodReport {
    let line = &chain.target_curve;
    let cap = 2.0 * chain.delta;
    let index = PolylineIndex::new(line, segment_cell(line, chain.delta));
    let dists: Vec<f64> = cloud.points.par_iter().map(|&p| index.nearest(p, cap).map_or(cap, |x| x.0)).collect();
    let max_distance = dists.iter().cloned().fold(0.0, f64::max);
    let outside = dists.iter().filter(|&&d| d > chain.delta).count();
    NeighborhoodReport { max_distance, outside, delta: chain.delta, pass: outside == 0 }
}

/// Every cloud point within `delta` of the target curve.
pub fn verify_neighborhood(cloud: &LimitSetCloud, chain: &CoveringChain) -> bool {
    neighborhood_report(cloud, chain).pass
}

// ---------------------------------------------------------------------------
// Complementary regions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Left of the oriented curve.
    Plus,
    Minus,
    Covered,
}

/// The two components of the sphere minus the closed chain disks. Points are
/// classified by winding number of the densified curve in a stereographic
/// chart centred away from it.
pub struct Regions<'a> {
    chain: &'a CoveringChain,
    grid: Grid,
    rot: Mat3<f64>,
    poly: Vec<(f64, f64)>,
    ccw: bool,
}

pub fn regions(chain: &CoveringChain) -> Result<Regions<'_>, ChainError> {
    // The disks form a cyclic nerve (consecutive meet, others disjoint), so
    // their union is an annulus and the complement has two components.
    let check = chain.check();
    let n = chain.len();
    if check.max_orthogonality_residual >= 1.0 || !(check.min_nonadjacent_gap > 0.0) || n < 3 {
        return Err(ChainError::Invalid("disk nerve is not a cycle; component count unknown".into()));
    }
    let line = &chain.target_curve;
    let dense = line.densified(1e-3f64.min(chain.delta / 4.0));
    // Chart pole: the candidate farthest from the curve.
    let mut candidates = vec![];
    for k in 0..64 {
        let z = 1.0 - (2.0 * k as f64 + 1.0) / 64.0;
        let t = 2.399963229728653 * k as f64;
        let r = (1.0 - z * z).sqrt();
        candidates.push(Point::new(r * t.cos(), r * t.sin(), z));
    }
    let pole = candidates
        .into_iter()
        .map(|c| (dense.iter().map(|&p| c.angle_to(p)).fold(f64::INFINITY, f64::min), c))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
        .1;
    let rot = Mat3::rotation_between(pole, Point::e3());
    let chart = |p: Point| {
        let q = rot.apply(p);
        let d = 1.0 - q.z;
        (q.x / d, q.y / d)
    };
    let poly: Vec<(f64, f64)> = dense.iter().map(|&p| chart(p)).collect();
    let area: f64 = (0..poly.len())
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            a.0 * b.1 - a.1 * b.0
        })
        .sum();
    Ok(Regions { chain, grid: chain.disk_grid(), rot, poly, ccw: area > 0.0 })
}

impl<'a> Regions<'a> {
    pub fn component_count(&self) -> usize {
        2
    }

    fn inside_polygon(&self, w: (f64, f64)) -> bool {
        let mut inside = false;
        let n = self.poly.len();
        for i in 0..n {
            let (a, b) = (self.poly[i], self.poly[(i + 1) % n]);
            if (a.1 > w.1) != (b.1 > w.1) {
                let x = a.0 + (w.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
                if x > w.0 {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn side_of(&self, p: Point) -> Side {
        if self.chain.covering_disk_in(&self.grid, p, 0.0).is_some() {
            return Side::Covered;
        }
        let q = self.rot.apply(p.normalized());
        let d = 1.0 - q.z;
        if d <= 1e-300 {
            return if self.ccw { Side::Plus } else { Side::Minus };
        }
        // The chart reverses orientation, so a counter-clockwise image has
        // the curve's left side outside it.
        let inside = self.inside_polygon((q.x / d, q.y / d));
        if inside != self.ccw {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    /// Side of a circle: the common side of sampled boundary points, or
    /// `Covered` if any sample is covered or the samples disagree.
    pub fn side_of_circle(&self, c: &Circle, samples: usize) -> Side {
        let mut side = None;
        for p in c.sample(samples.max(8)) {
            let s = self.side_of(p);
            match (side, s) {
                (_, Side::Covered) => return Side::Covered,
                (None, s) => side = Some(s),
                (Some(a), s) if a != s => return Side::Covered,
                _ => {}
            }
        }
        side.unwrap_or(Side::Covered)
    }
}
