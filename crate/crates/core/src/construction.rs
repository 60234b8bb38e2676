//! The N-band construction: parallel circle pairs joined by bridges into a
//! Jordan curve, catenoid barrier stations around it, the covering chain, and
//! the verification of every arrangement of barriers.

use crate::catenoid::{CatenoidSolution, CatenoidSolver, CurveParams, RESIDUAL_TOL};
use crate::circle::{good_position, plane_distance_dl};
use crate::error::BuildError;
use crate::kleinian::{
    build_chain_with, limit_set, neighborhood_report, regions, ChainOptions, CoveringChain, InversionGroup, Regions,
    Side,
};
use crate::polyline::SpherePolyline;
use crate::vec3::Vec3;
use crate::{Circle, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Vertex spacing of the traced curve, in radians.
const CURVE_STEP: f64 = 0.01;
/// Catenoid surface samples per station for the separation spot-check.
pub const SEPARATION_SAMPLES: usize = 10_000;
/// Largest angular radius given to a station circle.
const MAX_STATION_RADIUS: f64 = 0.6;
/// Station offsets may be halved this many times to meet the d_L threshold.
const OFFSET_HALVINGS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSpec {
    pub n: usize,
    /// Half-gap of each parallel circle pair, in height.
    pub epsilon: f64,
    /// Angular width of every bridge.
    pub bridge_width: f64,
    /// Angular clearance between station circles and the curve.
    pub catenoid_offset: f64,
    /// Covering tolerance: the largest chain radius.
    pub delta: f64,
    pub prune_tol: f64,
    pub max_depth: usize,
}

impl ConstructionSpec {
    pub fn validate(&self) -> Result<(), BuildError> {
        let bad = |m: String| Err(BuildError::InvalidSpec(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("bridge_width", self.bridge_width),
            ("catenoid_offset", self.catenoid_offset),
            ("delta", self.delta),
            ("prune_tol", self.prune_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.delta >= 1.0 {
            return bad(format!("delta must be below 1, got {}", self.delta));
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1".into());
        }
        Ok(())
    }

    /// Height of the centre of pair `i` (1-based).
    pub fn centre_height(&self, i: usize) -> f64 {
        1.0 - 2.0 * i as f64 / (self.n + 1) as f64
    }
}

/// The default specs, one per N, found by `search_spec` and shipped as data.
pub const DEFAULT_SPECS_JSON: &str = include_str!("../fixtures/default_specs.json");

#[derive(Deserialize)]
struct DefaultSpecs {
    version: u32,
    specs: Vec<ConstructionSpec>,
}

pub fn default_spec(n: usize) -> Result<ConstructionSpec, BuildError> {
    let d: DefaultSpecs = serde_json::from_str(DEFAULT_SPECS_JSON)
        .map_err(|e| BuildError::InvalidSpec(format!("default spec fixture: {e}")))?;
    if d.version != 1 {
        return Err(BuildError::InvalidSpec(format!("default spec fixture version {}", d.version)));
    }
    d.specs
        .into_iter()
        .find(|s| s.n == n)
        .ok_or_else(|| BuildError::InvalidSpec(format!("no default spec for n = {n}")))
}

// ---------------------------------------------------------------------------
// Step 1: parallel circles

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub index: usize,
    /// Height c_i + epsilon; its disk is the cap above.
    pub upper: Circle,
    /// Height c_i - epsilon; its disk is the cap below.
    pub lower: Circle,
}

/// Distance between two circles as point sets: negative if they cross.
pub fn circle_gap(a: &Circle, b: &Circle) -> f64 {
    let (ac, bc) = (a.complement(), b.complement());
    [a.raw_rho(b), a.raw_rho(&bc), ac.raw_rho(b), ac.raw_rho(&bc)].into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub fn build_parallel_circles(n: usize, epsilon: f64) -> Result<Vec<ParallelPair>, BuildError> {
    if n == 0 || !(epsilon > 0.0) {
        return Err(BuildError::InvalidSpec(format!("need n >= 1 and epsilon > 0, got {n}, {epsilon}")));
    }
    let c = |i: usize| 1.0 - 2.0 * i as f64 / (n + 1) as f64;
    // C_i^- meets C_{i+1}^+ once 2 epsilon reaches the spacing 2/(N+1).
    for i in 1..n {
        if c(i) - epsilon <= c(i + 1) + epsilon {
            return Err(BuildError::CollidingPairs(i, i + 1));
        }
    }
    if c(1) + epsilon >= 1.0 {
        return Err(BuildError::InvalidSpec(format!("epsilon {epsilon} pushes C_1^+ off the sphere")));
    }
    (1..=n)
        .map(|i| {
            Ok(ParallelPair {
                index: i,
                upper: Circle::new(Vec3::e3(), c(i) + epsilon)?,
                lower: Circle::new(-Vec3::e3(), -(c(i) - epsilon))?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Step 2: the Jordan curve

pub(crate) fn at(lat: f64, lon: f64) -> Point {
    Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
}

/// Latitudes and longitudes of every band and bridge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub n: usize,
    /// `hi[i]`, `lo[i]`: latitudes of C_{i+1}^+ and C_{i+1}^-.
    pub hi: Vec<f64>,
    pub lo: Vec<f64>,
    /// Half-width in longitude of B_{i+1}, centred on longitude 0.
    pub lambda: Vec<f64>,
    /// Half-width in longitude of B'_{j+1}, centred on longitude pi.
    pub mu: Vec<f64>,
}

impl Layout {
    pub fn new(spec: &ConstructionSpec) -> Result<Self, BuildError> {
        spec.validate()?;
        build_parallel_circles(spec.n, spec.epsilon)?;
        let n = spec.n;
        let hi: Vec<f64> = (1..=n).map(|i| (spec.centre_height(i) + spec.epsilon).asin()).collect();
        let lo: Vec<f64> = (1..=n).map(|i| (spec.centre_height(i) - spec.epsilon).asin()).collect();
        let half = 0.5 * spec.bridge_width;
        let lon_half = |lat: f64| -> Result<f64, BuildError> {
            let s = half.sin() / lat.cos();
            if !(s < (PI / 8.0).sin()) {
                return Err(BuildError::BridgesOverlap(format!(
                    "bridge_width {} is too wide at latitude {lat:.4}",
                    spec.bridge_width
                )));
            }
            Ok(s.asin())
        };
        let lambda = (0..n).map(|i| lon_half(0.5 * (hi[i] + lo[i]))).collect::<Result<Vec<_>, _>>()?;
        let mu = (0..n.saturating_sub(1)).map(|j| lon_half(0.5 * (lo[j] + hi[j + 1]))).collect::<Result<Vec<_>, _>>()?;
        Ok(Layout { n, hi, lo, lambda, mu })
    }

    pub fn mid(&self, i: usize) -> f64 {
        0.5 * (self.hi[i] + self.lo[i])
    }

    /// Half the angular height of band `i`.
    pub fn half_height(&self, i: usize) -> f64 {
        0.5 * (self.hi[i] - self.lo[i])
    }

    /// Mid-latitude and half-height of the gap between bands `j` and `j+1`.
    pub fn gap(&self, j: usize) -> (f64, f64) {
        (0.5 * (self.lo[j] + self.hi[j + 1]), 0.5 * (self.lo[j] - self.hi[j + 1]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BridgeKind {
    /// B_i joins C_i^+ to C_i^- across band i.
    Band(usize),
    /// B'_j joins C_j^- to C_{j+1}^+.
    Prime(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanCurve {
    pub polyline: SpherePolyline,
    /// Vertex indices where an arc meets a bridge side.
    pub corners: Vec<usize>,
    pub bridges: Vec<BridgeKind>,
}

struct Tracer {
    pts: Vec<Point>,
    corners: Vec<usize>,
}

impl Tracer {
    fn arc(&mut self, lat: f64, lon0: f64, lon1: f64) {
        self.corners.push(self.pts.len());
        let k = ((lon1 - lon0).abs() * lat.cos() / CURVE_STEP).ceil().max(1.0) as usize;
        for j in 0..k {
            self.pts.push(at(lat, lon0 + (lon1 - lon0) * j as f64 / k as f64));
        }
    }

    fn meridian(&mut self, lon: f64, lat0: f64, lat1: f64) {
        self.corners.push(self.pts.len());
        let k = ((lat1 - lat0).abs() / CURVE_STEP).ceil().max(1.0) as usize;
        for j in 0..k {
            self.pts.push(at(lat0 + (lat1 - lat0) * j as f64 / k as f64, lon));
        }
    }
}

/// Trace the boundary of the union of the cut bands and the B' bridges.
pub fn build_jordan_curve(spec: &ConstructionSpec) -> Result<JordanCurve, BuildError> {
    let lay = Layout::new(spec)?;
    let n = lay.n;
    let (hi, lo, lam, mu) = (&lay.hi, &lay.lo, &lay.lambda, &lay.mu);
    let mut t = Tracer { pts: vec![], corners: vec![] };
    // Down the east side of the B' bridges.
    for i in 0..n {
        let start = if i == 0 { lam[0] } else { PI + mu[i - 1] };
        t.arc(hi[i], start, TAU - lam[i]);
        t.meridian(TAU - lam[i], hi[i], lo[i]);
        if i + 1 < n {
            t.arc(lo[i], TAU - lam[i], PI + mu[i]);
            t.meridian(PI + mu[i], lo[i], hi[i + 1]);
        } else {
            t.arc(lo[i], TAU - lam[i], lam[i]);
            t.meridian(lam[i], lo[i], hi[i]);
        }
    }
    // Back up the west side.
    for i in (0..n).rev() {
        if i + 1 < n {
            t.arc(lo[i], PI - mu[i], lam[i]);
            t.meridian(lam[i], lo[i], hi[i]);
        }
        if i > 0 {
            t.arc(hi[i], lam[i], PI - mu[i - 1]);
            t.meridian(PI - mu[i - 1], hi[i], lo[i - 1]);
        }
    }
    let polyline = SpherePolyline::new(t.pts).map_err(|e| BuildError::BridgesOverlap(e.to_string()))?;
    if let Some((a, b)) = polyline.self_intersection() {
        return Err(BuildError::BridgesOverlap(format!("curve segments {a} and {b} cross")));
    }
    let mut bridges: Vec<BridgeKind> = (1..=n).map(BridgeKind::Band).collect();
    bridges.extend((1..n).map(BridgeKind::Prime));
    Ok(JordanCurve { polyline, corners: t.corners, bridges })
}

// ---------------------------------------------------------------------------
// Step 2: catenoid stations

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StationKind {
    /// Pi_i^B: a pair flanking bridge B_i inside band i.
    Bridge(usize),
    /// Pi_i^C: one circle above C_i^+ and one below C_i^-.
    CirclePair(usize),
    /// Pi'_j: a pair flanking bridge B'_j.
    PrimeBridge(usize),
}

impl StationKind {
    pub fn label(&self) -> String {
        match self {
            StationKind::Bridge(i) => format!("B{i}"),
            StationKind::CirclePair(i) => format!("C{i}"),
            StationKind::PrimeBridge(j) => format!("P{j}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub kind: StationKind,
    pub circles: [Circle; 2],
}

impl Station {
    pub fn dl(&self) -> Result<f64, BuildError> {
        Ok(plane_distance_dl(&self.circles[0], &self.circles[1])?)
    }
}

/// Longitude offset from a meridian at which a point of latitude `lat` sits
/// at angular distance `d` from that meridian's great circle.
fn lon_offset(lat: f64, d: f64) -> Result<f64, BuildError> {
    let s = d.sin() / lat.cos();
    if !(s < 1.0) {
        return Err(BuildError::Station { station: "?".into(), reason: format!("no room at latitude {lat:.4}") });
    }
    Ok(s.asin())
}

/// Station circles for one offset; the caller shrinks the offset as needed.
fn station_circles(lay: &Layout, kind: StationKind, off: f64) -> Result<[Circle; 2], BuildError> {
    let cap = |c: Point, r: f64| -> Result<Circle, BuildError> {
        if !(r > 0.0) {
            return Err(BuildError::Station { station: kind.label(), reason: format!("offset {off} leaves no room") });
        }
        Ok(Circle::cap(c, r)?)
    };
    match kind {
        StationKind::Bridge(i) => {
            let k = i - 1;
            let m = lay.mid(k);
            let r = (lay.half_height(k) - off).min(MAX_STATION_RADIUS);
            let lon = lay.lambda[k] + lon_offset(m, off + r).map_err(|e| relabel(e, kind))?;
            Ok([cap(at(m, lon), r)?, cap(at(m, -lon), r)?])
        }
        StationKind::CirclePair(i) => {
            let k = i - 1;
            let up_room = if k == 0 { FRAC_PI_2 - lay.hi[0] - off } else { 0.5 * (lay.lo[k - 1] - lay.hi[k]) - off };
            let down_room =
                if k + 1 == lay.n { FRAC_PI_2 + lay.lo[k] - off } else { 0.5 * (lay.lo[k] - lay.hi[k + 1]) - off };
            let r = up_room.min(down_room).min(MAX_STATION_RADIUS);
            // Alternate sides so neighbouring C stations never share a gap.
            let lon = if i % 2 == 1 { FRAC_PI_2 } else { 3.0 * FRAC_PI_2 };
            Ok([cap(at(lay.hi[k] + off + r, lon), r)?, cap(at(lay.lo[k] - off - r, lon), r)?])
        }
        StationKind::PrimeBridge(j) => {
            let (a, h) = lay.gap(j - 1);
            let r = (h - off).min(MAX_STATION_RADIUS);
            let d = lon_offset(a, off + r).map_err(|e| relabel(e, kind))?;
            let lon = lay.mu[j - 1] + d;
            Ok([cap(at(a, PI + lon), r)?, cap(at(a, PI - lon), r)?])
        }
    }
}

fn relabel(e: BuildError, kind: StationKind) -> BuildError {
    match e {
        BuildError::Station { reason, .. } => BuildError::Station { station: kind.label(), reason },
        e => e,
    }
}

pub fn station_kinds(n: usize) -> Vec<StationKind> {
    let mut v = vec![];
    for i in 1..=n {
        v.push(StationKind::Bridge(i));
        v.push(StationKind::CirclePair(i));
    }
    v.extend((1..n).map(StationKind::PrimeBridge));
    v
}

/// The d_L bound every station must meet: min(d0, d1).
pub fn dl_threshold(solver: &CatenoidSolver) -> f64 {
    solver.thresholds.d0.min(solver.thresholds.d1)
}

pub fn default_solver() -> Result<CatenoidSolver, BuildError> {
    Ok(CatenoidSolver::new(CurveParams::default(), 1e-8)?)
}

/// Place the 3N-1 stations, halving the offset (and with it the gap rho of
/// each pair) until every pair meets the d_L threshold.
pub fn place_catenoid_circles(
    spec: &ConstructionSpec,
    curve: &JordanCurve,
    threshold: f64,
) -> Result<Vec<Station>, BuildError> {
    let lay = Layout::new(spec)?;
    let mut out = vec![];
    for kind in station_kinds(spec.n) {
        let mut off = spec.catenoid_offset;
        let mut placed = None;
        let mut last = f64::NAN;
        for _ in 0..=OFFSET_HALVINGS {
            let circles = station_circles(&lay, kind, off)?;
            let dl = plane_distance_dl(&circles[0], &circles[1])?;
            last = dl;
            if dl <= threshold {
                placed = Some(circles);
                break;
            }
            off *= 0.5;
        }
        let circles = placed.ok_or_else(|| BuildError::Station {
            station: kind.label(),
            reason: format!("d_L {last:.6} stays above {threshold:.6} at the smallest offset"),
        })?;
        for c in &circles {
            let clear = curve.polyline.distance_to(c.center()) - c.angular_radius();
            if !(clear > 0.0) {
                return Err(BuildError::Station { station: kind.label(), reason: format!("circle meets the curve ({clear:e})") });
            }
        }
        out.push(Station { kind, circles });
    }
    let all: Vec<Circle> = out.iter().flat_map(|s| s.circles).collect();
    let gp = good_position(&all);
    if !gp.ok {
        let (a, b) = gp.violation.unwrap_or((0, 0));
        return Err(BuildError::Station {
            station: format!("{} / {}", out[a / 2].kind.label(), out[b / 2].kind.label()),
            reason: "station circles are not in good position".into(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Step 3: the full configuration

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub spec: ConstructionSpec,
    /// Band and bridge coordinates the curve and stations were built on.
    pub layout: Layout,
    pub curve: JordanCurve,
    pub stations: Vec<Station>,
    pub chain: CoveringChain,
}

impl Configuration {
    pub fn station(&self, kind: StationKind) -> Option<usize> {
        self.stations.iter().position(|s| s.kind == kind)
    }
}

/// Steps 1 to 3: bands, bridges, stations and the covering chain.
pub fn build_configuration(spec: &ConstructionSpec) -> Result<Configuration, BuildError> {
    let solver = default_solver()?;
    build_configuration_with(spec, &solver)
}

pub fn build_configuration_with(spec: &ConstructionSpec, solver: &CatenoidSolver) -> Result<Configuration, BuildError> {
    spec.validate()?;
    let layout = Layout::new(spec)?;
    let curve = build_jordan_curve(spec)?;
    let stations = place_catenoid_circles(spec, &curve, dl_threshold(solver))?;
    let opts = ChainOptions {
        obstacles: stations.iter().flat_map(|s| s.circles).collect(),
        corners: curve.corners.clone(),
        ..ChainOptions::default()
    };
    let chain = build_chain_with(&curve.polyline, spec.delta, &opts)?;
    Ok(Configuration { spec: spec.clone(), layout, curve, stations, chain })
}

// ---------------------------------------------------------------------------
// Step 4: arrangements

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Choice {
    B,
    C,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrangement {
    pub index: usize,
    /// `choice[i-1]` selects Pi_i^B or Pi_i^C.
    pub choice: Vec<Choice>,
    /// Indices into the configuration's stations.
    pub stations: Vec<usize>,
}

impl Arrangement {
    pub fn label(&self) -> String {
        self.choice.iter().map(|c| if *c == Choice::B { 'B' } else { 'C' }).collect()
    }
}

/// All 2^N arrangements; bit i-1 of the index set means choice B at band i.
pub fn enumerate_arrangements(n: usize, stations: &[Station]) -> Vec<Arrangement> {
    let find = |k: StationKind| stations.iter().position(|s| s.kind == k);
    (0..1usize << n)
        .map(|index| {
            let choice: Vec<Choice> =
                (0..n).map(|i| if index >> i & 1 == 1 { Choice::B } else { Choice::C }).collect();
            let mut sel = vec![];
            for (i, c) in choice.iter().enumerate() {
                let kind = if *c == Choice::B { StationKind::Bridge(i + 1) } else { StationKind::CirclePair(i + 1) };
                sel.extend(find(kind));
            }
            sel.extend((1..n).filter_map(|j| find(StationKind::PrimeBridge(j))));
            Arrangement { index, choice, stations: sel }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Linking numbers

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linking {
    pub raw: f64,
    pub value: i64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LinkingError {
    #[error("loops come within {0:e} of each other")]
    TooClose(f64),
    #[error("linking integral {0} is not near an integer")]
    NotInteger(f64),
    #[error("loops need at least 3 vertices")]
    Degenerate,
}

/// Signed solid-angle contribution of segment pair (p1 p2, p3 p4) to the
/// Gauss integral, exact for straight segments.
fn segment_linking(p1: Point, p2: Point, p3: Point, p4: Point) -> f64 {
    let (r13, r14, r23, r24) = (p3 - p1, p4 - p1, p3 - p2, p4 - p2);
    let unit = |v: Point| {
        let n = v.norm();
        if n > 0.0 {
            v / n
        } else {
            v
        }
    };
    let n1 = unit(r13.cross(r14));
    let n2 = unit(r14.cross(r24));
    let n3 = unit(r24.cross(r23));
    let n4 = unit(r23.cross(r13));
    let a = |u: Point, v: Point| u.dot(v).clamp(-1.0, 1.0).asin();
    let omega = a(n1, n2) + a(n2, n3) + a(n3, n4) + a(n4, n1);
    let s = (p4 - p3).cross(p2 - p1).dot(r13);
    if s > 0.0 {
        omega
    } else if s < 0.0 {
        -omega
    } else {
        0.0
    }
}

fn segment_distance(p1: Point, p2: Point, p3: Point, p4: Point) -> f64 {
    let (d1, d2, r) = (p2 - p1, p4 - p3, p1 - p3);
    let (a, e, f) = (d1.dot(d1), d2.dot(d2), d2.dot(r));
    let (c, b) = (d1.dot(r), d1.dot(d2));
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = if e > 0.0 { (b * s + f) / e } else { 0.0 };
    if t < 0.0 {
        t = 0.0;
        s = if a > 0.0 { (-c / a).clamp(0.0, 1.0) } else { 0.0 };
    } else if t > 1.0 {
        t = 1.0;
        s = if a > 0.0 { ((b - c) / a).clamp(0.0, 1.0) } else { 0.0 };
    }
    ((p1 + d1 * s) - (p3 + d2 * t)).norm()
}

/// Gauss linking number of two closed polygons, rounded to an integer.
pub fn linking_number(a: &[Point], b: &[Point]) -> Result<Linking, LinkingError> {
    if a.len() < 3 || b.len() < 3 {
        return Err(LinkingError::Degenerate);
    }
    let (n, m) = (a.len(), b.len());
    let (sum, closest) = (0..n)
        .into_par_iter()
        .map(|i| {
            let (p1, p2) = (a[i], a[(i + 1) % n]);
            let mut s = 0.0;
            let mut d = f64::INFINITY;
            for j in 0..m {
                let (p3, p4) = (b[j], b[(j + 1) % m]);
                s += segment_linking(p1, p2, p3, p4);
                d = d.min(segment_distance(p1, p2, p3, p4));
            }
            (s, d)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, f64::INFINITY), |(s, d), (s2, d2)| (s + s2, d.min(d2)));
    if !(closest > 1e-9) {
        return Err(LinkingError::TooClose(closest));
    }
    let raw = sum / (4.0 * PI);
    let value = raw.round();
    if !((raw - value).abs() < 0.1) {
        return Err(LinkingError::NotInteger(raw));
    }
    Ok(Linking { raw, value: value as i64 })
}

/// Path on the sphere through `(lat, lon)` waypoints, linear in both.
fn sphere_path(way: &[(f64, f64)], step: f64) -> Vec<Point> {
    let mut out = vec![];
    for w in way.windows(2) {
        let ((a0, o0), (a1, o1)) = (w[0], w[1]);
        let len = ((a1 - a0).powi(2) + ((o1 - o0) * a0.cos().max(a1.cos())).powi(2)).sqrt();
        let k = (len / step).ceil().max(1.0) as usize;
        for j in 0..k {
            let t = j as f64 / k as f64;
            out.push(at(a0 + (a1 - a0) * t, o0 + (o1 - o0) * t));
        }
    }
    let &(a, o) = way.last().expect("path has waypoints");
    out.push(at(a, o));
    out
}

fn lat_lon(p: Point) -> (f64, f64) {
    (p.z.clamp(-1.0, 1.0).asin(), p.y.atan2(p.x).rem_euclid(TAU))
}

/// The loop delta of a station: the axis chord from the disk of circle 0 to
/// the disk of circle 1, then back on the sphere through the station's own
/// side of the curve.
pub fn station_loop(layout: &Layout, station: &Station, solution: &CatenoidSolution) -> Vec<Point> {
    let solid = solution.solid();
    let mut chord = solid.axis_chord(160);
    if !station.circles[0].disk_contains(chord[0]) {
        chord.reverse();
    }
    let (c0, c1) = (lat_lon(station.circles[0].center()), lat_lon(station.circles[1].center()));
    let end = *chord.last().expect("chord");
    let start = chord[0];
    let (e, s) = (lat_lon(end), lat_lon(start));
    // Waypoints from the chord's end (in disk 1) back to its start (in disk 0).
    let way: Vec<(f64, f64)> = match station.kind {
        StationKind::Bridge(_) => {
            // Circle 1 sits west of the cut, circle 0 east: go round the band.
            vec![e, c1, c0, s]
        }
        StationKind::CirclePair(_) => {
            // From below the band to above it through bridge B_i at longitude 0.
            let zero = if c1.1 < PI { 0.0 } else { TAU };
            vec![e, c1, (c1.0, zero), (c0.0, zero), c0, s]
        }
        StationKind::PrimeBridge(_) => {
            // Circle 1 west of pi, circle 0 east: round through longitude 0.
            vec![e, c1, (c1.0, c0.1 - TAU), (s.0, s.1 - TAU)]
        }
    };
    let fix = |w: Vec<(f64, f64)>| -> Vec<(f64, f64)> {
        // Keep longitudes continuous along the path.
        let mut out: Vec<(f64, f64)> = vec![];
        for (a, mut o) in w {
            if let Some(&(_, p)) = out.last() {
                while o - p > PI {
                    o -= TAU;
                }
                while p - o > PI {
                    o += TAU;
                }
            }
            out.push((a, o));
        }
        out
    };
    let way = match station.kind {
        StationKind::CirclePair(_) => fix(way),
        _ => way,
    };
    let mut path = sphere_path(&way, 2e-3_f64.min(layout.half_height(0) / 4.0));
    path.pop();
    let mut out = chord;
    out.pop();
    // The path begins at the chord's end point, which `out` no longer holds.
    out.extend(path);
    out
}

// ---------------------------------------------------------------------------
// Witness disk

/// Sample the disk bounded by the curve that an arrangement leaves free:
/// band i pushed inward when the C barrier is chosen, the two geodesic planes
/// over C_i^+ and C_i^- joined by bridge B_i when the B barrier is chosen, and
/// every B' bridge pushed inward.
pub fn witness_disk_samples(layout: &Layout, choice: &[Choice], depth: f64) -> Vec<Point> {
    let push = 1.0 - depth;
    let mut out = vec![];
    let patch = |out: &mut Vec<Point>, lat0: f64, lat1: f64, lon0: f64, lon1: f64, nl: usize, no: usize| {
        for a in 0..nl {
            let lat = lat0 + (lat1 - lat0) * (a as f64 + 0.5) / nl as f64;
            for o in 0..no {
                let lon = lon0 + (lon1 - lon0) * (o as f64 + 0.5) / no as f64;
                out.push(at(lat, lon) * push);
            }
        }
    };
    for (i, c) in choice.iter().enumerate() {
        match c {
            Choice::C => patch(&mut out, layout.lo[i], layout.hi[i], layout.lambda[i], TAU - layout.lambda[i], 6, 720),
            Choice::B => {
                patch(&mut out, layout.lo[i], layout.hi[i], -layout.lambda[i], layout.lambda[i], 6, 6);
                for lat in [layout.hi[i], layout.lo[i]] {
                    // Flat in the Klein model, so a geodesic plane in the ball.
                    let (z, rho) = (lat.sin(), lat.cos());
                    for a in 0..48 {
                        let s = rho * (a as f64 + 0.5) / 48.0;
                        for o in 0..240 {
                            let t = TAU * o as f64 / 240.0;
                            let k = Vec3::new(s * t.cos(), s * t.sin(), z);
                            out.push(k / (1.0 + (1.0 - k.dot(k)).max(0.0_f64).sqrt()));
                        }
                    }
                }
            }
        }
    }
    for j in 0..layout.mu.len() {
        patch(&mut out, layout.hi[j + 1], layout.lo[j], PI - layout.mu[j], PI + layout.mu[j], 60, 6);
    }
    out
}

// ---------------------------------------------------------------------------
// Verification

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationRecord {
    pub kind: StationKind,
    pub label: String,
    pub sides: [Side; 2],
    pub same_side: bool,
    pub dl: f64,
    pub dl_ok: bool,
    pub neck: Option<f64>,
    pub area_deficit: Option<f64>,
    pub residual: Option<f64>,
    pub residual_ok: bool,
    pub separation_samples: usize,
    pub separation_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairLinking {
    pub a: String,
    pub b: String,
    pub linking: Option<Linking>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrangementRecord {
    pub index: usize,
    pub label: String,
    pub stations: Vec<String>,
    pub same_side: bool,
    pub good_position: bool,
    pub dl_threshold: bool,
    pub catenoid_residual: bool,
    /// Cross-side station pairs tested; all must be unlinked.
    pub linking_pairs: usize,
    pub linked_pairs: Vec<String>,
    pub unlinked: bool,
    pub witness_samples: usize,
    pub witness_hits: usize,
    pub witness_disk: bool,
    /// Stations left out of the null-homotopy tests because their circles do
    /// not share a side, so their loop is undefined.
    pub skipped: Vec<String>,
    pub separation: bool,
    pub limit_set_containment: bool,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Band index i with differing choices.
    pub index: usize,
    pub linking: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distinctness {
    /// `matrix[a][b]`: the witness separating arrangements a and b.
    pub matrix: Vec<Vec<Option<Witness>>>,
    pub pairs: usize,
    pub witnessed: usize,
    /// Unwitnessed pairs that differ only in bands where a station fails
    /// `same_side`; that check already reports them.
    pub unevaluable: usize,
    /// Per band: linking number of (Pi_i^B, Pi_i^C) and whether they lie on
    /// opposite sides.
    pub band_linking: Vec<Option<i64>>,
    pub band_opposite: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub pass: bool,
    pub measured: f64,
    pub limit: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub circles: usize,
    pub stations: usize,
    pub bridges: usize,
    pub arrangements: usize,
    pub stations_per_arrangement: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub points: usize,
    pub depth: usize,
    pub prune_tol: f64,
    pub max_depth: usize,
    pub unpruned: usize,
    pub neighborhood_max_distance: f64,
    pub station_hits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionCertificate {
    pub status: String,
    pub valid: bool,
    pub spec: ConstructionSpec,
    pub counts: Counts,
    pub d0: f64,
    pub d1: f64,
    pub dl_threshold: f64,
    pub chain_circles: usize,
    pub stations: Vec<StationRecord>,
    pub linking: Vec<PairLinking>,
    pub cloud: CloudSummary,
    pub arrangements: Vec<ArrangementRecord>,
    pub distinctness: Distinctness,
    pub criteria: BTreeMap<String, Criterion>,
    pub caveats: Vec<String>,
}

fn criterion(pass: bool, measured: f64, limit: f64, detail: impl Into<String>) -> Criterion {
    Criterion { pass, measured, limit, detail: detail.into() }
}

/// Shared per-configuration data for the arrangement checks.
pub struct Verifier<'a> {
    pub config: &'a Configuration,
    pub layout: Layout,
    pub regions: Regions<'a>,
    pub threshold: f64,
    pub records: Vec<StationRecord>,
    pub solutions: Vec<Option<CatenoidSolution>>,
    pub loops: Vec<Option<Vec<Point>>>,
    cloud_points: Vec<Point>,
    cloud_summary: CloudSummary,
    neighborhood_ok: bool,
    link_cache: BTreeMap<(usize, usize), Result<Linking, LinkingError>>,
}

impl<'a> Verifier<'a> {
    pub fn new(config: &'a Configuration, solver: &'a CatenoidSolver) -> Result<Self, BuildError> {
        let layout = config.layout.clone();
        let regions = regions(&config.chain)?;
        let threshold = dl_threshold(solver);
        let grid = config.chain.disk_grid();
        let results: Vec<_> = config
            .stations
            .par_iter()
            .map(|st| -> Result<(StationRecord, Option<CatenoidSolution>), BuildError> {
                let sides = [regions.side_of_circle(&st.circles[0], 64), regions.side_of_circle(&st.circles[1], 64)];
                let same_side = sides[0] == sides[1] && sides[0] != Side::Covered;
                let dl = st.dl()?;
                let sol = solver.least_area_for_pair(&st.circles[0], &st.circles[1])?;
                let (mut samples, mut violations) = (0, 0);
                if let Some((s, _)) = &sol {
                    let side = (SEPARATION_SAMPLES as f64).sqrt().round() as usize;
                    for p in s.solid().surface_points(side, side) {
                        samples += 1;
                        if config.chain.hemisphere_containing(&grid, p).is_some() {
                            violations += 1;
                        }
                    }
                }
                let residual = sol.as_ref().map(|(s, _)| s.residual);
                let rec = StationRecord {
                    kind: st.kind,
                    label: st.kind.label(),
                    sides,
                    same_side,
                    dl,
                    dl_ok: dl <= threshold,
                    neck: sol.as_ref().map(|(s, _)| s.curve.neck_parameter),
                    area_deficit: sol.as_ref().map(|(_, d)| *d),
                    residual,
                    residual_ok: residual.is_some_and(|r| r < RESIDUAL_TOL),
                    separation_samples: samples,
                    separation_violations: violations,
                };
                Ok((rec, sol.map(|(s, _)| s)))
            })
            .collect();
        let mut records = vec![];
        let mut solutions = vec![];
        for r in results {
            let (rec, sol) = r?;
            records.push(rec);
            solutions.push(sol);
        }
        let loops = config
            .stations
            .iter()
            .zip(&solutions)
            .zip(&records)
            .map(|((st, sol), rec)| match sol {
                Some(s) if rec.same_side => Some(station_loop(&layout, st, s)),
                _ => None,
            })
            .collect();
        let group = InversionGroup::new(config.chain.clone())?;
        let cloud = limit_set(&group, config.spec.prune_tol, config.spec.max_depth);
        let nb = neighborhood_report(&cloud, &config.chain);
        let station_hits = cloud
            .points
            .par_iter()
            .filter(|p| config.stations.iter().any(|s| s.circles.iter().any(|c| c.disk_contains(**p))))
            .count();
        let cloud_summary = CloudSummary {
            points: cloud.points.len(),
            depth: cloud.depth,
            prune_tol: cloud.prune_tol,
            max_depth: cloud.max_depth,
            unpruned: cloud.unpruned as usize,
            neighborhood_max_distance: nb.max_distance,
            station_hits,
        };
        Ok(Verifier {
            config,
            layout,
            regions,
            threshold,
            records,
            solutions,
            loops,
            cloud_points: cloud.points,
            cloud_summary,
            neighborhood_ok: nb.pass,
            link_cache: BTreeMap::new(),
        })
    }

    pub fn cloud_points(&self) -> &[Point] {
        &self.cloud_points
    }

    /// Linking number of two stations' loops; `None` if either loop is undefined.
    pub fn linking(&mut self, a: usize, b: usize) -> Option<Result<Linking, LinkingError>> {
        let key = (a.min(b), a.max(b));
        if let Some(r) = self.link_cache.get(&key) {
            return Some(r.clone());
        }
        let (la, lb) = (self.loops[key.0].as_ref()?, self.loops[key.1].as_ref()?);
        let r = linking_number(la, lb);
        self.link_cache.insert(key, r.clone());
        Some(r)
    }

    fn side(&self, s: usize) -> Side {
        self.records[s].sides[0]
    }

    pub fn verify_arrangement(&mut self, arr: &Arrangement) -> ArrangementRecord {
        let sel = &arr.stations;
        let recs: Vec<&StationRecord> = sel.iter().map(|&s| &self.records[s]).collect();
        let same_side = recs.iter().all(|r| r.same_side);
        let circles: Vec<Circle> = sel.iter().flat_map(|&s| self.config.stations[s].circles).collect();
        let good = good_position(&circles).ok;
        let dl_ok = recs.iter().all(|r| r.dl_ok);
        let residual_ok = recs.iter().all(|r| r.residual_ok);
        let separation = recs.iter().all(|r| r.separation_violations == 0 && r.separation_samples > 0);
        let usable: Vec<usize> = sel.iter().copied().filter(|&s| self.loops[s].is_some()).collect();
        let skipped: Vec<String> = sel
            .iter()
            .filter(|&&s| !self.records[s].same_side)
            .map(|&s| self.records[s].label.clone())
            .collect();
        let mut pairs = 0;
        let mut linked = vec![];
        for (x, &a) in usable.iter().enumerate() {
            for &b in &usable[x + 1..] {
                if self.side(a) == self.side(b) {
                    continue;
                }
                pairs += 1;
                match self.linking(a, b) {
                    Some(Ok(l)) if l.value == 0 => {}
                    Some(Ok(l)) => linked.push(format!("{}-{}: {}", self.records[a].label, self.records[b].label, l.value)),
                    Some(Err(e)) => linked.push(format!("{}-{}: {e}", self.records[a].label, self.records[b].label)),
                    None => {}
                }
            }
        }
        let depth = self.config.spec.catenoid_offset / 8.0;
        let samples = witness_disk_samples(&self.layout, &arr.choice, depth);
        let solids: Vec<_> = usable.iter().filter_map(|&s| self.solutions[s].as_ref().map(|x| x.solid())).collect();
        let hits = samples.par_iter().filter(|p| solids.iter().any(|t| t.contains(**p))).count();
        let containment = self.neighborhood_ok && self.cloud_summary.station_hits == 0;
        let unlinked = linked.is_empty();
        let witness = hits == 0 && !samples.is_empty();
        let pass = same_side && good && dl_ok && residual_ok && unlinked && witness && separation && containment;
        ArrangementRecord {
            index: arr.index,
            label: arr.label(),
            stations: sel.iter().map(|&s| self.records[s].label.clone()).collect(),
            same_side,
            good_position: good,
            dl_threshold: dl_ok,
            catenoid_residual: residual_ok,
            linking_pairs: pairs,
            linked_pairs: linked,
            unlinked,
            witness_samples: samples.len(),
            witness_hits: hits,
            witness_disk: witness,
            skipped,
            separation,
            limit_set_containment: containment,
            pass,
        }
    }

    /// Pairwise distinctness via the linked (Pi_i^B, Pi_i^C) witness pairs.
    pub fn distinctness(&mut self, arrs: &[Arrangement]) -> Distinctness {
        let n = self.config.spec.n;
        let mut band_linking = vec![];
        let mut band_opposite = vec![];
        for i in 1..=n {
            let (b, c) = (self.config.station(StationKind::Bridge(i)), self.config.station(StationKind::CirclePair(i)));
            let (l, opp) = match (b, c) {
                (Some(b), Some(c)) => {
                    let opp = self.records[b].same_side
                        && self.records[c].same_side
                        && self.side(b) != self.side(c);
                    (self.linking(b, c).and_then(|r| r.ok()).map(|l| l.value), opp)
                }
                _ => (None, false),
            };
            band_linking.push(l);
            band_opposite.push(opp);
        }
        let m = arrs.len();
        let mut matrix = vec![vec![None; m]; m];
        let split: Vec<bool> = (1..=n)
            .map(|i| {
                [StationKind::Bridge(i), StationKind::CirclePair(i)]
                    .iter()
                    .any(|&k| self.config.station(k).map_or(false, |s| !self.records[s].same_side))
            })
            .collect();
        let (mut witnessed, mut unevaluable) = (0, 0);
        for a in 0..m {
            for b in a + 1..m {
                let w = (0..n).find_map(|i| {
                    if arrs[a].choice[i] == arrs[b].choice[i] || !band_opposite[i] {
                        return None;
                    }
                    match band_linking[i] {
                        Some(l) if l != 0 => Some(Witness { index: i + 1, linking: l }),
                        _ => None,
                    }
                });
                if w.is_some() {
                    witnessed += 1;
                } else if (0..n).all(|i| arrs[a].choice[i] == arrs[b].choice[i] || split[i]) {
                    unevaluable += 1;
                }
                matrix[a][b] = w;
                matrix[b][a] = w;
            }
        }
        Distinctness { matrix, pairs: m * (m.saturating_sub(1)) / 2, witnessed, unevaluable, band_linking, band_opposite }
    }
}

/// Certify a configuration: every hypothesis check for every arrangement,
/// plus the distinctness matrix.
pub fn verify_configuration(config: &Configuration) -> Result<ConstructionCertificate, BuildError> {
    let solver = default_solver()?;
    verify_configuration_with(config, &solver)
}

pub fn verify_configuration_with(
    config: &Configuration,
    solver: &CatenoidSolver,
) -> Result<ConstructionCertificate, BuildError> {
    let spec = &config.spec;
    spec.validate()?;
    let n = spec.n;
    let mut v = Verifier::new(config, solver)?;
    let arrs = enumerate_arrangements(n, &config.stations);
    let records: Vec<ArrangementRecord> = arrs.iter().map(|a| v.verify_arrangement(a)).collect();
    let distinct = v.distinctness(&arrs);
    let mut criteria = BTreeMap::new();

    // Parallel circles, rebuilt from the spec.
    let parallel = build_parallel_circles(n, spec.epsilon);
    let min_rho = match &parallel {
        Ok(p) => {
            let all: Vec<Circle> = p.iter().flat_map(|q| [q.upper, q.lower]).collect();
            let mut m = f64::INFINITY;
            for i in 0..all.len() {
                for j in i + 1..all.len() {
                    m = m.min(circle_gap(&all[i], &all[j]));
                }
            }
            m
        }
        Err(_) => 0.0,
    };
    criteria.insert(
        "parallel_circles".into(),
        criterion(parallel.is_ok() && min_rho > 0.0, min_rho, 0.0, match &parallel {
            Ok(_) => "2N parallel circles pairwise disjoint (min rho)".to_string(),
            Err(e) => e.to_string(),
        }),
    );
    let simple = config.curve.polyline.self_intersection();
    criteria.insert(
        "jordan_curve".into(),
        criterion(simple.is_none(), config.curve.bridges.len() as f64, (2 * n - 1) as f64, match simple {
            None => "simple closed polyline; measured = bridge count".to_string(),
            Some((a, b)) => format!("segments {a} and {b} cross"),
        }),
    );
    let counts = Counts {
        circles: 2 * config.stations.len(),
        stations: config.stations.len(),
        bridges: config.curve.bridges.len(),
        arrangements: arrs.len(),
        stations_per_arrangement: arrs.iter().map(|a| a.stations.len()).max().unwrap_or(0),
    };
    let counts_ok = counts.circles == 6 * n - 2
        && counts.stations == 3 * n - 1
        && counts.bridges == 2 * n - 1
        && counts.arrangements == 1 << n
        && arrs.iter().all(|a| a.stations.len() == 2 * n - 1);
    criteria.insert(
        "counts".into(),
        criterion(counts_ok, counts.circles as f64, (6 * n - 2) as f64, "6N-2 circles, 3N-1 stations, 2N-1 bridges, 2^N arrangements of 2N-1"),
    );

    let check = config.chain.check();
    criteria.insert(
        "chain_orthogonality".into(),
        criterion(
            check.max_orthogonality_residual <= crate::kleinian::ORTHOGONALITY_TOL,
            check.max_orthogonality_residual,
            crate::kleinian::ORTHOGONALITY_TOL,
            "max |cos| of consecutive intersection angles",
        ),
    );
    criteria.insert(
        "chain_disjointness".into(),
        criterion(check.min_nonadjacent_gap > 0.0, check.min_nonadjacent_gap, 0.0, "min gap between non-adjacent closed disks"),
    );
    let cover_ok = check.uncovered_samples == 0 && check.max_radius <= config.chain.delta && check.count % 2 == 0 && check.count >= 6;
    criteria.insert(
        "chain_coverage".into(),
        criterion(cover_ok, check.uncovered_samples as f64, 0.0, format!(
            "uncovered curve samples out of {}; {} circles, max radius {:.6} (delta {})",
            check.curve_samples, check.count, check.max_radius, config.chain.delta
        )),
    );

    let all_circles: Vec<Circle> = config.stations.iter().flat_map(|s| s.circles).collect();
    let gp_all = good_position(&all_circles).ok;
    criteria.insert(
        "good_position".into(),
        criterion(gp_all && records.iter().all(|r| r.good_position), all_circles.len() as f64, (6 * n - 2) as f64, "all station circles jointly, and each arrangement"),
    );
    let mixed: Vec<String> = v.records.iter().filter(|r| !r.same_side).map(|r| r.label.clone()).collect();
    criteria.insert(
        "same_side".into(),
        criterion(mixed.is_empty(), mixed.len() as f64, 0.0, if mixed.is_empty() {
            "both circles of every station on one side, outside the chain".to_string()
        } else {
            format!("stations split or covered: {}", mixed.join(", "))
        }),
    );
    let max_ratio = v.records.iter().map(|r| r.dl / v.threshold).fold(0.0, f64::max);
    criteria.insert(
        "dl_threshold".into(),
        criterion(v.records.iter().all(|r| r.dl_ok), max_ratio, 1.0, "max d_L / min(d0, d1)"),
    );
    let max_res = v.records.iter().map(|r| r.residual.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    criteria.insert(
        "catenoid_residual".into(),
        criterion(v.records.iter().all(|r| r.residual_ok), max_res, RESIDUAL_TOL, "max mean curvature residual of the least-area catenoids"),
    );
    let linked: usize = records.iter().map(|r| r.linked_pairs.len()).sum();
    let tested: usize = records.iter().map(|r| r.linking_pairs).sum();
    criteria.insert(
        "null_homotopy_linking".into(),
        criterion(records.iter().all(|r| r.unlinked), linked as f64, 0.0, format!("linked cross-side pairs out of {tested} tested")),
    );
    let hits: usize = records.iter().map(|r| r.witness_hits).sum();
    criteria.insert(
        "null_homotopy_witness".into(),
        criterion(records.iter().all(|r| r.witness_disk), hits as f64, 0.0, "witness disk samples inside a chosen solid catenoid"),
    );
    let viol: usize = v.records.iter().map(|r| r.separation_violations).sum();
    let min_samples = v.records.iter().map(|r| r.separation_samples).min().unwrap_or(0);
    criteria.insert(
        "separation".into(),
        criterion(
            viol == 0 && min_samples >= SEPARATION_SAMPLES,
            viol as f64,
            0.0,
            format!("catenoid samples inside a covering half-space; {min_samples} samples per station"),
        ),
    );
    criteria.insert(
        "limit_set_neighborhood".into(),
        criterion(v.neighborhood_ok, v.cloud_summary.neighborhood_max_distance, config.chain.delta, format!(
            "max distance from {} cloud points to the curve",
            v.cloud_summary.points
        )),
    );
    criteria.insert(
        "limit_set_avoids_stations".into(),
        criterion(v.cloud_summary.station_hits == 0, v.cloud_summary.station_hits as f64, 0.0, "cloud points inside a station disk"),
    );
    criteria.insert(
        "distinctness".into(),
        criterion(
            distinct.witnessed + distinct.unevaluable == distinct.pairs,
            distinct.witnessed as f64,
            distinct.pairs as f64,
            format!(
                "arrangement pairs witnessed by a linked (B, C) pair on opposite sides; {} left to same_side",
                distinct.unevaluable
            ),
        ),
    );
    let valid = criteria.values().all(|c| c.pass) && records.iter().all(|r| r.pass);
    Ok(ConstructionCertificate {
        status: if valid { "VALID" } else { "INVALID" }.into(),
        valid,
        spec: spec.clone(),
        counts,
        d0: solver.thresholds.d0,
        d1: solver.thresholds.d1,
        dl_threshold: v.threshold,
        chain_circles: config.chain.len(),
        stations: v.records.clone(),
        linking: link_table(&mut v),
        cloud: v.cloud_summary.clone(),
        arrangements: records,
        distinctness: distinct,
        criteria,
        caveats: vec![
            "the g_i are elliptic of order 2, so the groups certified are the reflection group and its \
             orientation-preserving half; their torsion-free finite-index subgroup shares the limit set and \
             is not built"
                .into(),
            "least-area status of each catenoid rests on the extrapolated area-deficit test, not on a proof".into(),
            "null-homotopy is certified through unlinked loops and a sampled witness disk".into(),
        ],
    })
}

fn link_table(v: &mut Verifier<'_>) -> Vec<PairLinking> {
    let keys: Vec<(usize, usize)> = v.link_cache.keys().copied().collect();
    keys.into_iter()
        .map(|(a, b)| {
            let r = v.link_cache[&(a, b)].clone();
            PairLinking {
                a: v.records[a].label.clone(),
                b: v.records[b].label.clone(),
                linking: r.as_ref().ok().copied(),
                error: r.err().map(|e| e.to_string()),
            }
        })
        .collect()
}

/// Steps 1 to 4 end to end.
pub fn run_pipeline(spec: &ConstructionSpec) -> Result<(Configuration, ConstructionCertificate), BuildError> {
    let solver = default_solver()?;
    let config = build_configuration_with(spec, &solver)?;
    let cert = verify_configuration_with(&config, &solver)?;
    Ok((config, cert))
}

/// Shrink epsilon, bridge width and offset together until the pipeline
/// returns VALID. Returns the spec and the number of attempts.
pub fn search_spec(start: &ConstructionSpec, max_attempts: usize) -> Result<(ConstructionSpec, usize), BuildError> {
    let solver = default_solver()?;
    let mut spec = start.clone();
    let mut last = None;
    for attempt in 1..=max_attempts {
        match build_configuration_with(&spec, &solver).and_then(|c| verify_configuration_with(&c, &solver)) {
            Ok(cert) if cert.valid => return Ok((spec, attempt)),
            Ok(cert) => {
                let failed: Vec<&String> = cert.criteria.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k).collect();
                last = Some(format!("INVALID: {failed:?}"));
            }
            Err(e) => last = Some(e.to_string()),
        }
        spec.epsilon *= 0.8;
        spec.bridge_width *= 0.8;
        spec.catenoid_offset *= 0.8;
    }
    Err(BuildError::InvalidSpec(format!(
        "no valid spec after {max_attempts} attempts; last: {}",
        last.unwrap_or_default()
    )))
}
