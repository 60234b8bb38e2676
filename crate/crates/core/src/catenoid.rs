//! Spherical minimal catenoids in hyperbolic 3-space.
//!
//! The generating curve lives in Fermi coordinates `(t, r)` about the rotation
//! axis, where the metric is `dr^2 + cosh^2 r dt^2 + sinh^2 r dtheta^2`. With
//! arclength `s` and tangent angle `phi` (`r' = sin phi`, `cosh r t' = cos phi`)
//! the surface of revolution is minimal iff
//! `phi' = (coth r + tanh r) cos phi`, which has the first integral
//! `sinh r cosh r cos phi = k`. Starting at the neck `r = a, t = 0, phi = 0`,
//! `t` increases to a finite limit `T`; the catenoid is asymptotic to the
//! boundary circles of the two geodesic planes orthogonal to the axis at
//! `t = +-T`, so `d(a) = 2T`.
//!
//! Integration runs on a grid uniform in `u` with `du/ds = 1 + phi'`, which
//! keeps steps reasonable both at a thin neck and where the curve turns
//! vertical.

use crate::circle::{plane_distance_dl, spherical_distance_rho, ChartCircle};
use crate::error::{GeomError, SolveError};
use crate::moebius::{project_from_sphere, ExtComplex};
use crate::ode::{integrate, Tolerances};
use crate::vec3::Vec3;
use crate::{Circle, Complex, Mobius, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Residual bound every returned solution must meet.
pub const RESIDUAL_TOL: f64 = 1e-5;

/// Truncation radii for the area comparison, measured beyond the neck
/// (the ball radius is `a + AREA_RADII[i]`).
pub const AREA_RADII: [f64; 3] = [6.0, 8.0, 10.0];

/// Samples further than this from the neck (in r) are left out of the
/// residual: their t-coordinates agree with T to nearly full precision.
const RESIDUAL_WINDOW: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    /// Spacing of the output grid in the auxiliary parameter u.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Integrate until r exceeds a + cutoff; the remaining tail of t is added
    /// in closed form.
    pub cutoff: f64,
}

impl Default for CurveParams {
    fn default() -> Self {
        CurveParams { step: 0.002, rtol: 1e-12, atol: 1e-15, cutoff: 8.0 }
    }
}

impl CurveParams {
    fn validate(&self) -> Result<(), SolveError> {
        let ok = self.step > 0.0 && self.rtol > 0.0 && self.atol > 0.0 && self.cutoff > 1.0;
        if ok && self.step.is_finite() && self.cutoff.is_finite() {
            Ok(())
        } else {
            Err(SolveError::InvalidArgument(format!("bad curve parameters {self:?}")))
        }
    }

    fn tol(&self) -> Tolerances {
        Tolerances { rtol: self.rtol, atol: self.atol }
    }
}

/// Profile of a catenoid in Fermi coordinates about its axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratingCurve {
    pub neck_parameter: f64,
    /// `(t, r)` pairs ordered by t, symmetric about the neck sample in the middle.
    pub samples: Vec<[f64; 2]>,
    pub plane_separation: f64,
    /// `k = sinh a cosh a`.
    pub first_integral: f64,
}

impl GeneratingCurve {
    /// The half with `t >= 0`, starting at the neck.
    pub fn half(&self) -> &[[f64; 2]] {
        &self.samples[self.samples.len() / 2..]
    }

    pub fn half_separation(&self) -> f64 {
        self.plane_separation / 2.0
    }

    /// Axis coordinate of the curve at distance `r >= a` from the axis.
    pub fn t_at(&self, r: f64) -> Option<f64> {
        let half = self.half();
        let a = self.neck_parameter;
        if r < a {
            return None;
        }
        let last = half[half.len() - 1];
        if r >= last[1] {
            return Some(self.half_separation() - tail(self.first_integral, r));
        }
        let i = half.partition_point(|s| s[1] <= r).max(1);
        let (p, q) = (half[i - 1], half[i]);
        let w = if q[1] > p[1] { (r - p[1]) / (q[1] - p[1]) } else { 0.0 };
        Some(p[0] + w * (q[0] - p[0]))
    }
}

/// Remaining growth of t beyond r, from `dt/dr ~ 8 k e^{-3r}`.
fn tail(k: f64, r: f64) -> f64 {
    8.0 * k / 3.0 * (-3.0 * r).exp()
}

/// Right-hand side in u for (r, t, phi) and optionally the half area.
fn rhs<const N: usize>(y: &[f64; N]) -> [f64; N] {
    let (r, phi) = (y[0], y[2]);
    let th = r.tanh();
    let dphi = (1.0 / th + th) * phi.cos();
    let w = 1.0 / (1.0 + dphi);
    let mut out = [0.0; N];
    out[0] = phi.sin() * w;
    out[1] = phi.cos() / r.cosh() * w;
    out[2] = dphi * w;
    if N > 3 {
        out[3] = TAU * r.sinh() * w;
    }
    out
}

fn check_neck(a: f64) -> Result<(), SolveError> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(SolveError::InvalidArgument(format!("neck parameter must be positive, got {a}")))
    }
}

/// Integrate the half curve from the neck out to `r = a + cutoff`.
fn half_curve(a: f64, params: &CurveParams) -> Result<(Vec<[f64; 2]>, f64), SolveError> {
    check_neck(a)?;
    params.validate()?;
    let f = |_: f64, y: &[f64; 3]| rhs(y);
    let mut y = [a, 0.0, 0.0];
    let mut out = vec![[0.0, a]];
    let r_end = a + params.cutoff;
    let mut h = 0.0;
    let mut k = 0usize;
    while y[0] < r_end {
        if k > 10_000_000 {
            return Err(SolveError::Integration { s: y[0], reason: "cutoff not reached".into() });
        }
        let u0 = k as f64 * params.step;
        y = integrate(&f, u0, u0 + params.step, y, &mut h, params.tol())?;
        k += 1;
        out.push([y[1], y[0]]);
    }
    let kk = a.sinh() * a.cosh();
    let half_sep = y[1] + tail(kk, y[0]);
    Ok((out, half_sep))
}

/// Plane separation d(a) alone, without keeping samples.
pub fn plane_separation(a: f64, params: &CurveParams) -> Result<f64, SolveError> {
    Ok(2.0 * half_curve(a, params)?.1)
}

pub fn solve_generating_curve(a: f64, params: &CurveParams) -> Result<GeneratingCurve, SolveError> {
    let (half, t_half) = half_curve(a, params)?;
    let mut samples: Vec<[f64; 2]> = half.iter().rev().map(|s| [-s[0], s[1]]).collect();
    samples.pop();
    samples.extend_from_slice(&half);
    Ok(GeneratingCurve {
        neck_parameter: a,
        samples,
        plane_separation: 2.0 * t_half,
        first_integral: a.sinh() * a.cosh(),
    })
}

/// Maximum absolute mean curvature of the surface of revolution over the
/// interior samples, from fourth-order finite differences in the sample index.
pub fn mean_curvature_residual(curve: &GeneratingCurve) -> Result<f64, SolveError> {
    let s = &curve.samples;
    if s.len() < 100 {
        return Err(SolveError::DegenerateMesh(format!("{} samples, need at least 100", s.len())));
    }
    let window = curve.neck_parameter + RESIDUAL_WINDOW;
    let mut worst = 0.0f64;
    for i in 2..s.len() - 2 {
        let r = s[i][1];
        if r > window {
            continue;
        }
        if !(r > 0.0) {
            return Err(SolveError::DegenerateMesh(format!("sample {i} touches the axis")));
        }
        let d1 = |c: usize| (-s[i + 2][c] + 8.0 * s[i + 1][c] - 8.0 * s[i - 1][c] + s[i - 2][c]) / 12.0;
        let d2 = |c: usize| {
            (-s[i + 2][c] + 16.0 * s[i + 1][c] - 30.0 * s[i][c] + 16.0 * s[i - 1][c] - s[i - 2][c]) / 12.0
        };
        let (tp, rp, tpp, rpp) = (d1(0), d1(1), d2(0), d2(1));
        let (ch, sh) = (r.cosh(), r.sinh());
        let l2 = rp * rp + ch * ch * tp * tp;
        if !(l2 > 0.0) {
            return Err(SolveError::DegenerateMesh(format!("zero tangent at sample {i}")));
        }
        let l = l2.sqrt();
        let nt = -rp / (ch * l);
        let nr = ch * tp / l;
        let ss = sh * ch;
        let ii_uu = ch * ch * (tpp + 2.0 * r.tanh() * tp * rp) * nt + (rpp - ss * tp * tp) * nr;
        let ii_tt = -ss * nr;
        let h2 = ii_uu / l2 + ii_tt / (sh * sh);
        worst = worst.max(h2.abs() / 2.0);
    }
    Ok(worst)
}

/// Truncated area of the catenoid minus that of the two spanning disks,
/// inside the geodesic ball of radius `big_r` about the axis midpoint.
pub fn truncated_area_deficit(a: f64, big_r: f64, params: &CurveParams) -> Result<f64, SolveError> {
    check_neck(a)?;
    params.validate()?;
    let half_t = plane_separation(a, params)? / 2.0;
    if !(big_r > half_t + 1.0) || !(big_r > a + 1.0) {
        return Err(SolveError::InvalidArgument(format!("radius {big_r} does not reach past the neck and the planes")));
    }
    let f = |_: f64, y: &[f64; 4]| rhs(y);
    // Inside the ball iff ln cosh r + ln cosh t < ln cosh R.
    let lc = |x: f64| x.abs() + (-2.0 * x.abs()).exp().ln_1p() - std::f64::consts::LN_2;
    let g = |y: &[f64; 4]| lc(y[0]) + lc(y[1]) - lc(big_r);
    let mut y = [a, 0.0, 0.0, 0.0];
    let mut h = 0.0;
    let mut k = 0usize;
    loop {
        if k > 10_000_000 {
            return Err(SolveError::Integration { s: y[0], reason: "never left the ball".into() });
        }
        let u0 = k as f64 * params.step;
        let next = integrate(&f, u0, u0 + params.step, y, &mut h, params.tol())?;
        if g(&next) >= 0.0 {
            // Bisect for the crossing inside this interval.
            let (mut lo, mut hi) = (0.0, params.step);
            let mut at = next;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let mut hh = 0.0;
                let ym = integrate(&f, u0, u0 + mid, y, &mut hh, params.tol())?;
                if g(&ym) >= 0.0 {
                    hi = mid;
                    at = ym;
                } else {
                    lo = mid;
                }
            }
            let half_area = at[3];
            let disk = TAU * (big_r.cosh() / half_t.cosh() - 1.0);
            return Ok(2.0 * half_area - 2.0 * disk);
        }
        y = next;
        k += 1;
    }
}

/// Area deficit extrapolated to infinite radius from the cutoffs in
/// [`AREA_RADII`] by Aitken's delta-squared process.
pub fn area_deficit(a: f64, params: &CurveParams) -> Result<f64, SolveError> {
    let mut x = [0.0; 3];
    for (xi, &extra) in x.iter_mut().zip(AREA_RADII.iter()) {
        *xi = truncated_area_deficit(a, a + extra, params)?;
    }
    aitken(x)
}

fn aitken(x: [f64; 3]) -> Result<f64, SolveError> {
    let (d1, d2) = (x[1] - x[0], x[2] - x[1]);
    if d2.abs() <= 1e-10 * (1.0 + x[2].abs()) {
        return Ok(x[2]);
    }
    let q = d2 / d1;
    if !(q.is_finite() && q.abs() < 1.0) {
        return Err(SolveError::Extrapolation(format!("truncated deficits {x:?} are not converging geometrically")));
    }
    Ok(x[2] - d2 * d2 / (d2 - d1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub params: CurveParams,
    pub tol: f64,
    pub area_radii: [f64; 3],
    /// Whether the grid scan of d(a) had a single interior maximum.
    pub unimodal: bool,
    pub least_area_criterion: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimates {
    pub d0: f64,
    /// Range of d over the final bracket ends and its midpoint.
    pub d0_bracket: [f64; 2],
    pub a_star: f64,
    pub a_star_bracket: [f64; 2],
    pub d1: f64,
    pub d1_bracket: [f64; 2],
    /// Neck parameter on the large branch where the area deficit changes sign.
    pub a1: f64,
    pub a1_bracket: [f64; 2],
    pub meta: SolverMeta,
}

/// d0 = max d(a): a log-spaced grid scan followed by golden-section refinement
/// around the best grid point. Returns (d0, d bracket, a*, a bracket, unimodal).
pub fn existence_threshold(tol: f64, params: &CurveParams) -> Result<(f64, [f64; 2], f64, [f64; 2], bool), SolveError> {
    if !(tol > 0.0) {
        return Err(SolveError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = 41;
    let grid: Vec<f64> = (0..n).map(|i| 1e-3 * 1e4f64.powf(i as f64 / (n - 1) as f64)).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&a| plane_separation(a, params)).collect::<Result<_, _>>()?;
    let best = (0..n).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    if best == 0 || best == n - 1 {
        return Err(SolveError::Bracket("maximum of d(a) at the edge of the scan".into()));
    }
    let rises = vals.windows(2).filter(|w| w[1] > w[0]).count();
    let unimodal = vals[..=best].windows(2).all(|w| w[1] > w[0])
        && vals[best..].windows(2).all(|w| w[1] < w[0])
        && rises == best;
    let (mut lo, mut hi) = (grid[best - 1], grid[best + 1]);
    let d = |a: f64| plane_separation(a, params);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (d(x1)?, d(x2)?);
    let floor = tol.max(1e-9);
    while hi - lo > floor {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = d(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = d(x2)?;
        }
    }
    let a_star = 0.5 * (lo + hi);
    let d0 = d(a_star)?;
    let ends = [d(lo)?, d(hi)?, d0];
    let bracket = [ends.iter().copied().fold(f64::INFINITY, f64::min), ends.iter().copied().fold(f64::NEG_INFINITY, f64::max)];
    Ok((d0, bracket, a_star, [lo, hi], unimodal))
}

/// d1: the plane separation at the large-branch neck where the extrapolated
/// area deficit changes sign. Returns (d1, d bracket, a1, a bracket).
pub fn least_area_threshold(
    tol: f64,
    a_star: f64,
    params: &CurveParams,
) -> Result<(f64, [f64; 2], f64, [f64; 2]), SolveError> {
    if !(tol > 0.0) {
        return Err(SolveError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut lo = a_star;
    if area_deficit(lo, params)? <= 0.0 {
        return Err(SolveError::Bracket("area deficit already negative at the maximiser of d".into()));
    }
    let mut hi = 2.0 * a_star;
    while area_deficit(hi, params)? >= 0.0 {
        lo = hi;
        hi *= 1.5;
        if hi > 20.0 {
            return Err(SolveError::Bracket("area deficit stays positive up to a = 20".into()));
        }
    }
    let floor = tol.max(1e-10);
    while hi - lo > floor {
        let mid = 0.5 * (lo + hi);
        if area_deficit(mid, params)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a1 = 0.5 * (lo + hi);
    let d1 = plane_separation(a1, params)?;
    Ok((d1, [plane_separation(hi, params)?, plane_separation(lo, params)?], a1, [lo, hi]))
}

pub fn thresholds(tol: f64, params: &CurveParams) -> Result<ThresholdEstimates, SolveError> {
    let (d0, d0_bracket, a_star, a_star_bracket, unimodal) = existence_threshold(tol, params)?;
    let (d1, d1_bracket, a1, a1_bracket) = least_area_threshold(tol, a_star, params)?;
    Ok(ThresholdEstimates {
        d0,
        d0_bracket,
        a_star,
        a_star_bracket,
        d1,
        d1_bracket,
        a1,
        a1_bracket,
        meta: SolverMeta {
            params: *params,
            tol,
            area_radii: AREA_RADII,
            unimodal,
            least_area_criterion: "area-comparison".into(),
        },
    })
}

/// The endpoints of the common perpendicular of the planes spanning two
/// circles with disjoint closed disks: first the one inside disk 1.
///
/// In the Lorentz model a circle `n.x = h` is the unit spacelike vector
/// `(h, n) / sqrt(1 - h^2)`; the null lines of the span of the two vectors
/// are the two points fixed by every rotation preserving both circles.
pub fn coaxial_axis(c1: &Circle, c2: &Circle) -> Result<(Point, Point), GeomError> {
    let rho = spherical_distance_rho(c1, c2)?;
    if rho == 0.0 {
        return Err(GeomError::Overlapping(0.0));
    }
    let v = |c: &Circle| {
        let s = (1.0 - c.offset * c.offset).sqrt();
        (c.offset / s, c.normal / s)
    };
    let (v1, v2) = (v(c1), v(c2));
    let ip = c1.inversive_product(c2);
    if ip > -1.0 {
        return Err(GeomError::Overlapping(rho));
    }
    let root = (ip * ip - 1.0).sqrt();
    let point = |lam: f64| {
        let x0 = v1.0 + lam * v2.0;
        let x = v1.1 + v2.1 * lam;
        (x / x0).normalized()
    };
    let p = point(-ip + root);
    let q = point(-ip - root);
    if c1.signed_distance(p) <= c1.signed_distance(q) {
        Ok((p, q))
    } else {
        Ok((q, p))
    }
}

/// A Moebius map taking the pair to the standard coaxial position: circle 1 to
/// `z = tanh T` with the north pole in its disk, circle 2 to `z = -tanh T`.
pub fn standard_position(c1: &Circle, c2: &Circle) -> Result<Mobius, GeomError> {
    let (p1, p2) = coaxial_axis(c1, c2)?;
    let e3 = Vec3::e3();
    let axis = p1.cross(e3);
    let s = axis.norm();
    let rot = if s < 1e-15 {
        if p1.z > 0.0 {
            Mobius::identity()
        } else {
            Mobius::rotation(Vec3::e1(), PI)
        }
    } else {
        Mobius::rotation(axis / s, s.atan2(p1.z))
    };
    let q = match project_from_sphere(rot.apply_sphere(p2)) {
        ExtComplex::Finite(q) => q,
        ExtComplex::Infinity => return Err(GeomError::CoincidentPoints),
    };
    let tr = Mobius::translation(-q).compose(&rot);
    let radius = |c: &Circle, interior: bool| -> Result<f64, GeomError> {
        match c.transform(&tr)?.chart() {
            ChartCircle::Circle { radius, interior: i, .. } if i == interior => Ok(radius),
            _ => Err(GeomError::InvalidCircle("pair is not concentric after normalisation".into())),
        }
    };
    let (r1, r2) = (radius(c1, false)?, radius(c2, true)?);
    let lam = 1.0 / (r1 * r2).sqrt();
    Ok(Mobius::scaling(Complex::new(lam, 0.0))?.compose(&tr))
}

/// Fermi coordinates `(t, r)` of a ball point about the standard axis.
fn fermi(q: Point) -> (f64, f64) {
    let n2 = q.norm_sqr();
    let den = 1.0 - n2;
    let x0 = (1.0 + n2) / den;
    let rho = 2.0 * (q.x * q.x + q.y * q.y).sqrt() / den;
    let x3 = 2.0 * q.z / den;
    ((x3 / x0).atanh(), rho.asinh())
}

fn from_fermi(t: f64, r: f64, theta: f64) -> Point {
    let (ch, sh) = (r.cosh(), r.sinh());
    let x0 = ch * t.cosh();
    let x = Vec3::new(sh * theta.cos(), sh * theta.sin(), ch * t.sinh());
    x / (1.0 + x0)
}

/// A catenoid asymptotic to a given circle pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CatenoidSolution {
    pub axis: (Point, Point),
    pub boundary: (Circle, Circle),
    pub curve: GeneratingCurve,
    /// d_L of the boundary pair, computed from the circles.
    pub dl: f64,
    pub residual: f64,
    /// Takes `boundary` to the standard position about the z-axis.
    pub to_standard: Mobius,
}

impl CatenoidSolution {
    /// The catenoid in standard position about the z-axis.
    pub fn standard(curve: GeneratingCurve) -> Result<Self, SolveError> {
        let h = curve.half_separation().tanh();
        let c1 = Circle::new(Vec3::e3(), h)?;
        let c2 = Circle::new(-Vec3::e3(), h)?;
        let dl = plane_distance_dl(&c1, &c2)?;
        let residual = mean_curvature_residual(&curve)?;
        Ok(CatenoidSolution {
            axis: (Vec3::e3(), -Vec3::e3()),
            boundary: (c1, c2),
            curve,
            dl,
            residual,
            to_standard: Mobius::identity(),
        })
    }

    /// Move a standard solution onto the pair `(c1, c2)`.
    pub fn placed(self, c1: &Circle, c2: &Circle) -> Result<Self, SolveError> {
        let m = standard_position(c1, c2)?;
        Ok(CatenoidSolution {
            axis: coaxial_axis(c1, c2)?,
            boundary: (*c1, *c2),
            dl: plane_distance_dl(c1, c2)?,
            to_standard: m,
            ..self
        })
    }

    pub fn solid(&self) -> SolidCatenoid<'_> {
        SolidCatenoid { solution: self, from_standard: self.to_standard.inverse() }
    }
}

/// The region bounded by a catenoid on the side of its axis.
#[derive(Clone, Debug)]
pub struct SolidCatenoid<'a> {
    pub solution: &'a CatenoidSolution,
    from_standard: Mobius,
}

impl SolidCatenoid<'_> {
    /// Membership for a point of the open ball.
    pub fn contains(&self, p: Point) -> bool {
        let q = self.solution.to_standard.apply_ball(p);
        let (t, r) = fermi(q);
        let big_t = self.solution.curve.half_separation();
        if t.abs() >= big_t {
            return true;
        }
        match self.solution.curve.t_at(r) {
            None => true,
            Some(tc) => t.abs() > tc,
        }
    }

    /// Membership for a point at infinity: inside either boundary disk.
    pub fn contains_at_infinity(&self, p: Point) -> bool {
        let (c1, c2) = &self.solution.boundary;
        c1.disk_contains(p) || c2.disk_contains(p)
    }

    /// The geodesic axis as a polyline in the closed ball, endpoints included.
    pub fn axis_chord(&self, n: usize) -> Vec<Point> {
        let n = n.max(2);
        let mut out = vec![self.solution.axis.0];
        // Standard axis t -> (0, 0, tanh(t/2)) in the ball.
        let span = 2.0 * self.solution.curve.half_separation() + 30.0;
        for i in 1..n - 1 {
            let t = span * (0.5 - i as f64 / (n - 1) as f64);
            let q = Vec3::new(0.0, 0.0, (t / 2.0).tanh());
            out.push(self.from_standard.apply_ball(q));
        }
        out.push(self.solution.axis.1);
        out
    }

    /// Points of the catenoid surface: `n_profile` along the generating curve
    /// times `n_theta` around the axis.
    pub fn surface_points(&self, n_profile: usize, n_theta: usize) -> Vec<Point> {
        let s = &self.solution.curve.samples;
        let n_profile = n_profile.max(2);
        let mut out = Vec::with_capacity(n_profile * n_theta);
        for i in 0..n_profile {
            let idx = i * (s.len() - 1) / (n_profile - 1);
            let [t, r] = s[idx];
            for j in 0..n_theta {
                let theta = TAU * j as f64 / n_theta as f64;
                out.push(self.from_standard.apply_ball(from_fermi(t, r, theta)));
            }
        }
        out
    }
}

/// Threshold data plus curve parameters; the entry point for solving by distance.
#[derive(Clone, Debug)]
pub struct CatenoidSolver {
    pub params: CurveParams,
    pub thresholds: ThresholdEstimates,
    d_max: f64,
}

impl CatenoidSolver {
    pub fn new(params: CurveParams, tol: f64) -> Result<Self, SolveError> {
        let thresholds = thresholds(tol, &params)?;
        let d_max = thresholds.d0;
        Ok(CatenoidSolver { params, thresholds, d_max })
    }

    /// Bisection in log(a) for d(a) = d on a monotone bracket.
    fn root(&self, d: f64, mut lo: f64, mut hi: f64, increasing: bool) -> Result<f64, SolveError> {
        for _ in 0..200 {
            if hi - lo <= 1e-14 * hi {
                break;
            }
            let mid = (lo * hi).sqrt();
            let above = plane_separation(mid, &self.params)? > d;
            if above == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }

    /// Neck parameters with d(a) = d: zero, one or two values.
    pub fn necks_for_distance(&self, d: f64) -> Result<Vec<f64>, SolveError> {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(SolveError::InvalidArgument(format!("distance must be non-negative, got {d}")));
        }
        if d == 0.0 || d > self.d_max {
            return Ok(vec![]);
        }
        let a_star = self.thresholds.a_star;
        let mut out = vec![];
        let mut lo = 1e-6;
        while lo > 1e-12 && plane_separation(lo, &self.params)? >= d {
            lo *= 1e-3;
        }
        if plane_separation(lo, &self.params)? < d {
            out.push(self.root(d, lo, a_star, true)?);
        }
        let mut hi = 2.0 * a_star;
        while hi < 40.0 && plane_separation(hi, &self.params)? >= d {
            hi *= 2.0;
        }
        if plane_separation(hi, &self.params)? < d {
            out.push(self.root(d, a_star, hi, false)?);
        }
        if out.len() == 2 && (out[1] - out[0]).abs() <= 1e-12 * out[1] {
            out.pop();
        }
        Ok(out)
    }

    /// All catenoids in standard position with plane separation `d`, each
    /// checked against the residual bound.
    pub fn for_distance(&self, d: f64) -> Result<Vec<CatenoidSolution>, SolveError> {
        let mut out = vec![];
        for a in self.necks_for_distance(d)? {
            let curve = solve_generating_curve(a, &self.params)?;
            let sol = CatenoidSolution::standard(curve)?;
            if !(sol.residual < RESIDUAL_TOL) {
                return Err(SolveError::Residual(sol.residual));
            }
            out.push(sol);
        }
        Ok(out)
    }

    /// All catenoids asymptotic to the given pair.
    pub fn for_pair(&self, c1: &Circle, c2: &Circle) -> Result<Vec<CatenoidSolution>, SolveError> {
        let d = plane_distance_dl(c1, c2)?;
        self.for_distance(d)?.into_iter().map(|s| s.placed(c1, c2)).collect()
    }

    /// The solution whose extrapolated area deficit is negative, if any, with
    /// that deficit.
    pub fn least_area_for_pair(&self, c1: &Circle, c2: &Circle) -> Result<Option<(CatenoidSolution, f64)>, SolveError> {
        for s in self.for_pair(c1, c2)? {
            let def = area_deficit(s.curve.neck_parameter, &self.params)?;
            if def < 0.0 {
                return Ok(Some((s, def)));
            }
        }
        Ok(None)
    }
}

/// Convenience wrapper with default parameters.
pub fn catenoids_for_distance(d: f64) -> Result<Vec<CatenoidSolution>, SolveError> {
    CatenoidSolver::new(CurveParams::default(), 1e-8)?.for_distance(d)
}
