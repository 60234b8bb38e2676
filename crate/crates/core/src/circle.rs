//! Round circles on the sphere, the distances rho and d_L, and predicates on
//! circle families.

use crate::error::GeomError;
use crate::moebius::{project_from_sphere, project_to_sphere, ExtComplex, MobiusMap, Orientation};
use crate::vec3::{Mat3, Vec3};
use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Circles closer than this in rho are treated as tangent.
pub const TANGENCY_TOL: f64 = 1e-9;

/// The circle `{x : n.x = h}` with designated disk `{x : n.x > h}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de> + Copy"))]
pub struct SphereCircle<T> {
    pub normal: Vec3<T>,
    pub offset: T,
}

/// Hermitian form `[[A, B], [conj(B), D]]` of a circle in the chart; the disk
/// is where `A |w|^2 + 2 Re(conj(B) w) + D > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hermitian<T> {
    pub a: T,
    pub b: Complex<T>,
    pub d: T,
}

/// A circle in the chart: either a Euclidean circle or a line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChartCircle<T> {
    /// Disk side is the interior when `interior` is true.
    Circle { center: Complex<T>, radius: T, interior: bool },
    /// The line `Re(conj(normal) w) = c`, disk side where `Re(conj(normal) w) > c`.
    Line { normal: Complex<T>, c: T },
}

fn f<T: Float>(x: f64) -> T {
    T::from(x).unwrap()
}

impl<T: Float> SphereCircle<T> {
    pub fn new(normal: Vec3<T>, offset: T) -> Result<Self, GeomError> {
        let n = normal.norm();
        if !(n > T::zero()) || !n.is_finite() || !offset.is_finite() {
            return Err(GeomError::InvalidCircle("normal must be a finite nonzero vector".into()));
        }
        if offset.abs() >= T::one() {
            return Err(GeomError::InvalidCircle(format!(
                "offset {} outside (-1, 1)",
                offset.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(SphereCircle { normal: normal / n, offset })
    }

    /// Cap of angular radius `alpha` about the unit vector `center`.
    pub fn cap(center: Vec3<T>, alpha: T) -> Result<Self, GeomError> {
        Self::new(center, alpha.cos())
    }

    pub fn center(&self) -> Vec3<T> {
        self.normal
    }

    /// Angular radius of the designated disk.
    pub fn angular_radius(&self) -> T {
        self.offset.max(-T::one()).min(T::one()).acos()
    }

    /// Angular radius at most pi/2, the standing assumption for catenoid
    /// boundaries and covering disks.
    pub fn is_injective(&self) -> bool {
        self.offset >= T::zero()
    }

    /// Same point set, opposite disk.
    pub fn complement(&self) -> Self {
        SphereCircle { normal: -self.normal, offset: -self.offset }
    }

    /// Strict containment `n.p > h`.
    pub fn disk_contains(&self, p: Vec3<T>) -> bool {
        self.normal.dot(p) > self.offset
    }

    /// Closed containment with slack, `n.p >= h - tol`.
    pub fn closed_disk_contains(&self, p: Vec3<T>, tol: T) -> bool {
        self.normal.dot(p) >= self.offset - tol
    }

    /// Signed angular distance from `p` to the circle; negative inside the disk.
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        self.normal.angle_to(p) - self.angular_radius()
    }

    /// A point on the circle at parameter `t` (radians).
    pub fn point_at(&self, t: T) -> Vec3<T> {
        let u = self.normal.any_orthogonal();
        let v = self.normal.cross(u);
        let h = self.offset;
        let s = (T::one() - h * h).max(T::zero()).sqrt();
        self.normal * h + (u * t.cos() + v * t.sin()) * s
    }

    pub fn sample(&self, n: usize) -> Vec<Vec3<T>> {
        let tau = f::<T>(std::f64::consts::TAU);
        (0..n).map(|k| self.point_at(tau * T::from(k).unwrap() / T::from(n).unwrap())).collect()
    }

    pub fn rotated(&self, r: &Mat3<T>) -> Self {
        SphereCircle { normal: r.apply(self.normal), offset: self.offset }
    }

    pub fn hermitian(&self) -> Hermitian<T> {
        let n = self.normal;
        let h = self.offset;
        Hermitian { a: n.z - h, b: Complex::new(n.x, n.y), d: -(n.z + h) }
    }

    pub fn from_hermitian(m: Hermitian<T>) -> Result<Self, GeomError> {
        let two = f::<T>(2.0);
        let nz = (m.a - m.d) / two;
        let h = -(m.a + m.d) / two;
        let n = Vec3::new(m.b.re, m.b.im, nz);
        let s = n.norm();
        if !(s > T::zero()) {
            return Err(GeomError::InvalidCircle("degenerate hermitian form".into()));
        }
        let off = h / s;
        if off.abs() >= T::one() {
            return Err(GeomError::DegenerateCircle((T::one() - off * off).to_f64().unwrap_or(0.0)));
        }
        Ok(SphereCircle { normal: n / s, offset: off })
    }

    /// Disk `|w - center| < radius` in the chart.
    pub fn from_chart_disk(center: Complex<T>, radius: T) -> Result<Self, GeomError> {
        let m = Hermitian { a: -T::one(), b: center, d: radius * radius - center.norm_sqr() };
        Self::from_hermitian(m)
    }

    /// Exterior `|w - center| > radius` (contains infinity) in the chart.
    pub fn from_chart_exterior(center: Complex<T>, radius: T) -> Result<Self, GeomError> {
        Ok(Self::from_chart_disk(center, radius)?.complement())
    }

    pub fn chart(&self) -> ChartCircle<T> {
        let m = self.hermitian();
        let scale = T::one() + m.b.norm();
        if m.a.abs() <= T::epsilon() * f::<T>(8.0) * scale {
            // A|w|^2 vanishes: 2 Re(conj(B) w) + D > 0.
            return ChartCircle::Line { normal: m.b, c: -m.d / f::<T>(2.0) };
        }
        let center = -m.b / m.a;
        let r2 = (m.b.norm_sqr() - m.a * m.d) / (m.a * m.a);
        ChartCircle::Circle { center, radius: r2.max(T::zero()).sqrt(), interior: m.a < T::zero() }
    }

    /// Image of the circle and its disk under a (anti-)Moebius map, computed exactly.
    pub fn transform(&self, m: &MobiusMap<T>) -> Result<Self, GeomError> {
        let h = self.hermitian();
        let h = if m.is_reversing() { Hermitian { b: h.b.conj(), ..h } } else { h };
        // H' = N^* H N with N = M^{-1} = [[d, -b], [-c, a]] (unit determinant).
        let (p, q, r, s) = (m.d, -m.b, -m.c, m.a);
        let bb = h.b;
        let bc = h.b.conj();
        let a = Complex::new(h.a, T::zero());
        let d = Complex::new(h.d, T::zero());
        // H N
        let hn00 = a * p + bb * r;
        let hn01 = a * q + bb * s;
        let hn10 = bc * p + d * r;
        let hn11 = bc * q + d * s;
        // N^* (H N)
        let na = p.conj() * hn00 + r.conj() * hn10;
        let nb = p.conj() * hn01 + r.conj() * hn11;
        let nd = q.conj() * hn01 + s.conj() * hn11;
        Self::from_hermitian(Hermitian { a: na.re, b: nb, d: nd.re })
    }

    /// Signed angular separation `angle(c1, c2) - alpha1 - alpha2` without
    /// any validity check.
    pub fn raw_rho(&self, other: &Self) -> T {
        self.normal.angle_to(other.normal) - self.angular_radius() - other.angular_radius()
    }

    /// Cosine of the intersection angle, `(n1.n2 - h1 h2) / sqrt((1-h1^2)(1-h2^2))`.
    /// Magnitude above 1 means the circles are disjoint.
    pub fn inversive_product(&self, other: &Self) -> T {
        let h1 = self.offset;
        let h2 = other.offset;
        (self.normal.dot(other.normal) - h1 * h2)
            / ((T::one() - h1 * h1) * (T::one() - h2 * h2)).sqrt()
    }

    /// True if the two circles, as point sets, do not meet.
    pub fn circles_disjoint(&self, other: &Self) -> bool {
        self.inversive_product(other).abs() > T::one()
    }

    /// Closed disks are disjoint, with the given angular slack.
    pub fn closed_disks_disjoint(&self, other: &Self, tol: T) -> bool {
        self.raw_rho(other) > tol
    }
}

/// rho: the minimal great-circle distance between two circles whose closed
/// disks are disjoint.
pub fn spherical_distance_rho<T: Float>(c1: &SphereCircle<T>, c2: &SphereCircle<T>) -> Result<T, GeomError> {
    let rho = c1.raw_rho(c2);
    let tol = f::<T>(TANGENCY_TOL);
    if rho < -tol {
        return Err(GeomError::Overlapping(rho.to_f64().unwrap_or(f64::NAN)));
    }
    if rho.abs() < tol {
        return Ok(T::zero());
    }
    Ok(rho)
}

/// d_L: hyperbolic distance between the geodesic planes spanning two circles
/// with disjoint closed disks.
///
/// Center 1 is rotated to the north pole and center 2 into the xz-plane, so
/// both circles are symmetric about the real axis of the chart. Circle 1
/// becomes `|w| = R` with the pole inside its disk and circle 2 meets the real
/// axis at `v2 < v1` inside `(-R, R)`. Then `tanh^2(d/2) = 1/[u1, v2, v1, u2]`
/// with `u1 = -R`, `u2 = R`.
pub fn plane_distance_dl<T: Float>(c1: &SphereCircle<T>, c2: &SphereCircle<T>) -> Result<T, GeomError> {
    let rho = spherical_distance_rho(c1, c2)?;
    if rho == T::zero() {
        return Ok(T::zero());
    }
    // First rotation: center 1 to e3.
    let r1 = Mat3::rotation_between(c1.normal, Vec3::e3());
    let m2 = r1.apply(c2.normal);
    // Second rotation: about e3, bringing center 2 into the xz-plane (x <= 0
    // keeps the circle's real-axis trace ordered). The azimuth is taken as 0
    // when center 2 is antipodal to center 1 to machine precision.
    let rxy = (m2.x * m2.x + m2.y * m2.y).sqrt();
    let (cos_t, sin_t) = if rxy <= f::<T>(1e-15) { (T::one(), T::zero()) } else { (m2.x / rxy, m2.y / rxy) };
    let n2 = Vec3::new(cos_t * m2.x + sin_t * m2.y, T::zero(), m2.z);
    let n2 = Vec3::new(n2.x, n2.y, n2.z).normalized();
    let h1 = c1.offset;
    // Circle 1: horizontal at height h1 around e3; chart radius sqrt((1+h1)/(1-h1)).
    let big_r = ((T::one() + h1) / (T::one() - h1)).sqrt();
    // Circle 2 meets the xz great circle at the two points at angle alpha2 from
    // its center along that great circle.
    let theta2 = n2.x.atan2(n2.z);
    let a2 = c2.angular_radius();
    let trace = |t: T| -> T {
        let p = Vec3::new(t.sin(), T::zero(), t.cos());
        match project_from_sphere(p) {
            ExtComplex::Finite(w) => w.re,
            ExtComplex::Infinity => T::infinity(),
        }
    };
    let p = trace(theta2 - a2);
    let q = trace(theta2 + a2);
    let (v2, v1) = if p < q { (p, q) } else { (q, p) };
    let (u1, u2) = (-big_r, big_r);
    // 1/[u1, v2, v1, u2] = (u1 - v2)(v1 - u2) / ((u1 - v1)(v2 - u2))
    let inv = (u1 - v2) * (v1 - u2) / ((u1 - v1) * (v2 - u2));
    if !(inv > T::zero()) {
        return Err(GeomError::Overlapping(rho.to_f64().unwrap_or(f64::NAN)));
    }
    let t = inv.sqrt().min(T::one());
    Ok(f::<T>(2.0) * t.atanh())
}

/// Closed-form d_L from the inversive product; used as an independent check.
pub fn plane_distance_inversive<T: Float>(c1: &SphereCircle<T>, c2: &SphereCircle<T>) -> T {
    let k = -c1.inversive_product(c2);
    k.max(T::one()).acosh()
}

/// Angle in (0, pi) between two transversally intersecting circles.
pub fn intersection_angle<T: Float>(c1: &SphereCircle<T>, c2: &SphereCircle<T>) -> Result<T, GeomError> {
    let k = c1.inversive_product(c2);
    if !(k.abs() < T::one() - f::<T>(1e-12)) {
        return Err(GeomError::NotTransverse(k.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(k.acos())
}

/// The two intersection points of transversally intersecting circles, ordered
/// so that the first has positive triple product with the two centers.
pub fn intersection_points<T: Float>(
    c1: &SphereCircle<T>,
    c2: &SphereCircle<T>,
) -> Result<(Vec3<T>, Vec3<T>), GeomError> {
    intersection_angle(c1, c2)?;
    let (n1, n2) = (c1.normal, c2.normal);
    let (h1, h2) = (c1.offset, c2.offset);
    let g = n1.dot(n2);
    let det = T::one() - g * g;
    // x = a n1 + b n2 + t (n1 x n2)
    let a = (h1 - h2 * g) / det;
    let b = (h2 - h1 * g) / det;
    let base = n1 * a + n2 * b;
    let w = n1.cross(n2);
    let t = ((T::one() - base.norm_sqr()) / w.norm_sqr()).max(T::zero()).sqrt();
    Ok((base + w * t, base - w * t))
}

/// Inversion in a circle: the reversing map fixing it pointwise and swapping
/// its disk with the complementary disk.
pub fn inversion_in_circle<T: Float>(c: &SphereCircle<T>) -> Result<MobiusMap<T>, GeomError> {
    let one_minus = T::one() - c.offset * c.offset;
    if one_minus < f::<T>(1e-14) {
        return Err(GeomError::DegenerateCircle(one_minus.to_f64().unwrap_or(0.0)));
    }
    let m = c.hermitian();
    MobiusMap::new(
        -m.b,
        Complex::new(-m.d, T::zero()),
        Complex::new(m.a, T::zero()),
        m.b.conj(),
        Orientation::Reversing,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GoodPosition {
    pub ok: bool,
    /// First violating pair `(i, j)`: circles meet, or disk `i` contains circle `j`.
    pub violation: Option<(usize, usize)>,
}

/// Good position: pairwise disjoint circles, and no designated disk contains
/// another circle of the family.
pub fn good_position<T: Float>(curves: &[SphereCircle<T>]) -> GoodPosition {
    for i in 0..curves.len() {
        for j in 0..curves.len() {
            if i == j {
                continue;
            }
            let (ci, cj) = (&curves[i], &curves[j]);
            if i < j && !ci.circles_disjoint(cj) {
                return GoodPosition { ok: false, violation: Some((i, j)) };
            }
            if ci.disk_contains(cj.point_at(T::zero())) {
                return GoodPosition { ok: false, violation: Some((i, j)) };
            }
        }
    }
    GoodPosition { ok: true, violation: None }
}

/// A point of the sphere as a chart value, for convenience.
pub fn to_chart<T: Float>(p: Vec3<T>) -> ExtComplex<T> {
    project_from_sphere(p)
}

pub fn from_chart<T: Float>(w: ExtComplex<T>) -> Vec3<T> {
    project_to_sphere(w)
}
