//! Moebius and anti-Moebius maps of the Riemann sphere.
//!
//! The chart is stereographic projection from the north pole `e3`:
//! `w = (x + i y) / (1 - z)`, with `e3` sent to the point at infinity.

use crate::error::GeomError;
use crate::vec3::Vec3;
use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// A point of the extended complex plane. Infinity is an explicit variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtComplex<T> {
    Finite(Complex<T>),
    Infinity,
}

impl<T: Float> ExtComplex<T> {
    pub fn new(re: T, im: T) -> Self {
        ExtComplex::Finite(Complex::new(re, im))
    }

    pub fn real(x: T) -> Self {
        ExtComplex::Finite(Complex::new(x, T::zero()))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    pub fn finite(&self) -> Option<Complex<T>> {
        match self {
            ExtComplex::Finite(z) => Some(*z),
            ExtComplex::Infinity => None,
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            ExtComplex::Finite(z) => ExtComplex::Finite(z.conj()),
            ExtComplex::Infinity => ExtComplex::Infinity,
        }
    }

    /// Chordal distance on the unit sphere between the two preimages.
    pub fn chordal_distance(&self, other: &Self) -> T {
        (project_to_sphere(*self) - project_to_sphere(*other)).norm()
    }
}

impl<T: Float> From<Complex<T>> for ExtComplex<T> {
    fn from(z: Complex<T>) -> Self {
        ExtComplex::Finite(z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    pub fn then(self, other: Orientation) -> Orientation {
        if self == other {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }
}

/// `z -> (a z + b)/(c z + d)`, or the same applied to `conj(z)` when reversing.
/// The matrix is kept at unit determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMap<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    pub c: Complex<T>,
    pub d: Complex<T>,
    pub orientation: Orientation,
}

fn c<T: Float>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

impl<T: Float> MobiusMap<T> {
    pub fn new(
        a: Complex<T>,
        b: Complex<T>,
        c: Complex<T>,
        d: Complex<T>,
        orientation: Orientation,
    ) -> Result<Self, GeomError> {
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        let tiny = T::epsilon() * T::from(16.0).unwrap();
        if !(det.norm() > tiny * scale * scale) || !det.norm().is_finite() {
            return Err(GeomError::DegenerateMatrix(det.norm().to_f64().unwrap_or(f64::NAN)));
        }
        Ok(MobiusMap { a, b, c, d, orientation }.normalized())
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        MobiusMap { a: c(o, z), b: c(z, z), c: c(z, z), d: c(o, z), orientation: Orientation::Preserving }
    }

    /// Complex conjugation `z -> conj(z)`.
    pub fn conjugation() -> Self {
        MobiusMap { orientation: Orientation::Reversing, ..Self::identity() }
    }

    pub fn determinant(&self) -> Complex<T> {
        self.a * self.d - self.b * self.c
    }

    fn normalized(self) -> Self {
        let s = self.determinant().sqrt();
        MobiusMap { a: self.a / s, b: self.b / s, c: self.c / s, d: self.d / s, ..self }
    }

    pub fn is_reversing(&self) -> bool {
        self.orientation == Orientation::Reversing
    }

    pub fn apply(&self, z: ExtComplex<T>) -> ExtComplex<T> {
        let z = if self.is_reversing() { z.conj() } else { z };
        match z {
            ExtComplex::Infinity => {
                if self.c.norm() == T::zero() {
                    ExtComplex::Infinity
                } else {
                    ExtComplex::Finite(self.a / self.c)
                }
            }
            ExtComplex::Finite(z) => {
                let num = self.a * z + self.b;
                let den = self.c * z + self.d;
                if den.norm() <= T::epsilon() * num.norm() || den.norm() == T::zero() {
                    ExtComplex::Infinity
                } else {
                    ExtComplex::Finite(num / den)
                }
            }
        }
    }

    /// The map `m1 ∘ m2`, i.e. `z -> m1(m2(z))`.
    pub fn compose(&self, other: &Self) -> Self {
        let (a2, b2, c2, d2) = if self.is_reversing() {
            (other.a.conj(), other.b.conj(), other.c.conj(), other.d.conj())
        } else {
            (other.a, other.b, other.c, other.d)
        };
        MobiusMap {
            a: self.a * a2 + self.b * c2,
            b: self.a * b2 + self.b * d2,
            c: self.c * a2 + self.d * c2,
            d: self.c * b2 + self.d * d2,
            orientation: self.orientation.then(other.orientation),
        }
        .normalized()
    }

    pub fn inverse(&self) -> Self {
        let inv = MobiusMap { a: self.d, b: -self.b, c: -self.c, d: self.a, orientation: self.orientation };
        if self.is_reversing() {
            MobiusMap { a: inv.a.conj(), b: inv.b.conj(), c: inv.c.conj(), d: inv.d.conj(), ..inv }
        } else {
            inv
        }
        .normalized()
    }

    /// Trace of the unit-determinant matrix (defined up to sign).
    pub fn trace(&self) -> Complex<T> {
        self.a + self.d
    }

    /// Max-entry distance of the normalized matrix to `+I` or `-I`, whichever is
    /// closer. Infinite for reversing maps, which are never the identity.
    pub fn distance_to_identity(&self) -> T {
        if self.is_reversing() {
            return T::infinity();
        }
        let one = c(T::one(), T::zero());
        let dist = |s: Complex<T>| {
            (self.a - one * s)
                .norm()
                .max(self.b.norm())
                .max(self.c.norm())
                .max((self.d - one * s).norm())
        };
        dist(one).min(dist(-one))
    }

    pub fn apply_sphere(&self, p: Vec3<T>) -> Vec3<T> {
        project_to_sphere(self.apply(project_from_sphere(p)))
    }

    /// Poincare extension to the open unit ball, acting on the hyperboloid
    /// model through `H -> M H M*` (with `H` conjugated first when reversing).
    pub fn apply_ball(&self, p: Vec3<T>) -> Vec3<T> {
        let one = T::one();
        let two = one + one;
        let q = p.norm_sqr();
        let den = one - q;
        let (x0, x1, x2, x3) = ((one + q) / den, two * p.x / den, two * p.y / den, two * p.z / den);
        let h00 = c(x0 + x3, T::zero());
        let h01 = c(x1, x2);
        let h11 = c(x0 - x3, T::zero());
        let h01 = if self.is_reversing() { h01.conj() } else { h01 };
        let h10 = h01.conj();
        // N = M H
        let n00 = self.a * h00 + self.b * h10;
        let n01 = self.a * h01 + self.b * h11;
        let n10 = self.c * h00 + self.d * h10;
        let n11 = self.c * h01 + self.d * h11;
        // K = N M*
        let k00 = n00 * self.a.conj() + n01 * self.b.conj();
        let k01 = n00 * self.c.conj() + n01 * self.d.conj();
        let k11 = n10 * self.c.conj() + n11 * self.d.conj();
        let y0 = (k00.re + k11.re) / two;
        let y3 = (k00.re - k11.re) / two;
        let s = one + y0;
        Vec3::new(k01.re / s, k01.im / s, y3 / s)
    }

    /// Rotation of the sphere by `angle` about `axis`, as a unit-determinant map.
    pub fn rotation(axis: Vec3<T>, angle: T) -> Self {
        let n = axis.normalized();
        let half = angle / T::from(2.0).unwrap();
        let (s, co) = half.sin_cos();
        // Unit quaternion (co, s n) acting in the chart from the north pole.
        let a = c(co, s * n.z);
        let b = c(-s * n.y, s * n.x);
        let cc = c(s * n.y, s * n.x);
        let d = c(co, -s * n.z);
        MobiusMap { a, b, c: cc, d, orientation: Orientation::Preserving }.normalized()
    }

    pub fn translation(t: Complex<T>) -> Self {
        let (o, z) = (T::one(), T::zero());
        MobiusMap { a: c(o, z), b: t, c: c(z, z), d: c(o, z), orientation: Orientation::Preserving }
    }

    pub fn scaling(k: Complex<T>) -> Result<Self, GeomError> {
        let (o, z) = (T::one(), T::zero());
        MobiusMap::new(k, c(z, z), c(z, z), c(o, z), Orientation::Preserving)
    }
}

/// Stereographic projection from `e3`. The north pole maps to infinity.
pub fn project_from_sphere<T: Float>(p: Vec3<T>) -> ExtComplex<T> {
    let den = T::one() - p.z;
    if den <= T::zero() {
        return ExtComplex::Infinity;
    }
    // For points near the north pole use 1 - z = (x^2 + y^2) / (1 + z).
    let r2 = p.x * p.x + p.y * p.y;
    let den = if p.z > T::zero() { r2 / (T::one() + p.z) } else { den };
    if den == T::zero() {
        return ExtComplex::Infinity;
    }
    ExtComplex::Finite(Complex::new(p.x / den, p.y / den))
}

/// Inverse stereographic projection onto the unit sphere.
pub fn project_to_sphere<T: Float>(w: ExtComplex<T>) -> Vec3<T> {
    match w {
        ExtComplex::Infinity => Vec3::e3(),
        ExtComplex::Finite(w) => {
            let two = T::from(2.0).unwrap();
            let r2 = w.norm_sqr();
            if r2 > T::one() {
                // Scale by 1/|w|^2 to stay finite for huge w.
                let inv = T::one() / r2;
                let den = T::one() + inv;
                Vec3::new(two * w.re * inv / den, two * w.im * inv / den, (T::one() - inv) / den)
            } else {
                let den = T::one() + r2;
                Vec3::new(two * w.re / den, two * w.im / den, (r2 - T::one()) / den)
            }
        }
    }
}

/// Cross-ratio `[z1, z2, z3, z4] = (z1 - z3)(z2 - z4) / ((z1 - z2)(z3 - z4))`.
///
/// With this ordering, the geodesics with endpoints `{u1, u2}` and `{v1, v2}`
/// placed on a line as `u1, v2, v1, u2` satisfy
/// `tanh^2(d / 2) = 1 / [u1, v2, v1, u2]`; for `-1, -1/3, 1/3, 1` the value is 4.
/// Factors involving a single point at infinity cancel in pairs.
pub fn cross_ratio<T: Float>(
    z1: ExtComplex<T>,
    z2: ExtComplex<T>,
    z3: ExtComplex<T>,
    z4: ExtComplex<T>,
) -> Result<Complex<T>, GeomError> {
    let pts = [z1, z2, z3, z4];
    if pts.iter().filter(|z| z.is_infinite()).count() > 1 {
        return Err(GeomError::CoincidentPoints);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            if let (ExtComplex::Finite(a), ExtComplex::Finite(b)) = (pts[i], pts[j]) {
                if a == b {
                    return Err(GeomError::CoincidentPoints);
                }
            }
        }
    }
    // Differences, with 1 substituted for every factor containing infinity:
    // each infinite point appears once in the numerator and once in the
    // denominator, so those factors cancel.
    let diff = |i: usize, j: usize| -> Complex<T> {
        match (pts[i], pts[j]) {
            (ExtComplex::Finite(a), ExtComplex::Finite(b)) => a - b,
            _ => Complex::new(T::one(), T::zero()),
        }
    };
    // Sign bookkeeping for the infinite factors: (inf - x)/(inf - y) -> 1 and
    // (x - inf)/(inf - y) -> -1.
    let mut sign = T::one();
    if let Some(k) = pts.iter().position(|z| z.is_infinite()) {
        // numerator factors: (1,3), (2,4); denominator: (1,2), (3,4) (1-based)
        let num_first = matches!(k, 0 | 1);
        let den_first = matches!(k, 0 | 2);
        if num_first != den_first {
            sign = -sign;
        }
    }
    let num = diff(0, 2) * diff(1, 3);
    let den = diff(0, 1) * diff(2, 3);
    if den.norm() == T::zero() {
        return Err(GeomError::CoincidentPoints);
    }
    Ok(num / den * sign)
}
