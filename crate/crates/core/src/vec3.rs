//! Minimal 3-vector and 3x3 matrix types used for points on the unit sphere.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    from = "[T; 3]",
    into = "[T; 3]",
    bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de> + Copy")
)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Copy> From<[T; 3]> for Vec3<T> {
    fn from(a: [T; 3]) -> Self {
        Vec3 { x: a[0], y: a[1], z: a[2] }
    }
}

impl<T: Copy> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Float> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zero() -> Self {
        Vec3::new(T::zero(), T::zero(), T::zero())
    }

    pub fn e1() -> Self {
        Vec3::new(T::one(), T::zero(), T::zero())
    }

    pub fn e2() -> Self {
        Vec3::new(T::zero(), T::one(), T::zero())
    }

    pub fn e3() -> Self {
        Vec3::new(T::zero(), T::zero(), T::one())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sqr(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    /// Great-circle angle between two directions, accurate near 0 and pi.
    pub fn angle_to(self, o: Self) -> T {
        self.cross(o).norm().atan2(self.dot(o))
    }

    /// Any unit vector orthogonal to `self`.
    pub fn any_orthogonal(self) -> Self {
        let a = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            Vec3::e1()
        } else if self.y.abs() <= self.z.abs() {
            Vec3::e2()
        } else {
            Vec3::e3()
        };
        self.cross(a).normalized()
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

impl<T: Float> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Float> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Float> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Float> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Float> Div<T> for Vec3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major 3x3 matrix, used for rotations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T> {
    pub rows: [Vec3<T>; 3],
}

impl<T: Float> Mat3<T> {
    pub fn identity() -> Self {
        Mat3 { rows: [Vec3::e1(), Vec3::e2(), Vec3::e3()] }
    }

    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>, r2: Vec3<T>) -> Self {
        Mat3 { rows: [r0, r1, r2] }
    }

    /// Rotation by `angle` about the unit `axis` (right-handed).
    pub fn rotation(axis: Vec3<T>, angle: T) -> Self {
        let k = axis.normalized();
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        Mat3::from_rows(
            Vec3::new(c + k.x * k.x * t, k.x * k.y * t - k.z * s, k.x * k.z * t + k.y * s),
            Vec3::new(k.y * k.x * t + k.z * s, c + k.y * k.y * t, k.y * k.z * t - k.x * s),
            Vec3::new(k.z * k.x * t - k.y * s, k.z * k.y * t + k.x * s, c + k.z * k.z * t),
        )
    }

    /// A rotation taking the unit vector `from` to the unit vector `to`.
    pub fn rotation_between(from: Vec3<T>, to: Vec3<T>) -> Self {
        let axis = from.cross(to);
        let s = axis.norm();
        let c = from.dot(to);
        if s <= T::epsilon() {
            if c > T::zero() {
                return Mat3::identity();
            }
            return Mat3::rotation(from.any_orthogonal(), T::from(std::f64::consts::PI).unwrap());
        }
        Mat3::rotation(axis / s, s.atan2(c))
    }

    pub fn apply(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    pub fn transpose(&self) -> Self {
        let r = &self.rows;
        Mat3::from_rows(
            Vec3::new(r[0].x, r[1].x, r[2].x),
            Vec3::new(r[0].y, r[1].y, r[2].y),
            Vec3::new(r[0].z, r[1].z, r[2].z),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let ot = o.transpose();
        let row = |r: Vec3<T>| Vec3::new(r.dot(ot.rows[0]), r.dot(ot.rows[1]), r.dot(ot.rows[2]));
        Mat3::from_rows(row(self.rows[0]), row(self.rows[1]), row(self.rows[2]))
    }
}
