//! Small fixed-size 2D vector and tensor types used across the kernels.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// A point or vector in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    #[inline]
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    /// Rotation by -90 degrees: the right-hand normal of a tangent.
    #[inline]
    pub fn rot_cw(self) -> Self {
        Self::new(self.y, -self.x)
    }

    #[inline]
    pub fn to_array(self) -> [T; 2] {
        [self.x, self.y]
    }

    #[inline]
    pub fn max_abs(self) -> T {
        self.x.abs().max(self.y.abs())
    }
}

impl<T: Scalar> From<[T; 2]> for Vec2<T> {
    fn from(a: [T; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl<T: Scalar> Index<usize> for Vec2<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            _ => panic!("Vec2 index {i} out of range"),
        }
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl<T: Scalar> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// Dense 2x2 matrix, row-major: `m[i][j]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    #[inline]
    pub fn new(a00: T, a01: T, a10: T, a11: T) -> Self {
        Self { m: [[a00, a01], [a10, a11]] }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    /// Matrix whose columns are `c0` and `c1`.
    #[inline]
    pub fn from_cols(c0: Vec2<T>, c1: Vec2<T>) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    #[inline]
    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    /// Inverse, or `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() {
            return None;
        }
        let inv = T::one() / d;
        Some(Self::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    #[inline]
    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        r
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        Self::new(self.m[0][0] * s, self.m[0][1] * s, self.m[1][0] * s, self.m[1][1] * s)
    }

    #[inline]
    pub fn add(&self, o: &Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }

    #[inline]
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-T::one()))
    }

    /// Frobenius inner product `A : B`.
    #[inline]
    pub fn ddot(&self, o: &Self) -> T {
        self.m[0][0] * o.m[0][0]
            + self.m[0][1] * o.m[0][1]
            + self.m[1][0] * o.m[1][0]
            + self.m[1][1] * o.m[1][1]
    }

    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |a, &b| a.max(b.abs()))
    }
}

/// Symmetric 2x2 tensor stored as (xx, yy, xy).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymTensor2<T> {
    pub xx: T,
    pub yy: T,
    pub xy: T,
}

impl<T: Scalar> SymTensor2<T> {
    #[inline]
    pub fn new(xx: T, yy: T, xy: T) -> Self {
        Self { xx, yy, xy }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// `sigma · n`
    #[inline]
    pub fn dot(&self, n: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.xx * n.x + self.xy * n.y, self.xy * n.x + self.yy * n.y)
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        Self::new(self.xx * s, self.yy * s, self.xy * s)
    }

    #[inline]
    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }

    /// Symmetric part of a general matrix.
    pub fn sym_of(a: &Mat2<T>) -> Self {
        let half = T::lit(0.5);
        Self::new(a.m[0][0], a.m[1][1], (a.m[0][1] + a.m[1][0]) * half)
    }

    pub fn to_mat(&self) -> Mat2<T> {
        Mat2::new(self.xx, self.xy, self.xy, self.yy)
    }
}
