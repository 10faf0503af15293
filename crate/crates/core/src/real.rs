//! Scalar abstraction for the geometric kernel.
//!
//! The collision map is written once over [`Real`] so the same code runs in
//! `f64` for production and in an extended-precision type when a test needs
//! to follow a chaotic orbit further than double precision allows.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// Ordered field with square root, as needed by ray/circle geometry.
pub trait Real:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    /// Largest integer not above `self`.
    fn floor_i64(&self) -> i64;

    fn from_i64(x: i64) -> Self {
        Self::from_f64(x as f64)
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }

    #[inline]
    fn sqrt(&self) -> Self {
        libm::sqrt(*self)
    }

    #[inline]
    fn floor_i64(&self) -> i64 {
        libm::floor(*self) as i64
    }

    #[inline]
    fn abs(&self) -> Self {
        libm::fabs(*self)
    }
}

/// Planar vector over a [`Real`] scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn from_f64(v: [f64; 2]) -> Self {
        Self::new(T::from_f64(v[0]), T::from_f64(v[1]))
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        self.x.clone() * other.x.clone() + self.y.clone() * other.y.clone()
    }

    /// z-component of the planar cross product `self × other`.
    #[inline]
    pub fn cross(&self, other: &Self) -> T {
        self.x.clone() * other.y.clone() - self.y.clone() * other.x.clone()
    }

    #[inline]
    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.x.clone() + other.x.clone(), self.y.clone() + other.y.clone())
    }

    #[inline]
    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.x.clone() - other.x.clone(), self.y.clone() - other.y.clone())
    }

    #[inline]
    pub fn scale(&self, k: &T) -> Self {
        Self::new(self.x.clone() * k.clone(), self.y.clone() * k.clone())
    }

    #[inline]
    pub fn neg(&self) -> Self {
        Self::new(-self.x.clone(), -self.y.clone())
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.x.clone() / n.clone(), self.y.clone() / n)
    }

    /// Mirror image of `self` in the line orthogonal to the unit vector `normal`.
    #[inline]
    pub fn reflect(&self, normal: &Self) -> Self {
        let k = T::from_f64(2.0) * self.dot(normal);
        self.sub(&normal.scale(&k))
    }
}
