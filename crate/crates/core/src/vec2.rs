//! Minimal 2D vector used throughout the simulator.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<S = f64> {
    pub x: S,
    pub y: S,
}

impl<S: Real> Vec2<S> {
    pub fn new(x: S, y: S) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 {
            x: S::zero(),
            y: S::zero(),
        }
    }

    pub fn dot(self, other: Self) -> S {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product (signed parallelogram area).
    pub fn cross(self, other: Self) -> S {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    pub fn norm(self) -> S {
        self.norm_sq().sqrt()
    }

    /// Unit vector, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > S::zero() {
            Some(self / n)
        } else {
            None
        }
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Self {
        Vec2 {
            x: -self.y,
            y: self.x,
        }
    }

    /// Rotate counterclockwise by `angle` radians.
    pub fn rotated(self, angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2 {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    /// Angle in `(-pi, pi]` measured from the positive x-axis.
    pub fn angle(self) -> S {
        self.y.atan2(self.x)
    }

    pub fn from_angle(angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2 { x: c, y: s }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<S: Real> Add for Vec2<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<S: Real> Sub for Vec2<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<S: Real> Neg for Vec2<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<S: Real> Mul<S> for Vec2<S> {
    type Output = Self;
    fn mul(self, s: S) -> Self {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl<S: Real> Div<S> for Vec2<S> {
    type Output = Self;
    fn div(self, s: S) -> Self {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl<S: Real> AddAssign for Vec2<S> {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl<S: Real> SubAssign for Vec2<S> {
    fn sub_assign(&mut self, rhs: Self) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a = Vec2::new(3.0, 4.0);
        assert_eq!(a.norm(), 5.0);
        assert_eq!(a.dot(Vec2::new(1.0, 0.0)), 3.0);
        assert_eq!(a.perp(), Vec2::new(-4.0, 3.0));
        let u = a.normalized().unwrap();
        assert!((u.norm() - 1.0f64).abs() < 1e-15);
        assert!(Vec2::<f64>::zero().normalized().is_none());
    }

    #[test]
    fn rotation() {
        let e = Vec2::new(1.0f64, 0.0);
        let r = e.rotated(std::f64::consts::FRAC_PI_2);
        assert!((r.x).abs() < 1e-15 && (r.y - 1.0).abs() < 1e-15);
        assert!((e.rotated(0.3).angle() - 0.3).abs() < 1e-15);
    }
}
