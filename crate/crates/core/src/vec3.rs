//! Small fixed-size 3-vectors, real and complex.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use crate::scalar::{Real, C};
use num_complex::Complex;

/// Point or direction in R^3.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline(always)]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline(always)]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]))
    }

    pub fn to_f64(self) -> [f64; 3] {
        [
            self.x.to_f64_lossy(),
            self.y.to_f64_lossy(),
            self.z.to_f64_lossy(),
        ]
    }

    #[inline(always)]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline(always)]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline(always)]
    pub fn norm_sqr(self) -> T {
        self.dot(self)
    }

    #[inline(always)]
    pub fn norm(self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    #[inline(always)]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// Complex vector `s * self`.
    #[inline(always)]
    pub fn scale_c(self, s: C<T>) -> CVec3<T> {
        CVec3::new(s * self.x, s * self.y, s * self.z)
    }

    pub fn to_complex(self) -> CVec3<T> {
        CVec3::new(
            Complex::new(self.x, T::zero()),
            Complex::new(self.y, T::zero()),
            Complex::new(self.z, T::zero()),
        )
    }

    pub fn rho(self) -> T {
        self.x.hypot(self.y)
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline(always)]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline(always)]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline(always)]
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Complex 3-vector (field phasor).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CVec3<T> {
    pub x: C<T>,
    pub y: C<T>,
    pub z: C<T>,
}

impl<T: Real> CVec3<T> {
    #[inline(always)]
    pub const fn new(x: C<T>, y: C<T>, z: C<T>) -> Self {
        Self { x, y, z }
    }

    #[inline(always)]
    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, z, z)
    }

    pub fn components(&self) -> [C<T>; 3] {
        [self.x, self.y, self.z]
    }

    /// Bilinear (non-conjugated) dot product.
    #[inline(always)]
    pub fn dot(self, o: Self) -> C<T> {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline(always)]
    pub fn dot_real(self, o: Vec3<T>) -> C<T> {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// `self x o` for a real right operand.
    #[inline(always)]
    pub fn cross_real(self, o: Vec3<T>) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// `r x self` for a real left operand.
    #[inline(always)]
    pub fn rcross(self, r: Vec3<T>) -> Self {
        Self::new(
            self.z * r.y - self.y * r.z,
            self.x * r.z - self.z * r.x,
            self.y * r.x - self.x * r.y,
        )
    }

    #[inline(always)]
    pub fn scale(self, s: C<T>) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    #[inline(always)]
    pub fn scale_re(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn norm_sqr(self) -> T {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    /// Hermitian norm.
    pub fn norm(self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn conj(self) -> Self {
        Self::new(self.x.conj(), self.y.conj(), self.z.conj())
    }

    pub fn re(self) -> Vec3<T> {
        Vec3::new(self.x.re, self.y.re, self.z.re)
    }

    pub fn is_finite(self) -> bool {
        [self.x, self.y, self.z]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl<T: Real> Add for CVec3<T> {
    type Output = Self;
    #[inline(always)]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for CVec3<T> {
    type Output = Self;
    #[inline(always)]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for CVec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<C<T>> for CVec3<T> {
    type Output = Self;
    #[inline(always)]
    fn mul(self, s: C<T>) -> Self {
        self.scale(s)
    }
}

impl<T: Real> Div<C<T>> for CVec3<T> {
    type Output = Self;
    fn div(self, s: C<T>) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> AddAssign for CVec3<T> {
    #[inline(always)]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl<T: Real> SubAssign for CVec3<T> {
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl<T> Index<usize> for CVec3<T> {
    type Output = C<T>;
    fn index(&self, i: usize) -> &C<T> {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("CVec3 index {i} out of range"),
        }
    }
}
