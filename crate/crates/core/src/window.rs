//! Slow-rise smooth window used to truncate the unbounded interface.
//!
//! The window equals one on an inner plateau, vanishes identically outside
//! its outer radius, and is infinitely smooth in between. Kernels are
//! weighted by the window evaluated at the *source* point.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Default relative plateau radius.
pub const DEFAULT_C: f64 = 0.7;

const B_EPS: f64 = 1e-12;

/// Smooth step: 1 for `|s| <= s0`, 0 for `|s| >= s1`.
pub fn eta<T: Real>(s: T, s0: T, s1: T) -> Result<T> {
    if !(s0 >= T::zero() && s0 < s1) {
        return Err(Error::Parameter(format!(
            "window requires 0 <= s0 < s1 (got s0={s0}, s1={s1})"
        )));
    }
    Ok(eta_unchecked(s, s0, s1))
}

#[inline]
pub(crate) fn eta_unchecked<T: Real>(s: T, s0: T, s1: T) -> T {
    let a = s.abs();
    if a <= s0 {
        return T::one();
    }
    if a >= s1 {
        return T::zero();
    }
    let b = (a - s0) / (s1 - s0);
    if b <= T::lit(B_EPS) {
        return T::one();
    }
    if b >= T::one() - T::lit(B_EPS) {
        return T::zero();
    }
    let two = T::lit(2.0);
    (two * (-b.recip()).exp() / (b - T::one())).exp()
}

/// Derivative of [`eta`] with respect to `s`.
pub(crate) fn eta_derivative<T: Real>(s: T, s0: T, s1: T) -> T {
    let a = s.abs();
    if a <= s0 || a >= s1 {
        return T::zero();
    }
    let width = s1 - s0;
    let b = (a - s0) / width;
    if b <= T::lit(B_EPS) || b >= T::one() - T::lit(B_EPS) {
        return T::zero();
    }
    let two = T::lit(2.0);
    let e = (-b.recip()).exp();
    let bm1 = b - T::one();
    let g = two * e / bm1;
    // d/db [2 e^{-1/b} / (b-1)]
    let dg = two * e * (T::one() / (b * b * bm1) - T::one() / (bm1 * bm1));
    let d = g.exp() * dg / width;
    if s < T::zero() {
        -d
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowShape<T> {
    /// `eta(rho, cA, A)` with `rho` the distance to the z axis.
    Radial,
    /// `eta(x, c Ax, Ax) * eta(y, c Ay, Ay)`.
    Rectangular { ax: T, ay: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowParams<T> {
    /// Outer radius; the window vanishes beyond it.
    pub a: T,
    /// Relative plateau radius in (0, 1).
    pub c: T,
    pub shape: WindowShape<T>,
}

impl<T: Real> WindowParams<T> {
    pub fn radial(a: T, c: T) -> Result<Self> {
        let w = Self {
            a,
            c,
            shape: WindowShape::Radial,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn rectangular(ax: T, ay: T, c: T) -> Result<Self> {
        let w = Self {
            a: ax.max(ay),
            c,
            shape: WindowShape::Rectangular { ax, ay },
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero() && self.c < T::one()) {
            return Err(Error::Parameter(format!(
                "window.c must lie in (0, 1), got {}",
                self.c
            )));
        }
        if !(self.a > T::zero()) {
            return Err(Error::Parameter(format!(
                "window.A must be positive, got {}",
                self.a
            )));
        }
        if let WindowShape::Rectangular { ax, ay } = self.shape {
            if !(ax > T::zero() && ay > T::zero()) {
                return Err(Error::Parameter(
                    "rectangular window half-widths must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Radius of the plateau `{w = 1}` (radial windows).
    pub fn plateau_radius(&self) -> T {
        self.c * self.a
    }

    #[inline]
    pub fn value(&self, p: Vec3<T>) -> T {
        match self.shape {
            WindowShape::Radial => eta_unchecked(p.rho(), self.c * self.a, self.a),
            WindowShape::Rectangular { ax, ay } => {
                eta_unchecked(p.x, self.c * ax, ax) * eta_unchecked(p.y, self.c * ay, ay)
            }
        }
    }

    /// Gradient of the window (always horizontal).
    pub fn gradient(&self, p: Vec3<T>) -> Vec3<T> {
        match self.shape {
            WindowShape::Radial => {
                let rho = p.rho();
                if rho <= T::zero() {
                    return Vec3::zero();
                }
                let d = eta_derivative(rho, self.c * self.a, self.a);
                Vec3::new(d * p.x / rho, d * p.y / rho, T::zero())
            }
            WindowShape::Rectangular { ax, ay } => {
                let (s0x, s0y) = (self.c * ax, self.c * ay);
                Vec3::new(
                    eta_derivative(p.x, s0x, ax) * eta_unchecked(p.y, s0y, ay),
                    eta_unchecked(p.x, s0x, ax) * eta_derivative(p.y, s0y, ay),
                    T::zero(),
                )
            }
        }
    }

    /// True when `p` lies in the plateau where the window is exactly one.
    pub fn in_plateau(&self, p: Vec3<T>) -> bool {
        self.value(p) == T::one()
    }

    /// Heuristic window radius `16 pi max(1/k1, 1/|k2|) + R`.
    pub fn suggested_radius(k1: T, k2_abs: T, perturbation_radius: T) -> T {
        T::lit(16.0) * T::PI() * k1.recip().max(k2_abs.recip()) + perturbation_radius
    }
}

/// Optional window; `None` means no truncation (closed surfaces).
pub type Window<T> = Option<WindowParams<T>>;

#[inline]
pub(crate) fn weight<T: Real>(w: &Window<T>, p: Vec3<T>) -> T {
    match w {
        Some(w) => w.value(p),
        None => T::one(),
    }
}

#[inline]
pub(crate) fn weight_gradient<T: Real>(w: &Window<T>, p: Vec3<T>) -> Vec3<T> {
    match w {
        Some(w) => w.gradient(p),
        None => Vec3::zero(),
    }
}
