//! Free-space Helmholtz kernel, its gradient and the bounded gradient
//! difference used by the regularised Müller off-diagonal blocks.

use crate::error::{Error, Result};
use crate::scalar::{expi, imag_unit, real, Real, C};
use crate::vec3::{CVec3, Vec3};

/// Number of series terms in the small-distance form of [`grad_diff`].
const DIFF_TERMS: usize = 6;
/// The series is used for `|k| R` below this value.
const DIFF_SWITCH: f64 = 1e-2;

/// Kernel value and its gradient with respect to the observation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval<T> {
    pub g: C<T>,
    pub grad_g: CVec3<T>,
}

impl<T: Real> KernelEval<T> {
    /// Kernel multiplied by the window value at the source point.
    pub fn windowed(self, w: T) -> Self {
        Self {
            g: self.g * w,
            grad_g: self.grad_g.scale_re(w),
        }
    }
}

fn coincident<T: Real>(r: T) -> Result<()> {
    if r > T::zero() {
        Ok(())
    } else {
        Err(Error::Singularity("coincident source and observation points".into()))
    }
}

/// `G` and the radial derivative factor `phi` with `grad G = phi (r - r')`,
/// for separation `dist > 0`.
#[inline(always)]
pub fn green_radial<T: Real>(k: C<T>, dist: T) -> (C<T>, C<T>) {
    let inv = dist.recip();
    let g = expi(k * dist) * (inv / (T::lit(4.0) * T::PI()));
    let phi = g * (imag_unit::<T>() * k - real(inv)) * inv;
    (g, phi)
}

/// `exp(ikR) / (4 pi R)`.
pub fn greens<T: Real>(k: C<T>, r: Vec3<T>, rp: Vec3<T>) -> Result<C<T>> {
    let dist = (r - rp).norm();
    coincident(dist)?;
    Ok(green_radial(k, dist).0)
}

/// Gradient of [`greens`] with respect to `r`.
pub fn grad_greens<T: Real>(k: C<T>, r: Vec3<T>, rp: Vec3<T>) -> Result<CVec3<T>> {
    let d = r - rp;
    let dist = d.norm();
    coincident(dist)?;
    Ok(d.scale_c(green_radial(k, dist).1))
}

pub fn kernel_eval<T: Real>(k: C<T>, r: Vec3<T>, rp: Vec3<T>) -> Result<KernelEval<T>> {
    let d = r - rp;
    let dist = d.norm();
    coincident(dist)?;
    let (g, phi) = green_radial(k, dist);
    Ok(KernelEval {
        g,
        grad_g: d.scale_c(phi),
    })
}

/// Radial factor of `grad G2 - grad G1` (multiply by `r - r'`), free of
/// cancellation at small distances.
#[inline]
pub fn grad_diff_radial<T: Real>(k1: C<T>, k2: C<T>, dist: T) -> C<T> {
    let kmax = k1.norm().max(k2.norm());
    if kmax * dist <= T::lit(DIFF_SWITCH) {
        // e^{x}(x - 1) = sum_n (n-1)/n! x^n with x = i k R; the n = 0, 1
        // terms are k-independent and cancel.
        let i = imag_unit::<T>();
        let x1 = i * k1 * dist;
        let x2 = i * k2 * dist;
        let (mut p1, mut p2) = (x1 * x1, x2 * x2);
        let mut fact = T::lit(2.0);
        let mut sum = real(T::zero());
        for n in 2..DIFF_TERMS + 2 {
            let c = T::from_usize_lossy(n - 1) / fact;
            sum += (p2 - p1) * c;
            p1 *= x1;
            p2 *= x2;
            fact *= T::from_usize_lossy(n + 1);
        }
        // radial factor is (sum / (4 pi R^2)) / R
        sum / (T::lit(4.0) * T::PI() * dist * dist * dist)
    } else {
        green_radial(k2, dist).1 - green_radial(k1, dist).1
    }
}

/// `grad G_{k2} - grad G_{k1}` (gradient in `r`); bounded as `r -> r'`
/// with limit `-(k2^2 - k1^2) / (8 pi)` times the approach direction.
/// Coincident points return the zero vector.
pub fn grad_diff<T: Real>(k1: C<T>, k2: C<T>, r: Vec3<T>, rp: Vec3<T>) -> CVec3<T> {
    let d = r - rp;
    let dist = d.norm();
    if dist == T::zero() || k1 == k2 {
        return CVec3::zero();
    }
    d.scale_c(grad_diff_radial(k1, k2, dist))
}
