//! Exact reference fields: Mie series for a perfectly conducting sphere
//! and the image-theory solution for a conducting hemispherical bump on a
//! conducting half-space.

use crate::error::{Error, Result};
use crate::media::{EMField, LayeredConfig, Polarization};
use crate::scalar::{expi, imag_unit, real, Real, C};
use crate::vec3::{CVec3, Vec3};

/// Spherical Bessel functions `j_n(x)` and `y_n(x)` for `n = 0..=n_max`.
/// `j_n` uses downward (Miller) recurrence normalised by `j_0` or `j_1`;
/// `y_n` uses the upward recurrence.
pub fn spherical_bessel<T: Real>(n_max: usize, x: T) -> (Vec<T>, Vec<T>) {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let start = n_max + 20 + x.to_f64_lossy().ceil() as usize;
    let mut j = vec![T::zero(); start + 2];
    j[start] = T::lit(1e-30);
    let big = T::lit(1e30);
    for n in (1..=start).rev() {
        j[n - 1] = T::from_usize_lossy(2 * n + 1) / x * j[n] - j[n + 1];
        if j[n - 1].abs() > big {
            for v in &mut j[n - 1..] {
                *v /= big;
            }
        }
    }
    let scale = if j0.abs() >= j1.abs() { j0 / j[0] } else { j1 / j[1] };
    j.truncate(n_max + 1);
    for v in &mut j {
        *v *= scale;
    }
    let mut y = vec![T::zero(); n_max + 1];
    y[0] = -c / x;
    if n_max >= 1 {
        y[1] = -c / (x * x) - s / x;
    }
    for n in 1..n_max {
        y[n + 1] = T::from_usize_lossy(2 * n + 1) / x * y[n] - y[n - 1];
    }
    (j, y)
}

/// Angular functions `pi_n` and `tau_n` of `cos(theta)` for `n = 0..=n_max`.
fn angular<T: Real>(n_max: usize, mu: T) -> (Vec<T>, Vec<T>) {
    let mut pi = vec![T::zero(); n_max + 1];
    let mut tau = vec![T::zero(); n_max + 1];
    if n_max >= 1 {
        pi[1] = T::one();
    }
    for n in 2..=n_max {
        let nf = T::from_usize_lossy(n);
        pi[n] = (T::lit(2.0) * nf - T::one()) / (nf - T::one()) * mu * pi[n - 1]
            - nf / (nf - T::one()) * pi[n - 2];
    }
    for n in 1..=n_max {
        let nf = T::from_usize_lossy(n);
        tau[n] = nf * mu * pi[n] - (nf + T::one()) * pi[n - 1];
    }
    (pi, tau)
}

/// Scattering coefficients of a perfectly conducting sphere.
#[derive(Debug, Clone)]
pub struct MieSeries<T> {
    pub radius: T,
    pub k: T,
    pub omega: T,
    pub mu: T,
    pub order: usize,
    a: Vec<C<T>>,
    b: Vec<C<T>>,
}

impl<T: Real> MieSeries<T> {
    /// Default truncation `kR + 10 + 4 (kR)^(1/3)`.
    pub fn default_order(kr: T) -> usize {
        let x = kr.to_f64_lossy();
        (x + 10.0 + 4.0 * x.cbrt()).ceil() as usize
    }

    /// Sphere of radius `radius` in a lossless medium with wavenumber `k`,
    /// angular frequency `omega` and permeability `mu`.
    pub fn new(radius: T, k: T, omega: T, mu: T, order: Option<usize>) -> Result<Self> {
        if !(radius > T::zero() && k > T::zero() && omega > T::zero() && mu > T::zero()) {
            return Err(Error::Parameter(
                "Mie series needs positive radius, wavenumber, frequency and permeability".into(),
            ));
        }
        let x = k * radius;
        let order = order.unwrap_or_else(|| Self::default_order(x)).max(1);
        let (j, y) = spherical_bessel(order, x);
        let mut a = vec![C::new(T::zero(), T::zero()); order + 1];
        let mut b = a.clone();
        for n in 1..=order {
            let nf = T::from_usize_lossy(n);
            let h = C::new(j[n], y[n]);
            let hm = C::new(j[n - 1], y[n - 1]);
            // [x z_n]' = x z_{n-1} - n z_n
            let dj = x * j[n - 1] - nf * j[n];
            let dh = hm * x - h * nf;
            a[n] = real(dj) / dh;
            b[n] = real(j[n]) / h;
        }
        let peak = a.iter().chain(&b).map(|v| v.norm()).fold(T::zero(), T::max);
        let last = a[order].norm().max(b[order].norm());
        if !(last <= T::lit(1e-13) * peak) {
            return Err(Error::Truncation {
                order,
                last_term: last.to_f64_lossy(),
            });
        }
        Ok(Self {
            radius,
            k,
            omega,
            mu,
            order,
            a,
            b,
        })
    }

    /// Builds the series for the upper medium of a configuration.
    pub fn for_config(radius: T, config: &LayeredConfig<T>, order: Option<usize>) -> Result<Self> {
        let k = config.k1();
        let mu = config.upper.mu;
        if k.im != T::zero() || mu.im != T::zero() {
            return Err(Error::Parameter("Mie reference needs a lossless upper medium".into()));
        }
        Self::new(radius, k.re, config.omega, mu.re, order)
    }

    /// Scattered field for the incident wave `x exp(i k z)` (unit amplitude).
    fn canonical(&self, p: Vec3<T>) -> EMField<T> {
        let r = p.norm();
        let rho = self.k * r;
        let cos_t = (p.z / r).max(-T::one()).min(T::one());
        let sin_t = p.rho() / r;
        let phi = p.y.atan2(p.x);
        let (sp, cp) = phi.sin_cos();
        let l = self.order;
        let (j, y) = spherical_bessel(l, rho);
        let (pi, tau) = angular(l, cos_t);
        let i = imag_unit::<T>();
        let zero = C::new(T::zero(), T::zero());
        let (mut er, mut et, mut ep) = (zero, zero, zero);
        let (mut hr, mut ht, mut hp) = (zero, zero, zero);
        let mut i_n = C::new(T::one(), T::zero());
        for n in 1..=l {
            i_n *= i;
            let nf = T::from_usize_lossy(n);
            let nn1 = nf * (nf + T::one());
            let en = i_n * ((T::lit(2.0) * nf + T::one()) / nn1);
            let z = C::new(j[n], y[n]);
            let d = C::new(j[n - 1], y[n - 1]) - z * (nf / rho);
            let (ia, ib) = (i * self.a[n] * en, i * self.b[n] * en);
            let (a, b) = (self.a[n] * en, self.b[n] * en);
            let radial = z * (nn1 * sin_t * pi[n] / rho);
            er += ia * radial * cp;
            et += (ia * d * tau[n] - b * z * pi[n]) * cp;
            ep += (-ia * d * pi[n] + b * z * tau[n]) * sp;
            hr += ib * radial * sp;
            ht += (ib * d * tau[n] - a * z * pi[n]) * sp;
            hp += (ib * d * pi[n] - a * z * tau[n]) * cp;
        }
        let rhat = Vec3::new(sin_t * cp, sin_t * sp, cos_t);
        let that = Vec3::new(cos_t * cp, cos_t * sp, -sin_t);
        let phat = Vec3::new(-sp, cp, T::zero());
        let sph = |r: C<T>, t: C<T>, p: C<T>| rhat.scale_c(r) + that.scale_c(t) + phat.scale_c(p);
        let hs = self.k / (self.omega * self.mu);
        EMField::new(sph(er, et, ep), sph(hr, ht, hp).scale_re(hs))
    }

    /// Field scattered by the sphere (centred at the origin) from the
    /// planewave `E0 exp(i k d . r)` with real unit direction `d` and
    /// complex amplitude `E0` orthogonal to `d`.
    pub fn scattered(&self, direction: Vec3<T>, amplitude: CVec3<T>, p: Vec3<T>) -> Result<EMField<T>> {
        let r = p.norm();
        if !(r >= self.radius * (T::one() - T::lit(1e-9))) {
            return Err(Error::Domain(format!(
                "point at distance {r} lies inside the sphere of radius {}",
                self.radius
            )));
        }
        let d = direction.normalized();
        let helper = if d.x.abs() < T::lit(0.9) { Vec3::unit_x() } else { Vec3::unit_y() };
        let e1 = (helper - d * helper.dot(d)).normalized();
        let e2 = d.cross(e1);
        let mut out = EMField::zero();
        for e in [e1, e2] {
            let amp = amplitude.dot_real(e);
            if amp.norm() == T::zero() {
                continue;
            }
            let ey = d.cross(e);
            let local = Vec3::new(p.dot(e), p.dot(ey), p.dot(d));
            let f = self.canonical(local);
            let back = |v: CVec3<T>| e.scale_c(v.x) + ey.scale_c(v.y) + d.scale_c(v.z);
            out += EMField::new(back(f.e), back(f.h)).scale(amp);
        }
        Ok(out)
    }

    /// Planewave `E0 exp(i k d . r)` with its magnetic field.
    pub fn planewave(&self, direction: Vec3<T>, amplitude: CVec3<T>, p: Vec3<T>) -> EMField<T> {
        let d = direction.normalized();
        let ph = expi(real(self.k * d.dot(p)));
        let e = amplitude.scale(ph);
        let h = e.rcross(d).scale_re(self.k / (self.omega * self.mu));
        EMField::new(e, h)
    }
}

/// Exact total field above a conducting plane with a conducting
/// hemispherical bump of the sphere's radius centred at the origin.
#[derive(Debug, Clone)]
pub struct BumpReference<T> {
    pub mie: MieSeries<T>,
    pub grazing_angle: T,
    pub polarization: Polarization,
    pub amplitude: C<T>,
}

impl<T: Real> BumpReference<T> {
    pub fn new(mie: MieSeries<T>, grazing_angle: T, polarization: Polarization, amplitude: C<T>) -> Self {
        Self {
            mie,
            grazing_angle,
            polarization,
            amplitude,
        }
    }

    /// Direction and polarisation of `E_alpha`: wave `exp(i k (y cos a - z sin a))`.
    fn wave(&self, alpha: T) -> (Vec3<T>, Vec3<T>) {
        let (s, c) = alpha.sin_cos();
        let d = Vec3::new(T::zero(), c, -s);
        let e = match self.polarization {
            Polarization::Te => Vec3::unit_x(),
            Polarization::Tm => Vec3::new(T::zero(), s, c),
        };
        (d, e)
    }

    /// Incident wave and its image (`-E_{-a}` for TE, `E_{-a}` for TM).
    fn drives(&self) -> [(Vec3<T>, CVec3<T>); 2] {
        let (d, e) = self.wave(self.grazing_angle);
        let (di, ei) = self.wave(-self.grazing_angle);
        let sign = match self.polarization {
            Polarization::Te => -T::one(),
            Polarization::Tm => T::one(),
        };
        [
            (d, e.scale_c(self.amplitude)),
            (di, ei.scale_c(self.amplitude * sign)),
        ]
    }

    /// Total field at `p` (`z >= 0`, outside the bump).
    pub fn total(&self, p: Vec3<T>) -> Result<EMField<T>> {
        let tol = T::lit(1e-9) * self.mie.radius;
        if p.z < -tol {
            return Err(Error::Domain(format!("point z = {} lies below the conducting plane", p.z)));
        }
        let mut f = EMField::zero();
        for (d, e) in self.drives() {
            f += self.mie.planewave(d, e, p);
            f += self.mie.scattered(d, e, p)?;
        }
        Ok(f)
    }

    /// Incident plus image planewaves (the field without the bump).
    pub fn background(&self, p: Vec3<T>) -> EMField<T> {
        let mut f = EMField::zero();
        for (d, e) in self.drives() {
            f += self.mie.planewave(d, e, p);
        }
        f
    }
}

/// `n` nearly uniform points on the unit sphere (Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3<f64>> {
    let g = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = g * i as f64;
            Vec3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

/// Outcome of one oracle self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.value < self.threshold
    }
}

/// Boundary-condition and truncation checks of the reference solutions:
/// tangential `E` on a sphere with `kR = 2 pi` and 40 terms, tangential
/// `E` of the bump solution on the plane and on the hemisphere, and the
/// change between 40 and 60 terms.
pub fn self_checks() -> Result<Vec<OracleCheck>> {
    use std::f64::consts::PI;
    let k = 2.0 * PI;
    let mie = MieSeries::new(1.0, k, k, 1.0, Some(40))?;
    let sphere = fibonacci_sphere(200);

    let d = Vec3::new(0.3, -0.5, 0.8).normalized();
    let e = CVec3::new(C::new(0.0, 0.0), C::new(0.8, 0.0), C::new(0.5, 0.0));
    let e = e - d.scale_c(e.dot_real(d));
    let mut mie_bc = 0.0f64;
    for &p in &sphere {
        let f = mie.planewave(d, e, p) + mie.scattered(d, e, p)?;
        mie_bc = mie_bc.max(f.e.rcross(p).norm() / e.norm());
    }

    let cfg = LayeredConfig::pec(k, crate::media::Material::real(1.0, 1.0));
    let bump_mie = MieSeries::for_config(1.0, &cfg, Some(40))?;
    let (mut plane, mut hemi) = (0.0f64, 0.0f64);
    for pol in [Polarization::Te, Polarization::Tm] {
        let bump = BumpReference::new(bump_mie.clone(), PI / 32.0, pol, C::new(1.0, 0.0));
        for &p in sphere.iter().filter(|p| p.z >= 0.0) {
            hemi = hemi.max(bump.total(p)?.e.rcross(p).norm());
        }
        for i in 0..100 {
            let t = i as f64 * 0.37;
            let r = 1.0 + 0.05 * i as f64;
            let e = bump.total(Vec3::new(r * t.cos(), r * t.sin(), 0.0))?.e;
            plane = plane.max(e.x.norm()).max(e.y.norm());
        }
    }

    let hi = MieSeries::new(1.0, k, k, 1.0, Some(60))?;
    let e0 = Vec3::unit_x().to_complex();
    let mut trunc = 0.0f64;
    for &p in &sphere[..20] {
        let p = p * 1.7;
        let a = mie.scattered(Vec3::unit_z(), e0, p)?;
        let b = hi.scattered(Vec3::unit_z(), e0, p)?;
        trunc = trunc.max((a.e - b.e).norm() / b.e.norm());
    }

    Ok(vec![
        OracleCheck { name: "mie boundary residual", value: mie_bc, threshold: 1e-8 },
        OracleCheck { name: "bump residual on plane", value: plane, threshold: 1e-8 },
        OracleCheck { name: "bump residual on hemisphere", value: hemi, threshold: 1e-8 },
        OracleCheck { name: "series truncation 40 vs 60", value: trunc, threshold: 1e-12 },
    ])
}
