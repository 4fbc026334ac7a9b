//! Materials, incident fields and the half-space source fields.
//!
//! Time dependence is `exp(-i omega t)`. The upper medium (index 1) fills
//! `z > 0`, the lower medium (index 2) `z < 0`, possibly as a perfect
//! conductor.

use std::ops::{Add, AddAssign, Neg, Sub};

use crate::error::{Error, Result};
use crate::geometry::{Region, TriangleMesh};
use crate::quadrature::TriPoint;
use crate::scalar::{expi, imag_unit, real, sqrt_upper, Real, C};
use crate::vec3::{CVec3, Vec3};

/// Vacuum permittivity (F/m) used when parameters are given in SI units.
pub const EPS0: f64 = 8.854_187_8128e-12;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material<T> {
    pub eps: C<T>,
    pub mu: C<T>,
}

impl<T: Real> Material<T> {
    pub fn new(eps: C<T>, mu: C<T>) -> Self {
        Self { eps, mu }
    }

    pub fn real(eps: T, mu: T) -> Self {
        Self::new(real(eps), real(mu))
    }

    /// `omega sqrt(mu eps)` on the branch with non-negative imaginary part.
    pub fn wavenumber(&self, omega: T) -> C<T> {
        sqrt_upper(self.mu * self.eps * omega * omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowerMedium<T> {
    Material(Material<T>),
    Pec,
}

/// Two half-spaces separated (away from the perturbation) by `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayeredConfig<T> {
    pub omega: T,
    pub upper: Material<T>,
    pub lower: LowerMedium<T>,
}

impl<T: Real> LayeredConfig<T> {
    pub fn new(omega: T, upper: Material<T>, lower: Material<T>) -> Self {
        Self {
            omega,
            upper,
            lower: LowerMedium::Material(lower),
        }
    }

    pub fn pec(omega: T, upper: Material<T>) -> Self {
        Self {
            omega,
            upper,
            lower: LowerMedium::Pec,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > T::zero()) {
            return Err(Error::Parameter(format!("omega must be positive, got {}", self.omega)));
        }
        let check = |m: &Material<T>, name: &str| {
            if m.eps.norm() == T::zero() || m.mu.norm() == T::zero() {
                return Err(Error::Parameter(format!("{name} has zero permittivity or permeability")));
            }
            Ok(())
        };
        check(&self.upper, "upper medium")?;
        if let LowerMedium::Material(m) = &self.lower {
            check(m, "lower medium")?;
        }
        Ok(())
    }

    pub fn is_pec(&self) -> bool {
        matches!(self.lower, LowerMedium::Pec)
    }

    pub fn k1(&self) -> C<T> {
        self.upper.wavenumber(self.omega)
    }

    /// Lower-medium wavenumber (`None` for a perfect conductor).
    pub fn k2(&self) -> Option<C<T>> {
        self.lower_material().map(|m| m.wavenumber(self.omega))
    }

    pub fn lower_material(&self) -> Option<Material<T>> {
        match self.lower {
            LowerMedium::Material(m) => Some(m),
            LowerMedium::Pec => None,
        }
    }

    pub fn material(&self, region: Region) -> Option<Material<T>> {
        match region {
            Region::Upper => Some(self.upper),
            Region::Lower => self.lower_material(),
        }
    }

    /// Upper wavelength `2 pi / Re k1`.
    pub fn wavelength(&self) -> T {
        T::lit(2.0) * T::PI() / self.k1().re
    }
}

/// Electric and magnetic phasors at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EMField<T> {
    pub e: CVec3<T>,
    pub h: CVec3<T>,
}

impl<T: Real> EMField<T> {
    pub fn new(e: CVec3<T>, h: CVec3<T>) -> Self {
        Self { e, h }
    }

    pub fn zero() -> Self {
        Self::new(CVec3::zero(), CVec3::zero())
    }

    pub fn scale(self, s: C<T>) -> Self {
        Self::new(self.e * s, self.h * s)
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.h.is_finite()
    }
}

impl<T: Real> Add for EMField<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.e + o.e, self.h + o.h)
    }
}

impl<T: Real> Sub for EMField<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.e - o.e, self.h - o.h)
    }
}

impl<T: Real> Neg for EMField<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.e, -self.h)
    }
}

impl<T: Real> AddAssign for EMField<T> {
    fn add_assign(&mut self, o: Self) {
        self.e += o.e;
        self.h += o.h;
    }
}

/// Planewave with wavevector `(0, k1 cos a, -k1 sin a)` and polarisation
/// vector `p`; its amplitudes are `E0 = -p_z k1y - p_y k1z` (for `E_x`) and
/// `H0 = k1^2 p_x / (omega mu1)` (for `H_x`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanewaveSpec<T> {
    /// Grazing angle in `(0, pi/2]` measured from the plane.
    pub grazing_angle: T,
    pub polarization: CVec3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    /// Electric field parallel to the plane of the interface (`E = E_x`).
    Te,
    /// Magnetic field parallel to the interface (`H = H_x`).
    Tm,
}

impl<T: Real> PlanewaveSpec<T> {
    /// Unit-amplitude (|E| = 1) wave of the given polarisation.
    pub fn unit(pol: Polarization, grazing_angle: T, config: &LayeredConfig<T>) -> Self {
        let k1 = config.k1();
        let (s, c) = grazing_angle.sin_cos();
        let p = match pol {
            Polarization::Te => CVec3::new(
                real(T::zero()),
                real(-s) / k1,
                real(-c) / k1,
            ),
            Polarization::Tm => CVec3::new(real(T::one()) / k1, real(T::zero()), real(T::zero())),
        };
        Self {
            grazing_angle,
            polarization: p,
        }
    }

    pub fn k1y(&self, config: &LayeredConfig<T>) -> C<T> {
        config.k1() * self.grazing_angle.cos()
    }

    pub fn k1z(&self, config: &LayeredConfig<T>) -> C<T> {
        config.k1() * self.grazing_angle.sin()
    }

    /// Lower-medium normal wavenumber with `Im k2z >= 0`.
    pub fn k2z(&self, config: &LayeredConfig<T>) -> Option<C<T>> {
        let ky = self.k1y(config);
        config.k2().map(|k2| sqrt_upper(k2 * k2 - ky * ky))
    }

    pub fn amplitudes(&self, config: &LayeredConfig<T>) -> (C<T>, C<T>) {
        let p = self.polarization;
        let k1 = config.k1();
        let e0 = -p.z * self.k1y(config) - p.y * self.k1z(config);
        let h0 = k1 * k1 * p.x / (config.upper.mu * config.omega);
        (e0, h0)
    }

    pub fn validate(&self, config: &LayeredConfig<T>) -> Result<()> {
        let a = self.grazing_angle;
        if !(a > T::zero() && a <= T::FRAC_PI_2() + T::lit(1e-12)) {
            return Err(Error::Parameter(format!("grazing angle {a} must lie in (0, pi/2]")));
        }
        let k1 = config.k1();
        if k1.im.abs() > T::lit(1e-12) * k1.norm() {
            return Err(Error::Parameter(
                "planewave incidence requires a lossless upper medium".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelSet<T> {
    pub r_te: C<T>,
    pub r_tm: C<T>,
    pub t_te: C<T>,
    pub t_tm: C<T>,
}

pub fn fresnel<T: Real>(config: &LayeredConfig<T>, spec: &PlanewaveSpec<T>) -> Result<FresnelSet<T>> {
    let lower = match config.lower {
        LowerMedium::Pec => {
            return Ok(FresnelSet {
                r_te: real(-T::one()),
                r_tm: real(T::one()),
                t_te: real(T::zero()),
                t_tm: real(T::zero()),
            })
        }
        LowerMedium::Material(m) => m,
    };
    let (eps1, mu1) = (config.upper.eps, config.upper.mu);
    let (eps2, mu2) = (lower.eps, lower.mu);
    let k1z = spec.k1z(config);
    let k2z = spec.k2z(config).expect("material lower medium");
    let d_te = mu2 * k1z + mu1 * k2z;
    let d_tm = eps2 * k1z + eps1 * k2z;
    let tiny = T::epsilon() * (mu2 * k1z).norm().max((mu1 * k2z).norm());
    let tiny_tm = T::epsilon() * (eps2 * k1z).norm().max((eps1 * k2z).norm());
    if d_te.norm() <= tiny || d_tm.norm() <= tiny_tm {
        return Err(Error::Degenerate("vanishing Fresnel denominator".into()));
    }
    let two = T::lit(2.0);
    Ok(FresnelSet {
        r_te: (mu2 * k1z - mu1 * k2z) / d_te,
        r_tm: (eps2 * k1z - eps1 * k2z) / d_tm,
        t_te: mu2 * k1z * two / d_te,
        t_tm: eps2 * k1z * two / d_tm,
    })
}

/// One `x`-invariant plane-wave term `(E_x, H_x) exp(i(ky y + kz z))`.
struct Term<T> {
    ex: C<T>,
    hx: C<T>,
    ky: C<T>,
    kz: C<T>,
}

fn transverse_field<T: Real>(terms: &[Term<T>], p: Vec3<T>, m: &Material<T>, omega: T) -> EMField<T> {
    let i = imag_unit::<T>();
    let mut ex = real(T::zero());
    let mut hx = real(T::zero());
    let (mut dy_e, mut dz_e, mut dy_h, mut dz_h) = (ex, ex, ex, ex);
    for t in terms {
        let ph = expi(t.ky * p.y + t.kz * p.z);
        let (e, h) = (t.ex * ph, t.hx * ph);
        ex += e;
        hx += h;
        dy_e += i * t.ky * e;
        dz_e += i * t.kz * e;
        dy_h += i * t.ky * h;
        dz_h += i * t.kz * h;
    }
    let iwe = i * m.eps * omega;
    let iwm = i * m.mu * omega;
    EMField::new(
        CVec3::new(ex, -dz_h / iwe, dy_h / iwe),
        CVec3::new(hx, dz_e / iwm, -dy_e / iwm),
    )
}

/// Incident planewave alone.
pub fn incident_planewave<T: Real>(p: Vec3<T>, config: &LayeredConfig<T>, spec: &PlanewaveSpec<T>) -> EMField<T> {
    let (e0, h0) = spec.amplitudes(config);
    let terms = [Term {
        ex: e0,
        hx: h0,
        ky: spec.k1y(config),
        kz: -spec.k1z(config),
    }];
    transverse_field(&terms, p, &config.upper, config.omega)
}

/// Closed-form branch of the flat half-space solution for one side,
/// evaluated at any point (the branches extend analytically across z = 0).
pub fn planewave_branch<T: Real>(
    p: Vec3<T>,
    side: Region,
    config: &LayeredConfig<T>,
    spec: &PlanewaveSpec<T>,
    coeffs: &FresnelSet<T>,
) -> EMField<T> {
    let (e0, h0) = spec.amplitudes(config);
    let k1y = spec.k1y(config);
    let k1z = spec.k1z(config);
    match side {
        Region::Upper => {
            let terms = [
                Term {
                    ex: e0,
                    hx: h0,
                    ky: k1y,
                    kz: -k1z,
                },
                Term {
                    ex: e0 * coeffs.r_te,
                    hx: h0 * coeffs.r_tm,
                    ky: k1y,
                    kz: k1z,
                },
            ];
            transverse_field(&terms, p, &config.upper, config.omega)
        }
        Region::Lower => match config.lower {
            LowerMedium::Pec => EMField::zero(),
            LowerMedium::Material(m) => {
                let k2z = spec.k2z(config).expect("material lower medium");
                let terms = [Term {
                    ex: e0 * coeffs.t_te,
                    hx: h0 * coeffs.t_tm,
                    ky: k1y,
                    kz: -k2z,
                }];
                transverse_field(&terms, p, &m, config.omega)
            }
        },
    }
}

/// Source field of a planewave: reflected plus incident above `z = 0`,
/// transmitted below.
pub fn planewave_source_field<T: Real>(
    p: Vec3<T>,
    config: &LayeredConfig<T>,
    spec: &PlanewaveSpec<T>,
) -> Result<EMField<T>> {
    let coeffs = fresnel(config, spec)?;
    let side = if p.z >= T::zero() { Region::Upper } else { Region::Lower };
    Ok(planewave_branch(p, side, config, spec, &coeffs))
}

/// Electric point dipole `p` at `location` radiating in the medium of
/// `region`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleSpec<T> {
    pub location: Vec3<T>,
    pub polarization: CVec3<T>,
    pub region: Region,
}

/// Free-space dipole field `H = (1/(i omega mu)) grad G x p`,
/// `E = G p + Hess(G) p / k^2`.
pub fn dipole_field<T: Real>(
    p: Vec3<T>,
    dipole: &DipoleSpec<T>,
    host: &Material<T>,
    omega: T,
) -> Result<EMField<T>> {
    let d = p - dipole.location;
    let r = d.norm();
    if r <= T::lit(1e-12) {
        return Err(Error::Singularity("field point coincides with the dipole".into()));
    }
    let k = host.wavenumber(omega);
    let i = imag_unit::<T>();
    let rhat = d / r;
    let g = expi(k * r) / (T::lit(4.0) * T::PI() * r);
    let ikr = i * k / r;
    let inv_r2 = r.powi(2).recip();
    // grad G = g (ik - 1/R) rhat
    let dg = g * (i * k - real(r.recip()));
    let pol = dipole.polarization;
    let grad_cross_p = pol.rcross(rhat).scale(dg);
    let h = grad_cross_p / (i * host.mu * omega);
    let rr = pol.dot_real(rhat);
    let c_rr = g * (real(T::lit(3.0) * inv_r2) - ikr * T::lit(3.0) - k * k);
    let c_i = g * (ikr - real(inv_r2));
    let hess_p = (rhat.scale_c(rr * c_rr)) + pol.scale(c_i);
    let e = pol.scale(g) + hess_p.scale(real(T::one()) / (k * k));
    Ok(EMField::new(e, h))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Excitation<T> {
    Planewave(PlanewaveSpec<T>),
    Dipoles(Vec<DipoleSpec<T>>),
}

impl<T: Real> Excitation<T> {
    pub fn validate(&self, config: &LayeredConfig<T>) -> Result<()> {
        match self {
            Excitation::Planewave(s) => s.validate(config),
            Excitation::Dipoles(list) => {
                if list.is_empty() {
                    return Err(Error::Parameter("dipole list is empty".into()));
                }
                for d in list {
                    if config.material(d.region).is_none() {
                        return Err(Error::Parameter(
                            "dipole hosted inside the perfect conductor".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Evaluates source fields for a fixed configuration and excitation.
#[derive(Debug, Clone)]
pub struct SourceField<T> {
    config: LayeredConfig<T>,
    excitation: Excitation<T>,
    coeffs: Option<FresnelSet<T>>,
}

impl<T: Real> SourceField<T> {
    pub fn new(config: &LayeredConfig<T>, excitation: &Excitation<T>) -> Result<Self> {
        config.validate()?;
        excitation.validate(config)?;
        let coeffs = match excitation {
            Excitation::Planewave(s) => Some(fresnel(config, s)?),
            Excitation::Dipoles(_) => None,
        };
        Ok(Self {
            config: *config,
            excitation: excitation.clone(),
            coeffs,
        })
    }

    pub fn config(&self) -> &LayeredConfig<T> {
        &self.config
    }

    pub fn excitation(&self) -> &Excitation<T> {
        &self.excitation
    }

    /// Source field of the medium occupying `region`, evaluated at `p`.
    pub fn field(&self, p: Vec3<T>, region: Region) -> Result<EMField<T>> {
        match &self.excitation {
            Excitation::Planewave(s) => Ok(planewave_branch(
                p,
                region,
                &self.config,
                s,
                self.coeffs.as_ref().expect("planewave coefficients"),
            )),
            Excitation::Dipoles(list) => {
                let mut f = EMField::zero();
                for d in list.iter().filter(|d| d.region == region) {
                    let host = self.config.material(region).expect("validated host");
                    f += dipole_field(p, d, &host, self.config.omega)?;
                }
                Ok(f)
            }
        }
    }

    /// Trace currents `M = n x (E_up - E_low)`, `J = n x (H_up - H_low)`.
    pub fn traces(&self, p: Vec3<T>, n: Vec3<T>) -> Result<(CVec3<T>, CVec3<T>)> {
        let up = self.field(p, Region::Upper)?;
        let low = self.field(p, Region::Lower)?;
        let de = up.e - low.e;
        let dh = up.h - low.h;
        Ok((de.rcross(n), dh.rcross(n)))
    }
}

/// Trace currents sampled at the points of `rule` on every triangle.
#[derive(Debug, Clone)]
pub struct SourceTraces<T> {
    /// `m[t][q]`: magnetic trace at point `q` of triangle `t`.
    pub m: Vec<Vec<CVec3<T>>>,
    pub j: Vec<Vec<CVec3<T>>>,
}

pub fn source_currents<T: Real>(
    mesh: &TriangleMesh<T>,
    rule: &[TriPoint<T>],
    source: &SourceField<T>,
) -> Result<SourceTraces<T>> {
    let mut m = Vec::with_capacity(mesh.num_triangles());
    let mut j = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let corners = mesh.corners(t);
        let n = mesh.normal(t);
        let mut mt = Vec::with_capacity(rule.len());
        let mut jt = Vec::with_capacity(rule.len());
        for q in rule {
            let (a, b) = source.traces(q.map(&corners), n)?;
            mt.push(a);
            jt.push(b);
        }
        m.push(mt);
        j.push(jt);
    }
    Ok(SourceTraces { m, j })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k2_ratio_sq: f64) -> LayeredConfig<f64> {
        LayeredConfig::new(1.0, Material::real(1.0, 1.0), Material::real(k2_ratio_sq, 1.0))
    }

    fn curl<F: Fn(Vec3<f64>) -> CVec3<f64>>(f: F, p: Vec3<f64>, h: f64) -> CVec3<f64> {
        // fourth-order central differences
        let d = |axis: usize| {
            let e = match axis {
                0 => Vec3::unit_x(),
                1 => Vec3::unit_y(),
                _ => Vec3::unit_z(),
            } * h;
            let c1 = f(p + e) - f(p - e);
            let c2 = f(p + e * 2.0) - f(p - e * 2.0);
            (c1.scale_re(8.0) - c2).scale_re(1.0 / (12.0 * h))
        };
        let (dx, dy, dz) = (d(0), d(1), d(2));
        CVec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    }

    #[test]
    fn matched_media_fresnel() {
        let c = cfg(1.0);
        let s = PlanewaveSpec::unit(Polarization::Te, 0.7, &c);
        let f = fresnel(&c, &s).unwrap();
        assert!(f.r_te.norm() < 1e-15 && f.r_tm.norm() < 1e-15);
        assert!((f.t_te - 1.0).norm() < 1e-15 && (f.t_tm - 1.0).norm() < 1e-15);
    }

    #[test]
    fn normal_incidence_values() {
        let c = cfg(2.0);
        let s = PlanewaveSpec::unit(Polarization::Te, std::f64::consts::FRAC_PI_2, &c);
        let f = fresnel(&c, &s).unwrap();
        assert!((f.r_te.re + 0.171573).abs() < 1e-6);
        assert!((f.t_te.re - 0.828427).abs() < 1e-6);
        assert!((f.r_tm.re - 0.171573).abs() < 1e-6);
        assert!((f.t_tm.re - 1.171573).abs() < 1e-6);
    }

    #[test]
    fn pec_coefficients() {
        let c = LayeredConfig::pec(1.0, Material::real(1.0, 1.0));
        let s = PlanewaveSpec::unit(Polarization::Tm, 0.3, &c);
        let f = fresnel(&c, &s).unwrap();
        assert_eq!(f.r_te, real(-1.0));
        assert_eq!(f.r_tm, real(1.0));
    }

    #[test]
    fn unit_planewaves_have_unit_amplitude() {
        let c = cfg(2.0);
        for pol in [Polarization::Te, Polarization::Tm] {
            let s = PlanewaveSpec::unit(pol, 0.4, &c);
            let f = incident_planewave(Vec3::new(0.3, -0.2, 0.9), &c, &s);
            assert!((f.e.norm() - 1.0).abs() < 1e-12, "{pol:?}");
            // E, H and k mutually orthogonal
            let k = Vec3::new(0.0, 0.4f64.cos(), -0.4f64.sin());
            assert!(f.e.dot_real(k).norm() < 1e-12);
            assert!(f.h.dot_real(k).norm() < 1e-12);
        }
    }

    #[test]
    fn pec_tangential_field_vanishes() {
        let c = LayeredConfig::pec(1.0, Material::real(1.0, 1.0));
        for pol in [Polarization::Te, Polarization::Tm] {
            let s = PlanewaveSpec::unit(pol, 0.5, &c);
            let f = planewave_source_field(Vec3::new(0.2, 1.3, 0.0), &c, &s).unwrap();
            assert!(f.e.x.norm() < 1e-12 && f.e.y.norm() < 1e-12);
        }
    }

    #[test]
    fn tangential_continuity_across_interface() {
        let c = cfg(2.0);
        let lambda = c.wavelength();
        for pol in [Polarization::Te, Polarization::Tm] {
            let s = PlanewaveSpec::unit(pol, std::f64::consts::PI / 32.0, &c);
            let up = planewave_source_field(Vec3::new(0.1, 0.4, 1e-8 * lambda), &c, &s).unwrap();
            let dn = planewave_source_field(Vec3::new(0.1, 0.4, -1e-8 * lambda), &c, &s).unwrap();
            let scale = up.e.norm().max(up.h.norm());
            for (a, b) in [(up.e.x, dn.e.x), (up.e.y, dn.e.y), (up.h.x, dn.h.x), (up.h.y, dn.h.y)] {
                assert!((a - b).norm() < 1e-6 * scale, "{pol:?}");
            }
        }
    }

    #[test]
    fn source_fields_satisfy_maxwell() {
        let c = LayeredConfig::new(
            2.0,
            Material::real(1.0, 1.0),
            Material::new(C::new(2.5, 0.3), real(1.2)),
        );
        let k = c.k1().re;
        let h = 1e-3 / k;
        for pol in [Polarization::Te, Polarization::Tm] {
            let s = PlanewaveSpec::unit(pol, 0.6, &c);
            for (p, m) in [
                (Vec3::new(0.3, 0.2, 0.7), c.upper),
                (Vec3::new(-0.4, 0.1, -0.5), c.lower_material().unwrap()),
            ] {
                let f = |q| planewave_source_field(q, &c, &s).unwrap();
                let fe = f(p);
                let ce = curl(|q| f(q).e, p, h);
                let ch = curl(|q| f(q).h, p, h);
                let iw = imag_unit::<f64>() * c.omega;
                let r1 = (ce - fe.h.scale(iw * m.mu)).norm() / (fe.h.scale(iw * m.mu)).norm();
                let r2 = (ch + fe.e.scale(iw * m.eps)).norm() / (fe.e.scale(iw * m.eps)).norm();
                assert!(r1 < 1e-6 && r2 < 1e-6, "{pol:?} {r1} {r2}");
            }
        }
    }

    #[test]
    fn total_internal_reflection_branch() {
        // light incident from the denser medium at grazing angle
        let c = LayeredConfig::new(1.0, Material::real(1.96, 1.0), Material::real(1.0, 1.0));
        let s = PlanewaveSpec::unit(Polarization::Te, std::f64::consts::PI / 5.0, &c);
        let k2z = s.k2z(&c).unwrap();
        assert!(k2z.im > 0.0);
        let near = planewave_source_field(Vec3::new(0.0, 0.0, -0.1), &c, &s).unwrap();
        let far = planewave_source_field(Vec3::new(0.0, 0.0, -10.0), &c, &s).unwrap();
        assert!(far.e.norm() < 1e-2 * near.e.norm());
    }

    #[test]
    fn dipole_satisfies_faraday() {
        let m = Material::real(1.0, 1.0);
        let d = DipoleSpec {
            location: Vec3::new(0.1, -0.2, 0.3),
            polarization: CVec3::new(real(0.3), C::new(-0.5, 0.2), real(0.8)),
            region: Region::Upper,
        };
        let omega = 2.0;
        let k = 2.0;
        let p = Vec3::new(0.9, 0.4, -0.6);
        let f = dipole_field(p, &d, &m, omega).unwrap();
        let ce = curl(|q| dipole_field(q, &d, &m, omega).unwrap().e, p, 1e-4 / k);
        let want = f.h.scale(imag_unit::<f64>() * omega);
        assert!((ce - want).norm() / want.norm() < 1e-6);
        let ch = curl(|q| dipole_field(q, &d, &m, omega).unwrap().h, p, 1e-4 / k);
        let want = f.e.scale(-imag_unit::<f64>() * omega);
        assert!((ch - want).norm() / want.norm() < 1e-6);
    }

    #[test]
    fn dipole_far_field_decay_and_null() {
        let m = Material::real(1.0, 1.0);
        let d = DipoleSpec {
            location: Vec3::zero(),
            polarization: CVec3::new(real(0.0), real(0.0), real(1.0)),
            region: Region::Upper,
        };
        let lambda = 2.0 * std::f64::consts::PI;
        let dir = Vec3::new(1.0, 1.0, 0.5).normalized();
        let mut vals = Vec::new();
        for &n in &[10.0, 100.0, 1000.0] {
            let r = n * lambda;
            let f = dipole_field(dir * r, &d, &m, 1.0).unwrap();
            vals.push(f.e.norm() * r);
        }
        assert!(vals.iter().all(|v| *v < 2.0 * vals[0] && *v > 0.5 * vals[0]));
        let on_axis = dipole_field(Vec3::new(0.0, 0.0, 3.0), &d, &m, 1.0).unwrap();
        assert!(on_axis.h.norm() < 1e-15);
        assert!(dipole_field(Vec3::zero(), &d, &m, 1.0).is_err());
    }

    #[test]
    fn planewave_traces_vanish_on_plane() {
        let c = cfg(2.0);
        let s = PlanewaveSpec::unit(Polarization::Tm, 0.3, &c);
        let src = SourceField::new(&c, &Excitation::Planewave(s)).unwrap();
        let (m, j) = src.traces(Vec3::new(0.5, -1.0, 0.0), Vec3::unit_z()).unwrap();
        assert!(m.norm() < 1e-12 && j.norm() < 1e-12);
        let (m, _) = src.traces(Vec3::new(0.5, -1.0, 0.4), Vec3::new(0.6, 0.0, 0.8)).unwrap();
        assert!(m.norm() > 1e-3);
    }
}
