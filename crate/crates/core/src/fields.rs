//! Off-surface fields radiated by solved surface currents through the
//! windowed potentials, total fields and error metrics.
//!
//! With `q = div(w phi)` the potentials are
//! `k^2 S[phi] = k^2 int G w phi + int grad G q` and
//! `D[phi] = int grad G x (w phi)`, so that the fields
//! `E_j = k_j^2 S v + i w mu_j D u`, `H_j = k_j^2 S u - i w eps_j D v`
//! solve Maxwell's equations exactly.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::assembly::{SurfaceCurrents, TriGeom};
use crate::error::{Error, Result};
use crate::geometry::{point_triangle_distance, Region, RwgBasis, TriangleMesh};
use crate::kernels::green_radial;
use crate::media::{EMField, LayeredConfig, SourceField};
use crate::quadrature::{symmetric_rule, TriPoint};
use crate::scalar::{imag_unit, Real, C};
use crate::vec3::{CVec3, Vec3};
use crate::window::{weight, weight_gradient, Window};

/// Controls near-surface evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions<T> {
    /// Points closer than this to the mesh are refused.
    pub clearance: T,
    /// Triangles closer than this multiple of their diameter are
    /// integrated adaptively.
    pub near_factor: T,
    /// Maximum subdivision depth of the adaptive rule.
    pub max_depth: usize,
}

impl<T: Real> EvalOptions<T> {
    /// Default options for a mesh of size `h`: clearance `h/2`.
    pub fn for_mesh_size(h: T) -> Self {
        Self {
            clearance: h * T::lit(0.5),
            near_factor: T::lit(2.0),
            max_depth: 6,
        }
    }
}

/// Current samples at one source quadrature point.
#[derive(Debug, Clone, Copy)]
struct Sample<T> {
    y: Vec3<T>,
    /// Quadrature weight times area.
    weight: T,
    /// `w phi` for `u` and `v`.
    ju: CVec3<T>,
    jv: CVec3<T>,
    /// `div(w phi)` for `u` and `v`.
    qu: C<T>,
    qv: C<T>,
}

/// Evaluates scattered fields of fixed currents.
pub struct FieldEvaluator<'a, T> {
    mesh: &'a TriangleMesh<T>,
    basis: &'a RwgBasis<T>,
    config: LayeredConfig<T>,
    window: Window<T>,
    currents: &'a SurfaceCurrents<T>,
    options: EvalOptions<T>,
    geo: Vec<TriGeom<T>>,
    rule: Vec<TriPoint<T>>,
    fine: Vec<TriPoint<T>>,
    /// Regular-rule samples per triangle (empty for current-free ones).
    samples: Vec<Vec<Sample<T>>>,
}

impl<'a, T: Real> FieldEvaluator<'a, T> {
    pub fn new(
        mesh: &'a TriangleMesh<T>,
        basis: &'a RwgBasis<T>,
        config: &LayeredConfig<T>,
        window: &Window<T>,
        currents: &'a SurfaceCurrents<T>,
        options: EvalOptions<T>,
    ) -> Result<Self> {
        config.validate()?;
        if currents.u.len() != basis.len() || currents.v.as_ref().is_some_and(|v| v.len() != basis.len()) {
            return Err(Error::Parameter(format!(
                "current vectors do not match the {} basis functions",
                basis.len()
            )));
        }
        if config.is_pec() == currents.v.is_some() {
            return Err(Error::Parameter(
                "a conducting lower medium takes one current, a penetrable one takes two".into(),
            ));
        }
        let rule = symmetric_rule(6)?;
        let fine = symmetric_rule(12)?;
        let geo: Vec<_> = (0..mesh.num_triangles()).map(|t| TriGeom::new(mesh, t)).collect();
        let mut ev = Self {
            mesh,
            basis,
            config: *config,
            window: *window,
            currents,
            options,
            geo,
            rule,
            fine,
            samples: Vec::new(),
        };
        ev.samples = (0..mesh.num_triangles())
            .map(|t| {
                if ev.active(t) {
                    let g = &ev.geo[t];
                    ev.rule
                        .iter()
                        .map(|q| ev.sample(t, q.map(&g.corners), q.weight * g.area))
                        .collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        Ok(ev)
    }

    fn active(&self, t: usize) -> bool {
        let zero = C::new(T::zero(), T::zero());
        self.basis.on_triangle(t).iter().flatten().any(|lb| {
            self.currents.u[lb.index] != zero
                || self.currents.v.as_ref().is_some_and(|v| v[lb.index] != zero)
        })
    }

    fn sample(&self, t: usize, y: Vec3<T>, weight_area: T) -> Sample<T> {
        let g = &self.geo[t];
        let w = weight(&self.window, y);
        let gw = weight_gradient(&self.window, y);
        let zero = C::new(T::zero(), T::zero());
        let mut s = Sample {
            y,
            weight: weight_area,
            ju: CVec3::zero(),
            jv: CVec3::zero(),
            qu: zero,
            qv: zero,
        };
        for (a, lb) in self.basis.on_triangle(t).iter().enumerate() {
            let Some(lb) = lb else { continue };
            let sign = T::from_f64(f64::from(lb.sign)).unwrap();
            let f = g.shape(a, y) * sign;
            let div = g.div[a] * sign;
            let cu = self.currents.u[lb.index];
            s.ju += f.scale_c(cu * w);
            s.qu += cu * (w * div + gw.dot(f));
            if let Some(v) = &self.currents.v {
                let cv = v[lb.index];
                s.jv += f.scale_c(cv * w);
                s.qv += cv * (w * div + gw.dot(f));
            }
        }
        s
    }

    /// Adaptive samples of triangle `t` for observation point `p`.
    fn refined(&self, t: usize, p: Vec3<T>, out: &mut Vec<Sample<T>>) {
        let g = &self.geo[t];
        let mut stack = vec![(g.corners, 0usize)];
        while let Some((c, depth)) = stack.pop() {
            let diam = (c[0] - c[1]).norm().max((c[1] - c[2]).norm()).max((c[2] - c[0]).norm());
            let dist = point_triangle_distance(p, c);
            if dist >= self.options.near_factor * diam || depth >= self.options.max_depth {
                let area = (c[1] - c[0]).cross(c[2] - c[0]).norm() * T::lit(0.5);
                for q in &self.fine {
                    out.push(self.sample(t, q.map(&c), q.weight * area));
                }
            } else {
                let half = T::lit(0.5);
                let m01 = (c[0] + c[1]) * half;
                let m12 = (c[1] + c[2]) * half;
                let m20 = (c[2] + c[0]) * half;
                for child in [[c[0], m01, m20], [m01, c[1], m12], [m20, m12, c[2]], [m01, m12, m20]] {
                    stack.push((child, depth + 1));
                }
            }
        }
    }

    /// True when `p` keeps the required clearance from the surface.
    pub fn admissible(&self, p: Vec3<T>) -> bool {
        self.mesh.distance_to(p) >= self.options.clearance
    }

    /// Scattered field at `p` in `region`.
    pub fn scattered(&self, p: Vec3<T>, region: Region) -> Result<EMField<T>> {
        let (k, eps, mu) = match self.config.material(region) {
            Some(m) => (m.wavenumber(self.config.omega), m.eps, m.mu),
            None => return Ok(EMField::zero()),
        };
        let i = imag_unit::<T>();
        let omega = self.config.omega;
        let mut near = Vec::new();
        let (mut a_u, mut a_v) = (CVec3::zero(), CVec3::zero());
        let (mut g_u, mut g_v) = (CVec3::zero(), CVec3::zero());
        let (mut d_u, mut d_v) = (CVec3::zero(), CVec3::zero());
        let mut add = |s: &Sample<T>| {
            let d = p - s.y;
            let (gk, phi) = green_radial(k, d.norm());
            let g = gk * s.weight;
            let grad = d.scale_c(phi * s.weight);
            a_u += s.ju.scale(g);
            a_v += s.jv.scale(g);
            g_u += grad.scale(s.qu);
            g_v += grad.scale(s.qv);
            d_u += grad.cross(s.ju);
            d_v += grad.cross(s.jv);
        };
        for (t, samples) in self.samples.iter().enumerate() {
            if samples.is_empty() {
                continue;
            }
            let diam = self.mesh.diameter(t);
            let far = (p - self.mesh.centroid(t)).norm() > (self.options.near_factor + T::one()) * diam;
            let dist = if far { T::infinity() } else { point_triangle_distance(p, self.geo[t].corners) };
            if dist < self.options.clearance {
                return Err(Error::Evaluation(format!(
                    "point ({}, {}, {}) is {} from triangle {t}, below the clearance {}",
                    p.x, p.y, p.z, dist, self.options.clearance
                )));
            }
            if dist < self.options.near_factor * diam {
                near.clear();
                self.refined(t, p, &mut near);
                near.iter().for_each(&mut add);
            } else {
                samples.iter().for_each(&mut add);
            }
        }
        let k2 = k * k;
        Ok(if self.config.is_pec() {
            // E = D[u], H = -i w eps S[w u]
            EMField::new(d_u, (a_u + g_u.scale(k2.inv())).scale(-i * omega * eps))
        } else {
            EMField::new(
                a_v.scale(k2) + g_v + d_u.scale(i * omega * mu),
                a_u.scale(k2) + g_u - d_v.scale(i * omega * eps),
            )
        })
    }

    /// Source plus scattered field.
    pub fn total(&self, p: Vec3<T>, region: Region, source: &SourceField<T>) -> Result<EMField<T>> {
        Ok(source.field(p, region)? + self.scattered(p, region)?)
    }

    /// Scattered fields at many points, in parallel.
    pub fn scattered_many(&self, points: &[(Vec3<T>, Region)]) -> Result<Vec<EMField<T>>> {
        points.par_iter().map(|&(p, r)| self.scattered(p, r)).collect()
    }

    /// Total fields at many points, in parallel.
    pub fn total_many(&self, points: &[(Vec3<T>, Region)], source: &SourceField<T>) -> Result<Vec<EMField<T>>> {
        points.par_iter().map(|&(p, r)| self.total(p, r, source)).collect()
    }
}

/// Scattered field at a single point.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_scattered<T: Real>(
    currents: &SurfaceCurrents<T>,
    mesh: &TriangleMesh<T>,
    basis: &RwgBasis<T>,
    window: &Window<T>,
    config: &LayeredConfig<T>,
    options: EvalOptions<T>,
    point: Vec3<T>,
    region: Region,
) -> Result<EMField<T>> {
    FieldEvaluator::new(mesh, basis, config, window, currents, options)?.scattered(point, region)
}

/// `max |E - E_ref| / max |E_ref|`.
pub fn relative_error<T: Real>(approx: &[CVec3<T>], reference: &[CVec3<T>]) -> Result<T> {
    if approx.len() != reference.len() {
        return Err(Error::Parameter(format!(
            "point sets differ in size ({} vs {})",
            approx.len(),
            reference.len()
        )));
    }
    let den = reference.iter().map(|e| e.norm()).fold(T::zero(), T::max);
    if den == T::zero() {
        return Err(Error::DegenerateReference);
    }
    let num = approx
        .iter()
        .zip(reference)
        .map(|(a, b)| (*a - *b).norm())
        .fold(T::zero(), T::max);
    Ok(num / den)
}

/// Evaluation points with region tags, optionally a structured planar slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid<T> {
    pub points: Vec<Vec3<T>>,
    pub regions: Vec<Region>,
    /// `(nu, nv)` for slices, points ordered with `u` fastest.
    pub shape: Option<(usize, usize)>,
}

impl<T: Real> FieldGrid<T> {
    pub fn from_points(points: Vec<Vec3<T>>, region: impl Fn(Vec3<T>) -> Region) -> Self {
        let regions = points.iter().map(|p| region(*p)).collect();
        Self {
            points,
            regions,
            shape: None,
        }
    }

    /// `nu x nv` points `origin + i/(nu-1) span_u + j/(nv-1) span_v`.
    pub fn slice(
        origin: Vec3<T>,
        span_u: Vec3<T>,
        span_v: Vec3<T>,
        nu: usize,
        nv: usize,
        region: impl Fn(Vec3<T>) -> Region,
    ) -> Result<Self> {
        if nu < 2 || nv < 2 {
            return Err(Error::Parameter("slice resolution must be at least 2 x 2".into()));
        }
        let mut points = Vec::with_capacity(nu * nv);
        for j in 0..nv {
            for i in 0..nu {
                let s = T::from_usize_lossy(i) / T::from_usize_lossy(nu - 1);
                let t = T::from_usize_lossy(j) / T::from_usize_lossy(nv - 1);
                points.push(origin + span_u * s + span_v * t);
            }
        }
        let mut g = Self::from_points(points, region);
        g.shape = Some((nu, nv));
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tagged(&self) -> Vec<(Vec3<T>, Region)> {
        self.points.iter().copied().zip(self.regions.iter().copied()).collect()
    }
}

/// Column names of field tables.
pub const FIELD_COLUMNS: [&str; 15] = [
    "x", "y", "z", "Ex_re", "Ex_im", "Ey_re", "Ey_im", "Ez_re", "Ez_im", "Hx_re", "Hx_im", "Hy_re",
    "Hy_im", "Hz_re", "Hz_im",
];

fn field_values<T: Real>(f: &EMField<T>) -> [f64; 12] {
    let mut out = [0.0; 12];
    for (i, c) in f.e.components().iter().chain(f.h.components().iter()).enumerate() {
        out[2 * i] = c.re.to_f64_lossy();
        out[2 * i + 1] = c.im.to_f64_lossy();
    }
    out
}

/// Writes one row per point with 17 significant digits.
pub fn write_field_csv<T: Real>(path: impl AsRef<Path>, points: &[Vec3<T>], fields: &[EMField<T>]) -> Result<()> {
    let path = path.as_ref();
    let err = |e| Error::io(path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(err)?);
    writeln!(f, "{}", FIELD_COLUMNS.join(",")).map_err(err)?;
    for (p, v) in points.iter().zip(fields) {
        let coords = p.to_f64();
        let row: Vec<String> = coords
            .iter()
            .chain(field_values(v).iter())
            .map(|x| format!("{x:.16e}"))
            .collect();
        writeln!(f, "{}", row.join(",")).map_err(err)?;
    }
    f.flush().map_err(err)
}

/// Reads a table written by [`write_field_csv`].
pub fn read_field_csv(path: impl AsRef<Path>) -> Result<(Vec<Vec3<f64>>, Vec<EMField<f64>>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path.display().to_string();
    let mut points = Vec::new();
    let mut fields = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if n == 0 {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format {
                path: label.clone(),
                line: n + 1,
                msg: e.to_string(),
            })?;
        if v.len() != FIELD_COLUMNS.len() {
            return Err(Error::Format {
                path: label.clone(),
                line: n + 1,
                msg: format!("expected {} columns, found {}", FIELD_COLUMNS.len(), v.len()),
            });
        }
        points.push(Vec3::new(v[0], v[1], v[2]));
        let c = |i: usize| C::new(v[3 + 2 * i], v[4 + 2 * i]);
        fields.push(EMField::new(CVec3::new(c(0), c(1), c(2)), CVec3::new(c(3), c(4), c(5))));
    }
    Ok((points, fields))
}

/// Legacy ASCII structured-grid file of a slice with the real and
/// imaginary parts of `E` and `H` as point vectors.
pub fn write_vtk<T: Real>(path: impl AsRef<Path>, grid: &FieldGrid<T>, fields: &[EMField<T>], title: &str) -> Result<()> {
    let path = path.as_ref();
    let (nu, nv) = grid
        .shape
        .ok_or_else(|| Error::Parameter("structured output needs a slice grid".into()))?;
    let err = |e| Error::io(path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(err)?);
    writeln!(f, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_GRID").map_err(err)?;
    writeln!(f, "DIMENSIONS {nu} {nv} 1\nPOINTS {} double", grid.len()).map_err(err)?;
    for p in &grid.points {
        let [x, y, z] = p.to_f64();
        writeln!(f, "{x:.9e} {y:.9e} {z:.9e}").map_err(err)?;
    }
    writeln!(f, "POINT_DATA {}", grid.len()).map_err(err)?;
    let parts: [(&str, fn(&EMField<T>) -> CVec3<T>, bool); 4] = [
        ("E_real", |f| f.e, false),
        ("E_imag", |f| f.e, true),
        ("H_real", |f| f.h, false),
        ("H_imag", |f| f.h, true),
    ];
    for (name, get, imag) in parts {
        writeln!(f, "VECTORS {name} double").map_err(err)?;
        for v in fields {
            let c = get(v).components().map(|z| if imag { z.im } else { z.re }.to_f64_lossy());
            writeln!(f, "{:.9e} {:.9e} {:.9e}", c[0], c[1], c[2]).map_err(err)?;
        }
    }
    f.flush().map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_rwg_basis;
    use crate::media::Material;

    fn two_triangles() -> TriangleMesh<f64> {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.2),
        ];
        TriangleMesh::new(v, vec![[0, 1, 2], [1, 3, 2]]).unwrap()
    }

    fn dielectric() -> LayeredConfig<f64> {
        LayeredConfig::new(1.3, Material::real(1.0, 1.0), Material::real(2.0, 1.5))
    }

    #[test]
    fn zero_currents_give_zero_field() {
        let mesh = two_triangles();
        let basis = build_rwg_basis(&mesh).unwrap();
        let cur = SurfaceCurrents {
            u: vec![C::new(0.0, 0.0)],
            v: Some(vec![C::new(0.0, 0.0)]),
        };
        let f = evaluate_scattered(
            &cur,
            &mesh,
            &basis,
            &None,
            &dielectric(),
            EvalOptions::for_mesh_size(0.5),
            Vec3::new(0.3, 0.2, 2.0),
            Region::Upper,
        )
        .unwrap();
        assert_eq!(f, EMField::zero());
    }

    #[test]
    fn fields_satisfy_maxwell() {
        let mesh = two_triangles();
        let basis = build_rwg_basis(&mesh).unwrap();
        let cfg = dielectric();
        let w = Some(crate::window::WindowParams::radial(1.2, 0.3).unwrap());
        let cur = SurfaceCurrents {
            u: vec![C::new(0.7, -0.2)],
            v: Some(vec![C::new(-0.1, 0.4)]),
        };
        let ev = FieldEvaluator::new(&mesh, &basis, &cfg, &w, &cur, EvalOptions::for_mesh_size(0.5)).unwrap();
        for (p, region) in [(Vec3::new(0.4, 0.3, 0.9), Region::Upper), (Vec3::new(0.2, 0.6, -0.8), Region::Lower)] {
            let m = cfg.material(region).unwrap();
            let k = m.wavenumber(cfg.omega);
            let h = 1e-3 / k.norm();
            let f = |q: Vec3<f64>| ev.scattered(q, region).unwrap();
            let ax = [Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()];
            let deriv = |a: usize, get: fn(&EMField<f64>) -> CVec3<f64>| {
                let s = ax[a] * h;
                (get(&f(p - s * 2.0)) - get(&f(p - s)).scale_re(8.0) + get(&f(p + s)).scale_re(8.0)
                    - get(&f(p + s * 2.0)))
                .scale_re(1.0 / (12.0 * h))
            };
            let curl = |get: fn(&EMField<f64>) -> CVec3<f64>| {
                let (dx, dy, dz) = (deriv(0, get), deriv(1, get), deriv(2, get));
                CVec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
            };
            let i = C::new(0.0, 1.0);
            let here = f(p);
            let faraday = curl(|f| f.e) - here.h.scale(i * cfg.omega * m.mu);
            let ampere = curl(|f| f.h) + here.e.scale(i * cfg.omega * m.eps);
            assert!(faraday.norm() < 1e-4 * here.h.norm() * cfg.omega, "{faraday:?}");
            assert!(ampere.norm() < 1e-4 * here.e.norm() * cfg.omega * 2.0, "{ampere:?}");
        }
    }

    #[test]
    fn mfie_fields_satisfy_maxwell_and_linearity() {
        let mesh = two_triangles();
        let basis = build_rwg_basis(&mesh).unwrap();
        let cfg = LayeredConfig::pec(2.0, Material::real(1.0, 1.0));
        let w = Some(crate::window::WindowParams::radial(1.2, 0.3).unwrap());
        let c1 = SurfaceCurrents { u: vec![C::new(1.0, 0.5)], v: None };
        let c2 = SurfaceCurrents { u: vec![C::new(-0.3, 2.0)], v: None };
        let c12 = SurfaceCurrents { u: vec![c1.u[0] + c2.u[0]], v: None };
        let opts = EvalOptions::for_mesh_size(0.5);
        let p = Vec3::new(0.1, 0.5, 0.7);
        let f = |c: &SurfaceCurrents<f64>, q| evaluate_scattered(c, &mesh, &basis, &w, &cfg, opts, q, Region::Upper).unwrap();
        let sum = f(&c1, p) + f(&c2, p);
        let both = f(&c12, p);
        assert!((sum.e - both.e).norm() < 1e-13 * both.e.norm());
        let h = 1e-4;
        let dz = (f(&c1, p + Vec3::unit_z() * h).e - f(&c1, p - Vec3::unit_z() * h).e).scale_re(0.5 / h);
        let dy = (f(&c1, p + Vec3::unit_y() * h).e - f(&c1, p - Vec3::unit_y() * h).e).scale_re(0.5 / h);
        let dx = (f(&c1, p + Vec3::unit_x() * h).e - f(&c1, p - Vec3::unit_x() * h).e).scale_re(0.5 / h);
        let curl = CVec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x);
        let want = f(&c1, p).h.scale(C::new(0.0, 2.0));
        assert!((curl - want).norm() < 1e-4 * want.norm(), "{curl:?} {want:?}");
    }

    #[test]
    fn clearance_is_enforced() {
        let mesh = two_triangles();
        let basis = build_rwg_basis(&mesh).unwrap();
        let cur = SurfaceCurrents {
            u: vec![C::new(1.0, 0.0)],
            v: Some(vec![C::new(1.0, 0.0)]),
        };
        let ev = FieldEvaluator::new(&mesh, &basis, &dielectric(), &None, &cur, EvalOptions::for_mesh_size(0.4)).unwrap();
        let p = Vec3::new(0.2, 0.2, 0.1);
        assert!(!ev.admissible(p));
        assert!(matches!(ev.scattered(p, Region::Upper), Err(Error::Evaluation(_))));
        assert!(ev.scattered(Vec3::new(0.2, 0.2, 0.25), Region::Upper).is_ok());
    }

    #[test]
    fn relative_error_metric() {
        let a = vec![CVec3::new(C::new(1.0, 0.0), C::new(0.0, 2.0), C::new(0.0, 0.0))];
        assert_eq!(relative_error(&a, &a).unwrap(), 0.0);
        let twice: Vec<_> = a.iter().map(|v| v.scale_re(2.0)).collect();
        assert!((relative_error::<f64>(&a, &twice).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(relative_error(&a, &[CVec3::zero()]), Err(Error::DegenerateReference)));
    }

    #[test]
    fn csv_round_trip_and_vtk() {
        let grid = FieldGrid::slice(
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            2,
            2,
            |_| Region::Upper,
        )
        .unwrap();
        let fields: Vec<_> = (0..4)
            .map(|i| {
                let c = C::new(1.0 / 3.0 + i as f64, -std::f64::consts::PI);
                EMField::new(CVec3::new(c, c * 2.0, c * 3.0), CVec3::new(c * 0.1, c, c))
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_field_csv(&p, &grid.points, &fields).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 15);
        let (pts, back) = read_field_csv(&p).unwrap();
        assert_eq!(pts, grid.points);
        assert_eq!(back, fields);
        let v = dir.path().join("f.vtk");
        write_vtk(&v, &grid, &fields, "test").unwrap();
        let text = std::fs::read_to_string(&v).unwrap();
        assert!(text.contains("DIMENSIONS 2 2 1"));
        assert_eq!(text.matches("VECTORS").count(), 4);
    }
}
