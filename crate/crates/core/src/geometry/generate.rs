//! Structured ring meshes for the canonical geometries.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

use super::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    /// Disk of radius `A` in the plane `z = 0`.
    FlatDisk,
    /// Upper hemisphere of radius `R` standing on the plane.
    HemisphericalBump,
    /// Spherical cavity of radius `R` cut by the plane, opening through a
    /// circular aperture.
    SphericalCavity,
    /// Closed sphere of radius `R` (no plane, no window).
    ClosedSphere,
}

impl GeometryKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flat-disk" => Some(Self::FlatDisk),
            "hemispherical-bump" => Some(Self::HemisphericalBump),
            "spherical-cavity" => Some(Self::SphericalCavity),
            "closed-sphere" => Some(Self::ClosedSphere),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FlatDisk => "flat-disk",
            Self::HemisphericalBump => "hemispherical-bump",
            Self::SphericalCavity => "spherical-cavity",
            Self::ClosedSphere => "closed-sphere",
        }
    }
}

/// Side of the interface a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Upper medium (index 1).
    Upper,
    /// Lower medium (index 2).
    Lower,
}

impl Region {
    pub fn index(self) -> usize {
        match self {
            Region::Upper => 1,
            Region::Lower => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySpec<T> {
    pub kind: GeometryKind,
    /// Bump, cavity or sphere radius (ignored for the flat disk).
    pub radius: T,
    /// Truncation radius of the plane (ignored for the closed sphere).
    pub window_radius: T,
    /// Target edge length.
    pub mesh_size: T,
    /// Cavity aperture radius; defaults to half the cavity radius.
    pub aperture: Option<T>,
    /// Ratio between consecutive radial steps on the plane, growing away
    /// from the perturbation; 1 gives a uniform mesh.
    pub grading: T,
}

impl<T: Real> GeometrySpec<T> {
    pub fn new(kind: GeometryKind, radius: T, window_radius: T, mesh_size: T) -> Self {
        Self {
            kind,
            radius,
            window_radius,
            mesh_size,
            aperture: None,
            grading: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r, a, h) = (self.radius, self.window_radius, self.mesh_size);
        if !(h > T::zero()) {
            return Err(Error::Parameter(format!("mesh size must be positive, got {h}")));
        }
        if !(self.grading >= T::one()) {
            return Err(Error::Parameter(format!(
                "grading factor must be at least 1, got {}",
                self.grading
            )));
        }
        match self.kind {
            GeometryKind::FlatDisk => {
                if !(a > h) {
                    return Err(Error::Parameter(format!(
                        "disk radius {a} must exceed the mesh size {h}"
                    )));
                }
            }
            GeometryKind::ClosedSphere => {
                if !(r > h) {
                    return Err(Error::Parameter(format!(
                        "mesh size {h} too large to resolve radius {r}"
                    )));
                }
            }
            GeometryKind::HemisphericalBump | GeometryKind::SphericalCavity => {
                if !(r > T::zero() && r < a) {
                    return Err(Error::Parameter(format!(
                        "need 0 < R < A, got R={r}, A={a}"
                    )));
                }
                if !(h < r) {
                    return Err(Error::Parameter(format!(
                        "mesh size {h} too large to resolve radius {r}"
                    )));
                }
                if self.kind == GeometryKind::SphericalCavity {
                    let ap = self.aperture_radius();
                    if !(ap > T::zero() && ap < r && ap < a) {
                        return Err(Error::Parameter(format!(
                            "aperture radius {ap} must lie in (0, R)"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn aperture_radius(&self) -> T {
        self.aperture.unwrap_or(self.radius * T::lit(0.5))
    }

    /// Center of the cavity sphere (below the plane).
    pub fn cavity_center(&self) -> Vec3<T> {
        let r = self.radius;
        let a = self.aperture_radius();
        Vec3::new(T::zero(), T::zero(), -(r * r - a * a).sqrt())
    }

    /// Medium containing `p`.
    pub fn region(&self, p: Vec3<T>) -> Region {
        let r = self.radius;
        match self.kind {
            GeometryKind::FlatDisk => {
                if p.z >= T::zero() {
                    Region::Upper
                } else {
                    Region::Lower
                }
            }
            GeometryKind::HemisphericalBump => {
                if p.z >= T::zero() && p.norm() >= r {
                    Region::Upper
                } else {
                    Region::Lower
                }
            }
            GeometryKind::SphericalCavity => {
                if p.z >= T::zero() || (p - self.cavity_center()).norm() < r {
                    Region::Upper
                } else {
                    Region::Lower
                }
            }
            GeometryKind::ClosedSphere => {
                if p.norm() >= r {
                    Region::Upper
                } else {
                    Region::Lower
                }
            }
        }
    }

    /// Analytic area of the generated surface.
    pub fn surface_area(&self) -> T {
        let pi = T::PI();
        let (r, a) = (self.radius, self.window_radius);
        match self.kind {
            GeometryKind::FlatDisk => pi * a * a,
            GeometryKind::HemisphericalBump => pi * a * a - pi * r * r + T::lit(2.0) * pi * r * r,
            GeometryKind::SphericalCavity => {
                let ap = self.aperture_radius();
                let cap_height = r - self.cavity_center().z.abs();
                pi * a * a - pi * ap * ap + T::lit(4.0) * pi * r * r
                    - T::lit(2.0) * pi * r * cap_height
            }
            GeometryKind::ClosedSphere => T::lit(4.0) * pi * r * r,
        }
    }
}

struct Ring {
    ids: Vec<usize>,
    angles: Vec<f64>,
}

struct Builder<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[usize; 3]>,
}

const TAU: f64 = std::f64::consts::TAU;

impl<T: Real> Builder<T> {
    fn point(&mut self, p: Vec3<T>) -> Ring {
        self.vertices.push(p);
        Ring {
            ids: vec![self.vertices.len() - 1],
            angles: vec![0.0],
        }
    }

    fn ring(&mut self, count: usize, offset: f64, f: impl Fn(T) -> Vec3<T>) -> Ring {
        let mut ids = Vec::with_capacity(count);
        let mut angles = Vec::with_capacity(count);
        for i in 0..count {
            let phi = offset + TAU * i as f64 / count as f64;
            ids.push(self.vertices.len());
            angles.push(phi);
            self.vertices.push(f(T::lit(phi)));
        }
        Ring { ids, angles }
    }

    fn tri(&mut self, a: usize, b: usize, c: usize, up: &impl Fn(Vec3<T>) -> Vec3<T>) {
        let [pa, pb, pc] = [a, b, c].map(|i| self.vertices[i]);
        let n = (pb - pa).cross(pc - pa);
        let centroid = (pa + pb + pc) / T::lit(3.0);
        if n.dot(up(centroid)) >= T::zero() {
            self.triangles.push([a, b, c]);
        } else {
            self.triangles.push([a, c, b]);
        }
    }

    /// Triangulates the band between two concentric rings.
    fn stitch(&mut self, a: &Ring, b: &Ring, up: impl Fn(Vec3<T>) -> Vec3<T>) {
        let (p, q) = (a.ids.len(), b.ids.len());
        if p == 1 || q == 1 {
            let (apex, rim) = if p == 1 { (a, b) } else { (b, a) };
            let n = rim.ids.len();
            for j in 0..n {
                self.tri(apex.ids[0], rim.ids[j], rim.ids[(j + 1) % n], &up);
            }
            return;
        }
        // rings are uniform in angle, so positions unwrap linearly
        let a_ang = |i: usize| a.angles[0] + TAU * i as f64 / p as f64;
        let mut j0 = 0;
        let mut best = f64::INFINITY;
        for (j, &t) in b.angles.iter().enumerate() {
            let d = (t - a.angles[0]).rem_euclid(TAU);
            let d = d.min(TAU - d);
            if d < best {
                best = d;
                j0 = j;
            }
        }
        let start = {
            let raw = b.angles[j0] - a.angles[0];
            b.angles[j0] - (raw / TAU).round() * TAU
        };
        let b_ang = |j: usize| start + TAU * j as f64 / q as f64;
        let (mut i, mut j) = (0, 0);
        while i < p || j < q {
            let ai = a.ids[i % p];
            let bj = b.ids[(j0 + j) % q];
            let take_a = j == q || (i < p && a_ang(i + 1) <= b_ang(j + 1));
            if take_a {
                self.tri(ai, a.ids[(i + 1) % p], bj, &up);
                i += 1;
            } else {
                self.tri(ai, b.ids[(j0 + j + 1) % q], bj, &up);
                j += 1;
            }
        }
    }

    fn finish(self) -> Result<TriangleMesh<T>> {
        TriangleMesh::new(self.vertices, self.triangles)
    }
}

/// Ring radii from `r0` (exclusive) to `r1`: steps `h, h g, h g^2, ...`
/// laid from `r0`, the last band absorbing the remainder. Meshes for two
/// outer radii therefore share every ring but the last.
fn graded_radii(r0: f64, r1: f64, h: f64, g: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let (mut r, mut s) = (r0, h);
    while r + 1.5 * s < r1 {
        r += s;
        out.push(r);
        s *= g;
    }
    out.push(r1);
    out
}

fn ring_count(circumference: f64, h: f64, min: usize) -> usize {
    ((circumference / h).round() as usize).max(min)
}

/// Triangulates the truncated surface described by `spec`.
pub fn make_surface<T: Real>(spec: &GeometrySpec<T>) -> Result<TriangleMesh<T>> {
    spec.validate()?;
    let h = spec.mesh_size.to_f64_lossy();
    let big_a = spec.window_radius.to_f64_lossy();
    let r = spec.radius.to_f64_lossy();
    let g = spec.grading.to_f64_lossy();
    let mut b = Builder {
        vertices: Vec::new(),
        triangles: Vec::new(),
    };
    let up_z = |_: Vec3<T>| Vec3::unit_z();
    let plane = |rho: f64| move |phi: T| Vec3::new(T::lit(rho) * phi.cos(), T::lit(rho) * phi.sin(), T::zero());

    match spec.kind {
        GeometryKind::FlatDisk => {
            let mut prev = b.point(Vec3::zero());
            let radii = graded_radii(0.0, big_a, h, g);
            for (i, &rho) in radii.iter().enumerate() {
                let count = if g == 1.0 {
                    6 * (i + 1)
                } else {
                    let step = if i == 0 { rho } else { rho - radii[i - 1] };
                    ring_count(TAU * rho, step, 6)
                };
                let ring = b.ring(count, 0.0, plane(rho));
                b.stitch(&prev, &ring, up_z);
                prev = ring;
            }
        }
        GeometryKind::HemisphericalBump => {
            let junction_count = ring_count(TAU * r, h, 8);
            let junction = b.ring(junction_count, 0.0, plane(r));
            // hemisphere, junction to pole
            let n_h = ((0.5 * std::f64::consts::PI * r / h).ceil() as usize).max(2);
            let sph = |theta: f64| {
                let (s, c) = theta.sin_cos();
                move |phi: T| {
                    Vec3::new(
                        T::lit(r * s) * phi.cos(),
                        T::lit(r * s) * phi.sin(),
                        T::lit(r * c),
                    )
                }
            };
            let outward = |c: Vec3<T>| c;
            let mut prev_ids = None::<Ring>;
            for j in 1..=n_h {
                let theta = 0.5 * std::f64::consts::PI * (1.0 - j as f64 / n_h as f64);
                let ring = if j == n_h {
                    b.point(Vec3::new(T::zero(), T::zero(), T::lit(r)))
                } else {
                    let count = ring_count(TAU * r * theta.sin(), h, 3);
                    let offset = if j % 2 == 1 { 0.5 * TAU / count as f64 } else { 0.0 };
                    b.ring(count, offset, sph(theta))
                };
                b.stitch(prev_ids.as_ref().unwrap_or(&junction), &ring, outward);
                prev_ids = Some(ring);
            }
            annulus(&mut b, &junction, r, big_a, h, g, plane);
        }
        GeometryKind::SphericalCavity => {
            let ap = spec.aperture_radius().to_f64_lossy();
            let zc = spec.cavity_center().z.to_f64_lossy();
            let center = spec.cavity_center();
            let junction_count = ring_count(TAU * ap, h, 8);
            let junction = b.ring(junction_count, 0.0, plane(ap));
            let theta_a = (ap / r).asin();
            let arc = r * (std::f64::consts::PI - theta_a);
            let n_s = ((arc / h).ceil() as usize).max(2);
            let sph = |theta: f64| {
                let (s, c) = theta.sin_cos();
                move |phi: T| {
                    Vec3::new(
                        T::lit(r * s) * phi.cos(),
                        T::lit(r * s) * phi.sin(),
                        T::lit(zc + r * c),
                    )
                }
            };
            let inward = move |c: Vec3<T>| center - c;
            let mut prev: Option<Ring> = None;
            for j in 1..=n_s {
                let theta = theta_a + (std::f64::consts::PI - theta_a) * j as f64 / n_s as f64;
                let ring = if j == n_s {
                    b.point(Vec3::new(T::zero(), T::zero(), T::lit(zc - r)))
                } else {
                    let count = ring_count(TAU * r * theta.sin(), h, 3);
                    let offset = if j % 2 == 1 { 0.5 * TAU / count as f64 } else { 0.0 };
                    b.ring(count, offset, sph(theta))
                };
                b.stitch(prev.as_ref().unwrap_or(&junction), &ring, inward);
                prev = Some(ring);
            }
            annulus(&mut b, &junction, ap, big_a, h, g, plane);
        }
        GeometryKind::ClosedSphere => {
            let n = ((std::f64::consts::PI * r / h).ceil() as usize).max(2);
            let mut prev = b.point(Vec3::new(T::zero(), T::zero(), T::lit(r)));
            for j in 1..=n {
                let theta = std::f64::consts::PI * j as f64 / n as f64;
                let ring = if j == n {
                    b.point(Vec3::new(T::zero(), T::zero(), T::lit(-r)))
                } else {
                    let (s, c) = theta.sin_cos();
                    let count = ring_count(TAU * r * s, h, 3);
                    let offset = if j % 2 == 1 { 0.5 * TAU / count as f64 } else { 0.0 };
                    b.ring(count, offset, move |phi: T| {
                        Vec3::new(
                            T::lit(r * s) * phi.cos(),
                            T::lit(r * s) * phi.sin(),
                            T::lit(r * c),
                        )
                    })
                };
                b.stitch(&prev, &ring, |c: Vec3<T>| c);
                prev = ring;
            }
        }
    }
    b.finish()
}

fn annulus<T: Real, F: Fn(T) -> Vec3<T>>(
    b: &mut Builder<T>,
    inner: &Ring,
    r0: f64,
    r1: f64,
    h: f64,
    g: f64,
    plane: impl Fn(f64) -> F,
) {
    let radii = graded_radii(r0, r1, h, g);
    let mut prev_r = r0;
    let mut owned: Option<Ring> = None;
    for (i, &rho) in radii.iter().enumerate() {
        let step = rho - prev_r;
        let count = ring_count(TAU * rho, step, 8);
        let offset = if i % 2 == 0 { 0.5 * TAU / count as f64 } else { 0.0 };
        let ring = b.ring(count, offset, plane(rho));
        b.stitch(owned.as_ref().unwrap_or(inner), &ring, |_| Vec3::unit_z());
        owned = Some(ring);
        prev_r = rho;
    }
}
