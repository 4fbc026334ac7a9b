//! Galerkin assembly of the windowed Müller and MFIE systems.
//!
//! Operator blocks (tested with RWG functions `f_m`, sources `f_n`,
//! window `w` at source points):
//!
//! * `M11 = -i w (mu1+mu2)/2 Gram + i w (mu2 K2 - mu1 K1)`
//! * `M22 =  i w (eps1+eps2)/2 Gram + i w (eps1 K1 - eps2 K2)`
//! * `M12 = M21 = k2^2 T2 - k1^2 T1`
//! * MFIE: `Gram/2 + K1`
//!
//! with `<f_m, K f_n> = int f_m . n x int grad G x f_n w` and
//! `<f_m, (k2^2 T2 - k1^2 T1) f_n> = int f_m . n x int [(k2^2 G2 - k1^2 G1) f_n
//! + grad(G2 - G1) div f_n] w`.

mod tiled;

pub use tiled::{TiledMatrix, TILE};

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{local_edge, RwgBasis, TriangleMesh};
use crate::kernels::{grad_diff_radial, green_radial};
use crate::media::{LayeredConfig, SourceField};
use crate::quadrature::{classify, map_bary, Adjacency, PairPoint, QuadratureRule, QuadratureSet};
use crate::scalar::{imag_unit, real, Real, C};
use crate::vec3::{CVec3, Vec3};
use crate::window::{weight, Window};

/// Real sparse symmetric RWG Gram matrix `int f_m . f_n`.
#[derive(Debug, Clone)]
pub struct Gram<T> {
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Real> Gram<T> {
    pub fn new(mesh: &TriangleMesh<T>, basis: &RwgBasis<T>, quad: &QuadratureSet<T>) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); basis.len()];
        for t in 0..mesh.num_triangles() {
            let geo = TriGeom::new(mesh, t);
            let locals = basis.on_triangle(t);
            for a in 0..3 {
                let Some(la) = locals[a] else { continue };
                for b in 0..3 {
                    let Some(lb) = locals[b] else { continue };
                    let mut s = T::zero();
                    for q in &quad.regular {
                        let x = q.map(&geo.corners);
                        s += q.weight * geo.shape(a, x).dot(geo.shape(b, x));
                    }
                    let v = s * geo.area * T::from_f64(f64::from(la.sign * lb.sign)).unwrap();
                    let row = &mut rows[la.index];
                    match row.iter_mut().find(|(j, _)| *j == lb.index) {
                        Some(e) => e.1 += v,
                        None => row.push((lb.index, v)),
                    }
                }
            }
        }
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
        }
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.rows[i]
            .iter()
            .find(|e| e.0 == j)
            .map(|e| e.1)
            .unwrap_or(T::zero())
    }

    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    /// `y += s * G x`.
    pub fn matvec_add(&self, s: C<T>, x: &[C<T>], y: &mut [C<T>]) {
        for (yi, row) in y.iter_mut().zip(&self.rows) {
            let mut acc = C::new(T::zero(), T::zero());
            for &(j, g) in row {
                acc += x[j] * g;
            }
            *yi += acc * s;
        }
    }
}

/// Assembled system matrix in block form.
#[derive(Debug, Clone)]
pub enum SystemMatrix<T> {
    /// `[[c11 G + D11, Off], [Off, c22 G + D22]]`.
    Mueller {
        gram: Gram<T>,
        c11: C<T>,
        c22: C<T>,
        d11: TiledMatrix<T>,
        d22: TiledMatrix<T>,
        off: TiledMatrix<T>,
    },
    /// `c G + K`.
    Mfie {
        gram: Gram<T>,
        c: C<T>,
        k: TiledMatrix<T>,
    },
}

impl<T: Real> SystemMatrix<T> {
    /// Number of basis functions.
    pub fn basis_len(&self) -> usize {
        match self {
            SystemMatrix::Mueller { gram, .. } | SystemMatrix::Mfie { gram, .. } => gram.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SystemMatrix::Mueller { gram, .. } => 2 * gram.dim(),
            SystemMatrix::Mfie { gram, .. } => gram.dim(),
        }
    }

    pub fn is_mueller(&self) -> bool {
        matches!(self, SystemMatrix::Mueller { .. })
    }

    pub fn entry(&self, i: usize, j: usize) -> C<T> {
        match self {
            SystemMatrix::Mueller {
                gram,
                c11,
                c22,
                d11,
                d22,
                off,
            } => {
                let n = gram.dim();
                match (i < n, j < n) {
                    (true, true) => *c11 * gram.get(i, j) + d11.get(i, j),
                    (true, false) => off.get(i, j - n),
                    (false, true) => off.get(i - n, j),
                    (false, false) => *c22 * gram.get(i - n, j - n) + d22.get(i - n, j - n),
                }
            }
            SystemMatrix::Mfie { gram, c, k } => *c * gram.get(i, j) + k.get(i, j),
        }
    }

    pub fn diagonal(&self) -> Vec<C<T>> {
        (0..self.dim()).map(|i| self.entry(i, i)).collect()
    }

    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.dim());
        let mut y = vec![C::new(T::zero(), T::zero()); self.dim()];
        match self {
            SystemMatrix::Mueller {
                gram,
                c11,
                c22,
                d11,
                d22,
                off,
            } => {
                let n = gram.dim();
                let (u, v) = x.split_at(n);
                let (y1, y2) = y.split_at_mut(n);
                gram.matvec_add(*c11, u, y1);
                d11.matvec_add(u, y1);
                off.matvec_add(v, y1);
                off.matvec_add(u, y2);
                gram.matvec_add(*c22, v, y2);
                d22.matvec_add(v, y2);
            }
            SystemMatrix::Mfie { gram, c, k } => {
                gram.matvec_add(*c, x, &mut y);
                k.matvec_add(x, &mut y);
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<C<T>> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn is_finite(&self) -> bool {
        match self {
            SystemMatrix::Mueller { d11, d22, off, .. } => {
                d11.all_finite() && d22.all_finite() && off.all_finite()
            }
            SystemMatrix::Mfie { k, .. } => k.all_finite(),
        }
    }

    /// Writes `rows`, `cols` (u64 little endian) followed by row-major
    /// complex entries as pairs of little-endian f64.
    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let n = self.dim() as u64;
        let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        write(&n.to_le_bytes())?;
        write(&n.to_le_bytes())?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let v = self.entry(i, j);
                write(&v.re.to_f64_lossy().to_le_bytes())?;
                write(&v.im.to_f64_lossy().to_le_bytes())?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Coefficients `u` (magnetic-type) and `v` (electric-type) of the surface
/// currents; `v` is absent for the perfect-conductor formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCurrents<T> {
    pub u: Vec<C<T>>,
    pub v: Option<Vec<C<T>>>,
}

impl<T: Real> SurfaceCurrents<T> {
    /// Splits a solution vector of a system with `n` basis functions.
    pub fn from_solution(x: &[C<T>], n: usize) -> Self {
        if x.len() == 2 * n {
            Self {
                u: x[..n].to_vec(),
                v: Some(x[n..].to_vec()),
            }
        } else {
            Self {
                u: x.to_vec(),
                v: None,
            }
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Per-triangle data used by the integrators.
#[derive(Debug, Clone)]
pub(crate) struct TriGeom<T> {
    pub corners: [Vec3<T>; 3],
    pub normal: Vec3<T>,
    pub area: T,
    /// `l_a / (2 A)` for the local edge opposite vertex `a`.
    pub coef: [T; 3],
    /// `l_a / A`.
    pub div: [T; 3],
}

impl<T: Real> TriGeom<T> {
    pub fn new(mesh: &TriangleMesh<T>, t: usize) -> Self {
        let tri = mesh.triangles()[t];
        let corners = mesh.corners(t);
        let area = mesh.area(t);
        let mut coef = [T::zero(); 3];
        let mut div = [T::zero(); 3];
        for a in 0..3 {
            let (i, j) = local_edge(&tri, a);
            let l = (mesh.vertices()[i] - mesh.vertices()[j]).norm();
            coef[a] = l / (T::lit(2.0) * area);
            div[a] = l / area;
        }
        Self {
            corners,
            normal: mesh.normal(t),
            area,
            coef,
            div,
        }
    }

    /// Unsigned local RWG shape `(x - p_a) l_a / (2A)`.
    #[inline(always)]
    pub fn shape(&self, a: usize, x: Vec3<T>) -> Vec3<T> {
        (x - self.corners[a]) * self.coef[a]
    }
}

/// Local 3x3 pair integrals over (test edge, source edge), unsigned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBlock<T> {
    /// `K` combination of block (1,1), or `K1` for the MFIE.
    pub a: [[C<T>; 3]; 3],
    /// `K` combination of block (2,2).
    pub b: [[C<T>; 3]; 3],
    /// Off-diagonal `k2^2 T2 - k1^2 T1`.
    pub c: [[C<T>; 3]; 3],
}

impl<T: Real> PairBlock<T> {
    pub fn zero() -> Self {
        let z = [[C::new(T::zero(), T::zero()); 3]; 3];
        Self { a: z, b: z, c: z }
    }

    fn is_finite(&self) -> bool {
        [self.a, self.b, self.c]
            .iter()
            .flatten()
            .flatten()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

#[derive(Debug, Clone, Copy)]
enum Mode<T> {
    Mueller {
        k1: C<T>,
        k2: C<T>,
        /// factors of phi1, phi2 in block (1,1) and (2,2) K terms
        a1: C<T>,
        a2: C<T>,
        b1: C<T>,
        b2: C<T>,
        k1sq: C<T>,
        k2sq: C<T>,
        off: bool,
        k11: bool,
        k22: bool,
    },
    Mfie {
        k1: C<T>,
    },
    Kernel(KernelKind<T>),
}

/// A single windowed boundary integral, tested with `f_m . (n x ...)`
/// except for the Gram product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind<T> {
    /// `int f_m . (n x curl int G w f_n)`.
    DoubleLayer { k: C<T> },
    /// `int f_m . (n x int G w f_n)`.
    SingleLayer { k: C<T> },
    /// `int f_m . (n x int grad(G2 - G1) w div f_n)`.
    GradientDifference { k1: C<T>, k2: C<T> },
    /// `int f_m . f_n`.
    Gram,
}

/// Pair integrator for one system (fixed media, window and quadrature).
pub struct PairIntegrator<'a, T> {
    mesh: &'a TriangleMesh<T>,
    window: Window<T>,
    quad: QuadratureSet<T>,
    mode: Mode<T>,
    geo: Vec<TriGeom<T>>,
    /// Regular and near source points and window values per triangle.
    reg: Vec<Vec<(Vec3<T>, T)>>,
    near: Vec<Vec<(Vec3<T>, T)>>,
}

/// Kind of operator assembled by a [`PairIntegrator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Mueller,
    Mfie,
}

impl<'a, T: Real> PairIntegrator<'a, T> {
    pub fn new(
        mesh: &'a TriangleMesh<T>,
        config: &LayeredConfig<T>,
        window: &Window<T>,
        rule: &QuadratureRule,
        formulation: Formulation,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(w) = window {
            w.validate()?;
        }
        let quad = QuadratureSet::new(*rule)?;
        let i = imag_unit::<T>();
        let omega = config.omega;
        let k1 = config.k1();
        let mode = match formulation {
            Formulation::Mfie => Mode::Mfie { k1 },
            Formulation::Mueller => {
                let lower = config.lower_material().ok_or_else(|| {
                    Error::Parameter("the Müller formulation needs a penetrable lower medium".into())
                })?;
                let upper = config.upper;
                let k2 = config.k2().expect("material lower medium");
                let same_k = k1 == k2;
                Mode::Mueller {
                    k1,
                    k2,
                    a1: -i * upper.mu * omega,
                    a2: i * lower.mu * omega,
                    b1: i * upper.eps * omega,
                    b2: -i * lower.eps * omega,
                    k1sq: k1 * k1,
                    k2sq: k2 * k2,
                    off: !same_k,
                    k11: !(same_k && upper.mu == lower.mu),
                    k22: !(same_k && upper.eps == lower.eps),
                }
            }
        };
        let geo: Vec<_> = (0..mesh.num_triangles()).map(|t| TriGeom::new(mesh, t)).collect();
        let sample = |rule: &[crate::quadrature::TriPoint<T>]| -> Vec<Vec<(Vec3<T>, T)>> {
            geo.iter()
                .map(|g| {
                    rule.iter()
                        .map(|q| {
                            let y = q.map(&g.corners);
                            (y, weight(window, y) * q.weight)
                        })
                        .collect()
                })
                .collect()
        };
        let reg = sample(&quad.regular);
        let near = sample(&quad.near);
        Ok(Self {
            mesh,
            window: *window,
            quad,
            mode,
            geo,
            reg,
            near,
        })
    }

    fn needs_k(&self) -> bool {
        match self.mode {
            Mode::Mueller { k11, k22, .. } => k11 || k22,
            Mode::Mfie { .. } => true,
            Mode::Kernel(kind) => matches!(kind, KernelKind::DoubleLayer { .. }),
        }
    }

    fn needs_off(&self) -> bool {
        matches!(
            self.mode,
            Mode::Mueller { off: true, .. }
                | Mode::Kernel(KernelKind::SingleLayer { .. } | KernelKind::GradientDifference { .. })
        )
    }

    /// Integrates every pairing of the local RWG shapes of test triangle
    /// `t` and source triangle `s`.
    pub fn integrate(&self, t: usize, s: usize) -> PairBlock<T> {
        let mut out = PairBlock::zero();
        let coplanar = t == s || self.mesh.coplanar(t, s);
        let do_k = self.needs_k() && !coplanar;
        let do_off = self.needs_off();
        if !do_k && !do_off {
            return out;
        }
        let tt = &self.mesh.triangles()[t];
        let ts = &self.mesh.triangles()[s];
        let (gt, gs) = (&self.geo[t], &self.geo[s]);
        let scale = gt.area * gs.area;
        let singular = |rule: &[PairPoint<T>], pt: [usize; 3], ps: [usize; 3], out: &mut PairBlock<T>| {
            let ct = pt.map(|i| gt.corners[i]);
            let cs = ps.map(|i| gs.corners[i]);
            for p in rule {
                let x = map_bary(&p.x, &ct);
                let y = map_bary(&p.y, &cs);
                let wy = weight(&self.window, y);
                if wy == T::zero() {
                    continue;
                }
                let q = self.test_vectors(gt, x);
                self.accumulate(x, &q, y, p.weight * scale * wy, gs, do_k, do_off, out);
            }
        };
        match classify(tt, ts) {
            Adjacency::Identical => singular(&self.quad.identical, [0, 1, 2], [0, 1, 2], &mut out),
            Adjacency::Edge(pt, ps) => singular(&self.quad.edge, pt, ps, &mut out),
            Adjacency::Vertex(pt, ps) => singular(&self.quad.vertex, pt, ps, &mut out),
            Adjacency::Disjoint => {
                let dist = (self.mesh.centroid(t) - self.mesh.centroid(s)).norm();
                let diam = self.mesh.diameter(t).max(self.mesh.diameter(s));
                let near = dist < T::lit(self.quad.rule.near_threshold) * diam;
                let (test_rule, src) = if near {
                    (&self.quad.near, &self.near[s])
                } else {
                    (&self.quad.regular, &self.reg[s])
                };
                if src.iter().all(|(_, w)| *w == T::zero()) {
                    return out;
                }
                for qx in test_rule {
                    let x = qx.map(&gt.corners);
                    let q = self.test_vectors(gt, x);
                    let wx = qx.weight * scale;
                    for &(y, wy) in src {
                        if wy == T::zero() {
                            continue;
                        }
                        self.accumulate(x, &q, y, wx * wy, gs, do_k, do_off, &mut out);
                    }
                }
            }
        }
        out
    }

    /// `f_a(x) x n` for the three local shapes.
    #[inline(always)]
    fn test_vectors(&self, g: &TriGeom<T>, x: Vec3<T>) -> [Vec3<T>; 3] {
        [0, 1, 2].map(|a| g.shape(a, x).cross(g.normal))
    }

    #[inline(always)]
    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        x: Vec3<T>,
        q: &[Vec3<T>; 3],
        y: Vec3<T>,
        w: T,
        gs: &TriGeom<T>,
        do_k: bool,
        do_off: bool,
        out: &mut PairBlock<T>,
    ) {
        let d = x - y;
        let dist = d.norm();
        if dist == T::zero() {
            return;
        }
        let f = [0, 1, 2].map(|b| gs.shape(b, y));
        match self.mode {
            Mode::Mueller {
                k1,
                k2,
                a1,
                a2,
                b1,
                b2,
                k1sq,
                k2sq,
                k11,
                k22,
                ..
            } => {
                let (g1, p1) = green_radial(k1, dist);
                let (g2, p2) = green_radial(k2, dist);
                if do_off {
                    let sv = (k2sq * g2 - k1sq * g1) * w;
                    let gd = d.scale_c(grad_diff_radial(k1, k2, dist) * w);
                    for a in 0..3 {
                        let gq = gd.dot_real(q[a]);
                        for b in 0..3 {
                            out.c[a][b] += sv * q[a].dot(f[b]) + gq * gs.div[b];
                        }
                    }
                }
                if do_k {
                    let v11 = d.scale_c((a1 * p1 + a2 * p2) * w);
                    let v22 = d.scale_c((b1 * p1 + b2 * p2) * w);
                    for a in 0..3 {
                        for b in 0..3 {
                            let cr = f[b].cross(q[a]);
                            if k11 {
                                out.a[a][b] += v11.dot_real(cr);
                            }
                            if k22 {
                                out.b[a][b] += v22.dot_real(cr);
                            }
                        }
                    }
                }
            }
            Mode::Mfie { k1 } => {
                if do_k {
                    let (_, p1) = green_radial(k1, dist);
                    let v = d.scale_c(p1 * w);
                    for a in 0..3 {
                        for b in 0..3 {
                            out.a[a][b] += v.dot_real(f[b].cross(q[a]));
                        }
                    }
                }
            }
            Mode::Kernel(kind) => match kind {
                KernelKind::DoubleLayer { k } => {
                    let (_, p) = green_radial(k, dist);
                    let v = d.scale_c(p * w);
                    for a in 0..3 {
                        for b in 0..3 {
                            out.a[a][b] += v.dot_real(f[b].cross(q[a]));
                        }
                    }
                }
                KernelKind::SingleLayer { k } => {
                    let (g, _) = green_radial(k, dist);
                    let g = g * w;
                    for a in 0..3 {
                        for b in 0..3 {
                            out.a[a][b] += g * q[a].dot(f[b]);
                        }
                    }
                }
                KernelKind::GradientDifference { k1, k2 } => {
                    let gd = d.scale_c(grad_diff_radial(k1, k2, dist) * w);
                    for a in 0..3 {
                        let gq = gd.dot_real(q[a]);
                        for b in 0..3 {
                            out.a[a][b] += gq * gs.div[b];
                        }
                    }
                }
                KernelKind::Gram => {}
            },
        }
    }
}

/// Test triangles per parallel work item.
const CHUNK: usize = 8;

struct ChunkRows<T> {
    rows: Vec<usize>,
    a: Vec<C<T>>,
    b: Vec<C<T>>,
    c: Vec<C<T>>,
    failure: Option<(usize, usize)>,
}

fn assemble_blocks<T: Real>(
    integ: &PairIntegrator<'_, T>,
    basis: &RwgBasis<T>,
    want: [bool; 3],
) -> Result<[TiledMatrix<T>; 3]> {
    let n = basis.len();
    let nt = integ.mesh.num_triangles();
    let mut mats = [TiledMatrix::zeros(n), TiledMatrix::zeros(n), TiledMatrix::zeros(n)];
    if !want.iter().any(|&w| w) {
        return Ok(mats);
    }
    // source triangles with at least one basis function
    let sources: Vec<usize> = (0..nt)
        .filter(|&s| basis.on_triangle(s).iter().any(Option::is_some))
        .collect();
    let chunks: Vec<usize> = (0..nt).step_by(CHUNK).collect();
    let batch = rayon::current_num_threads().max(1) * 2;
    let zero = C::new(T::zero(), T::zero());
    for group in chunks.chunks(batch) {
        let results: Vec<ChunkRows<T>> = group
            .par_iter()
            .map(|&start| {
                let tris = start..(start + CHUNK).min(nt);
                let mut rows = Vec::new();
                for t in tris.clone() {
                    for lb in basis.on_triangle(t).iter().flatten() {
                        if !rows.contains(&lb.index) {
                            rows.push(lb.index);
                        }
                    }
                }
                let mut res = ChunkRows {
                    a: if want[0] { vec![zero; rows.len() * n] } else { Vec::new() },
                    b: if want[1] { vec![zero; rows.len() * n] } else { Vec::new() },
                    c: if want[2] { vec![zero; rows.len() * n] } else { Vec::new() },
                    rows,
                    failure: None,
                };
                for t in tris {
                    let lt = basis.on_triangle(t);
                    if lt.iter().all(Option::is_none) {
                        continue;
                    }
                    for &s in &sources {
                        let blk = integ.integrate(t, s);
                        if !blk.is_finite() {
                            res.failure.get_or_insert((t, s));
                            continue;
                        }
                        let ls = basis.on_triangle(s);
                        for (ia, la) in lt.iter().enumerate() {
                            let Some(la) = la else { continue };
                            let r = res.rows.iter().position(|&m| m == la.index).unwrap();
                            for (ib, lb) in ls.iter().enumerate() {
                                let Some(lb) = lb else { continue };
                                let sign = if la.sign == lb.sign { T::one() } else { -T::one() };
                                let at = r * n + lb.index;
                                if want[0] {
                                    res.a[at] += blk.a[ia][ib] * sign;
                                }
                                if want[1] {
                                    res.b[at] += blk.b[ia][ib] * sign;
                                }
                                if want[2] {
                                    res.c[at] += blk.c[ia][ib] * sign;
                                }
                            }
                        }
                    }
                }
                res
            })
            .collect();
        for res in results {
            if let Some((t, s)) = res.failure {
                return Err(Error::Assembly(format!(
                    "non-finite integral for test triangle {t} and source triangle {s}"
                )));
            }
            for (r, &m) in res.rows.iter().enumerate() {
                for (k, buf) in [&res.a, &res.b, &res.c].into_iter().enumerate() {
                    if want[k] {
                        mats[k].add_row(m, &buf[r * n..(r + 1) * n]);
                    }
                }
            }
        }
    }
    Ok(mats)
}

/// Assembles the windowed Müller system for a penetrable lower medium.
pub fn assemble_mueller<T: Real>(
    mesh: &TriangleMesh<T>,
    basis: &RwgBasis<T>,
    config: &LayeredConfig<T>,
    window: &Window<T>,
    rule: &QuadratureRule,
) -> Result<SystemMatrix<T>> {
    let integ = PairIntegrator::new(mesh, config, window, rule, Formulation::Mueller)?;
    let want = match integ.mode {
        Mode::Mueller { off, k11, k22, .. } => [k11, k22, off],
        _ => unreachable!(),
    };
    let [d11, d22, off] = assemble_blocks(&integ, basis, want)?;
    let gram = Gram::new(mesh, basis, &integ.quad);
    let lower = config.lower_material().expect("checked by the integrator");
    let i = imag_unit::<T>();
    let half = T::lit(0.5);
    Ok(SystemMatrix::Mueller {
        gram,
        c11: -i * config.omega * (config.upper.mu + lower.mu) * half,
        c22: i * config.omega * (config.upper.eps + lower.eps) * half,
        d11,
        d22,
        off,
    })
}

/// Assembles the windowed MFIE `Gram/2 + K1` for a perfectly conducting
/// lower medium (or a closed conductor when the window is `None`).
pub fn assemble_mfie<T: Real>(
    mesh: &TriangleMesh<T>,
    basis: &RwgBasis<T>,
    config: &LayeredConfig<T>,
    window: &Window<T>,
    rule: &QuadratureRule,
) -> Result<SystemMatrix<T>> {
    if !config.is_pec() {
        return Err(Error::Parameter("the MFIE requires a perfectly conducting lower medium".into()));
    }
    let integ = PairIntegrator::new(mesh, config, window, rule, Formulation::Mfie)?;
    let [k, _, _] = assemble_blocks(&integ, basis, [true, false, false])?;
    let gram = Gram::new(mesh, basis, &integ.quad);
    Ok(SystemMatrix::Mfie {
        gram,
        c: real(T::lit(0.5)),
        k,
    })
}

/// Assembles one boundary integral kind as a dense matrix, mainly for
/// checking the pair quadrature against independent integrators.
pub fn assemble_kernel<T: Real>(
    mesh: &TriangleMesh<T>,
    basis: &RwgBasis<T>,
    window: &Window<T>,
    rule: &QuadratureRule,
    kind: KernelKind<T>,
) -> Result<DMatrix<C<T>>> {
    let n = basis.len();
    if kind == KernelKind::Gram {
        let gram = Gram::new(mesh, basis, &QuadratureSet::new(*rule)?);
        return Ok(DMatrix::from_fn(n, n, |i, j| real(gram.get(i, j))));
    }
    let config = LayeredConfig::pec(T::one(), crate::media::Material::real(T::one(), T::one()));
    let mut integ = PairIntegrator::new(mesh, &config, window, rule, Formulation::Mfie)?;
    integ.mode = Mode::Kernel(kind);
    let [a, _, _] = assemble_blocks(&integ, basis, [true, false, false])?;
    Ok(DMatrix::from_fn(n, n, |i, j| a.get(i, j)))
}

/// Galerkin right-hand side: `int f_m . M` and `int f_m . J` (Müller), or
/// `-int f_m . (n x E)` (MFIE).
pub fn assemble_rhs<T: Real>(
    mesh: &TriangleMesh<T>,
    basis: &RwgBasis<T>,
    source: &SourceField<T>,
    rule: &QuadratureRule,
) -> Result<Vec<C<T>>> {
    assemble_rhs_with(mesh, basis, rule, !source.config().is_pec(), |p, n| source.traces(p, n))
}

/// Right-hand side from arbitrary trace currents `(M, J)` given as a
/// function of the point and the unit normal. With `two_blocks` false
/// only `-int f_m . M` is formed.
pub fn assemble_rhs_with<T: Real>(
    mesh: &TriangleMesh<T>,
    basis: &RwgBasis<T>,
    rule: &QuadratureRule,
    two_blocks: bool,
    traces: impl Fn(Vec3<T>, Vec3<T>) -> Result<(CVec3<T>, CVec3<T>)>,
) -> Result<Vec<C<T>>> {
    let quad = crate::quadrature::symmetric_rule::<T>(rule.regular_points)?;
    let n = basis.len();
    let mut b = vec![C::new(T::zero(), T::zero()); if two_blocks { 2 * n } else { n }];
    for t in 0..mesh.num_triangles() {
        let locals = basis.on_triangle(t);
        if locals.iter().all(Option::is_none) {
            continue;
        }
        let g = TriGeom::new(mesh, t);
        for q in &quad {
            let x = q.map(&g.corners);
            let (m, j) = traces(x, g.normal)?;
            for (a, la) in locals.iter().enumerate() {
                let Some(la) = la else { continue };
                let f = g.shape(a, x) * (q.weight * g.area * T::from_f64(f64::from(la.sign)).unwrap());
                if two_blocks {
                    b[la.index] += m.dot_real(f);
                    b[n + la.index] += j.dot_real(f);
                } else {
                    b[la.index] -= m.dot_real(f);
                }
            }
        }
    }
    Ok(b)
}

/// Assembles the system matching the lower medium (Müller or MFIE).
pub fn assemble_system<T: Real>(
    mesh: &TriangleMesh<T>,
    basis: &RwgBasis<T>,
    config: &LayeredConfig<T>,
    window: &Window<T>,
    rule: &QuadratureRule,
) -> Result<SystemMatrix<T>> {
    if config.is_pec() {
        assemble_mfie(mesh, basis, config, window, rule)
    } else {
        assemble_mueller(mesh, basis, config, window, rule)
    }
}
